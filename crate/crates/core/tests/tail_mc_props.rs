use proptest::prelude::*;
use sheettail::asymptotics::Side;
use sheettail::copula::CopulaModel;
use sheettail::error::Error;
use sheettail::field_sim::{BridgeSampler, SheetSampler};
use sheettail::tail_mc::{
    estimate_refined, estimate_table, estimate_tail, estimate_tail_two_sided, merge, McConfig, MonteCarloEstimate,
};

fn cfg(n: usize, seed: u64, workers: usize) -> McConfig {
    McConfig { n_samples: n, seed, workers }
}

#[test]
fn worker_count_does_not_change_results() {
    let sheet = SheetSampler::new(&CopulaModel::amh(), 16).unwrap();
    let us = [0.6, 1.0, 1.4];
    let ws = [0.0, 0.5];
    let a = estimate_table(&sheet, &us, &ws, &cfg(3000, 41, 1)).unwrap();
    let b = estimate_table(&sheet, &us, &ws, &cfg(3000, 41, 8)).unwrap();
    for side in [Side::One, Side::Two] {
        for k in 0..ws.len() {
            for j in 0..us.len() {
                assert_eq!(a.get(side, k, j), b.get(side, k, j));
            }
        }
    }
    let bridge = BridgeSampler::uniform(512).unwrap();
    assert_eq!(
        estimate_tail(&bridge, 1.0, 0.0, &cfg(5000, 42, 1)).unwrap(),
        estimate_tail(&bridge, 1.0, 0.0, &cfg(5000, 42, 3)).unwrap()
    );
}

#[test]
fn unreachable_threshold_flags_a_rare_event() {
    let bridge = BridgeSampler::uniform(64).unwrap();
    let e = estimate_tail(&bridge, 10.0, 0.0, &cfg(100_000, 43, 0)).unwrap();
    assert_eq!(e.p_hat, 0.0);
    assert!(e.rare_event);
    assert_eq!(e.ci95.0, 0.0);
    assert!(e.ci95.1 > 0.0 && e.ci95.1 < 1e-4);
}

#[test]
fn preconditions_are_enforced() {
    let bridge = BridgeSampler::uniform(64).unwrap();
    assert!(matches!(estimate_tail(&bridge, 1.0, 0.0, &cfg(99, 1, 0)), Err(Error::Parameter(_))));
    assert!(matches!(estimate_tail(&bridge, 0.0, 0.0, &cfg(100, 1, 0)), Err(Error::Domain(_))));
    let sheet = SheetSampler::new(&CopulaModel::amh(), 12).unwrap();
    assert!(estimate_refined(&sheet, &[1.0], 0.0, Side::One, 5, &cfg(100, 1, 0)).is_err());
}

#[test]
fn common_draws_give_exact_orderings() {
    let sheet = SheetSampler::new(&CopulaModel::independence(2).unwrap(), 24).unwrap();
    let us = [0.4, 0.6, 0.8, 1.0, 1.2, 1.5];
    let ws = [-1.0, -0.2, 0.0, 0.4, 1.0];
    let t = estimate_table(&sheet, &us, &ws, &cfg(4000, 44, 0)).unwrap();
    for side in [Side::One, Side::Two] {
        for k in 0..ws.len() {
            for j in 1..us.len() {
                assert!(t.get(side, k, j - 1).hits >= t.get(side, k, j).hits);
            }
        }
    }
    for k in 0..ws.len() {
        for j in 0..us.len() {
            assert!(t.get(Side::Two, k, j).hits >= t.get(Side::One, k, j).hits);
            if k > 0 {
                assert!(t.get(Side::One, k, j).hits >= t.get(Side::One, k - 1, j).hits);
            }
        }
    }
}

#[test]
fn single_estimates_agree_with_the_table() {
    let bridge = BridgeSampler::uniform(256).unwrap();
    let c = cfg(2000, 45, 0);
    let t = estimate_table(&bridge, &[0.9, 1.1], &[0.3], &c).unwrap();
    assert_eq!(&estimate_tail(&bridge, 1.1, 0.3, &c).unwrap(), t.get(Side::One, 0, 1));
    assert_eq!(&estimate_tail_two_sided(&bridge, 0.9, 0.3, &c).unwrap(), t.get(Side::Two, 0, 0));
}

#[test]
fn refined_estimate_reuses_grid_draws() {
    let model = CopulaModel::independence(2).unwrap();
    let fine = SheetSampler::new(&model, 32).unwrap();
    let c = cfg(3000, 46, 0);
    let us = [0.7, 1.0];
    let refined = estimate_refined(&fine, &us, 0.0, Side::One, 4, &c).unwrap();
    let table = estimate_table(&fine, &us, &[0.0], &c).unwrap();
    for (j, r) in refined.iter().enumerate() {
        assert_eq!(r.fine.hits, table.get(Side::One, 0, j).hits);
        assert!(r.fine.hits >= r.coarse.hits);
        let gain = 1.0 / (4f64.sqrt() - 1.0);
        let expected = r.fine.p_hat + gain * (r.fine.p_hat - r.coarse.p_hat);
        assert!((r.extrapolated - expected).abs() < 1e-12);
        assert!(r.extrapolated_stderr > 0.0);
    }
}

#[test]
fn merge_rejects_other_fields() {
    let bridge = BridgeSampler::uniform(64).unwrap();
    let sheet = SheetSampler::new(&CopulaModel::amh(), 8).unwrap();
    let a = estimate_tail(&bridge, 1.0, 0.0, &cfg(200, 1, 0)).unwrap();
    let b = estimate_tail(&sheet, 1.0, 0.0, &cfg(200, 1, 0)).unwrap();
    let c = estimate_tail_two_sided(&bridge, 1.0, 0.0, &cfg(200, 2, 0)).unwrap();
    assert!(matches!(merge(&[a.clone(), b]), Err(Error::Merge(_))));
    assert!(matches!(merge(&[a, c]), Err(Error::Merge(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn merging_equal_sizes_gives_the_pooled_mean(hits in prop::collection::vec(0u64..=1000, 1..8)) {
        let parts: Vec<MonteCarloEstimate> = hits
            .iter()
            .enumerate()
            .map(|(k, &h)| MonteCarloEstimate::from_counts(h, 1000, 1.0, 0.0, Side::One, vec![k as u64], "f".into()))
            .collect();
        let m = merge(&parts).unwrap();
        let mean = parts.iter().map(|p| p.p_hat).sum::<f64>() / parts.len() as f64;
        prop_assert!((m.p_hat - mean).abs() <= 1e-15);
        prop_assert_eq!(m.n_samples, 1000 * parts.len() as u64);
        prop_assert_eq!(m.seeds.len(), parts.len());
    }

    #[test]
    fn stderr_tracks_p_hat(h in 0u64..=5000, extra in 0u64..5000) {
        let n = h + extra + 100;
        let e = MonteCarloEstimate::from_counts(h, n, 1.0, 0.0, Side::Two, vec![0], "f".into());
        prop_assert!((0.0..=1.0).contains(&e.p_hat));
        prop_assert!((e.stderr - (e.p_hat * (1.0 - e.p_hat) / n as f64).sqrt()).abs() <= 1e-15);
        prop_assert!(e.ci95.0 <= e.p_hat && e.p_hat <= e.ci95.1);
    }
}
