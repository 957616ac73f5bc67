use sheettail::copula::{piecewise_marginal, CopulaModel};
use sheettail::field_sim::{build_factor, BridgeSampler, Extremes, FieldSampler, JitterPolicy, SheetSampler};
use sheettail::rng::stream;
use sheettail::tail_mc::{estimate_table, McConfig};

/// 1-based per-axis indices of grid point `idx`, axis 0 fastest.
fn coords(idx: usize, r: usize, n: usize) -> Vec<usize> {
    (0..n).map(|k| idx / r.pow(k as u32) % r + 1).collect()
}

fn grid_cov(model: &CopulaModel, r: usize, i: usize, j: usize) -> f64 {
    let n = model.dim();
    let p: Vec<f64> = coords(i, r, n).iter().map(|&c| c as f64 / r as f64).collect();
    let q: Vec<f64> = coords(j, r, n).iter().map(|&c| c as f64 / r as f64).collect();
    let meet: Vec<f64> = p.iter().zip(&q).map(|(a, b): (&f64, &f64)| a.min(*b)).collect();
    model.eval(&meet).unwrap() - model.eval(&p).unwrap() * model.eval(&q).unwrap()
}

fn check_covariance(model: &CopulaModel, r: usize, mut draw: impl FnMut(u64, &mut [f64])) {
    let size = r.pow(model.dim() as u32);
    let pairs = [(0, 0), (size / 2, size / 3), (size - 2, size / 2), (5, size - 7), (size / 4, size / 4)];
    let draws = 100_000;
    let mut buf = vec![0.0; size];
    let mut sums = [(0.0, 0.0, 0.0); 5];
    for s in 0..draws {
        draw(s, &mut buf);
        for (acc, &(i, j)) in sums.iter_mut().zip(&pairs) {
            acc.0 += buf[i] * buf[j];
            acc.1 += buf[i];
            acc.2 += buf[j];
        }
    }
    let nd = draws as f64;
    for (acc, &(i, j)) in sums.iter().zip(&pairs) {
        let emp = acc.0 / nd - (acc.1 / nd) * (acc.2 / nd);
        let target = grid_cov(model, r, i, j);
        let sd = (grid_cov(model, r, i, i) * grid_cov(model, r, j, j)).sqrt();
        let tol = 4.0 / nd.sqrt() * (sd + target.abs());
        assert!((emp - target).abs() <= tol, "{model} ({i},{j}): {emp} vs {target} (tol {tol})");
    }
}

#[test]
fn dense_factor_reproduces_covariance() {
    for model in [CopulaModel::independence(2).unwrap(), CopulaModel::amh(), CopulaModel::frechet_mixture(0.4, 2).unwrap()] {
        let f = build_factor(&model, 8, &JitterPolicy::default()).unwrap();
        assert!(f.reconstruction_error() <= 1e-8 + f.jitter_used());
        let mut scratch = vec![0.0; f.scratch_len()];
        check_covariance(&model, 8, |s, buf| f.draw_field(&mut stream(31, s), &mut scratch, buf));
    }
}

#[test]
fn sheet_sampler_reproduces_covariance() {
    for model in [CopulaModel::independence(2).unwrap(), CopulaModel::lower_frechet(), CopulaModel::piecewise_min(0.3, 2).unwrap()] {
        let sheet = SheetSampler::new(&model, 8).unwrap();
        check_covariance(&model, 8, |s, buf| sheet.draw_pinned(&mut stream(32, s), buf));
    }
}

#[test]
fn pinned_corner_is_exactly_zero() {
    let model = CopulaModel::amh();
    let f = build_factor(&model, 6, &JitterPolicy::default()).unwrap();
    let sheet = SheetSampler::new(&model, 6).unwrap();
    let mut scratch = vec![0.0; f.scratch_len()];
    let mut a = vec![0.0; f.len()];
    let mut b = vec![0.0; sheet.len()];
    let bridge = BridgeSampler::uniform(100).unwrap();
    let mut path = vec![0.0; 101];
    for s in 0..1000 {
        f.draw_field(&mut stream(33, s), &mut scratch, &mut a);
        sheet.draw_pinned(&mut stream(33, s), &mut b);
        bridge.draw_path(&mut stream(33, s), &mut path);
        assert_eq!(a[f.len() - 1], 0.0);
        assert_eq!(b[sheet.len() - 1], 0.0);
        assert_eq!(path[0], 0.0);
        assert!(path[100].abs() <= 1e-15);
    }
}

#[test]
fn finer_nested_grid_never_lowers_the_sup() {
    let model = CopulaModel::independence(2).unwrap();
    let sheet = SheetSampler::new(&model, 64).unwrap();
    let mut scratch = vec![0.0; sheet.scratch_len()];
    let ws = [-0.5, 0.0, 1.0];
    let strides = [1, 2, 4, 8];
    let mut out = vec![Extremes { sup: 0.0, inf: 0.0 }; ws.len() * strides.len()];
    for s in 0..500 {
        sheet.nested_extremes(&mut stream(34, s), &ws, &strides, &mut scratch, &mut out);
        for level in 1..strides.len() {
            for k in 0..ws.len() {
                let fine = out[(level - 1) * ws.len() + k];
                let coarse = out[level * ws.len() + k];
                assert!(fine.sup >= coarse.sup && fine.inf <= coarse.inf);
            }
        }
        // The unit-stride level equals the plain extremes on the same stream.
        let mut plain = vec![Extremes { sup: 0.0, inf: 0.0 }; ws.len()];
        sheet.extremes(&mut stream(34, s), &ws, &mut scratch, &mut plain);
        assert_eq!(&plain[..], &out[..ws.len()]);
    }
}

#[test]
fn bridge_extremes_match_the_drawn_path() {
    let bridge = BridgeSampler::uniform(5000).unwrap();
    let mut scratch = vec![0.0; bridge.scratch_len()];
    let mut path = vec![0.0; 5001];
    let ws = [-2.0, 0.0, 0.7, 3.0];
    let mut out = vec![Extremes { sup: 0.0, inf: 0.0 }; ws.len()];
    for s in 0..300 {
        bridge.draw_path(&mut stream(35, s), &mut path);
        bridge.extremes(&mut stream(35, s), &ws, &mut scratch, &mut out);
        for (o, &w) in out.iter().zip(&ws) {
            let vals = path.iter().zip(bridge.times()).map(|(v, t)| v + t * w);
            let sup = vals.clone().fold(f64::NEG_INFINITY, f64::max);
            let inf = vals.fold(f64::INFINITY, f64::min);
            assert!((o.sup - sup).abs() <= 1e-12 && (o.inf - inf).abs() <= 1e-12);
            assert!(o.sup >= 0.0);
        }
    }
}

#[test]
fn mean_sup_is_positive_and_below_gaussian_bound() {
    let model = CopulaModel::independence(2).unwrap();
    let f = build_factor(&model, 16, &JitterPolicy::default()).unwrap();
    let mean = (0..10_000).map(|s| f.sample_sup_conditioned(0.0, s)).sum::<f64>() / 1e4;
    assert!(mean > 0.0 && mean < 2.36, "{mean}");
}

#[test]
fn positive_drift_raises_exceedance_on_common_draws() {
    let model = CopulaModel::independence(2).unwrap();
    let f = build_factor(&model, 16, &JitterPolicy::default()).unwrap();
    let cfg = McConfig { n_samples: 100_000, seed: 36, workers: 0 };
    let table = estimate_table(&f, &[1.0], &[0.0, 1.0], &cfg).unwrap();
    let side = sheettail::asymptotics::Side::One;
    let (p0, p1) = (table.get(side, 0, 0), table.get(side, 1, 0));
    assert!(p1.hits > p0.hits, "{} vs {}", p1.p_hat, p0.p_hat);
}

fn ks_distance(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn piecewise_min_sheet_matches_time_changed_bridge() {
    let d = 0.5;
    let r = 32;
    let model = CopulaModel::piecewise_min(d, 2).unwrap();
    let sheet = SheetSampler::new(&model, r).unwrap();
    let bridge = BridgeSampler::with_times((1..=r).map(|i| piecewise_marginal(d, i as f64 / r as f64)).collect()).unwrap();
    let draws = 10_000;
    let sample = |s: &dyn FieldSampler, seed: u64| -> Vec<f64> {
        let mut scratch = vec![0.0; s.scratch_len()];
        let mut out = [Extremes { sup: 0.0, inf: 0.0 }];
        (0..draws)
            .map(|k| {
                s.extremes(&mut stream(seed, k), &[0.0], &mut scratch, &mut out);
                out[0].sup
            })
            .collect()
    };
    let dist = ks_distance(sample(&sheet, 37), sample(&bridge, 38));
    assert!(dist <= 0.02, "{dist}");
}

#[test]
fn upper_frechet_factor_is_rank_deficient() {
    let f = build_factor(&CopulaModel::upper_frechet(2).unwrap(), 16, &JitterPolicy::default()).unwrap();
    assert!(f.rank() <= 16);
    assert!(f.jitter_used() > 0.0);
}
