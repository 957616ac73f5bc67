use sheettail::asymptotics::{exact_bridge_law, lower_bound_series, one_sided_asym, upper_bound_series, Side, TailLaw};
use sheettail::copula::CopulaModel;
use sheettail::levelset::{compute_k, KSpec, LevelSetProfile};

fn k_of(model: &CopulaModel) -> f64 {
    model
        .closed_form_k()
        .unwrap_or_else(|| compute_k(&LevelSetProfile::build(model).unwrap(), &KSpec::default()).unwrap().value)
}

#[test]
fn bounds_sandwich_the_asymptotic_law() {
    let tolerances = [(2.0, 0.25), (3.0, 0.10), (4.0, 0.02)];
    // The lower series needs K >= 2; the mixture constants fall below that,
    // so only the upper side is checked for them.
    let with_lower = [CopulaModel::independence(2).unwrap(), CopulaModel::lower_frechet(), CopulaModel::amh()];
    let upper_only = [0.25, 0.5, 0.75].map(|d| CopulaModel::frechet_mixture(d, 2).unwrap());
    for (models, check_lower) in [(&with_lower[..], true), (&upper_only[..], false)] {
        for model in models {
            let law = TailLaw::new(2, 0.0, Some(k_of(model)), Side::One);
            for (u, eps) in tolerances {
                let asym = one_sided_asym(&law, u).unwrap().value;
                let upper = upper_bound_series(u, 100).unwrap();
                assert!(asym <= upper * (1.0 + eps), "{model} u={u}: {asym} vs upper {upper}");
                if check_lower {
                    let lower = lower_bound_series(2, u, 0.0).unwrap();
                    assert!(lower <= asym * (1.0 + eps), "{model} u={u}: lower {lower} vs {asym}");
                }
            }
        }
    }
}

#[test]
fn bridge_law_squares_like_an_exponential() {
    for i in 1..=40 {
        let u = 0.1 * i as f64;
        let a = exact_bridge_law(u, 0.0).value;
        let b = exact_bridge_law(std::f64::consts::SQRT_2 * u, 0.0).value;
        assert!((a * a - b).abs() <= 1e-13 * b, "u={u}: {} vs {b}", a * a);
    }
}

#[test]
fn single_term_lower_series_is_the_bridge_law() {
    for i in 0..20 {
        let w = 0.15 * (i % 5) as f64;
        let u = w + 0.1 + 0.2 * i as f64;
        let a = lower_bound_series(1, u, w).unwrap();
        let b = exact_bridge_law(u, w).value;
        assert!((a - b).abs() <= 1e-15 * b, "u={u} w={w}: {a} vs {b}");
    }
}
