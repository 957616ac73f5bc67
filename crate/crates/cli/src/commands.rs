use sheettail::asymptotics::{asym, exact_law, lower_bound_series, upper_bound_series, Side, TailLaw};
use sheettail::copula::{CopulaModel, Family};
use sheettail::field_sim::{build_factor, BridgeSampler, FieldSampler, JitterPolicy, SheetSampler};
use sheettail::ks_sim::{finite_m_rates, limit_compare, CompareSpec, KsOptions, LimitSpec};
use sheettail::levelset::{compute_k as level_set_k, KMethod, KSpec, LevelSetProfile};
use sheettail::pickands::{estimate_h_ratio, Estimator, PickandsSpec, SupMode};
use sheettail::tail_mc::{estimate_table, McConfig, MonteCarloEstimate};
use sheettail::Error;

use crate::table::{num, opt, Table};
use crate::{
    ComputeKArgs, EstimatorArg, EvalLawArgs, KMethodArg, KsArgs, PickandsArgs, ReportArgs, SamplerArg, SupArg, TailMcArgs,
};

type Output = (Table, Vec<String>);

const UPPER_SERIES_TERMS: usize = 50;

fn side(two_sided: bool) -> Side {
    if two_sided {
        Side::Two
    } else {
        Side::One
    }
}

fn model(spec: &str) -> sheettail::Result<CopulaModel> {
    CopulaModel::parse(spec)
}

/// Level-set constant, `None` for min-stable models.
fn constant_k(model: &CopulaModel) -> sheettail::Result<Option<f64>> {
    if model.satisfies_min_stability() {
        return Ok(None);
    }
    if let Some(k) = model.closed_form_k() {
        return Ok(Some(k));
    }
    let profile = LevelSetProfile::build(model)?;
    Ok(Some(level_set_k(&profile, &KSpec::default())?.value))
}

/// Formula columns: asymptotic value, exact law, lower and upper bounds.
struct LawCells {
    asym: Option<f64>,
    exact: Option<f64>,
    lower: Option<f64>,
    upper: Option<f64>,
}

fn law_cells(model: &CopulaModel, k: Option<f64>, u: f64, w: f64, side: Side) -> sheettail::Result<LawCells> {
    let law = TailLaw::new(model.dim(), w, k, side);
    let asym = asym(&law, u)?.value;
    let exact = if model.satisfies_min_stability() { exact_law(u, w, side) } else { None };
    // The lower series is a theorem for the conditioned standard sheet.
    let lower = if model.family() == Family::Independence && u > w { Some(lower_bound_series(model.dim(), u, w)?) } else { None };
    // The upper series bounds every bivariate model at w = 0.
    let upper = if model.dim() == 2 && w == 0.0 && side == Side::One {
        Some(upper_bound_series(u, UPPER_SERIES_TERMS)?)
    } else {
        None
    };
    Ok(LawCells { asym: Some(asym), exact, lower, upper })
}

pub fn compute_k(a: &ComputeKArgs) -> anyhow::Result<Output> {
    let m = model(&a.model)?;
    let profile = LevelSetProfile::build(&m)?;
    let method = match a.method {
        KMethodArg::Auto => None,
        KMethodArg::Quadrature => Some(KMethod::Quadrature),
        KMethodArg::MonteCarlo => Some(KMethod::MonteCarlo),
    };
    let spec = KSpec { method, target_rel: a.target_rel, seed: a.seed, ..KSpec::default() };
    let k = level_set_k(&profile, &spec)?;
    let mut t = Table::new(vec!["model", "k", "abs_error", "method", "evaluations", "closed_form"]);
    t.push(vec![
        m.spec_string(),
        num(k.value),
        num(k.abs_error),
        k.method.as_str().into(),
        k.evaluations.to_string(),
        opt(m.closed_form_k()),
    ]);
    let summary = vec![format!("{m}: K = {} ± {} ({}, {} evaluations)", num(k.value), num(k.abs_error), k.method.as_str(), k.evaluations)];
    Ok((t, summary))
}

pub fn eval_law(a: &EvalLawArgs) -> anyhow::Result<Output> {
    let m = model(&a.model)?;
    let s = side(a.two_sided);
    let k = constant_k(&m)?;
    let mut t = Table::new(vec!["model", "u", "w", "side", "k", "asym", "exact", "lower_bound", "upper_bound", "not_a_probability"]);
    let mut flagged = 0;
    for &u in &a.u {
        let c = law_cells(&m, k, u, a.w, s)?;
        let raw = TailLaw::new(m.dim(), a.w, k, s);
        let not_prob = asym(&raw, u)?.not_a_probability;
        flagged += not_prob as usize;
        let (lower, upper) = if a.bounds { (c.lower, c.upper) } else { (None, None) };
        t.push(vec![
            m.spec_string(),
            num(u),
            num(a.w),
            s.as_str().into(),
            opt(k),
            opt(c.asym),
            opt(c.exact),
            opt(lower),
            opt(upper),
            not_prob.to_string(),
        ]);
    }
    let mut summary = vec![format!("{m}: {} thresholds, {} side", a.u.len(), s.as_str())];
    if flagged > 0 {
        summary.push(format!("{flagged} asymptotic values exceed 1 and are not probabilities"));
    }
    Ok((t, summary))
}

fn sampler(m: &CopulaModel, choice: SamplerArg, grid: Option<usize>) -> sheettail::Result<Box<dyn FieldSampler>> {
    let choice = match choice {
        SamplerArg::Auto if m.satisfies_min_stability() => SamplerArg::Bridge,
        SamplerArg::Auto => SamplerArg::Sheet,
        c => c,
    };
    Ok(match choice {
        SamplerArg::Bridge => Box::new(BridgeSampler::for_model(m, grid.unwrap_or(4096))?),
        SamplerArg::Dense => Box::new(build_factor(m, grid.unwrap_or(16), &JitterPolicy::default())?),
        _ => Box::new(SheetSampler::new(m, grid.unwrap_or(32))?),
    })
}

fn grid_of(label: &str) -> String {
    label.rsplit("r=").next().unwrap_or_default().to_string()
}

fn mc_cells(e: &MonteCarloEstimate) -> Vec<String> {
    vec![num(e.p_hat), num(e.stderr), num(e.ci95.0), num(e.ci95.1)]
}

fn ratio(p: f64, a: Option<f64>) -> Option<f64> {
    a.filter(|&a| a > 0.0).map(|a| p / a)
}

fn rare_warnings(estimates: &[&MonteCarloEstimate]) -> Vec<String> {
    estimates
        .iter()
        .filter(|e| e.rare_event)
        .map(|e| format!("warning: no exceedance of u = {} in {} replicates", num(e.u), e.n_samples))
        .collect()
}

pub fn tail_mc(a: &TailMcArgs, workers: usize) -> anyhow::Result<Output> {
    let m = model(&a.model)?;
    let s = side(a.two_sided);
    let field = sampler(&m, a.sampler, a.grid)?;
    let cfg = McConfig { n_samples: a.n, seed: a.seed, workers };
    let table = estimate_table(field.as_ref(), &a.u, &[a.w], &cfg)?;
    let k = constant_k(&m)?;
    let mut t = Table::new(vec![
        "model",
        "u",
        "w",
        "side",
        "p_hat",
        "stderr",
        "ci_lo",
        "ci_hi",
        "n",
        "grid",
        "asym",
        "exact",
        "lower_bound",
        "upper_bound",
        "ratio_mc_over_asym",
    ]);
    let mut ests = Vec::new();
    for (j, &u) in a.u.iter().enumerate() {
        let e = table.get(s, 0, j);
        ests.push(e);
        let c = law_cells(&m, k, u, a.w, s)?;
        let mut row = vec![m.spec_string(), num(u), num(a.w), s.as_str().into()];
        row.extend(mc_cells(e));
        row.extend([
            e.n_samples.to_string(),
            grid_of(&e.label),
            opt(c.asym),
            opt(c.exact),
            opt(c.lower),
            opt(c.upper),
            opt(ratio(e.p_hat, c.asym)),
        ]);
        t.push(row);
    }
    let mut summary = vec![format!("{m}: {} replicates on {}", a.n, field.label())];
    summary.extend(rare_warnings(&ests));
    Ok((t, summary))
}

pub fn ks(a: &KsArgs, workers: usize) -> anyhow::Result<Output> {
    let m = model(&a.model)?;
    let mut limit = LimitSpec::for_model(&m);
    if let Some(r) = a.limit_grid {
        limit.resolution = r;
    }
    if let Some(n) = a.limit_samples {
        limit.samples = n;
    }
    let spec = CompareSpec {
        m: a.m,
        replications: a.reps,
        us: a.u.clone(),
        side: side(a.two_sided),
        seed: a.seed,
        workers,
        ks: KsOptions { lattice: Some(a.lattice), ..KsOptions::default() },
        limit,
    };
    let rows = limit_compare(&m, &spec)?;
    let mut t = Table::new(vec![
        "model",
        "m",
        "reps",
        "u",
        "side",
        "rate_finite_m",
        "ci_lo",
        "ci_hi",
        "rate_limit_field",
        "limit_ci_lo",
        "limit_ci_hi",
        "rate_limit_extrapolated",
        "extrapolated_stderr",
        "asym_value",
    ]);
    for r in &rows {
        t.push(vec![
            m.spec_string(),
            a.m.to_string(),
            a.reps.to_string(),
            num(r.u),
            spec.side.as_str().into(),
            num(r.finite.p_hat),
            num(r.finite.ci95.0),
            num(r.finite.ci95.1),
            num(r.limit.p_hat),
            num(r.limit.ci95.0),
            num(r.limit.ci95.1),
            opt(r.limit_extrapolated.map(|v| v.0)),
            opt(r.limit_extrapolated.map(|v| v.1)),
            opt(r.asym),
        ]);
    }
    let summary = vec![format!(
        "{m}: {} samples of size {} against {} limit-field replicates on {}",
        a.reps,
        a.m,
        limit.samples,
        rows.first().map(|r| r.limit.label.clone()).unwrap_or_default()
    )];
    Ok((t, summary))
}

pub fn pickands(a: &PickandsArgs, workers: usize) -> anyhow::Result<Output> {
    let estimator = match (a.estimator, a.literal) {
        (Some(EstimatorArg::Mixture), true) => {
            return Err(Error::Parameter("--literal needs --estimator direct".into()).into());
        }
        (Some(EstimatorArg::Mixture), false) | (None, false) => Estimator::Mixture,
        (Some(EstimatorArg::Direct), _) | (None, true) => Estimator::Direct,
    };
    let spec = PickandsSpec {
        use_sqrt2: !a.literal,
        estimator,
        sup_mode: match a.sup {
            SupArg::Continuous => SupMode::Continuous,
            SupArg::Grid => SupMode::Grid,
        },
        ..PickandsSpec::new(a.c.clone(), a.lambda.clone(), a.step, a.reps)
    };
    let e = estimate_h_ratio(&spec, a.seed, workers)?;
    let mut t = Table::new(vec!["ratio", "stderr", "target", "rel_err"]);
    t.push(vec![num(e.ratio), num(e.stderr), num(e.target), num(e.rel_err)]);
    let summary = vec![format!("H = {} ± {}; ratio {} against {}", num(e.h), num(e.h_stderr), num(e.ratio), num(e.target))];
    Ok((t, summary))
}

pub fn report(a: &ReportArgs, workers: usize) -> anyhow::Result<Output> {
    let m = model(&a.model)?;
    let s = side(a.two_sided);
    let k = constant_k(&m)?;
    let field = sampler(&m, SamplerArg::Auto, a.grid)?;
    let cfg = McConfig { n_samples: a.n, seed: a.seed, workers };
    let table = estimate_table(field.as_ref(), &a.u, &[a.w], &cfg)?;
    let ks_rates = match a.ks_m {
        Some(ks_m) => {
            if a.w != 0.0 {
                return Err(Error::Parameter("--ks-m needs --w 0: the KS limit is unconditioned".into()).into());
            }
            let spec = CompareSpec {
                m: ks_m,
                replications: a.ks_reps,
                us: a.u.clone(),
                side: s,
                seed: a.seed,
                workers,
                ks: KsOptions::default(),
                limit: LimitSpec::for_model(&m),
            };
            Some(finite_m_rates(&m, &spec)?)
        }
        None => None,
    };
    let mut t = Table::new(vec![
        "model",
        "u",
        "w",
        "side",
        "k",
        "asym",
        "exact",
        "lower_bound",
        "upper_bound",
        "mc_p_hat",
        "mc_stderr",
        "mc_ci_lo",
        "mc_ci_hi",
        "ratio_mc_over_asym",
        "ks_rate",
        "ks_ci_lo",
        "ks_ci_hi",
    ]);
    let mut ests = Vec::new();
    for (j, &u) in a.u.iter().enumerate() {
        let e = table.get(s, 0, j);
        ests.push(e);
        let c = law_cells(&m, k, u, a.w, s)?;
        let mut row = vec![m.spec_string(), num(u), num(a.w), s.as_str().into(), opt(k), opt(c.asym), opt(c.exact), opt(c.lower), opt(c.upper)];
        row.extend(mc_cells(e));
        row.push(opt(ratio(e.p_hat, c.asym)));
        match &ks_rates {
            Some(r) => row.extend([num(r[j].p_hat), num(r[j].ci95.0), num(r[j].ci95.1)]),
            None => row.extend([String::new(), String::new(), String::new()]),
        }
        t.push(row);
    }
    let mut summary = vec![format!("{m}: {} replicates on {}", a.n, field.label())];
    summary.extend(rare_warnings(&ests));
    Ok((t, summary))
}
