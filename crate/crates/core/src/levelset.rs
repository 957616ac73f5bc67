//! The level surface `F = 1/2` as a graph `x_n = h(x~)` over a base set `L`,
//! and the tail constant `K = 2^{3(n-1)} ∫_L prod_{i<n} a_i(x~, h(x~)) dx~`.

use rand::Rng;
use sobol::params::JoeKuoD6;
use sobol::Sobol;

use crate::copula::CopulaModel;
use crate::error::{Error, Result};
use crate::quad::{self, Rule, Sample};
use crate::rng;

const LEVEL: f64 = 0.5;

/// Solves `F(x~, t) = 1/2` for `t` by bisection on `[0, 1]`.
pub fn solve_h(model: &CopulaModel, base: &[f64], tol: f64) -> Result<f64> {
    let n = model.dim();
    if base.len() + 1 != n {
        return Err(Error::Dimension { expected: n - 1, got: base.len() });
    }
    let mut x = base.to_vec();
    x.push(0.0);
    model.eval(&x)?;
    let mut g = |t: f64| {
        x[n - 1] = t;
        model.eval_unchecked(&x) - LEVEL
    };
    let (g0, g1) = (g(0.0), g(1.0));
    if g0 > tol || g1 < -tol {
        return Err(Error::NotOnLevelSet(base.to_vec()));
    }
    if g1.abs() <= tol {
        return Ok(1.0);
    }
    if g0.abs() <= tol {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = g(mid);
        if v.abs() <= tol {
            return Ok(mid);
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let mid = 0.5 * (lo + hi);
    if g(mid).abs() <= tol {
        Ok(mid)
    } else {
        Err(Error::NotOnLevelSet(base.to_vec()))
    }
}

/// Solved level surface of a model whose `F = 1/2` set is a graph.
#[derive(Debug, Clone)]
pub struct LevelSetProfile {
    model: CopulaModel,
    root_tol: f64,
    lower: Vec<f64>,
}

impl LevelSetProfile {
    pub fn build(model: &CopulaModel) -> Result<Self> {
        Self::with_tolerance(model, 1e-12)
    }

    pub fn with_tolerance(model: &CopulaModel, root_tol: f64) -> Result<Self> {
        if model.satisfies_min_stability() {
            return Err(Error::NotAGraph(model.spec_string()));
        }
        let mut profile = Self { model: *model, root_tol, lower: vec![0.0; model.dim() - 1] };
        profile.probe_nonempty()?;
        let m = model.dim() - 1;
        for i in 0..m {
            // L is an upper set, so its extent along axis i is found with the
            // other base coordinates at 1.
            let mut p = vec![1.0; m];
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            p[i] = 0.0;
            if profile.contains(&p) {
                hi = 0.0;
            }
            while hi - lo > 1e-15 {
                p[i] = 0.5 * (lo + hi);
                if profile.contains(&p) {
                    hi = p[i];
                } else {
                    lo = p[i];
                }
            }
            profile.lower[i] = hi;
        }
        Ok(profile)
    }

    fn probe_nonempty(&self) -> Result<()> {
        let m = self.model.dim() - 1;
        let per_axis = ((1u64 << 18) as f64).powf(1.0 / m as f64).floor().clamp(2.0, 64.0) as usize;
        let total = per_axis.pow(m as u32);
        let mut p = vec![0.0; m];
        for idx in 0..total {
            let mut k = idx;
            for c in p.iter_mut() {
                *c = ((k % per_axis) as f64 + 0.5) / per_axis as f64;
                k /= per_axis;
            }
            if self.contains(&p) {
                return Ok(());
            }
        }
        Err(Error::EmptyLevelSet(self.model.spec_string()))
    }

    pub fn model(&self) -> &CopulaModel {
        &self.model
    }

    pub fn base_dim(&self) -> usize {
        self.model.dim() - 1
    }

    pub fn root_tol(&self) -> f64 {
        self.root_tol
    }

    /// Axis-aligned box `[lo_i, 1]` containing `L`.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        self.lower.iter().map(|&l| (l, 1.0)).collect()
    }

    /// `F(x~, 0) <= 1/2 <= F(x~, 1)` within the root tolerance.
    pub fn contains(&self, base: &[f64]) -> bool {
        let mut x = base.to_vec();
        x.push(0.0);
        if self.model.eval(&x).map_or(true, |v| v > LEVEL + self.root_tol) {
            return false;
        }
        x[base.len()] = 1.0;
        self.model.eval_unchecked(&x) >= LEVEL - self.root_tol
    }

    pub fn h(&self, base: &[f64]) -> Result<f64> {
        solve_h(&self.model, base, self.root_tol)
    }

    /// `prod_{i<n} a_i(x~, h(x~))` on `L`, zero off it.
    pub fn integrand(&self, base: &[f64]) -> Result<f64> {
        if !self.contains(base) {
            return Ok(0.0);
        }
        let h = self.h(base)?;
        let mut x = base.to_vec();
        x.push(h);
        let a = self.model.grad(&x)?;
        Ok(a[..base.len()].iter().product())
    }

    /// Smallest `t` with `(prefix, t, 1, ..., 1)` in `L`, or `None` when no
    /// such point exists.
    fn section_start(&self, prefix: &[f64]) -> Option<f64> {
        let m = self.base_dim();
        let mut p = prefix.to_vec();
        p.resize(m, 1.0);
        let i = prefix.len();
        if !self.contains(&p) {
            return None;
        }
        p[i] = self.lower[i];
        if self.contains(&p) {
            return Some(self.lower[i]);
        }
        let (mut lo, mut hi) = (self.lower[i], 1.0f64);
        while hi - lo > 1e-15 {
            p[i] = 0.5 * (lo + hi);
            if self.contains(&p) {
                hi = p[i];
            } else {
                lo = p[i];
            }
        }
        Some(hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KMethod {
    Quadrature,
    MonteCarlo,
}

impl KMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            KMethod::Quadrature => "quadrature",
            KMethod::MonteCarlo => "monte-carlo",
        }
    }
}

/// How to integrate for `K`.
#[derive(Debug, Clone, Copy)]
pub struct KSpec {
    /// `None` picks quadrature for n <= 3 and quasi-Monte Carlo otherwise.
    pub method: Option<KMethod>,
    /// Relative error target.
    pub target_rel: f64,
    /// Gauss–Legendre nodes per panel.
    pub order: usize,
    /// Panel budget per one-dimensional integral.
    pub max_panels: usize,
    /// Random shifts for the quasi-Monte Carlo rule.
    pub shifts: usize,
    /// Point budget for the quasi-Monte Carlo rule.
    pub max_points: usize,
    pub seed: u64,
}

impl Default for KSpec {
    fn default() -> Self {
        Self {
            method: None,
            target_rel: 1e-4,
            order: 8,
            max_panels: 2000,
            shifts: 16,
            max_points: 1 << 22,
            seed: 0x4b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KEstimate {
    pub value: f64,
    pub abs_error: f64,
    pub method: KMethod,
    pub evaluations: usize,
    /// Smallest integrand value seen at a node inside `L`.
    pub min_integrand: f64,
}

/// Integrates the level-surface density for `K`.
pub fn compute_k(profile: &LevelSetProfile, spec: &KSpec) -> Result<KEstimate> {
    let m = profile.base_dim();
    let method = spec.method.unwrap_or(if m <= 2 { KMethod::Quadrature } else { KMethod::MonteCarlo });
    let scale = 8f64.powi(m as i32);
    let mut est = match method {
        KMethod::Quadrature => match m {
            1 | 2 => quadrature(profile, spec)?,
            _ => {
                return Err(Error::Unsupported(format!(
                    "quadrature for K is limited to n <= 3, got n = {}",
                    m + 1
                )))
            }
        },
        KMethod::MonteCarlo => quasi_monte_carlo(profile, spec)?,
    };
    est.value *= scale;
    est.abs_error *= scale;
    if !(est.value > 0.0) {
        return Err(Error::Integration(format!("nonpositive K = {}", est.value)));
    }
    Ok(est)
}

fn quadrature(profile: &LevelSetProfile, spec: &KSpec) -> Result<KEstimate> {
    let rule = Rule::new(spec.order);
    let lo = profile.lower[0];
    // The integrand is only known to about the root tolerance; resolving the
    // integral below that level chases noise.
    let noise = 1e3 * profile.root_tol;
    let mut min_integrand = f64::INFINITY;
    let out = if profile.base_dim() == 1 {
        quad::integrate(&rule, lo, 1.0, noise * (1.0 - lo), spec.target_rel * 1e-2, spec.max_panels, |x| {
            let v = profile.integrand(&[x])?;
            min_integrand = min_integrand.min(v);
            Ok(Sample { value: v, error: 0.0 })
        })?
    } else {
        let mut inner_evals = 0usize;
        let inner_rel = (spec.target_rel * 1e-3).max(1e-10);
        let res = quad::integrate(&rule, lo, 1.0, noise * (1.0 - lo), spec.target_rel * 1e-2, spec.max_panels, |x1| {
            let Some(start) = profile.section_start(&[x1]) else {
                return Ok(Sample { value: 0.0, error: 0.0 });
            };
            let inner = quad::integrate(&rule, start, 1.0, noise * (1.0 - start), inner_rel, spec.max_panels, |x2| {
                let v = profile.integrand(&[x1, x2])?;
                min_integrand = min_integrand.min(v);
                Ok(Sample { value: v, error: 0.0 })
            })?;
            inner_evals += inner.evaluations;
            Ok(Sample { value: inner.value, error: inner.error })
        })?;
        quad::QuadOutcome { evaluations: res.evaluations + inner_evals, ..res }
    };
    Ok(KEstimate {
        value: out.value,
        abs_error: out.error,
        method: KMethod::Quadrature,
        evaluations: out.evaluations,
        min_integrand,
    })
}

fn quasi_monte_carlo(profile: &LevelSetProfile, spec: &KSpec) -> Result<KEstimate> {
    let m = profile.base_dim();
    let bbox = profile.bounding_box();
    let vol: f64 = bbox.iter().map(|(a, b)| b - a).product();
    let shifts_n = spec.shifts.max(2);
    let mut g = rng::stream(spec.seed, 0);
    let shifts: Vec<Vec<f64>> = (0..shifts_n).map(|_| (0..m).map(|_| g.random()).collect()).collect();
    let mut sums = vec![0.0; shifts_n];
    let mut min_integrand = f64::INFINITY;
    let mut evaluations = 0usize;
    let mut seq = Sobol::<f64>::new(m, &JoeKuoD6::minimal());
    let mut points = 0usize;
    let mut batch = 1024usize;
    let mut x = vec![0.0; m];
    loop {
        for _ in 0..batch {
            let p = seq.next().ok_or_else(|| Error::Integration("Sobol sequence exhausted".into()))?;
            for (s, shift) in shifts.iter().enumerate() {
                for j in 0..m {
                    let t = (p[j] + shift[j]).fract();
                    x[j] = bbox[j].0 + t * (bbox[j].1 - bbox[j].0);
                }
                let v = integrand_nudged(profile, &mut x)?;
                evaluations += 1;
                if v > 0.0 || profile.contains(&x) {
                    min_integrand = min_integrand.min(v);
                }
                sums[s] += v;
            }
        }
        points += batch;
        let means: Vec<f64> = sums.iter().map(|s| vol * s / points as f64).collect();
        let mean = means.iter().sum::<f64>() / shifts_n as f64;
        let var = means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (shifts_n - 1) as f64;
        let stderr = (var / shifts_n as f64).sqrt();
        if stderr <= spec.target_rel * mean.abs() || points * shifts_n * 2 > spec.max_points {
            return Ok(KEstimate {
                value: mean,
                abs_error: stderr,
                method: KMethod::MonteCarlo,
                evaluations,
                min_integrand,
            });
        }
        batch = points;
    }
}

/// Evaluates the integrand, nudging the point off a seam when one is hit.
fn integrand_nudged(profile: &LevelSetProfile, x: &mut [f64]) -> Result<f64> {
    for k in 0..4 {
        match profile.integrand(x) {
            Err(Error::Seam(msg)) => {
                if k == 3 {
                    return Err(Error::Integration(format!("persistent seam: {msg}")));
                }
                x[0] = (x[0] - 1e-9 * (k + 1) as f64).max(0.0);
            }
            other => return other,
        }
    }
    unreachable!()
}
