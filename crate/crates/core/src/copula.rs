//! Distribution functions on the unit cube used throughout the crate.
//!
//! Each model exposes its df, analytic gradient, an exact sampler and, where
//! one exists, the closed-form tail constant.

use std::f64::consts::LN_2;
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

/// The six catalog families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Independence,
    LowerFrechet,
    Amh,
    FrechetMixture { d: f64 },
    PiecewiseMin { d: f64 },
    UpperFrechet,
}

/// A named df `F` on `[0,1]^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopulaModel {
    family: Family,
    n: usize,
}

fn check_d(d: f64) -> Result<f64> {
    if d > 0.0 && d < 1.0 {
        Ok(d)
    } else {
        Err(Error::Parameter(format!("d must lie in (0,1), got {d}")))
    }
}

fn check_n(n: usize) -> Result<usize> {
    if n >= 2 {
        Ok(n)
    } else {
        Err(Error::Parameter(format!("dimension must be at least 2, got {n}")))
    }
}

impl CopulaModel {
    pub fn independence(n: usize) -> Result<Self> {
        Ok(Self { family: Family::Independence, n: check_n(n)? })
    }

    pub fn lower_frechet() -> Self {
        Self { family: Family::LowerFrechet, n: 2 }
    }

    pub fn amh() -> Self {
        Self { family: Family::Amh, n: 2 }
    }

    pub fn frechet_mixture(d: f64, n: usize) -> Result<Self> {
        Ok(Self { family: Family::FrechetMixture { d: check_d(d)? }, n: check_n(n)? })
    }

    pub fn piecewise_min(d: f64, n: usize) -> Result<Self> {
        Ok(Self { family: Family::PiecewiseMin { d: check_d(d)? }, n: check_n(n)? })
    }

    pub fn upper_frechet(n: usize) -> Result<Self> {
        Ok(Self { family: Family::UpperFrechet, n: check_n(n)? })
    }

    /// Parses `name[:param]`, e.g. `independence:3`, `amh`,
    /// `frechet-mixture:d=0.5,n=2`. A bare integer parameter is the dimension.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (name, params) = match spec.split_once(':') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (spec, ""),
        };
        let mut n: Option<usize> = None;
        let mut d: Option<f64> = None;
        for item in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let bad = || Error::Parameter(format!("cannot parse model parameter `{item}`"));
            match item.split_once('=') {
                None => n = Some(item.parse().map_err(|_| bad())?),
                Some((k, v)) => match k.trim() {
                    "n" => n = Some(v.trim().parse().map_err(|_| bad())?),
                    "d" => d = Some(v.trim().parse().map_err(|_| bad())?),
                    _ => return Err(bad()),
                },
            }
        }
        let need_d = || {
            d.ok_or_else(|| Error::Parameter(format!("model `{name}` needs a parameter d")))
        };
        let fixed_two = |n: Option<usize>| match n {
            None | Some(2) => Ok(()),
            Some(k) => Err(Error::Parameter(format!("model `{name}` is bivariate, got n={k}"))),
        };
        let model = match name.to_ascii_lowercase().replace('_', "-").as_str() {
            "independence" | "indep" => Self::independence(n.unwrap_or(2))?,
            "lower-frechet" => {
                fixed_two(n)?;
                Self::lower_frechet()
            }
            "amh" => {
                fixed_two(n)?;
                Self::amh()
            }
            "frechet-mixture" => Self::frechet_mixture(need_d()?, n.unwrap_or(2))?,
            "piecewise-min" => Self::piecewise_min(need_d()?, n.unwrap_or(2))?,
            "upper-frechet" => Self::upper_frechet(n.unwrap_or(2))?,
            other => return Err(Error::Parameter(format!("unknown model `{other}`"))),
        };
        if d.is_some() && !matches!(model.family, Family::FrechetMixture { .. } | Family::PiecewiseMin { .. }) {
            return Err(Error::Parameter(format!("model `{name}` takes no parameter d")));
        }
        Ok(model)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Whether `F(x ∧ y) = F(x) ∧ F(y)` holds identically.
    pub fn satisfies_min_stability(&self) -> bool {
        matches!(self.family, Family::PiecewiseMin { .. } | Family::UpperFrechet)
    }

    pub fn has_closed_form_k(&self) -> bool {
        self.closed_form_k().is_some()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Dimension { expected: self.n, got: x.len() });
        }
        for (index, &value) in x.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfUnitCube { index, value });
            }
        }
        Ok(())
    }

    /// `F(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.eval_unchecked(x))
    }

    /// `F(x)` without validating `x`.
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        match self.family {
            Family::Independence => x.iter().product(),
            Family::LowerFrechet => (x[0] + x[1] - 1.0).max(0.0),
            Family::Amh => {
                let den = 1.0 + (1.0 - x[0]) * (1.0 - x[1]);
                x[0] * x[1] / den
            }
            Family::FrechetMixture { d } => d * min_of(x) + (1.0 - d) * x.iter().product::<f64>(),
            Family::PiecewiseMin { d } => piecewise_marginal(d, min_of(x)),
            Family::UpperFrechet => min_of(x),
        }
    }

    /// Analytic gradient of `F`. Points exactly on a non-smooth seam are
    /// refused.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let n = self.n;
        match self.family {
            Family::Independence => Ok(product_gradient(x)),
            Family::LowerFrechet => {
                let s = x[0] + x[1];
                if s == 1.0 {
                    return Err(Error::Seam(format!("x1 + x2 = 1 at {x:?}")));
                }
                let a = if s > 1.0 { 1.0 } else { 0.0 };
                Ok(vec![a, a])
            }
            Family::Amh => {
                let den = 1.0 + (1.0 - x[0]) * (1.0 - x[1]);
                let den2 = den * den;
                Ok(vec![x[1] * (2.0 - x[1]) / den2, x[0] * (2.0 - x[0]) / den2])
            }
            Family::FrechetMixture { d } => {
                let k = unique_argmin(x)?;
                let mut g = product_gradient(x);
                for gi in g.iter_mut() {
                    *gi *= 1.0 - d;
                }
                g[k] += d;
                Ok(g)
            }
            Family::PiecewiseMin { d } => {
                let k = unique_argmin(x)?;
                if x[k] == d {
                    return Err(Error::Seam(format!("min coordinate equals d = {d} at {x:?}")));
                }
                let slope = if x[k] < d { 0.5 / d } else { 0.5 / (1.0 - d) };
                let mut g = vec![0.0; n];
                g[k] = slope;
                Ok(g)
            }
            Family::UpperFrechet => {
                let k = unique_argmin(x)?;
                let mut g = vec![0.0; n];
                g[k] = 1.0;
                Ok(g)
            }
        }
    }

    /// Draws one point into `out` (length `n`).
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self.family {
            Family::Independence => out.iter_mut().for_each(|v| *v = rng.random()),
            Family::LowerFrechet => {
                let u: f64 = rng.random();
                out[0] = u;
                out[1] = 1.0 - u;
            }
            Family::Amh => {
                let u: f64 = rng.random();
                let p: f64 = rng.random();
                out[0] = u;
                out[1] = amh_conditional_inverse(u, p);
            }
            Family::FrechetMixture { d } => {
                if rng.random::<f64>() < d {
                    let v: f64 = rng.random();
                    out.iter_mut().for_each(|x| *x = v);
                } else {
                    out.iter_mut().for_each(|x| *x = rng.random());
                }
            }
            Family::PiecewiseMin { d } => {
                let v = piecewise_marginal_inverse(d, rng.random());
                out.iter_mut().for_each(|x| *x = v);
            }
            Family::UpperFrechet => {
                let v: f64 = rng.random();
                out.iter_mut().for_each(|x| *x = v);
            }
        }
    }

    /// `m` i.i.d. draws, row-major (`m * n` values). Deterministic in `seed`.
    pub fn sample(&self, m: usize, seed: u64) -> Vec<f64> {
        let mut g = rng::stream(seed, 0);
        self.sample_with(&mut g, m)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m * self.n];
        for row in out.chunks_exact_mut(self.n) {
            self.sample_into(rng, row);
        }
        out
    }

    /// Closed-form tail constant `K`, consistent with its defining integral.
    ///
    /// Independence n=3 gives `8 (ln 2)^2` and the Fréchet mixture
    /// `8 ln(sqrt(1 + 1/(1-d)^2) - d/(1-d))`; see [`Self::printed_closed_form_k`]
    /// for the historically quoted variants.
    pub fn closed_form_k(&self) -> Option<f64> {
        match (self.family, self.n) {
            (Family::LowerFrechet, _) => Some(4.0),
            (Family::Amh, _) => Some(3.0 * 3f64.ln()),
            (Family::Independence, 2) => Some(4.0 * LN_2),
            (Family::Independence, 3) => Some(8.0 * LN_2 * LN_2),
            (Family::FrechetMixture { d }, 2) => Some(8.0 * mixture_log_term(d)),
            _ => None,
        }
    }

    /// The constants as commonly quoted in the literature for this catalog:
    /// `16 (ln 2)^2` for Independence n=3 and
    /// `8d/(1-d) ln(sqrt(1 + 1/(1-d)^2) - d/(1-d))` for the mixture.
    /// These disagree with the defining integral except at `d = 1/2`.
    pub fn printed_closed_form_k(&self) -> Option<f64> {
        match (self.family, self.n) {
            (Family::Independence, 3) => Some(16.0 * LN_2 * LN_2),
            (Family::FrechetMixture { d }, 2) => Some(8.0 * d / (1.0 - d) * mixture_log_term(d)),
            _ => self.closed_form_k(),
        }
    }

    /// Canonical spec string, parseable by [`Self::parse`].
    pub fn spec_string(&self) -> String {
        match self.family {
            Family::Independence => format!("independence:{}", self.n),
            Family::LowerFrechet => "lower-frechet".into(),
            Family::Amh => "amh".into(),
            Family::FrechetMixture { d } => format!("frechet-mixture:d={d},n={}", self.n),
            Family::PiecewiseMin { d } => format!("piecewise-min:d={d},n={}", self.n),
            Family::UpperFrechet => format!("upper-frechet:{}", self.n),
        }
    }
}

impl fmt::Display for CopulaModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec_string())
    }
}

fn mixture_log_term(d: f64) -> f64 {
    let q = 1.0 - d;
    ((1.0 + 1.0 / (q * q)).sqrt() - d / q).ln()
}

fn min_of(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::INFINITY, f64::min)
}

fn unique_argmin(x: &[f64]) -> Result<usize> {
    let m = min_of(x);
    let mut hits = x.iter().enumerate().filter(|(_, &v)| v == m).map(|(i, _)| i);
    let k = hits.next().unwrap_or(0);
    if hits.next().is_some() {
        return Err(Error::Seam(format!("minimum attained by several coordinates at {x:?}")));
    }
    Ok(k)
}

fn product_gradient(x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| x.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, v)| v).product())
        .collect()
}

/// `G(t)` with `F(x) = G(min x)` for the piecewise-min model.
pub fn piecewise_marginal(d: f64, t: f64) -> f64 {
    if t <= d {
        t / (2.0 * d)
    } else {
        (t + 1.0 - 2.0 * d) / (2.0 * (1.0 - d))
    }
}

pub fn piecewise_marginal_inverse(d: f64, p: f64) -> f64 {
    if p <= 0.5 {
        2.0 * d * p
    } else {
        2.0 * (1.0 - d) * p - 1.0 + 2.0 * d
    }
}

/// Conditional df of the second AMH coordinate given the first.
fn amh_conditional(u: f64, v: f64) -> f64 {
    let den = 1.0 + (1.0 - u) * (1.0 - v);
    v * (2.0 - v) / (den * den)
}

fn amh_conditional_inverse(u: f64, p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if amh_conditional(u, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_values() {
        let lf = CopulaModel::lower_frechet();
        assert_eq!(lf.eval(&[0.75, 0.75]).unwrap(), 0.5);
        let ind3 = CopulaModel::independence(3).unwrap();
        assert_eq!(ind3.eval(&[1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(CopulaModel::amh().eval(&[0.5, 1.0]).unwrap(), 0.5);
        let fm = CopulaModel::frechet_mixture(0.5, 2).unwrap();
        assert!((fm.eval(&[0.5, 0.5]).unwrap() - 0.375).abs() < 1e-15);
    }

    #[test]
    fn gradients_at_reference_points() {
        let ind = CopulaModel::independence(2).unwrap();
        assert_eq!(ind.grad(&[0.5, 0.8]).unwrap(), vec![0.8, 0.5]);
        let lf = CopulaModel::lower_frechet();
        assert_eq!(lf.grad(&[0.7, 0.6]).unwrap(), vec![1.0, 1.0]);
        assert!(matches!(lf.grad(&[0.5, 0.5]), Err(Error::Seam(_))));
        let pm = CopulaModel::piecewise_min(0.5, 2).unwrap();
        assert!(matches!(pm.grad(&[0.3, 0.3]), Err(Error::Seam(_))));
        assert!(matches!(pm.grad(&[0.5, 0.7]), Err(Error::Seam(_))));
    }

    #[test]
    fn amh_gradient_matches_central_difference() {
        let m = CopulaModel::amh();
        let x = [2.0 / 3.0, 0.5];
        let g = m.grad(&x).unwrap();
        let h = 1e-5;
        for i in 0..2 {
            let mut p = x;
            let mut q = x;
            p[i] += h;
            q[i] -= h;
            let fd = (m.eval(&p).unwrap() - m.eval(&q).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6, "axis {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let ind = CopulaModel::independence(2).unwrap();
        assert!(matches!(ind.eval(&[0.5]), Err(Error::Dimension { .. })));
        assert!(matches!(ind.eval(&[0.5, 1.5]), Err(Error::OutOfUnitCube { .. })));
        assert!(CopulaModel::frechet_mixture(1.0, 2).is_err());
        assert!(CopulaModel::piecewise_min(0.0, 2).is_err());
        assert!(CopulaModel::independence(1).is_err());
    }

    #[test]
    fn parse_round_trip() {
        for s in [
            "independence:3",
            "lower-frechet",
            "amh",
            "frechet-mixture:d=0.5,n=2",
            "piecewise-min:d=0.25,n=3",
            "upper-frechet:2",
        ] {
            let m = CopulaModel::parse(s).unwrap();
            assert_eq!(m.spec_string(), s);
            assert_eq!(CopulaModel::parse(&m.spec_string()).unwrap(), m);
        }
        assert_eq!(CopulaModel::parse("independence").unwrap().dim(), 2);
        assert_eq!(CopulaModel::parse("independence:n=4").unwrap().dim(), 4);
        assert!(CopulaModel::parse("gumbel").is_err());
        assert!(CopulaModel::parse("amh:3").is_err());
        assert!(CopulaModel::parse("frechet-mixture:n=2").is_err());
        assert!(CopulaModel::parse("independence:d=0.5").is_err());
    }

    #[test]
    fn lower_frechet_draws_are_countermonotone() {
        let s = CopulaModel::lower_frechet().sample(1000, 1);
        for p in s.chunks_exact(2) {
            assert_eq!(p[0] + p[1], 1.0);
        }
    }

    #[test]
    fn piecewise_marginal_inverse_round_trip() {
        for &d in &[0.2, 0.5, 0.8] {
            for k in 0..=100 {
                let p = k as f64 / 100.0;
                let t = piecewise_marginal_inverse(d, p);
                assert!((piecewise_marginal(d, t) - p).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn flags() {
        assert!(CopulaModel::upper_frechet(3).unwrap().satisfies_min_stability());
        assert!(CopulaModel::piecewise_min(0.5, 2).unwrap().satisfies_min_stability());
        assert!(!CopulaModel::amh().satisfies_min_stability());
        assert!(CopulaModel::independence(3).unwrap().has_closed_form_k());
        assert!(!CopulaModel::independence(4).unwrap().has_closed_form_k());
        assert!(!CopulaModel::frechet_mixture(0.5, 3).unwrap().has_closed_form_k());
        assert!(!CopulaModel::upper_frechet(2).unwrap().has_closed_form_k());
    }
}
