//! Simulation of the Pickands-type constant
//! `H_c[0, lambda] = E sup_{x in [0, c lambda]} exp(sqrt2 Y(x) - Var Y(x))`
//! with `Y(x) = sum_i B_i(x_i)` for independent Brownian motions `B_i`, and of
//! its normalization `H_c[0, lambda] / prod lambda_i`, which tends to
//! `prod c_i`.
//!
//! The supremum over a box of a sum of independent processes is the sum of
//! the per-axis suprema, so the expectation factorizes into per-axis
//! expectations; every estimator below works axis by axis.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{self, StreamRng, CHUNK};

/// How each replicate is weighted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    /// Plain mean of `sup exp(Z)`. Unbiased, but for long intervals the mean
    /// is carried by rare paths and typical sample sizes undershoot.
    Direct,
    /// Importance sampling from the equal mixture of the measures tilted by
    /// `exp(Z(t_k))` over the grid points `t_k`; each replicate contributes
    /// `sup exp(Z) / mean_k exp(Z(t_k))`, which is bounded by the number of
    /// grid points.
    Mixture,
}

/// What the supremum ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupMode {
    /// Grid points only.
    Grid,
    /// The whole interval: between neighbouring grid points the maximum of the
    /// Brownian bridge is drawn exactly.
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PickandsSpec {
    pub c: Vec<f64>,
    pub lambda: Vec<f64>,
    pub step: f64,
    pub replications: usize,
    /// Scale the field by `sqrt 2`. Without it the normalized limit is zero.
    pub use_sqrt2: bool,
    pub estimator: Estimator,
    pub sup_mode: SupMode,
}

impl PickandsSpec {
    pub fn new(c: Vec<f64>, lambda: Vec<f64>, step: f64, replications: usize) -> Self {
        Self { c, lambda, step, replications, use_sqrt2: true, estimator: Estimator::Mixture, sup_mode: SupMode::Continuous }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c.is_empty() || self.c.len() != self.lambda.len() {
            return Err(Error::Parameter(format!(
                "need matching non-empty slope and length lists, got {} and {}",
                self.c.len(),
                self.lambda.len()
            )));
        }
        if self.c.iter().chain(&self.lambda).any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Parameter("slopes and lengths must be positive".into()));
        }
        let shortest = self.c.iter().zip(&self.lambda).map(|(c, l)| c * l).fold(f64::INFINITY, f64::min);
        if !(self.step > 0.0) || self.step > shortest / 50.0 {
            return Err(Error::Parameter(format!(
                "step {} must be positive and at most {} (1/50 of the shortest interval)",
                self.step,
                shortest / 50.0
            )));
        }
        if self.replications < 2 {
            return Err(Error::Parameter("need at least 2 replications".into()));
        }
        if !self.use_sqrt2 && self.estimator == Estimator::Mixture {
            return Err(Error::Parameter("the mixture estimator needs the sqrt 2 scaling".into()));
        }
        Ok(())
    }

    /// Grid steps on axis `i`.
    fn points(&self, i: usize) -> usize {
        ((self.c[i] * self.lambda[i] / self.step).round() as usize).max(1)
    }
}

/// Mean and standard error of one axis factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisEstimate {
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PickandsEstimate {
    /// Estimate of `H_c[0, lambda]`.
    pub h: f64,
    pub h_stderr: f64,
    /// `h / prod lambda_i`.
    pub ratio: f64,
    pub stderr: f64,
    /// `prod c_i`.
    pub target: f64,
    pub rel_err: f64,
    pub axes: Vec<AxisEstimate>,
}

/// Per-replicate value on one axis, from its own stream.
fn replicate(spec: &PickandsSpec, n_steps: usize, g: &mut StreamRng) -> f64 {
    let dt = spec.step;
    let scale = if spec.use_sqrt2 { std::f64::consts::SQRT_2 } else { 1.0 };
    // Variance of the increments of `scale * B` over one step, used by the
    // bridge maximum.
    let var = scale * scale * dt;
    let sd = var.sqrt();
    let tilt_end = match spec.estimator {
        Estimator::Direct => None,
        Estimator::Mixture => Some(g.random_range(0..=n_steps)),
    };
    let mut z = 0.0f64;
    let mut top = 0.0f64;
    // Running log-sum-exp of the grid values of Z.
    let (mut lse_max, mut lse_sum) = (0.0f64, 1.0f64);
    for j in 1..=n_steps {
        let drift = match tilt_end {
            Some(k) if j <= k => scale * scale * dt - dt,
            _ => -dt,
        };
        let normal: f64 = g.sample(StandardNormal);
        let next = z + sd * normal + drift;
        let peak = match spec.sup_mode {
            SupMode::Grid => next,
            SupMode::Continuous => {
                let e: f64 = g.sample(Exp1);
                0.5 * (z + next + ((z - next).powi(2) + 2.0 * var * e).sqrt())
            }
        };
        top = top.max(peak);
        z = next;
        if tilt_end.is_some() {
            if z > lse_max {
                lse_sum = lse_sum * (lse_max - z).exp() + 1.0;
                lse_max = z;
            } else {
                lse_sum += (z - lse_max).exp();
            }
        }
    }
    match tilt_end {
        None => top.exp(),
        Some(_) => {
            let log_mean = lse_max + (lse_sum / (n_steps + 1) as f64).ln();
            (top - log_mean).exp()
        }
    }
}

/// Factor of axis `axis`: `E sup_{[0, c lambda]} exp(Z)` from replicate
/// streams `(derive(seed, axis), rep)`.
pub fn estimate_axis(spec: &PickandsSpec, axis: usize, seed: u64, workers: usize) -> Result<AxisEstimate> {
    spec.validate()?;
    if axis >= spec.c.len() {
        return Err(Error::Dimension { expected: spec.c.len(), got: axis + 1 });
    }
    let n_steps = spec.points(axis);
    let axis_seed = rng::derive(seed, axis as u64);
    let reps = spec.replications;
    let chunks = reps.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = rng::with_workers(workers, || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let (mut s, mut s2) = (0.0, 0.0);
                for i in c * CHUNK..((c + 1) * CHUNK).min(reps) {
                    let v = replicate(spec, n_steps, &mut rng::stream(axis_seed, i as u64));
                    s += v;
                    s2 += v * v;
                }
                (s, s2)
            })
            .collect()
    });
    let (s, s2) = partial.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let n = reps as f64;
    let mean = s / n;
    let var = ((s2 / n - mean * mean) * n / (n - 1.0)).max(0.0);
    Ok(AxisEstimate { mean, stderr: (var / n).sqrt() })
}

/// Estimates `H_c[0, lambda]` and its normalization as the product of the
/// axis factors; the standard error follows from the delta method.
pub fn estimate_h_ratio(spec: &PickandsSpec, seed: u64, workers: usize) -> Result<PickandsEstimate> {
    spec.validate()?;
    let axes = (0..spec.c.len()).map(|i| estimate_axis(spec, i, seed, workers)).collect::<Result<Vec<_>>>()?;
    Ok(combine(spec, axes))
}

/// Product of axis factors with the derived columns.
pub fn combine(spec: &PickandsSpec, axes: Vec<AxisEstimate>) -> PickandsEstimate {
    let h: f64 = axes.iter().map(|a| a.mean).product();
    let rel2: f64 = axes.iter().map(|a| if a.mean > 0.0 { (a.stderr / a.mean).powi(2) } else { 0.0 }).sum();
    let h_stderr = h.abs() * rel2.sqrt();
    let volume: f64 = spec.lambda.iter().product();
    let target: f64 = spec.c.iter().product();
    let ratio = h / volume;
    PickandsEstimate { h, h_stderr, ratio, stderr: h_stderr / volume, target, rel_err: (ratio - target) / target, axes }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(PickandsSpec::new(vec![1.0], vec![200.0], 0.05, 100).validate().is_ok());
        assert!(PickandsSpec::new(vec![1.0], vec![2.0], 0.05, 100).validate().is_err());
        assert!(PickandsSpec::new(vec![1.0, 1.0], vec![200.0], 0.05, 100).validate().is_err());
        assert!(PickandsSpec::new(vec![-1.0], vec![200.0], 0.05, 100).validate().is_err());
        let literal = PickandsSpec { use_sqrt2: false, ..PickandsSpec::new(vec![1.0], vec![200.0], 0.05, 100) };
        assert!(literal.validate().is_err());
        assert!(PickandsSpec { estimator: Estimator::Direct, ..literal }.validate().is_ok());
    }

    #[test]
    fn replicates_are_at_least_one_for_direct_sup() {
        // Z(0) = 0 belongs to the sup.
        let spec = PickandsSpec { estimator: Estimator::Direct, ..PickandsSpec::new(vec![1.0], vec![10.0], 0.1, 2) };
        for s in 0..50 {
            assert!(replicate(&spec, 100, &mut rng::stream(s, 0)) >= 1.0);
        }
    }

    #[test]
    fn mixture_replicates_are_bounded_by_grid_size() {
        let spec = PickandsSpec { sup_mode: SupMode::Grid, ..PickandsSpec::new(vec![1.0], vec![10.0], 0.1, 2) };
        for s in 0..200 {
            let v = replicate(&spec, 100, &mut rng::stream(s, 0));
            assert!(v > 0.0 && v <= 101.0 * (1.0 + 1e-12), "{v}");
        }
    }
}
