//! Plain Monte Carlo for `P(sup (W_F + F w) > u)` with deterministic
//! parallelism: replicate `i` always uses stream `(seed, i)`, and hit counts
//! are integers, so the result never depends on the worker count.

use rayon::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::asymptotics::Side;
use crate::error::{Error, Result};
use crate::field_sim::{Extremes, FieldSampler, SheetSampler};
use crate::rng::{self, CHUNK};

/// Sample size, base seed and worker count of a run.
#[derive(Debug, Clone, Copy)]
pub struct McConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// 0 selects the rayon default.
    pub workers: usize,
}

/// An estimated exceedance probability.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloEstimate {
    pub p_hat: f64,
    pub hits: u64,
    pub n_samples: u64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    /// Base seeds of every pooled run.
    pub seeds: Vec<u64>,
    pub u: f64,
    pub w: f64,
    pub side: Side,
    /// Identifies the simulated field; merging requires equal labels.
    pub label: String,
    /// No exceedance was observed.
    pub rare_event: bool,
}

impl MonteCarloEstimate {
    pub fn from_counts(hits: u64, n: u64, u: f64, w: f64, side: Side, seeds: Vec<u64>, label: String) -> Self {
        let p = hits as f64 / n as f64;
        Self {
            p_hat: p,
            hits,
            n_samples: n,
            stderr: (p * (1.0 - p) / n as f64).sqrt(),
            ci95: ci95(hits, n),
            seeds,
            u,
            w,
            side,
            label,
            rare_event: hits == 0,
        }
    }
}

const Z95: f64 = 1.959963984540054;

/// Normal interval when at least 30 hits were seen, Clopper–Pearson otherwise.
pub fn ci95(hits: u64, n: u64) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    if hits >= 30 {
        let half = Z95 * (p * (1.0 - p) / n as f64).sqrt();
        return ((p - half).max(0.0), (p + half).min(1.0));
    }
    let (k, nf) = (hits as f64, n as f64);
    let lo = if hits == 0 { 0.0 } else { Beta::new(k, nf - k + 1.0).expect("shape").inverse_cdf(0.025) };
    let hi = if hits == n { 1.0 } else { Beta::new(k + 1.0, nf - k).expect("shape").inverse_cdf(0.975) };
    (lo, hi)
}

/// `zero_ok` admits the degenerate threshold `u = 0`, used by comparisons
/// that report `P(sup > 0)`.
fn validate(us: &[f64], cfg: &McConfig, zero_ok: bool) -> Result<()> {
    if cfg.n_samples < 100 {
        return Err(Error::Parameter(format!("need at least 100 samples, got {}", cfg.n_samples)));
    }
    if let Some(u) = us.iter().find(|&&u| !(u > 0.0 || (zero_ok && u == 0.0))) {
        return Err(Error::Domain(format!("threshold u must be positive, got {u}")));
    }
    Ok(())
}

/// Runs `body` for replicates `0..n` in fixed-size chunks and adds up the
/// integer counters it produces.
pub(crate) fn parallel_counts<F>(n: usize, width: usize, workers: usize, body: F) -> Vec<u64>
where
    F: Fn(std::ops::Range<usize>, &mut [u64]) + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    rng::with_workers(workers, || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = vec![0u64; width];
                body(c * CHUNK..((c + 1) * CHUNK).min(n), &mut acc);
                acc
            })
            .reduce(
                || vec![0u64; width],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            )
    })
}

/// One-sided and two-sided estimates at every `(w, u)` from a single set of
/// draws (common random numbers).
#[derive(Debug, Clone)]
pub struct TailTable {
    pub us: Vec<f64>,
    pub ws: Vec<f64>,
    one: Vec<MonteCarloEstimate>,
    two: Vec<MonteCarloEstimate>,
}

impl TailTable {
    pub fn get(&self, side: Side, w_index: usize, u_index: usize) -> &MonteCarloEstimate {
        let k = w_index * self.us.len() + u_index;
        match side {
            Side::One => &self.one[k],
            Side::Two => &self.two[k],
        }
    }
}

/// Estimates every `(u, w)` pair, both sides, from one set of draws.
pub fn estimate_table<S: FieldSampler + ?Sized>(sampler: &S, us: &[f64], ws: &[f64], cfg: &McConfig) -> Result<TailTable> {
    table(sampler, us, ws, cfg, false)
}

pub(crate) fn table<S: FieldSampler + ?Sized>(
    sampler: &S,
    us: &[f64],
    ws: &[f64],
    cfg: &McConfig,
    zero_ok: bool,
) -> Result<TailTable> {
    validate(us, cfg, zero_ok)?;
    let (nu, nw) = (us.len(), ws.len());
    let counts = parallel_counts(cfg.n_samples, 2 * nu * nw, cfg.workers, |range, acc| {
        let mut scratch = vec![0.0; sampler.scratch_len()];
        let mut ext = vec![Extremes { sup: 0.0, inf: 0.0 }; nw];
        for i in range {
            let mut g = rng::stream(cfg.seed, i as u64);
            sampler.extremes(&mut g, ws, &mut scratch, &mut ext);
            for (k, e) in ext.iter().enumerate() {
                let a = e.abs_sup();
                for (j, &u) in us.iter().enumerate() {
                    acc[k * nu + j] += (e.sup > u) as u64;
                    acc[nw * nu + k * nu + j] += (a > u) as u64;
                }
            }
        }
    });
    let n = cfg.n_samples as u64;
    let label = sampler.label();
    let build = |offset: usize, side: Side| {
        (0..nw * nu)
            .map(|k| {
                MonteCarloEstimate::from_counts(counts[offset + k], n, us[k % nu], ws[k / nu], side, vec![cfg.seed], label.clone())
            })
            .collect()
    };
    Ok(TailTable { us: us.to_vec(), ws: ws.to_vec(), one: build(0, Side::One), two: build(nw * nu, Side::Two) })
}

/// `P(sup (W_F + F w) > u)` on the sampler's grid.
pub fn estimate_tail<S: FieldSampler + ?Sized>(sampler: &S, u: f64, w: f64, cfg: &McConfig) -> Result<MonteCarloEstimate> {
    Ok(estimate_table(sampler, &[u], &[w], cfg)?.one.remove(0))
}

/// `P(sup |W_F + F w| > u)` on the sampler's grid.
pub fn estimate_tail_two_sided<S: FieldSampler + ?Sized>(
    sampler: &S,
    u: f64,
    w: f64,
    cfg: &McConfig,
) -> Result<MonteCarloEstimate> {
    Ok(estimate_table(sampler, &[u], &[w], cfg)?.two.remove(0))
}

/// Pools estimates of the same quantity.
pub fn merge(estimates: &[MonteCarloEstimate]) -> Result<MonteCarloEstimate> {
    let first = estimates.first().ok_or_else(|| Error::Merge("nothing to merge".into()))?;
    let mut hits = 0u64;
    let mut n = 0u64;
    let mut seeds = Vec::new();
    for e in estimates {
        if e.u != first.u || e.w != first.w || e.side != first.side || e.label != first.label {
            return Err(Error::Merge(format!(
                "({}, {}, {}, {}) differs from ({}, {}, {}, {})",
                e.u,
                e.w,
                e.side.as_str(),
                e.label,
                first.u,
                first.w,
                first.side.as_str(),
                first.label
            )));
        }
        hits += e.hits;
        n += e.n_samples;
        seeds.extend_from_slice(&e.seeds);
    }
    Ok(MonteCarloEstimate::from_counts(hits, n, first.u, first.w, first.side, seeds, first.label.clone()))
}

/// Grid estimate together with a coarser nested grid and a continuum
/// extrapolation.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedEstimate {
    pub fine: MonteCarloEstimate,
    pub coarse: MonteCarloEstimate,
    /// `P_fine + (P_fine - P_coarse) / (sqrt(stride) - 1)`: removes the leading
    /// `sqrt(grid step)` bias of a discretely observed Brownian-type maximum.
    pub extrapolated: f64,
    pub extrapolated_stderr: f64,
}

/// Estimates on the sampler's grid and on the nested grid of resolution
/// `r / stride`, sharing every draw.
pub fn estimate_refined(
    sheet: &SheetSampler,
    us: &[f64],
    w: f64,
    side: Side,
    stride: usize,
    cfg: &McConfig,
) -> Result<Vec<RefinedEstimate>> {
    refined(sheet, us, w, side, stride, cfg, false)
}

pub(crate) fn refined(
    sheet: &SheetSampler,
    us: &[f64],
    w: f64,
    side: Side,
    stride: usize,
    cfg: &McConfig,
    zero_ok: bool,
) -> Result<Vec<RefinedEstimate>> {
    validate(us, cfg, zero_ok)?;
    if stride < 2 || sheet.resolution() % stride != 0 {
        return Err(Error::Parameter(format!(
            "stride {stride} must be at least 2 and divide the resolution {}",
            sheet.resolution()
        )));
    }
    let nu = us.len();
    // Joint counts per u: [fine hit & coarse hit, fine hit only, coarse hit only].
    let counts = parallel_counts(cfg.n_samples, 3 * nu, cfg.workers, |range, acc| {
        let mut scratch = vec![0.0; sheet.scratch_len()];
        let mut ext = [Extremes { sup: 0.0, inf: 0.0 }; 2];
        for i in range {
            let mut g = rng::stream(cfg.seed, i as u64);
            sheet.nested_extremes(&mut g, &[w], &[1, stride], &mut scratch, &mut ext);
            let stat = |e: &Extremes| match side {
                Side::One => e.sup,
                Side::Two => e.abs_sup(),
            };
            let (f, c) = (stat(&ext[0]), stat(&ext[1]));
            for (j, &u) in us.iter().enumerate() {
                match (f > u, c > u) {
                    (true, true) => acc[3 * j] += 1,
                    (true, false) => acc[3 * j + 1] += 1,
                    (false, true) => acc[3 * j + 2] += 1,
                    (false, false) => {}
                }
            }
        }
    });
    let n = cfg.n_samples as u64;
    let nf = n as f64;
    let gain = 1.0 / ((stride as f64).sqrt() - 1.0);
    let fine_label = sheet.label();
    let coarse_label = format!("sheet {} r={}", sheet.model().spec_string(), sheet.resolution() / stride);
    Ok(us
        .iter()
        .enumerate()
        .map(|(j, &u)| {
            let (both, only_f, only_c) = (counts[3 * j], counts[3 * j + 1], counts[3 * j + 2]);
            let fine = MonteCarloEstimate::from_counts(both + only_f, n, u, w, side, vec![cfg.seed], fine_label.clone());
            let coarse = MonteCarloEstimate::from_counts(both + only_c, n, u, w, side, vec![cfg.seed], coarse_label.clone());
            // Per-replicate value Y = I_f + gain (I_f - I_c).
            let values = [(1.0, both), (1.0 + gain, only_f), (-gain, only_c)];
            let mean = values.iter().map(|(y, k)| y * *k as f64).sum::<f64>() / nf;
            let second = values.iter().map(|(y, k)| y * y * *k as f64).sum::<f64>() / nf;
            let var = (second - mean * mean).max(0.0) * nf / (nf - 1.0);
            RefinedEstimate { fine, coarse, extrapolated: mean, extrapolated_stderr: (var / nf).sqrt() }
        })
        .collect())
}
