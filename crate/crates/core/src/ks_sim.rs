//! Multivariate Kolmogorov–Smirnov statistics `sup sqrt(m) (F_m - F)` and
//! `sup sqrt(m) |F_m - F|` for copula samples, and their comparison with the
//! simulated limit field.
//!
//! `F_m` counts sample points in the closed orthant `[0, x]`. On each cell of
//! the grid spanned by the sample coordinates `F_m` is constant, so the excess
//! `F_m - F` peaks at a cell's lower-left corner and the deficit `F - F_m`
//! approaches its supremum towards the upper-right corner, where `F_m` takes
//! the value of the strict count.

use crate::asymptotics::{asym, Side, TailLaw};
use crate::copula::CopulaModel;
use crate::error::{Error, Result};
use crate::field_sim::{BridgeSampler, FieldSampler, SheetSampler};
use crate::levelset::{compute_k, KSpec, LevelSetProfile};
use crate::rng;
use crate::tail_mc::{parallel_counts, refined, table, McConfig, MonteCarloEstimate};

/// Fraction of the sample (row-major, `n` columns) in `[0, x]`.
pub fn empirical_f(sample: &[f64], n: usize, x: &[f64]) -> f64 {
    let m = sample.len() / n;
    if m == 0 {
        return 0.0;
    }
    sample.chunks_exact(n).filter(|p| p.iter().zip(x).all(|(a, b)| a <= b)).count() as f64 / m as f64
}

/// Fraction of the sample strictly below `x` in every coordinate: the limit
/// of `F_m` approaching `x` from below.
pub fn empirical_f_strict(sample: &[f64], n: usize, x: &[f64]) -> f64 {
    let m = sample.len() / n;
    if m == 0 {
        return 0.0;
    }
    sample.chunks_exact(n).filter(|p| p.iter().zip(x).all(|(a, b)| a < b)).count() as f64 / m as f64
}

/// Candidate set used for the supremum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOptions {
    /// Enumerate every cell corner in dimension two.
    pub exact_bivariate: bool,
    /// Lattice with this many steps per axis for the remaining cases; `None`
    /// makes them unsupported.
    pub lattice: Option<usize>,
}

impl Default for KsOptions {
    fn default() -> Self {
        Self { exact_bivariate: true, lattice: Some(64) }
    }
}

/// Lattice evaluations are capped at this many points.
pub const LATTICE_CAP: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq)]
pub struct KsResult {
    pub m: usize,
    pub statistic: f64,
    pub side: Side,
    pub model: String,
    /// Corner where the supremum is attained (approached from below for the
    /// deficit branch).
    pub argmax: Vec<f64>,
    /// Upper bound on how far the candidate-set value may undershoot the
    /// true supremum; zero for exact enumeration.
    pub bias_bound: f64,
}

/// One-sided and two-sided statistics of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct KsPair {
    pub one: KsResult,
    pub two: KsResult,
}

/// Largest excess and deficit with their corners, unscaled.
struct Sweep {
    excess: f64,
    excess_at: Vec<f64>,
    deficit: f64,
    deficit_at: Vec<f64>,
}

/// Both statistics from one pass over the candidate set.
pub fn ks_statistics(sample: &[f64], model: &CopulaModel, opts: &KsOptions) -> Result<KsPair> {
    let n = model.dim();
    if sample.is_empty() || sample.len() % n != 0 {
        return Err(Error::Dimension { expected: n, got: sample.len() % n });
    }
    if let Some((index, &value)) = sample.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return Err(Error::OutOfUnitCube { index, value });
    }
    let m = sample.len() / n;
    let scale = (m as f64).sqrt();
    let (sweep, bias) = if n == 2 && opts.exact_bivariate {
        (bivariate_sweep(sample, model), 0.0)
    } else {
        let g = opts.lattice.ok_or_else(|| {
            Error::Unsupported(format!("exact enumeration is limited to n = 2; {model} needs a lattice"))
        })?;
        (lattice_sweep(sample, model, g)?, scale * n as f64 / g as f64)
    };
    let excess = scale * sweep.excess;
    let deficit = scale * sweep.deficit;
    let one = KsResult {
        m,
        statistic: excess,
        side: Side::One,
        model: model.spec_string(),
        argmax: sweep.excess_at.clone(),
        bias_bound: bias,
    };
    let two = if deficit > excess {
        KsResult { statistic: deficit, side: Side::Two, argmax: sweep.deficit_at, ..one.clone() }
    } else {
        KsResult { side: Side::Two, ..one.clone() }
    };
    Ok(KsPair { one, two })
}

/// `sup sqrt(m) (F_m - F)`.
pub fn ks_one_sided(sample: &[f64], model: &CopulaModel, opts: &KsOptions) -> Result<KsResult> {
    Ok(ks_statistics(sample, model, opts)?.one)
}

/// `sup sqrt(m) |F_m - F|`.
pub fn ks_two_sided(sample: &[f64], model: &CopulaModel, opts: &KsOptions) -> Result<KsResult> {
    Ok(ks_statistics(sample, model, opts)?.two)
}

/// Sorted distinct coordinates together with 0 and 1.
fn boundaries(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut b: Vec<f64> = values.chain([0.0, 1.0]).collect();
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

const BLOCK: usize = 256;

/// Counts `#{points with y-rank <= l}` among the points added so far, with
/// lazy per-block offsets so an insertion costs `O(BLOCK + blocks)`.
struct RankCounts {
    own: Vec<u32>,
    lazy: Vec<u32>,
}

impl RankCounts {
    fn new(len: usize) -> Self {
        Self { own: vec![0; len], lazy: vec![0; len.div_ceil(BLOCK)] }
    }

    fn add(&mut self, rank: usize) {
        let b = rank / BLOCK;
        let end = ((b + 1) * BLOCK).min(self.own.len());
        self.own[rank..end].iter_mut().for_each(|c| *c += 1);
        self.lazy[b + 1..].iter_mut().for_each(|c| *c += 1);
    }

    fn get(&self, l: usize) -> u32 {
        self.own[l] + self.lazy[l / BLOCK]
    }
}

/// State of a column block as of the last row where it was scanned.
#[derive(Clone, Copy)]
struct BlockMemo {
    best: f64,
    /// `F` at the block's bounding column, in that row.
    f_edge: f64,
    /// Count at the block's bounding column, in that row.
    count_edge: u32,
}

/// Exact sweep over all cells. Rows follow the x boundaries. Between rows the
/// count at column `l` grows by the insertions at or below `l`, and because
/// `F` is 2-increasing its growth is smallest at the lowest column of a block.
/// This bounds each block's excess (and symmetrically its deficit) from its
/// value at the last scan, so only blocks that may beat the running best are
/// rescanned.
fn bivariate_sweep(sample: &[f64], model: &CopulaModel) -> Sweep {
    let m = sample.len() / 2;
    let inv_m = 1.0 / m as f64;
    let bx = boundaries(sample.iter().step_by(2).copied());
    let by = boundaries(sample.iter().skip(1).step_by(2).copied());
    let (lx, ly) = (bx.len(), by.len());
    let rank = |b: &[f64], v: f64| b.partition_point(|&t| t < v);
    // Points grouped by x-rank, keeping their y-rank.
    let mut start = vec![0usize; lx + 1];
    let ranks: Vec<(usize, usize)> = sample.chunks_exact(2).map(|p| (rank(&bx, p[0]), rank(&by, p[1]))).collect();
    for &(rx, _) in &ranks {
        start[rx + 1] += 1;
    }
    for k in 0..lx {
        start[k + 1] += start[k];
    }
    let mut fill = start.clone();
    let mut by_row = vec![0usize; m];
    for &(rx, ry) in &ranks {
        by_row[fill[rx]] = ry;
        fill[rx] += 1;
    }

    let f = |x: f64, y: f64| model.eval_unchecked(&[x, y]);
    // Blocks whose bound is within this of the best are skipped: they cannot
    // improve it beyond rounding, and comonotone samples tie on whole rows.
    let tie = 1e-12;
    let unseen = BlockMemo { best: f64::INFINITY, f_edge: 0.0, count_edge: 0 };
    let mut excess_memo = vec![unseen; ly.div_ceil(BLOCK)];
    let mut deficit_memo = vec![unseen; (ly - 1).div_ceil(BLOCK)];
    let mut counts = RankCounts::new(ly);
    let mut best = Sweep {
        excess: f64::NEG_INFINITY,
        excess_at: vec![0.0, 0.0],
        deficit: f64::NEG_INFINITY,
        deficit_at: vec![1.0, 1.0],
    };
    for k in 0..lx {
        for &ry in &by_row[start[k]..start[k + 1]] {
            counts.add(ry);
        }
        let x = bx[k];
        for (b, memo) in excess_memo.iter_mut().enumerate() {
            let (a, e) = (b * BLOCK, ((b + 1) * BLOCK).min(ly));
            let f_edge = f(x, by[a]);
            let count_edge = counts.get(e - 1);
            let bound = memo.best + (count_edge - memo.count_edge) as f64 * inv_m - (f_edge - memo.f_edge);
            if bound <= best.excess + tie {
                continue;
            }
            let mut block_best = f64::NEG_INFINITY;
            for l in a..e {
                let v = counts.get(l) as f64 * inv_m - f(x, by[l]);
                block_best = block_best.max(v);
                if v > best.excess {
                    best.excess = v;
                    best.excess_at = vec![x, by[l]];
                }
            }
            *memo = BlockMemo { best: block_best, f_edge, count_edge };
        }
        if k + 1 == lx {
            break;
        }
        let x1 = bx[k + 1];
        for (b, memo) in deficit_memo.iter_mut().enumerate() {
            let (a, e) = (b * BLOCK, ((b + 1) * BLOCK).min(ly - 1));
            let f_edge = f(x1, by[e]);
            let count_edge = counts.get(a);
            let bound = memo.best + (f_edge - memo.f_edge) - (count_edge - memo.count_edge) as f64 * inv_m;
            if bound <= best.deficit + tie {
                continue;
            }
            let mut block_best = f64::NEG_INFINITY;
            for l in a..e {
                let v = f(x1, by[l + 1]) - counts.get(l) as f64 * inv_m;
                block_best = block_best.max(v);
                if v > best.deficit {
                    best.deficit = v;
                    best.deficit_at = vec![x1, by[l + 1]];
                }
            }
            *memo = BlockMemo { best: block_best, f_edge, count_edge };
        }
    }
    best
}

/// Closed-orthant counts on the lattice `{0, 1/g, ..., 1}^n`.
fn lattice_sweep(sample: &[f64], model: &CopulaModel, g: usize) -> Result<Sweep> {
    let n = model.dim();
    let side = g + 1;
    let size = side.checked_pow(n as u32).filter(|&s| s <= LATTICE_CAP).ok_or_else(|| {
        Error::Parameter(format!("lattice of {side}^{n} points exceeds the cap of {LATTICE_CAP}"))
    })?;
    if g == 0 {
        return Err(Error::Parameter("lattice needs at least one step per axis".into()));
    }
    let m = sample.len() / n;
    let gf = g as f64;
    let mut counts = vec![0u32; size];
    for p in sample.chunks_exact(n) {
        // Smallest lattice index whose coordinate is >= the point's.
        let idx = p.iter().rev().fold(0usize, |acc, &v| {
            let mut i = (v * gf).ceil() as usize;
            while i > 0 && (i - 1) as f64 / gf >= v {
                i -= 1;
            }
            while (i as f64 / gf) < v {
                i += 1;
            }
            acc * side + i.min(g)
        });
        counts[idx] += 1;
    }
    let mut stride = 1;
    for _ in 0..n {
        let block = stride * side;
        for chunk in counts.chunks_exact_mut(block) {
            for idx in stride..block {
                chunk[idx] += chunk[idx - stride];
            }
        }
        stride = block;
    }
    let inv_m = 1.0 / m as f64;
    let mut x = vec![0.0; n];
    let mut best = Sweep { excess: f64::NEG_INFINITY, excess_at: x.clone(), deficit: f64::NEG_INFINITY, deficit_at: x.clone() };
    for (idx, &c) in counts.iter().enumerate() {
        let mut rest = idx;
        for v in x.iter_mut() {
            *v = (rest % side) as f64 / gf;
            rest /= side;
        }
        let d = c as f64 * inv_m - model.eval_unchecked(&x);
        if d > best.excess {
            best.excess = d;
            best.excess_at.clone_from(&x);
        }
        if -d > best.deficit {
            best.deficit = -d;
            best.deficit_at.clone_from(&x);
        }
    }
    Ok(best)
}

/// How the limit field is simulated in a comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitSpec {
    /// Grid steps per axis (bridge steps for min-stable models).
    pub resolution: usize,
    pub samples: usize,
    /// Nested coarser grid used to extrapolate grid rates to the continuum;
    /// only used for sheets.
    pub stride: Option<usize>,
}

impl LimitSpec {
    pub fn for_model(model: &CopulaModel) -> Self {
        if model.satisfies_min_stability() {
            Self { resolution: 1 << 14, samples: 100_000, stride: None }
        } else {
            let (resolution, samples) = match model.dim() {
                2 => (256, 80_000),
                3 => (64, 20_000),
                _ => (16, 20_000),
            };
            Self { resolution, samples, stride: Some(2) }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompareSpec {
    pub m: usize,
    pub replications: usize,
    pub us: Vec<f64>,
    pub side: Side,
    pub seed: u64,
    pub workers: usize,
    pub ks: KsOptions,
    pub limit: LimitSpec,
}

/// One `u` of a finite-sample versus limit comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub u: f64,
    pub finite: MonteCarloEstimate,
    /// Exceedance rate of the limit field on the simulation grid.
    pub limit: MonteCarloEstimate,
    /// Continuum extrapolation of the grid rate with its standard error.
    pub limit_extrapolated: Option<(f64, f64)>,
    pub asym: Option<f64>,
}

impl CompareRow {
    /// Best available limit rate: extrapolated when present.
    pub fn limit_rate(&self) -> f64 {
        self.limit_extrapolated.map_or(self.limit.p_hat, |(v, _)| v)
    }
}

/// Exceedance counts of the finite-`m` statistic at every `u`, on the side
/// selected by the spec.
pub fn finite_m_rates(model: &CopulaModel, spec: &CompareSpec) -> Result<Vec<MonteCarloEstimate>> {
    let both = finite_m_rates_both(model, spec)?;
    Ok(match spec.side {
        Side::One => both.one,
        Side::Two => both.two,
    })
}

/// Exceedance rates of both statistics from one set of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct KsRates {
    pub one: Vec<MonteCarloEstimate>,
    pub two: Vec<MonteCarloEstimate>,
}

/// Both sides at once; `spec.side` is ignored.
pub fn finite_m_rates_both(model: &CopulaModel, spec: &CompareSpec) -> Result<KsRates> {
    if spec.m == 0 || spec.replications == 0 {
        return Err(Error::Parameter("sample size and replications must be positive".into()));
    }
    // Surface configuration errors before the parallel section.
    ks_statistics(&model.sample(1, 0), model, &spec.ks)?;
    let nu = spec.us.len();
    let counts = parallel_counts(spec.replications, 2 * nu, spec.workers, |range, acc| {
        for i in range {
            let mut g = rng::stream(spec.seed, i as u64);
            let sample = model.sample_with(&mut g, spec.m);
            let pair = ks_statistics(&sample, model, &spec.ks).expect("validated configuration");
            let (one, two) = acc.split_at_mut(nu);
            for ((a, b), &u) in one.iter_mut().zip(two.iter_mut()).zip(&spec.us) {
                *a += (pair.one.statistic > u) as u64;
                *b += (pair.two.statistic > u) as u64;
            }
        }
    });
    let label = format!("ks {} m={}", model.spec_string(), spec.m);
    let side = |hits: &[u64], side: Side| -> Vec<MonteCarloEstimate> {
        hits.iter()
            .zip(&spec.us)
            .map(|(&h, &u)| {
                MonteCarloEstimate::from_counts(h, spec.replications as u64, u, 0.0, side, vec![spec.seed], label.clone())
            })
            .collect()
    };
    Ok(KsRates { one: side(&counts[..nu], Side::One), two: side(&counts[nu..], Side::Two) })
}

/// Tail law of the limit field: exact for min-stable models, otherwise with
/// the level-set constant.
pub fn limit_law(model: &CopulaModel, side: Side) -> Result<TailLaw> {
    let k = if model.satisfies_min_stability() {
        None
    } else if let Some(k) = model.closed_form_k() {
        Some(k)
    } else {
        Some(compute_k(&LevelSetProfile::build(model)?, &KSpec::default())?.value)
    };
    Ok(TailLaw { n: model.dim(), w: 0.0, k, side })
}

/// Finite-sample exceedance rates of the KS statistic against limit-field
/// rates and the asymptotic law, one row per `u`.
pub fn limit_compare(model: &CopulaModel, spec: &CompareSpec) -> Result<Vec<CompareRow>> {
    let finite = finite_m_rates(model, spec)?;
    let limit_seed = rng::derive(spec.seed, u64::MAX);
    let cfg = McConfig { n_samples: spec.limit.samples, seed: limit_seed, workers: spec.workers };
    let pick = |t: &crate::tail_mc::TailTable| -> Vec<MonteCarloEstimate> {
        (0..spec.us.len()).map(|j| t.get(spec.side, 0, j).clone()).collect()
    };
    let (limit, extrapolated): (Vec<MonteCarloEstimate>, Vec<Option<(f64, f64)>>) = if model.satisfies_min_stability() {
        let bridge = BridgeSampler::uniform(spec.limit.resolution)?;
        let t = table(&bridge as &dyn FieldSampler, &spec.us, &[0.0], &cfg, true)?;
        (pick(&t), vec![None; spec.us.len()])
    } else {
        let sheet = SheetSampler::new(model, spec.limit.resolution)?;
        match spec.limit.stride {
            Some(stride) => {
                let refined = refined(&sheet, &spec.us, 0.0, spec.side, stride, &cfg, true)?;
                let ex = refined.iter().map(|r| Some((r.extrapolated, r.extrapolated_stderr))).collect();
                (refined.into_iter().map(|r| r.fine).collect(), ex)
            }
            None => {
                let t = table(&sheet, &spec.us, &[0.0], &cfg, true)?;
                (pick(&t), vec![None; spec.us.len()])
            }
        }
    };
    let law = limit_law(model, spec.side)?;
    finite
        .into_iter()
        .zip(limit)
        .zip(extrapolated)
        .zip(&spec.us)
        .map(|(((finite, limit), limit_extrapolated), &u)| {
            let asym = if u > 0.0 { Some(asym(&law, u)?.value) } else { None };
            Ok(CompareRow { u, finite, limit, limit_extrapolated, asym })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_examples() {
        let s = [0.2, 0.9, 0.8, 0.1];
        assert_eq!(empirical_f(&s, 2, &[0.5, 1.0]), 0.5);
        assert_eq!(empirical_f(&s, 2, &[0.0, 0.0]), 0.0);
        assert_eq!(empirical_f(&s, 2, &[1.0, 1.0]), 1.0);
        assert_eq!(empirical_f_strict(&s, 2, &[0.8, 1.0]), 0.5);
        assert_eq!(empirical_f(&s, 2, &[0.8, 0.1]), 0.5);
    }

    #[test]
    fn single_point_statistics() {
        let ind = CopulaModel::independence(2).unwrap();
        let pair = ks_statistics(&[0.5, 0.5], &ind, &KsOptions::default()).unwrap();
        assert_eq!(pair.one.statistic, 0.75);
        assert_eq!(pair.one.argmax, vec![0.5, 0.5]);
        // Below (1,1) the closed count still contains the point; the largest
        // deficit is 1/2, next to (0.5, 1) or (1, 0.5).
        assert_eq!(pair.two.statistic, 0.75);
    }

    #[test]
    fn rank_counts_match_direct_counting() {
        let mut c = RankCounts::new(100);
        let ranks = [5usize, 31, 32, 0, 99, 64, 63, 5];
        for &r in &ranks {
            c.add(r);
        }
        for l in 0..100 {
            assert_eq!(c.get(l) as usize, ranks.iter().filter(|&&r| r <= l).count());
        }
    }

    #[test]
    fn higher_dimensions_need_a_lattice() {
        let m = CopulaModel::independence(3).unwrap();
        let s = m.sample(10, 1);
        let opts = KsOptions { lattice: None, ..KsOptions::default() };
        assert!(matches!(ks_one_sided(&s, &m, &opts), Err(Error::Unsupported(_))));
        let r = ks_one_sided(&s, &m, &KsOptions::default()).unwrap();
        assert!((r.bias_bound - 10f64.sqrt() * 3.0 / 64.0).abs() < 1e-15);
    }
}
