//! Exact grid simulation of the pinned sheet `W_F = W - F W(1)`.
//!
//! Three samplers share the [`FieldSampler`] interface:
//!
//! * [`GaussianGridFactor`] factors the pinned covariance densely. It is the
//!   reference construction and is capped at a few thousand points.
//! * [`SheetSampler`] draws independent Gaussian increments with variance equal
//!   to the `F`-mass of each grid cell and prefix-sums them. On the grid this
//!   has exactly the law of `W`, at `O(N)` cost per draw.
//! * [`BridgeSampler`] simulates the time-changed Brownian bridge that the
//!   min-stable models reduce to.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::copula::CopulaModel;
use crate::error::{Error, Result};
use crate::rng::{stream, StreamRng};

/// Supremum and infimum of `W_F + F w` over a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremes {
    pub sup: f64,
    pub inf: f64,
}

impl Extremes {
    pub fn abs_sup(&self) -> f64 {
        self.sup.max(-self.inf)
    }
}

/// A simulator of the conditioned field on a fixed grid.
pub trait FieldSampler: Sync {
    /// Length of the scratch buffer required by [`Self::extremes`].
    fn scratch_len(&self) -> usize;

    /// Draws one field and writes its extremes for every conditioning level.
    fn extremes(&self, rng: &mut StreamRng, ws: &[f64], scratch: &mut [f64], out: &mut [Extremes]);

    /// Short description used in reports.
    fn label(&self) -> String;
}

/// Tensor grid `{1/r, ..., 1}^n` in lexicographic order, first axis fastest.
fn grid_point(idx: usize, r: usize, n: usize, out: &mut [f64]) {
    let mut k = idx;
    for c in out.iter_mut().take(n) {
        *c = ((k % r) + 1) as f64 / r as f64;
        k /= r;
    }
}

fn grid_size(r: usize, n: usize, cap: usize) -> Result<usize> {
    let mut total = 1usize;
    for _ in 0..n {
        total = total
            .checked_mul(r)
            .filter(|&t| t <= cap)
            .ok_or_else(|| Error::Parameter(format!("grid {r}^{n} exceeds the cap of {cap} points")))?;
    }
    Ok(total)
}

/// Jitter escalation and size cap for the dense factorization.
#[derive(Debug, Clone)]
pub struct JitterPolicy {
    pub levels: Vec<f64>,
    pub cap: usize,
}

impl Default for JitterPolicy {
    fn default() -> Self {
        Self { levels: vec![0.0, 1e-12, 1e-10, 1e-8], cap: 4096 }
    }
}

/// Dense lower-triangular factor of `R_F(x, y) = F(x ∧ y) - F(x) F(y)` on a grid.
#[derive(Debug, Clone)]
pub struct GaussianGridFactor {
    model: CopulaModel,
    r: usize,
    points: Vec<f64>,
    f_values: Vec<f64>,
    factor: Vec<f64>,
    jitter_used: f64,
    rank: usize,
}

/// Factors the pinned covariance on the `r^n` grid.
pub fn build_factor(model: &CopulaModel, r: usize, policy: &JitterPolicy) -> Result<GaussianGridFactor> {
    if r < 1 {
        return Err(Error::Parameter("resolution must be positive".into()));
    }
    let n = model.dim();
    let size = grid_size(r, n, policy.cap)?;
    let mut points = vec![0.0; size * n];
    for (i, p) in points.chunks_exact_mut(n).enumerate() {
        grid_point(i, r, n, p);
    }
    let f_values: Vec<f64> = points.chunks_exact(n).map(|p| model.eval_unchecked(p)).collect();
    let mut cov = vec![0.0; size * size];
    let mut meet = vec![0.0; n];
    for i in 0..size {
        for j in 0..=i {
            for k in 0..n {
                meet[k] = points[i * n + k].min(points[j * n + k]);
            }
            let c = model.eval_unchecked(&meet) - f_values[i] * f_values[j];
            cov[i * size + j] = c;
            cov[j * size + i] = c;
        }
    }
    let max_diag = (0..size).map(|i| cov[i * size + i]).fold(0.0, f64::max);
    for &jitter in &policy.levels {
        if let Some((factor, pivots)) = cholesky(&cov, size, jitter, max_diag) {
            let threshold = 1e-9f64.max(100.0 * jitter);
            let rank = pivots.iter().filter(|&&p| p > threshold).count();
            return Ok(GaussianGridFactor {
                model: *model,
                r,
                points,
                f_values,
                factor,
                jitter_used: jitter,
                rank,
            });
        }
    }
    Err(Error::Conditioning {
        model: model.spec_string(),
        resolution: r,
        jitter: policy.levels.last().copied().unwrap_or(0.0),
    })
}

/// Cholesky of `cov + jitter I` restricted to rows of nonzero variance,
/// scattered back into a dense lower-triangular factor. Returns the factor
/// and squared pivots, or `None` on breakdown or a pivot below the floor.
fn cholesky(cov: &[f64], size: usize, jitter: f64, max_diag: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let live: Vec<usize> = (0..size).filter(|&i| cov[i * size + i] != 0.0).collect();
    let k = live.len();
    let reduced = DMatrix::from_fn(k, k, |a, b| cov[live[a] * size + live[b]] + if a == b { jitter } else { 0.0 });
    let low = reduced.cholesky()?.unpack();
    let floor = (1e-13 * max_diag).max(0.5 * jitter);
    let mut l = vec![0.0; size * size];
    let mut pivots = vec![0.0; size];
    for a in 0..k {
        let d = low[(a, a)] * low[(a, a)];
        if !(d > floor) {
            return None;
        }
        pivots[live[a]] = d;
        for b in 0..=a {
            l[live[a] * size + live[b]] = low[(a, b)];
        }
    }
    Some((l, pivots))
}

impl GaussianGridFactor {
    pub fn model(&self) -> &CopulaModel {
        &self.model
    }

    pub fn resolution(&self) -> usize {
        self.r
    }

    pub fn len(&self) -> usize {
        self.f_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f_values.is_empty()
    }

    pub fn jitter_used(&self) -> f64 {
        self.jitter_used
    }

    /// Number of pivots well above the jitter level.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let n = self.model.dim();
        &self.points[i * n..(i + 1) * n]
    }

    pub fn f_values(&self) -> &[f64] {
        &self.f_values
    }

    /// Index of the grid point with the given 1-based per-axis indices.
    pub fn index_of(&self, idx: &[usize]) -> usize {
        idx.iter().rev().fold(0, |acc, &i| acc * self.r + (i - 1))
    }

    /// `R_F` between grid points `i` and `j`.
    pub fn covariance(&self, i: usize, j: usize) -> f64 {
        let meet: Vec<f64> = self.point(i).iter().zip(self.point(j)).map(|(a, b)| a.min(*b)).collect();
        self.model.eval_unchecked(&meet) - self.f_values[i] * self.f_values[j]
    }

    /// Largest entrywise deviation of `L L^T` from `R_F`, with the jitter
    /// removed from the diagonal.
    pub fn reconstruction_error(&self) -> f64 {
        let size = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..size {
            for j in 0..=i {
                let dot: f64 = (0..=j).map(|k| self.factor[i * size + k] * self.factor[j * size + k]).sum();
                let mut target = self.covariance(i, j);
                if i == j && target != 0.0 {
                    target += self.jitter_used;
                }
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// One draw of `W_F` at every grid point. `scratch` holds the normals.
    pub fn draw_field(&self, rng: &mut StreamRng, scratch: &mut [f64], out: &mut [f64]) {
        let size = self.len();
        for z in scratch[..size].iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        for i in 0..size {
            let row = &self.factor[i * size..i * size + i + 1];
            out[i] = row.iter().zip(&scratch[..=i]).map(|(a, b)| a * b).sum();
        }
    }

    /// One draw of `max_x (W_F(x) + F(x) w)` from the replicate stream `seed`.
    pub fn sample_sup_conditioned(&self, w: f64, seed: u64) -> f64 {
        let mut scratch = vec![0.0; self.scratch_len()];
        let mut out = [Extremes { sup: 0.0, inf: 0.0 }];
        self.extremes(&mut stream(seed, 0), &[w], &mut scratch, &mut out);
        out[0].sup
    }
}

/// Max and min of `values + slope * c` over all points, in eight lanes so the
/// loop vectorizes.
fn affine_extremes(values: &[f64], slopes: &[f64], c: f64) -> Extremes {
    const LANES: usize = 8;
    let mut hi = [f64::NEG_INFINITY; LANES];
    let mut lo = [f64::INFINITY; LANES];
    let split = values.len() - values.len() % LANES;
    for (vs, fs) in values[..split].chunks_exact(LANES).zip(slopes[..split].chunks_exact(LANES)) {
        for l in 0..LANES {
            let x = vs[l] + fs[l] * c;
            hi[l] = if x > hi[l] { x } else { hi[l] };
            lo[l] = if x < lo[l] { x } else { lo[l] };
        }
    }
    let mut sup = hi.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut inf = lo.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    for (v, f) in values[split..].iter().zip(&slopes[split..]) {
        let x = v + f * c;
        sup = sup.max(x);
        inf = inf.min(x);
    }
    Extremes { sup, inf }
}

fn extremes_from_field(field: &[f64], f_values: &[f64], ws: &[f64], out: &mut [Extremes]) {
    for (o, &w) in out.iter_mut().zip(ws) {
        *o = affine_extremes(field, f_values, w);
    }
}

impl FieldSampler for GaussianGridFactor {
    fn scratch_len(&self) -> usize {
        2 * self.len()
    }

    fn extremes(&self, rng: &mut StreamRng, ws: &[f64], scratch: &mut [f64], out: &mut [Extremes]) {
        let size = self.len();
        let (z, field) = scratch.split_at_mut(size);
        self.draw_field(rng, z, field);
        extremes_from_field(field, &self.f_values, ws, out);
    }

    fn label(&self) -> String {
        format!("dense {} r={}", self.model.spec_string(), self.r)
    }
}

/// Cell-increment simulator of the Brownian sheet based on `F`.
#[derive(Debug, Clone)]
pub struct SheetSampler {
    model: CopulaModel,
    r: usize,
    f_values: Vec<f64>,
    /// `(cell index, standard deviation)` for every cell of positive mass.
    cells: Vec<(u32, f64)>,
}

/// Largest grid handled by [`SheetSampler`].
pub const SHEET_CAP: usize = 1 << 24;

impl SheetSampler {
    pub fn new(model: &CopulaModel, r: usize) -> Result<Self> {
        if r < 1 {
            return Err(Error::Parameter("resolution must be positive".into()));
        }
        let n = model.dim();
        let size = grid_size(r, n, SHEET_CAP)?;
        // F on the (r+1)^n lattice including the zero faces.
        let side = r + 1;
        let full = side.pow(n as u32);
        let mut g = vec![0.0; full];
        let mut p = vec![0.0; n];
        for (idx, v) in g.iter_mut().enumerate() {
            let mut k = idx;
            for c in p.iter_mut() {
                *c = (k % side) as f64 / r as f64;
                k /= side;
            }
            *v = model.eval_unchecked(&p);
        }
        let mut mass = g.clone();
        let mut stride = 1;
        for _ in 0..n {
            for idx in (0..full).rev() {
                if (idx / stride) % side > 0 {
                    mass[idx] -= mass[idx - stride];
                }
            }
            stride *= side;
        }
        let mut f_values = vec![0.0; size];
        let mut cells = Vec::new();
        // Inclusion-exclusion leaves rounding residue on massless cells.
        let tiny = 1e-9 / size as f64;
        for cell in 0..size {
            let mut k = cell;
            let mut full_idx = 0;
            let mut s = 1;
            for _ in 0..n {
                full_idx += ((k % r) + 1) * s;
                k /= r;
                s *= side;
            }
            f_values[cell] = g[full_idx];
            let m = mass[full_idx];
            if m > tiny {
                cells.push((cell as u32, m.sqrt()));
            }
        }
        Ok(Self { model: *model, r, f_values, cells })
    }

    pub fn model(&self) -> &CopulaModel {
        &self.model
    }

    pub fn resolution(&self) -> usize {
        self.r
    }

    pub fn len(&self) -> usize {
        self.f_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f_values.is_empty()
    }

    pub fn f_values(&self) -> &[f64] {
        &self.f_values
    }

    /// Number of cells carrying mass.
    pub fn active_cells(&self) -> usize {
        self.cells.len()
    }

    /// Writes one draw of the unpinned sheet `W` at the grid points.
    pub fn draw_sheet(&self, rng: &mut StreamRng, buf: &mut [f64]) {
        let n = self.model.dim();
        let size = self.len();
        let buf = &mut buf[..size];
        buf.fill(0.0);
        for &(cell, sd) in &self.cells {
            let z: f64 = rng.sample(StandardNormal);
            buf[cell as usize] = sd * z;
        }
        let r = self.r;
        let mut stride = 1;
        for _ in 0..n {
            let block = stride * r;
            for chunk in buf.chunks_exact_mut(block) {
                for idx in stride..block {
                    chunk[idx] += chunk[idx - stride];
                }
            }
            stride = block;
        }
    }

    /// Writes one draw of the pinned field `W_F` at the grid points.
    pub fn draw_pinned(&self, rng: &mut StreamRng, buf: &mut [f64]) {
        self.draw_sheet(rng, buf);
        let size = self.len();
        let top = buf[size - 1];
        for (v, f) in buf[..size].iter_mut().zip(&self.f_values) {
            *v -= f * top;
        }
    }

    /// Extremes on this grid and on the nested coarser grids of resolution
    /// `r / s` for each stride `s` (which must divide `r`), all from one draw.
    /// `out[level * ws.len() + k]` holds level `level`, conditioning level `ws[k]`.
    pub fn nested_extremes(
        &self,
        rng: &mut StreamRng,
        ws: &[f64],
        strides: &[usize],
        scratch: &mut [f64],
        out: &mut [Extremes],
    ) {
        let n = self.model.dim();
        let r = self.r;
        self.draw_sheet(rng, scratch);
        let size = self.len();
        let top = scratch[size - 1];
        for o in out.iter_mut() {
            *o = Extremes { sup: f64::NEG_INFINITY, inf: f64::INFINITY };
        }
        let shifts: Vec<f64> = ws.iter().map(|w| w - top).collect();
        let mut coords = vec![0usize; n];
        for idx in 0..size {
            let v = scratch[idx];
            let f = self.f_values[idx];
            for (level, &s) in strides.iter().enumerate() {
                if s > 1 && !coords.iter().all(|&c| (c + 1) % s == 0) {
                    continue;
                }
                let slot = &mut out[level * ws.len()..(level + 1) * ws.len()];
                for (o, c) in slot.iter_mut().zip(&shifts) {
                    let x = v + f * c;
                    o.sup = o.sup.max(x);
                    o.inf = o.inf.min(x);
                }
            }
            for c in coords.iter_mut() {
                *c += 1;
                if *c < r {
                    break;
                }
                *c = 0;
            }
        }
    }
}

impl FieldSampler for SheetSampler {
    fn scratch_len(&self) -> usize {
        self.len()
    }

    fn extremes(&self, rng: &mut StreamRng, ws: &[f64], scratch: &mut [f64], out: &mut [Extremes]) {
        self.draw_sheet(rng, scratch);
        let size = self.len();
        let top = scratch[size - 1];
        for (o, &w) in out.iter_mut().zip(ws) {
            *o = affine_extremes(&scratch[..size], &self.f_values, w - top);
        }
    }

    fn label(&self) -> String {
        format!("sheet {} r={}", self.model.spec_string(), self.r)
    }
}

/// Pinned Brownian bridge `B_0(t) + w t` observed at fixed times in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct BridgeSampler {
    times: Vec<f64>,
    sd: Vec<f64>,
}

impl BridgeSampler {
    /// Uniform grid `k / r`, `k = 0..=r`.
    pub fn uniform(r: usize) -> Result<Self> {
        if r < 2 {
            return Err(Error::Parameter(format!("bridge resolution must be at least 2, got {r}")));
        }
        Self::with_times((0..=r).map(|k| k as f64 / r as f64).collect())
    }

    /// Arbitrary increasing times; `0` and `1` are added when missing.
    pub fn with_times(mut times: Vec<f64>) -> Result<Self> {
        if times.first() != Some(&0.0) {
            times.insert(0, 0.0);
        }
        if times.last() != Some(&1.0) {
            times.push(1.0);
        }
        if times.windows(2).any(|p| !(p[1] > p[0])) || times.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::Parameter("bridge times must increase strictly within [0,1]".into()));
        }
        let sd = times.windows(2).map(|p| (p[1] - p[0]).sqrt()).collect();
        Ok(Self { times, sd })
    }

    /// Bridge for a min-stable model, whose sheet is `B_0(F(x))`.
    pub fn for_model(model: &CopulaModel, r: usize) -> Result<Self> {
        if !model.satisfies_min_stability() {
            return Err(Error::Dispatch(format!(
                "{model} does not satisfy min-stability; the bridge reduction does not apply"
            )));
        }
        Self::uniform(r)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Writes the pinned path `B_0` at every time into `buf`.
    pub fn draw_path(&self, rng: &mut StreamRng, buf: &mut [f64]) {
        let mut s = 0.0;
        buf[0] = 0.0;
        for (k, sd) in self.sd.iter().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            s += sd * z;
            buf[k + 1] = s;
        }
        let end = s;
        for (v, t) in buf.iter_mut().zip(&self.times) {
            *v -= t * end;
        }
    }
}

/// Points per block in the bridge's block summaries.
const BRIDGE_BLOCK: usize = 64;

impl BridgeSampler {
    fn blocks(&self) -> usize {
        self.times.len().div_ceil(BRIDGE_BLOCK)
    }

    /// Extremes of `path + t c`. Each block is scanned only when its bound
    /// `max path + max t c` can beat the best block endpoint value.
    fn pruned_extremes(&self, path: &[f64], block_hi: &[f64], block_lo: &[f64], c: f64) -> Extremes {
        let t = &self.times;
        let last = path.len() - 1;
        let mut sup = f64::NEG_INFINITY;
        let mut inf = f64::INFINITY;
        for b in 0..block_hi.len() {
            let k = ((b + 1) * BRIDGE_BLOCK - 1).min(last);
            let x = path[k] + t[k] * c;
            sup = sup.max(x);
            inf = inf.min(x);
        }
        for b in 0..block_hi.len() {
            let (a, e) = (b * BRIDGE_BLOCK, ((b + 1) * BRIDGE_BLOCK).min(path.len()));
            let (tc_lo, tc_hi) = if c >= 0.0 { (t[a] * c, t[e - 1] * c) } else { (t[e - 1] * c, t[a] * c) };
            let scan_hi = block_hi[b] + tc_hi > sup;
            let scan_lo = block_lo[b] + tc_lo < inf;
            if scan_hi || scan_lo {
                let inner = affine_extremes(&path[a..e], &t[a..e], c);
                sup = sup.max(inner.sup);
                inf = inf.min(inner.inf);
            }
        }
        Extremes { sup, inf }
    }
}

impl FieldSampler for BridgeSampler {
    fn scratch_len(&self) -> usize {
        self.times.len() + 2 * self.blocks()
    }

    fn extremes(&self, rng: &mut StreamRng, ws: &[f64], scratch: &mut [f64], out: &mut [Extremes]) {
        let len = self.times.len();
        let nb = self.blocks();
        let (path, rest) = scratch.split_at_mut(len);
        let (block_hi, block_lo) = rest[..2 * nb].split_at_mut(nb);
        path[0] = 0.0;
        for z in path[1..].iter_mut() {
            *z = rng.sample(StandardNormal);
        }
        let mut s = 0.0;
        for (v, sd) in path[1..].iter_mut().zip(&self.sd) {
            s += sd * *v;
            *v = s;
        }
        for (b, block) in path.chunks(BRIDGE_BLOCK).enumerate() {
            let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
            for &v in block {
                hi = if v > hi { v } else { hi };
                lo = if v < lo { v } else { lo };
            }
            block_hi[b] = hi;
            block_lo[b] = lo;
        }
        for (o, &w) in out.iter_mut().zip(ws) {
            *o = self.pruned_extremes(path, block_hi, block_lo, w - s);
        }
    }

    fn label(&self) -> String {
        format!("bridge r={}", self.times.len() - 1)
    }
}

/// One draw of `max_t (B_0(t) + w t)` on the uniform `r`-step grid.
pub fn bridge_sup_1d(model: &CopulaModel, r: usize, w: f64, seed: u64) -> Result<f64> {
    let b = BridgeSampler::for_model(model, r)?;
    let mut scratch = vec![0.0; b.scratch_len()];
    let mut out = [Extremes { sup: 0.0, inf: 0.0 }];
    b.extremes(&mut stream(seed, 0), &[w], &mut scratch, &mut out);
    Ok(out[0].sup)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn independence_covariance_entry() {
        let m = CopulaModel::independence(2).unwrap();
        let f = build_factor(&m, 3, &JitterPolicy::default()).unwrap();
        let i = f.index_of(&[1, 1]);
        assert!((f.covariance(i, i) - 8.0 / 81.0).abs() < 1e-15);
        assert_eq!(f.jitter_used(), 0.0);
    }

    #[test]
    fn corner_is_pinned() {
        for m in [CopulaModel::independence(2).unwrap(), CopulaModel::amh(), CopulaModel::lower_frechet()] {
            let f = build_factor(&m, 4, &JitterPolicy::default()).unwrap();
            let corner = f.len() - 1;
            for i in 0..f.len() {
                assert_eq!(f.covariance(i, corner), 0.0);
            }
        }
    }

    #[test]
    fn comonotone_factor_is_low_rank() {
        let m = CopulaModel::upper_frechet(2).unwrap();
        let f = build_factor(&m, 16, &JitterPolicy::default()).unwrap();
        assert!(f.rank() <= 16, "rank {}", f.rank());
        assert!(f.jitter_used() > 0.0);
        assert!(f.reconstruction_error() <= 1e-8 + f.jitter_used());
    }

    #[test]
    fn cap_is_enforced() {
        let m = CopulaModel::independence(2).unwrap();
        assert!(build_factor(&m, 65, &JitterPolicy::default()).is_err());
    }

    #[test]
    fn single_point_grid_returns_w() {
        let m = CopulaModel::independence(2).unwrap();
        let f = build_factor(&m, 1, &JitterPolicy::default()).unwrap();
        for w in [-0.7, 0.0, 1.3] {
            assert_eq!(f.sample_sup_conditioned(w, 3), w);
        }
        let s = SheetSampler::new(&m, 1).unwrap();
        let mut scratch = vec![0.0; 1];
        let mut out = [Extremes { sup: 0.0, inf: 0.0 }];
        s.extremes(&mut stream(1, 1), &[0.4], &mut scratch, &mut out);
        assert!((out[0].sup - 0.4).abs() < 1e-15);
    }

    #[test]
    fn sheet_masses_sum_to_one() {
        for m in [CopulaModel::independence(3).unwrap(), CopulaModel::lower_frechet(), CopulaModel::piecewise_min(0.3, 2).unwrap()] {
            let s = SheetSampler::new(&m, 8).unwrap();
            let total: f64 = s.cells.iter().map(|(_, sd)| sd * sd).sum();
            assert!((total - 1.0).abs() < 1e-12, "{m}: {total}");
        }
        let lf = SheetSampler::new(&CopulaModel::lower_frechet(), 48).unwrap();
        assert_eq!(lf.active_cells(), 48);
    }

    #[test]
    fn bridge_dispatch_and_pinning() {
        assert!(matches!(bridge_sup_1d(&CopulaModel::amh(), 64, 0.0, 1), Err(Error::Dispatch(_))));
        let pm = CopulaModel::piecewise_min(0.5, 2).unwrap();
        let b = BridgeSampler::for_model(&pm, 256).unwrap();
        let mut buf = vec![0.0; 257];
        let mut g = stream(4, 0);
        for _ in 0..100 {
            b.draw_path(&mut g, &mut buf);
            assert_eq!(buf[0], 0.0);
            assert!(buf[256].abs() < 1e-12);
        }
        for seed in 0..100 {
            assert!(bridge_sup_1d(&pm, 256, 0.0, seed).unwrap() >= 0.0);
        }
    }
}
