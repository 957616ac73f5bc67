//! Closed-form tail laws and bound series.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    One,
    Two,
}

impl Side {
    pub fn as_str(&self) -> &'static str {
        match self {
            Side::One => "one",
            Side::Two => "two",
        }
    }
}

/// Parameters of a tail formula. `k = None` denotes the exact law of the
/// min-stable models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailLaw {
    pub n: usize,
    pub w: f64,
    pub k: Option<f64>,
    pub side: Side,
}

impl TailLaw {
    pub fn new(n: usize, w: f64, k: Option<f64>, side: Side) -> Self {
        Self { n, w, k, side }
    }

    /// 2 when `w = 0`, else 1.
    pub fn c_factor(&self) -> f64 {
        if self.w == 0.0 {
            2.0
        } else {
            1.0
        }
    }
}

/// A formula value together with its interpretation flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LawValue {
    pub value: f64,
    /// The raw value exceeds 1, so it is an asymptotic equivalent only.
    pub not_a_probability: bool,
    /// The value was clamped to 1.
    pub clamped: bool,
}

impl LawValue {
    fn raw(value: f64) -> Self {
        Self { value, not_a_probability: value > 1.0, clamped: false }
    }
}

fn positive_u(u: f64) -> Result<()> {
    if u > 0.0 && u.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("threshold u must be positive, got {u}")))
    }
}

/// `K u^{2(n-1)} exp(-2u^2 + 2uw)`; for the exact law `exp(-2u^2 + 2uw)`.
pub fn one_sided_asym(law: &TailLaw, u: f64) -> Result<LawValue> {
    positive_u(u)?;
    let expo = (-2.0 * u * u + 2.0 * u * law.w).exp();
    Ok(match law.k {
        Some(k) => LawValue::raw(k * u.powi(2 * (law.n as i32 - 1)) * expo),
        None => exact_bridge_law(u, law.w),
    })
}

/// `exp(-2u^2 + 2uw)`, clamped to 1 when `u <= w`.
pub fn exact_bridge_law(u: f64, w: f64) -> LawValue {
    let v = (-2.0 * u * u + 2.0 * u * w).exp();
    if v > 1.0 {
        LawValue { value: 1.0, not_a_probability: false, clamped: true }
    } else {
        LawValue { value: v, not_a_probability: false, clamped: false }
    }
}

/// `c` times the one-sided value at `|w|`; the `-|w|` term is dropped.
pub fn two_sided_asym(law: &TailLaw, u: f64) -> Result<LawValue> {
    positive_u(u)?;
    let c = law.c_factor();
    let mirrored = TailLaw { w: law.w.abs(), side: Side::One, ..*law };
    let expo = (-2.0 * u * u + 2.0 * u * mirrored.w).exp();
    let base = match law.k {
        Some(k) => k * u.powi(2 * (law.n as i32 - 1)) * expo,
        None => expo,
    };
    Ok(LawValue::raw(c * base))
}

/// Dispatches on `law.side`.
pub fn asym(law: &TailLaw, u: f64) -> Result<LawValue> {
    match law.side {
        Side::One => one_sided_asym(law, u),
        Side::Two => two_sided_asym(law, u),
    }
}

/// Two-sided law of the pinned bridge, `P(sup |B_0| > u) =
/// 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 u^2)`: the classical Kolmogorov tail.
pub fn kolmogorov_tail(u: f64) -> f64 {
    if u <= 0.0 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * u * u).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Exact law of the min-stable models on the given side. The two-sided
/// crossing probability has a closed form here only for `w = 0`.
pub fn exact_law(u: f64, w: f64, side: Side) -> Option<f64> {
    match side {
        Side::One => Some(exact_bridge_law(u, w).value),
        Side::Two if w == 0.0 => Some(kolmogorov_tail(u)),
        Side::Two => None,
    }
}

/// Partial sum of `sum_{i>=1} (8 i^2 u^2 - 2) exp(-2 i^2 u^2)`, stopping once
/// a term falls below 1e-300.
pub fn upper_bound_series(u: f64, terms: usize) -> Result<f64> {
    positive_u(u)?;
    if terms == 0 {
        return Err(Error::Domain("upper bound series needs at least one term".into()));
    }
    let mut sum = 0.0;
    for i in 1..=terms {
        let ii = (i * i) as f64;
        let decay = (-2.0 * ii * u * u).exp();
        if decay < 1e-300 {
            break;
        }
        sum += (8.0 * ii * u * u - 2.0) * decay;
    }
    Ok(sum)
}

/// `exp(-2u^2 + 2uw) sum_{i<n} (2u^2 - 2uw)^i / i!`, valid for `u > w`.
pub fn lower_bound_series(n: usize, u: f64, w: f64) -> Result<f64> {
    positive_u(u)?;
    if u <= w {
        return Err(Error::Domain(format!("lower bound requires u > w, got u={u}, w={w}")));
    }
    let x = 2.0 * u * u - 2.0 * u * w;
    let mut term = 1.0;
    let mut sum = 0.0;
    for i in 0..n {
        if i > 0 {
            term *= x / i as f64;
        }
        sum += term;
    }
    Ok((-x).exp() * sum)
}

/// Standard normal survival function.
pub fn psi(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// `(prod box)(prod c_vec) sqrt(pi/b) exp(c^2/(4b)) u^{2n-1} Psi(u)` with
/// `n = c_vec.len()`.
pub fn local_asym_lemma(b: f64, c: f64, c_vec: &[f64], box_lengths: &[f64], u: f64) -> Result<f64> {
    if !(b > 0.0) {
        return Err(Error::Domain(format!("b must be positive, got {b}")));
    }
    positive_u(u)?;
    if c_vec.iter().chain(box_lengths).any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("slopes and box lengths must be positive".into()));
    }
    let n = c_vec.len() as i32;
    let pb: f64 = box_lengths.iter().product();
    let pc: f64 = c_vec.iter().product();
    Ok(pb * pc * (PI / b).sqrt() * (c * c / (4.0 * b)).exp() * u.powi(2 * n - 1) * psi(u))
}
