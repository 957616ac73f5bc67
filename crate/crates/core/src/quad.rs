//! Globally adaptive Gauss–Legendre quadrature on an interval.

use std::collections::BinaryHeap;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};

/// Integrand sample: value plus an error already carried by that value (for
/// nested integrals).
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOutcome {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

pub struct Rule {
    pairs: Vec<(f64, f64)>,
    alt: Vec<Vec<(f64, f64)>>,
}

/// Error level below which further splitting only reshuffles rounding noise.
const ROUNDOFF: f64 = 100.0 * f64::EPSILON;

/// Uniform panels laid down before adaptive splitting starts, so that no
/// single-panel estimate can be accidentally small.
const INITIAL_PANELS: usize = 16;

/// Offsets of the split point used when a node lands on a seam.
const SPLIT_SHIFTS: [f64; 3] = [0.0, 0.0123, -0.0217];

impl Rule {
    pub fn new(order: usize) -> Self {
        let make = |k: usize| {
            GaussLegendre::new(NonZeroUsize::new(k).expect("positive order"))
                .as_node_weight_pairs()
                .to_vec()
        };
        let order = order.max(2);
        Self { pairs: make(order), alt: vec![make(order + 2), make(order + 4)] }
    }

    fn apply<F>(pairs: &[(f64, f64)], a: f64, b: f64, f: &mut F, acc: &mut Acc) -> Result<(f64, f64)>
    where
        F: FnMut(f64) -> Result<Sample>,
    {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let (mut v, mut e) = (0.0, 0.0);
        for &(x, w) in pairs {
            let s = f(mid + half * x)?;
            acc.evaluations += 1;
            v += w * s.value;
            e += w * s.error;
        }
        Ok((v * half, e * half.abs()))
    }
}

struct Acc {
    evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    carried: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == std::cmp::Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error
            .total_cmp(&o.error)
            .then_with(|| o.a.total_cmp(&self.a))
    }
}

fn evaluate_panel<F>(rule: &Rule, a: f64, b: f64, f: &mut F, acc: &mut Acc) -> Result<Panel>
where
    F: FnMut(f64) -> Result<Sample>,
{
    let mut last = None;
    for (attempt, shift) in SPLIT_SHIFTS.iter().enumerate() {
        let coarse_rule = if attempt == 0 { &rule.pairs } else { &rule.alt[attempt - 1] };
        let m = a + (b - a) * (0.5 + shift);
        let res = (|| {
            let (coarse, _) = Rule::apply(coarse_rule, a, b, f, acc)?;
            let (l, el) = Rule::apply(&rule.pairs, a, m, f, acc)?;
            let (r, er) = Rule::apply(&rule.pairs, m, b, f, acc)?;
            Ok(Panel { a, b, value: l + r, error: (l + r - coarse).abs(), carried: el + er })
        })();
        match res {
            Err(Error::Seam(msg)) => last = Some(msg),
            other => return other,
        }
    }
    Err(Error::Integration(format!(
        "seam persists on panel [{a}, {b}] after perturbed retries: {}",
        last.unwrap_or_default()
    )))
}

/// Integrates `f` over `[a, b]`, splitting the worst panel until the summed
/// error estimate is below `max(abs_tol, rel_tol * |value|)`, reaches the
/// rounding floor, or `max_panels` panels exist. Panels are summed in left-to-right order.
pub fn integrate<F>(
    rule: &Rule,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
    mut f: F,
) -> Result<QuadOutcome>
where
    F: FnMut(f64) -> Result<Sample>,
{
    let mut acc = Acc { evaluations: 0 };
    if b <= a {
        return Ok(QuadOutcome { value: 0.0, error: 0.0, evaluations: 0 });
    }
    let mut heap = BinaryHeap::new();
    let start = INITIAL_PANELS.min(max_panels.max(1));
    let width = (b - a) / start as f64;
    for k in 0..start {
        let right = if k + 1 == start { b } else { a + (k + 1) as f64 * width };
        heap.push(evaluate_panel(rule, a + k as f64 * width, right, &mut f, &mut acc)?);
    }
    loop {
        let (value, error) = totals(&heap);
        let floor = ROUNDOFF * value.abs();
        if error <= abs_tol.max(rel_tol * value.abs()).max(floor) || heap.len() >= max_panels.max(1) {
            break;
        }
        let worst = heap.pop().expect("nonempty");
        let m = 0.5 * (worst.a + worst.b);
        heap.push(evaluate_panel(rule, worst.a, m, &mut f, &mut acc)?);
        heap.push(evaluate_panel(rule, m, worst.b, &mut f, &mut acc)?);
    }
    let (value, error) = totals(&heap);
    Ok(QuadOutcome { value, error, evaluations: acc.evaluations })
}

fn totals(heap: &BinaryHeap<Panel>) -> (f64, f64) {
    let mut panels: Vec<&Panel> = heap.iter().collect();
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let value = panels.iter().map(|p| p.value).sum();
    let error = panels.iter().map(|p| p.error + p.carried).sum();
    (value, error)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain(v: f64) -> Result<Sample> {
        Ok(Sample { value: v, error: 0.0 })
    }

    #[test]
    fn integrates_smooth_and_kinked_functions() {
        let rule = Rule::new(8);
        let r = integrate(&rule, 0.0, 1.0, 1e-13, 0.0, 1000, |x| plain(x.exp())).unwrap();
        assert!((r.value - (1f64.exp() - 1.0)).abs() < 1e-13);
        let kink = 1.0 / 3f64.sqrt();
        let r = integrate(&rule, 0.0, 1.0, 1e-10, 0.0, 4000, |x| plain((x - kink).abs())).unwrap();
        let exact = 0.5 * (kink * kink + (1.0 - kink) * (1.0 - kink));
        assert!((r.value - exact).abs() < 1e-10);
        assert!(r.error < 1e-10);
    }

    #[test]
    fn retries_past_a_seam_node() {
        let rule = Rule::new(8);
        let bad = 0.5 + 0.5 * rule.pairs[0].0;
        let mut hits = 0;
        let r = integrate(&rule, 0.0, 1.0, 1e-12, 0.0, 1, |x| {
            if x == bad {
                hits += 1;
                Err(Error::Seam("test".into()))
            } else {
                plain(x * x)
            }
        })
        .unwrap();
        assert!(hits >= 1);
        assert!((r.value - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn persistent_seam_is_reported() {
        let rule = Rule::new(4);
        let r = integrate(&rule, 0.0, 1.0, 1e-12, 0.0, 100, |_| -> Result<Sample> {
            Err(Error::Seam("everywhere".into()))
        });
        assert!(matches!(r, Err(Error::Integration(_))));
    }
}
