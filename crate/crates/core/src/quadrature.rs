//! Gauss rules shared by the pricing, fitting and risk code.
//!
//! Node generation is delegated to `gauss-quad`; the adaptive driver with
//! breakpoint splitting lives here.

use std::f64::consts::PI;
use std::sync::OnceLock;

use gauss_quad::{GaussHermite, GaussLegendre};

use crate::error::{Error, Result};

/// Points per panel of the adaptive driver.
const PANEL_ORDER: usize = 20;
const MAX_DEPTH: u32 = 48;

/// Absolute tolerance used by pricing quadrature.
pub const PRICE_TOLERANCE: f64 = 1e-10;

fn panel_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| legendre_nodes(PANEL_ORDER))
}

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
pub fn legendre_nodes(order: usize) -> Vec<(f64, f64)> {
    let rule = GaussLegendre::new(order.max(2)).expect("order >= 2");
    let mut pairs = rule.into_node_weight_pairs();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Nodes and weights of the probabilists' Gauss-Hermite rule: weights sum to
/// one and integrate against the standard normal density. Ascending.
pub fn normal_hermite_nodes(order: usize) -> Vec<(f64, f64)> {
    if order <= 1 {
        return vec![(0.0, 1.0)];
    }
    let rule = GaussHermite::new(order).expect("order >= 2");
    let scale = PI.sqrt();
    let mut pairs: Vec<(f64, f64)> = rule
        .into_node_weight_pairs()
        .into_iter()
        .map(|(x, w)| (x * std::f64::consts::SQRT_2, w / scale))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Fixed composite Gauss-Legendre rule: `panels` equal panels of `order` nodes.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    points: Vec<(f64, f64)>,
}

impl CompositeRule {
    pub fn new(lo: f64, hi: f64, panels: usize, order: usize) -> Self {
        let base = legendre_nodes(order);
        let width = (hi - lo) / panels as f64;
        let mut points = Vec::with_capacity(panels * base.len());
        for p in 0..panels {
            let a = lo + width * p as f64;
            let half = 0.5 * width;
            let mid = a + half;
            points.extend(base.iter().map(|&(x, w)| (mid + half * x, half * w)));
        }
        Self { points }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.points.iter().map(|&(x, w)| w * f(x)).sum()
    }
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = a + half;
    half * panel_rule()
        .iter()
        .map(|&(x, w)| w * f(mid + half * x))
        .sum::<f64>()
}

fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    worst: &mut f64,
) -> f64 {
    let mid = 0.5 * (a + b);
    let left = panel(f, a, mid);
    let right = panel(f, mid, b);
    let refined = left + right;
    let err = (refined - whole).abs();
    if err <= tol || depth >= MAX_DEPTH || mid <= a || mid >= b {
        if err > tol {
            *worst = worst.max(err);
        }
        return refined;
    }
    adapt(f, a, mid, left, 0.5 * tol, depth + 1, worst)
        + adapt(f, mid, b, right, 0.5 * tol, depth + 1, worst)
}

/// Adaptive Gauss-Legendre integral of `f` over `[lo, hi]`.
///
/// Panels are split at every breakpoint strictly inside the interval, so
/// integrands with kinks or jumps there keep full accuracy. The absolute
/// tolerance is shared across panels in proportion to their width.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, breakpoints: &[f64], tol: f64) -> Result<f64> {
    if !(hi > lo) {
        return Ok(0.0);
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&c| c > lo && c < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    edges.extend(cuts);
    edges.push(hi);

    let span = hi - lo;
    let mut worst = 0.0_f64;
    let mut total = 0.0;
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let share = tol * (b - a) / span;
        let whole = panel(&f, a, b);
        total += adapt(&f, a, b, whole, share, 0, &mut worst);
    }
    if worst > 0.0 {
        return Err(Error::Quadrature {
            requested: tol,
            achieved: worst,
        });
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_weights_normalized() {
        for n in [1, 2, 8, 16, 32, 64] {
            let nodes = normal_hermite_nodes(n);
            let total: f64 = nodes.iter().map(|p| p.1).sum();
            assert!((total - 1.0).abs() < 1e-13, "n={n} total={total}");
        }
    }

    #[test]
    fn hermite_reproduces_normal_moments() {
        let nodes = normal_hermite_nodes(16);
        let m2: f64 = nodes.iter().map(|&(x, w)| w * x * x).sum();
        let m4: f64 = nodes.iter().map(|&(x, w)| w * x.powi(4)).sum();
        assert!((m2 - 1.0).abs() < 1e-13);
        assert!((m4 - 3.0).abs() < 1e-12);
    }

    #[test]
    fn adaptive_handles_kink() {
        let v = integrate(|x: f64| (x - 0.3).abs(), -1.0, 1.0, &[0.3], 1e-13).unwrap();
        let exact = 0.5 * 1.3 * 1.3 + 0.5 * 0.7 * 0.7;
        assert!((v - exact).abs() < 1e-13);
    }

    #[test]
    fn adaptive_sharp_peak() {
        let v = integrate(|x: f64| (-x * x / (2.0 * 1e-4)).exp(), -5.0, 5.0, &[], 1e-12).unwrap();
        let exact = (2.0 * PI * 1e-4).sqrt();
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(integrate(|_| 1.0, 1.0, 1.0, &[], 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn composite_rule_polynomial() {
        let rule = CompositeRule::new(-2.0, 3.0, 4, 8);
        let v = rule.integrate(|x| x.powi(5) - x);
        let exact = (3f64.powi(6) - 2f64.powi(6)) / 6.0 - (9.0 - 4.0) / 2.0;
        assert!((v - exact).abs() < 1e-11);
    }
}
