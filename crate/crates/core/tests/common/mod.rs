//! Independent numerical oracles for the integration tests.
//!
//! Nothing here calls into the library's quadrature or closed forms: the
//! integrators are plain adaptive Simpson and trapezoid rules, and the
//! densities are written out from their definitions.

#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subjprice_core::portfolio::{Instrument, RiskLimits};
use subjprice_core::pricing::PayoffKind;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * r.random::<f64>()
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    assert!(delta.is_finite(), "non-finite integrand on [{a}, {b}]");
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson with Richardson correction on `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    // Seed with a fixed subdivision so narrow peaks are not missed.
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == pieces { b } else { lo + h };
            let fa = f(lo);
            let fb = f(hi);
            let fm = f(0.5 * (lo + hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            simpson_step(&f, lo, hi, fa, fm, fb, whole, tol / pieces as f64, 40)
        })
        .sum()
}

/// Simpson over consecutive pieces split at `cuts`.
pub fn simpson_split<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cuts: &[f64], tol: f64) -> f64 {
    let mut edges = vec![a];
    let mut inner: Vec<f64> = cuts.iter().copied().filter(|&c| c > a && c < b).collect();
    inner.sort_by(f64::total_cmp);
    edges.extend(inner);
    edges.push(b);
    edges.windows(2).map(|w| simpson(&f, w[0], w[1], tol)).sum()
}

/// Composite trapezoid with `n` panels.
pub fn trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + h * i as f64)).sum();
    h * (0.5 * (f(a) + f(b)) + inner)
}

/// Maximizer of a unimodal function on `[a, b]`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while (b - a).abs() > tol {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    0.5 * (a + b)
}

pub fn gauss(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Log-normal density of the price written out from its definition.
pub fn lognormal_density(nu: f64, sigma_hat: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let z = (x.ln() - nu) / sigma_hat;
    gauss(z) / (x * sigma_hat)
}

/// Payoff written out independently of the library.
#[derive(Debug, Clone, Copy)]
pub enum Pay {
    Call,
    Put,
    BinCall,
    BinPut,
}

pub fn pay(kind: Pay, k: f64, x: f64) -> f64 {
    match kind {
        Pay::Call => (x - k).max(0.0),
        Pay::Put => (k - x).max(0.0),
        Pay::BinCall => {
            if x > k {
                1.0
            } else {
                0.0
            }
        }
        Pay::BinPut => {
            if x < k {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// `e^{-rt} E[f(X)]` for the risk-free-mean log-normal, by Simpson in the
/// standardized log-price `z`, with `x phi(z)` formed in log space so large
/// `sigma` cannot overflow.
pub fn discounted_expectation(x0: f64, r: f64, t: f64, sigma: f64, kind: Pay, k: f64, tol: f64) -> f64 {
    let sh = sigma * t.sqrt();
    let nu = x0.ln() + r * t - 0.5 * sh * sh;
    let zk = (k.ln() - nu) / sh;
    let ln_root = 0.5 * (2.0 * PI).ln();
    let f = |z: f64| {
        let y = nu + sh * z;
        let xphi = (y - 0.5 * z * z - ln_root).exp();
        let kphi = k * gauss(z);
        match kind {
            Pay::Call => (xphi - kphi).max(0.0),
            Pay::Put => (kphi - xphi).max(0.0),
            Pay::BinCall => if z > zk { gauss(z) } else { 0.0 },
            Pay::BinPut => if z < zk { gauss(z) } else { 0.0 },
        }
    };
    (-r * t).exp() * simpson_split(f, -14.0, sh + 14.0, &[zk], tol)
}

/// Brute-force double integral over (sigma, x) of a payoff under a
/// log-normal belief on sigma: outer Simpson in ln sigma, inner Simpson in
/// log-price.
pub fn double_integral_price(
    x0: f64,
    r: f64,
    t: f64,
    mu_ln: f64,
    s_ln: f64,
    kind: Pay,
    k: f64,
) -> f64 {
    let outer = |z: f64| {
        let sigma = (mu_ln + s_ln * z).exp();
        gauss(z) * discounted_expectation(x0, r, t, sigma, kind, k, 1e-11)
    };
    simpson(outer, -8.5, 8.5, 1e-10)
}

fn pay_of(k: PayoffKind) -> Pay {
    match k {
        PayoffKind::EuropeanCall => Pay::Call,
        PayoffKind::EuropeanPut => Pay::Put,
        PayoffKind::BinaryCall => Pay::BinCall,
        PayoffKind::BinaryPut => Pay::BinPut,
    }
}

/// Terminal P&L written out from scratch.
pub fn pnl(counts: &[f64], inst: &[Instrument], carry: f64, x: f64) -> f64 {
    counts
        .iter()
        .zip(inst)
        .map(|(n, i)| n * (pay(pay_of(i.payoff.kind()), i.payoff.strike(), x) - carry * i.market_value))
        .sum()
}

/// Loss probability and shortfall under a log-normal `(nu, s)` by Simpson,
/// split at every strike and at every sign change of the P&L found by a
/// fine scan plus bisection.
pub fn oracle_measures(counts: &[f64], inst: &[Instrument], carry: f64, nu: f64, s: f64) -> (f64, f64) {
    let (lo, hi) = (nu - 14.0 * s, nu + 14.0 * s);
    let f = |y: f64| pnl(counts, inst, carry, y.exp());
    let mut cuts: Vec<f64> = inst.iter().map(|i| i.payoff.strike().ln()).collect();
    let n = 4000;
    let h = (hi - lo) / n as f64;
    for j in 0..n {
        let (mut a, mut b) = (lo + h * j as f64, lo + h * (j + 1) as f64);
        let (fa, fb) = (f(a), f(b));
        if fa == 0.0 || fb == 0.0 || fa.signum() == fb.signum() {
            continue;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if f(m).signum() == fa.signum() {
                a = m;
            } else {
                b = m;
            }
        }
        cuts.push(0.5 * (a + b));
    }
    let dens = |y: f64| gauss((y - nu) / s) / s;
    let p = simpson_split(|y| if f(y) < 0.0 { dens(y) } else { 0.0 }, lo, hi, &cuts, 1e-13);
    let l = simpson_split(|y| (-f(y)).max(0.0) * dens(y), lo, hi, &cuts, 1e-13);
    (p, if p > 0.0 { l / p } else { 0.0 })
}

/// Exhaustive enumeration of the grid `res^m` over `[lo, hi]` per axis
/// (first axis slowest), keeping the admissible point with the largest
/// objective and, among ties, the smallest norm.
pub fn brute_force(
    inst: &[Instrument],
    limits: &RiskLimits,
    (lo, hi): (f64, f64),
    res: usize,
    carry: f64,
    nu: f64,
    s: f64,
) -> Option<Vec<f64>> {
    let axis = |i: usize| if i + 1 == res { hi } else { lo + (hi - lo) * i as f64 / (res - 1) as f64 };
    let m = inst.len();
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for flat in 0..res.pow(m as u32) {
        let mut c = vec![0.0; m];
        let mut rem = flat;
        for j in (0..m).rev() {
            c[j] = axis(rem % res);
            rem /= res;
        }
        let (p, es) = oracle_measures(&c, inst, carry, nu, s);
        if p > limits.max_loss_probability || es > limits.max_shortfall {
            continue;
        }
        let obj: f64 = c.iter().zip(inst).map(|(n, i)| n * (i.subjective_value - i.market_value)).sum();
        let norm: f64 = c.iter().map(|x| x * x).sum();
        let take = match &best {
            None => true,
            Some((bo, bn, _)) => obj > *bo || (obj == *bo && norm < *bn),
        };
        if take {
            best = Some((obj, norm, c));
        }
    }
    best.map(|b| b.2)
}
