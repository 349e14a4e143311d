mod common;

use common::*;
use subjprice_core::distributions::{
    maxent_fit, maxent_moments, std_normal_cdf, LogNormalDist, MarketTerms, MomentSpec, SubjectiveDensity,
};

#[test]
fn cdf_matches_integrated_density() {
    let x = 1.959964;
    // Simpson from -12: the mass below is < 2e-33.
    let oracle = simpson(gauss, -12.0, x, 1e-13);
    assert!((oracle - 0.975).abs() < 1e-8);
    assert!((std_normal_cdf(x) - oracle).abs() < 1e-10);
    for x in [-6.0, -2.5, -1.0, -0.3, 0.4, 1.7, 3.3] {
        let oracle = simpson(gauss, -12.0, x, 1e-14);
        assert!((std_normal_cdf(x) - oracle).abs() < 1e-12, "x={x}");
    }
}

#[test]
fn lognormal_pdf_normalizes() {
    for (nu, s) in [(0.0, 1.0), (0.08, 0.2), (4.6, 0.6), (-1.0, 0.05)] {
        let d = LogNormalDist::new(nu, s).unwrap();
        // integrate in log-price: p(x) dx = p(e^y) e^y dy
        let total = simpson(|y: f64| d.pdf(y.exp()).unwrap() * y.exp(), nu - 14.0 * s, nu + 14.0 * s, 1e-12);
        assert!((total - 1.0).abs() < 1e-9, "nu={nu} s={s} total={total}");
    }
}

#[test]
fn lognormal_mode_by_golden_section() {
    let d = LogNormalDist::new(0.08, 0.2).unwrap();
    let argmax = golden_section_max(|x| d.pdf(x).unwrap(), 0.5, 2.0, 1e-10);
    assert!((argmax - (0.08f64 - 0.04).exp()).abs() < 1e-7);
    assert!((d.mode() - argmax).abs() < 1e-7);
}

#[test]
fn partial_moments_against_trapezoid() {
    let d = LogNormalDist::new(0.08, 0.2).unwrap();
    let k: f64 = 1.1;
    // Trapezoid in log-price over (nu - 14 s, ln K]; 2e5 panels put the error well below 1e-9.
    let lo = 0.08 - 14.0 * 0.2;
    let p0 = trapezoid(|y| lognormal_density(0.08, 0.2, y.exp()) * y.exp(), lo, k.ln(), 200_000);
    let p1 = trapezoid(|y| lognormal_density(0.08, 0.2, y.exp()) * y.exp() * y.exp(), lo, k.ln(), 200_000);
    assert!((d.partial_zeroth(k).unwrap() - p0).abs() < 1e-9);
    assert!((d.partial_first(k).unwrap() - p1).abs() < 1e-9);
}

#[test]
fn partial_moments_random_triples() {
    let mut r = rng(11);
    for _ in 0..20 {
        let nu = uniform(&mut r, -1.0, 1.0);
        let s = uniform(&mut r, 0.05, 1.0);
        let k = (nu + uniform(&mut r, -2.0, 2.0) * s).exp();
        let d = LogNormalDist::new(nu, s).unwrap();
        let lo = nu - 14.0 * s;
        let p0 = simpson(|y: f64| gauss((y - nu) / s) / s, lo, k.ln(), 1e-12);
        let p1 = simpson(|y: f64| y.exp() * gauss((y - nu) / s) / s, lo, k.ln(), 1e-12);
        assert!((d.partial_zeroth(k).unwrap() - p0).abs() < 1e-8);
        assert!((d.partial_first(k).unwrap() - p1).abs() < 1e-8);
    }
}

#[test]
fn partial_moments_monotone_in_strike() {
    let d = LogNormalDist::new(0.08, 0.3).unwrap();
    let mut prev = (0.0, 0.0);
    for i in 1..400 {
        let k = i as f64 * 0.01;
        let cur = (d.partial_zeroth(k).unwrap(), d.partial_first(k).unwrap());
        assert!(cur.0 >= prev.0 && cur.1 >= prev.1);
        prev = cur;
    }
}

#[test]
fn expected_return_mean_by_quadrature() {
    let terms = MarketTerms::new(100.0, 0.05, 4.0).unwrap();
    let d = LogNormalDist::from_expected_return(&terms, 0.3).unwrap();
    let (lo, hi) = d.log_support();
    let mean = simpson(|y: f64| y.exp() * d.log_price_pdf(y), lo, hi, 1e-10);
    let target = 100.0 * 0.2f64.exp();
    assert!(((mean - target) / target).abs() < 1e-9);
}

fn skewed_spec() -> MomentSpec {
    // Mean price at the risk-free forward; negatively skewed with fat tails.
    MomentSpec::from_shape(0.1f64.exp(), 0.04, -0.8, 4.5).unwrap()
}

/// Central moments and mean price of a log-return density by Simpson.
fn simpson_moments(pdf: impl Fn(f64) -> f64, lo: f64, hi: f64, x0: f64) -> [f64; 5] {
    let tol = 1e-13;
    let mass = simpson(&pdf, lo, hi, tol);
    let mean_y = simpson(|y| y * pdf(y), lo, hi, tol) / mass;
    let c = |k: i32| simpson(|y| (y - mean_y).powi(k) * pdf(y), lo, hi, tol) / mass;
    let price = x0 * simpson(|y| y.exp() * pdf(y), lo, hi, tol) / mass;
    [mass, price, c(2), c(3), c(4)]
}

#[test]
fn maxent_fit_reproduces_moments_by_independent_quadrature() {
    let spec = skewed_spec();
    let d = maxent_fit(&spec, 1.0).unwrap();
    let (lo, hi) = d.domain();
    let m = simpson_moments(|y| d.log_return_pdf(y), lo, hi, 1.0);
    assert!((m[0] - 1.0).abs() < 1e-8);
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    assert!(rel(m[1], spec.mean_price) < 1e-6);
    assert!(rel(m[2], spec.variance) < 1e-6);
    assert!(rel(m[3], spec.third) < 1e-6);
    assert!(rel(m[4], spec.fourth) < 1e-6);
    assert!(d.lambda()[3] <= 0.0);

    let round = maxent_moments(&d);
    assert!(rel(round.variance, spec.variance) < 1e-6);
    assert!(rel(round.third, spec.third) < 1e-6);
}

#[test]
fn skewed_fit_has_fat_left_tail_and_peak_above_rate() {
    let d = maxent_fit(&skewed_spec(), 1.0).unwrap();
    let (lo, hi) = d.domain();
    let peak = golden_section_max(|y| d.log_return_pdf(y), lo + 0.5, hi - 0.5, 1e-9);
    assert!(peak > 0.1, "peak {peak}");
    let g = LogNormalDist::with_mean(0.1f64.exp(), 0.2).unwrap();
    // Three standard deviations below the centre the maxent density dominates.
    let y = -0.6;
    assert!(d.log_return_pdf(y) > g.log_price_pdf(y));
}

#[test]
fn two_moment_fit_is_lognormal() {
    let v: f64 = 0.04;
    let terms = MarketTerms::new(1.0, 0.1, 1.0).unwrap();
    let spec = MomentSpec::new(terms.forward(), v, 0.0, 3.0 * v * v).unwrap();
    let d = maxent_fit(&spec, 1.0).unwrap();
    let l = d.lambda();
    assert!(l[2].abs() < 1e-7 && l[3].abs() < 1e-7);
    let ln = LogNormalDist::from_expected_return(&terms, 0.2).unwrap();
    let (lo, hi) = d.domain();
    for i in 0..=400 {
        let y = lo + (hi - lo) * i as f64 / 400.0;
        let x = y.exp();
        assert!((d.pdf(x).unwrap() - ln.pdf(x).unwrap()).abs() < 1e-7, "x={x}");
    }
}

#[test]
fn maxent_normalizes() {
    for (skew, kurt) in [(0.0, 3.0), (-0.8, 4.5), (0.5, 3.6), (0.0, 2.2)] {
        let spec = MomentSpec::from_shape(1.05, 0.09, skew, kurt).unwrap();
        let d = maxent_fit(&spec, 1.0).unwrap();
        let (lo, hi) = d.domain();
        let mass = simpson(|y| d.log_return_pdf(y), lo, hi, 1e-13);
        assert!((mass - 1.0).abs() < 1e-8, "skew={skew} kurt={kurt}");
    }
}

#[test]
fn maxent_rejects_degenerate_specs() {
    assert!(MomentSpec::new(1.0, 0.0, 0.0, 0.0).is_err());
    assert!(MomentSpec::new(1.0, -0.1, 0.0, 0.03).is_err());
    assert!(MomentSpec::new(1.0, 0.04, 0.0, 0.0015).is_err());
}
