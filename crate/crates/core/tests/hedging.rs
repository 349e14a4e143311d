mod common;

use common::*;
use subjprice_core::distributions::MarketTerms;
use subjprice_core::hedging::{
    belief_greeks, belief_greeks_with_bump, bs_delta, hedge_report, marginal_delta, spot_difference,
};
use subjprice_core::pricing::{closed_form_price, PayoffKind, PayoffSpec};
use subjprice_core::uncertain_vol::{marginal_price, vol_quadrature, VolBelief};

const KINDS: [PayoffKind; 4] = [
    PayoffKind::EuropeanCall,
    PayoffKind::EuropeanPut,
    PayoffKind::BinaryCall,
    PayoffKind::BinaryPut,
];

#[test]
fn reference_put_delta() {
    let t = MarketTerms::new(1.0, 0.1, 1.0).unwrap();
    let d = bs_delta(&t, 0.2, &PayoffSpec::put(1.1).unwrap()).unwrap();
    assert!((d - -0.4508757387154708).abs() < 1e-14);
}

#[test]
fn analytic_deltas_match_differences() {
    let mut r = rng(17);
    for i in 0..100 {
        let x0 = uniform(&mut r, 1.0, 100.0);
        let rate = uniform(&mut r, 0.0, 0.1);
        let t = uniform(&mut r, 0.25, 2.0);
        let sigma = uniform(&mut r, 0.1, 0.6);
        let k = x0 * uniform(&mut r, 0.8, 1.25);
        let terms = MarketTerms::new(x0, rate, t).unwrap();
        let p = PayoffSpec::new(KINDS[i % 4], k).unwrap();
        let exact = bs_delta(&terms, sigma, &p).unwrap();
        let fd = spot_difference(&terms, 1e-4, |m| closed_form_price(m, sigma, &p)).unwrap();
        assert!(((exact - fd) / exact).abs() < 1e-6, "{:?} exact={exact} fd={fd}", p.kind());
    }
}

#[test]
fn marginal_delta_matches_difference() {
    let terms = MarketTerms::new(1.0, 0.1, 1.0).unwrap();
    let b = VolBelief::from_median(0.2, 0.5, 32).unwrap();
    for kind in KINDS {
        let p = PayoffSpec::new(kind, 1.05).unwrap();
        let exact = marginal_delta(&terms, &p, &b).unwrap();
        let fd = spot_difference(&terms, 1e-4, |m| marginal_price(m, &p, &b)).unwrap();
        assert!(((exact - fd) / exact).abs() < 1e-6);
    }
}

#[test]
fn mixture_identity() {
    let terms = MarketTerms::new(1.0, 0.1, 1.0).unwrap();
    let b = VolBelief::from_median(0.2, 0.5, 32).unwrap();
    for kind in KINDS {
        let p = PayoffSpec::new(kind, 0.95).unwrap();
        let mixed: f64 = vol_quadrature(&b)
            .iter()
            .map(|n| n.weight * bs_delta(&terms, n.sigma, &p).unwrap())
            .sum();
        assert!((marginal_delta(&terms, &p, &b).unwrap() - mixed).abs() <= 1e-14);
    }
}

#[test]
fn belief_greeks_stable_under_halving() {
    let terms = MarketTerms::new(1.0, 0.1, 1.0).unwrap();
    let b = VolBelief::from_median(0.2, 0.5, 32).unwrap();
    let p = PayoffSpec::put(0.9).unwrap();
    let g1 = belief_greeks_with_bump(&terms, &p, &b, 1e-4).unwrap();
    let g2 = belief_greeks_with_bump(&terms, &p, &b, 5e-5).unwrap();
    assert!((g1.d_mu_ln - g2.d_mu_ln).abs() < 1e-6);
    assert!((g1.d_s_ln - g2.d_s_ln).abs() < 1e-6);
    // OTM put value rises with uncertainty about sigma and with its level.
    assert!(g1.d_mu_ln > 0.0 && g1.d_s_ln > 0.0);
}

#[test]
fn far_otm_sensitivities_vanish() {
    let terms = MarketTerms::new(1.0, 0.05, 0.25).unwrap();
    let b = VolBelief::from_median(0.1, 0.1, 32).unwrap();
    let p = PayoffSpec::call(3.0).unwrap();
    let r = hedge_report(&terms, &p, &b).unwrap();
    assert!(r.value.abs() < 1e-10);
    assert!(r.dv_ds.abs() < 1e-10);
    let g = r.belief_sensitivities.unwrap();
    assert!(g.d_mu_ln.abs() < 1e-10 && g.d_s_ln.abs() < 1e-10);
}

#[test]
fn hedge_units_oppose_delta() {
    let terms = MarketTerms::new(1.0, 0.1, 1.0).unwrap();
    let b = VolBelief::from_median(0.2, 0.0, 1).unwrap();
    let p = PayoffSpec::put(1.1).unwrap();
    let r = hedge_report(&terms, &p, &b).unwrap();
    assert_eq!(r.hedge_units, -r.dv_ds);
    assert!(r.belief_sensitivities.is_none());
    assert!(belief_greeks(&terms, &p, &b).is_err());
}
