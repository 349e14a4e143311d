//! Hedge prescriptions reconstructed from the pricing functions.
//!
//! Deltas are reported as `dV/dS`; the hedge holding is its negation.

use crate::distributions::{std_normal_cdf, std_normal_pdf, MarketTerms};
use crate::error::{invalid, Result};
use crate::pricing::{d1_d2, PayoffKind, PayoffSpec};
use crate::uncertain_vol::{marginal_price, vol_quadrature, VolBelief, VolNode};

/// Relative bump for the central differences.
pub const DEFAULT_BUMP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeliefGreeks {
    pub d_mu_ln: f64,
    pub d_s_ln: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HedgeReport {
    pub value: f64,
    pub dv_ds: f64,
    /// Units of the underlying to hold: `-dV/dS`.
    pub hedge_units: f64,
    pub belief_sensitivities: Option<BeliefGreeks>,
}

/// Analytic `dV/dS` of the closed-form price.
///
/// In the zero-variance limit calls and puts have step deltas; binaries have
/// zero delta away from the forward and none at it.
pub fn bs_delta(terms: &MarketTerms, sigma: f64, payoff: &PayoffSpec) -> Result<f64> {
    let k = payoff.strike();
    if sigma == 0.0 || terms.expiry() == 0.0 {
        let f = terms.forward();
        let step = if f > k { 1.0 } else if f < k { 0.0 } else { 0.5 };
        return match payoff.kind() {
            PayoffKind::EuropeanCall => Ok(step),
            PayoffKind::EuropeanPut => Ok(step - 1.0),
            _ if f != k => Ok(0.0),
            kind => Err(invalid("spot", format!("{kind} delta is unbounded at the forward without variance"))),
        };
    }
    let d = d1_d2(terms, sigma, k)?;
    let binary = terms.discount() * std_normal_pdf(d.d2) / (terms.spot() * sigma * terms.expiry().sqrt());
    Ok(match payoff.kind() {
        PayoffKind::EuropeanCall => std_normal_cdf(d.d1),
        PayoffKind::EuropeanPut => std_normal_cdf(d.d1) - 1.0,
        PayoffKind::BinaryCall => binary,
        PayoffKind::BinaryPut => -binary,
    })
}

pub fn marginal_delta_on(terms: &MarketTerms, payoff: &PayoffSpec, nodes: &[VolNode]) -> Result<f64> {
    nodes
        .iter()
        .try_fold(0.0, |acc, n| Ok(acc + n.weight * bs_delta(terms, n.sigma, payoff)?))
}

/// Belief-weighted mixture of closed-form deltas over the same nodes as
/// [`marginal_price`].
pub fn marginal_delta(terms: &MarketTerms, payoff: &PayoffSpec, belief: &VolBelief) -> Result<f64> {
    marginal_delta_on(terms, payoff, &vol_quadrature(belief))
}

fn bump_size(value: f64, relative: f64) -> f64 {
    relative * value.abs().max(1.0)
}

/// Central difference of `price` with respect to spot, bump `relative * x0`.
pub fn spot_difference(
    terms: &MarketTerms,
    relative: f64,
    price: impl Fn(&MarketTerms) -> Result<f64>,
) -> Result<f64> {
    let h = relative * terms.spot();
    let up = price(&terms.with_spot(terms.spot() + h)?)?;
    let down = price(&terms.with_spot(terms.spot() - h)?)?;
    Ok((up - down) / (2.0 * h))
}

/// Central differences of [`marginal_price`] in `mu_ln` and `s_ln`.
pub fn belief_greeks(terms: &MarketTerms, payoff: &PayoffSpec, belief: &VolBelief) -> Result<BeliefGreeks> {
    belief_greeks_with_bump(terms, payoff, belief, DEFAULT_BUMP)
}

/// As [`belief_greeks`] with an explicit relative bump. Bumps are
/// `relative * max(|p|, 1)` for `mu_ln` and `relative * s_ln` for `s_ln`.
pub fn belief_greeks_with_bump(
    terms: &MarketTerms,
    payoff: &PayoffSpec,
    belief: &VolBelief,
    relative: f64,
) -> Result<BeliefGreeks> {
    if !(belief.s_ln() > 0.0) {
        return Err(invalid("s_ln", "belief greeks need a positive s_ln"));
    }
    let h_mu = bump_size(belief.mu_ln(), relative);
    let up = marginal_price(terms, payoff, &belief.with_mu_ln(belief.mu_ln() + h_mu)?)?;
    let down = marginal_price(terms, payoff, &belief.with_mu_ln(belief.mu_ln() - h_mu)?)?;
    let d_mu_ln = (up - down) / (2.0 * h_mu);

    let h_s = relative * belief.s_ln();
    let up = marginal_price(terms, payoff, &belief.with_s_ln(belief.s_ln() + h_s)?)?;
    let down = marginal_price(terms, payoff, &belief.with_s_ln(belief.s_ln() - h_s)?)?;
    let d_s_ln = (up - down) / (2.0 * h_s);

    Ok(BeliefGreeks { d_mu_ln, d_s_ln })
}

pub fn hedge_report(terms: &MarketTerms, payoff: &PayoffSpec, belief: &VolBelief) -> Result<HedgeReport> {
    let nodes = vol_quadrature(belief);
    let value = crate::uncertain_vol::marginal_price_on(terms, payoff, &nodes)?;
    let dv_ds = marginal_delta_on(terms, payoff, &nodes)?;
    let belief_sensitivities = if belief.s_ln() > 0.0 {
        Some(belief_greeks(terms, payoff, belief)?)
    } else {
        None
    };
    Ok(HedgeReport {
        value,
        dv_ds,
        hedge_units: -dv_ds,
        belief_sensitivities,
    })
}
