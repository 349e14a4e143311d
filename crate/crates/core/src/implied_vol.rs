//! Inversion of closed-form prices to implied volatility, and the skew that a
//! volatility belief induces.

use rayon::prelude::*;

use crate::distributions::MarketTerms;
use crate::error::{ensure_finite, invalid, Error, Result};
use crate::pricing::{closed_form_price, d1_d2, PayoffKind, PayoffSpec};
use crate::distributions::std_normal_pdf;
use crate::uncertain_vol::{check_strikes, marginal_price_on, vol_quadrature, VolBelief};

pub const SIGMA_MIN: f64 = 1e-8;
pub const SIGMA_MAX: f64 = 10.0;
const MAX_ITERATIONS: usize = 200;
const PRICE_TOLERANCE: f64 = 1e-13;

/// `dV/dsigma` for calls and puts: `x0 phi(d1) sqrt(t)`.
pub fn vega(terms: &MarketTerms, sigma: f64, strike: f64) -> Result<f64> {
    let d = d1_d2(terms, sigma, strike)?;
    Ok(terms.spot() * std_normal_pdf(d.d1) * terms.expiry().sqrt())
}

/// Arbitrage bounds `(lower, upper)` of a call or put price.
pub fn price_band(terms: &MarketTerms, payoff: &PayoffSpec) -> Result<(f64, f64)> {
    let k_df = payoff.strike() * terms.discount();
    let x0 = terms.spot();
    match payoff.kind() {
        PayoffKind::EuropeanCall => Ok(((x0 - k_df).max(0.0), x0)),
        PayoffKind::EuropeanPut => Ok(((k_df - x0).max(0.0), k_df)),
        kind => Err(invalid("kind", format!("implied volatility is not defined for {kind}"))),
    }
}

/// Annualized volatility at which the closed form reprices `target`.
///
/// Safeguarded Newton on the vega, falling back to bisection whenever a step
/// leaves the current bracket `[1e-8, 10]`.
pub fn implied_vol(terms: &MarketTerms, payoff: &PayoffSpec, target: f64) -> Result<f64> {
    ensure_finite("target_price", target)?;
    if !(terms.expiry() > 0.0) {
        return Err(invalid("expiry", "must be positive to imply a volatility"));
    }
    let (lower, upper) = price_band(terms, payoff)?;
    if !(target > lower && target < upper) {
        return Err(Error::OutOfBand { target, lower, upper });
    }
    let price = |s: f64| closed_form_price(terms, s, payoff);
    let mut lo = SIGMA_MIN;
    let mut hi = SIGMA_MAX;
    let f_lo = price(lo)? - target;
    let f_hi = price(hi)? - target;
    if f_lo > 0.0 {
        return Err(Error::OutOfBand { target, lower: f_lo + target, upper });
    }
    if f_hi < 0.0 {
        return Err(Error::OutOfBand { target, lower, upper: f_hi + target });
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }

    let mut sigma = initial_guess(terms, payoff.strike()).clamp(lo, hi);
    for _ in 0..MAX_ITERATIONS {
        let diff = price(sigma)? - target;
        if diff.abs() <= PRICE_TOLERANCE {
            return Ok(sigma);
        }
        if diff > 0.0 {
            hi = sigma;
        } else {
            lo = sigma;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(sigma);
        }
        let v = vega(terms, sigma, payoff.strike())?;
        let newton = sigma - diff / v;
        sigma = if v > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::NonConvergence {
        solver: "implied_vol",
        iterations: MAX_ITERATIONS,
        residual: price(sigma)? - target,
    })
}

/// Point of inflection of the price in sigma; a reliable Newton start.
fn initial_guess(terms: &MarketTerms, strike: f64) -> f64 {
    let m = (terms.forward() / strike).ln().abs();
    ((2.0 * m).sqrt() / terms.expiry().sqrt()).max(0.2)
}

/// Which option is inverted at each strike.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SkewQuote {
    /// Puts at or below the forward, calls above it.
    #[default]
    OutOfTheMoney,
    Puts,
    Calls,
}

impl SkewQuote {
    fn kind(&self, strike: f64, forward: f64) -> PayoffKind {
        match self {
            SkewQuote::Puts => PayoffKind::EuropeanPut,
            SkewQuote::Calls => PayoffKind::EuropeanCall,
            SkewQuote::OutOfTheMoney if strike <= forward => PayoffKind::EuropeanPut,
            SkewQuote::OutOfTheMoney => PayoffKind::EuropeanCall,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewPoint {
    pub strike: f64,
    pub implied_sigma: f64,
    pub price: f64,
    pub kind: PayoffKind,
}

/// Implied volatilities of the belief-marginalized prices across `strikes`.
pub fn skew_curve(
    terms: &MarketTerms,
    belief: &VolBelief,
    strikes: &[f64],
    quote: SkewQuote,
) -> Result<Vec<SkewPoint>> {
    check_strikes(strikes)?;
    let nodes = vol_quadrature(belief);
    let forward = terms.forward();
    strikes
        .par_iter()
        .map(|&k| {
            let payoff = PayoffSpec::new(quote.kind(k, forward), k)?;
            let price = marginal_price_on(terms, &payoff, &nodes)?;
            Ok(SkewPoint {
                strike: k,
                implied_sigma: implied_vol(terms, &payoff, price)?,
                price,
                kind: payoff.kind(),
            })
        })
        .collect()
}
