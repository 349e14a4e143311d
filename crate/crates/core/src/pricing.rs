//! European payoffs valued as discounted expectations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{std_normal_cdf, MarketTerms, SubjectiveDensity};
use crate::error::{ensure_nonnegative, ensure_positive, invalid, Error, Result};
use crate::quadrature::{self, PRICE_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PayoffKind {
    #[serde(alias = "call")]
    EuropeanCall,
    #[serde(alias = "put")]
    EuropeanPut,
    BinaryCall,
    BinaryPut,
}

impl PayoffKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PayoffKind::EuropeanCall => "european-call",
            PayoffKind::EuropeanPut => "european-put",
            PayoffKind::BinaryCall => "binary-call",
            PayoffKind::BinaryPut => "binary-put",
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, PayoffKind::BinaryCall | PayoffKind::BinaryPut)
    }
}

impl fmt::Display for PayoffKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PayoffKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "european-call" | "call" => Ok(PayoffKind::EuropeanCall),
            "european-put" | "put" => Ok(PayoffKind::EuropeanPut),
            "binary-call" => Ok(PayoffKind::BinaryCall),
            "binary-put" => Ok(PayoffKind::BinaryPut),
            other => Err(invalid("kind", format!("unknown payoff kind `{other}`"))),
        }
    }
}

/// A European payoff on the terminal price.
///
/// Binaries pay one unit of currency; exactly at the strike they pay one half,
/// which keeps `binary call + binary put = 1` pointwise and matches the
/// zero-variance limit of the closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffSpec {
    kind: PayoffKind,
    strike: f64,
}

impl PayoffSpec {
    pub fn new(kind: PayoffKind, strike: f64) -> Result<Self> {
        ensure_positive("strike", strike)?;
        Ok(Self { kind, strike })
    }

    pub fn call(strike: f64) -> Result<Self> {
        Self::new(PayoffKind::EuropeanCall, strike)
    }

    pub fn put(strike: f64) -> Result<Self> {
        Self::new(PayoffKind::EuropeanPut, strike)
    }

    pub fn binary_call(strike: f64) -> Result<Self> {
        Self::new(PayoffKind::BinaryCall, strike)
    }

    pub fn binary_put(strike: f64) -> Result<Self> {
        Self::new(PayoffKind::BinaryPut, strike)
    }

    pub fn kind(&self) -> PayoffKind {
        self.kind
    }

    pub fn strike(&self) -> f64 {
        self.strike
    }

    /// Cash paid at expiry when the underlying ends at `price`.
    pub fn payoff(&self, price: f64) -> f64 {
        let k = self.strike;
        let digital = |above: bool| {
            if price == k {
                0.5
            } else if (price > k) == above {
                1.0
            } else {
                0.0
            }
        };
        match self.kind {
            PayoffKind::EuropeanCall => (price - k).max(0.0),
            PayoffKind::EuropeanPut => (k - price).max(0.0),
            PayoffKind::BinaryCall => digital(true),
            PayoffKind::BinaryPut => digital(false),
        }
    }
}

/// `d1` and `d2` of the log-normal closed forms; `d1 = d2 + sigma_hat`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct D1D2 {
    pub d1: f64,
    pub d2: f64,
}

pub fn d1_d2(terms: &MarketTerms, sigma: f64, strike: f64) -> Result<D1D2> {
    ensure_positive("sigma", sigma)?;
    ensure_positive("strike", strike)?;
    if !(terms.expiry() > 0.0) {
        return Err(invalid("expiry", "must be positive for d1/d2"));
    }
    let t = terms.expiry();
    let sigma_hat = sigma * t.sqrt();
    let minus_d2 = ((strike / terms.spot()).ln() - terms.rate() * t + 0.5 * sigma_hat * sigma_hat) / sigma_hat;
    let d2 = -minus_d2;
    Ok(D1D2 { d1: d2 + sigma_hat, d2 })
}

/// Price of `payoff` under the log-normal with mean `x0 e^{rt}` and annualized
/// volatility `sigma`.
///
/// `sigma = 0` or `t = 0` yields the deterministic-forward limit: the
/// discounted payoff evaluated at the forward.
pub fn closed_form_price(terms: &MarketTerms, sigma: f64, payoff: &PayoffSpec) -> Result<f64> {
    ensure_nonnegative("sigma", sigma)?;
    let k = payoff.strike();
    let df = terms.discount();
    if sigma == 0.0 || terms.expiry() == 0.0 {
        return Ok(df * payoff.payoff(terms.forward()));
    }
    let D1D2 { d1, d2 } = d1_d2(terms, sigma, k)?;
    let x0 = terms.spot();
    Ok(match payoff.kind() {
        PayoffKind::EuropeanCall => x0 * std_normal_cdf(d1) - k * df * std_normal_cdf(d2),
        PayoffKind::EuropeanPut => k * df * std_normal_cdf(-d2) - x0 * std_normal_cdf(-d1),
        PayoffKind::BinaryCall => df * std_normal_cdf(d2),
        PayoffKind::BinaryPut => df * std_normal_cdf(-d2),
    })
}

pub fn bs_put(terms: &MarketTerms, sigma: f64, strike: f64) -> Result<f64> {
    closed_form_price(terms, sigma, &PayoffSpec::put(strike)?)
}

pub fn bs_call(terms: &MarketTerms, sigma: f64, strike: f64) -> Result<f64> {
    closed_form_price(terms, sigma, &PayoffSpec::call(strike)?)
}

pub fn binary_call(terms: &MarketTerms, sigma: f64, strike: f64) -> Result<f64> {
    closed_form_price(terms, sigma, &PayoffSpec::binary_call(strike)?)
}

pub fn binary_put(terms: &MarketTerms, sigma: f64, strike: f64) -> Result<f64> {
    closed_form_price(terms, sigma, &PayoffSpec::binary_put(strike)?)
}

/// `e^{-rt} E[f(X)]` by adaptive quadrature in log-price, split at `ln K`.
///
/// With `t = 0` the density is irrelevant and the result is `f(x0)`.
pub fn expected_payoff_price<D: SubjectiveDensity + ?Sized>(
    density: &D,
    payoff: &PayoffSpec,
    terms: &MarketTerms,
) -> Result<f64> {
    if terms.expiry() == 0.0 {
        return Ok(payoff.payoff(terms.spot()));
    }
    let (lo, hi) = density.log_support();
    let kink = payoff.strike().ln();
    let scale = payoff.strike().max(density.mean_price());
    let tol = PRICE_TOLERANCE.max(1e-14 * scale);
    let expectation = quadrature::integrate(
        |y: f64| payoff.payoff(y.exp()) * density.log_price_pdf(y),
        lo,
        hi,
        &[kink],
        tol,
    )?;
    Ok(terms.discount() * expectation)
}
