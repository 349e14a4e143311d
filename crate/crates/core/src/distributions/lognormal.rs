use std::f64::consts::PI;

use super::{std_normal_cdf, MarketTerms, SubjectiveDensity};
use crate::error::{ensure_finite, ensure_positive, invalid, Error, Result};

/// Standard deviations of log-price kept on either side of the support.
const SUPPORT_WIDTH: f64 = 12.0;

/// Price density whose logarithm is Gaussian with mean `nu` and standard
/// deviation `sigma_hat` over the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormalDist {
    nu: f64,
    sigma_hat: f64,
}

impl LogNormalDist {
    pub fn new(nu: f64, sigma_hat: f64) -> Result<Self> {
        ensure_finite("nu", nu)?;
        ensure_positive("sigma_hat", sigma_hat)?;
        Ok(Self { nu, sigma_hat })
    }

    /// Log-normal with the given expected price.
    pub fn with_mean(mean: f64, sigma_hat: f64) -> Result<Self> {
        ensure_positive("mean", mean)?;
        ensure_positive("sigma_hat", sigma_hat)?;
        Self::new(mean.ln() - 0.5 * sigma_hat * sigma_hat, sigma_hat)
    }

    /// Log-normal whose mean is the risk-free forward `x0 e^{rt}`, with
    /// annualized volatility `sigma` (so `sigma_hat = sigma sqrt(t)`).
    pub fn from_expected_return(terms: &MarketTerms, sigma: f64) -> Result<Self> {
        Self::from_growth_rate(terms, terms.rate(), sigma)
    }

    /// As [`from_expected_return`](Self::from_expected_return) but with an
    /// arbitrary continuously-compounded expected return, e.g. the one implied
    /// by a futures price.
    pub fn from_growth_rate(terms: &MarketTerms, growth_rate: f64, sigma: f64) -> Result<Self> {
        ensure_finite("growth_rate", growth_rate)?;
        ensure_positive("sigma", sigma)?;
        if terms.expiry() <= 0.0 {
            return Err(invalid("expiry", "must be positive to build a terminal density"));
        }
        let sigma_hat = sigma * terms.expiry().sqrt();
        let nu = terms.spot().ln() + growth_rate * terms.expiry() - 0.5 * sigma_hat * sigma_hat;
        Self::new(nu, sigma_hat)
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn sigma_hat(&self) -> f64 {
        self.sigma_hat
    }

    /// `e^{nu + sigma_hat^2 / 2}`.
    pub fn mean(&self) -> f64 {
        (self.nu + 0.5 * self.sigma_hat * self.sigma_hat).exp()
    }

    pub fn median(&self) -> f64 {
        self.nu.exp()
    }

    pub fn mode(&self) -> f64 {
        (self.nu - self.sigma_hat * self.sigma_hat).exp()
    }

    fn standardize(&self, price: f64) -> f64 {
        (price.ln() - self.nu) / self.sigma_hat
    }

    pub fn pdf(&self, price: f64) -> Result<f64> {
        if !(price > 0.0) {
            return Err(Error::Domain { what: "lognormal_pdf", value: price });
        }
        let z = self.standardize(price);
        Ok((-0.5 * z * z).exp() / (price * self.sigma_hat * (2.0 * PI).sqrt()))
    }

    /// `P(X <= strike)`.
    pub fn partial_zeroth(&self, strike: f64) -> Result<f64> {
        if !(strike > 0.0) {
            return Err(Error::Domain { what: "partial_zeroth", value: strike });
        }
        if strike == f64::INFINITY {
            return Ok(1.0);
        }
        Ok(std_normal_cdf(self.standardize(strike)))
    }

    /// `E[X; X <= strike]`, the first partial moment.
    pub fn partial_first(&self, strike: f64) -> Result<f64> {
        if !(strike > 0.0) {
            return Err(Error::Domain { what: "partial_first", value: strike });
        }
        if strike == f64::INFINITY {
            return Ok(self.mean());
        }
        Ok(self.mean() * std_normal_cdf(self.standardize(strike) - self.sigma_hat))
    }
}

impl SubjectiveDensity for LogNormalDist {
    fn log_price_pdf(&self, log_price: f64) -> f64 {
        let z = (log_price - self.nu) / self.sigma_hat;
        (-0.5 * z * z).exp() / (self.sigma_hat * (2.0 * PI).sqrt())
    }

    fn log_support(&self) -> (f64, f64) {
        let s = self.sigma_hat;
        (self.nu - SUPPORT_WIDTH * s, self.nu + s * s + SUPPORT_WIDTH * s)
    }

    fn mean_price(&self) -> f64 {
        self.mean()
    }
}
