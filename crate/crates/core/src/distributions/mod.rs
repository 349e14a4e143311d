//! Densities over terminal asset prices.
//!
//! Every density here is parametrized in log-price. [`SubjectiveDensity`] is
//! the common surface the pricing and portfolio code integrates against.

mod lognormal;
mod maxent;
mod normal;

pub use lognormal::LogNormalDist;
pub use maxent::{maxent_fit, maxent_fit_with, maxent_moments, MaxEntDist, MaxEntOptions, MomentSpec};
pub use normal::{std_normal_cdf, std_normal_pdf};

use crate::error::{ensure_finite, ensure_nonnegative, ensure_positive, Result};

/// Spot, continuously-compounded risk-free rate and horizon in years.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketTerms {
    spot: f64,
    rate: f64,
    expiry: f64,
}

impl MarketTerms {
    pub fn new(spot: f64, rate: f64, expiry: f64) -> Result<Self> {
        ensure_positive("spot", spot)?;
        ensure_finite("rate", rate)?;
        ensure_nonnegative("expiry", expiry)?;
        Ok(Self { spot, rate, expiry })
    }

    pub fn spot(&self) -> f64 {
        self.spot
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn expiry(&self) -> f64 {
        self.expiry
    }

    /// Risk-free growth factor `e^{rt}`.
    pub fn growth(&self) -> f64 {
        (self.rate * self.expiry).exp()
    }

    pub fn discount(&self) -> f64 {
        (-self.rate * self.expiry).exp()
    }

    /// `x0 e^{rt}`, the expected terminal price under the risk-free mean constraint.
    pub fn forward(&self) -> f64 {
        self.spot * self.growth()
    }

    pub fn with_spot(&self, spot: f64) -> Result<Self> {
        Self::new(spot, self.rate, self.expiry)
    }
}

/// A density over the terminal price, exposed in log-price `y = ln x`.
pub trait SubjectiveDensity: Sync {
    /// Density of `ln x` at `log_price`; zero outside the support.
    fn log_price_pdf(&self, log_price: f64) -> f64;

    /// Interval of log-price carrying all mass and all first-moment mass
    /// that matters at double precision.
    fn log_support(&self) -> (f64, f64);

    /// Expected terminal price.
    fn mean_price(&self) -> f64;
}

/// Either of the supported subjective densities.
#[derive(Debug, Clone, PartialEq)]
pub enum Density {
    LogNormal(LogNormalDist),
    MaxEnt(MaxEntDist),
}

impl SubjectiveDensity for Density {
    fn log_price_pdf(&self, log_price: f64) -> f64 {
        match self {
            Density::LogNormal(d) => d.log_price_pdf(log_price),
            Density::MaxEnt(d) => d.log_price_pdf(log_price),
        }
    }

    fn log_support(&self) -> (f64, f64) {
        match self {
            Density::LogNormal(d) => d.log_support(),
            Density::MaxEnt(d) => d.log_support(),
        }
    }

    fn mean_price(&self) -> f64 {
        match self {
            Density::LogNormal(d) => d.mean_price(),
            Density::MaxEnt(d) => d.mean_price(),
        }
    }
}

impl From<LogNormalDist> for Density {
    fn from(d: LogNormalDist) -> Self {
        Density::LogNormal(d)
    }
}

impl From<MaxEntDist> for Density {
    fn from(d: MaxEntDist) -> Self {
        Density::MaxEnt(d)
    }
}
