//! Derivative pricing and risk under explicit subjective densities.
//!
//! Prices are discounted expectations of payoffs under a stated density over
//! the terminal price: log-normal, four-moment maximum-entropy, or a
//! log-normal mixed over an uncertain volatility. On top of that sit the
//! implied-volatility inversion, hedge deltas and a constrained allocation
//! search.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod distributions;
pub mod error;
pub mod hedging;
pub mod implied_vol;
pub mod portfolio;
pub mod pricing;
pub mod quadrature;
pub mod uncertain_vol;

pub use distributions::{
    std_normal_cdf, Density, LogNormalDist, MarketTerms, MaxEntDist, MomentSpec, SubjectiveDensity,
};
pub use error::{Error, Result};
