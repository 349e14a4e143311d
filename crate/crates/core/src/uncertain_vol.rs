//! Prices under an uncertain second moment: Black-Scholes values mixed over a
//! log-normal belief on the annualized volatility.

use rayon::prelude::*;

use crate::distributions::MarketTerms;
use crate::error::{ensure_finite, ensure_nonnegative, ensure_positive, invalid, Result};
use crate::pricing::{closed_form_price, PayoffKind, PayoffSpec};
use crate::quadrature::normal_hermite_nodes;

pub const DEFAULT_NODES: usize = 32;

/// Log-normal belief over the annualized volatility: `ln sigma ~ N(mu_ln, s_ln^2)`.
///
/// The belief does not depend on the spot level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolBelief {
    mu_ln: f64,
    s_ln: f64,
    n_nodes: usize,
}

impl VolBelief {
    pub fn new(mu_ln: f64, s_ln: f64, n_nodes: usize) -> Result<Self> {
        ensure_finite("mu_ln", mu_ln)?;
        ensure_nonnegative("s_ln", s_ln)?;
        if n_nodes < 1 {
            return Err(invalid("n_nodes", "at least one quadrature node is required"));
        }
        Ok(Self { mu_ln, s_ln, n_nodes })
    }

    /// Belief centred (in log space) on `median_sigma`.
    pub fn from_median(median_sigma: f64, s_ln: f64, n_nodes: usize) -> Result<Self> {
        ensure_positive("median_sigma", median_sigma)?;
        Self::new(median_sigma.ln(), s_ln, n_nodes)
    }

    pub fn mu_ln(&self) -> f64 {
        self.mu_ln
    }

    pub fn s_ln(&self) -> f64 {
        self.s_ln
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn median_sigma(&self) -> f64 {
        self.mu_ln.exp()
    }

    /// `e^{mu_ln + s_ln^2 / 2}`.
    pub fn mean_sigma(&self) -> f64 {
        (self.mu_ln + 0.5 * self.s_ln * self.s_ln).exp()
    }

    pub fn with_mu_ln(&self, mu_ln: f64) -> Result<Self> {
        Self::new(mu_ln, self.s_ln, self.n_nodes)
    }

    pub fn with_s_ln(&self, s_ln: f64) -> Result<Self> {
        Self::new(self.mu_ln, s_ln, self.n_nodes)
    }

    /// Density of the belief at `sigma`.
    pub fn pdf(&self, sigma: f64) -> f64 {
        if !(sigma > 0.0) || self.s_ln == 0.0 {
            return 0.0;
        }
        let z = (sigma.ln() - self.mu_ln) / self.s_ln;
        (-0.5 * z * z).exp() / (sigma * self.s_ln * (2.0 * std::f64::consts::PI).sqrt())
    }
}

/// A quadrature node of the volatility belief.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolNode {
    pub sigma: f64,
    pub weight: f64,
}

/// Gauss-Hermite discretization of the belief in `ln sigma`, ascending in sigma.
pub fn vol_quadrature(belief: &VolBelief) -> Vec<VolNode> {
    if belief.s_ln == 0.0 {
        return vec![VolNode { sigma: belief.mu_ln.exp(), weight: 1.0 }];
    }
    normal_hermite_nodes(belief.n_nodes)
        .into_iter()
        .map(|(z, w)| VolNode {
            sigma: (belief.mu_ln + belief.s_ln * z).exp(),
            weight: w,
        })
        .collect()
}

fn mix(nodes: &[VolNode], f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    nodes.iter().try_fold(0.0, |acc, n| Ok(acc + n.weight * f(n.sigma)?))
}

/// Mixture of closed-form prices over explicit nodes.
pub fn marginal_price_on(terms: &MarketTerms, payoff: &PayoffSpec, nodes: &[VolNode]) -> Result<f64> {
    mix(nodes, |s| closed_form_price(terms, s, payoff))
}

/// `sum_i w_i V_BS(r, sigma_i)` over the belief's quadrature nodes.
pub fn marginal_price(terms: &MarketTerms, payoff: &PayoffSpec, belief: &VolBelief) -> Result<f64> {
    marginal_price_on(terms, payoff, &vol_quadrature(belief))
}

/// One row of a certain-versus-uncertain price curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub strike: f64,
    /// Price at the belief's mean volatility.
    pub certain_price: f64,
    pub marginal_price: f64,
}

/// Prices across `strikes` (ascending) at the belief's mean sigma and under
/// the full belief.
pub fn price_curve(
    terms: &MarketTerms,
    belief: &VolBelief,
    strikes: &[f64],
    kind: PayoffKind,
) -> Result<Vec<CurveRow>> {
    check_strikes(strikes)?;
    let nodes = vol_quadrature(belief);
    let certain = belief.mean_sigma();
    strikes
        .par_iter()
        .map(|&k| {
            let payoff = PayoffSpec::new(kind, k)?;
            Ok(CurveRow {
                strike: k,
                certain_price: closed_form_price(terms, certain, &payoff)?,
                marginal_price: marginal_price_on(terms, &payoff, &nodes)?,
            })
        })
        .collect()
}

pub(crate) fn check_strikes(strikes: &[f64]) -> Result<()> {
    for &k in strikes {
        ensure_positive("strike", k)?;
    }
    if strikes.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("strikes", "must be sorted ascending"));
    }
    Ok(())
}
