//! Scenario documents (TOML) and their validation into library types.

use serde::Deserialize;

use super::CliError;
use crate::distributions::{maxent_fit, Density, LogNormalDist, MarketTerms, MomentSpec};
use crate::error::Error;
use crate::implied_vol::SkewQuote;
use crate::portfolio::{AxisBounds, LossConvention, RiskLimits};
use crate::pricing::{PayoffKind, PayoffSpec};
use crate::uncertain_vol::{VolBelief, DEFAULT_NODES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Price,
    Skew,
    Curve,
    MaxentFit,
    Greeks,
    Optimize,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Price => "price",
            Command::Skew => "skew",
            Command::Curve => "curve",
            Command::MaxentFit => "maxent-fit",
            Command::Greeks => "greeks",
            Command::Optimize => "optimize",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Tree,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub command: Command,
    pub terms: TermsBlock,
    pub payoff: Option<PayoffBlock>,
    pub model: Option<ModelBlock>,
    pub belief: Option<BeliefBlock>,
    pub strikes: Option<StrikesBlock>,
    pub kind: Option<PayoffKind>,
    pub quote: Option<QuoteName>,
    pub moments: Option<MomentsBlock>,
    pub subjective: Option<ModelBlock>,
    pub instruments: Option<Vec<InstrumentBlock>>,
    pub limits: Option<LimitsBlock>,
    pub search: Option<SearchBlock>,
    pub output: Option<OutputBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermsBlock {
    pub spot: f64,
    pub rate: f64,
    pub expiry: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffBlock {
    pub kind: PayoffKind,
    pub strike: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelBlock {
    Lognormal {
        sigma: f64,
        /// Expected continuously-compounded return; defaults to the rate.
        growth_rate: Option<f64>,
    },
    Maxent {
        variance: f64,
        third: f64,
        fourth: f64,
        mean_price: Option<f64>,
    },
    Uncertain {
        mu_ln: Option<f64>,
        median_sigma: Option<f64>,
        s_ln: f64,
        nodes: Option<usize>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefBlock {
    pub mu_ln: Option<f64>,
    pub median_sigma: Option<f64>,
    pub s_ln: f64,
    pub nodes: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrikesBlock {
    pub values: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub count: Option<usize>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuoteName {
    Otm,
    Puts,
    Calls,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsBlock {
    pub variance: f64,
    pub third: f64,
    pub fourth: f64,
    pub mean_price: Option<f64>,
    pub grid_points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentBlock {
    pub kind: PayoffKind,
    pub strike: f64,
    pub market_value: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsBlock {
    pub max_loss_probability: f64,
    pub max_shortfall: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchBlock {
    pub resolution: usize,
    pub refine_rounds: Option<usize>,
    pub convention: Option<ConventionName>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConventionName {
    Financed,
    Upfront,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    pub path: Option<String>,
    pub format: Option<Format>,
}

pub fn parse(text: &str) -> Result<Scenario, CliError> {
    toml::from_str(text).map_err(|e| CliError::Parse(e.to_string().trim_end().to_string()))
}

fn at(field: impl Into<String>) -> impl FnOnce(Error) -> CliError {
    let field = field.into();
    move |e| CliError::Validation { field, message: e.to_string() }
}

fn missing(field: &str) -> CliError {
    CliError::Validation {
        field: field.to_string(),
        message: format!("missing required block or field `{field}`"),
    }
}

/// Volatility model for pricing and greeks.
#[derive(Debug, Clone)]
pub enum PricingModel {
    LogNormal { sigma: f64, growth_rate: Option<f64>, density: LogNormalDist },
    MaxEnt(Density),
    Uncertain(VolBelief),
}

impl Scenario {
    pub fn market_terms(&self) -> Result<MarketTerms, CliError> {
        let t = &self.terms;
        MarketTerms::new(t.spot, t.rate, t.expiry).map_err(|e| {
            let field = match &e {
                Error::InvalidParameter { name, .. } => format!("terms.{name}"),
                _ => "terms".to_string(),
            };
            at(field)(e)
        })
    }

    pub fn payoff_spec(&self) -> Result<PayoffSpec, CliError> {
        let p = self.payoff.as_ref().ok_or_else(|| missing("payoff"))?;
        PayoffSpec::new(p.kind, p.strike).map_err(at("payoff.strike"))
    }

    pub fn vol_belief(&self) -> Result<VolBelief, CliError> {
        let b = self.belief.as_ref().ok_or_else(|| missing("belief"))?;
        belief_from(b.mu_ln, b.median_sigma, b.s_ln, b.nodes, "belief")
    }

    pub fn strike_list(&self) -> Result<Vec<f64>, CliError> {
        let s = self.strikes.as_ref().ok_or_else(|| missing("strikes"))?;
        let list = match (&s.values, s.start, s.stop, s.count) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => {
                if n == 0 {
                    return Err(CliError::Validation {
                        field: "strikes.count".into(),
                        message: "must be at least 1".into(),
                    });
                }
                if n == 1 {
                    vec![a]
                } else {
                    (0..n)
                        .map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
                        .collect()
                }
            }
            _ => {
                return Err(CliError::Validation {
                    field: "strikes".into(),
                    message: "give either `values` or all of `start`, `stop`, `count`".into(),
                })
            }
        };
        for (i, k) in list.iter().enumerate() {
            if !(k.is_finite() && *k > 0.0) {
                return Err(CliError::Validation {
                    field: format!("strikes[{i}]"),
                    message: format!("strike must be positive and finite, got {k}"),
                });
            }
        }
        if list.windows(2).any(|w| w[1] < w[0]) {
            return Err(CliError::Validation {
                field: "strikes".into(),
                message: "strikes must be sorted ascending".into(),
            });
        }
        Ok(list)
    }

    pub fn skew_quote(&self) -> SkewQuote {
        match self.quote {
            None | Some(QuoteName::Otm) => SkewQuote::OutOfTheMoney,
            Some(QuoteName::Puts) => SkewQuote::Puts,
            Some(QuoteName::Calls) => SkewQuote::Calls,
        }
    }

    pub fn curve_kind(&self) -> PayoffKind {
        self.kind.unwrap_or(PayoffKind::EuropeanPut)
    }

    pub fn pricing_model(&self, terms: &MarketTerms) -> Result<PricingModel, CliError> {
        let m = self.model.as_ref().ok_or_else(|| missing("model"))?;
        model_from(m, terms, "model")
    }

    pub fn subjective_density(&self, terms: &MarketTerms) -> Result<Density, CliError> {
        let m = self.subjective.as_ref().ok_or_else(|| missing("subjective"))?;
        match model_from(m, terms, "subjective")? {
            PricingModel::LogNormal { density, .. } => Ok(Density::LogNormal(density)),
            PricingModel::MaxEnt(d) => Ok(d),
            PricingModel::Uncertain(_) => Err(CliError::Validation {
                field: "subjective.type".into(),
                message: "the subjective density must be `lognormal` or `maxent`".into(),
            }),
        }
    }

    pub fn moment_spec(&self, terms: &MarketTerms) -> Result<(MomentSpec, usize), CliError> {
        let m = self.moments.as_ref().ok_or_else(|| missing("moments"))?;
        let spec = MomentSpec::new(
            m.mean_price.unwrap_or_else(|| terms.forward()),
            m.variance,
            m.third,
            m.fourth,
        )
        .map_err(at("moments"))?;
        let grid = m.grid_points.unwrap_or(201);
        if grid < 2 {
            return Err(CliError::Validation {
                field: "moments.grid_points".into(),
                message: "must be at least 2".into(),
            });
        }
        Ok((spec, grid))
    }

    pub fn limits(&self) -> Result<RiskLimits, CliError> {
        let l = self.limits.as_ref().ok_or_else(|| missing("limits"))?;
        RiskLimits::new(l.max_loss_probability, l.max_shortfall).map_err(|e| {
            let field = match &e {
                Error::InvalidParameter { name, .. } => format!("limits.{name}"),
                _ => "limits".to_string(),
            };
            at(field)(e)
        })
    }

    pub fn instrument_blocks(&self) -> Result<&[InstrumentBlock], CliError> {
        match &self.instruments {
            Some(v) if !v.is_empty() => Ok(v),
            _ => Err(missing("instruments")),
        }
    }

    pub fn axis_bounds(&self) -> Result<Vec<AxisBounds>, CliError> {
        self.instrument_blocks()?
            .iter()
            .enumerate()
            .map(|(i, b)| AxisBounds::new(b.min, b.max).map_err(at(format!("instruments[{i}].min"))))
            .collect()
    }

    pub fn search(&self) -> Result<(usize, usize, LossConvention), CliError> {
        let s = self.search.as_ref().ok_or_else(|| missing("search"))?;
        if s.resolution < 2 {
            return Err(CliError::Validation {
                field: "search.resolution".into(),
                message: "must be at least 2".into(),
            });
        }
        let convention = match s.convention {
            None | Some(ConventionName::Financed) => LossConvention::FinancedCost,
            Some(ConventionName::Upfront) => LossConvention::UpfrontCost,
        };
        Ok((s.resolution, s.refine_rounds.unwrap_or(0), convention))
    }
}

fn belief_from(
    mu_ln: Option<f64>,
    median_sigma: Option<f64>,
    s_ln: f64,
    nodes: Option<usize>,
    block: &str,
) -> Result<VolBelief, CliError> {
    let nodes = nodes.unwrap_or(DEFAULT_NODES);
    match (mu_ln, median_sigma) {
        (Some(mu), None) => VolBelief::new(mu, s_ln, nodes),
        (None, Some(m)) => VolBelief::from_median(m, s_ln, nodes),
        _ => {
            return Err(CliError::Validation {
                field: format!("{block}.mu_ln"),
                message: "give exactly one of `mu_ln` or `median_sigma`".into(),
            })
        }
    }
    .map_err(|e| {
        let field = match &e {
            Error::InvalidParameter { name, .. } => format!("{block}.{name}"),
            _ => block.to_string(),
        };
        at(field)(e)
    })
}

fn model_from(m: &ModelBlock, terms: &MarketTerms, block: &str) -> Result<PricingModel, CliError> {
    match m {
        ModelBlock::Lognormal { sigma, growth_rate } => {
            let rate = growth_rate.unwrap_or(terms.rate());
            let density = LogNormalDist::from_growth_rate(terms, rate, *sigma).map_err(|e| {
                let field = match &e {
                    Error::InvalidParameter { name: "expiry", .. } => "terms.expiry".to_string(),
                    Error::InvalidParameter { name, .. } => format!("{block}.{name}"),
                    _ => block.to_string(),
                };
                at(field)(e)
            })?;
            Ok(PricingModel::LogNormal { sigma: *sigma, growth_rate: *growth_rate, density })
        }
        ModelBlock::Maxent { variance, third, fourth, mean_price } => {
            let spec = MomentSpec::new(mean_price.unwrap_or_else(|| terms.forward()), *variance, *third, *fourth)
                .map_err(at(block.to_string()))?;
            let d = maxent_fit(&spec, terms.spot()).map_err(|e| match e {
                Error::InfeasibleMoments(_) => at(block.to_string())(e),
                other => CliError::Numerical(other),
            })?;
            Ok(PricingModel::MaxEnt(Density::MaxEnt(d)))
        }
        ModelBlock::Uncertain { mu_ln, median_sigma, s_ln, nodes } => {
            Ok(PricingModel::Uncertain(belief_from(*mu_ln, *median_sigma, *s_ln, *nodes, block)?))
        }
    }
}
