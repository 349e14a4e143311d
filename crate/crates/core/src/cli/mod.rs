//! Command-line front end: `subjprice --scenario <file>`.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 parse or validation error,
//! 3 numerical failure, 4 infeasible optimization. Failures print a single
//! JSON error record on stderr.

pub mod output;
pub mod scenario;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::distributions::{maxent_fit, SubjectiveDensity};
use crate::error::Error;
use crate::hedging::{bs_delta, hedge_report};
use crate::implied_vol::skew_curve;
use crate::portfolio::{optimize, portfolio_values, Instrument, OptimizeOptions};
use crate::pricing::{closed_form_price, expected_payoff_price, PayoffSpec};
use crate::uncertain_vol::{marginal_price, price_curve, vol_quadrature};
use output::{render_csv, render_tree, Cell, Report};
use scenario::{Command, Format, PricingModel, Scenario};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "subjprice", version, about = "Price and risk derivatives under subjective densities")]
pub struct Args {
    /// Scenario document (TOML).
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output file; defaults to the scenario's `output.path`, else stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format; defaults to the scenario's `output.format`, else csv for
    /// curves and tree for single results.
    #[arg(long, value_parser = ["csv", "tree"])]
    pub format: Option<String>,
    /// Suppress the progress summary on stderr.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Parse(String),
    Validation { field: String, message: String },
    Numerical(Error),
    Infeasible(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Parse(_) | CliError::Validation { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Infeasible(_) => 4,
        }
    }

    pub fn record(&self) -> serde_json::Value {
        let (kind, field, message) = match self {
            CliError::Io(m) => ("io", None, m.clone()),
            CliError::Parse(m) => ("parse", None, m.clone()),
            CliError::Validation { field, message } => ("validation", Some(field.clone()), message.clone()),
            CliError::Numerical(e) => ("numerical", None, e.to_string()),
            CliError::Infeasible(m) => ("infeasible", None, m.clone()),
        };
        json!({
            "error": { "kind": kind, "field": field, "message": message },
            "exit_code": self.exit_code(),
        })
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Infeasible(m) => CliError::Infeasible(m),
            other => CliError::Numerical(other),
        }
    }
}

/// Parse arguments, run, and map the outcome to an exit status.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Parse(e.to_string().trim_end().to_string());
            eprintln!("{}", err.record());
            return ExitCode::from(err.exit_code());
        }
    };
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.record());
            ExitCode::from(err.exit_code())
        }
    }
}

pub fn run(args: &Args) -> Result<(), CliError> {
    let bytes = fs::read(&args.scenario)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", args.scenario.display())))?;
    let hash = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).map_err(|_| CliError::Parse("scenario is not valid UTF-8".into()))?;
    let scenario = scenario::parse(&text)?;

    let report = execute(&scenario)?;

    let format = match args.format.as_deref() {
        Some("csv") => Format::Csv,
        Some(_) => Format::Tree,
        None => scenario
            .output
            .as_ref()
            .and_then(|o| o.format)
            .unwrap_or(match scenario.command {
                Command::Skew | Command::Curve | Command::MaxentFit => Format::Csv,
                _ => Format::Tree,
            }),
    };
    let banner = format!("subjprice {VERSION} scenario-sha256={hash}");
    let rendered = match format {
        Format::Csv => render_csv(&report, &banner),
        Format::Tree => render_tree(&report, scenario.command.as_str(), VERSION, &hash),
    };
    let path = args
        .out
        .clone()
        .or_else(|| scenario.output.as_ref().and_then(|o| o.path.as_ref()).map(PathBuf::from));
    match &path {
        Some(p) => fs::write(p, &rendered).map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))?,
        None => print!("{rendered}"),
    }
    if !args.quiet {
        let target = path.map(|p| p.display().to_string()).unwrap_or_else(|| "stdout".into());
        eprintln!("subjprice: {} wrote {} row(s) to {target}", scenario.command.as_str(), report.rows.len());
    }
    Ok(())
}

/// Run the scenario's command and collect its report.
pub fn execute(scenario: &Scenario) -> Result<Report, CliError> {
    match scenario.command {
        Command::Price => price(scenario),
        Command::Skew => skew(scenario),
        Command::Curve => curve(scenario),
        Command::MaxentFit => maxent(scenario),
        Command::Greeks => greeks(scenario),
        Command::Optimize => allocate(scenario),
    }
}

fn price(s: &Scenario) -> Result<Report, CliError> {
    let terms = s.market_terms()?;
    let payoff = s.payoff_spec()?;
    let (value, method) = match s.pricing_model(&terms)? {
        PricingModel::LogNormal { sigma, growth_rate: None, .. } => {
            (closed_form_price(&terms, sigma, &payoff)?, "closed-form")
        }
        PricingModel::LogNormal { density, .. } => (expected_payoff_price(&density, &payoff, &terms)?, "quadrature"),
        PricingModel::MaxEnt(d) => (expected_payoff_price(&d, &payoff, &terms)?, "quadrature"),
        PricingModel::Uncertain(b) => (marginal_price(&terms, &payoff, &b)?, "vol-mixture"),
    };
    Ok(Report {
        columns: vec!["kind", "strike", "value", "method"],
        rows: vec![vec![
            payoff.kind().as_str().into(),
            payoff.strike().into(),
            value.into(),
            method.into(),
        ]],
        tree: json!({
            "kind": payoff.kind().as_str(),
            "strike": payoff.strike(),
            "value": value,
            "method": method,
        }),
    })
}

fn greeks(s: &Scenario) -> Result<Report, CliError> {
    let terms = s.market_terms()?;
    let payoff = s.payoff_spec()?;
    let report = match s.pricing_model(&terms)? {
        PricingModel::LogNormal { sigma, growth_rate: None, .. } => {
            let value = closed_form_price(&terms, sigma, &payoff)?;
            let dv_ds = bs_delta(&terms, sigma, &payoff)?;
            crate::hedging::HedgeReport { value, dv_ds, hedge_units: -dv_ds, belief_sensitivities: None }
        }
        PricingModel::Uncertain(b) => hedge_report(&terms, &payoff, &b)?,
        _ => {
            return Err(CliError::Validation {
                field: "model.type".into(),
                message: "greeks need a `lognormal` model at the risk-free mean or an `uncertain` model".into(),
            })
        }
    };
    let (mu, sl) = match report.belief_sensitivities {
        Some(g) => (Cell::Num(g.d_mu_ln), Cell::Num(g.d_s_ln)),
        None => (Cell::Empty, Cell::Empty),
    };
    Ok(Report {
        columns: vec!["value", "dv_ds", "hedge_units", "dv_dmu_ln", "dv_ds_ln"],
        rows: vec![vec![report.value.into(), report.dv_ds.into(), report.hedge_units.into(), mu, sl]],
        tree: json!({
            "value": report.value,
            "dv_ds": report.dv_ds,
            "hedge_units": report.hedge_units,
            "belief_sensitivities": report.belief_sensitivities.map(|g| json!({
                "dv_dmu_ln": g.d_mu_ln,
                "dv_ds_ln": g.d_s_ln,
            })),
        }),
    })
}

fn skew(s: &Scenario) -> Result<Report, CliError> {
    let terms = s.market_terms()?;
    if !(terms.expiry() > 0.0) {
        return Err(CliError::Validation { field: "terms.expiry".into(), message: "must be positive for a skew".into() });
    }
    let belief = s.vol_belief()?;
    let strikes = s.strike_list()?;
    let points = skew_curve(&terms, &belief, &strikes, s.skew_quote())?;
    let forward = terms.forward();
    let nodes = vol_quadrature(&belief);
    let rows = points
        .iter()
        .map(|p| {
            vec![
                p.strike.into(),
                (p.strike / forward).into(),
                p.kind.as_str().into(),
                p.price.into(),
                p.implied_sigma.into(),
            ]
        })
        .collect();
    Ok(Report {
        columns: vec!["strike", "moneyness", "kind", "price", "implied_vol"],
        rows,
        tree: json!({
            "forward": forward,
            "node_sigma_min": nodes.first().map(|n| n.sigma),
            "node_sigma_max": nodes.last().map(|n| n.sigma),
            "points": points.iter().map(|p| json!({
                "strike": p.strike,
                "moneyness": p.strike / forward,
                "kind": p.kind.as_str(),
                "price": p.price,
                "implied_vol": p.implied_sigma,
            })).collect::<Vec<_>>(),
        }),
    })
}

fn curve(s: &Scenario) -> Result<Report, CliError> {
    let terms = s.market_terms()?;
    let belief = s.vol_belief()?;
    let strikes = s.strike_list()?;
    let kind = s.curve_kind();
    let rows = price_curve(&terms, &belief, &strikes, kind)?;
    Ok(Report {
        columns: vec!["strike", "certain_price", "marginal_price"],
        rows: rows
            .iter()
            .map(|r| vec![r.strike.into(), r.certain_price.into(), r.marginal_price.into()])
            .collect(),
        tree: json!({
            "kind": kind.as_str(),
            "certain_sigma": belief.mean_sigma(),
            "rows": rows.iter().map(|r| json!({
                "strike": r.strike,
                "certain_price": r.certain_price,
                "marginal_price": r.marginal_price,
            })).collect::<Vec<_>>(),
        }),
    })
}

fn maxent(s: &Scenario) -> Result<Report, CliError> {
    let terms = s.market_terms()?;
    let (spec, grid) = s.moment_spec(&terms)?;
    let dist = maxent_fit(&spec, terms.spot()).map_err(|e| match e {
        Error::InfeasibleMoments(_) => CliError::Validation { field: "moments".into(), message: e.to_string() },
        other => CliError::Numerical(other),
    })?;
    let fitted = dist.moments();
    let (lo, hi) = dist.domain();
    let rows = (0..grid)
        .map(|i| {
            let y = if i + 1 == grid { hi } else { lo + (hi - lo) * i as f64 / (grid - 1) as f64 };
            let price = terms.spot() * y.exp();
            let density = dist.log_return_pdf(y);
            vec![y.into(), price.into(), density.into(), (density / price).into()]
        })
        .collect();
    let rel = |a: f64, b: f64| ((a - b) / b).abs();
    let worst = [
        rel(fitted.mean_price, spec.mean_price),
        rel(fitted.variance, spec.variance),
        rel(fitted.third, spec.third),
        rel(fitted.fourth, spec.fourth),
    ]
    .into_iter()
    .fold(0.0_f64, f64::max);
    Ok(Report {
        columns: vec!["log_return", "price", "log_return_density", "price_density"],
        rows,
        tree: json!({
            "lambda": dist.lambda(),
            "log_norm": dist.log_norm(),
            "domain": [lo, hi],
            "mean_price": dist.mean_price(),
            "target": { "mean_price": spec.mean_price, "variance": spec.variance, "third": spec.third, "fourth": spec.fourth },
            "fitted": { "mean_price": fitted.mean_price, "variance": fitted.variance, "third": fitted.third, "fourth": fitted.fourth },
            "max_relative_residual": worst,
        }),
    })
}

fn allocate(s: &Scenario) -> Result<Report, CliError> {
    let terms = s.market_terms()?;
    if !(terms.expiry() > 0.0) {
        return Err(CliError::Validation { field: "terms.expiry".into(), message: "must be positive to optimize".into() });
    }
    let density = s.subjective_density(&terms)?;
    let limits = s.limits()?;
    let bounds = s.axis_bounds()?;
    let (resolution, refine_rounds, convention) = s.search()?;
    let instruments = s
        .instrument_blocks()?
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let payoff = PayoffSpec::new(b.kind, b.strike).map_err(|e| CliError::Validation {
                field: format!("instruments[{i}].strike"),
                message: e.to_string(),
            })?;
            Instrument::priced(payoff, b.market_value, &density, &terms).map_err(|e| match e {
                Error::InvalidParameter { .. } => CliError::Validation {
                    field: format!("instruments[{i}].market_value"),
                    message: e.to_string(),
                },
                other => CliError::Numerical(other),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let opts = OptimizeOptions { bounds, resolution, refine_rounds, convention };
    let alloc = optimize(&instruments, &density, &terms, &limits, &opts)?;
    let values = portfolio_values(&alloc.counts, &instruments)?;
    Ok(Report {
        columns: vec!["instrument", "kind", "strike", "market_value", "subjective_value", "count"],
        rows: instruments
            .iter()
            .zip(&alloc.counts)
            .enumerate()
            .map(|(i, (inst, n))| {
                vec![
                    (i as f64).into(),
                    inst.payoff.kind().as_str().into(),
                    inst.payoff.strike().into(),
                    inst.market_value.into(),
                    inst.subjective_value.into(),
                    (*n).into(),
                ]
            })
            .collect(),
        tree: json!({
            "counts": alloc.counts,
            "objective": alloc.objective,
            "loss_probability": alloc.loss_probability,
            "expected_shortfall": alloc.expected_shortfall,
            "subjective_value": values.subjective,
            "market_value": values.market,
            "subjective_mean_price": density.mean_price(),
            "instruments": instruments.iter().map(|i| json!({
                "kind": i.payoff.kind().as_str(),
                "strike": i.payoff.strike(),
                "market_value": i.market_value,
                "subjective_value": i.subjective_value,
            })).collect::<Vec<_>>(),
        }),
    })
}
