//! Python bindings for `subjprice-core`.
//!
//! Payoff kinds are passed as strings (`"call"`, `"put"`, `"binary-call"`,
//! `"binary-put"`). Input errors raise `ValueError`, solver failures raise
//! `ArithmeticError`.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use subjprice_core::distributions::{self as dist, Density, SubjectiveDensity};
use subjprice_core::hedging;
use subjprice_core::implied_vol::{self as iv, SkewQuote};
use subjprice_core::portfolio::{self as pf, AxisBounds, Instrument, LossConvention, OptimizeOptions, RiskLimits};
use subjprice_core::pricing::{self, PayoffKind, PayoffSpec};
use subjprice_core::uncertain_vol as uv;
use subjprice_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NonConvergence { .. }
        | Error::MaxEntNonConvergence { .. }
        | Error::Quadrature { .. }
        | Error::OutOfBand { .. } => PyArithmeticError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for subjprice_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn payoff(kind: &str, strike: f64) -> PyResult<PayoffSpec> {
    PayoffSpec::new(kind.parse::<PayoffKind>().py()?, strike).py()
}

#[pyclass(name = "MarketTerms", module = "subjprice", frozen)]
struct PyMarketTerms(dist::MarketTerms);

#[pymethods]
impl PyMarketTerms {
    #[new]
    fn new(spot: f64, rate: f64, expiry: f64) -> PyResult<Self> {
        Ok(Self(dist::MarketTerms::new(spot, rate, expiry).py()?))
    }

    #[getter]
    fn spot(&self) -> f64 {
        self.0.spot()
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.0.rate()
    }

    #[getter]
    fn expiry(&self) -> f64 {
        self.0.expiry()
    }

    fn forward(&self) -> f64 {
        self.0.forward()
    }

    fn discount(&self) -> f64 {
        self.0.discount()
    }

    fn __repr__(&self) -> String {
        format!("MarketTerms(spot={}, rate={}, expiry={})", self.0.spot(), self.0.rate(), self.0.expiry())
    }
}

#[pyclass(name = "LogNormalDist", module = "subjprice", frozen)]
struct PyLogNormal(dist::LogNormalDist);

#[pymethods]
impl PyLogNormal {
    #[new]
    fn new(nu: f64, sigma_hat: f64) -> PyResult<Self> {
        Ok(Self(dist::LogNormalDist::new(nu, sigma_hat).py()?))
    }

    /// Log-normal whose mean grows at the risk-free rate.
    #[staticmethod]
    fn from_expected_return(terms: PyRef<'_, PyMarketTerms>, sigma: f64) -> PyResult<Self> {
        Ok(Self(dist::LogNormalDist::from_expected_return(&terms.0, sigma).py()?))
    }

    #[staticmethod]
    fn from_growth_rate(terms: PyRef<'_, PyMarketTerms>, growth_rate: f64, sigma: f64) -> PyResult<Self> {
        Ok(Self(dist::LogNormalDist::from_growth_rate(&terms.0, growth_rate, sigma).py()?))
    }

    #[getter]
    fn nu(&self) -> f64 {
        self.0.nu()
    }

    #[getter]
    fn sigma_hat(&self) -> f64 {
        self.0.sigma_hat()
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn pdf(&self, price: f64) -> PyResult<f64> {
        self.0.pdf(price).py()
    }
}

#[pyclass(name = "MaxEntDist", module = "subjprice", frozen)]
struct PyMaxEnt(dist::MaxEntDist);

#[pymethods]
impl PyMaxEnt {
    fn lambda_(&self) -> [f64; 4] {
        self.0.lambda()
    }

    fn domain(&self) -> (f64, f64) {
        self.0.domain()
    }

    fn mean(&self) -> f64 {
        self.0.mean_price()
    }

    fn log_return_pdf(&self, y: f64) -> f64 {
        self.0.log_return_pdf(y)
    }

    fn pdf(&self, price: f64) -> PyResult<f64> {
        self.0.pdf(price).py()
    }

    /// `(mean_price, variance, third, fourth)` of the fitted density.
    fn moments(&self) -> (f64, f64, f64, f64) {
        let m = self.0.moments();
        (m.mean_price, m.variance, m.third, m.fourth)
    }
}

#[derive(FromPyObject)]
enum AnyDensity<'py> {
    LogNormal(PyRef<'py, PyLogNormal>),
    MaxEnt(PyRef<'py, PyMaxEnt>),
}

impl AnyDensity<'_> {
    fn density(&self) -> Density {
        match self {
            AnyDensity::LogNormal(d) => Density::LogNormal(d.0),
            AnyDensity::MaxEnt(d) => Density::MaxEnt(d.0.clone()),
        }
    }
}

#[pyclass(name = "VolBelief", module = "subjprice", frozen)]
struct PyVolBelief(uv::VolBelief);

#[pymethods]
impl PyVolBelief {
    #[new]
    #[pyo3(signature = (mu_ln, s_ln, nodes = uv::DEFAULT_NODES))]
    fn new(mu_ln: f64, s_ln: f64, nodes: usize) -> PyResult<Self> {
        Ok(Self(uv::VolBelief::new(mu_ln, s_ln, nodes).py()?))
    }

    #[staticmethod]
    #[pyo3(signature = (median_sigma, s_ln, nodes = uv::DEFAULT_NODES))]
    fn from_median(median_sigma: f64, s_ln: f64, nodes: usize) -> PyResult<Self> {
        Ok(Self(uv::VolBelief::from_median(median_sigma, s_ln, nodes).py()?))
    }

    #[getter]
    fn mu_ln(&self) -> f64 {
        self.0.mu_ln()
    }

    #[getter]
    fn s_ln(&self) -> f64 {
        self.0.s_ln()
    }

    fn mean_sigma(&self) -> f64 {
        self.0.mean_sigma()
    }

    /// Quadrature nodes as `(sigma, weight)` pairs.
    fn nodes(&self) -> Vec<(f64, f64)> {
        uv::vol_quadrature(&self.0).iter().map(|n| (n.sigma, n.weight)).collect()
    }
}

/// Closed-form price under a certain volatility.
#[pyfunction]
fn price(terms: PyRef<'_, PyMarketTerms>, sigma: f64, kind: &str, strike: f64) -> PyResult<f64> {
    pricing::closed_form_price(&terms.0, sigma, &payoff(kind, strike)?).py()
}

/// Discounted expected payoff under a subjective density, by quadrature.
#[pyfunction]
fn expected_payoff_price(
    density: AnyDensity<'_>,
    kind: &str,
    strike: f64,
    terms: PyRef<'_, PyMarketTerms>,
) -> PyResult<f64> {
    pricing::expected_payoff_price(&density.density(), &payoff(kind, strike)?, &terms.0).py()
}

#[pyfunction]
#[pyo3(signature = (variance, third, fourth, spot, mean_price = None))]
fn maxent_fit(variance: f64, third: f64, fourth: f64, spot: f64, mean_price: Option<f64>) -> PyResult<PyMaxEnt> {
    let spec = dist::MomentSpec::new(mean_price.unwrap_or(spot), variance, third, fourth).py()?;
    Ok(PyMaxEnt(dist::maxent_fit(&spec, spot).py()?))
}

#[pyfunction]
fn implied_vol(terms: PyRef<'_, PyMarketTerms>, kind: &str, strike: f64, target: f64) -> PyResult<f64> {
    iv::implied_vol(&terms.0, &payoff(kind, strike)?, target).py()
}

#[pyfunction]
fn marginal_price(terms: PyRef<'_, PyMarketTerms>, belief: PyRef<'_, PyVolBelief>, kind: &str, strike: f64) -> PyResult<f64> {
    uv::marginal_price(&terms.0, &payoff(kind, strike)?, &belief.0).py()
}

/// Rows of `(strike, certain_price, marginal_price)`.
#[pyfunction]
#[pyo3(signature = (terms, belief, strikes, kind = "put"))]
fn price_curve(
    terms: PyRef<'_, PyMarketTerms>,
    belief: PyRef<'_, PyVolBelief>,
    strikes: Vec<f64>,
    kind: &str,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let kind: PayoffKind = kind.parse().py()?;
    let rows = uv::price_curve(&terms.0, &belief.0, &strikes, kind).py()?;
    Ok(rows.iter().map(|r| (r.strike, r.certain_price, r.marginal_price)).collect())
}

/// Rows of `(strike, implied_sigma, price, kind)`.
#[pyfunction]
#[pyo3(signature = (terms, belief, strikes, quote = "otm"))]
fn skew_curve(
    terms: PyRef<'_, PyMarketTerms>,
    belief: PyRef<'_, PyVolBelief>,
    strikes: Vec<f64>,
    quote: &str,
) -> PyResult<Vec<(f64, f64, f64, &'static str)>> {
    let quote = match quote {
        "otm" => SkewQuote::OutOfTheMoney,
        "puts" => SkewQuote::Puts,
        "calls" => SkewQuote::Calls,
        other => return Err(PyValueError::new_err(format!("unknown quote `{other}`"))),
    };
    let pts = iv::skew_curve(&terms.0, &belief.0, &strikes, quote).py()?;
    Ok(pts.iter().map(|p| (p.strike, p.implied_sigma, p.price, p.kind.as_str())).collect())
}

#[pyfunction]
fn delta(terms: PyRef<'_, PyMarketTerms>, sigma: f64, kind: &str, strike: f64) -> PyResult<f64> {
    hedging::bs_delta(&terms.0, sigma, &payoff(kind, strike)?).py()
}

#[pyfunction]
fn marginal_delta(terms: PyRef<'_, PyMarketTerms>, belief: PyRef<'_, PyVolBelief>, kind: &str, strike: f64) -> PyResult<f64> {
    hedging::marginal_delta(&terms.0, &payoff(kind, strike)?, &belief.0).py()
}

/// Exhaustive grid search for contract counts.
///
/// `instruments` holds `(kind, strike, market_value, min_count, max_count)`
/// tuples; subjective values come from `density`.
#[pyfunction]
#[pyo3(signature = (
    instruments, density, terms, max_loss_probability, max_shortfall,
    resolution = 41, refine_rounds = 0, convention = "financed"
))]
#[allow(clippy::too_many_arguments)]
fn optimize<'py>(
    py: Python<'py>,
    instruments: Vec<(String, f64, f64, f64, f64)>,
    density: AnyDensity<'_>,
    terms: PyRef<'_, PyMarketTerms>,
    max_loss_probability: f64,
    max_shortfall: f64,
    resolution: usize,
    refine_rounds: usize,
    convention: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let density = density.density();
    let convention = match convention {
        "financed" => LossConvention::FinancedCost,
        "upfront" => LossConvention::UpfrontCost,
        other => return Err(PyValueError::new_err(format!("unknown convention `{other}`"))),
    };
    let mut insts = Vec::with_capacity(instruments.len());
    let mut bounds = Vec::with_capacity(instruments.len());
    for (kind, strike, mv, lo, hi) in &instruments {
        insts.push(Instrument::priced(payoff(kind, *strike)?, *mv, &density, &terms.0).py()?);
        bounds.push(AxisBounds::new(*lo, *hi).py()?);
    }
    let limits = RiskLimits::new(max_loss_probability, max_shortfall).py()?;
    let opts = OptimizeOptions { bounds, resolution, refine_rounds, convention };
    let market = terms.0;
    let alloc = py
        .detach(|| pf::optimize(&insts, &density, &market, &limits, &opts))
        .map_err(|e| match e {
            Error::Infeasible(m) => PyValueError::new_err(format!("infeasible: {m}")),
            other => py_err(other),
        })?;
    let out = PyDict::new(py);
    out.set_item("counts", alloc.counts)?;
    out.set_item("objective", alloc.objective)?;
    out.set_item("loss_probability", alloc.loss_probability)?;
    out.set_item("expected_shortfall", alloc.expected_shortfall)?;
    out.set_item("subjective_values", insts.iter().map(|i| i.subjective_value).collect::<Vec<_>>())?;
    out.set_item("mean_price", density.mean_price())?;
    Ok(out)
}

#[pymodule]
fn subjprice(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMarketTerms>()?;
    m.add_class::<PyLogNormal>()?;
    m.add_class::<PyMaxEnt>()?;
    m.add_class::<PyVolBelief>()?;
    m.add_function(wrap_pyfunction!(price, m)?)?;
    m.add_function(wrap_pyfunction!(expected_payoff_price, m)?)?;
    m.add_function(wrap_pyfunction!(maxent_fit, m)?)?;
    m.add_function(wrap_pyfunction!(implied_vol, m)?)?;
    m.add_function(wrap_pyfunction!(marginal_price, m)?)?;
    m.add_function(wrap_pyfunction!(price_curve, m)?)?;
    m.add_function(wrap_pyfunction!(skew_curve, m)?)?;
    m.add_function(wrap_pyfunction!(delta, m)?)?;
    m.add_function(wrap_pyfunction!(marginal_delta, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
