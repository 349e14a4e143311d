//! Exposure management: contract counts maximizing subjective minus market
//! value under a loss-probability cap and a conditional expected-loss cap.

use rayon::prelude::*;

use crate::distributions::{MarketTerms, SubjectiveDensity};
use crate::error::{ensure_finite, invalid, Error, Result};
use crate::pricing::{expected_payoff_price, PayoffKind, PayoffSpec};
use crate::quadrature;

const RISK_TOLERANCE: f64 = 1e-12;
const MAX_EXHAUSTIVE_AXES: usize = 4;
const MAX_GRID_POINTS: usize = 20_000_000;

/// A tradeable payoff with its market price and our valuation of it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Instrument {
    pub payoff: PayoffSpec,
    pub market_value: f64,
    pub subjective_value: f64,
}

impl Instrument {
    pub fn new(payoff: PayoffSpec, market_value: f64, subjective_value: f64) -> Result<Self> {
        ensure_finite("market_value", market_value)?;
        ensure_finite("subjective_value", subjective_value)?;
        if market_value < 0.0 {
            return Err(invalid("market_value", "must be non-negative"));
        }
        Ok(Self { payoff, market_value, subjective_value })
    }

    /// Instrument whose subjective value is the discounted expected payoff
    /// under `density`.
    pub fn priced<D: SubjectiveDensity + ?Sized>(
        payoff: PayoffSpec,
        market_value: f64,
        density: &D,
        terms: &MarketTerms,
    ) -> Result<Self> {
        let v = expected_payoff_price(density, &payoff, terms)?;
        Self::new(payoff, market_value, v)
    }

    pub fn edge(&self) -> f64 {
        self.subjective_value - self.market_value
    }
}

/// What a terminal P&L is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossConvention {
    /// Premium financed at the risk-free rate until expiry.
    #[default]
    FinancedCost,
    /// Premium taken at face value, no carry.
    UpfrontCost,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskLimits {
    /// Cap on the probability of a loss, in (0, 1].
    pub max_loss_probability: f64,
    /// Cap on the expected loss given a loss, > 0.
    pub max_shortfall: f64,
}

impl RiskLimits {
    pub fn new(max_loss_probability: f64, max_shortfall: f64) -> Result<Self> {
        if !(max_loss_probability > 0.0 && max_loss_probability <= 1.0) {
            return Err(invalid("max_loss_probability", "must lie in (0, 1]"));
        }
        if !(max_shortfall > 0.0) || max_shortfall.is_nan() {
            return Err(invalid("max_shortfall", "must be positive"));
        }
        Ok(Self { max_loss_probability, max_shortfall })
    }

    pub fn admits(&self, loss_probability: f64, shortfall: f64) -> bool {
        loss_probability <= self.max_loss_probability && shortfall <= self.max_shortfall
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub counts: Vec<f64>,
    pub objective: f64,
    pub loss_probability: f64,
    pub expected_shortfall: f64,
}

/// `(Pi, Pi^m, xi)` for counts `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortfolioValues {
    pub subjective: f64,
    pub market: f64,
    pub objective: f64,
}

fn check_dims(counts: &[f64], instruments: &[Instrument]) -> Result<()> {
    if counts.len() != instruments.len() {
        return Err(Error::DimensionMismatch {
            expected: instruments.len(),
            actual: counts.len(),
        });
    }
    Ok(())
}

pub fn portfolio_values(counts: &[f64], instruments: &[Instrument]) -> Result<PortfolioValues> {
    check_dims(counts, instruments)?;
    let subjective: f64 = counts.iter().zip(instruments).map(|(n, i)| n * i.subjective_value).sum();
    let market: f64 = counts.iter().zip(instruments).map(|(n, i)| n * i.market_value).sum();
    Ok(PortfolioValues {
        subjective,
        market,
        objective: subjective - market,
    })
}

/// `xi = sum n_i (V_i - V_i^m)`.
pub fn objective(counts: &[f64], instruments: &[Instrument]) -> Result<f64> {
    check_dims(counts, instruments)?;
    Ok(counts.iter().zip(instruments).map(|(n, i)| n * i.edge()).sum())
}

/// Terminal P&L of a static position as a function of the terminal price.
#[derive(Debug, Clone, PartialEq)]
pub struct PnlProfile {
    legs: Vec<(f64, PayoffSpec)>,
    cost: f64,
}

impl PnlProfile {
    pub fn evaluate(&self, price: f64) -> f64 {
        self.legs.iter().map(|(n, p)| n * p.payoff(price)).sum::<f64>() - self.cost
    }

    /// Cost carried to expiry.
    pub fn cost(&self) -> f64 {
        self.cost
    }

    /// Sorted distinct strikes of the non-zero legs.
    pub fn kinks(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self.legs.iter().map(|(_, p)| p.strike()).collect();
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }

    /// Slope and intercept of the P&L on the open interval between two
    /// consecutive kinks containing `price`.
    fn affine_at(&self, price: f64) -> (f64, f64) {
        let mut slope = 0.0;
        let mut level = -self.cost;
        for (n, p) in &self.legs {
            let k = p.strike();
            match p.kind() {
                PayoffKind::EuropeanCall if price > k => {
                    slope += n;
                    level -= n * k;
                }
                PayoffKind::EuropeanPut if price < k => {
                    slope -= n;
                    level += n * k;
                }
                PayoffKind::BinaryCall if price > k => level += n,
                PayoffKind::BinaryPut if price < k => level += n,
                _ => {}
            }
        }
        (slope, level)
    }

    /// Price intervals on which the P&L is strictly negative.
    pub fn loss_intervals(&self) -> Vec<(f64, f64)> {
        let kinks = self.kinks();
        let mut edges = Vec::with_capacity(kinks.len() + 2);
        edges.push(0.0);
        edges.extend(kinks.iter().copied().filter(|&k| k > 0.0));
        edges.push(f64::INFINITY);

        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut push = |a: f64, b: f64| {
            if let Some(last) = out.last_mut() {
                if last.1 == a {
                    last.1 = b;
                    return;
                }
            }
            out.push((a, b));
        };
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let probe = if b.is_finite() { 0.5 * (a + b) } else { a + 1.0 };
            let (slope, level) = self.affine_at(probe);
            let value = |x: f64| level + slope * x;
            let root = if slope != 0.0 { -level / slope } else { f64::NAN };
            if root > a && root < b {
                if slope > 0.0 {
                    push(a, root);
                } else {
                    push(root, b);
                }
            } else if value(probe) < 0.0 {
                // no root inside (a, b), so one probe fixes the sign
                push(a, b);
            }
        }
        out
    }
}

pub fn pnl_profile(counts: &[f64], instruments: &[Instrument], terms: &MarketTerms) -> Result<PnlProfile> {
    pnl_profile_with(counts, instruments, terms, LossConvention::FinancedCost)
}

/// `PnL(x) = sum n_i f_i(x) - carry * sum n_i V_i^m`, carry `e^{rt}` for
/// financed cost and one otherwise.
pub fn pnl_profile_with(
    counts: &[f64],
    instruments: &[Instrument],
    terms: &MarketTerms,
    convention: LossConvention,
) -> Result<PnlProfile> {
    check_dims(counts, instruments)?;
    let carry = match convention {
        LossConvention::FinancedCost => terms.growth(),
        LossConvention::UpfrontCost => 1.0,
    };
    let premium: f64 = counts.iter().zip(instruments).map(|(n, i)| n * i.market_value).sum();
    let legs = counts
        .iter()
        .zip(instruments)
        .filter(|(n, _)| **n != 0.0)
        .map(|(n, i)| (*n, i.payoff))
        .collect();
    Ok(PnlProfile { legs, cost: carry * premium })
}

/// Loss probability and expected shortfall of a position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossMeasures {
    pub loss_probability: f64,
    pub expected_shortfall: f64,
}

/// `P(PnL < 0)` and `E[-PnL | PnL < 0]` under `density`, integrating the
/// density over each loss interval in log-price.
pub fn loss_measures<D: SubjectiveDensity + ?Sized>(profile: &PnlProfile, density: &D) -> Result<LossMeasures> {
    let (lo, hi) = density.log_support();
    let mut prob = 0.0;
    let mut loss = 0.0;
    for (a, b) in profile.loss_intervals() {
        let ya = if a > 0.0 { a.ln().max(lo) } else { lo };
        let yb = if b.is_finite() { b.ln().min(hi) } else { hi };
        if !(yb > ya) {
            continue;
        }
        prob += quadrature::integrate(|y: f64| density.log_price_pdf(y), ya, yb, &[], RISK_TOLERANCE)?;
        let scale = profile.cost.abs().max(1.0) * density.mean_price().max(1.0);
        loss += quadrature::integrate(
            |y: f64| -profile.evaluate(y.exp()) * density.log_price_pdf(y),
            ya,
            yb,
            &[],
            RISK_TOLERANCE * scale,
        )?;
    }
    let loss_probability = prob.clamp(0.0, 1.0);
    let expected_shortfall = if prob > 0.0 { (loss / prob).max(0.0) } else { 0.0 };
    Ok(LossMeasures { loss_probability, expected_shortfall })
}

pub fn loss_probability<D: SubjectiveDensity + ?Sized>(
    counts: &[f64],
    instruments: &[Instrument],
    density: &D,
    terms: &MarketTerms,
) -> Result<f64> {
    Ok(loss_measures(&pnl_profile(counts, instruments, terms)?, density)?.loss_probability)
}

pub fn expected_shortfall<D: SubjectiveDensity + ?Sized>(
    counts: &[f64],
    instruments: &[Instrument],
    density: &D,
    terms: &MarketTerms,
) -> Result<f64> {
    Ok(loss_measures(&pnl_profile(counts, instruments, terms)?, density)?.expected_shortfall)
}

/// Closed interval of allowed contract counts for one instrument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBounds {
    pub lo: f64,
    pub hi: f64,
}

impl AxisBounds {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        ensure_finite("bounds.lo", lo)?;
        ensure_finite("bounds.hi", hi)?;
        if lo > hi {
            return Err(invalid("bounds", format!("lower bound {lo} exceeds upper bound {hi}")));
        }
        Ok(Self { lo, hi })
    }

    fn point(&self, index: usize, resolution: usize) -> f64 {
        if index + 1 == resolution {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * index as f64 / (resolution - 1) as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOptions {
    pub bounds: Vec<AxisBounds>,
    /// Grid points per axis, at least 2.
    pub resolution: usize,
    /// Rounds of coordinate-wise step halving around the best grid point.
    pub refine_rounds: usize,
    pub convention: LossConvention,
}

impl OptimizeOptions {
    pub fn new(bounds: Vec<AxisBounds>, resolution: usize) -> Self {
        Self {
            bounds,
            resolution,
            refine_rounds: 0,
            convention: LossConvention::FinancedCost,
        }
    }
}

/// Candidate ordering: higher objective first, then smaller Euclidean norm,
/// then lower flat grid index.
fn better(a: (f64, f64, usize), b: (f64, f64, usize)) -> bool {
    if a.0 != b.0 {
        return a.0 > b.0;
    }
    if a.1 != b.1 {
        return a.1 < b.1;
    }
    a.2 < b.2
}

/// Grid coordinates of flat index `flat`, first axis varying slowest.
pub fn grid_point(flat: usize, bounds: &[AxisBounds], resolution: usize) -> Vec<f64> {
    let mut rem = flat;
    let mut idx = vec![0; bounds.len()];
    for slot in idx.iter_mut().rev() {
        *slot = rem % resolution;
        rem /= resolution;
    }
    idx.iter().zip(bounds).map(|(&i, b)| b.point(i, resolution)).collect()
}

struct Evaluated {
    objective: f64,
    measures: LossMeasures,
}

fn evaluate<D: SubjectiveDensity + ?Sized>(
    counts: &[f64],
    instruments: &[Instrument],
    density: &D,
    terms: &MarketTerms,
    convention: LossConvention,
) -> Result<Evaluated> {
    let objective = objective(counts, instruments)?;
    let profile = pnl_profile_with(counts, instruments, terms, convention)?;
    Ok(Evaluated { objective, measures: loss_measures(&profile, density)? })
}

/// Exhaustive grid search over the box, optionally refined coordinate-wise.
///
/// The result is the feasible grid point with the largest objective, ties
/// going to the smallest Euclidean norm and then to the earliest grid index.
/// Evaluation runs in parallel; selection is order independent.
pub fn optimize<D: SubjectiveDensity + ?Sized>(
    instruments: &[Instrument],
    density: &D,
    terms: &MarketTerms,
    limits: &RiskLimits,
    opts: &OptimizeOptions,
) -> Result<Allocation> {
    let axes = instruments.len();
    if axes == 0 {
        return Err(invalid("instruments", "at least one instrument is required"));
    }
    if opts.bounds.len() != axes {
        return Err(Error::DimensionMismatch { expected: axes, actual: opts.bounds.len() });
    }
    if axes > MAX_EXHAUSTIVE_AXES {
        return Err(invalid("instruments", format!("exhaustive search supports at most {MAX_EXHAUSTIVE_AXES} instruments")));
    }
    if opts.resolution < 2 {
        return Err(invalid("resolution", "at least two grid points per axis are required"));
    }
    let total = (0..axes).try_fold(1usize, |acc, _| acc.checked_mul(opts.resolution));
    let total = match total {
        Some(t) if t <= MAX_GRID_POINTS => t,
        _ => return Err(invalid("resolution", format!("grid exceeds {MAX_GRID_POINTS} points"))),
    };

    let evaluated: Vec<Option<(f64, f64, usize, LossMeasures)>> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let counts = grid_point(flat, &opts.bounds, opts.resolution);
            let e = evaluate(&counts, instruments, density, terms, opts.convention)?;
            let norm2: f64 = counts.iter().map(|n| n * n).sum();
            Ok(limits
                .admits(e.measures.loss_probability, e.measures.expected_shortfall)
                .then_some((e.objective, norm2, flat, e.measures)))
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(f64, f64, usize, LossMeasures)> = None;
    for cand in evaluated.into_iter().flatten() {
        match &best {
            Some(b) if !better((cand.0, cand.1, cand.2), (b.0, b.1, b.2)) => {}
            _ => best = Some(cand),
        }
    }
    let (objective, _, flat, measures) = best.ok_or_else(|| {
        Error::Infeasible(if opts.bounds.iter().all(|b| b.lo <= 0.0 && b.hi >= 0.0) {
            "no grid point satisfies the risk limits".to_string()
        } else {
            "no grid point satisfies the risk limits and the bounds exclude the empty portfolio".to_string()
        })
    })?;

    let mut alloc = Allocation {
        counts: grid_point(flat, &opts.bounds, opts.resolution),
        objective,
        loss_probability: measures.loss_probability,
        expected_shortfall: measures.expected_shortfall,
    };
    if opts.refine_rounds > 0 {
        refine(&mut alloc, instruments, density, terms, limits, opts)?;
    }
    Ok(alloc)
}

fn refine<D: SubjectiveDensity + ?Sized>(
    alloc: &mut Allocation,
    instruments: &[Instrument],
    density: &D,
    terms: &MarketTerms,
    limits: &RiskLimits,
    opts: &OptimizeOptions,
) -> Result<()> {
    let mut steps: Vec<f64> = opts
        .bounds
        .iter()
        .map(|b| (b.hi - b.lo) / (opts.resolution - 1) as f64)
        .collect();
    for _ in 0..opts.refine_rounds {
        for s in steps.iter_mut() {
            *s *= 0.5;
        }
        for axis in 0..alloc.counts.len() {
            for dir in [-1.0, 1.0] {
                let mut trial = alloc.counts.clone();
                let b = opts.bounds[axis];
                trial[axis] = (trial[axis] + dir * steps[axis]).clamp(b.lo, b.hi);
                if trial[axis] == alloc.counts[axis] {
                    continue;
                }
                let e = evaluate(&trial, instruments, density, terms, opts.convention)?;
                if e.objective > alloc.objective
                    && limits.admits(e.measures.loss_probability, e.measures.expected_shortfall)
                {
                    *alloc = Allocation {
                        counts: trial,
                        objective: e.objective,
                        loss_probability: e.measures.loss_probability,
                        expected_shortfall: e.measures.expected_shortfall,
                    };
                }
            }
        }
    }
    Ok(())
}
