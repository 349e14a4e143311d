use super::SubjectiveDensity;
use crate::error::{ensure_finite, ensure_positive, Error, Result};
use crate::quadrature::CompositeRule;

/// Target moments: expected terminal price plus central moments 2-4 of the
/// log-return `y = ln(x / x0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSpec {
    pub mean_price: f64,
    pub variance: f64,
    pub third: f64,
    pub fourth: f64,
}

impl MomentSpec {
    pub fn new(mean_price: f64, variance: f64, third: f64, fourth: f64) -> Result<Self> {
        let spec = Self { mean_price, variance, third, fourth };
        spec.validate()?;
        Ok(spec)
    }

    /// Spec with the given log-return variance, skewness and kurtosis.
    pub fn from_shape(mean_price: f64, variance: f64, skewness: f64, kurtosis: f64) -> Result<Self> {
        ensure_positive("variance", variance)?;
        let sd = variance.sqrt();
        Self::new(mean_price, variance, skewness * sd.powi(3), kurtosis * variance * variance)
    }

    pub fn skewness(&self) -> f64 {
        self.third / self.variance.powf(1.5)
    }

    pub fn kurtosis(&self) -> f64 {
        self.fourth / (self.variance * self.variance)
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("mean_price", self.mean_price)?;
        ensure_finite("variance", self.variance)?;
        ensure_finite("third", self.third)?;
        ensure_finite("fourth", self.fourth)?;
        if self.variance <= 0.0 {
            return Err(Error::InfeasibleMoments(format!(
                "variance must be positive, got {}",
                self.variance
            )));
        }
        if self.variance < MIN_VARIANCE {
            return Err(Error::InfeasibleMoments(format!(
                "variance {} is below the resolvable minimum {MIN_VARIANCE:e}",
                self.variance
            )));
        }
        // Hankel condition on the standardized moments: kurtosis > 1 + skewness^2.
        let margin = self.fourth * self.variance - self.variance.powi(3) - self.third * self.third;
        if !(margin > 0.0) {
            return Err(Error::InfeasibleMoments(format!(
                "kurtosis {} must exceed 1 + skewness^2 = {}",
                self.kurtosis(),
                1.0 + self.skewness().powi(2)
            )));
        }
        Ok(())
    }
}

const MIN_VARIANCE: f64 = 1e-16;

/// Solver settings for [`maxent_fit_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxEntOptions {
    /// Half-width of the truncation interval in standard deviations.
    pub width: f64,
    pub panels: usize,
    pub order: usize,
    pub max_iterations: usize,
    /// Stop once every standardized moment residual is below this.
    pub tolerance: f64,
}

impl Default for MaxEntOptions {
    fn default() -> Self {
        Self {
            width: 10.0,
            panels: 8,
            order: 32,
            max_iterations: 200,
            tolerance: 1e-13,
        }
    }
}

/// Exponential-family density `p(y) = exp(l1 y + l2 y^2 + l3 y^3 + l4 y^4 - log_norm)`
/// on the log-return `y = ln(x / x0)`, truncated to `domain`.
///
/// Evaluation goes through the standardized variable `u = (y - center) / scale`,
/// which keeps the exponent well conditioned; `lambda` is the same polynomial
/// re-expanded in `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntDist {
    spot: f64,
    center: f64,
    scale: f64,
    std_coeffs: [f64; 4],
    std_log_z: f64,
    lambda: [f64; 4],
    log_norm: f64,
    domain: (f64, f64),
    mean_price: f64,
}

impl MaxEntDist {
    pub fn spot(&self) -> f64 {
        self.spot
    }

    /// Multipliers on `y, y^2, y^3, y^4`.
    pub fn lambda(&self) -> [f64; 4] {
        self.lambda
    }

    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    /// Truncation interval in log-return.
    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// Density of the log-return `y`; zero outside the domain.
    pub fn log_return_pdf(&self, y: f64) -> f64 {
        if y < self.domain.0 || y > self.domain.1 {
            return 0.0;
        }
        let u = (y - self.center) / self.scale;
        (poly(&self.std_coeffs, u) - self.std_log_z).exp() / self.scale
    }

    /// Density of the terminal price.
    pub fn pdf(&self, price: f64) -> Result<f64> {
        if !(price > 0.0) {
            return Err(Error::Domain { what: "maxent_pdf", value: price });
        }
        let y = (price / self.spot).ln();
        if y < self.domain.0 || y > self.domain.1 {
            return Err(Error::Domain { what: "maxent_pdf", value: price });
        }
        Ok(self.log_return_pdf(y) / price)
    }

    /// Moments recomputed from the density by quadrature over its domain.
    pub fn moments(&self) -> MomentSpec {
        let rule = CompositeRule::new(self.domain.0, self.domain.1, 16, 32);
        let pts: Vec<(f64, f64)> = rule
            .points()
            .iter()
            .map(|&(y, w)| (y, w * self.log_return_pdf(y)))
            .collect();
        let mass: f64 = pts.iter().map(|p| p.1).sum();
        let mean_y = pts.iter().map(|&(y, w)| w * y).sum::<f64>() / mass;
        let central = |k: i32| pts.iter().map(|&(y, w)| w * (y - mean_y).powi(k)).sum::<f64>() / mass;
        let growth = pts.iter().map(|&(y, w)| w * y.exp()).sum::<f64>() / mass;
        MomentSpec {
            mean_price: self.spot * growth,
            variance: central(2),
            third: central(3),
            fourth: central(4),
        }
    }
}

/// Evaluation helper matching the standalone operation name.
pub fn maxent_moments(dist: &MaxEntDist) -> MomentSpec {
    dist.moments()
}

impl SubjectiveDensity for MaxEntDist {
    fn log_price_pdf(&self, log_price: f64) -> f64 {
        self.log_return_pdf(log_price - self.spot.ln())
    }

    fn log_support(&self) -> (f64, f64) {
        let shift = self.spot.ln();
        (self.domain.0 + shift, self.domain.1 + shift)
    }

    fn mean_price(&self) -> f64 {
        self.mean_price
    }
}

fn poly(c: &[f64; 4], u: f64) -> f64 {
    u * (c[0] + u * (c[1] + u * (c[2] + u * c[3])))
}

/// Weighted sums over the standardized grid for a given coefficient vector.
struct Tilted {
    log_z: f64,
    /// `E[u^k]` for k = 0..=8.
    raw: [f64; 9],
}

fn tilt(rule: &CompositeRule, coeffs: &[f64; 4]) -> Tilted {
    let exps: Vec<f64> = rule.points().iter().map(|&(u, _)| poly(coeffs, u)).collect();
    let peak = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sums = [0.0; 9];
    for (&(u, w), e) in rule.points().iter().zip(&exps) {
        let mass = w * (e - peak).exp();
        let mut p = mass;
        for s in sums.iter_mut() {
            *s += p;
            p *= u;
        }
    }
    let z = sums[0];
    let mut raw = [0.0; 9];
    for (r, s) in raw.iter_mut().zip(sums) {
        *r = s / z;
    }
    Tilted {
        log_z: z.ln() + peak,
        raw,
    }
}

fn dual(t: &Tilted, coeffs: &[f64; 4], targets: &[f64; 4]) -> f64 {
    t.log_z - coeffs.iter().zip(targets).map(|(a, m)| a * m).sum::<f64>()
}

fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let top = a[col];
        for row in col + 1..4 {
            let f = a[row][col] / top[col];
            for (x, t) in a[row][col..].iter_mut().zip(&top[col..]) {
                *x -= f * t;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let tail: f64 = (row + 1..4).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

/// Fit the four-moment maximum-entropy density with the default solver settings.
pub fn maxent_fit(spec: &MomentSpec, spot: f64) -> Result<MaxEntDist> {
    maxent_fit_with(spec, spot, &MaxEntOptions::default())
}

/// Fit by damped Newton iteration on the convex dual of the entropy problem.
///
/// The shape (variance, skewness, kurtosis) is fitted on the standardized
/// log-return starting from the Gaussian solution; the location is then
/// chosen so that the expected price equals `spec.mean_price`.
pub fn maxent_fit_with(spec: &MomentSpec, spot: f64, opts: &MaxEntOptions) -> Result<MaxEntDist> {
    spec.validate()?;
    ensure_positive("spot", spot)?;
    let scale = spec.variance.sqrt();
    let targets = [0.0, 1.0, spec.skewness(), spec.kurtosis()];
    let rule = CompositeRule::new(-opts.width, opts.width, opts.panels, opts.order);

    let mut coeffs = [0.0, -0.5, 0.0, 0.0];
    let mut state = tilt(&rule, &coeffs);
    let residual = |t: &Tilted| -> [f64; 4] {
        [
            t.raw[1] - targets[0],
            t.raw[2] - targets[1],
            t.raw[3] - targets[2],
            t.raw[4] - targets[3],
        ]
    };
    let worst = |r: &[f64; 4]| r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

    let mut iterations = 0;
    loop {
        let grad = residual(&state);
        if worst(&grad) <= opts.tolerance {
            break;
        }
        if iterations >= opts.max_iterations {
            return Err(Error::MaxEntNonConvergence { iterations, residuals: grad });
        }
        iterations += 1;

        let mut hess = [[0.0; 4]; 4];
        for (j, row) in hess.iter_mut().enumerate() {
            for (k, h) in row.iter_mut().enumerate() {
                *h = state.raw[j + k + 2] - state.raw[j + 1] * state.raw[k + 1];
            }
        }
        let step = solve4(hess, grad).ok_or(Error::MaxEntNonConvergence {
            iterations,
            residuals: grad,
        })?;

        let current = dual(&state, &coeffs, &targets);
        let slope: f64 = -grad.iter().zip(&step).map(|(g, s)| g * s).sum::<f64>();
        let mut damping = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = [
                coeffs[0] - damping * step[0],
                coeffs[1] - damping * step[1],
                coeffs[2] - damping * step[2],
                coeffs[3] - damping * step[3],
            ];
            let t = tilt(&rule, &trial);
            let value = dual(&t, &trial, &targets);
            if value.is_finite() && value <= current + 1e-4 * damping * slope {
                accepted = Some((trial, t));
                break;
            }
            damping *= 0.5;
        }
        match accepted {
            Some((trial, t)) => {
                coeffs = trial;
                state = t;
            }
            None => {
                // Newton stalled at round-off; accept if the residual is already tiny.
                if worst(&grad) < 1e-10 {
                    break;
                }
                return Err(Error::MaxEntNonConvergence { iterations, residuals: grad });
            }
        }
    }

    if coeffs[3] > 1e-12 {
        return Err(Error::InfeasibleMoments(format!(
            "kurtosis {} with skewness {} needs a positive quartic multiplier on the truncated domain",
            spec.kurtosis(),
            spec.skewness()
        )));
    }
    let coeffs_final = [coeffs[0], coeffs[1], coeffs[2], coeffs[3].min(0.0)];

    // Location: E[x] = x0 e^{center} E[e^{scale u}].
    let growth = rule
        .points()
        .iter()
        .map(|&(u, w)| w * (poly(&coeffs_final, u) - state.log_z + scale * u).exp())
        .sum::<f64>();
    let center = (spec.mean_price / spot).ln() - growth.ln();

    // Re-expand sum a_k ((y - center) / scale)^k as a polynomial in y.
    let alpha = 1.0 / scale;
    let beta = -center / scale;
    let mut expanded = [0.0; 5];
    for (k, a) in coeffs_final.iter().enumerate() {
        let power = k + 1;
        for (j, e) in expanded.iter_mut().enumerate().take(power + 1) {
            *e += a * binomial(power, j) * alpha.powi(j as i32) * beta.powi((power - j) as i32);
        }
    }
    let lambda = [expanded[1], expanded[2], expanded[3], expanded[4]];
    let log_norm = state.log_z + scale.ln() - expanded[0];

    Ok(MaxEntDist {
        spot,
        center,
        scale,
        std_coeffs: coeffs_final,
        std_log_z: state.log_z,
        lambda,
        log_norm,
        domain: (center - opts.width * scale, center + opts.width * scale),
        mean_price: spec.mean_price,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
