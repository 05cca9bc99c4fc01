//! Beta-Bernoulli posteriors and credible-interval arithmetic.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use statrs::function::beta::{beta_reg, ln_beta};

use crate::error::{Error, Result};

pub const DEFAULT_COVERAGE: f64 = 0.90;

/// Beta posterior over a Bernoulli rate, started from the uniform prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPosterior {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for BetaPosterior {
    fn default() -> Self {
        BetaPosterior::uniform()
    }
}

impl BetaPosterior {
    pub const fn uniform() -> Self {
        BetaPosterior { alpha: 1.0, beta: 1.0 }
    }

    pub fn from_counts(successes: u32, failures: u32) -> Self {
        BetaPosterior {
            alpha: 1.0 + f64::from(successes),
            beta: 1.0 + f64::from(failures),
        }
    }

    #[must_use]
    pub fn updated(self, outcome: bool) -> Self {
        if outcome {
            BetaPosterior { alpha: self.alpha + 1.0, ..self }
        } else {
            BetaPosterior { beta: self.beta + 1.0, ..self }
        }
    }

    pub fn update(&mut self, outcome: bool) {
        *self = self.updated(outcome);
    }

    pub fn observations(&self) -> f64 {
        self.alpha + self.beta - 2.0
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// Posterior mode, which equals the empirical success rate. Zero before
    /// any observation, matching the empirical-mean convention.
    pub fn mode(&self) -> f64 {
        let n = self.observations();
        if n <= 0.0 {
            0.0
        } else {
            (self.alpha - 1.0) / n
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Beta::new(self.alpha, self.beta)
            .expect("posterior parameters are positive")
            .sample(rng)
    }
}

/// Regularised incomplete beta `I_x(a, b)`.
pub fn beta_cdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        beta_reg(a, b, x)
    }
}

/// Inverse of [`beta_cdf`] in `x`.
///
/// Newton steps on the CDF, falling back to bisection whenever a step leaves
/// the current bracket. Closed forms cover `a = 1` or `b = 1`.
pub fn beta_quantile(prob: f64, a: f64, b: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::InvalidArgument(format!("quantile level {prob} outside (0, 1)")));
    }
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidArgument(format!("beta parameters must be positive, got ({a}, {b})")));
    }
    if b == 1.0 {
        return Ok(prob.powf(1.0 / a));
    }
    if a == 1.0 {
        return Ok(1.0 - (1.0 - prob).powf(1.0 / b));
    }

    let ln_norm = ln_beta(a, b);
    let log_pdf = |x: f64| (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - ln_norm;

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x = initial_guess(prob, a, b);
    for _ in 0..200 {
        let err = beta_cdf(x, a, b) - prob;
        if err == 0.0 {
            return Ok(x);
        }
        if err < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = err / log_pdf(x).exp();
        let mut next = x - step;
        if !(next > lo && next < hi) || !step.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-15 * x.max(1e-300) || hi - lo <= 1e-15 {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Starting point from a moment-matched normal, pulled inside (0, 1).
fn initial_guess(prob: f64, a: f64, b: f64) -> f64 {
    let n = a + b;
    let mean = a / n;
    let sd = (a * b / (n * n * (n + 1.0))).sqrt();
    let z = normal_quantile_approx(prob);
    (mean + z * sd).clamp(1e-6, 1.0 - 1e-6)
}

/// Rational approximation to the standard normal quantile (about 4.5e-4
/// absolute error), good enough for a starting point.
fn normal_quantile_approx(p: f64) -> f64 {
    let (q, sign) = if p < 0.5 { (p, -1.0) } else { (1.0 - p, 1.0) };
    let t = (-2.0 * q.ln()).sqrt();
    let num = 2.515517 + 0.802853 * t + 0.010328 * t * t;
    let den = 1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t;
    sign * (t - num / den)
}

/// Length of the equal-tailed credible interval with coverage `coverage`.
pub fn interval_width(coverage: f64, a: f64, b: f64) -> f64 {
    if a == 1.0 && b == 1.0 {
        // Uniform: the width is the coverage, without tail round-off.
        return coverage;
    }
    let tail = (1.0 - coverage) / 2.0;
    let upper = beta_quantile(1.0 - tail, a, b).expect("coverage in (0, 1)");
    let lower = beta_quantile(tail, a, b).expect("coverage in (0, 1)");
    upper - lower
}

/// Expected shrinkage of the credible interval from one more observation,
/// weighting the success and failure branches by `q_bar`.
pub fn expected_improvement(q_bar: f64, post: BetaPosterior, coverage: f64) -> f64 {
    let BetaPosterior { alpha, beta } = post;
    let now = interval_width(coverage, alpha, beta);
    let after_success = interval_width(coverage, alpha + 1.0, beta);
    let after_failure = interval_width(coverage, alpha, beta + 1.0);
    q_bar * (now - after_success) + (1.0 - q_bar) * (now - after_failure)
}
