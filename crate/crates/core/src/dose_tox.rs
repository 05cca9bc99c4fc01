//! One-parameter power model for dose toxicity.
//!
//! Every dose `k` has a fixed level `u_k`; toxicity at parameter `a > 0` is
//! `((tanh u_k + 1) / 2)^a`. A single `a` per subgroup ties all doses
//! together, so observations at one dose inform the safety of the others.

use crate::error::{Error, Result};

pub const DEFAULT_A_MIN: f64 = 0.05;
pub const DEFAULT_A_MAX: f64 = 20.0;

/// Dose levels such that the model at `a = 1` reproduces the skeleton.
pub fn skeleton_to_levels(skeleton: &[f64]) -> Result<Vec<f64>> {
    skeleton
        .iter()
        .map(|&p| {
            if p > 0.0 && p < 1.0 {
                Ok((2.0 * p - 1.0).atanh())
            } else {
                Err(Error::field("skeleton", format!("{p} is outside (0, 1)")))
            }
        })
        .collect()
}

#[inline]
fn base(level: f64) -> f64 {
    (level.tanh() + 1.0) / 2.0
}

pub fn toxicity_at(level: f64, a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("model parameter must be positive, got {a}")));
    }
    Ok(base(level).powf(a))
}

/// Parameter whose model toxicity at `level` is closest to `observed_mean`,
/// restricted to `[a_min, a_max]`.
///
/// The model is strictly decreasing in `a`, so the minimiser of
/// `|p(a) - observed_mean|` is the clamped logarithmic inverse.
pub fn fit_parameter(level: f64, observed_mean: f64, a_min: f64, a_max: f64) -> f64 {
    let a = observed_mean.ln() / base(level).ln();
    if a.is_nan() {
        // 0/0 cannot happen for a base in (0, 1); NaN only from a NaN mean.
        return a_max;
    }
    a.clamp(a_min, a_max)
}

/// Allocation-weighted mean of per-dose fits. `None` before any allocation.
pub fn aggregate_parameter(fits: &[f64], counts: &[u32]) -> Option<f64> {
    let total: u64 = counts.iter().map(|&n| u64::from(n)).sum();
    if total == 0 {
        return None;
    }
    let weighted: f64 = fits
        .iter()
        .zip(counts)
        .map(|(&a, &n)| a * f64::from(n))
        .sum();
    Some(weighted / total as f64)
}

/// Safety radius `C·K·(ln(2K/δ) / (2N))^(γ/2)` added to the fitted parameter.
pub fn confidence_radius(arrivals: u32, delta: f64, scale: f64, exponent: f64, num_doses: usize) -> Result<f64> {
    if arrivals == 0 {
        return Err(Error::InvalidArgument("confidence radius needs at least one arrival".into()));
    }
    let k = num_doses as f64;
    if !(delta > 0.0 && delta <= 2.0 * k) {
        return Err(Error::InvalidArgument(format!("delta {delta} outside (0, 2K]")));
    }
    let log_term = (2.0 * k / delta).ln().max(0.0);
    Ok(scale * k * (log_term / (2.0 * f64::from(arrivals))).powf(exponent / 2.0))
}

/// Skeleton model for one trial: precomputed bases and the working range of `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonModel {
    levels: Vec<f64>,
    bases: Vec<f64>,
    pub a_min: f64,
    pub a_max: f64,
}

impl SkeletonModel {
    pub fn from_skeleton(skeleton: &[f64], a_min: f64, a_max: f64) -> Result<Self> {
        if !(a_min > 0.0 && a_min < a_max) {
            return Err(Error::InvalidArgument(format!(
                "parameter range [{a_min}, {a_max}] is empty or non-positive"
            )));
        }
        let levels = skeleton_to_levels(skeleton)?;
        if levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::field("skeleton", "must be strictly increasing"));
        }
        let bases = levels.iter().map(|&u| base(u)).collect();
        Ok(SkeletonModel {
            levels,
            bases,
            a_min,
            a_max,
        })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn num_doses(&self) -> usize {
        self.levels.len()
    }

    /// Model toxicity of `dose` (1-based) at parameter `a > 0`.
    #[inline]
    pub fn toxicity(&self, dose: usize, a: f64) -> f64 {
        debug_assert!(a > 0.0);
        self.bases[dose - 1].powf(a)
    }

    pub fn fit(&self, dose: usize, observed_mean: f64) -> f64 {
        fit_parameter(self.levels[dose - 1], observed_mean, self.a_min, self.a_max)
    }
}
