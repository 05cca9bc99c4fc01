//! Ground-truth trial environment.
//!
//! A [`Scenario`] fixes the per-subgroup efficacy and toxicity tables, the
//! arrival distribution, the budget and horizon, and the thresholds used to
//! judge doses. It is immutable once validated and shared across
//! replications; randomness always comes from a caller-owned stream.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default prior toxicity guesses at model parameter `a = 1`.
pub const DEFAULT_SKELETON: [f64; 6] = [0.01, 0.05, 0.10, 0.20, 0.35, 0.50];
pub const DEFAULT_SAFETY_CONFIDENCE: f64 = 0.05;

const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub num_subgroups: usize,
    pub num_doses: usize,
    /// `efficacy[s][k]`, row-major by subgroup.
    pub efficacy: Vec<Vec<f64>>,
    /// `toxicity[s][k]`, non-decreasing along each row.
    pub toxicity: Vec<Vec<f64>>,
    /// Arrival distribution over subgroups.
    pub pi: Vec<f64>,
    pub budget: usize,
    pub horizon: usize,
    pub mtd_threshold: f64,
    pub efficacy_threshold: f64,
    #[serde(default)]
    pub safety_confidence: Vec<f64>,
    #[serde(default)]
    pub cost: Vec<f64>,
    #[serde(default)]
    pub skeleton: Vec<f64>,
}

/// On-disk layout: the scenario fields at top level plus an optional
/// `[params]` table read by [`crate::policies::HyperParams`].
#[derive(Deserialize)]
struct ScenarioFile {
    #[serde(flatten)]
    scenario: Scenario,
    #[allow(dead_code)]
    #[serde(default)]
    params: Option<toml::Table>,
}

/// Per-patient outcome of a treated round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub efficacy: bool,
    pub toxicity: bool,
}

/// Quantities derived from the true tables.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Highest dose (1-based) with toxicity strictly below the MTD threshold; 0 if none.
    pub safe_boundary: Vec<usize>,
    /// Doses meeting both the efficacy floor and the toxicity ceiling.
    pub candidate_set: Vec<Vec<usize>>,
    /// Dose to recommend per subgroup, 0 meaning no dose.
    pub optimal_dose: Vec<usize>,
}

impl GroundTruth {
    /// True safe/unsafe partition, `true` meaning safe.
    pub fn is_safe(&self, s: usize, dose: usize) -> bool {
        dose <= self.safe_boundary[s]
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Scenario::from_toml_str(&text)
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text)?;
        let mut sc = file.scenario;
        sc.fill_defaults();
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    /// The bundled six-dose, three-subgroup benchmark.
    pub fn reference() -> Self {
        Scenario::from_toml_str(include_str!("../../../scenarios/reference.toml"))
            .expect("bundled scenario is valid")
    }

    /// Fill optional fields: `δ_s = 0.05`, unit costs, and the default skeleton
    /// when the dose count matches it.
    pub fn fill_defaults(&mut self) {
        if self.safety_confidence.is_empty() {
            self.safety_confidence = vec![DEFAULT_SAFETY_CONFIDENCE; self.num_subgroups];
        }
        if self.cost.is_empty() {
            self.cost = vec![1.0; self.num_subgroups];
        }
        if self.skeleton.is_empty() && self.num_doses == DEFAULT_SKELETON.len() {
            self.skeleton = DEFAULT_SKELETON.to_vec();
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::field("budget", "must be at least 1"));
        }
        self.validate_environment()
    }

    /// Every check of [`Scenario::validate`] except the positive budget, so
    /// a zero-budget trial can still be simulated.
    pub fn validate_environment(&self) -> Result<()> {
        let (s_n, k_n) = (self.num_subgroups, self.num_doses);
        if s_n == 0 {
            return Err(Error::field("num_subgroups", "must be positive"));
        }
        if k_n == 0 {
            return Err(Error::field("num_doses", "must be positive"));
        }
        check_table("efficacy", &self.efficacy, s_n, k_n)?;
        check_table("toxicity", &self.toxicity, s_n, k_n)?;
        for (s, row) in self.toxicity.iter().enumerate() {
            if row.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::field(
                    "toxicity",
                    format!("row {} is not non-decreasing in dose", s + 1),
                ));
            }
        }

        if self.pi.len() != s_n {
            return Err(Error::field("pi", format!("expected {s_n} entries, got {}", self.pi.len())));
        }
        if self.pi.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::field("pi", "entries must be non-negative"));
        }
        let total: f64 = self.pi.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::field("pi", format!("entries sum to {total}, not 1")));
        }

        if self.horizon < self.budget {
            return Err(Error::field("horizon", "must be at least the budget"));
        }
        check_prob("mtd_threshold", self.mtd_threshold)?;
        check_prob("efficacy_threshold", self.efficacy_threshold)?;

        if self.safety_confidence.len() != s_n {
            return Err(Error::field("safety_confidence", format!("expected {s_n} entries")));
        }
        if self.safety_confidence.iter().any(|&d| !(d > 0.0 && d < 1.0)) {
            return Err(Error::field("safety_confidence", "entries must lie in (0, 1)"));
        }
        if self.cost.len() != s_n {
            return Err(Error::field("cost", format!("expected {s_n} entries")));
        }
        if self.cost.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
            return Err(Error::field("cost", "entries must be positive"));
        }
        if self.skeleton.len() != k_n {
            return Err(Error::field("skeleton", format!("expected {k_n} entries")));
        }
        if self.skeleton.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::field("skeleton", "entries must lie in (0, 1)"));
        }
        if self.skeleton.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::field("skeleton", "must be strictly increasing"));
        }
        Ok(())
    }

    /// Copy with a different budget and horizon.
    pub fn with_budget_horizon(&self, budget: usize, horizon: usize) -> Result<Self> {
        let sc = Scenario {
            budget,
            horizon,
            ..self.clone()
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn derive_ground_truth(&self) -> GroundTruth {
        let zeta = self.mtd_threshold;
        let theta = self.efficacy_threshold;
        let mut safe_boundary = Vec::with_capacity(self.num_subgroups);
        let mut candidate_set = Vec::with_capacity(self.num_subgroups);
        let mut optimal_dose = Vec::with_capacity(self.num_subgroups);

        for s in 0..self.num_subgroups {
            let tox = &self.toxicity[s];
            let eff = &self.efficacy[s];
            safe_boundary.push(
                (1..=self.num_doses)
                    .filter(|&k| tox[k - 1] < zeta)
                    .max()
                    .unwrap_or(0),
            );
            let cands: Vec<usize> = (1..=self.num_doses)
                .filter(|&k| eff[k - 1] >= theta && tox[k - 1] <= zeta)
                .collect();
            // Strict `>` keeps the lowest dose on ties.
            let best = cands.iter().fold(0usize, |best, &k| {
                if best == 0 || eff[k - 1] > eff[best - 1] {
                    k
                } else {
                    best
                }
            });
            candidate_set.push(cands);
            optimal_dose.push(best);
        }

        GroundTruth {
            safe_boundary,
            candidate_set,
            optimal_dose,
        }
    }

    /// Draw the arriving subgroup (0-based).
    pub fn sample_arrival<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_categorical(&self.pi, rng)
    }

    /// Draw efficacy and toxicity bits for `dose` (1-based) in subgroup `s`.
    ///
    /// The two bits come from separate streams and are independent.
    pub fn sample_outcome<E, T>(&self, s: usize, dose: usize, eff_rng: &mut E, tox_rng: &mut T) -> Result<Outcome>
    where
        E: Rng + ?Sized,
        T: Rng + ?Sized,
    {
        if dose == 0 || dose > self.num_doses {
            return Err(Error::InvalidArgument(format!(
                "dose {dose} does not produce an outcome (valid doses are 1..={})",
                self.num_doses
            )));
        }
        let q = self.efficacy[s][dose - 1];
        let p = self.toxicity[s][dose - 1];
        Ok(Outcome {
            efficacy: eff_rng.random::<f64>() < q,
            toxicity: tox_rng.random::<f64>() < p,
        })
    }
}

/// Arrival stream of length `len` drawn i.i.d. from the roster proportions
/// `counts[s] / Σ counts`, turning a fixed candidate list into the streaming
/// setting.
pub fn virtual_arrivals<R: Rng + ?Sized>(counts: &[usize], len: usize, rng: &mut R) -> Result<Vec<usize>> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidArgument("roster counts are all zero".into()));
    }
    let weights: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    Ok((0..len).map(|_| sample_categorical(&weights, rng)).collect())
}

fn sample_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
            acc += w;
            if u < acc {
                return i;
            }
        }
    }
    // Rounding left `acc` a hair under 1.
    last_positive
}

fn check_table(field: &'static str, table: &[Vec<f64>], rows: usize, cols: usize) -> Result<()> {
    if table.len() != rows {
        return Err(Error::field(field, format!("expected {rows} rows, got {}", table.len())));
    }
    for (s, row) in table.iter().enumerate() {
        if row.len() != cols {
            return Err(Error::field(
                field,
                format!("row {} has {} entries, expected {cols}", s + 1, row.len()),
            ));
        }
        if row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::field(field, format!("row {} has entries outside [0, 1]", s + 1)));
        }
    }
    Ok(())
}

fn check_prob(field: &'static str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::field(field, format!("{v} is not a probability")))
    }
}
