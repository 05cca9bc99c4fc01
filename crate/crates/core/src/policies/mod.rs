//! Policies behind one round-by-round protocol.
//!
//! Each round the harness calls [`Policy::choose`] for the arriving subgroup
//! and then [`Policy::record`] exactly once with the returned action and, if
//! a dose was given, its outcome. Action 0 skips the patient. After the last
//! round [`Policy::recommend`] returns one dose per subgroup, 0 for none.

mod c3t;
mod index;
mod thompson;
mod three_plus_three;

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::dose_tox::{DEFAULT_A_MAX, DEFAULT_A_MIN};
use crate::error::{Error, Result};
use crate::posterior::DEFAULT_COVERAGE;
use crate::scenario::{Outcome, Scenario};

pub use c3t::{C3tPolicy, C3tVariant};
pub use index::{kl_divergence, kl_ucb_index, ucb_index, IndexKind, IndexPolicy};
pub use thompson::IndepThompson;
pub use three_plus_three::{CohortDecision, ThreePlusThree, ThreePlusThreeMachine};

/// What the policy knows when the round's patient arrives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundContext {
    /// 1-based round index.
    pub round: usize,
    pub subgroup: usize,
    pub budget_left: usize,
    /// Rounds left including this one.
    pub rounds_left: usize,
}

/// End-of-trial safety classification of one dose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SafetyCall {
    Safe,
    Unsafe,
    /// No data and no model fit: safe by the zero-empirical-rate convention.
    SafeByConvention,
}

impl SafetyCall {
    pub fn is_safe(self) -> bool {
        !matches!(self, SafetyCall::Unsafe)
    }
}

pub trait Policy: Send {
    fn kind(&self) -> PolicyKind;

    /// Forget everything learned; the next round is treated as round 1.
    fn reset(&mut self);

    fn choose(&mut self, ctx: &RoundContext, rng: &mut dyn RngCore) -> usize;

    fn record(&mut self, ctx: &RoundContext, action: usize, outcome: Option<Outcome>);

    fn recommend(&mut self, rng: &mut dyn RngCore) -> Vec<usize>;

    /// Estimated safe/unsafe status of every `(subgroup, dose)` cell.
    fn safety_calls(&self) -> Vec<Vec<SafetyCall>>;

    fn state(&self) -> &LearningState;

    /// Fitted toxicity-model parameter per subgroup, for model-based policies.
    fn fitted_parameters(&self) -> Option<Vec<Option<f64>>> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyKind {
    C3tBudget,
    C3tBudgetE,
    CUcb,
    CKlUcb,
    CIndepTs,
    C3p3,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [
        PolicyKind::C3tBudget,
        PolicyKind::C3tBudgetE,
        PolicyKind::CUcb,
        PolicyKind::CKlUcb,
        PolicyKind::CIndepTs,
        PolicyKind::C3p3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::C3tBudget => "c3t-budget",
            PolicyKind::C3tBudgetE => "c3t-budget-e",
            PolicyKind::CUcb => "c-ucb",
            PolicyKind::CKlUcb => "c-kl-ucb",
            PolicyKind::CIndepTs => "c-indep-ts",
            PolicyKind::C3p3 => "c-3p3",
        }
    }

    pub fn is_model_based(self) -> bool {
        matches!(self, PolicyKind::C3tBudget | PolicyKind::C3tBudgetE)
    }

    pub fn build(self, sc: &Scenario, params: &HyperParams) -> Result<Box<dyn Policy>> {
        params.validate()?;
        Ok(match self {
            PolicyKind::C3tBudget => Box::new(C3tPolicy::new(C3tVariant::Budget, sc, params)?),
            PolicyKind::C3tBudgetE => Box::new(C3tPolicy::new(C3tVariant::EfficacyFocused, sc, params)?),
            PolicyKind::CUcb => Box::new(IndexPolicy::new(IndexKind::Ucb, sc, params)),
            PolicyKind::CKlUcb => Box::new(IndexPolicy::new(IndexKind::KlUcb, sc, params)),
            PolicyKind::CIndepTs => Box::new(IndepThompson::new(sc)),
            PolicyKind::C3p3 => Box::new(ThreePlusThree::new(sc, params.three_plus_three_rule)),
        })
    }

    /// Parse a comma-separated list such as `c3t-budget,c-ucb`.
    pub fn parse_list(list: &str) -> Result<Vec<PolicyKind>> {
        list.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownPolicy(s.to_string()))
    }
}

/// How the budgeted policies build the final candidate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinalCandidates {
    /// Empirical efficacy above the floor and fitted model toxicity at most the ceiling.
    #[default]
    Empirical,
    /// The optimistic in-trial candidate set evaluated after the last round.
    LastUcb,
}

/// Treatment of per-dose fits whose observed toxicity rate is 0 or 1.
///
/// Neither rate is reached by the model for any finite positive parameter,
/// so the fit only records the clamp bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryFits {
    /// Leave such doses out of the weighted average.
    #[default]
    Exclude,
    /// Average the clamped fits like any other.
    Clamp,
}

/// Dose a stopped 3+3 machine recommends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThreePlusThreeRule {
    /// The dose under study when the machine stopped; no dose after
    /// escalating past the top dose.
    #[default]
    StoppedDose,
    /// The dose below the one that stopped the machine; the top dose after
    /// escalating past it.
    PreviousDose,
}

/// Tunable constants shared by the policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    /// UCB exploration constant `c`.
    pub exploration: f64,
    /// Scale `C` of the safety radius.
    pub radius_scale: f64,
    /// Exponent `γ` of the safety radius.
    pub radius_exponent: f64,
    /// Credible-interval coverage `φ`.
    pub coverage: f64,
    pub a_min: f64,
    pub a_max: f64,
    pub final_candidates: FinalCandidates,
    pub boundary_fits: BoundaryFits,
    pub three_plus_three_rule: ThreePlusThreeRule,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            exploration: 2.0,
            radius_scale: 1.0,
            radius_exponent: 1.0,
            coverage: DEFAULT_COVERAGE,
            a_min: DEFAULT_A_MIN,
            a_max: DEFAULT_A_MAX,
            final_candidates: FinalCandidates::Empirical,
            boundary_fits: BoundaryFits::Exclude,
            three_plus_three_rule: ThreePlusThreeRule::StoppedDose,
        }
    }
}

impl HyperParams {
    /// Read the optional `[params]` table of a scenario file.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Wrapper {
            #[serde(default)]
            params: HyperParams,
        }
        let params = toml::from_str::<Wrapper>(text)?.params;
        params.validate()?;
        Ok(params)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.exploration >= 0.0) {
            return Err(Error::field("params.exploration", "must be non-negative"));
        }
        if !(self.radius_scale >= 0.0) {
            return Err(Error::field("params.radius_scale", "must be non-negative"));
        }
        if !(self.radius_exponent > 0.0) {
            return Err(Error::field("params.radius_exponent", "must be positive"));
        }
        if !(self.coverage > 0.0 && self.coverage < 1.0) {
            return Err(Error::field("params.coverage", "must lie in (0, 1)"));
        }
        if !(self.a_min > 0.0 && self.a_min < self.a_max) {
            return Err(Error::field("params.a_min", "need 0 < a_min < a_max"));
        }
        Ok(())
    }
}

/// Counts and outcome sums shared by every policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningState {
    /// `N_s`: arrivals of each subgroup, skipped patients included.
    pub arrivals: Vec<u32>,
    /// `N_{s,k}`: allocations of dose `k` (index `k - 1`) to subgroup `s`.
    pub allocations: Vec<Vec<u32>>,
    pub efficacies: Vec<Vec<u32>>,
    pub toxicities: Vec<Vec<u32>>,
}

impl LearningState {
    pub fn new(num_subgroups: usize, num_doses: usize) -> Self {
        LearningState {
            arrivals: vec![0; num_subgroups],
            allocations: vec![vec![0; num_doses]; num_subgroups],
            efficacies: vec![vec![0; num_doses]; num_subgroups],
            toxicities: vec![vec![0; num_doses]; num_subgroups],
        }
    }

    pub fn num_subgroups(&self) -> usize {
        self.arrivals.len()
    }

    pub fn num_doses(&self) -> usize {
        self.allocations.first().map_or(0, Vec::len)
    }

    pub fn record(&mut self, s: usize, action: usize, outcome: Option<Outcome>) {
        self.arrivals[s] += 1;
        if action >= 1 {
            let o = outcome.expect("a treated round carries an outcome");
            self.allocations[s][action - 1] += 1;
            self.efficacies[s][action - 1] += u32::from(o.efficacy);
            self.toxicities[s][action - 1] += u32::from(o.toxicity);
        }
    }

    pub fn treated(&self, s: usize) -> u32 {
        self.allocations[s].iter().sum()
    }

    /// Empirical efficacy of `dose` (1-based); 0 before any allocation.
    pub fn q_bar(&self, s: usize, dose: usize) -> f64 {
        ratio(self.efficacies[s][dose - 1], self.allocations[s][dose - 1])
    }

    /// Empirical toxicity of `dose` (1-based); 0 before any allocation.
    pub fn p_bar(&self, s: usize, dose: usize) -> f64 {
        ratio(self.toxicities[s][dose - 1], self.allocations[s][dose - 1])
    }

    pub fn q_bar_table(&self) -> Vec<Vec<f64>> {
        (0..self.num_subgroups())
            .map(|s| (1..=self.num_doses()).map(|k| self.q_bar(s, k)).collect())
            .collect()
    }

    pub fn p_bar_table(&self) -> Vec<Vec<f64>> {
        (0..self.num_subgroups())
            .map(|s| (1..=self.num_doses()).map(|k| self.p_bar(s, k)).collect())
            .collect()
    }

    /// Safety calls from empirical toxicity rates.
    pub fn empirical_safety_calls(&self, zeta: f64) -> Vec<Vec<SafetyCall>> {
        (0..self.num_subgroups())
            .map(|s| {
                (1..=self.num_doses())
                    .map(|k| {
                        if self.allocations[s][k - 1] == 0 {
                            SafetyCall::SafeByConvention
                        } else if self.p_bar(s, k) <= zeta {
                            SafetyCall::Safe
                        } else {
                            SafetyCall::Unsafe
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Filtered empirical argmax: among allocated doses with `q̄ ≥ θ` and
    /// `p̄ ≤ ζ`, the highest `q̄`, lowest dose on ties; 0 if none qualify.
    pub fn empirical_recommendation(&self, s: usize, theta: f64, zeta: f64) -> usize {
        argmax_dose((1..=self.num_doses()).filter_map(|k| {
            (self.allocations[s][k - 1] > 0 && self.q_bar(s, k) >= theta && self.p_bar(s, k) <= zeta)
                .then(|| (k, self.q_bar(s, k)))
        }))
    }
}

fn ratio(num: u32, den: u32) -> f64 {
    if den == 0 {
        0.0
    } else {
        f64::from(num) / f64::from(den)
    }
}

/// Dose with the largest score, the lowest dose winning ties; 0 when empty.
pub(crate) fn argmax_dose(scored: impl IntoIterator<Item = (usize, f64)>) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for (k, v) in scored {
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((k, v)),
        }
    }
    best.map_or(0, |(k, _)| k)
}
