//! Seeded trial simulation, metrics and sweeps.

mod experiment;
mod metrics;
mod output;

pub use experiment::{run_experiment, run_replications, sweep, SweepParam, SweepRow};
pub use metrics::{compute_metrics, trial_metrics, Estimate, MetricsSummary, TrialMetrics};
pub use output::{write_curves_csv, write_meta, write_summary_csv, write_sweep_csv};

use crate::error::{Error, Result};
use crate::policies::{Policy, PolicyKind, RoundContext, SafetyCall};
use crate::scenario::{Outcome, Scenario};
use crate::seeding::{fnv1a, Streams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundRecord {
    /// 1-based round index.
    pub t: usize,
    pub subgroup: usize,
    pub action: usize,
    pub outcome: Option<Outcome>,
    /// Budget left after this round.
    pub budget_left: usize,
}

/// End-of-trial view of a policy's learning state.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub arrivals: Vec<u32>,
    pub allocations: Vec<Vec<u32>>,
    pub q_bar: Vec<Vec<f64>>,
    pub p_bar: Vec<Vec<f64>>,
    pub fitted: Option<Vec<Option<f64>>>,
    pub safety_calls: Vec<Vec<SafetyCall>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace {
    pub policy: PolicyKind,
    pub seed: u64,
    pub scenario_fingerprint: u64,
    pub budget: usize,
    pub rounds: Vec<RoundRecord>,
    pub recommendation: Vec<usize>,
    pub snapshot: Snapshot,
}

impl TrialTrace {
    pub fn treated(&self) -> usize {
        self.rounds.iter().filter(|r| r.action > 0).count()
    }

    pub fn budget_left(&self) -> usize {
        self.rounds.last().map_or(self.budget, |r| r.budget_left)
    }
}

pub fn scenario_fingerprint(sc: &Scenario) -> u64 {
    fnv1a(&sc.to_toml_string())
}

/// Simulate one trial. The policy is reset first; every round up to the
/// horizon is played, with forced skips once the budget is spent.
pub fn run_trial(sc: &Scenario, policy: &mut dyn Policy, seed: u64) -> Result<TrialTrace> {
    sc.validate_environment()?;
    policy.reset();
    let mut streams = Streams::new(seed);
    let mut budget_left = sc.budget;
    let mut rounds = Vec::with_capacity(sc.horizon);
    for t in 1..=sc.horizon {
        let subgroup = sc.sample_arrival(&mut streams.arrival);
        let ctx = RoundContext {
            round: t,
            subgroup,
            budget_left,
            rounds_left: sc.horizon - t + 1,
        };
        let action = policy.choose(&ctx, &mut streams.policy);
        if action > sc.num_doses {
            return Err(Error::InvalidArgument(format!(
                "{} chose dose {action} of {}",
                policy.kind(),
                sc.num_doses
            )));
        }
        if action > 0 && budget_left == 0 {
            return Err(Error::BudgetViolation {
                policy: policy.kind().name(),
                round: t,
                dose: action,
            });
        }
        let outcome = if action > 0 {
            budget_left -= 1;
            Some(sc.sample_outcome(subgroup, action, &mut streams.efficacy, &mut streams.toxicity)?)
        } else {
            None
        };
        policy.record(&ctx, action, outcome);
        rounds.push(RoundRecord {
            t,
            subgroup,
            action,
            outcome,
            budget_left,
        });
    }
    let recommendation = policy.recommend(&mut streams.policy);
    let state = policy.state();
    let snapshot = Snapshot {
        arrivals: state.arrivals.clone(),
        allocations: state.allocations.clone(),
        q_bar: state.q_bar_table(),
        p_bar: state.p_bar_table(),
        fitted: policy.fitted_parameters(),
        safety_calls: policy.safety_calls(),
    };
    Ok(TrialTrace {
        policy: policy.kind(),
        seed,
        scenario_fingerprint: scenario_fingerprint(sc),
        budget: sc.budget,
        rounds,
        recommendation,
        snapshot,
    })
}
