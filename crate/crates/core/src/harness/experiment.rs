//! Replicated experiments and parameter sweeps.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use super::metrics::{summarise, trial_metrics, MetricsSummary};
use super::{run_trial, TrialTrace};
use crate::error::{Error, Result};
use crate::policies::{HyperParams, PolicyKind};
use crate::scenario::Scenario;
use crate::seeding::replication_seed;

/// Traces of `reps` independent replications of one policy, in replication order.
pub fn run_replications(
    sc: &Scenario,
    kind: PolicyKind,
    params: &HyperParams,
    reps: usize,
    base_seed: u64,
) -> Result<Vec<TrialTrace>> {
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut policy = kind.build(sc, params)?;
            run_trial(sc, policy.as_mut(), replication_seed(base_seed, kind.name(), r as u64))
        })
        .collect()
}

/// One summary per policy, in the order given.
pub fn run_experiment(
    sc: &Scenario,
    policies: &[PolicyKind],
    params: &HyperParams,
    reps: usize,
    base_seed: u64,
) -> Result<Vec<MetricsSummary>> {
    if reps == 0 {
        return Err(Error::InvalidArgument("at least one replication is required".into()));
    }
    sc.validate_environment()?;
    let truth = sc.derive_ground_truth();
    policies
        .iter()
        .map(|&kind| {
            let trials = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let mut policy = kind.build(sc, params)?;
                    let seed = replication_seed(base_seed, kind.name(), r as u64);
                    let trace = run_trial(sc, policy.as_mut(), seed)?;
                    Ok(trial_metrics(&trace, sc, &truth))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(summarise(kind, &trials, sc))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// Vary `B`, keeping `B / T` at the base scenario's ratio.
    Budget,
    /// Keep `B` and set `T = ratio · B`.
    HorizonRatio,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Budget => "budget",
            SweepParam::HorizonRatio => "horizon-ratio",
        }
    }

    /// Scenario at one grid value. Non-integer horizons round to nearest.
    pub fn apply(self, sc: &Scenario, value: f64) -> Result<Scenario> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidArgument(format!("grid value {value} must be positive")));
        }
        let (budget, horizon) = match self {
            SweepParam::Budget => {
                if value.fract() != 0.0 {
                    return Err(Error::InvalidArgument(format!("budget {value} is not an integer")));
                }
                let ratio = sc.horizon as f64 / sc.budget as f64;
                (value as usize, (value * ratio).round() as usize)
            }
            SweepParam::HorizonRatio => {
                if value < 1.0 {
                    return Err(Error::InvalidArgument(format!("horizon ratio {value} is below 1")));
                }
                (sc.budget, (value * sc.budget as f64).round() as usize)
            }
        };
        sc.with_budget_horizon(budget, horizon)
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "budget" => Ok(SweepParam::Budget),
            "horizon-ratio" => Ok(SweepParam::HorizonRatio),
            other => Err(Error::InvalidArgument(format!("unknown sweep parameter `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    pub budget: usize,
    pub horizon: usize,
    pub summary: MetricsSummary,
}

/// Run every policy at every grid point. Each point reuses the same seeds.
pub fn sweep(
    sc: &Scenario,
    param: SweepParam,
    grid: &[f64],
    policies: &[PolicyKind],
    params: &HyperParams,
    reps: usize,
    base_seed: u64,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("sweep grid is empty".into()));
    }
    let mut rows = Vec::with_capacity(grid.len() * policies.len());
    for &value in grid {
        let point = param.apply(sc, value)?;
        for summary in run_experiment(&point, policies, params, reps, base_seed)? {
            rows.push(SweepRow {
                param,
                value,
                budget: point.budget,
                horizon: point.horizon,
                summary,
            });
        }
    }
    Ok(rows)
}
