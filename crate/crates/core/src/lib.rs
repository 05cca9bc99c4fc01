//! Simulation library for budget- and safety-constrained contextual bandits
//! applied to dose-finding trials.
//!
//! Patients arrive one per round from one of several subgroups. A policy
//! either skips the patient or assigns one of `K` doses, observing a binary
//! efficacy and toxicity outcome. Treating costs budget; the trial runs for a
//! fixed number of rounds. At the end every policy recommends one dose per
//! subgroup (or none).
//!
//! Modules, bottom-up:
//!
//! - [`scenario`]: ground-truth environment, arrivals and outcomes.
//! - [`dose_tox`]: one-parameter power skeleton for dose toxicity.
//! - [`posterior`]: Beta posteriors, credible-interval widths, expected improvement.
//! - [`budget_lp`]: closed-form solution of the relaxed accept/skip LP.
//! - [`policies`]: the budgeted learners and four contextual baselines.
//! - [`harness`]: replications, metrics, sweeps and CSV output.

pub mod budget_lp;
pub mod dose_tox;
pub mod error;
pub mod harness;
pub mod policies;
pub mod posterior;
pub mod scenario;
pub mod seeding;

pub use error::{Error, Result};
pub use harness::{run_experiment, run_trial, sweep, MetricsSummary, SweepParam, TrialTrace};
pub use policies::{HyperParams, Policy, PolicyKind};
pub use scenario::{GroundTruth, Scenario};
