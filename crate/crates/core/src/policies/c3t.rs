//! Budgeted, safety-filtered contextual UCB.
//!
//! Each round every subgroup gets a candidate dose: the highest efficacy UCB
//! among doses whose model toxicity, evaluated at the optimistic parameter
//! `â_s + α_s`, stays under the ceiling. Subgroups are then ranked by a score
//! and the relaxed accept/skip LP turns the remaining budget rate into an
//! acceptance probability for the arriving patient.
//!
//! The two variants differ in the score and the candidate filter:
//!
//! - [`C3tVariant::Budget`] requires the efficacy UCB to clear the floor and
//!   ranks by expected credible-interval improvement, spreading patients to
//!   where estimates are weakest.
//! - [`C3tVariant::EfficacyFocused`] filters on toxicity alone and ranks by the
//!   best efficacy UCB, concentrating patients on responsive subgroups.

use rand::{Rng, RngCore};

use super::{argmax_dose, index::ucb_index, BoundaryFits, FinalCandidates, HyperParams, LearningState, Policy, PolicyKind, RoundContext, SafetyCall};
use crate::budget_lp::{remaining_ratio, solve_lp_costed};
use crate::dose_tox::{aggregate_parameter, confidence_radius, SkeletonModel};
use crate::error::Result;
use crate::posterior::{expected_improvement, BetaPosterior};
use crate::scenario::{Outcome, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum C3tVariant {
    Budget,
    EfficacyFocused,
}

/// Candidate dose and ranking score of one subgroup in one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubgroupChoice {
    pub dose: usize,
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct C3tPolicy {
    variant: C3tVariant,
    params: HyperParams,
    model: SkeletonModel,
    pi: Vec<f64>,
    costs: Vec<f64>,
    deltas: Vec<f64>,
    theta: f64,
    zeta: f64,
    state: LearningState,
    posteriors: Vec<Vec<BetaPosterior>>,
    /// Per-dose parameter fits; only allocated doses carry weight.
    fits: Vec<Vec<f64>>,
    /// Memoised credible-interval improvement per cell, cleared on update.
    improvement: Vec<Vec<Option<f64>>>,
}

impl C3tPolicy {
    pub fn new(variant: C3tVariant, sc: &Scenario, params: &HyperParams) -> Result<Self> {
        let model = SkeletonModel::from_skeleton(&sc.skeleton, params.a_min, params.a_max)?;
        let (s_n, k_n) = (sc.num_subgroups, sc.num_doses);
        Ok(C3tPolicy {
            variant,
            params: params.clone(),
            model,
            pi: sc.pi.clone(),
            costs: sc.cost.clone(),
            deltas: sc.safety_confidence.clone(),
            theta: sc.efficacy_threshold,
            zeta: sc.mtd_threshold,
            state: LearningState::new(s_n, k_n),
            posteriors: vec![vec![BetaPosterior::uniform(); k_n]; s_n],
            fits: vec![vec![1.0; k_n]; s_n],
            improvement: vec![vec![None; k_n]; s_n],
        })
    }

    pub fn variant(&self) -> C3tVariant {
        self.variant
    }

    pub fn model(&self) -> &SkeletonModel {
        &self.model
    }

    fn num_doses(&self) -> usize {
        self.model.num_doses()
    }

    /// `â_s`: allocation-weighted mean of the per-dose fits, `None` before
    /// the first treatment.
    pub fn fitted_parameter(&self, s: usize) -> Option<f64> {
        if self.state.treated(s) == 0 {
            return None;
        }
        let weights: Vec<u32> = (0..self.num_doses())
            .map(|k| {
                let (n, y) = (self.state.allocations[s][k], self.state.toxicities[s][k]);
                match self.params.boundary_fits {
                    BoundaryFits::Exclude if y == 0 || y == n => 0,
                    _ => n,
                }
            })
            .collect();
        // Every treated dose at a boundary rate: fall back to the skeleton itself.
        Some(aggregate_parameter(&self.fits[s], &weights).unwrap_or(1.0))
    }

    /// `α_s` at `arrivals` arrivals.
    pub fn radius(&self, s: usize, arrivals: u32) -> f64 {
        confidence_radius(
            arrivals,
            self.deltas[s],
            self.params.radius_scale,
            self.params.radius_exponent,
            self.num_doses(),
        )
        .expect("arrivals and delta validated")
    }

    pub fn ucb(&self, s: usize, dose: usize, arrivals: u32) -> f64 {
        ucb_index(
            self.state.q_bar(s, dose),
            arrivals,
            self.state.allocations[s][dose - 1],
            self.params.exploration,
        )
    }

    /// In-trial candidate set of subgroup `s` when it has seen `arrivals`
    /// patients. Empty until the subgroup has data.
    pub fn candidate_set(&self, s: usize, arrivals: u32) -> Vec<usize> {
        let Some(a_hat) = self.fitted_parameter(s) else {
            return Vec::new();
        };
        if arrivals == 0 {
            return Vec::new();
        }
        let optimistic = a_hat + self.radius(s, arrivals);
        (1..=self.num_doses())
            .filter(|&k| self.model.toxicity(k, optimistic) <= self.zeta)
            .filter(|&k| match self.variant {
                C3tVariant::Budget => self.ucb(s, k, arrivals) >= self.theta,
                C3tVariant::EfficacyFocused => true,
            })
            .collect()
    }

    fn improvement_score(&mut self, s: usize, dose: usize) -> f64 {
        if let Some(v) = self.improvement[s][dose - 1] {
            return v;
        }
        let post = self.posteriors[s][dose - 1];
        let v = expected_improvement(post.mode(), post, self.params.coverage);
        self.improvement[s][dose - 1] = Some(v);
        v
    }

    /// Candidate dose `k*_s` and ranking score for subgroup `s`.
    pub fn subgroup_choice(&mut self, s: usize, arrivals: u32) -> Option<SubgroupChoice> {
        let cands = self.candidate_set(s, arrivals);
        let scored: Vec<(usize, f64)> = cands.iter().map(|&k| (k, self.ucb(s, k, arrivals))).collect();
        let dose = argmax_dose(scored.iter().copied());
        if dose == 0 {
            return None;
        }
        let score = match self.variant {
            C3tVariant::Budget => self.improvement_score(s, dose),
            C3tVariant::EfficacyFocused => scored.iter().find(|(k, _)| *k == dose).map(|p| p.1).unwrap(),
        };
        Some(SubgroupChoice { dose, score })
    }

    /// Acceptance probabilities for every subgroup this round, with the
    /// candidate doses. Subgroups without a candidate rank last.
    pub fn allocation(&mut self, arriving: usize, budget_left: usize, rounds_left: usize) -> (Vec<Option<SubgroupChoice>>, Vec<f64>) {
        let s_n = self.state.num_subgroups();
        let choices: Vec<Option<SubgroupChoice>> = (0..s_n)
            .map(|s| {
                let n = self.state.arrivals[s] + u32::from(s == arriving);
                self.subgroup_choice(s, n)
            })
            .collect();
        let values: Vec<f64> = choices
            .iter()
            .map(|c| c.map_or(f64::NEG_INFINITY, |c| c.score))
            .collect();
        let rate = remaining_ratio(budget_left, rounds_left).expect("at least one round remains");
        let psi = solve_lp_costed(&values, &self.costs, &self.pi, rate)
            .expect("scores are never NaN")
            .psi;
        (choices, psi)
    }
}

impl Policy for C3tPolicy {
    fn kind(&self) -> PolicyKind {
        match self.variant {
            C3tVariant::Budget => PolicyKind::C3tBudget,
            C3tVariant::EfficacyFocused => PolicyKind::C3tBudgetE,
        }
    }

    fn reset(&mut self) {
        let (s_n, k_n) = (self.state.num_subgroups(), self.num_doses());
        self.state = LearningState::new(s_n, k_n);
        self.posteriors = vec![vec![BetaPosterior::uniform(); k_n]; s_n];
        self.fits = vec![vec![1.0; k_n]; s_n];
        self.improvement = vec![vec![None; k_n]; s_n];
    }

    fn choose(&mut self, ctx: &RoundContext, rng: &mut dyn RngCore) -> usize {
        if ctx.budget_left == 0 {
            return 0;
        }
        let s = ctx.subgroup;
        let arrivals = self.state.arrivals[s] + 1;
        // Initial sweep: the n-th arrival of a subgroup gets dose n.
        if arrivals as usize <= self.num_doses() {
            return arrivals as usize;
        }
        let (choices, psi) = self.allocation(s, ctx.budget_left, ctx.rounds_left);
        let Some(choice) = choices[s] else {
            return 0;
        };
        let accept = psi[s];
        if accept >= 1.0 || (accept > 0.0 && rng.random::<f64>() < accept) {
            choice.dose
        } else {
            0
        }
    }

    fn record(&mut self, ctx: &RoundContext, action: usize, outcome: Option<Outcome>) {
        let s = ctx.subgroup;
        self.state.record(s, action, outcome);
        if action >= 1 {
            let o = outcome.expect("treated round has an outcome");
            self.posteriors[s][action - 1].update(o.efficacy);
            self.improvement[s][action - 1] = None;
            self.fits[s][action - 1] = self.model.fit(action, self.state.p_bar(s, action));
        }
    }

    fn recommend(&mut self, _rng: &mut dyn RngCore) -> Vec<usize> {
        (0..self.state.num_subgroups())
            .map(|s| {
                let cands: Vec<usize> = match self.params.final_candidates {
                    FinalCandidates::Empirical => match self.fitted_parameter(s) {
                        Some(a_hat) => (1..=self.num_doses())
                            .filter(|&k| {
                                self.state.allocations[s][k - 1] > 0
                                    && self.state.q_bar(s, k) >= self.theta
                                    && self.model.toxicity(k, a_hat) <= self.zeta
                            })
                            .collect(),
                        None => Vec::new(),
                    },
                    FinalCandidates::LastUcb => self.candidate_set(s, self.state.arrivals[s]),
                };
                argmax_dose(cands.into_iter().map(|k| (k, self.state.q_bar(s, k))))
            })
            .collect()
    }

    fn safety_calls(&self) -> Vec<Vec<SafetyCall>> {
        (0..self.state.num_subgroups())
            .map(|s| match self.fitted_parameter(s) {
                Some(a_hat) => (1..=self.num_doses())
                    .map(|k| {
                        if self.model.toxicity(k, a_hat) <= self.zeta {
                            SafetyCall::Safe
                        } else {
                            SafetyCall::Unsafe
                        }
                    })
                    .collect(),
                None => vec![SafetyCall::SafeByConvention; self.num_doses()],
            })
            .collect()
    }

    fn state(&self) -> &LearningState {
        &self.state
    }

    fn fitted_parameters(&self) -> Option<Vec<Option<f64>>> {
        Some((0..self.state.num_subgroups()).map(|s| self.fitted_parameter(s)).collect())
    }
}
