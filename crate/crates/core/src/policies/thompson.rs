//! Contextual independent Thompson sampling.
//!
//! Efficacy and toxicity of every `(subgroup, dose)` cell carry independent
//! Beta posteriors. Play samples the arriving subgroup's efficacies and takes
//! the argmax; the recommendation samples both posteriors once.

use rand::RngCore;

use super::{argmax_dose, LearningState, Policy, PolicyKind, RoundContext, SafetyCall};
use crate::posterior::BetaPosterior;
use crate::scenario::{Outcome, Scenario};

#[derive(Debug, Clone)]
pub struct IndepThompson {
    theta: f64,
    zeta: f64,
    state: LearningState,
}

impl IndepThompson {
    pub fn new(sc: &Scenario) -> Self {
        IndepThompson {
            theta: sc.efficacy_threshold,
            zeta: sc.mtd_threshold,
            state: LearningState::new(sc.num_subgroups, sc.num_doses),
        }
    }

    pub fn efficacy_posterior(&self, s: usize, dose: usize) -> BetaPosterior {
        let n = self.state.allocations[s][dose - 1];
        let x = self.state.efficacies[s][dose - 1];
        BetaPosterior::from_counts(x, n - x)
    }

    pub fn toxicity_posterior(&self, s: usize, dose: usize) -> BetaPosterior {
        let n = self.state.allocations[s][dose - 1];
        let y = self.state.toxicities[s][dose - 1];
        BetaPosterior::from_counts(y, n - y)
    }
}

impl Policy for IndepThompson {
    fn kind(&self) -> PolicyKind {
        PolicyKind::CIndepTs
    }

    fn reset(&mut self) {
        self.state = LearningState::new(self.state.num_subgroups(), self.state.num_doses());
    }

    fn choose(&mut self, ctx: &RoundContext, rng: &mut dyn RngCore) -> usize {
        if ctx.budget_left == 0 {
            return 0;
        }
        let s = ctx.subgroup;
        let draws: Vec<(usize, f64)> = (1..=self.state.num_doses())
            .map(|k| (k, self.efficacy_posterior(s, k).sample(rng)))
            .collect();
        argmax_dose(draws)
    }

    fn record(&mut self, ctx: &RoundContext, action: usize, outcome: Option<Outcome>) {
        self.state.record(ctx.subgroup, action, outcome);
    }

    fn recommend(&mut self, rng: &mut dyn RngCore) -> Vec<usize> {
        (0..self.state.num_subgroups())
            .map(|s| {
                let mut scored = Vec::new();
                for k in 1..=self.state.num_doses() {
                    let q = self.efficacy_posterior(s, k).sample(rng);
                    let p = self.toxicity_posterior(s, k).sample(rng);
                    if p <= self.zeta && q >= self.theta {
                        scored.push((k, q));
                    }
                }
                argmax_dose(scored)
            })
            .collect()
    }

    fn safety_calls(&self) -> Vec<Vec<SafetyCall>> {
        self.state.empirical_safety_calls(self.zeta)
    }

    fn state(&self) -> &LearningState {
        &self.state
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ctx() -> RoundContext {
        RoundContext {
            round: 1,
            subgroup: 0,
            budget_left: 5,
            rounds_left: 5,
        }
    }

    fn two_dose_scenario() -> Scenario {
        let mut sc = Scenario::reference();
        sc.num_doses = 2;
        for row in sc.efficacy.iter_mut().chain(sc.toxicity.iter_mut()) {
            row.truncate(2);
        }
        sc.skeleton.truncate(2);
        sc
    }

    #[test]
    fn dominant_posterior_wins() {
        let sc = two_dose_scenario();
        let mut p = IndepThompson::new(&sc);
        // Posteriors (1000, 1) on dose 1 and (1, 1000) on dose 2.
        for _ in 0..999 {
            p.record(&ctx(), 1, Some(Outcome { efficacy: true, toxicity: false }));
            p.record(&ctx(), 2, Some(Outcome { efficacy: false, toxicity: false }));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let firsts = (0..1000).filter(|_| p.choose(&ctx(), &mut rng) == 1).count();
        assert!(firsts > 990, "{firsts}");
    }

    #[test]
    fn fresh_posteriors_choose_uniformly() {
        let sc = Scenario::reference();
        let mut p = IndepThompson::new(&sc);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 10_000;
        let mut counts = [0usize; 6];
        for _ in 0..n {
            counts[p.choose(&ctx(), &mut rng) - 1] += 1;
        }
        let share = 1.0 / 6.0;
        let sd = (n as f64 * share * (1.0 - share)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * share).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn seeded_choices_repeat() {
        let sc = Scenario::reference();
        let mut p = IndepThompson::new(&sc);
        let run = |p: &mut IndepThompson| {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            (0..50).map(|_| p.choose(&ctx(), &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(run(&mut p), run(&mut p));
    }
}
