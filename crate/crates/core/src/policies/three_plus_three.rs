//! Contextual 3+3 dose escalation: one independent machine per subgroup.

use rand::RngCore;

use super::{LearningState, Policy, PolicyKind, RoundContext, SafetyCall, ThreePlusThreeRule};
use crate::scenario::{Outcome, Scenario};

const COHORT: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CohortDecision {
    /// The current cohort still has open slots.
    Continue,
    Escalate,
    Expand,
    Stop { recommend: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThreePlusThreeMachine {
    num_doses: usize,
    rule: ThreePlusThreeRule,
    dose: usize,
    expanded: bool,
    /// Toxicities in the first cohort at the current dose.
    first_toxic: u32,
    cohort_seen: u32,
    cohort_toxic: u32,
    stopped: Option<usize>,
}

impl ThreePlusThreeMachine {
    pub fn new(num_doses: usize, rule: ThreePlusThreeRule) -> Self {
        ThreePlusThreeMachine {
            num_doses,
            rule,
            dose: 1,
            expanded: false,
            first_toxic: 0,
            cohort_seen: 0,
            cohort_toxic: 0,
            stopped: None,
        }
    }

    /// Dose for the next patient, `None` once stopped.
    pub fn current_dose(&self) -> Option<usize> {
        if self.stopped.is_some() {
            None
        } else {
            Some(self.dose)
        }
    }

    pub fn is_stopped(&self) -> bool {
        self.stopped.is_some()
    }

    /// Final recommendation. A machine still running is treated as if it
    /// stopped at the dose under study.
    pub fn recommendation(&self) -> usize {
        self.stopped.unwrap_or(match self.rule {
            ThreePlusThreeRule::StoppedDose => self.dose,
            ThreePlusThreeRule::PreviousDose => self.dose - 1,
        })
    }

    pub fn observe(&mut self, toxic: bool) -> CohortDecision {
        if let Some(recommend) = self.stopped {
            return CohortDecision::Stop { recommend };
        }
        self.cohort_seen += 1;
        self.cohort_toxic += u32::from(toxic);
        if self.cohort_seen < COHORT {
            return CohortDecision::Continue;
        }
        let toxic = std::mem::take(&mut self.cohort_toxic);
        self.cohort_seen = 0;
        let escalate = if self.expanded {
            self.first_toxic + toxic <= 1
        } else if toxic == 1 {
            self.expanded = true;
            self.first_toxic = 1;
            return CohortDecision::Expand;
        } else {
            toxic == 0
        };
        if !escalate {
            return self.stop(match self.rule {
                ThreePlusThreeRule::StoppedDose => self.dose,
                ThreePlusThreeRule::PreviousDose => self.dose - 1,
            });
        }
        if self.dose == self.num_doses {
            return self.stop(match self.rule {
                ThreePlusThreeRule::StoppedDose => 0,
                ThreePlusThreeRule::PreviousDose => self.num_doses,
            });
        }
        self.dose += 1;
        self.expanded = false;
        self.first_toxic = 0;
        CohortDecision::Escalate
    }

    fn stop(&mut self, recommend: usize) -> CohortDecision {
        self.stopped = Some(recommend);
        CohortDecision::Stop { recommend }
    }
}

#[derive(Debug, Clone)]
pub struct ThreePlusThree {
    machines: Vec<ThreePlusThreeMachine>,
    zeta: f64,
    state: LearningState,
}

impl ThreePlusThree {
    pub fn new(sc: &Scenario, rule: ThreePlusThreeRule) -> Self {
        ThreePlusThree {
            machines: vec![ThreePlusThreeMachine::new(sc.num_doses, rule); sc.num_subgroups],
            zeta: sc.mtd_threshold,
            state: LearningState::new(sc.num_subgroups, sc.num_doses),
        }
    }

    pub fn machine(&self, s: usize) -> &ThreePlusThreeMachine {
        &self.machines[s]
    }
}

impl Policy for ThreePlusThree {
    fn kind(&self) -> PolicyKind {
        PolicyKind::C3p3
    }

    fn reset(&mut self) {
        let k = self.state.num_doses();
        for m in &mut self.machines {
            *m = ThreePlusThreeMachine::new(k, m.rule);
        }
        self.state = LearningState::new(self.machines.len(), k);
    }

    fn choose(&mut self, ctx: &RoundContext, _rng: &mut dyn RngCore) -> usize {
        if ctx.budget_left == 0 {
            return 0;
        }
        self.machines[ctx.subgroup].current_dose().unwrap_or(0)
    }

    fn record(&mut self, ctx: &RoundContext, action: usize, outcome: Option<Outcome>) {
        self.state.record(ctx.subgroup, action, outcome);
        if let (Some(o), true) = (outcome, action > 0) {
            self.machines[ctx.subgroup].observe(o.toxicity);
        }
    }

    fn recommend(&mut self, _rng: &mut dyn RngCore) -> Vec<usize> {
        self.machines.iter().map(ThreePlusThreeMachine::recommendation).collect()
    }

    fn safety_calls(&self) -> Vec<Vec<SafetyCall>> {
        self.state.empirical_safety_calls(self.zeta)
    }

    fn state(&self) -> &LearningState {
        &self.state
    }
}
