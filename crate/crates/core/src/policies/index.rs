//! Contextual UCB and KL-UCB: one independent index learner per subgroup.
//!
//! Neither learner skips patients or filters doses during play. Toxicity is
//! tracked only for the end-of-trial recommendation.

use rand::RngCore;

use super::{argmax_dose, HyperParams, LearningState, Policy, PolicyKind, RoundContext, SafetyCall};
use crate::scenario::{Outcome, Scenario};

const KL_PRECISION: f64 = 1e-9;

/// `q̄ + sqrt(c · ln N_s / N_{s,k})`, or `+∞` for an unvisited dose.
pub fn ucb_index(q_bar: f64, arrivals: u32, allocations: u32, exploration: f64) -> f64 {
    if allocations == 0 {
        return f64::INFINITY;
    }
    let n = f64::from(arrivals.max(1));
    q_bar + (exploration * n.ln() / f64::from(allocations)).sqrt()
}

/// Bernoulli KL divergence `I(p, q)` with `0 · ln 0 = 0`.
pub fn kl_divergence(p: f64, q: f64) -> f64 {
    let term = |x: f64, y: f64| if x == 0.0 { 0.0 } else { x * (x / y).ln() };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

/// Largest `q ≥ q̄` with `N_{s,k} · I(q̄, q) ≤ ln N_s + ln ln N_s`, by
/// bisection. `+∞` for an unvisited dose.
pub fn kl_ucb_index(q_bar: f64, arrivals: u32, allocations: u32) -> f64 {
    if allocations == 0 {
        return f64::INFINITY;
    }
    if q_bar >= 1.0 {
        return 1.0;
    }
    let n = f64::from(arrivals.max(2));
    let level = ((n.ln() + n.ln().ln()) / f64::from(allocations)).max(0.0);
    let (mut lo, mut hi) = (q_bar, 1.0);
    while hi - lo > KL_PRECISION {
        let mid = 0.5 * (lo + hi);
        if kl_divergence(q_bar, mid) > level {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexKind {
    Ucb,
    KlUcb,
}

#[derive(Debug, Clone)]
pub struct IndexPolicy {
    kind: IndexKind,
    exploration: f64,
    theta: f64,
    zeta: f64,
    state: LearningState,
}

impl IndexPolicy {
    pub fn new(kind: IndexKind, sc: &Scenario, params: &HyperParams) -> Self {
        IndexPolicy {
            kind,
            exploration: params.exploration,
            theta: sc.efficacy_threshold,
            zeta: sc.mtd_threshold,
            state: LearningState::new(sc.num_subgroups, sc.num_doses),
        }
    }

    pub fn index(&self, s: usize, dose: usize, arrivals: u32) -> f64 {
        let q = self.state.q_bar(s, dose);
        let n = self.state.allocations[s][dose - 1];
        match self.kind {
            IndexKind::Ucb => ucb_index(q, arrivals, n, self.exploration),
            IndexKind::KlUcb => kl_ucb_index(q, arrivals, n),
        }
    }
}

impl Policy for IndexPolicy {
    fn kind(&self) -> PolicyKind {
        match self.kind {
            IndexKind::Ucb => PolicyKind::CUcb,
            IndexKind::KlUcb => PolicyKind::CKlUcb,
        }
    }

    fn reset(&mut self) {
        self.state = LearningState::new(self.state.num_subgroups(), self.state.num_doses());
    }

    fn choose(&mut self, ctx: &RoundContext, _rng: &mut dyn RngCore) -> usize {
        if ctx.budget_left == 0 {
            return 0;
        }
        let s = ctx.subgroup;
        let arrivals = self.state.arrivals[s] + 1;
        argmax_dose((1..=self.state.num_doses()).map(|k| (k, self.index(s, k, arrivals))))
    }

    fn record(&mut self, ctx: &RoundContext, action: usize, outcome: Option<Outcome>) {
        self.state.record(ctx.subgroup, action, outcome);
    }

    fn recommend(&mut self, _rng: &mut dyn RngCore) -> Vec<usize> {
        (0..self.state.num_subgroups())
            .map(|s| self.state.empirical_recommendation(s, self.theta, self.zeta))
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
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independent root of `I(p, q) = level` above `p` by plain bisection
    /// on a fixed 200-step schedule.
    fn kl_root(p: f64, level: f64) -> f64 {
        let (mut lo, mut hi) = (p, 1.0 - 1e-15);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let head = if p > 0.0 { p * (p / mid).ln() } else { 0.0 };
            let d = head + (1.0 - p) * ((1.0 - p) / (1.0 - mid)).ln();
            if d > level {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    #[test]
    fn ucb_examples() {
        assert_eq!(ucb_index(0.3, 50, 5, 0.0), 0.3);
        let v = ucb_index(0.5, 100, 10, 2.0);
        assert_abs_diff_eq!(v, 0.5 + (2.0 * 100f64.ln() / 10.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(v, 1.459705, epsilon = 1e-6);
        let v32 = 0.5f32 + (2.0f32 * 100f32.ln() / 10.0).sqrt();
        assert_abs_diff_eq!(v, f64::from(v32), epsilon = 1e-6);
        assert_eq!(ucb_index(0.5, 100, 0, 2.0), f64::INFINITY);
    }

    #[test]
    fn kl_ucb_examples() {
        assert_eq!(kl_ucb_index(1.0, 100, 10), 1.0);
        assert_eq!(kl_ucb_index(0.2, 100, 0), f64::INFINITY);

        let level = (100f64.ln() + 100f64.ln().ln()) / 10.0;
        // I(0, q) = -ln(1 - q) has a closed-form root.
        let closed = 1.0 - (-level).exp();
        assert_abs_diff_eq!(kl_ucb_index(0.0, 100, 10), closed, epsilon = 1e-8);
        assert_abs_diff_eq!(kl_ucb_index(0.0, 100, 10), kl_root(0.0, level), epsilon = 1e-8);
        assert_abs_diff_eq!(closed, 0.458404, epsilon = 1e-6);

        let half = kl_ucb_index(0.5, 100, 10);
        assert_abs_diff_eq!(half, kl_root(0.5, level), epsilon = 1e-8);
        assert_abs_diff_eq!(kl_divergence(0.5, half), level, epsilon = 1e-7);
        assert!(half > 0.5);
    }

    #[test]
    fn kl_divergence_conventions() {
        assert_abs_diff_eq!(kl_divergence(0.0, 0.3), -(0.7f64.ln()), epsilon = 1e-15);
        assert_eq!(kl_divergence(0.4, 0.4), 0.0);
        assert_abs_diff_eq!(kl_divergence(1.0, 0.5), 2f64.ln(), epsilon = 1e-15);
    }

    fn ctx(s: usize) -> RoundContext {
        RoundContext {
            round: 1,
            subgroup: s,
            budget_left: 10,
            rounds_left: 10,
        }
    }

    #[test]
    fn unvisited_dose_first_then_dominant_mean() {
        let sc = Scenario::reference();
        let mut p = IndexPolicy::new(IndexKind::Ucb, &sc, &HyperParams::default());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let o = |e| Some(Outcome { efficacy: e, toxicity: false });
        p.record(&ctx(0), 1, o(true));
        p.record(&ctx(0), 2, o(false));
        assert_eq!(p.choose(&ctx(0), &mut rng), 3);

        let mut p = IndexPolicy::new(IndexKind::Ucb, &sc, &HyperParams::default());
        for i in 0..10 {
            for k in 1..=6 {
                p.record(&ctx(1), k, o(if k == 1 { i < 9 } else { i < 1 }));
            }
        }
        assert_eq!(p.choose(&ctx(1), &mut rng), 1);
        assert_eq!(
            p.choose(&RoundContext { budget_left: 0, ..ctx(1) }, &mut rng),
            0
        );
    }
}
