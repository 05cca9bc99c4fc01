mod common;

use common::le_noisy;
use dosefind::harness::{run_replications, run_trial};
use dosefind::{run_experiment, HyperParams, PolicyKind, Scenario};
use proptest::prelude::*;

#[test]
fn per_subgroup_error_shrinks_with_more_patients() {
    let base = Scenario::reference();
    let params = HyperParams::default();
    let points: Vec<_> = [100usize, 250, 500]
        .iter()
        .map(|&b| {
            let sc = base.with_budget_horizon(b, 3 * b).unwrap();
            run_experiment(&sc, &[PolicyKind::C3tBudget], &params, 500, 7).unwrap().remove(0)
        })
        .collect();
    for s in 0..3 {
        for w in points.windows(2) {
            let (lo, hi) = (w[1].dose_error[s], w[0].dose_error[s]);
            assert!(le_noisy((lo.mean, lo.se), (hi.mean, hi.se)), "subgroup {}: {} then {}", s + 1, hi.mean, lo.mean);
        }
    }
}

#[test]
fn variants_coincide_without_the_efficacy_filter() {
    // θ = 0 makes the efficacy condition vacuous and T = B forces every ψ to 1,
    // so the two budgeted variants face identical decisions.
    let mut sc = Scenario::reference().with_budget_horizon(300, 300).unwrap();
    sc.efficacy_threshold = 0.0;
    let params = HyperParams::default();
    for seed in 0..20 {
        let mut b = PolicyKind::C3tBudget.build(&sc, &params).unwrap();
        let mut e = PolicyKind::C3tBudgetE.build(&sc, &params).unwrap();
        let tb = run_trial(&sc, b.as_mut(), seed).unwrap();
        let te = run_trial(&sc, e.as_mut(), seed).unwrap();
        assert_eq!(tb.rounds, te.rounds, "seed {seed}");
    }
}

#[test]
fn mse_curves_settle_for_recruited_subgroups() {
    let sc = Scenario::reference();
    let m = run_experiment(&sc, &[PolicyKind::C3tBudget], &HyperParams::default(), 500, 3)
        .unwrap()
        .remove(0);
    for s in 1..3 {
        let curve = &m.mse[s];
        assert!(curve.iter().all(|&x| x >= 0.0));
        let checkpoints: Vec<f64> = (200..=sc.horizon).step_by(200).map(|t| curve[t - 1]).collect();
        for w in checkpoints.windows(2) {
            assert!(w[1] <= w[0] * 1.05, "subgroup {}: {checkpoints:?}", s + 1);
        }
    }
}

#[test]
fn treated_counts_stay_within_budget_for_every_policy() {
    let sc = Scenario::reference().with_budget_horizon(120, 300).unwrap();
    let params = HyperParams::default();
    for kind in PolicyKind::ALL {
        for tr in run_replications(&sc, kind, &params, 40, 99).unwrap() {
            assert!(tr.treated() <= sc.budget);
            assert_eq!(tr.treated() + tr.budget_left(), sc.budget);
            assert!(tr.rounds.iter().all(|r| (r.action == 0) == r.outcome.is_none()));
        }
    }
}

#[test]
fn summaries_are_reproducible() {
    let sc = Scenario::reference().with_budget_horizon(90, 270).unwrap();
    let params = HyperParams::default();
    let a = run_experiment(&sc, &PolicyKind::ALL, &params, 30, 5).unwrap();
    let b = run_experiment(&sc, &PolicyKind::ALL, &params, 30, 5).unwrap();
    assert_eq!(a, b);
    let c = run_experiment(&sc, &PolicyKind::ALL, &params, 30, 6).unwrap();
    assert_ne!(a, c);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn budget_is_conserved(budget in 1usize..60, extra in 0usize..80, seed in any::<u64>(), which in 0usize..6) {
        let sc = Scenario::reference().with_budget_horizon(budget, budget + extra).unwrap();
        let kind = PolicyKind::ALL[which];
        let mut p = kind.build(&sc, &HyperParams::default()).unwrap();
        let tr = run_trial(&sc, p.as_mut(), seed).unwrap();
        prop_assert_eq!(tr.treated() + tr.budget_left(), budget);
        prop_assert_eq!(tr.rounds.len(), budget + extra);
        prop_assert!(tr.recommendation.iter().all(|&d| d <= sc.num_doses));
    }
}
