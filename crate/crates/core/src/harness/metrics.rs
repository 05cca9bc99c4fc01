//! Per-trial measurements and their aggregation across replications.

use super::{scenario_fingerprint, TrialTrace};
use crate::error::{Error, Result};
use crate::policies::PolicyKind;
use crate::scenario::{GroundTruth, Scenario};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    /// Number of observations behind the mean.
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: impl IntoIterator<Item = f64>) -> Self {
        let xs: Vec<f64> = xs.into_iter().collect();
        let n = xs.len();
        if n == 0 {
            return Estimate { mean: f64::NAN, se: f64::NAN, n };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Estimate { mean, se, n }
    }
}

/// Everything measured on a single trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialMetrics {
    /// `1.0` when the subgroup's recommendation is wrong.
    pub dose_error: Vec<f64>,
    pub type1: f64,
    pub type2: f64,
    /// Safety calls made by convention on never-allocated doses.
    pub conventional_calls: usize,
    pub treated: Vec<usize>,
    pub efficacy_bits: Vec<usize>,
    pub toxicity_bits: Vec<usize>,
    /// `recruitment[s][t]`: treated patients of `s` after round `t + 1`.
    pub recruitment: Vec<Vec<u32>>,
    /// `mse[s][t]`: squared error of the tracked efficacy estimate after round `t + 1`.
    pub mse: Vec<Vec<f64>>,
}

impl TrialMetrics {
    pub fn total_treated(&self) -> usize {
        self.treated.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSummary {
    pub policy: PolicyKind,
    pub replications: usize,
    pub dose_error: Vec<Estimate>,
    pub total_error: Estimate,
    pub safe_type1: Estimate,
    pub safe_type2: Estimate,
    pub safe_total: Estimate,
    pub efficacy_per_patient: Estimate,
    pub toxicity_per_patient: Estimate,
    /// Mean treated count per subgroup by round.
    pub recruitment: Vec<Vec<f64>>,
    pub mse: Vec<Vec<f64>>,
    /// Share of replications whose treated-patient toxicity in `s` stays
    /// within the compliance ceiling.
    pub toxicity_compliance: Vec<Estimate>,
    /// Replications with no treated patient in `s`, left out of the share above.
    pub compliance_excluded: Vec<usize>,
    pub conventional_calls: usize,
}

/// Slack above the MTD threshold when checking average treated toxicity.
pub const COMPLIANCE_SLACK: f64 = 0.05;

/// Doses whose efficacy estimate feeds the MSE curve of `s`: the optimal
/// dose, or every truly safe dose when no dose should be recommended.
fn tracked_doses(sc: &Scenario, truth: &GroundTruth, s: usize) -> Vec<usize> {
    match truth.optimal_dose[s] {
        0 if truth.safe_boundary[s] > 0 => (1..=truth.safe_boundary[s]).collect(),
        0 => (1..=sc.num_doses).collect(),
        k => vec![k],
    }
}

pub fn trial_metrics(trace: &TrialTrace, sc: &Scenario, truth: &GroundTruth) -> TrialMetrics {
    let (s_n, k_n) = (sc.num_subgroups, sc.num_doses);
    let dose_error = (0..s_n)
        .map(|s| f64::from(trace.recommendation[s] != truth.optimal_dose[s]))
        .collect();

    let (mut safe, mut unsafe_, mut wrong_safe, mut wrong_unsafe, mut conventional) = (0, 0, 0, 0, 0);
    for (s, row) in trace.snapshot.safety_calls.iter().enumerate() {
        for (k, call) in row.iter().enumerate() {
            conventional += usize::from(matches!(call, crate::policies::SafetyCall::SafeByConvention));
            if truth.is_safe(s, k + 1) {
                safe += 1;
                wrong_safe += usize::from(!call.is_safe());
            } else {
                unsafe_ += 1;
                wrong_unsafe += usize::from(call.is_safe());
            }
        }
    }
    let rate = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };

    let tracked: Vec<Vec<usize>> = (0..s_n).map(|s| tracked_doses(sc, truth, s)).collect();
    let mut alloc = vec![vec![0u32; k_n]; s_n];
    let mut succ = vec![vec![0u32; k_n]; s_n];
    let mut treated = vec![0usize; s_n];
    let mut efficacy_bits = vec![0usize; s_n];
    let mut toxicity_bits = vec![0usize; s_n];
    let mut recruitment = vec![Vec::with_capacity(trace.rounds.len()); s_n];
    let mut mse = vec![Vec::with_capacity(trace.rounds.len()); s_n];
    let sq_err = |s: usize, alloc: &[Vec<u32>], succ: &[Vec<u32>]| {
        let doses = &tracked[s];
        doses
            .iter()
            .map(|&k| {
                let n = alloc[s][k - 1];
                let q_bar = if n == 0 { 0.0 } else { f64::from(succ[s][k - 1]) / f64::from(n) };
                (q_bar - sc.efficacy[s][k - 1]).powi(2)
            })
            .sum::<f64>()
            / doses.len() as f64
    };
    let mut current: Vec<f64> = (0..s_n).map(|s| sq_err(s, &alloc, &succ)).collect();
    for r in &trace.rounds {
        if let (Some(o), k) = (r.outcome, r.action) {
            let s = r.subgroup;
            alloc[s][k - 1] += 1;
            succ[s][k - 1] += u32::from(o.efficacy);
            treated[s] += 1;
            efficacy_bits[s] += usize::from(o.efficacy);
            toxicity_bits[s] += usize::from(o.toxicity);
            current[s] = sq_err(s, &alloc, &succ);
        }
        for s in 0..s_n {
            recruitment[s].push(treated[s] as u32);
            mse[s].push(current[s]);
        }
    }

    TrialMetrics {
        dose_error,
        type1: rate(wrong_safe, safe),
        type2: rate(wrong_unsafe, unsafe_),
        conventional_calls: conventional,
        treated,
        efficacy_bits,
        toxicity_bits,
        recruitment,
        mse,
    }
}

/// Aggregate traces of one policy on one scenario.
pub fn compute_metrics(traces: &[TrialTrace], sc: &Scenario) -> Result<MetricsSummary> {
    let Some(first) = traces.first() else {
        return Err(Error::InvalidArgument("no traces to summarise".into()));
    };
    let fingerprint = scenario_fingerprint(sc);
    if traces
        .iter()
        .any(|t| t.scenario_fingerprint != fingerprint || t.policy != first.policy)
    {
        return Err(Error::MixedScenarios);
    }
    let truth = sc.derive_ground_truth();
    let per_trial: Vec<TrialMetrics> = traces.iter().map(|t| trial_metrics(t, sc, &truth)).collect();
    Ok(summarise(first.policy, &per_trial, sc))
}

pub(crate) fn summarise(policy: PolicyKind, trials: &[TrialMetrics], sc: &Scenario) -> MetricsSummary {
    let s_n = sc.num_subgroups;
    let dose_error = (0..s_n)
        .map(|s| Estimate::from_samples(trials.iter().map(|m| m.dose_error[s])))
        .collect();
    let total_error = Estimate::from_samples(trials.iter().map(|m| m.dose_error.iter().sum::<f64>() / s_n as f64));
    let safe_type1 = Estimate::from_samples(trials.iter().map(|m| m.type1));
    let safe_type2 = Estimate::from_samples(trials.iter().map(|m| m.type2));
    let safe_total = Estimate::from_samples(trials.iter().map(|m| 0.5 * (m.type1 + m.type2)));

    let per_patient = |bits: fn(&TrialMetrics) -> &Vec<usize>| {
        Estimate::from_samples(
            trials
                .iter()
                .filter(|m| m.total_treated() > 0)
                .map(|m| bits(m).iter().sum::<usize>() as f64 / m.total_treated() as f64),
        )
    };
    let efficacy_per_patient = per_patient(|m| &m.efficacy_bits);
    let toxicity_per_patient = per_patient(|m| &m.toxicity_bits);

    let rounds = trials.first().map_or(0, |m| m.recruitment[0].len());
    let reps = trials.len() as f64;
    let mut recruitment = vec![vec![0.0; rounds]; s_n];
    let mut mse = vec![vec![0.0; rounds]; s_n];
    for m in trials {
        for s in 0..s_n {
            for t in 0..rounds {
                recruitment[s][t] += f64::from(m.recruitment[s][t]) / reps;
                mse[s][t] += m.mse[s][t] / reps;
            }
        }
    }

    let ceiling = sc.mtd_threshold + COMPLIANCE_SLACK;
    let toxicity_compliance = (0..s_n)
        .map(|s| {
            Estimate::from_samples(
                trials
                    .iter()
                    .filter(|m| m.treated[s] > 0)
                    .map(|m| f64::from(m.toxicity_bits[s] as f64 / m.treated[s] as f64 <= ceiling)),
            )
        })
        .collect();
    let compliance_excluded = (0..s_n).map(|s| trials.iter().filter(|m| m.treated[s] == 0).count()).collect();

    MetricsSummary {
        policy,
        replications: trials.len(),
        dose_error,
        total_error,
        safe_type1,
        safe_type2,
        safe_total,
        efficacy_per_patient,
        toxicity_per_patient,
        recruitment,
        mse,
        toxicity_compliance,
        compliance_excluded,
        conventional_calls: trials.iter().map(|m| m.conventional_calls).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{run_trial, RoundRecord, Snapshot};
    use crate::policies::{HyperParams, SafetyCall};
    use crate::scenario::Outcome;
    use approx::assert_abs_diff_eq;

    fn fixture(sc: &Scenario, recommendation: Vec<usize>) -> TrialTrace {
        let truth = sc.derive_ground_truth();
        let calls = (0..sc.num_subgroups)
            .map(|s| {
                (1..=sc.num_doses)
                    .map(|k| if truth.is_safe(s, k) { SafetyCall::Safe } else { SafetyCall::Unsafe })
                    .collect()
            })
            .collect();
        TrialTrace {
            policy: PolicyKind::CUcb,
            seed: 0,
            scenario_fingerprint: scenario_fingerprint(sc),
            budget: sc.budget,
            rounds: vec![RoundRecord {
                t: 1,
                subgroup: 1,
                action: 4,
                outcome: Some(Outcome { efficacy: true, toxicity: false }),
                budget_left: sc.budget - 1,
            }],
            recommendation,
            snapshot: Snapshot {
                arrivals: vec![0; 3],
                allocations: vec![vec![0; 6]; 3],
                q_bar: vec![vec![0.0; 6]; 3],
                p_bar: vec![vec![0.0; 6]; 3],
                fitted: None,
                safety_calls: calls,
            },
        }
    }

    #[test]
    fn hand_counted_error_rates() {
        let sc = Scenario::reference();
        let right = fixture(&sc, vec![0, 4, 4]);
        let wrong = fixture(&sc, vec![0, 3, 4]);
        let m = compute_metrics(&[right.clone(), wrong], &sc).unwrap();
        assert_abs_diff_eq!(m.total_error.mean, 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.dose_error[1].mean, 0.5);
        assert_eq!(m.dose_error[0].mean, 0.0);
        assert_eq!((m.safe_type1.mean, m.safe_type2.mean), (0.0, 0.0));

        let m = compute_metrics(&[right.clone(), right], &sc).unwrap();
        assert_eq!(m.total_error.mean, 0.0);
        let m = compute_metrics(&[fixture(&sc, vec![1, 1, 1])], &sc).unwrap();
        assert_eq!(m.total_error.mean, 1.0);
        assert_eq!(m.efficacy_per_patient.mean, 1.0);
    }

    #[test]
    fn mixed_scenarios_are_rejected() {
        let sc = Scenario::reference();
        let other = sc.with_budget_horizon(40, 120).unwrap();
        let t = fixture(&sc, vec![0, 4, 4]);
        assert!(matches!(compute_metrics(&[t], &other), Err(Error::MixedScenarios)));
        assert!(compute_metrics(&[], &sc).is_err());
    }

    #[test]
    fn inverted_calls_give_unit_type_rates() {
        let sc = Scenario::reference();
        let mut t = fixture(&sc, vec![0, 4, 4]);
        for row in &mut t.snapshot.safety_calls {
            for c in row.iter_mut() {
                *c = if c.is_safe() { SafetyCall::Unsafe } else { SafetyCall::Safe };
            }
        }
        let m = compute_metrics(&[t], &sc).unwrap();
        assert_eq!((m.safe_type1.mean, m.safe_type2.mean, m.safe_total.mean), (1.0, 1.0, 1.0));
    }

    #[test]
    fn curves_follow_the_trace() {
        let sc = Scenario::reference();
        let mut p = PolicyKind::CUcb.build(&sc, &HyperParams::default()).unwrap();
        let tr = run_trial(&sc, p.as_mut(), 5).unwrap();
        let m = trial_metrics(&tr, &sc, &sc.derive_ground_truth());
        assert_eq!(m.recruitment[0].len(), sc.horizon);
        let last: u32 = m.recruitment.iter().map(|r| *r.last().unwrap()).sum();
        assert_eq!(last as usize, tr.treated());
        for s in 0..3 {
            assert!(m.recruitment[s].windows(2).all(|w| w[0] <= w[1]));
            assert!(m.mse[s].iter().all(|&x| x >= 0.0));
        }
        // Subgroup 2's MSE tracks dose 4 alone.
        let a = tr.snapshot.allocations[1][3];
        let q = tr.snapshot.q_bar[1][3];
        let expected = if a == 0 { 0.0 } else { q } - sc.efficacy[1][3];
        assert_abs_diff_eq!(*m.mse[1].last().unwrap(), expected * expected, epsilon = 1e-12);
    }

    #[test]
    fn estimate_matches_hand_values() {
        let e = Estimate::from_samples([1.0, 0.0, 1.0, 0.0]);
        assert_eq!(e.mean, 0.5);
        assert_abs_diff_eq!(e.se, (1.0f64 / 3.0 / 4.0).sqrt(), epsilon = 1e-15);
        assert_eq!(e.n, 4);
    }
}
