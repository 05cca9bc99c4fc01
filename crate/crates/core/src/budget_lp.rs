//! Relaxed accept/skip allocation.
//!
//! With per-subgroup values `d_s`, arrival weights `π_s` and a per-round
//! budget rate `ρ`, the relaxation
//!
//! ```text
//! maximise  Σ ψ_s π_s d_s   subject to  Σ ψ_s π_s ≤ ρ,  0 ≤ ψ_s ≤ 1
//! ```
//!
//! is a fractional knapsack. With values sorted in descending order the
//! optimum accepts a prefix outright, one position fractionally, and nothing
//! after it.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AllocationSolution {
    /// Acceptance probability per position.
    pub psi: Vec<f64>,
    /// Number of fully accepted leading positions, `max{s : η_s ≤ ρ}`.
    pub threshold_index: usize,
}

impl AllocationSolution {
    pub fn objective(&self, values: &[f64], weights: &[f64]) -> f64 {
        self.psi
            .iter()
            .zip(values.iter().zip(weights))
            .map(|(&psi, (&d, &w))| if psi == 0.0 { 0.0 } else { psi * w * d })
            .sum()
    }
}

/// Greedy closed-form solution for values already sorted non-increasing.
///
/// `η_s` is the cumulative weight of the first `s` positions and
/// `s̃ = max{s : η_s ≤ ρ}`. Positions up to `s̃` get 1, position `s̃ + 1` gets
/// `(ρ − η_s̃) / π_{s̃+1}` and the rest get 0.
pub fn solve_lp(values: &[f64], weights: &[f64], rate: f64) -> Result<AllocationSolution> {
    if values.len() != weights.len() {
        return Err(Error::InvalidArgument("values and weights differ in length".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("values contain NaN".into()));
    }
    if values.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::InvalidArgument("values must be sorted non-increasing".into()));
    }
    if weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::InvalidArgument("weights must be non-negative".into()));
    }
    if !(rate >= 0.0) {
        return Err(Error::InvalidArgument(format!("budget rate {rate} is negative")));
    }

    let n = values.len();
    let mut psi = vec![0.0; n];
    let mut eta = 0.0;
    let mut threshold_index = 0;
    while threshold_index < n && eta + weights[threshold_index] <= rate + 1e-12 {
        eta += weights[threshold_index];
        psi[threshold_index] = 1.0;
        threshold_index += 1;
    }
    if threshold_index < n {
        // Maximality of the prefix makes this weight positive.
        psi[threshold_index] = ((rate - eta) / weights[threshold_index]).clamp(0.0, 1.0);
    }
    Ok(AllocationSolution { psi, threshold_index })
}

/// Allocation with per-subgroup recruitment costs.
///
/// Solves the uniform-cost problem on values `d_s / c_s` and weights
/// `π_s · c_s` after a stable descending sort, then maps `ψ` back to the
/// caller's indexing. `threshold_index` refers to sorted positions.
pub fn solve_lp_costed(values: &[f64], costs: &[f64], weights: &[f64], rate: f64) -> Result<AllocationSolution> {
    if values.len() != costs.len() || values.len() != weights.len() {
        return Err(Error::InvalidArgument("values, costs and weights differ in length".into()));
    }
    if costs.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
        return Err(Error::InvalidArgument("costs must be positive".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("values contain NaN".into()));
    }
    let per_cost: Vec<f64> = values.iter().zip(costs).map(|(&d, &c)| d / c).collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    // Stable: equal values keep subgroup order.
    order.sort_by(|&i, &j| per_cost[j].total_cmp(&per_cost[i]));

    let sorted_values: Vec<f64> = order.iter().map(|&i| per_cost[i]).collect();
    let sorted_weights: Vec<f64> = order.iter().map(|&i| weights[i] * costs[i]).collect();
    let sorted = solve_lp(&sorted_values, &sorted_weights, rate)?;

    let mut psi = vec![0.0; values.len()];
    for (pos, &i) in order.iter().enumerate() {
        psi[i] = sorted.psi[pos];
    }
    Ok(AllocationSolution {
        psi,
        threshold_index: sorted.threshold_index,
    })
}

/// Remaining budget per remaining round, capped at one patient per round.
pub fn remaining_ratio(budget_left: usize, rounds_left: usize) -> Result<f64> {
    if rounds_left == 0 {
        return Err(Error::InvalidArgument("no rounds remain".into()));
    }
    Ok((budget_left as f64 / rounds_left as f64).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Best vertex of the feasible polytope: every vertex has at most one
    /// fractional coordinate, set to make the budget constraint tight.
    fn vertex_oracle(values: &[f64], weights: &[f64], rate: f64) -> f64 {
        let n = values.len();
        let mut best = 0.0f64;
        for mask in 0u32..(1 << n) {
            let used: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| weights[i]).sum();
            if used > rate + 1e-12 {
                continue;
            }
            let base: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| weights[i] * values[i]).sum();
            best = best.max(base);
            for f in (0..n).filter(|i| mask >> i & 1 == 0) {
                if weights[f] > 0.0 {
                    let frac = ((rate - used) / weights[f]).clamp(0.0, 1.0);
                    best = best.max(base + frac * weights[f] * values[f]);
                }
            }
        }
        best
    }

    #[test]
    fn three_subgroup_example() {
        let d = [0.8, 0.5, 0.1];
        let pi = [0.25, 1.0 / 3.0, 5.0 / 12.0];
        let sol = solve_lp(&d, &pi, 1.0 / 3.0).unwrap();
        assert_abs_diff_eq!(sol.psi[0], 1.0);
        assert_abs_diff_eq!(sol.psi[1], 0.25, epsilon = 1e-12);
        assert_eq!(sol.psi[2], 0.0);
        assert_eq!(sol.threshold_index, 1);
        assert_abs_diff_eq!(sol.objective(&d, &pi), vertex_oracle(&d, &pi, 1.0 / 3.0), epsilon = 1e-12);

        assert_eq!(solve_lp(&d, &pi, 1.0).unwrap().psi, vec![1.0; 3]);
        assert_eq!(solve_lp(&d, &pi, 0.0).unwrap().psi, vec![0.0; 3]);
    }

    #[test]
    fn exact_boundary_keeps_prefix() {
        let sol = solve_lp(&[0.9, 0.1], &[0.5, 0.5], 0.5).unwrap();
        assert_eq!(sol.psi, vec![1.0, 0.0]);
        assert_eq!(sol.threshold_index, 1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(solve_lp(&[0.1, 0.5], &[0.5, 0.5], 0.5).is_err());
        assert!(solve_lp(&[0.5, 0.1], &[0.5, 0.5], -0.1).is_err());
        assert!(solve_lp(&[0.5], &[0.5, 0.5], 0.1).is_err());
        assert!(solve_lp_costed(&[0.5, 0.1], &[1.0, 0.0], &[0.5, 0.5], 0.5).is_err());
        assert!(remaining_ratio(3, 0).is_err());
    }

    #[test]
    fn costed_examples() {
        let d = [0.8, 0.5, 0.1];
        let pi = [0.25, 1.0 / 3.0, 5.0 / 12.0];
        for rate in [0.0, 0.1, 1.0 / 3.0, 0.7, 1.0] {
            let plain = solve_lp(&d, &pi, rate).unwrap();
            let costed = solve_lp_costed(&d, &[1.0; 3], &pi, rate).unwrap();
            assert_eq!(plain.psi, costed.psi);
        }

        let sol = solve_lp_costed(&[0.8, 0.8], &[2.0, 1.0], &[0.5, 0.5], 0.5).unwrap();
        assert_eq!(sol.psi, vec![0.0, 1.0]);

        let all = solve_lp_costed(&[0.3, 0.9], &[2.0, 3.0], &[0.5, 0.5], 2.5).unwrap();
        assert_eq!(all.psi, vec![1.0, 1.0]);
    }

    #[test]
    fn ratio_examples() {
        assert_abs_diff_eq!(remaining_ratio(400, 1200).unwrap(), 1.0 / 3.0);
        assert_eq!(remaining_ratio(7, 7).unwrap(), 1.0);
        assert_eq!(remaining_ratio(9, 7).unwrap(), 1.0);
        assert_eq!(remaining_ratio(0, 7).unwrap(), 0.0);
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
        (1usize..=6).prop_flat_map(|n| {
            (
                proptest::collection::vec(0.0f64..1.0, n),
                proptest::collection::vec(0.0f64..1.0, n),
                0.0f64..1.2,
            )
                .prop_map(|(mut d, w, rate)| {
                    d.sort_by(|a, b| b.total_cmp(a));
                    let total: f64 = w.iter().sum::<f64>().max(1e-9);
                    (d, w.iter().map(|x| x / total).collect(), rate)
                })
        })
    }

    proptest! {
        #[test]
        fn feasible_optimal_single_fraction((d, w, rate) in instance()) {
            let sol = solve_lp(&d, &w, rate).unwrap();
            let used: f64 = sol.psi.iter().zip(&w).map(|(p, w)| p * w).sum();
            prop_assert!(used <= rate + 1e-11);
            prop_assert!(sol.psi.iter().all(|&p| (0.0..=1.0).contains(&p)));
            prop_assert!(sol.psi.iter().filter(|&&p| p > 0.0 && p < 1.0).count() <= 1);
            let oracle = vertex_oracle(&d, &w, rate);
            let got = sol.objective(&d, &w);
            prop_assert!((got - oracle).abs() <= 1e-9 * oracle.abs().max(1e-12));
        }

        #[test]
        fn objective_monotone_in_rate((d, w, rate) in instance(), extra in 0.0f64..0.5) {
            let lo = solve_lp(&d, &w, rate).unwrap().objective(&d, &w);
            let hi = solve_lp(&d, &w, rate + extra).unwrap().objective(&d, &w);
            prop_assert!(hi >= lo - 1e-12);
        }
    }
}
