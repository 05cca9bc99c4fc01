//! Independent reference computations shared by the integration targets.
#![allow(dead_code)]

/// `ln C(n, k)` by summed logarithms.
fn ln_choose(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| f64::from(n - i).ln() - f64::from(i + 1).ln()).sum()
}

/// Regularized incomplete beta for integer shapes through the binomial
/// identity `I_x(a, b) = P[Bin(a + b − 1, x) ≥ a]`.
pub fn beta_cdf_binomial(x: f64, a: u32, b: u32) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let n = a + b - 1;
    (a..=n)
        .map(|j| (ln_choose(n, j) + f64::from(j) * x.ln() + f64::from(n - j) * (1.0 - x).ln()).exp())
        .sum::<f64>()
        .min(1.0)
}

/// Quantile by plain bisection on [`beta_cdf_binomial`].
pub fn beta_quantile_bisection(p: f64, a: u32, b: u32) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beta_cdf_binomial(mid, a, b) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Best objective of `max Σ ψ w d` subject to `Σ ψ w c ≤ ρ`, `ψ ∈ [0,1]`,
/// by enumerating vertices: any subset fully accepted plus at most one
/// coordinate filling the remaining budget.
pub fn lp_vertex_oracle(values: &[f64], costs: &[f64], weights: &[f64], rate: f64) -> f64 {
    let n = values.len();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        let inside = |i: usize| mask >> i & 1 == 1;
        let used: f64 = (0..n).filter(|&i| inside(i)).map(|i| weights[i] * costs[i]).sum();
        if used > rate + 1e-12 {
            continue;
        }
        let base: f64 = (0..n).filter(|&i| inside(i)).map(|i| weights[i] * values[i]).sum();
        best = best.max(base);
        for f in (0..n).filter(|&i| !inside(i)) {
            let w = weights[f] * costs[f];
            if w > 0.0 {
                let frac = ((rate - used) / w).clamp(0.0, 1.0);
                best = best.max(base + frac * weights[f] * values[f]);
            }
        }
    }
    best
}

/// `a ≤ b` allowing two combined standard errors of noise.
pub fn le_noisy(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.0 + 2.0 * (a.1 * a.1 + b.1 * b.1).sqrt()
}

/// `|a − b|` within two combined standard errors.
pub fn close_noisy(a: (f64, f64), b: (f64, f64)) -> bool {
    le_noisy(a, b) && le_noisy(b, a)
}
