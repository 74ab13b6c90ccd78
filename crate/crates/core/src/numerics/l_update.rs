//! Root finding for the column bound `L_l` of the second ADMM block.
//!
//! After eliminating `u`, `p⁺` and `p⁻`, stationarity in `L` reads
//! `λ/ρ = Σ_i ψ(L; γ_i, c_i)` with
//!
//! ```text
//! ψ = 0                    if L − γ ≥ c
//! ψ = (γ + c − L) / 2      if |L − γ| ≤ c
//! ψ = γ − L                if L − γ ≤ −c
//! ```
//!
//! The right-hand side is continuous, non-increasing and piecewise linear with
//! knots at `γ_i ± c_i`, so a single sweep over the sorted knots finds the root.

/// One term of the monotone stationarity equation.
pub fn psi(l: f64, gamma: f64, c: f64) -> f64 {
    let t = l - gamma;
    if t >= c {
        0.0
    } else if t <= -c {
        gamma - l
    } else {
        0.5 * (gamma + c - l)
    }
}

/// Solves `λ/ρ = Σ_i ψ(L; γ_i, c_i)` for `L` and clamps the root at zero.
///
/// Knots are visited from largest to smallest; every knot passed adds `1/2`
/// to the slope of the right-hand side, so the sweep is `O(n log n)`.
pub fn l_update(gammas: &[f64], cs: &[f64], lambda_over_rho: f64) -> f64 {
    let mut knots = Vec::with_capacity(2 * gammas.len());
    l_update_with(gammas, cs, lambda_over_rho, &mut knots)
}

/// [`l_update`] with a caller-owned knot buffer.
pub fn l_update_with(gammas: &[f64], cs: &[f64], lambda_over_rho: f64, knots: &mut Vec<f64>) -> f64 {
    assert_eq!(gammas.len(), cs.len());
    let n = gammas.len();
    if n == 0 {
        return 0.0;
    }
    knots.clear();
    for (&g, &c) in gammas.iter().zip(cs) {
        knots.push(g + c);
        knots.push(g - c);
    }
    knots.sort_unstable_by(|a, b| b.total_cmp(a));

    let mut f = lambda_over_rho;
    let mut slope = 0.0;
    for j in 1..knots.len() {
        slope += 0.5;
        f += slope * (knots[j] - knots[j - 1]);
        if f <= 0.0 {
            return (knots[j] - f / slope).max(0.0);
        }
    }
    (knots[2 * n - 1] - f / n as f64).max(0.0)
}

/// Bisection on the same monotone equation; slow reference for [`l_update`].
///
/// Returns the smallest `L ≥ 0` with `Σ ψ(L) ≤ λ/ρ`.
pub fn l_update_bisection(gammas: &[f64], cs: &[f64], lambda_over_rho: f64) -> f64 {
    let rhs = |l: f64| -> f64 {
        gammas
            .iter()
            .zip(cs)
            .map(|(&g, &c)| psi(l, g, c))
            .sum::<f64>()
    };
    if rhs(0.0) <= lambda_over_rho {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = gammas
        .iter()
        .zip(cs)
        .map(|(g, c)| g + c)
        .fold(0.0_f64, f64::max);
    // rhs(hi) == 0 <= λ/ρ; rhs(lo) > λ/ρ.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rhs(mid) <= lambda_over_rho {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
