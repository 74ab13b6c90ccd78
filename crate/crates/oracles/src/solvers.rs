//! Reference solvers for the three fitting programs, written against the
//! programs themselves: least squares (or hinge) loss, a column-bound
//! penalty `λ Σ_l max_i |a_il|`, and pairwise convexity constraints.
//!
//! Each returns the best objective seen at a feasible point, obtained by
//! reading the current planes back as a max-affine function.

use crate::alm::{minimize, Inequality, OracleBudget};
use crate::problem::{bound_penalty, repair, Problem};

/// Pairwise constraints `v_i + ⟨a_i, x_j − x_i⟩ ≤ v_j` and the bounds
/// `|a_il| ≤ L_l`, for values at `v_off`, slopes at `a_off`, bounds at `l_off`.
fn shape_constraints(p: &Problem, v_off: usize, a_off: usize, l_off: usize, out: &mut Vec<Inequality>) {
    let d = p.d;
    for i in 0..p.n {
        for j in 0..p.n {
            if i == j {
                continue;
            }
            let mut terms = vec![(v_off + i, 1.0), (v_off + j, -1.0)];
            for l in 0..d {
                terms.push((a_off + i * d + l, p.xi(j)[l] - p.xi(i)[l]));
            }
            out.push(Inequality { terms, rhs: 0.0 });
        }
        for l in 0..d {
            let a = a_off + i * d + l;
            out.push(Inequality { terms: vec![(a, 1.0), (l_off + l, -1.0)], rhs: 0.0 });
            out.push(Inequality { terms: vec![(a, -1.0), (l_off + l, -1.0)], rhs: 0.0 });
        }
    }
}

/// Regularized least-squares objective of a feasible point.
pub fn convex_objective(p: &Problem, values: &[f64], slopes: &[f64], lambda: f64) -> f64 {
    let loss: f64 = values.iter().zip(&p.y).map(|(f, y)| (f - y) * (f - y)).sum::<f64>() / p.n as f64;
    loss + lambda * bound_penalty(slopes, p.d)
}

/// Approximate optimum of penalized convex regression.
pub fn subgradient_solve_convex(p: &Problem, lambda: f64, budget: &OracleBudget) -> f64 {
    let (n, d) = (p.n, p.d);
    let (a_off, l_off) = (n, n + n * d);
    let mut cons = Vec::new();
    shape_constraints(p, 0, a_off, l_off, &mut cons);
    let nf = n as f64;
    let objective = |w: &[f64], g: &mut [f64]| {
        let mut val = 0.0;
        for i in 0..n {
            let e = w[i] - p.y[i];
            val += e * e / nf;
            g[i] += 2.0 * e / nf;
        }
        for l in 0..d {
            val += lambda * w[l_off + l];
            g[l_off + l] += lambda;
        }
        val
    };
    let mut best = f64::INFINITY;
    minimize(l_off + d, objective, &cons, budget, |w| {
        let (v, a) = repair(p, &w[..n], &w[a_off..l_off]);
        best = best.min(convex_objective(p, &v, &a, lambda));
    });
    best
}

/// Objective of difference-of-convex regression at a feasible pair.
pub fn dc_objective(p: &Problem, v1: &[f64], a1: &[f64], v2: &[f64], a2: &[f64], lambda: f64) -> f64 {
    let loss: f64 = (0..p.n)
        .map(|i| {
            let e = v1[i] - v2[i] - p.y[i];
            e * e
        })
        .sum::<f64>()
        / p.n as f64;
    loss + lambda * (bound_penalty(a1, p.d) + bound_penalty(a2, p.d))
}

pub fn subgradient_solve_dc(p: &Problem, lambda: f64, budget: &OracleBudget) -> f64 {
    let (n, d) = (p.n, p.d);
    // [v¹ | v² | a¹ | a² | L¹ | L²]
    let (v2_off, a1_off, a2_off) = (n, 2 * n, 2 * n + n * d);
    let (l1_off, l2_off) = (2 * n + 2 * n * d, 2 * n + 2 * n * d + d);
    let mut cons = Vec::new();
    shape_constraints(p, 0, a1_off, l1_off, &mut cons);
    shape_constraints(p, v2_off, a2_off, l2_off, &mut cons);
    let nf = n as f64;
    let objective = |w: &[f64], g: &mut [f64]| {
        let mut val = 0.0;
        for i in 0..n {
            let e = w[i] - w[v2_off + i] - p.y[i];
            val += e * e / nf;
            g[i] += 2.0 * e / nf;
            g[v2_off + i] -= 2.0 * e / nf;
        }
        for l in 0..2 * d {
            val += lambda * w[l1_off + l];
            g[l1_off + l] += lambda;
        }
        val
    };
    let mut best = f64::INFINITY;
    minimize(l2_off + d, objective, &cons, budget, |w| {
        let (v1, a1) = repair(p, &w[..n], &w[a1_off..a2_off]);
        let (v2, a2) = repair(p, &w[v2_off..a1_off], &w[a2_off..l1_off]);
        best = best.min(dc_objective(p, &v1, &a1, &v2, &a2, lambda));
    });
    best
}

/// Per-pair loss of divergence learning: the divergence itself for a
/// same-label pair, `(2 − D)⁺` for a different-label pair.
pub fn pair_loss(iota: f64, divergence: f64) -> f64 {
    (1.0 + iota * (divergence - 1.0)).max(0.0)
}

/// `(1/n) Σ_{i,j} loss(ι_ij, D(x_j, x_i)) + λ Σ_l max_i |a_il|` at a feasible point.
pub fn bregman_objective(p: &Problem, values: &[f64], slopes: &[f64], lambda: f64) -> f64 {
    let d = p.d;
    let mut total = 0.0;
    for i in 0..p.n {
        for j in 0..p.n {
            if i == j {
                continue;
            }
            let div = values[j] - values[i] - p.inner_diff(&slopes[i * d..(i + 1) * d], j, i);
            total += pair_loss(p.iota(i, j), div);
        }
    }
    total / p.n as f64 + lambda * bound_penalty(slopes, d)
}

/// Approximate optimum of divergence learning with labels taken from `p.y`.
pub fn subgradient_solve_bregman(p: &Problem, lambda: f64, budget: &OracleBudget) -> f64 {
    let (n, d) = (p.n, p.d);
    // [z | a | L | ζ (n × n, off-diagonal entries used)]
    let (a_off, l_off, z_off) = (n, n + n * d, n + n * d + d);
    let mut cons = Vec::new();
    shape_constraints(p, 0, a_off, l_off, &mut cons);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let zeta = z_off + i * n + j;
            let iota = p.iota(i, j);
            cons.push(Inequality { terms: vec![(zeta, -1.0)], rhs: 0.0 });
            // ι D_ij − ζ_ij ≤ ι − 1 with D_ij = z_j − z_i − ⟨a_i, x_j − x_i⟩.
            let mut terms = vec![(j, iota), (i, -iota), (zeta, -1.0)];
            for l in 0..d {
                terms.push((a_off + i * d + l, -iota * (p.xi(j)[l] - p.xi(i)[l])));
            }
            cons.push(Inequality { terms, rhs: iota - 1.0 });
        }
    }
    let nf = n as f64;
    let objective = |w: &[f64], g: &mut [f64]| {
        let mut val = 0.0;
        for k in (0..n * n).filter(|k| k / n != k % n) {
            val += w[z_off + k] / nf;
            g[z_off + k] += 1.0 / nf;
        }
        for l in 0..d {
            val += lambda * w[l_off + l];
            g[l_off + l] += lambda;
        }
        val
    };
    let mut best = f64::INFINITY;
    minimize(z_off + n * n, objective, &cons, budget, |w| {
        let (v, a) = repair(p, &w[..n], &w[a_off..l_off]);
        best = best.min(bregman_objective(p, &v, &a, lambda));
    });
    best
}
