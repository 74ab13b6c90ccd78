//! Augmented Lagrangians of the three programs in standard form, with
//! scaled duals: every equality constraint `c = 0` with multiplier `w`
//! contributes `(ρ/2)(c + w)²`. Constant `−(ρ/2)w²` terms are dropped.
//!
//! Primal variables are flattened in a fixed order so finite differences
//! can address single coordinates.

use crate::problem::Problem;

/// Primal variables of one convex-regression copy.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPrimal {
    pub y_hat: Vec<f64>,
    pub a: Vec<f64>,
    pub l: Vec<f64>,
    pub u: Vec<f64>,
    pub p_plus: Vec<f64>,
    pub p_minus: Vec<f64>,
    pub s: Vec<f64>,
}

/// Offsets of each variable group inside [`ConvexPrimal::flatten`].
#[derive(Debug, Clone, Copy)]
pub struct ConvexLayout {
    pub n: usize,
    pub d: usize,
}

impl ConvexLayout {
    pub fn y_hat(&self) -> std::ops::Range<usize> {
        0..self.n
    }
    pub fn a(&self) -> std::ops::Range<usize> {
        self.n..self.n + self.n * self.d
    }
    pub fn l(&self) -> std::ops::Range<usize> {
        let s = self.a().end;
        s..s + self.d
    }
    pub fn u(&self) -> std::ops::Range<usize> {
        let s = self.l().end;
        s..s + self.n * self.d
    }
    pub fn p_plus(&self) -> std::ops::Range<usize> {
        let s = self.u().end;
        s..s + self.n * self.d
    }
    pub fn p_minus(&self) -> std::ops::Range<usize> {
        let s = self.p_plus().end;
        s..s + self.n * self.d
    }
    pub fn s(&self) -> std::ops::Range<usize> {
        let s = self.p_minus().end;
        s..s + self.n * self.n
    }
    pub fn len(&self) -> usize {
        self.s().end
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl ConvexPrimal {
    pub fn flatten(&self) -> Vec<f64> {
        [&self.y_hat, &self.a, &self.l, &self.u, &self.p_plus, &self.p_minus, &self.s]
            .into_iter()
            .flatten()
            .copied()
            .collect()
    }

    pub fn unflatten(layout: ConvexLayout, w: &[f64]) -> Self {
        Self {
            y_hat: w[layout.y_hat()].to_vec(),
            a: w[layout.a()].to_vec(),
            l: w[layout.l()].to_vec(),
            u: w[layout.u()].to_vec(),
            p_plus: w[layout.p_plus()].to_vec(),
            p_minus: w[layout.p_minus()].to_vec(),
            s: w[layout.s()].to_vec(),
        }
    }
}

/// Scaled duals of one copy's three constraint families.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexDuals {
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    pub eta: Vec<f64>,
}

/// The three constraint families of one copy:
/// `v_i − v_j − ⟨a_i, x_i − x_j⟩ + s_ij = 0`, `u + p⁺ + p⁻ − L = 0`,
/// `a − p⁺ + p⁻ = 0`.
fn constraint_penalty(p: &Problem, rho: f64, values: &[f64], x: &ConvexPrimal, w: &ConvexDuals) -> f64 {
    let (n, d) = (p.n, p.d);
    let mut total = 0.0;
    for i in 0..n {
        let ai = &x.a[i * d..(i + 1) * d];
        for j in 0..n {
            let mut c = values[i] - values[j] + x.s[i * n + j] + w.alpha[i * n + j];
            for l in 0..d {
                c -= ai[l] * (p.xi(i)[l] - p.xi(j)[l]);
            }
            total += c * c;
        }
        for l in 0..d {
            let k = i * d + l;
            let c1 = x.u[k] + x.p_plus[k] + x.p_minus[k] - x.l[l] + w.gamma[k];
            let c2 = x.a[k] - x.p_plus[k] + x.p_minus[k] + w.eta[k];
            total += c1 * c1 + c2 * c2;
        }
    }
    0.5 * rho * total
}

#[derive(Debug, Clone)]
pub struct ConvexLagrangian<'a> {
    pub problem: &'a Problem,
    pub lambda: f64,
    pub rho: f64,
    pub duals: ConvexDuals,
}

impl ConvexLagrangian<'_> {
    pub fn layout(&self) -> ConvexLayout {
        ConvexLayout { n: self.problem.n, d: self.problem.d }
    }

    pub fn value(&self, x: &ConvexPrimal) -> f64 {
        let p = self.problem;
        let loss: f64 = x.y_hat.iter().zip(&p.y).map(|(f, y)| (f - y) * (f - y)).sum::<f64>() / p.n as f64;
        loss + self.lambda * x.l.iter().sum::<f64>() + constraint_penalty(p, self.rho, &x.y_hat, x, &self.duals)
    }

    pub fn value_flat(&self, w: &[f64]) -> f64 {
        self.value(&ConvexPrimal::unflatten(self.layout(), w))
    }
}

/// Two convex copies coupled only through the loss on `ŷ¹ − ŷ²`.
#[derive(Debug, Clone)]
pub struct DcLagrangian<'a> {
    pub problem: &'a Problem,
    pub lambda: f64,
    pub rho: f64,
    pub duals: [ConvexDuals; 2],
}

impl DcLagrangian<'_> {
    pub fn layout(&self) -> ConvexLayout {
        ConvexLayout { n: self.problem.n, d: self.problem.d }
    }

    pub fn value(&self, x: &[ConvexPrimal; 2]) -> f64 {
        let p = self.problem;
        let loss: f64 = (0..p.n)
            .map(|i| {
                let e = x[0].y_hat[i] - x[1].y_hat[i] - p.y[i];
                e * e
            })
            .sum::<f64>()
            / p.n as f64;
        let mut total = loss;
        for q in 0..2 {
            total += self.lambda * x[q].l.iter().sum::<f64>();
            total += constraint_penalty(p, self.rho, &x[q].y_hat, &x[q], &self.duals[q]);
        }
        total
    }

    /// Both copies flattened back to back.
    pub fn value_flat(&self, w: &[f64]) -> f64 {
        let k = self.layout().len();
        self.value(&[
            ConvexPrimal::unflatten(self.layout(), &w[..k]),
            ConvexPrimal::unflatten(self.layout(), &w[k..2 * k]),
        ])
    }
}

/// Divergence learning adds the pair losses `ζ`, their slack `t` and the
/// constraint `ι s − ι + t + 1 − ζ = 0`; `y_hat` holds the generator values.
#[derive(Debug, Clone, PartialEq)]
pub struct BregmanPrimal {
    pub core: ConvexPrimal,
    pub t: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl BregmanPrimal {
    pub fn flatten(&self) -> Vec<f64> {
        let mut w = self.core.flatten();
        w.extend_from_slice(&self.t);
        w.extend_from_slice(&self.zeta);
        w
    }

    pub fn unflatten(layout: ConvexLayout, w: &[f64]) -> Self {
        let k = layout.len();
        let nn = layout.n * layout.n;
        Self {
            core: ConvexPrimal::unflatten(layout, &w[..k]),
            t: w[k..k + nn].to_vec(),
            zeta: w[k + nn..k + 2 * nn].to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BregmanLagrangian<'a> {
    /// Labels are read from `problem.y`.
    pub problem: &'a Problem,
    pub lambda: f64,
    pub rho: f64,
    pub duals: ConvexDuals,
    pub tau: Vec<f64>,
}

impl BregmanLagrangian<'_> {
    pub fn layout(&self) -> ConvexLayout {
        ConvexLayout { n: self.problem.n, d: self.problem.d }
    }

    pub fn value(&self, x: &BregmanPrimal) -> f64 {
        let p = self.problem;
        let n = p.n;
        let mut pairs = 0.0;
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                let iota = p.iota(i, j);
                let c = iota * x.core.s[k] - iota + x.t[k] + 1.0 - x.zeta[k] + self.tau[k];
                pairs += c * c;
            }
        }
        x.zeta.iter().sum::<f64>() / n as f64
            + self.lambda * x.core.l.iter().sum::<f64>()
            + constraint_penalty(p, self.rho, &x.core.y_hat, &x.core, &self.duals)
            + 0.5 * self.rho * pairs
    }

    pub fn value_flat(&self, w: &[f64]) -> f64 {
        self.value(&BregmanPrimal::unflatten(self.layout(), w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_point_convex_value() {
        let p = Problem::new(&[vec![0.0], vec![1.0]], &[1.0, -1.0]);
        let lag = ConvexLagrangian {
            problem: &p,
            lambda: 1.0,
            rho: 2.0,
            duals: ConvexDuals { alpha: vec![0.0; 4], gamma: vec![0.0; 2], eta: vec![0.5, 0.0] },
        };
        let layout = lag.layout();
        let x = ConvexPrimal::unflatten(layout, &vec![0.0; layout.len()]);
        // loss 1 + (ρ/2)·η² = 1 + 0.25
        assert_eq!(lag.value(&x), 1.25);
        assert_eq!(ConvexPrimal::unflatten(layout, &x.flatten()), x);
    }
}
