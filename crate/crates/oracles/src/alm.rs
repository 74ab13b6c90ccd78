//! Augmented Lagrangian method for `min f(v)` subject to sparse linear
//! inequalities `g_k(v) ≤ 0`, with accelerated gradient inner solves.

/// `Σ coef · v[idx] − rhs ≤ 0`.
#[derive(Debug, Clone)]
pub struct Inequality {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Inequality {
    pub fn eval(&self, v: &[f64]) -> f64 {
        self.terms.iter().map(|&(k, c)| c * v[k]).sum::<f64>() - self.rhs
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleBudget {
    /// Multiplier updates.
    pub outer: usize,
    /// Gradient steps per multiplier update.
    pub inner: usize,
    pub rho0: f64,
    pub rho_growth: f64,
    pub rho_max: f64,
    /// Inner loop stops once the gradient's max-norm falls below this.
    pub tolerance: f64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            outer: 60,
            inner: 4000,
            rho0: 10.0,
            rho_growth: 2.0,
            rho_max: 1e5,
            tolerance: 1e-10,
        }
    }
}

impl OracleBudget {
    pub fn total_iterations(&self) -> usize {
        self.outer * self.inner
    }
}

/// Runs the method and calls `observe` with the primal point after every
/// multiplier update.
pub fn minimize<F, O>(
    dim: usize,
    objective: F,
    constraints: &[Inequality],
    budget: &OracleBudget,
    mut observe: O,
) -> Vec<f64>
where
    F: Fn(&[f64], &mut [f64]) -> f64,
    O: FnMut(&[f64]),
{
    let mut v = vec![0.0; dim];
    let mut mu = vec![0.0; constraints.len()];
    let mut rho = budget.rho0;
    for _ in 0..budget.outer {
        let penalized = |w: &[f64], grad: &mut [f64]| -> f64 {
            let mut val = objective(w, grad);
            for (c, &m) in constraints.iter().zip(&mu) {
                let shifted = (m + rho * c.eval(w)).max(0.0);
                val += (shifted * shifted - m * m) / (2.0 * rho);
                if shifted > 0.0 {
                    for &(k, coef) in &c.terms {
                        grad[k] += shifted * coef;
                    }
                }
            }
            val
        };
        accelerated_descent(&penalized, &mut v, budget.inner, budget.tolerance);
        for (c, m) in constraints.iter().zip(mu.iter_mut()) {
            *m = (*m + rho * c.eval(&v)).max(0.0);
        }
        observe(&v);
        rho = (rho * budget.rho_growth).min(budget.rho_max);
    }
    v
}

/// Nesterov-accelerated gradient descent with backtracking on the step and
/// a restart whenever the objective increases.
fn accelerated_descent<F>(f: &F, v: &mut [f64], iters: usize, tol: f64)
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    let m = v.len();
    let mut lip = 1.0_f64;
    let mut y = v.to_vec();
    let mut grad = vec![0.0; m];
    let mut trial = vec![0.0; m];
    let mut trial_grad = vec![0.0; m];
    let mut t = 1.0_f64;
    let mut fv = {
        let mut g = vec![0.0; m];
        f(v, &mut g)
    };
    for _ in 0..iters {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let fy = f(&y, &mut grad);
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        if grad.iter().fold(0.0_f64, |a, g| a.max(g.abs())) < tol {
            if fy <= fv {
                v.copy_from_slice(&y);
            }
            return;
        }
        let f_trial = loop {
            for k in 0..m {
                trial[k] = y[k] - grad[k] / lip;
            }
            trial_grad.iter_mut().for_each(|g| *g = 0.0);
            let ft = f(&trial, &mut trial_grad);
            if ft <= fy - 0.5 * gnorm2 / lip + 1e-15 * fy.abs() || lip > 1e20 {
                break ft;
            }
            lip *= 2.0;
        };
        if f_trial > fv {
            // Restart momentum from the last accepted point.
            y.copy_from_slice(v);
            t = 1.0;
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        for k in 0..m {
            let next = trial[k];
            y[k] = next + beta * (next - v[k]);
            v[k] = next;
        }
        fv = f_trial;
        t = t_next;
        // Let the step grow back after conservative backtracking.
        lip = (lip * 0.9).max(1e-12);
    }
}
