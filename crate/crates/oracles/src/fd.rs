//! Finite-difference derivatives with non-negativity boundaries.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coordinate {
    pub index: usize,
    /// The variable is constrained to `≥ 0`.
    pub nonnegative: bool,
}

impl Coordinate {
    pub fn free(index: usize) -> Self {
        Self { index, nonnegative: false }
    }

    pub fn nonneg(index: usize) -> Self {
        Self { index, nonnegative: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partial {
    pub derivative: f64,
    /// The coordinate sits on its bound and the derivative is one-sided.
    pub at_bound: bool,
}

impl Partial {
    /// Violation of the first-order condition: `|∂|` in the interior,
    /// `(−∂)⁺` on the bound.
    pub fn violation(&self) -> f64 {
        if self.at_bound {
            (-self.derivative).max(0.0)
        } else {
            self.derivative.abs()
        }
    }
}

/// Central differences, or a second-order forward difference for a
/// non-negative coordinate closer than `h` to zero. Both are exact on
/// quadratics up to rounding.
pub fn finite_difference_gradient<F>(f: F, point: &[f64], coords: &[Coordinate], h: f64) -> Vec<Partial>
where
    F: Fn(&[f64]) -> f64,
{
    assert!((1e-7..=1e-4).contains(&h), "step {h} outside [1e-7, 1e-4]");
    let mut w = point.to_vec();
    let mut at = |k: usize, v: f64| {
        let old = w[k];
        w[k] = v;
        let out = f(&w);
        w[k] = old;
        out
    };
    coords
        .iter()
        .map(|c| {
            let x0 = point[c.index];
            if c.nonnegative && x0 < h {
                let f0 = at(c.index, x0);
                let f1 = at(c.index, x0 + h);
                let f2 = at(c.index, x0 + 2.0 * h);
                Partial {
                    derivative: (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h),
                    at_bound: true,
                }
            } else {
                let fp = at(c.index, x0 + h);
                let fm = at(c.index, x0 - h);
                Partial {
                    derivative: (fp - fm) / (2.0 * h),
                    at_bound: false,
                }
            }
        })
        .collect()
}
