/// A small dense regression or classification instance stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub n: usize,
    pub d: usize,
    pub x: Vec<f64>,
    /// Responses, or labels stored as floats.
    pub y: Vec<f64>,
}

impl Problem {
    pub fn new(rows: &[Vec<f64>], y: &[f64]) -> Self {
        assert!(!rows.is_empty(), "need at least one row");
        assert_eq!(rows.len(), y.len());
        let d = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == d), "ragged rows");
        Self {
            n: rows.len(),
            d,
            x: rows.iter().flatten().copied().collect(),
            y: y.to_vec(),
        }
    }

    pub fn xi(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    /// `⟨a, x_j − x_i⟩`.
    pub fn inner_diff(&self, a: &[f64], j: usize, i: usize) -> f64 {
        let (xj, xi) = (self.xi(j), self.xi(i));
        (0..self.d).map(|l| a[l] * (xj[l] - xi[l])).sum()
    }

    /// `+1` for a same-label pair, `−1` otherwise.
    pub fn iota(&self, i: usize, j: usize) -> f64 {
        if self.y[i] == self.y[j] {
            1.0
        } else {
            -1.0
        }
    }
}

/// Values and slopes of a max-affine function read at the anchors: each
/// anchor takes the value and slope of its highest plane. The result always
/// satisfies every pairwise convexity constraint.
pub fn repair(p: &Problem, values: &[f64], slopes: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = p.d;
    let mut v2 = vec![0.0; p.n];
    let mut a2 = vec![0.0; p.n * d];
    for j in 0..p.n {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        for i in 0..p.n {
            let val = values[i] + p.inner_diff(&slopes[i * d..(i + 1) * d], j, i);
            if val > best {
                best = val;
                arg = i;
            }
        }
        v2[j] = best;
        a2[j * d..(j + 1) * d].copy_from_slice(&slopes[arg * d..(arg + 1) * d]);
    }
    (v2, a2)
}

/// `Σ_l max_i |a_il|` for row-major slopes.
pub fn bound_penalty(slopes: &[f64], d: usize) -> f64 {
    (0..d)
        .map(|l| {
            slopes
                .iter()
                .skip(l)
                .step_by(d)
                .fold(0.0_f64, |m, v| m.max(v.abs()))
        })
        .sum()
}
