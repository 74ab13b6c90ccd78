//! Linear-algebra objects that depend only on the (normalized) design matrix.
//!
//! For each anchor `i` the first-block solve needs
//! `Λ_i = (x_i x_iᵀ + I/n + (1/n) Σ_j x_j x_jᵀ)⁻¹`, and eliminating the slopes
//! leaves an `n × n` system in the anchor values whose matrix is built from
//! the coupling matrix `D` below. Everything here is computed once per fit.

use nalgebra::{DMatrix, DVector};
use ndarray::linalg::general_mat_vec_mul;
use ndarray::{s, Array1, Array2, Array3, ArrayView1, ArrayView2, ArrayView3, ArrayViewMut1, Axis, Zip};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Pivot ratio below which an `Ω` factorization is reported as singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-13;

/// Per-anchor inverses `Λ_i` as an `n × d × d` array.
///
/// Factors the shared base `B = (I + Σ x_j x_jᵀ)/n` once and applies the
/// rank-one Sherman–Morrison correction for each `x_i`.
pub fn precompute_lambdas(x: ArrayView2<'_, f64>) -> Array3<f64> {
    if cfg!(feature = "direct-lambda") {
        return precompute_lambdas_direct(x);
    }
    let (n, d) = x.dim();
    let nf = n as f64;
    let gram = x.t().dot(&x);
    let base = DMatrix::from_fn(d, d, |r, c| {
        (gram[[r, c]] + if r == c { 1.0 } else { 0.0 }) / nf
    });
    // B is SPD (identity plus a Gram matrix), so Cholesky cannot fail.
    let base_inv = base
        .cholesky()
        .expect("I/n + XᵀX/n is positive definite")
        .inverse();
    let base_inv = Array2::from_shape_fn((d, d), |(r, c)| 0.5 * (base_inv[(r, c)] + base_inv[(c, r)]));

    let mut out = Array3::zeros((n, d, d));
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .zip(x.axis_iter(Axis(0)).into_par_iter())
        .for_each(|(mut lam, xi)| {
            let u = base_inv.dot(&xi);
            let denom = 1.0 + xi.dot(&u);
            for r in 0..d {
                for c in 0..d {
                    lam[[r, c]] = base_inv[[r, c]] - u[r] * u[c] / denom;
                }
            }
        });
    out
}

/// Inverts each `Λ_i` defining matrix independently; `O(n d³)`.
pub fn precompute_lambdas_direct(x: ArrayView2<'_, f64>) -> Array3<f64> {
    let (n, d) = x.dim();
    let nf = n as f64;
    let gram = x.t().dot(&x);
    let mut out = Array3::zeros((n, d, d));
    out.axis_iter_mut(Axis(0))
        .into_par_iter()
        .zip(x.axis_iter(Axis(0)).into_par_iter())
        .for_each(|(mut lam, xi)| {
            let m = DMatrix::from_fn(d, d, |r, c| {
                xi[r] * xi[c] + (gram[[r, c]] + if r == c { 1.0 } else { 0.0 }) / nf
            });
            let inv = m.cholesky().expect("Λ defining matrix is SPD").inverse();
            for r in 0..d {
                for c in 0..d {
                    lam[[r, c]] = 0.5 * (inv[(r, c)] + inv[(c, r)]);
                }
            }
        });
    out
}

/// Rows `Λ_i x_i`.
pub fn lambda_times_anchor(x: ArrayView2<'_, f64>, lambdas: ArrayView3<'_, f64>) -> Array2<f64> {
    let (n, d) = x.dim();
    let mut out = Array2::zeros((n, d));
    let zip = Zip::from(out.rows_mut()).and(x.rows()).and(lambdas.axis_iter(Axis(0)));
    let f = |mut o: ArrayViewMut1<'_, f64>, xi: ArrayView1<'_, f64>, lam: ArrayView2<'_, f64>| o.assign(&lam.dot(&xi));
    if super::parallel(n * d * d) {
        zip.par_for_each(f);
    } else {
        zip.for_each(f);
    }
    out
}

/// The coupling matrix
/// `D_ij = x_iᵀ(Λ_i + Λ_j + Λ̄)x_j − x_jᵀΛ_j x_j − (1/n) Σ_k x_kᵀΛ_k x_j`,
/// with `Λ̄` the mean of the `Λ_k`. Not symmetric in general.
pub fn compute_d(x: ArrayView2<'_, f64>, lambdas: ArrayView3<'_, f64>) -> Array2<f64> {
    let n = x.nrows();
    let w = lambda_times_anchor(x, lambdas);
    let quad: Array1<f64> = Zip::from(w.rows()).and(x.rows()).map_collect(|wi, xi| wi.dot(&xi));
    let lambda_mean = lambdas.mean_axis(Axis(0)).expect("n >= 1");
    let w_mean = w.mean_axis(Axis(0)).expect("n >= 1");
    let x_lambda_mean = x.dot(&lambda_mean);
    let tail: Array1<f64> = x.dot(&w_mean);

    let mut dm = w.dot(&x.t());
    dm += &x.dot(&w.t());
    dm += &x_lambda_mean.dot(&x.t());
    for mut row in dm.rows_mut() {
        Zip::from(&mut row)
            .and(&quad)
            .and(&tail)
            .for_each(|v, &q, &t| *v -= q + t);
    }
    debug_assert_eq!(dm.dim(), (n, n));
    dm
}

/// Which linear system the factorization serves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaVariant {
    /// Convex regression anchor values.
    Convex { rho: f64 },
    /// Bregman generator values; no data-fit term on the diagonal.
    Bregman,
    /// `Ω + 2I/(n²ρ)`, the difference system of DC regression.
    DcPlus { rho: f64 },
    /// `Ω − 2I/(n²ρ)`, the sum system of DC regression.
    DcMinus { rho: f64 },
}

impl OmegaVariant {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Convex { .. } => "convex",
            Self::Bregman => "bregman",
            Self::DcPlus { .. } => "dc_plus",
            Self::DcMinus { .. } => "dc_minus",
        }
    }

    fn diagonal_shift(&self, n: usize) -> Result<f64> {
        let n2 = (n * n) as f64;
        let check = |rho: f64| {
            if rho > 0.0 && rho.is_finite() {
                Ok(rho)
            } else {
                Err(Error::InvalidConfig(format!("rho must be positive, got {rho}")))
            }
        };
        Ok(match *self {
            Self::Convex { rho } => 2.0 / (n2 * check(rho)?),
            Self::Bregman => 0.0,
            Self::DcPlus { rho } => 4.0 / (n2 * check(rho)?),
            Self::DcMinus { rho } => {
                check(rho)?;
                0.0
            }
        })
    }
}

/// Dense `Ω` for the requested variant.
pub fn omega_matrix(
    quad: ArrayView1<'_, f64>,
    d_matrix: ArrayView2<'_, f64>,
    variant: OmegaVariant,
) -> Result<Array2<f64>> {
    let n = quad.len();
    let shift = variant.diagonal_shift(n)?;
    let nf = n as f64;
    let mut omega = d_matrix.mapv(|v| -v / nf);
    for i in 0..n {
        omega[[i, i]] += shift + 2.0 - quad[i];
    }
    Ok(omega)
}

/// LU factorization (partial pivoting) of one `Ω` variant, reused for every
/// right-hand side of a fit.
#[derive(Debug, Clone)]
pub struct OmegaFactor {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    variant: OmegaVariant,
    pivot_ratio: f64,
}

impl OmegaFactor {
    pub fn variant(&self) -> OmegaVariant {
        self.variant
    }

    /// `min |U_ii| / max |U_ii|`, a cheap conditioning indicator.
    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    pub fn solve(&self, rhs: ArrayView1<'_, f64>) -> Array1<f64> {
        let mut b = DVector::from_iterator(rhs.len(), rhs.iter().copied());
        // Nonsingularity is checked when the factor is built.
        self.lu.solve_mut(&mut b);
        Array1::from_iter(b.iter().copied())
    }
}

pub fn build_omega(
    quad: ArrayView1<'_, f64>,
    d_matrix: ArrayView2<'_, f64>,
    variant: OmegaVariant,
) -> Result<OmegaFactor> {
    let omega = omega_matrix(quad, d_matrix, variant)?;
    let n = omega.nrows();
    let m = DMatrix::from_fn(n, n, |r, c| omega[[r, c]]);
    let lu = m.lu();
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    for i in 0..n {
        let p = u[(i, i)].abs();
        lo = lo.min(p);
        hi = hi.max(p);
    }
    let pivot_ratio = if hi > 0.0 { lo / hi } else { 0.0 };
    if !(pivot_ratio > SINGULAR_PIVOT_RATIO) {
        return Err(Error::Singular {
            variant: variant.name(),
            pivot_ratio,
        });
    }
    if let OmegaVariant::DcMinus { .. } = variant {
        log::debug!("dc_minus system pivot ratio {pivot_ratio:.3e}");
    }
    Ok(OmegaFactor {
        lu,
        variant,
        pivot_ratio,
    })
}

/// Everything a first-block solve needs that depends only on `X`.
#[derive(Debug, Clone)]
pub struct Precompute {
    /// `Λ_i`, shape `n × d × d`.
    pub lambdas: Array3<f64>,
    /// Rows `Λ_i x_i`.
    pub lambda_x: Array2<f64>,
    /// `x_iᵀ Λ_i x_i`.
    pub quad: Array1<f64>,
    pub d_matrix: Array2<f64>,
}

impl Precompute {
    pub fn new(x: ArrayView2<'_, f64>) -> Self {
        let lambdas = precompute_lambdas(x);
        let lambda_x = lambda_times_anchor(x, lambdas.view());
        let quad = Zip::from(lambda_x.rows())
            .and(x.rows())
            .map_collect(|w, xi| w.dot(&xi));
        let d_matrix = compute_d(x, lambdas.view());
        Self {
            lambdas,
            lambda_x,
            quad,
            d_matrix,
        }
    }

    pub fn n(&self) -> usize {
        self.quad.len()
    }

    pub fn factor(&self, variant: OmegaVariant) -> Result<OmegaFactor> {
        build_omega(self.quad.view(), self.d_matrix.view(), variant)
    }

    /// Applies `Λ_i` to row `i` of `rows`.
    pub fn apply(&self, rows: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = Array2::zeros(rows.dim());
        let zip = Zip::from(out.rows_mut()).and(rows.rows()).and(self.lambdas.axis_iter(Axis(0)));
        let f = |mut o: ArrayViewMut1<'_, f64>, r: ArrayView1<'_, f64>, lam: ArrayView2<'_, f64>| {
            general_mat_vec_mul(1.0, &lam, &r, 0.0, &mut o)
        };
        if super::parallel(rows.len() * rows.ncols()) {
            zip.par_for_each(f);
        } else {
            zip.for_each(f);
        }
        out
    }

    pub fn lambda(&self, i: usize) -> ArrayView2<'_, f64> {
        self.lambdas.slice(s![i, .., ..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_x(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Array2::from_shape_fn((n, d), |_| rng.random_range(-1.0..1.0));
        let mean = x.mean_axis(Axis(0)).unwrap();
        x -= &mean;
        x
    }

    fn defining_matrix(x: ArrayView2<'_, f64>, i: usize) -> Array2<f64> {
        let (n, d) = x.dim();
        let nf = n as f64;
        Array2::from_shape_fn((d, d), |(r, c)| {
            let mut v = x[[i, r]] * x[[i, c]];
            if r == c {
                v += 1.0 / nf;
            }
            for j in 0..n {
                v += x[[j, r]] * x[[j, c]] / nf;
            }
            v
        })
    }

    #[test]
    fn lambda_trivial_cases() {
        let lam = precompute_lambdas(array![[0.0]].view());
        assert_eq!(lam[[0, 0, 0]], 1.0);
        let lam = precompute_lambdas(array![[-1.0], [1.0]].view());
        assert!((lam[[0, 0, 0]] - 0.4).abs() < 1e-15);
        assert!((lam[[1, 0, 0]] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn lambda_multiply_back() {
        let x = random_x(5, 3, 7);
        for lam in [precompute_lambdas(x.view()), precompute_lambdas_direct(x.view())] {
            for i in 0..5 {
                let m = defining_matrix(x.view(), i);
                let l = lam.slice(s![i, .., ..]);
                let prod: Array2<f64> = l.dot(&m);
                for ((r, c), v) in prod.indexed_iter() {
                    let target = if r == c { 1.0 } else { 0.0 };
                    assert!((v - target).abs() < 1e-10, "Λ_{i} multiply-back ({r},{c}) = {v}");
                }
                let l = lam.slice(s![i, .., ..]);
                for r in 0..3 {
                    for c in 0..3 {
                        assert!((l[[r, c]] - l[[c, r]]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    /// Literal scalar transcription of the `D` definition.
    fn d_transcribed(x: ArrayView2<'_, f64>, lam: ArrayView3<'_, f64>) -> Array2<f64> {
        let (n, d) = x.dim();
        let nf = n as f64;
        let quad_form = |a: usize, k: usize, b: usize| -> f64 {
            let mut s = 0.0;
            for r in 0..d {
                for c in 0..d {
                    s += x[[a, r]] * lam[[k, r, c]] * x[[b, c]];
                }
            }
            s
        };
        Array2::from_shape_fn((n, n), |(i, j)| {
            let mut mean_term = 0.0;
            let mut last = 0.0;
            for k in 0..n {
                mean_term += quad_form(i, k, j) / nf;
                last += quad_form(k, k, j) / nf;
            }
            quad_form(i, i, j) + quad_form(i, j, j) + mean_term - quad_form(j, j, j) - last
        })
    }

    #[test]
    fn d_zero_design() {
        let x = Array2::zeros((3, 2));
        let lam = precompute_lambdas(x.view());
        assert!(compute_d(x.view(), lam.view()).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn d_two_point_transcription() {
        let x = array![[-1.0], [1.0]];
        let lam = precompute_lambdas(x.view());
        let fast = compute_d(x.view(), lam.view());
        // Λ = 0.4 for both points and mean(x) = 0, so D_ij = 1.2 x_i x_j − 0.4.
        let expected = array![[1.2 - 0.4, -1.2 - 0.4], [-1.2 - 0.4, 1.2 - 0.4]];
        for (a, b) in fast.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
        let slow = d_transcribed(x.view(), lam.view());
        for (a, b) in fast.iter().zip(slow.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn d_matches_transcription_and_reordered_row_sums() {
        let x = random_x(7, 3, 11);
        let lam = precompute_lambdas(x.view());
        let fast = compute_d(x.view(), lam.view());
        let slow = d_transcribed(x.view(), lam.view());
        for (a, b) in fast.iter().zip(slow.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        // Row sums with the three terms summed in the opposite order:
        // Σ_j D_ij = Σ_j [−(1/n)Σ_k x_kᵀΛ_k x_j] + Σ_j[−x_jᵀΛ_j x_j] + Σ_j x_iᵀ(...)x_j.
        let (n, d) = x.dim();
        let nf = n as f64;
        for i in 0..n {
            let mut total = 0.0;
            for j in (0..n).rev() {
                let mut t3 = 0.0;
                for k in (0..n).rev() {
                    for r in 0..d {
                        for c in 0..d {
                            t3 -= x[[k, r]] * lam[[k, r, c]] * x[[j, c]] / nf;
                        }
                    }
                }
                let mut t2 = 0.0;
                let mut t1 = 0.0;
                for r in 0..d {
                    for c in 0..d {
                        t2 -= x[[j, r]] * lam[[j, r, c]] * x[[j, c]];
                        let mut m = lam[[i, r, c]] + lam[[j, r, c]];
                        for k in 0..n {
                            m += lam[[k, r, c]] / nf;
                        }
                        t1 += x[[i, r]] * m * x[[j, c]];
                    }
                }
                total += t3 + t2 + t1;
            }
            assert!((fast.row(i).sum() - total).abs() < 1e-11);
        }
    }

    #[test]
    fn omega_trivial_variants() {
        let x = Array2::zeros((2, 1));
        let pre = Precompute::new(x.view());
        let om = omega_matrix(pre.quad.view(), pre.d_matrix.view(), OmegaVariant::Convex { rho: 1.0 }).unwrap();
        assert_eq!(om, array![[2.5, 0.0], [0.0, 2.5]]);
        let om = omega_matrix(pre.quad.view(), pre.d_matrix.view(), OmegaVariant::Bregman).unwrap();
        assert_eq!(om, array![[2.0, 0.0], [0.0, 2.0]]);
    }

    #[test]
    fn omega_solve_multiply_back() {
        let x = random_x(12, 3, 3);
        let pre = Precompute::new(x.view());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for variant in [
            OmegaVariant::Convex { rho: 0.3 },
            OmegaVariant::Bregman,
            OmegaVariant::DcPlus { rho: 0.3 },
            OmegaVariant::DcMinus { rho: 0.3 },
        ] {
            let om = omega_matrix(pre.quad.view(), pre.d_matrix.view(), variant).unwrap();
            let f = pre.factor(variant).unwrap();
            let r: Array1<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
            let z = f.solve(r.view());
            let back = om.dot(&z);
            let err = (&back - &r).mapv(|v| v * v).sum().sqrt();
            let norm = r.mapv(|v| v * v).sum().sqrt();
            assert!(err <= 1e-10 * norm, "{variant:?}: residual {err}");
        }
    }

    #[test]
    fn omega_rejects_bad_rho_and_singular() {
        let pre = Precompute::new(Array2::zeros((2, 1)).view());
        assert!(matches!(
            pre.factor(OmegaVariant::Convex { rho: 0.0 }),
            Err(Error::InvalidConfig(_))
        ));
        let err = build_omega(array![2.0, 2.0].view(), Array2::zeros((2, 2)).view(), OmegaVariant::Bregman)
            .unwrap_err();
        assert!(matches!(err, Error::Singular { variant: "bregman", .. }));
    }
}
