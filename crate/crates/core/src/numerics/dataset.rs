use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute floor applied to every scale so constant columns map to zero
/// instead of dividing by zero.
pub const SCALE_FLOOR: f64 = 1e-12;

/// A predictor matrix with one response (or integer label) per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<f64>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        let (n, d) = x.dim();
        if n == 0 || d == 0 {
            return Err(Error::EmptyDataset);
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: y.len(),
            });
        }
        for ((row, col), v) in x.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row, col: d });
        }
        Ok(Self { x, y })
    }

    /// Builds a classification dataset from integer labels.
    pub fn with_labels(x: Array2<f64>, labels: &[u32]) -> Result<Self> {
        Self::new(x, labels.iter().map(|&l| f64::from(l)).collect())
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    /// Interprets the responses as class labels.
    pub fn labels(&self) -> Result<Vec<u32>> {
        self.y
            .iter()
            .enumerate()
            .map(|(row, &value)| {
                if value >= 0.0 && value.fract() == 0.0 && value <= f64::from(u32::MAX) {
                    Ok(value as u32)
                } else {
                    Err(Error::InvalidLabel { row, value })
                }
            })
            .collect()
    }

    /// Rows selected by `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            x: self.x.select(Axis(0), indices),
            y: self.y.select(Axis(0), indices),
        })
    }

    pub fn into_parts(self) -> (Array2<f64>, Array1<f64>) {
        (self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    Regression,
    /// Labels pass through normalization untouched.
    Classification,
}

/// Affine maps taking raw predictors and responses to the centered, scaled
/// coordinates the solvers work in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationState {
    pub x_center: Vec<f64>,
    pub x_scale: Vec<f64>,
    pub y_center: f64,
    pub y_scale: f64,
}

impl NormalizationState {
    pub fn identity(d: usize) -> Self {
        Self {
            x_center: vec![0.0; d],
            x_scale: vec![1.0; d],
            y_center: 0.0,
            y_scale: 1.0,
        }
    }

    pub fn d(&self) -> usize {
        self.x_center.len()
    }

    pub fn apply_x(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if x.len() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.x_center.iter().zip(&self.x_scale))
            .map(|(v, (c, s))| (v - c) / s)
            .collect())
    }

    pub fn apply_x_rows(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                got: x.ncols(),
            });
        }
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for ((v, c), s) in row.iter_mut().zip(&self.x_center).zip(&self.x_scale) {
                *v = (*v - c) / s;
            }
        }
        Ok(out)
    }

    pub fn invert_x(&self, x: ArrayView1<'_, f64>) -> Array1<f64> {
        x.iter()
            .zip(self.x_center.iter().zip(&self.x_scale))
            .map(|(v, (c, s))| v * s + c)
            .collect()
    }

    pub fn apply_y(&self, y: f64) -> f64 {
        (y - self.y_center) / self.y_scale
    }

    pub fn invert_y(&self, y: f64) -> f64 {
        y * self.y_scale + self.y_center
    }

    pub fn validate(&self) -> Result<()> {
        let scales_ok = self.x_scale.iter().all(|s| s.is_finite() && *s > 0.0)
            && self.y_scale.is_finite()
            && self.y_scale > 0.0;
        let centers_ok = self.x_center.iter().all(|c| c.is_finite()) && self.y_center.is_finite();
        if self.x_center.len() != self.x_scale.len() {
            return Err(Error::DimensionMismatch {
                expected: self.x_center.len(),
                got: self.x_scale.len(),
            });
        }
        if !(scales_ok && centers_ok) {
            return Err(Error::Malformed(
                "normalization scales must be positive and finite".into(),
            ));
        }
        Ok(())
    }
}

/// Centers every column, scales it to max-abs 1, and (for regression)
/// standardizes the response to zero mean and unit population variance.
pub fn normalize(raw: &Dataset, kind: TargetKind) -> Result<(Dataset, NormalizationState)> {
    let (n, d) = raw.x.dim();
    if n == 0 || d == 0 {
        return Err(Error::EmptyDataset);
    }
    let nf = n as f64;

    let mut x_center = Vec::with_capacity(d);
    let mut x_scale = Vec::with_capacity(d);
    let mut x = raw.x.clone();
    for (l, mut col) in x.columns_mut().into_iter().enumerate() {
        let mean = col.sum() / nf;
        col.mapv_inplace(|v| v - mean);
        let max_abs = col.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if max_abs < SCALE_FLOOR {
            log::warn!("feature column {l} is constant; it is mapped to zero");
        }
        let scale = max_abs.max(SCALE_FLOOR);
        col.mapv_inplace(|v| v / scale);
        x_center.push(mean);
        x_scale.push(scale);
    }

    let (y, y_center, y_scale) = match kind {
        TargetKind::Classification => (raw.y.clone(), 0.0, 1.0),
        TargetKind::Regression => {
            let mean = raw.y.sum() / nf;
            let centered = raw.y.mapv(|v| v - mean);
            let std = (centered.iter().map(|v| v * v).sum::<f64>() / nf).sqrt();
            let scale = std.max(SCALE_FLOOR);
            (centered.mapv(|v| v / scale), mean, scale)
        }
    };

    let state = NormalizationState {
        x_center,
        x_scale,
        y_center,
        y_scale,
    };
    Ok((Dataset { x, y }, state))
}
