//! Max-affine function representation and its DC and Bregman compositions.
//!
//! A fitted convex function is stored as `n` supporting planes anchored at the
//! (normalized) training points:
//!
//! ```text
//! f(x) = max_i ⟨a_i, x − x_i⟩ + b_i
//! ```
//!
//! All evaluation happens in normalized coordinates. Regression outputs are
//! mapped back to raw response units; Bregman divergences stay in normalized
//! units since they are only ever compared with each other.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::numerics::NormalizationState;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct MaxAffineModel {
    anchors: Array2<f64>,
    slopes: Array2<f64>,
    offsets: Array1<f64>,
    norm: NormalizationState,
}

impl MaxAffineModel {
    pub fn new(
        anchors: Array2<f64>,
        slopes: Array2<f64>,
        offsets: Array1<f64>,
        norm: NormalizationState,
    ) -> Result<Self> {
        let (n, d) = anchors.dim();
        if n == 0 || d == 0 {
            return Err(Error::EmptyDataset);
        }
        if slopes.dim() != (n, d) {
            return Err(Error::DimensionMismatch {
                expected: n * d,
                got: slopes.len(),
            });
        }
        if offsets.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: offsets.len(),
            });
        }
        if norm.d() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: norm.d(),
            });
        }
        norm.validate()?;
        let finite = anchors.iter().chain(slopes.iter()).chain(offsets.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::Malformed("model contains non-finite values".into()));
        }
        Ok(Self {
            anchors,
            slopes,
            offsets,
            norm,
        })
    }

    pub fn n(&self) -> usize {
        self.anchors.nrows()
    }

    pub fn d(&self) -> usize {
        self.anchors.ncols()
    }

    pub fn anchors(&self) -> ArrayView2<'_, f64> {
        self.anchors.view()
    }

    pub fn slopes(&self) -> ArrayView2<'_, f64> {
        self.slopes.view()
    }

    pub fn offsets(&self) -> ArrayView1<'_, f64> {
        self.offsets.view()
    }

    pub fn norm(&self) -> &NormalizationState {
        &self.norm
    }

    /// Value of plane `i` at a normalized point.
    pub fn plane(&self, i: usize, x: ArrayView1<'_, f64>) -> f64 {
        let a = self.slopes.row(i);
        let xi = self.anchors.row(i);
        let mut v = self.offsets[i];
        for l in 0..x.len() {
            v += a[l] * (x[l] - xi[l]);
        }
        v
    }

    /// Maximum over planes at a normalized point, with the lowest maximizing index.
    pub fn evaluate_normalized(&self, x: ArrayView1<'_, f64>) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for i in 0..self.n() {
            let v = self.plane(i, x);
            if v > best.0 {
                best = (v, i);
            }
        }
        best
    }

    /// Evaluates at a raw-unit point and returns the raw-unit value together
    /// with the active plane.
    pub fn evaluate(&self, x: ArrayView1<'_, f64>) -> Result<(f64, usize)> {
        let xn = self.norm.apply_x(x)?;
        let (v, i) = self.evaluate_normalized(xn.view());
        Ok((self.norm.invert_y(v), i))
    }

    /// Raw-unit predictions for each row of `x`.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        let xn = self.norm.apply_x_rows(x)?;
        Ok(xn
            .rows()
            .into_iter()
            .map(|r| self.norm.invert_y(self.evaluate_normalized(r).0))
            .collect())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        ModelFile::from_convex("convex", self).write(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Model::load(path)?.into_convex()
    }
}

/// `φ¹ − φ²` with both components sharing anchors and normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct DcModel {
    phi1: MaxAffineModel,
    phi2: MaxAffineModel,
}

impl DcModel {
    pub fn new(phi1: MaxAffineModel, phi2: MaxAffineModel) -> Result<Self> {
        if phi1.anchors != phi2.anchors || phi1.norm != phi2.norm {
            return Err(Error::Malformed(
                "DC components must share anchors and normalization".into(),
            ));
        }
        Ok(Self { phi1, phi2 })
    }

    pub fn phi1(&self) -> &MaxAffineModel {
        &self.phi1
    }

    pub fn phi2(&self) -> &MaxAffineModel {
        &self.phi2
    }

    pub fn d(&self) -> usize {
        self.phi1.d()
    }

    pub fn evaluate_normalized(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.phi1.evaluate_normalized(x).0 - self.phi2.evaluate_normalized(x).0
    }

    pub fn evaluate(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        let xn = self.phi1.norm.apply_x(x)?;
        Ok(self.phi1.norm.invert_y(self.evaluate_normalized(xn.view())))
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        let xn = self.phi1.norm.apply_x_rows(x)?;
        Ok(xn
            .rows()
            .into_iter()
            .map(|r| self.phi1.norm.invert_y(self.evaluate_normalized(r)))
            .collect())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = ModelFile::from_convex("dc", &self.phi1);
        file.slopes2 = Some(rows(&self.phi2.slopes));
        file.offsets2 = Some(self.phi2.offsets.to_vec());
        file.write(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Model::load(path)?.into_dc()
    }
}

/// A learned Bregman divergence: the max-affine generator plus the training
/// labels used for nearest-neighbour prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct BregmanModel {
    generator: MaxAffineModel,
    labels: Vec<u32>,
}

impl BregmanModel {
    pub fn new(generator: MaxAffineModel, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != generator.n() {
            return Err(Error::DimensionMismatch {
                expected: generator.n(),
                got: labels.len(),
            });
        }
        Ok(Self { generator, labels })
    }

    pub fn generator(&self) -> &MaxAffineModel {
        &self.generator
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.generator.n()
    }

    /// `D(x, x_j)` for a normalized point; uses the trained slope of anchor `j`
    /// as the subgradient there.
    pub fn divergence_normalized(&self, x: ArrayView1<'_, f64>, j: usize) -> Result<f64> {
        if j >= self.n() {
            return Err(Error::IndexOutOfRange { index: j, n: self.n() });
        }
        let (f, _) = self.generator.evaluate_normalized(x);
        Ok(f - self.generator.plane(j, x))
    }

    /// `D(x, x_j)` for a raw-unit point.
    pub fn bregman_divergence(&self, x: ArrayView1<'_, f64>, j: usize) -> Result<f64> {
        let xn = self.generator.norm.apply_x(x)?;
        self.divergence_normalized(xn.view(), j)
    }

    fn divergences(&self, xn: ArrayView1<'_, f64>) -> Vec<f64> {
        let (f, _) = self.generator.evaluate_normalized(xn);
        (0..self.n()).map(|j| f - self.generator.plane(j, xn)).collect()
    }

    /// Majority label among the `k` anchors with the smallest divergence
    /// from `x`. `k` is truncated to `n`; label ties go to the smaller total
    /// divergence, then to the smaller label.
    pub fn predict_knn(&self, x: ArrayView1<'_, f64>, k: usize) -> Result<u32> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        let xn = self.generator.norm.apply_x(x)?;
        let div = self.divergences(xn.view());
        let mut order: Vec<usize> = (0..self.n()).collect();
        order.sort_by(|&a, &b| div[a].total_cmp(&div[b]).then(a.cmp(&b)));
        let mut votes: BTreeMap<u32, (usize, f64)> = BTreeMap::new();
        for &j in order.iter().take(k.min(self.n())) {
            let e = votes.entry(self.labels[j]).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += div[j];
        }
        let best = votes
            .into_iter()
            .min_by(|(la, (ca, sa)), (lb, (cb, sb))| {
                cb.cmp(ca).then(sa.total_cmp(sb)).then(la.cmp(lb))
            })
            .expect("k >= 1 and n >= 1");
        Ok(best.0)
    }

    /// `n × n` matrix whose `(i, j)` entry is `D(x_i, x_j)` over the anchors.
    pub fn divergence_matrix(&self) -> Array2<f64> {
        let n = self.n();
        let mut out = Array2::zeros((n, n));
        for (i, row) in self.generator.anchors.rows().into_iter().enumerate() {
            for (j, v) in self.divergences(row).into_iter().enumerate() {
                out[[i, j]] = v;
            }
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = ModelFile::from_convex("bregman", &self.generator);
        file.labels = Some(self.labels.clone());
        file.write(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Model::load(path)?.into_bregman()
    }
}

/// Any persisted model.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Convex(MaxAffineModel),
    Dc(DcModel),
    Bregman(BregmanModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Convex(_) => "convex",
            Self::Dc(_) => "dc",
            Self::Bregman(_) => "bregman",
        }
    }

    pub fn d(&self) -> usize {
        match self {
            Self::Convex(m) => m.d(),
            Self::Dc(m) => m.d(),
            Self::Bregman(m) => m.generator.d(),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        match self {
            Self::Convex(m) => m.save(path),
            Self::Dc(m) => m.save(path),
            Self::Bregman(m) => m.save(path),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let value: Value = serde_json::from_reader(BufReader::new(File::open(path)?))
            .map_err(|e| Error::Malformed(e.to_string()))?;
        Self::from_json(value)
    }

    pub fn from_json(value: Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Malformed("top level must be an object".into()))?;
        for field in ["schema", "kind", "n", "d", "anchors", "slopes", "offsets", "norm"] {
            if !obj.contains_key(field) {
                return Err(Error::MissingField(field.into()));
            }
        }
        let schema = obj["schema"]
            .as_u64()
            .ok_or_else(|| Error::Malformed("`schema` must be an integer".into()))?;
        if schema != SCHEMA_VERSION {
            return Err(Error::SchemaVersion(schema));
        }
        let kind = obj["kind"].as_str().unwrap_or_default().to_owned();
        let extra: &[&str] = match kind.as_str() {
            "convex" => &[],
            "dc" => &["slopes2", "offsets2"],
            "bregman" => &["labels"],
            other => return Err(Error::Malformed(format!("unknown model kind `{other}`"))),
        };
        for field in extra {
            if !obj.contains_key(*field) {
                return Err(Error::MissingField((*field).into()));
            }
        }
        let file: ModelFile =
            serde_json::from_value(value).map_err(|e| Error::Malformed(e.to_string()))?;
        file.into_model()
    }

    pub fn into_convex(self) -> Result<MaxAffineModel> {
        match self {
            Self::Convex(m) => Ok(m),
            other => Err(kind_mismatch("convex", other.kind())),
        }
    }

    pub fn into_dc(self) -> Result<DcModel> {
        match self {
            Self::Dc(m) => Ok(m),
            other => Err(kind_mismatch("dc", other.kind())),
        }
    }

    pub fn into_bregman(self) -> Result<BregmanModel> {
        match self {
            Self::Bregman(m) => Ok(m),
            other => Err(kind_mismatch("bregman", other.kind())),
        }
    }
}

fn kind_mismatch(expected: &str, found: &str) -> Error {
    Error::KindMismatch {
        expected: expected.into(),
        found: found.into(),
    }
}

fn rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn matrix(name: &str, rows: Vec<Vec<f64>>, n: usize, d: usize) -> Result<Array2<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != d) {
        return Err(Error::Malformed(format!("`{name}` must be {n} rows of {d} numbers")));
    }
    Ok(Array2::from_shape_vec((n, d), rows.into_iter().flatten().collect())
        .expect("shape checked above"))
}

fn vector(name: &str, values: Vec<f64>, n: usize) -> Result<Array1<f64>> {
    if values.len() != n {
        return Err(Error::Malformed(format!("`{name}` must have {n} entries")));
    }
    Ok(Array1::from(values))
}

/// On-disk layout of every model kind.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    schema: u64,
    kind: String,
    n: usize,
    d: usize,
    anchors: Vec<Vec<f64>>,
    slopes: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    norm: NormalizationState,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    slopes2: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    offsets2: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    labels: Option<Vec<u32>>,
}

impl ModelFile {
    fn from_convex(kind: &str, m: &MaxAffineModel) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            kind: kind.into(),
            n: m.n(),
            d: m.d(),
            anchors: rows(&m.anchors),
            slopes: rows(&m.slopes),
            offsets: m.offsets.to_vec(),
            norm: m.norm.clone(),
            slopes2: None,
            offsets2: None,
            labels: None,
        }
    }

    fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self).map_err(|e| Error::Malformed(e.to_string()))?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    fn into_model(self) -> Result<Model> {
        let (n, d) = (self.n, self.d);
        let anchors = matrix("anchors", self.anchors, n, d)?;
        let phi1 = MaxAffineModel::new(
            anchors.clone(),
            matrix("slopes", self.slopes, n, d)?,
            vector("offsets", self.offsets, n)?,
            self.norm.clone(),
        )?;
        match self.kind.as_str() {
            "convex" => Ok(Model::Convex(phi1)),
            "dc" => {
                let phi2 = MaxAffineModel::new(
                    anchors,
                    matrix("slopes2", self.slopes2.unwrap_or_default(), n, d)?,
                    vector("offsets2", self.offsets2.unwrap_or_default(), n)?,
                    self.norm,
                )?;
                Ok(Model::Dc(DcModel::new(phi1, phi2)?))
            }
            "bregman" => Ok(Model::Bregman(BregmanModel::new(
                phi1,
                self.labels.unwrap_or_default(),
            )?)),
            other => Err(Error::Malformed(format!("unknown model kind `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn single_plane() -> MaxAffineModel {
        MaxAffineModel::new(array![[1.0]], array![[2.0]], array![3.0], NormalizationState::identity(1)).unwrap()
    }

    fn random_model(n: usize, d: usize, vals: &[f64]) -> MaxAffineModel {
        let mut it = vals.iter().cycle().copied();
        let mut next = || it.next().unwrap();
        MaxAffineModel::new(
            Array2::from_shape_fn((n, d), |_| next()),
            Array2::from_shape_fn((n, d), |_| 2.0 * next()),
            Array1::from_shape_fn(n, |_| next()),
            NormalizationState {
                x_center: (0..d).map(|_| 0.1 * next()).collect(),
                x_scale: (0..d).map(|_| 1.0 + next().abs()).collect(),
                y_center: next(),
                y_scale: 0.5 + next().abs(),
            },
        )
        .unwrap()
    }

    #[test]
    fn single_plane_value() {
        assert_eq!(single_plane().evaluate(array![2.0].view()).unwrap(), (5.0, 0));
    }

    #[test]
    fn ties_break_low() {
        let m = MaxAffineModel::new(
            array![[0.0], [0.0]],
            array![[1.0], [-1.0]],
            array![0.0, 0.0],
            NormalizationState::identity(1),
        )
        .unwrap();
        assert_eq!(m.evaluate(array![0.0].view()).unwrap(), (0.0, 0));
        assert_eq!(m.evaluate(array![-1.0].view()).unwrap(), (1.0, 1));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            single_plane().evaluate(array![1.0, 2.0].view()),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    proptest! {
        #[test]
        fn grid_second_differences_nonnegative(vals in proptest::collection::vec(-1.0..1.0_f64, 30)) {
            let m = random_model(6, 1, &vals);
            let grid: Vec<f64> = (0..=200).map(|k| -3.0 + 0.03 * k as f64).collect();
            let f: Vec<f64> = grid.iter().map(|&x| m.evaluate(array![x].view()).unwrap().0).collect();
            for w in f.windows(3) {
                prop_assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9);
            }
        }

        #[test]
        fn midpoint_convexity_and_anchor_dominance(vals in proptest::collection::vec(-1.0..1.0_f64, 60)) {
            let m = random_model(5, 3, &vals);
            let x = array![vals[0] * 2.0, vals[1], -vals[2]];
            let z = array![vals[3], vals[4] * 3.0, vals[5]];
            let fx = m.evaluate(x.view()).unwrap().0;
            let fz = m.evaluate(z.view()).unwrap().0;
            let mid = (&x + &z) / 2.0;
            let fm = m.evaluate(mid.view()).unwrap().0;
            prop_assert!(fm <= (fx + fz) / 2.0 + 1e-9 * (1.0 + fx.abs() + fz.abs()));
            for i in 0..m.n() {
                let (v, k) = m.evaluate_normalized(m.anchors().row(i));
                prop_assert!(v >= m.offsets()[i] - 1e-12);
                prop_assert_eq!(m.plane(k, m.anchors().row(i)), v);
            }
        }

        #[test]
        fn dc_equals_difference_of_separate_maxima(vals in proptest::collection::vec(-1.0..1.0_f64, 40)) {
            let phi1 = random_model(4, 2, &vals);
            let shifted: Vec<f64> = vals.iter().rev().copied().collect();
            let other = random_model(4, 2, &shifted);
            let phi2 = MaxAffineModel::new(
                phi1.anchors().to_owned(), other.slopes().to_owned(), other.offsets().to_owned(), phi1.norm().clone(),
            ).unwrap();
            let dc = DcModel::new(phi1.clone(), phi2.clone()).unwrap();
            for k in 0..20 {
                let x = array![-2.0 + 0.2 * k as f64, 1.0 - 0.1 * k as f64];
                let xn = phi1.norm().apply_x(x.view()).unwrap();
                let mut m1 = f64::NEG_INFINITY;
                let mut m2 = f64::NEG_INFINITY;
                for i in 0..4 {
                    let mut p1 = phi1.offsets()[i];
                    let mut p2 = phi2.offsets()[i];
                    for l in 0..2 {
                        p1 += phi1.slopes()[[i, l]] * (xn[l] - phi1.anchors()[[i, l]]);
                        p2 += phi2.slopes()[[i, l]] * (xn[l] - phi2.anchors()[[i, l]]);
                    }
                    m1 = m1.max(p1);
                    m2 = m2.max(p2);
                }
                let expected = (m1 - m2) * phi1.norm().y_scale + phi1.norm().y_center;
                prop_assert!((dc.evaluate(x.view()).unwrap() - expected).abs() < 1e-12);
            }
        }

        #[test]
        fn bregman_nonnegative_and_transcribed(vals in proptest::collection::vec(-1.0..1.0_f64, 40), j in 0usize..5) {
            let g = random_model(5, 2, &vals);
            let model = BregmanModel::new(g.clone(), vec![0, 1, 0, 1, 1]).unwrap();
            let x = array![vals[7] * 3.0, vals[8] * 3.0];
            let d = model.bregman_divergence(x.view(), j).unwrap();
            prop_assert!(d >= -1e-9);
            let xn = g.norm().apply_x(x.view()).unwrap();
            let f = (0..5).map(|i| g.plane(i, xn.view())).fold(f64::NEG_INFINITY, f64::max);
            let mut lin = g.offsets()[j];
            for l in 0..2 {
                lin += g.slopes()[[j, l]] * (xn[l] - g.anchors()[[j, l]]);
            }
            prop_assert!((d - (f - lin)).abs() < 1e-12);
        }

        #[test]
        fn save_load_identity(vals in proptest::collection::vec(-1e3..1e3_f64, 50), kind in 0usize..3) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.json");
            let phi1 = random_model(4, 3, &vals);
            let model = match kind {
                0 => Model::Convex(phi1),
                1 => {
                    let rev: Vec<f64> = vals.iter().rev().copied().collect();
                    let o = random_model(4, 3, &rev);
                    let phi2 = MaxAffineModel::new(phi1.anchors().to_owned(), o.slopes().to_owned(), o.offsets().to_owned(), phi1.norm().clone()).unwrap();
                    Model::Dc(DcModel::new(phi1, phi2).unwrap())
                }
                _ => Model::Bregman(BregmanModel::new(phi1, vec![3, 1, 4, 1]).unwrap()),
            };
            model.save(&path).unwrap();
            prop_assert_eq!(Model::load(&path).unwrap(), model);
        }
    }

    #[test]
    fn dc_trivial_identities() {
        let m = random_model(3, 1, &[0.3, -0.2, 0.9, 0.1, -0.7]);
        let dc = DcModel::new(m.clone(), m.clone()).unwrap();
        let zero = MaxAffineModel::new(
            m.anchors().to_owned(),
            Array2::zeros((3, 1)),
            Array1::zeros(3),
            m.norm().clone(),
        )
        .unwrap();
        let dc0 = DcModel::new(m.clone(), zero).unwrap();
        for k in 0..10 {
            let x = array![-1.0 + 0.25 * k as f64];
            assert!((dc.evaluate(x.view()).unwrap() - m.norm().y_center).abs() < 1e-12);
            assert!((dc0.evaluate(x.view()).unwrap() - m.evaluate(x.view()).unwrap().0).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_generator_has_zero_divergence() {
        let model = BregmanModel::new(single_plane(), vec![7]).unwrap();
        assert_eq!(model.bregman_divergence(array![-4.0].view(), 0).unwrap(), 0.0);
        assert_eq!(model.predict_knn(array![100.0].view(), 5).unwrap(), 7);
        assert!(matches!(
            model.bregman_divergence(array![0.0].view(), 1),
            Err(Error::IndexOutOfRange { index: 1, n: 1 })
        ));
    }

    #[test]
    fn divergence_zero_at_own_anchor() {
        let g = MaxAffineModel::new(
            array![[-1.0], [1.0]],
            array![[-2.0], [2.0]],
            array![1.0, 1.0],
            NormalizationState::identity(1),
        )
        .unwrap();
        let model = BregmanModel::new(g, vec![0, 1]).unwrap();
        assert_eq!(model.bregman_divergence(array![1.0].view(), 1).unwrap(), 0.0);
        assert_eq!(model.bregman_divergence(array![-1.0].view(), 0).unwrap(), 0.0);
    }

    #[test]
    fn knn_two_clusters() {
        // Generator x² sampled by tangent planes at the anchors.
        let xs = [-2.2, -2.0, -1.8, 1.8, 2.0, 2.2];
        let anchors = Array2::from_shape_fn((6, 1), |(i, _)| xs[i]);
        let slopes = Array2::from_shape_fn((6, 1), |(i, _)| 2.0 * xs[i]);
        let offsets = Array1::from_shape_fn(6, |i| xs[i] * xs[i]);
        let g = MaxAffineModel::new(anchors, slopes, offsets, NormalizationState::identity(1)).unwrap();
        let model = BregmanModel::new(g, vec![0, 0, 0, 1, 1, 1]).unwrap();
        for x in [-3.0, -1.0, -1.5] {
            // Brute-force ranking: the three smallest divergences all come from the left cluster.
            let mut ranked: Vec<(f64, usize)> =
                (0..6).map(|j| (model.bregman_divergence(array![x].view(), j).unwrap(), j)).collect();
            ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
            assert!(ranked[..3].iter().all(|(_, j)| *j < 3));
            assert_eq!(model.predict_knn(array![x].view(), 3).unwrap(), 0);
        }
        assert_eq!(model.predict_knn(array![0.5].view(), 3).unwrap(), 1);
        // k > n behaves like k = n: a 3–3 tie is broken by total divergence.
        assert_eq!(
            model.predict_knn(array![1.0].view(), 50).unwrap(),
            model.predict_knn(array![1.0].view(), 6).unwrap()
        );
        assert_eq!(model.predict_knn(array![1.0].view(), 6).unwrap(), 1);
    }

    #[test]
    fn load_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let dc = DcModel::new(single_plane(), single_plane()).unwrap();
        dc.save(&path).unwrap();
        assert!(matches!(
            MaxAffineModel::load(&path),
            Err(Error::KindMismatch { .. })
        ));

        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("offsets");
        assert!(matches!(Model::from_json(v.clone()), Err(Error::MissingField(f)) if f == "offsets"));

        v["offsets"] = serde_json::json!([3.0]);
        v["schema"] = serde_json::json!(2);
        assert!(matches!(Model::from_json(v.clone()), Err(Error::SchemaVersion(2))));

        v["schema"] = serde_json::json!(1);
        v["offsets"] = serde_json::json!([null]);
        assert!(matches!(Model::from_json(v), Err(Error::Malformed(_))));

        std::fs::write(&path, "{ not json").unwrap();
        assert!(matches!(Model::load(&path), Err(Error::Malformed(_))));
    }
}
