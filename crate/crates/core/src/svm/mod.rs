//! Binary RBF-kernel SVM: feature standardization, SMO training and
//! grid-search cross-validation.

mod grid;
mod smo;

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::Label;

pub use grid::{grid_search_cv, stratified_folds, GridCell, GridSearchResult, SvmGrid};
pub use smo::{dual_objective, solve_dual, DualSolution};

pub const CHECKPOINT_FORMAT: &str = "veriscope-svm";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub gamma: f64,
    /// KKT violation at which SMO stops.
    pub tolerance: f64,
    /// Bounds the SMO iterations at `max_passes · n · 100`.
    pub max_passes: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 16.0,
            gamma: 0.01,
            tolerance: 1e-3,
            max_passes: 50,
            seed: 0,
        }
    }
}

impl SvmConfig {
    pub fn new(c: f64, gamma: f64) -> Self {
        SvmConfig {
            c,
            gamma,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite() && self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!("C and gamma must be positive (C={}, gamma={})", self.c, self.gamma)));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 || self.max_passes == 0 {
            return Err(Error::invalid("tolerance and max_passes must be positive"));
        }
        Ok(())
    }

    fn max_iterations(&self, n: usize) -> usize {
        self.max_passes.saturating_mul(n.max(1)).saturating_mul(100)
    }
}

/// exp(−γ‖x − y‖²)
pub fn rbf_kernel(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>, gamma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!("kernel arguments have lengths {} and {}", x.len(), y.len())));
    }
    Ok((-gamma * sq_dist(x, y)).exp())
}

fn sq_dist(x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Pairwise squared distances between the rows of `a` and `b`.
pub fn sq_distances(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let mut d = Array2::zeros((a.nrows(), b.nrows()));
    for (i, ra) in a.rows().into_iter().enumerate() {
        for (j, rb) in b.rows().into_iter().enumerate() {
            d[[i, j]] = sq_dist(ra, rb);
        }
    }
    d
}

pub fn rbf_gram(a: &Array2<f64>, b: &Array2<f64>, gamma: f64) -> Array2<f64> {
    sq_distances(a, b).mapv(|d| (-gamma * d).exp())
}

/// Per-feature centring and scaling with training statistics. Columns that
/// are constant on the training data are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub input_dim: usize,
    pub kept: Vec<usize>,
    pub dropped: Vec<usize>,
    pub means: Vec<f64>,
    /// Population standard deviations of the kept columns.
    pub stds: Vec<f64>,
}

const CONSTANT_STD: f64 = 1e-12;

impl Standardizer {
    pub fn fit(data: &Array2<f64>) -> Result<Self> {
        if data.nrows() < 2 {
            return Err(Error::invalid("standardization needs at least two rows"));
        }
        let n = data.nrows() as f64;
        let (mut kept, mut dropped, mut means, mut stds) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for (j, col) in data.axis_iter(Axis(1)).enumerate() {
            let mean = col.sum() / n;
            let std = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
            if std > CONSTANT_STD {
                kept.push(j);
                means.push(mean);
                stds.push(std);
            } else {
                dropped.push(j);
            }
        }
        Ok(Standardizer {
            input_dim: data.ncols(),
            kept,
            dropped,
            means,
            stds,
        })
    }

    pub fn output_dim(&self) -> usize {
        self.kept.len()
    }

    pub fn apply_row(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::invalid(format!("expected {} features, got {}", self.input_dim, x.len())));
        }
        Ok(self
            .kept
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(&j, (m, s))| (x[j] - m) / s)
            .collect())
    }

    pub fn apply(&self, data: &Array2<f64>) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((data.nrows(), self.output_dim()));
        for (i, row) in data.rows().into_iter().enumerate() {
            out.row_mut(i).assign(&self.apply_row(row)?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub config: SvmConfig,
    pub standardizer: Standardizer,
    /// Standardized support vectors, one per row.
    pub support_vectors: Array2<f64>,
    /// αᵢyᵢ for each support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
}

/// Training diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoReport {
    /// One α per training example, in input order.
    pub alphas: Vec<f64>,
    pub dual_objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Standardized training data, as seen by the solver.
    pub training_data: Array2<f64>,
}

pub fn label_signs(labels: &[Label]) -> Vec<f64> {
    labels.iter().map(|l| l.sign()).collect()
}

fn check_training(x: &Array2<f64>, labels: &[Label]) -> Result<()> {
    if x.nrows() != labels.len() {
        return Err(Error::invalid(format!("{} rows but {} labels", x.nrows(), labels.len())));
    }
    if !Label::ALL.iter().all(|l| labels.contains(l)) {
        return Err(Error::invalid("SVM training needs both classes"));
    }
    Ok(())
}

pub fn svm_train_smo(x: &Array2<f64>, labels: &[Label], config: &SvmConfig) -> Result<SvmModel> {
    svm_train_smo_with_report(x, labels, config).map(|(m, _)| m)
}

pub fn svm_train_smo_with_report(x: &Array2<f64>, labels: &[Label], config: &SvmConfig) -> Result<(SvmModel, SmoReport)> {
    config.validate()?;
    check_training(x, labels)?;
    let standardizer = Standardizer::fit(x)?;
    let z = standardizer.apply(x)?;
    let y = label_signs(labels);
    let kernel = rbf_gram(&z, &z, config.gamma);
    let sol = solve_dual(&kernel, &y, config.c, config.tolerance, config.max_iterations(y.len()), config.seed);
    if !sol.converged {
        log::warn!("SMO stopped at the iteration cap ({}) before reaching tolerance", sol.iterations);
    }
    let sv: Vec<usize> = (0..y.len()).filter(|&i| sol.alphas[i] > 0.0).collect();
    let model = SvmModel {
        config: *config,
        support_vectors: z.select(Axis(0), &sv),
        dual_coef: sv.iter().map(|&i| sol.alphas[i] * y[i]).collect(),
        bias: sol.bias,
        standardizer,
    };
    let report = SmoReport {
        dual_objective: dual_objective(&sol.alphas, &y, &kernel),
        alphas: sol.alphas,
        iterations: sol.iterations,
        converged: sol.converged,
        training_data: z,
    };
    Ok((model, report))
}

impl SvmModel {
    /// Σ αᵢyᵢK(sᵢ, x̃) + b on the standardized `x`.
    pub fn decision(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        let z = self.standardizer.apply_row(x)?;
        Ok(self.decision_standardized(z.view()))
    }

    pub fn decision_standardized(&self, z: ArrayView1<'_, f64>) -> f64 {
        let mut f = 0.0;
        for (sv, coef) in self.support_vectors.rows().into_iter().zip(&self.dual_coef) {
            f += coef * (-self.config.gamma * sq_dist(sv, z)).exp();
        }
        f + self.bias
    }

    pub fn predict(&self, x: ArrayView1<'_, f64>) -> Result<Label> {
        self.decision(x).map(Label::from_decision)
    }

    pub fn support_count(&self) -> usize {
        self.dual_coef.len()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(json)?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::format(
                "checkpoint",
                0,
                format!("unsupported checkpoint {} v{}", ck.format, ck.version),
            ));
        }
        Ok(ck.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SvmModel::from_json(&json)
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    model: SvmModel,
}

pub fn svm_decision(model: &SvmModel, x: ArrayView1<'_, f64>) -> Result<f64> {
    model.decision(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn kernel_closed_forms() {
        let x = array![1.0, 2.0];
        assert_eq!(rbf_kernel(x.view(), x.view(), 5.0).unwrap(), 1.0);
        let y = array![1.0, 3.0];
        assert!((rbf_kernel(x.view(), y.view(), 0.01).unwrap() - 0.990_049_833_7).abs() < 1e-9);
        let mut last = 1.0;
        for g in [0.1, 1.0, 10.0, 100.0] {
            let k = rbf_kernel(x.view(), y.view(), g).unwrap();
            assert!(k < last);
            last = k;
        }
        assert!(last < 1e-40);
        assert!(rbf_kernel(x.view(), array![1.0].view(), 1.0).is_err());
    }

    #[test]
    fn standardization() {
        let data = array![[0.0, 5.0, 1.0], [2.0, 5.0, 3.0], [1.0, 5.0, 8.0]];
        let s = Standardizer::fit(&array![[0.0, 5.0], [2.0, 5.0]]).unwrap();
        assert_eq!(s.dropped, [1]);
        assert_eq!(s.apply(&array![[0.0, 5.0], [2.0, 5.0]]).unwrap(), array![[-1.0], [1.0]]);
        let s = Standardizer::fit(&data).unwrap();
        let z = s.apply(&data).unwrap();
        for col in z.axis_iter(Axis(1)) {
            assert!(col.mean().unwrap().abs() < 1e-9);
        }
        assert!(Standardizer::fit(&array![[1.0, 2.0]]).is_err());
        assert!(s.apply_row(array![1.0].view()).is_err());
    }

    #[test]
    fn two_points_split_at_midpoint() {
        let x = array![[0.0, 0.0], [2.0, 1.0]];
        let m = svm_train_smo(&x, &[Label::False, Label::True], &SvmConfig::new(10.0, 0.5)).unwrap();
        assert_eq!(m.support_count(), 2);
        assert!(m.decision(array![1.0, 0.5].view()).unwrap().abs() < 1e-6);
        assert_eq!(m.predict(array![2.0, 1.0].view()).unwrap(), Label::True);
        assert_eq!(m.predict(array![-1.0, 0.0].view()).unwrap(), Label::False);
    }

    #[test]
    fn xor_is_learned() {
        let x = array![[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]];
        let labels = [Label::False, Label::False, Label::True, Label::True];
        let m = svm_train_smo(&x, &labels, &SvmConfig::new(10.0, 1.0)).unwrap();
        for (row, l) in x.rows().into_iter().zip(labels) {
            assert_eq!(m.predict(row).unwrap(), l);
        }
    }

    #[test]
    fn margin_support_vectors_sit_on_the_margin() {
        let x = array![[0.0], [1.0], [3.0], [4.0], [0.5], [3.5]];
        let labels = [Label::False, Label::False, Label::True, Label::True, Label::False, Label::True];
        let cfg = SvmConfig::new(100.0, 0.5);
        let (m, report) = svm_train_smo_with_report(&x, &labels, &cfg).unwrap();
        for (i, l) in labels.iter().enumerate() {
            let a = report.alphas[i];
            if a > 1e-9 && a < cfg.c - 1e-9 {
                let f = m.decision(x.row(i)).unwrap();
                assert!((f - l.sign()).abs() <= cfg.tolerance, "f={f}");
            }
        }
        let y = label_signs(&labels);
        assert!(report.alphas.iter().zip(&y).map(|(a, y)| a * y).sum::<f64>().abs() <= 1e-8);
    }

    #[test]
    fn degenerate_model_returns_bias() {
        let m = SvmModel {
            config: SvmConfig::default(),
            standardizer: Standardizer::fit(&array![[0.0], [1.0]]).unwrap(),
            support_vectors: Array2::zeros((0, 1)),
            dual_coef: Vec::new(),
            bias: -0.25,
        };
        assert_eq!(m.decision(array![3.0].view()).unwrap(), -0.25);
    }

    #[test]
    fn duplicated_data_predicts_the_same() {
        let x = array![[0.0, 1.0], [1.0, 0.2], [2.0, 2.0], [3.0, 1.5], [0.5, 0.5], [2.5, 3.0]];
        let labels = [Label::False, Label::False, Label::True, Label::True, Label::False, Label::True];
        let cfg = SvmConfig::new(1.0, 0.5);
        let a = svm_train_smo(&x, &labels, &cfg).unwrap();
        let x2 = ndarray::concatenate![Axis(0), x, x];
        let labels2: Vec<Label> = labels.iter().chain(&labels).copied().collect();
        let b = svm_train_smo(&x2, &labels2, &cfg).unwrap();
        for probe in [array![0.2, 0.3], array![2.2, 2.5], array![1.4, 1.0]] {
            assert_eq!(a.predict(probe.view()).unwrap(), b.predict(probe.view()).unwrap());
        }
    }

    #[test]
    fn rejects_single_class_and_bad_config() {
        let x = array![[0.0], [1.0]];
        assert!(svm_train_smo(&x, &[Label::True, Label::True], &SvmConfig::default()).is_err());
        assert!(svm_train_smo(&x, &[Label::True, Label::False], &SvmConfig::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let x = array![[0.1, 0.7], [0.9, 0.3], [0.4, 0.45], [0.8, 0.9]];
        let labels = [Label::False, Label::True, Label::False, Label::True];
        let m = svm_train_smo(&x, &labels, &SvmConfig::new(4.0, 0.3)).unwrap();
        let back = SvmModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        for row in x.rows() {
            assert_eq!(back.decision(row).unwrap().to_bits(), m.decision(row).unwrap().to_bits());
        }
    }

    /// Cholesky of K + εI succeeds iff K has no eigenvalue below −ε.
    fn cholesky_ok(k: &Array2<f64>, eps: f64) -> bool {
        let n = k.nrows();
        let mut l = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..j).map(|p| l[[i, p]] * l[[j, p]]).sum();
                if i == j {
                    let d = k[[i, i]] + eps - s;
                    if d <= 0.0 {
                        return false;
                    }
                    l[[i, i]] = d.sqrt();
                } else {
                    l[[i, j]] = (k[[i, j]] - s) / l[[j, j]];
                }
            }
        }
        true
    }

    proptest! {
        #[test]
        fn gram_is_symmetric_psd(points in proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, 3), 2..15), gamma in 0.01f64..5.0) {
            let n = points.len();
            let x = Array2::from_shape_vec((n, 3), points.concat()).unwrap();
            let k = rbf_gram(&x, &x, gamma);
            prop_assert_eq!(&k, &k.t().to_owned());
            prop_assert!(cholesky_ok(&k, 1e-8));
        }

        #[test]
        fn dual_stays_feasible(points in proptest::collection::vec((-2.0f64..2.0, -2.0f64..2.0, any::<bool>()), 4..14), c in 0.1f64..20.0) {
            let mut labels: Vec<Label> = points.iter().map(|p| if p.2 { Label::True } else { Label::False }).collect();
            labels[0] = Label::True;
            labels[1] = Label::False;
            let x = Array2::from_shape_vec((points.len(), 2), points.iter().flat_map(|p| [p.0, p.1]).collect()).unwrap();
            let (_, r) = svm_train_smo_with_report(&x, &labels, &SvmConfig::new(c, 0.7)).unwrap();
            let y = label_signs(&labels);
            prop_assert!(r.alphas.iter().all(|a| (0.0..=c).contains(a)));
            prop_assert!(r.alphas.iter().zip(&y).map(|(a, y)| a * y).sum::<f64>().abs() <= 1e-8);
        }
    }
}
