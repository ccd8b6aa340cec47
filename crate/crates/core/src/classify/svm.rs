//! One-vs-rest linear SVMs trained with dual coordinate descent.
//!
//! Each binary problem minimizes `½‖w‖² + C Σ max(0, 1 − yᵢ(w·xᵢ + b))`
//! where the bias is an extra weight on a constant-1 feature (and therefore
//! regularized). The dual `min ½αᵀQα − Σα, 0 ≤ α ≤ C` is solved one
//! coordinate at a time in a seeded random order per epoch; training stops
//! once every projected gradient is below `tolerance` and the duality gap is
//! at most `tolerance`.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sparse::SparseVector;
use crate::error::{Error, Result};
use crate::schema::{ClassId, LabelSet};

pub const C_MIN: f64 = 0.1;
pub const C_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    pub tolerance: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

impl SvmParams {
    pub fn new(c: f64) -> Self {
        SvmParams {
            c,
            ..Default::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            tolerance: 1e-4,
            max_epochs: 10_000,
            seed: 0,
        }
    }
}

/// A single linear decision function `w·x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvm {
    pub fn decision(&self, x: &SparseVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    /// `½(‖w‖² + b²) + C Σ hinge`; `labels` are ±1.
    pub fn primal_objective(&self, xs: &[SparseVector], labels: &[f64], c: f64) -> f64 {
        let reg = 0.5 * (self.weights.iter().map(|w| w * w).sum::<f64>() + self.bias * self.bias);
        let hinge: f64 = xs
            .iter()
            .zip(labels)
            .map(|(x, &y)| (1.0 - y * self.decision(x)).max(0.0))
            .sum();
        reg + c * hinge
    }
}

/// Trains one binary SVM. `labels` must be ±1 and contain both signs.
pub fn train_binary(xs: &[SparseVector], labels: &[f64], dim: usize, params: &SvmParams) -> LinearSvm {
    let n = xs.len();
    let c = params.c;
    // Diagonal of Q including the constant bias feature.
    let q_diag: Vec<f64> = xs.iter().map(|x| x.norm_sq() + 1.0).collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    for _ in 0..params.max_epochs {
        order.shuffle(&mut rng);
        let mut max_violation = 0.0f64;
        for &i in &order {
            let y = labels[i];
            let x = &xs[i];
            let grad = y * (x.dot(&w) + b) - 1.0;
            let projected = if alpha[i] <= 0.0 {
                grad.min(0.0)
            } else if alpha[i] >= c {
                grad.max(0.0)
            } else {
                grad
            };
            if projected == 0.0 {
                continue;
            }
            let old = alpha[i];
            alpha[i] = (old - grad / q_diag[i]).clamp(0.0, c);
            let delta = (alpha[i] - old) * y;
            if delta != 0.0 {
                for &(j, v) in x.entries() {
                    if j < dim {
                        w[j] += delta * v;
                    }
                }
                b += delta;
            }
            max_violation = max_violation.max(projected.abs());
        }
        // Small projected gradients alone can leave the objective well above
        // the optimum when C is large; confirm with the duality gap.
        if max_violation < params.tolerance {
            let model = LinearSvm { weights: w.clone(), bias: b };
            let norm_sq = w.iter().map(|v| v * v).sum::<f64>() + b * b;
            let dual = alpha.iter().sum::<f64>() - 0.5 * norm_sq;
            if model.primal_objective(xs, labels, c) - dual <= params.tolerance {
                return model;
            }
        }
    }
    LinearSvm { weights: w, bias: b }
}

/// One linear SVM per class.
#[derive(Debug, Clone, PartialEq)]
pub struct OvrSvmEnsemble {
    pub c: f64,
    pub dim: usize,
    pub classifiers: Vec<LinearSvm>,
}

/// Per-class decision values and the classes with a positive value.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmPrediction {
    pub scores: Vec<f64>,
    pub labels: LabelSet,
}

/// Trains `n_classes` one-vs-rest SVMs over `dim`-dimensional inputs.
///
/// A class whose labels are all positive (or all negative) gets a constant
/// classifier with bias +1 (or −1) and a logged warning.
pub fn train_ovr_svm(
    xs: &[SparseVector],
    ys: &[LabelSet],
    n_classes: usize,
    dim: usize,
    params: &SvmParams,
) -> Result<OvrSvmEnsemble> {
    if xs.len() != ys.len() {
        return Err(Error::Svm(format!(
            "{} inputs but {} label sets",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::Svm("need at least two training points".into()));
    }
    if !(C_MIN..=C_MAX).contains(&params.c) {
        return Err(Error::Svm(format!(
            "C must be in [{C_MIN}, {C_MAX}], got {}",
            params.c
        )));
    }
    if let Some(&bad) = ys.iter().flatten().find(|&&c| c >= n_classes) {
        return Err(Error::UnknownClass(bad));
    }
    let classifiers = (0..n_classes)
        .map(|class| {
            let labels: Vec<f64> = ys
                .iter()
                .map(|y| if y.contains(&class) { 1.0 } else { -1.0 })
                .collect();
            let positives = labels.iter().filter(|&&l| l > 0.0).count();
            if positives == 0 || positives == labels.len() {
                let bias = if positives == 0 { -1.0 } else { 1.0 };
                log::warn!(
                    "class {class}: all {} training labels are {}; using a constant classifier",
                    labels.len(),
                    if positives == 0 { "negative" } else { "positive" }
                );
                LinearSvm {
                    weights: vec![0.0; dim],
                    bias,
                }
            } else {
                train_binary(xs, &labels, dim, params)
            }
        })
        .collect();
    Ok(OvrSvmEnsemble {
        c: params.c,
        dim,
        classifiers,
    })
}

impl OvrSvmEnsemble {
    pub fn n_classes(&self) -> usize {
        self.classifiers.len()
    }

    pub fn scores(&self, x: &SparseVector) -> Vec<f64> {
        self.classifiers.iter().map(|m| m.decision(x)).collect()
    }

    pub fn predict(&self, x: &SparseVector) -> SvmPrediction {
        let scores = self.scores(x);
        let labels = scores
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > 0.0)
            .map(|(c, _)| c as ClassId)
            .collect();
        SvmPrediction { scores, labels }
    }

    /// Writes `svm.csv` in long format: `class_id,feature,weight`, where the
    /// bias row uses the feature name `bias` and zero weights are omitted.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let path = dir.as_ref().join("svm.csv");
        let mut out = String::new();
        let _ = writeln!(out, "# ovr-svm v1 C={} dim={} classes={}", self.c, self.dim, self.n_classes());
        out.push_str("class_id,feature,weight\n");
        for (class, m) in self.classifiers.iter().enumerate() {
            let _ = writeln!(out, "{class},bias,{}", m.bias);
            for (j, &w) in m.weights.iter().enumerate() {
                if w != 0.0 {
                    let _ = writeln!(out, "{class},{j},{w}");
                }
            }
        }
        std::fs::write(&path, out).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let path = dir.as_ref().join("svm.csv");
        let body = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let bad = |message: String| Error::Artifact {
            path: path.clone(),
            message,
        };
        let mut lines = body.lines();
        let header = lines.next().unwrap_or_default();
        let fields: Vec<&str> = header
            .strip_prefix("# ovr-svm v1 ")
            .ok_or_else(|| bad(format!("bad header {header:?}")))?
            .split_whitespace()
            .collect();
        let field = |key: &str| -> Result<&str> {
            fields
                .iter()
                .find_map(|f| f.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
                .ok_or_else(|| bad(format!("header lacks {key}")))
        };
        let c: f64 = field("C")?.parse().map_err(|_| bad("bad C".into()))?;
        let dim: usize = field("dim")?.parse().map_err(|_| bad("bad dim".into()))?;
        let n_classes: usize = field("classes")?
            .parse()
            .map_err(|_| bad("bad classes".into()))?;
        if lines.next() != Some("class_id,feature,weight") {
            return Err(bad("missing column header".into()));
        }
        let mut classifiers = vec![
            LinearSvm {
                weights: vec![0.0; dim],
                bias: 0.0,
            };
            n_classes
        ];
        for (k, line) in lines.enumerate() {
            let parts: Vec<&str> = line.split(',').collect();
            let [class, feature, weight] = parts[..] else {
                return Err(bad(format!("row {k}: expected three columns")));
            };
            let class: usize = class.parse().map_err(|_| bad(format!("row {k}: bad class")))?;
            let weight: f64 = weight.parse().map_err(|_| bad(format!("row {k}: bad weight")))?;
            let m = classifiers
                .get_mut(class)
                .ok_or_else(|| bad(format!("row {k}: class {class} out of range")))?;
            if feature == "bias" {
                m.bias = weight;
            } else {
                let j: usize = feature.parse().map_err(|_| bad(format!("row {k}: bad feature")))?;
                *m.weights
                    .get_mut(j)
                    .ok_or_else(|| bad(format!("row {k}: feature {j} >= dim")))? = weight;
            }
        }
        Ok(OvrSvmEnsemble { c, dim, classifiers })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn dense(points: &[[f64; 2]]) -> Vec<SparseVector> {
        points.iter().map(|p| SparseVector::from_dense(p)).collect()
    }

    #[test]
    fn two_point_analytic_optimum() {
        let xs = dense(&[[1.0, 0.0], [-1.0, 0.0]]);
        let labels = [1.0, -1.0];
        let m = train_binary(&xs, &labels, 2, &SvmParams::new(1.0));
        assert!((m.weights[0] - 1.0).abs() < 1e-4, "{m:?}");
        assert!(m.weights[1].abs() < 1e-4);
        assert!(m.bias.abs() < 1e-4);
        assert!((m.primal_objective(&xs, &labels, 1.0) - 0.5).abs() < 1e-4);
    }

    #[test]
    fn duplicated_points_keep_sign_pattern() {
        let pts = [[2.0, 1.0], [1.5, 2.0], [1.0, 1.0], [-1.0, -1.5], [-2.0, -0.5], [-1.0, -2.0]];
        let xs = dense(&pts);
        let ys: Vec<LabelSet> = (0..6)
            .map(|i| if i < 3 { BTreeSet::from([0]) } else { BTreeSet::new() })
            .collect();
        let once = train_ovr_svm(&xs, &ys, 1, 2, &SvmParams::new(1.0)).unwrap();
        let xs2: Vec<_> = xs.iter().chain(&xs).cloned().collect();
        let ys2: Vec<_> = ys.iter().chain(&ys).cloned().collect();
        let twice = train_ovr_svm(&xs2, &ys2, 1, 2, &SvmParams::new(1.0)).unwrap();
        for x in &xs {
            assert_eq!(once.predict(x).labels, twice.predict(x).labels);
        }
    }

    #[test]
    fn one_class_data_gives_constant_classifier() {
        let xs = dense(&[[1.0, 0.0], [0.0, 1.0]]);
        let ys = vec![BTreeSet::from([1]), BTreeSet::from([1])];
        let m = train_ovr_svm(&xs, &ys, 3, 2, &SvmParams::new(1.0)).unwrap();
        assert_eq!(m.classifiers[0].bias, -1.0);
        assert_eq!(m.classifiers[1].bias, 1.0);
        let p = m.predict(&SparseVector::default());
        assert_eq!(p.labels, BTreeSet::from([1]));
        assert_eq!(p.scores.len(), 3);
    }

    #[test]
    fn zero_vector_predicts_positive_biases() {
        let m = OvrSvmEnsemble {
            c: 1.0,
            dim: 1,
            classifiers: vec![
                LinearSvm { weights: vec![1.0], bias: 0.5 },
                LinearSvm { weights: vec![1.0], bias: -0.5 },
                LinearSvm { weights: vec![1.0], bias: 0.0 },
            ],
        };
        let p = m.predict(&SparseVector::default());
        assert_eq!(p.labels, BTreeSet::from([0]));
        assert_eq!(p.scores, vec![0.5, -0.5, 0.0]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let xs = dense(&[[1.0, 0.0], [0.0, 1.0]]);
        let ys = vec![BTreeSet::from([0]), BTreeSet::new()];
        assert!(train_ovr_svm(&xs, &ys, 1, 2, &SvmParams::new(0.05)).is_err());
        assert!(train_ovr_svm(&xs, &ys, 1, 2, &SvmParams::new(11.0)).is_err());
        assert!(train_ovr_svm(&xs[..1], &ys[..1], 1, 2, &SvmParams::new(1.0)).is_err());
        assert!(train_ovr_svm(&xs, &ys[..1], 1, 2, &SvmParams::new(1.0)).is_err());
        assert!(matches!(
            train_ovr_svm(&xs, &ys, 0, 2, &SvmParams::new(1.0)),
            Err(Error::UnknownClass(0))
        ));
    }

    #[test]
    fn artifact_round_trip() {
        let xs = dense(&[[1.0, 0.0], [-1.0, 0.5], [0.2, 0.3]]);
        let ys = vec![BTreeSet::from([0]), BTreeSet::from([1]), BTreeSet::from([0, 1])];
        let m = train_ovr_svm(&xs, &ys, 2, 2, &SvmParams::new(2.5)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        m.save(dir.path()).unwrap();
        assert_eq!(OvrSvmEnsemble::load(dir.path()).unwrap(), m);
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let xs = dense(&[[1.0, 0.2], [-1.0, 0.5], [0.2, 0.3], [0.4, -0.9]]);
        let labels = [1.0, -1.0, 1.0, -1.0];
        let p = SvmParams::new(3.0).with_seed(5);
        assert_eq!(train_binary(&xs, &labels, 2, &p), train_binary(&xs, &labels, 2, &p));
    }
}
