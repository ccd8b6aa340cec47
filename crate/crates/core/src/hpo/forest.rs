//! Random-forest regression surrogate over encoded configurations.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Nodes with at most this many points become leaves.
    pub max_leaf_size: usize,
    /// Floor applied to the across-tree variance.
    pub variance_floor: f64,
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 50,
            max_leaf_size: 3,
            variance_floor: 1e-8,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Test {
    /// Go left when `x[feature] <= threshold`.
    Below(f64),
    /// Go left when the categorical code equals this value.
    Equals(f64),
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        test: Test,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    test,
                    left,
                    right,
                } => {
                    let goes_left = match test {
                        Test::Below(t) => x[feature] <= t,
                        Test::Equals(code) => x[feature] == code,
                    };
                    i = if goes_left { left } else { right };
                }
            }
        }
    }
}

struct Builder<'a> {
    xs: &'a [Vec<f64>],
    ys: &'a [f64],
    categorical: &'a [bool],
    max_leaf_size: usize,
    max_features: usize,
    nodes: Vec<Node>,
}

struct Candidate {
    feature: usize,
    test: Test,
    score: f64,
}

fn mean(ys: &[f64], idx: &[usize]) -> f64 {
    idx.iter().map(|&i| ys[i]).sum::<f64>() / idx.len() as f64
}

impl Builder<'_> {
    fn build(&mut self, idx: Vec<usize>, rng: &mut ChaCha8Rng) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(mean(self.ys, &idx)));
        if idx.len() <= self.max_leaf_size {
            return id;
        }
        let first = self.ys[idx[0]];
        if idx.iter().all(|&i| self.ys[i] == first) {
            return id;
        }
        let d = self.categorical.len();
        // Random feature subset first; fall back to the rest if none splits.
        let chosen = sample(rng, d, self.max_features.min(d)).into_vec();
        let mut best = self.best_split(&idx, &chosen);
        if best.is_none() && chosen.len() < d {
            let rest: Vec<usize> = (0..d).filter(|f| !chosen.contains(f)).collect();
            best = self.best_split(&idx, &rest);
        }
        let Some(best) = best else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| {
            let v = self.xs[i][best.feature];
            match best.test {
                Test::Below(t) => v <= t,
                Test::Equals(c) => v == c,
            }
        });
        let left = self.build(l, rng);
        let right = self.build(r, rng);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            test: best.test,
            left,
            right,
        };
        id
    }

    /// Split maximizing the reduction of squared error; `None` if no feature
    /// separates the points.
    fn best_split(&self, idx: &[usize], features: &[usize]) -> Option<Candidate> {
        let n = idx.len() as f64;
        let total: f64 = idx.iter().map(|&i| self.ys[i]).sum();
        let mut best: Option<Candidate> = None;
        let mut consider = |c: Candidate| {
            if c.score > 1e-12 && best.as_ref().is_none_or(|b| c.score > b.score) {
                best = Some(c);
            }
        };
        for &f in features {
            let mut pts: Vec<(f64, f64)> = idx.iter().map(|&i| (self.xs[i][f], self.ys[i])).collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            if self.categorical[f] {
                // One-vs-rest equality split per distinct code.
                let mut k = 0;
                while k < pts.len() {
                    let code = pts[k].0;
                    let mut sum = 0.0;
                    let mut cnt = 0.0;
                    while k < pts.len() && pts[k].0 == code {
                        sum += pts[k].1;
                        cnt += 1.0;
                        k += 1;
                    }
                    if cnt < n {
                        let rest = total - sum;
                        let gain = sum * sum / cnt + rest * rest / (n - cnt) - total * total / n;
                        consider(Candidate {
                            feature: f,
                            test: Test::Equals(code),
                            score: gain,
                        });
                    }
                }
            } else {
                let mut left_sum = 0.0;
                for k in 0..pts.len() - 1 {
                    left_sum += pts[k].1;
                    if pts[k].0 == pts[k + 1].0 {
                        continue;
                    }
                    let nl = (k + 1) as f64;
                    let right_sum = total - left_sum;
                    let gain = left_sum * left_sum / nl + right_sum * right_sum / (n - nl)
                        - total * total / n;
                    consider(Candidate {
                        feature: f,
                        test: Test::Below(0.5 * (pts[k].0 + pts[k + 1].0)),
                        score: gain,
                    });
                }
            }
        }
        best
    }
}

/// An ensemble of regression trees; predictive spread is the variance across trees.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestSurrogate {
    trees: Vec<Tree>,
    variance_floor: f64,
    dim: usize,
}

impl ForestSurrogate {
    /// Fits on encoded points `xs` with targets `ys`. Each tree sees a
    /// bootstrap resample and considers `⌈√d⌉` random features per split.
    pub fn fit(
        xs: &[Vec<f64>],
        ys: &[f64],
        categorical: &[bool],
        config: &ForestConfig,
        seed: u64,
    ) -> Result<Self> {
        if xs.len() < 2 {
            return Err(Error::Surrogate(format!(
                "need at least 2 observations, got {}",
                xs.len()
            )));
        }
        if xs.len() != ys.len() {
            return Err(Error::Surrogate("inputs and targets differ in length".into()));
        }
        let dim = categorical.len();
        if xs.iter().any(|x| x.len() != dim) {
            return Err(Error::Surrogate("inconsistent input dimension".into()));
        }
        if ys.iter().any(|y| !y.is_finite()) {
            return Err(Error::Surrogate("targets must be finite".into()));
        }
        let max_features = ((dim as f64).sqrt().ceil() as usize).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = xs.len();
        let trees = (0..config.n_trees)
            .map(|_| {
                let idx: Vec<usize> = if config.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                let mut b = Builder {
                    xs,
                    ys,
                    categorical,
                    max_leaf_size: config.max_leaf_size.max(1),
                    max_features,
                    nodes: Vec::new(),
                };
                b.build(idx, &mut rng);
                Tree { nodes: b.nodes }
            })
            .collect();
        Ok(ForestSurrogate {
            trees,
            variance_floor: config.variance_floor,
            dim,
        })
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// `(mean, std)` where `std = sqrt(max(variance across trees, floor))`.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        debug_assert_eq!(x.len(), self.dim);
        let preds: Vec<f64> = self.trees.iter().map(|t| t.predict(x)).collect();
        let n = preds.len() as f64;
        let mean = preds.iter().sum::<f64>() / n;
        let var = preds.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n;
        (mean, var.max(self.variance_floor).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let xs: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / (n - 1) as f64]).collect();
        let ys = xs.iter().map(|x| x[0]).collect();
        (xs, ys)
    }

    #[test]
    fn constant_targets_give_floor_std() {
        let (xs, _) = line(12);
        let ys = vec![0.42; 12];
        let f = ForestSurrogate::fit(&xs, &ys, &[false], &ForestConfig::default(), 3).unwrap();
        for probe in [0.0, 0.3, 1.0] {
            let (m, s) = f.predict(&[probe]);
            assert!((m - 0.42).abs() < 1e-12);
            assert!((s - 1e-4).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_on_identity_data() {
        let (xs, ys) = line(20);
        let f = ForestSurrogate::fit(&xs, &ys, &[false], &ForestConfig::default(), 11).unwrap();
        let means: Vec<f64> = (0..=100).map(|i| f.predict(&[i as f64 / 100.0]).0).collect();
        assert!(means.windows(2).all(|w| w[0] <= w[1] + 1e-12), "{means:?}");
        // Close to the observed value at training points.
        for (x, y) in xs.iter().zip(&ys) {
            assert!((f.predict(x).0 - y).abs() < 0.15);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let (xs, ys) = line(15);
        let c = ForestConfig::default();
        let a = ForestSurrogate::fit(&xs, &ys, &[false], &c, 5).unwrap();
        let b = ForestSurrogate::fit(&xs, &ys, &[false], &c, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn categorical_equality_split() {
        let xs: Vec<Vec<f64>> = (0..12).map(|i| vec![(i % 3) as f64]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| if x[0] == 1.0 { 1.0 } else { 0.0 }).collect();
        let c = ForestConfig {
            bootstrap: false,
            ..Default::default()
        };
        let f = ForestSurrogate::fit(&xs, &ys, &[true], &c, 0).unwrap();
        assert_eq!(f.predict(&[1.0]).0, 1.0);
        assert_eq!(f.predict(&[0.0]).0, 0.0);
        assert_eq!(f.predict(&[2.0]).0, 0.0);
    }

    #[test]
    fn too_few_points() {
        assert!(ForestSurrogate::fit(&[vec![0.0]], &[1.0], &[false], &ForestConfig::default(), 0).is_err());
    }
}
