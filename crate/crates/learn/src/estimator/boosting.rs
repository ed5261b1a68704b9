//! Gradient-boosted trees: squared loss for real targets, softmax
//! cross-entropy with one tree per class and round for classes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linear::softmax;
use super::tree::{grow, Binned, Criterion, Growth, Tree};
use super::{finish, n_outputs, EstimatorSpec, Predictions};
use crate::error::{LearnError, Result};
use crate::matrix::Matrix;
use crate::task::Targets;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    classification: bool,
    width: usize,
    learning_rate: f64,
    init: Vec<f64>,
    /// `rounds × outputs` trees, round-major.
    trees: Vec<Tree>,
}

impl GradientBoosting {
    pub fn fit(spec: &EstimatorSpec, x: &Matrix, targets: Targets<'_>, seed: u64) -> Result<Self> {
        let rounds = spec.usize_or("n_rounds", 100)?;
        let lr = spec.f64_or("learning_rate", 0.1)?;
        let subsample = spec.f64_or("subsample", 1.0)?;
        if !(lr > 0.0) || !(subsample > 0.0 && subsample <= 1.0) {
            return Err(LearnError::Invalid(format!("{spec}: learning_rate > 0 and subsample in (0, 1] required")));
        }
        let growth = Growth {
            max_depth: spec.usize_or("max_depth", 3)?,
            min_leaf: spec.usize_or("min_samples_leaf", 1)?.max(1) as f64,
            max_features: super::forest::max_features(spec, x.cols(), true)?,
        };
        let binned = Binned::new(x, spec.usize_or("max_bins", 32)?)?;
        let n = x.rows();
        let k = n_outputs(targets);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let init: Vec<f64> = match targets {
            Targets::Classes { y, n_classes } => {
                let mut counts = vec![1.0; n_classes];
                y.iter().for_each(|&c| counts[c] += 1.0);
                counts.iter().map(|c| (c / (n + n_classes) as f64).ln()).collect()
            }
            Targets::Real(y) => vec![y.iter().sum::<f64>() / n as f64],
        };
        let mut f: Vec<f64> = (0..n).flat_map(|_| init.iter().copied()).collect();
        let mut trees = Vec::with_capacity(rounds * k);
        let mut residual = vec![0.0; n];
        let mut hess = vec![0.0; n];
        for _ in 0..rounds {
            let weights: Vec<f64> =
                (0..n).map(|_| if subsample >= 1.0 || rng.gen::<f64>() < subsample { 1.0 } else { 0.0 }).collect();
            let probs: Vec<f64> = match targets {
                Targets::Classes { .. } => f
                    .chunks_exact(k)
                    .flat_map(|z| {
                        let mut p = z.to_vec();
                        softmax(&mut p);
                        p
                    })
                    .collect(),
                Targets::Real(_) => Vec::new(),
            };
            let mut round = Vec::with_capacity(k);
            for c in 0..k {
                for i in 0..n {
                    match targets {
                        Targets::Classes { y, .. } => {
                            let p = probs[i * k + c];
                            residual[i] = f64::from(u8::from(y[i] == c)) - p;
                            hess[i] = p * (1.0 - p);
                        }
                        Targets::Real(y) => {
                            residual[i] = y[i] - f[i];
                            hess[i] = 1.0;
                        }
                    }
                }
                let newton = |idx: &[usize]| {
                    let (mut g, mut h) = (0.0, 0.0);
                    for &i in idx {
                        g += residual[i];
                        h += hess[i];
                    }
                    let scale = if k > 1 { (k - 1) as f64 / k as f64 } else { 1.0 };
                    vec![if h > 1e-12 { scale * g / h } else { 0.0 }]
                };
                let tree = grow(&binned, &Criterion::Variance { y: &residual }, &weights, &growth, &mut rng, &newton);
                for i in 0..n {
                    f[i * k + c] += lr * tree.leaf(x.row(i))[0];
                }
                round.push(tree);
            }
            trees.extend(round);
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(LearnError::Numerical(format!("{spec}: boosting diverged")));
        }
        Ok(Self { classification: matches!(targets, Targets::Classes { .. }), width: x.cols(), learning_rate: lr, init, trees })
    }

    pub fn input_width(&self) -> usize {
        self.width
    }

    pub fn predict(&self, x: &Matrix) -> Predictions {
        let k = self.init.len();
        let scores = x
            .iter_rows()
            .map(|row| {
                let mut z = self.init.clone();
                for (t, tree) in self.trees.iter().enumerate() {
                    z[t % k] += self.learning_rate * tree.leaf(row)[0];
                }
                z
            })
            .collect();
        finish(scores, self.classification)
    }
}
