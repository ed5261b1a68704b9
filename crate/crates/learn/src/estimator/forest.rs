//! Random forest: bootstrap-resampled trees with random feature subsets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{class_leaf, grow, mean_leaf, Binned, Criterion, Growth, Tree};
use super::{finish, EstimatorSpec, ParamValue, Predictions};
use crate::error::{LearnError, Result};
use crate::matrix::Matrix;
use crate::task::Targets;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    classification: bool,
    width: usize,
    trees: Vec<Tree>,
}

pub(super) fn max_features(spec: &EstimatorSpec, d: usize, default_all: bool) -> Result<usize> {
    let m = match spec.params.get("max_features") {
        None if default_all => d as f64,
        None => (d as f64).sqrt().round(),
        Some(ParamValue::Text(s)) if s == "sqrt" => (d as f64).sqrt().round(),
        Some(ParamValue::Text(s)) if s == "all" => d as f64,
        Some(ParamValue::Float(f)) if *f > 0.0 && *f <= 1.0 => (f * d as f64).round(),
        Some(v) => return Err(LearnError::Invalid(format!("{spec}: max_features {v} not sqrt, all or a fraction"))),
    };
    Ok((m as usize).clamp(1, d))
}

impl RandomForest {
    pub fn fit(spec: &EstimatorSpec, x: &Matrix, targets: Targets<'_>, seed: u64) -> Result<Self> {
        let n_trees = spec.usize_or("n_trees", 100)?.max(1);
        let growth = Growth {
            max_depth: spec.usize_or("max_depth", 12)?,
            min_leaf: spec.usize_or("min_samples_leaf", 1)?.max(1) as f64,
            max_features: max_features(spec, x.cols(), false)?,
        };
        let binned = Binned::new(x, spec.usize_or("max_bins", 32)?)?;
        let n = binned.rows();
        let trees = (0..n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                let mut weights = vec![0.0; n];
                for _ in 0..n {
                    weights[rng.gen_range(0..n)] += 1.0;
                }
                match targets {
                    Targets::Classes { y, n_classes } => grow(
                        &binned,
                        &Criterion::Gini { y, n_classes },
                        &weights,
                        &growth,
                        &mut rng,
                        &|idx| class_leaf(y, n_classes, &weights, idx),
                    ),
                    Targets::Real(y) => grow(&binned, &Criterion::Variance { y }, &weights, &growth, &mut rng, &|idx| {
                        mean_leaf(y, &weights, idx)
                    }),
                }
            })
            .collect();
        Ok(Self { classification: matches!(targets, Targets::Classes { .. }), width: x.cols(), trees })
    }

    pub fn input_width(&self) -> usize {
        self.width
    }

    pub fn predict(&self, x: &Matrix) -> Predictions {
        let scores = x
            .iter_rows()
            .map(|row| {
                let mut acc = self.trees[0].leaf(row).to_vec();
                for t in &self.trees[1..] {
                    for (a, v) in acc.iter_mut().zip(t.leaf(row)) {
                        *a += v;
                    }
                }
                acc.iter_mut().for_each(|a| *a /= self.trees.len() as f64);
                acc
            })
            .collect();
        finish(scores, self.classification)
    }
}
