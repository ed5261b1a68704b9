//! k-nearest neighbours in Euclidean distance.

use serde::{Deserialize, Serialize};

use super::{EstimatorSpec, Predictions};
use crate::error::{LearnError, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::task::Targets;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Weighting {
    Uniform,
    Distance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KNearest {
    k: usize,
    weighting: Weighting,
    x: Matrix,
    /// Class index per row, or `None` for regression.
    classes: Option<(Vec<usize>, usize)>,
    values: Vec<f64>,
}

impl KNearest {
    pub fn fit(spec: &EstimatorSpec, x: &Matrix, targets: Targets<'_>) -> Result<Self> {
        let k = spec.usize_or("k", 5)?;
        if k == 0 {
            return Err(LearnError::Invalid(format!("{spec}: k must be at least 1")));
        }
        let weighting = match spec.text_or("weights", "uniform")? {
            "uniform" => Weighting::Uniform,
            "distance" => Weighting::Distance,
            other => return Err(LearnError::Invalid(format!("{spec}: unknown weighting {other:?}"))),
        };
        let (classes, values) = match targets {
            Targets::Classes { y, n_classes } => (Some((y.to_vec(), n_classes)), Vec::new()),
            Targets::Real(y) => (None, y.to_vec()),
        };
        Ok(Self { k: k.min(x.rows()), weighting, x: x.clone(), classes, values })
    }

    pub fn input_width(&self) -> usize {
        self.x.cols()
    }

    /// `(distance², row)` of the k nearest rows, nearest first, lower row on
    /// ties.
    fn neighbours(&self, row: &[f64]) -> Vec<(f64, usize)> {
        let mut all: Vec<(f64, usize)> = self.x.iter_rows().map(|r| squared_distance(r, row)).zip(0..).collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < all.len() {
            all.select_nth_unstable_by(self.k - 1, cmp);
            all.truncate(self.k);
        }
        all.sort_by(cmp);
        all
    }

    fn weight(&self, d2: f64) -> f64 {
        match self.weighting {
            Weighting::Uniform => 1.0,
            Weighting::Distance => 1.0 / (d2.sqrt() + 1e-12),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Predictions {
        match &self.classes {
            Some((y, n_classes)) => Predictions::Classes(
                x.iter_rows()
                    .map(|row| {
                        let mut votes = vec![0.0; *n_classes];
                        for (d2, i) in self.neighbours(row) {
                            votes[y[i]] += self.weight(d2);
                        }
                        crate::matrix::argmax(&votes)
                    })
                    .collect(),
            ),
            None => Predictions::Values(
                x.iter_rows()
                    .map(|row| {
                        let (mut num, mut den) = (0.0, 0.0);
                        for (d2, i) in self.neighbours(row) {
                            let w = self.weight(d2);
                            num += w * self.values[i];
                            den += w;
                        }
                        num / den
                    })
                    .collect(),
            ),
        }
    }
}
