//! Softmax regression (ridge regression for real targets), fitted by
//! full-batch Adam on the L2-penalized mean loss.

use serde::{Deserialize, Serialize};

use super::{finish, n_outputs, EstimatorSpec, Predictions};
use crate::error::{LearnError, Result};
use crate::matrix::{dot, Matrix};
use crate::task::Targets;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    classification: bool,
    width: usize,
    /// One row of `width` weights plus a bias per output.
    weights: Vec<f64>,
}

pub(crate) struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    pub(crate) fn new(n: usize, lr: f64) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0, lr }
    }

    pub(crate) fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t);
        let c2 = 1.0 - B2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = B1 * *m + (1.0 - B1) * g;
            *v = B2 * *v + (1.0 - B2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + 1e-8);
        }
    }
}

/// In-place softmax.
pub(crate) fn softmax(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    z.iter_mut().for_each(|v| *v /= total);
}

impl LinearModel {
    pub fn fit(spec: &EstimatorSpec, x: &Matrix, targets: Targets<'_>) -> Result<Self> {
        let l2 = spec.f64_or("l2", 1e-3)?;
        let iterations = spec.usize_or("iterations", 300)?;
        let lr = spec.f64_or("learning_rate", 0.05)?;
        if l2 < 0.0 || lr <= 0.0 {
            return Err(LearnError::Invalid(format!("{spec}: l2 and learning_rate must be positive")));
        }
        let (n, d) = (x.rows(), x.cols());
        let k = n_outputs(targets);
        let stride = d + 1;
        let mut model = Self { classification: matches!(targets, Targets::Classes { .. }), width: d, weights: vec![0.0; k * stride] };
        // start from the best constant predictor
        match targets {
            Targets::Classes { y, n_classes } => {
                let mut counts = vec![1.0; n_classes];
                y.iter().for_each(|&c| counts[c] += 1.0);
                for c in 0..n_classes {
                    model.weights[c * stride + d] = (counts[c] / (n + n_classes) as f64).ln();
                }
            }
            Targets::Real(y) => model.weights[d] = y.iter().sum::<f64>() / n as f64,
        }
        let mut adam = Adam::new(model.weights.len(), lr);
        let mut grad = vec![0.0; model.weights.len()];
        let mut out = vec![0.0; k];
        for _ in 0..iterations {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for i in 0..n {
                let row = x.row(i);
                model.scores_into(row, &mut out);
                match targets {
                    Targets::Classes { y, .. } => {
                        softmax(&mut out);
                        out[y[i]] -= 1.0;
                    }
                    Targets::Real(y) => out[0] -= y[i],
                }
                for (c, &r) in out.iter().enumerate() {
                    let g = &mut grad[c * stride..(c + 1) * stride];
                    for (gj, xj) in g[..d].iter_mut().zip(row) {
                        *gj += r * xj;
                    }
                    g[d] += r;
                }
            }
            let inv = 1.0 / n as f64;
            for (j, (g, w)) in grad.iter_mut().zip(&model.weights).enumerate() {
                *g *= inv;
                if j % stride != d {
                    *g += l2 * w;
                }
            }
            adam.step(&mut model.weights, &grad);
        }
        if model.weights.iter().any(|w| !w.is_finite()) {
            return Err(LearnError::Numerical(format!("{spec}: weights diverged")));
        }
        Ok(model)
    }

    fn scores_into(&self, row: &[f64], out: &mut [f64]) {
        let stride = self.width + 1;
        for (c, o) in out.iter_mut().enumerate() {
            let w = &self.weights[c * stride..(c + 1) * stride];
            *o = dot(&w[..self.width], row) + w[self.width];
        }
    }

    pub fn input_width(&self) -> usize {
        self.width
    }

    pub fn predict(&self, x: &Matrix) -> Predictions {
        let k = self.weights.len() / (self.width + 1);
        let scores = x
            .iter_rows()
            .map(|row| {
                let mut out = vec![0.0; k];
                self.scores_into(row, &mut out);
                out
            })
            .collect();
        finish(scores, self.classification)
    }
}
