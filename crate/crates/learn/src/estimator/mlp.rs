//! Multi-layer perceptron with one or two hidden layers, trained by
//! minibatch Adam with backpropagated gradients.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::linear::{softmax, Adam};
use super::{finish, n_outputs, EstimatorSpec, Predictions};
use crate::error::{LearnError, Result};
use crate::matrix::Matrix;
use crate::task::Targets;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative in terms of the activation output `a`.
    fn derivative(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => f64::from(u8::from(a > 0.0)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    classification: bool,
    /// Layer widths from input to output.
    sizes: Vec<usize>,
    activation: Activation,
    /// Per layer: `out × in` weights row-major, then `out` biases.
    params: Vec<f64>,
}

impl Mlp {
    /// Xavier-initialized network.
    pub fn new(sizes: Vec<usize>, activation: Activation, classification: bool, seed: u64) -> Result<Self> {
        if sizes.len() < 2 || sizes.iter().any(|&s| s == 0) {
            return Err(LearnError::Invalid(format!("layer sizes {sizes:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::new();
        for w in sizes.windows(2) {
            let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
            params.extend((0..w[0] * w[1]).map(|_| rng.gen_range(-limit..limit)));
            params.extend(std::iter::repeat(0.0).take(w[1]));
        }
        Ok(Self { classification, sizes, activation, params })
    }

    pub fn fit(spec: &EstimatorSpec, x: &Matrix, targets: Targets<'_>, seed: u64) -> Result<Self> {
        let h1 = spec.usize_or("hidden", 32)?;
        let h2 = spec.usize_or("hidden2", 0)?;
        let activation = match spec.text_or("activation", "tanh")? {
            "tanh" => Activation::Tanh,
            "relu" => Activation::Relu,
            other => return Err(LearnError::Invalid(format!("{spec}: unknown activation {other:?}"))),
        };
        let l2 = spec.f64_or("l2", 1e-4)?;
        let lr = spec.f64_or("learning_rate", 1e-3)?;
        let epochs = spec.usize_or("epochs", 100)?;
        let batch = spec.usize_or("batch_size", 32)?.max(1);
        if h1 == 0 || !(lr > 0.0) || l2 < 0.0 {
            return Err(LearnError::Invalid(format!("{spec}: hidden ≥ 1, learning_rate > 0, l2 ≥ 0 required")));
        }
        let mut sizes = vec![x.cols(), h1];
        if h2 > 0 {
            sizes.push(h2);
        }
        sizes.push(n_outputs(targets));
        let mut net = Self::new(sizes, activation, matches!(targets, Targets::Classes { .. }), seed)?;
        // Zero output weights and a prior bias: training starts from the best
        // constant predictor, which is a fixed point when the target is constant.
        let (fan_in, fan_out) = (net.sizes[net.sizes.len() - 2], net.sizes[net.sizes.len() - 1]);
        let out_start = net.params.len() - fan_out * (fan_in + 1);
        let bias_start = net.params.len() - fan_out;
        net.params[out_start..bias_start].iter_mut().for_each(|w| *w = 0.0);
        match targets {
            Targets::Real(y) => net.params[bias_start] = y.iter().sum::<f64>() / y.len() as f64,
            Targets::Classes { y, n_classes } => {
                let mut counts = vec![0usize; n_classes];
                y.iter().for_each(|&c| counts[c] += 1);
                for (b, &c) in net.params[bias_start..].iter_mut().zip(&counts) {
                    *b = ((c as f64 + 1.0) / (y.len() + n_classes) as f64).ln();
                }
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let mut order: Vec<usize> = (0..x.rows()).collect();
        let mut adam = Adam::new(net.params.len(), lr);
        let mut grad = vec![0.0; net.params.len()];
        for _ in 0..epochs {
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch) {
                grad.iter_mut().for_each(|g| *g = 0.0);
                for &i in chunk {
                    net.accumulate(x.row(i), target_of(targets, i), &mut grad);
                }
                net.finish_gradient(&mut grad, chunk.len(), l2);
                adam.step(&mut net.params, &grad);
            }
        }
        if net.params.iter().any(|p| !p.is_finite()) {
            return Err(LearnError::Numerical(format!("{spec}: training diverged")));
        }
        Ok(net)
    }

    pub fn input_width(&self) -> usize {
        self.sizes[0]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Mean loss plus `l2/2·‖W‖²` over the weights (not biases), and its
    /// gradient.
    pub fn loss_and_gradient(&self, x: &Matrix, targets: Targets<'_>, l2: f64) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        for i in 0..x.rows() {
            loss += self.accumulate(x.row(i), target_of(targets, i), &mut grad);
        }
        let n = x.rows();
        loss /= n as f64;
        let mut offset = 0;
        for w in self.sizes.windows(2) {
            loss += 0.5 * l2 * self.params[offset..offset + w[0] * w[1]].iter().map(|p| p * p).sum::<f64>();
            offset += w[0] * w[1] + w[1];
        }
        self.finish_gradient(&mut grad, n, l2);
        (loss, grad)
    }

    fn finish_gradient(&self, grad: &mut [f64], n: usize, l2: f64) {
        let inv = 1.0 / n as f64;
        grad.iter_mut().for_each(|g| *g *= inv);
        let mut offset = 0;
        for w in self.sizes.windows(2) {
            for j in offset..offset + w[0] * w[1] {
                grad[j] += l2 * self.params[j];
            }
            offset += w[0] * w[1] + w[1];
        }
    }

    /// Layer activations, input first; the last entry holds the raw outputs.
    fn forward(&self, row: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![row.to_vec()];
        let mut offset = 0;
        let layers = self.sizes.len() - 1;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let weights = &self.params[offset..offset + fan_in * fan_out];
            let bias = &self.params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            let input = &acts[l];
            let out: Vec<f64> = (0..fan_out)
                .map(|o| {
                    let z = crate::matrix::dot(&weights[o * fan_in..(o + 1) * fan_in], input) + bias[o];
                    if l + 1 < layers {
                        self.activation.apply(z)
                    } else {
                        z
                    }
                })
                .collect();
            acts.push(out);
            offset += fan_in * fan_out + fan_out;
        }
        acts
    }

    /// Adds the unaveraged gradient of one sample's loss; returns the loss.
    fn accumulate(&self, row: &[f64], target: Target, grad: &mut [f64]) -> f64 {
        let acts = self.forward(row);
        let mut delta = acts.last().expect("output layer").clone();
        let loss = match target {
            Target::Class(c) => {
                softmax(&mut delta);
                let loss = -delta[c].max(1e-300).ln();
                delta[c] -= 1.0;
                loss
            }
            Target::Value(y) => {
                let r = delta[0] - y;
                delta[0] = r;
                0.5 * r * r
            }
        };
        let mut offsets = Vec::with_capacity(self.sizes.len() - 1);
        let mut offset = 0;
        for w in self.sizes.windows(2) {
            offsets.push(offset);
            offset += w[0] * w[1] + w[1];
        }
        for l in (0..self.sizes.len() - 1).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let off = offsets[l];
            let input = &acts[l];
            for o in 0..fan_out {
                let d = delta[o];
                if d != 0.0 {
                    for (g, a) in grad[off + o * fan_in..off + (o + 1) * fan_in].iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
                grad[off + fan_in * fan_out + o] += d;
            }
            if l > 0 {
                let weights = &self.params[off..off + fan_in * fan_out];
                delta = (0..fan_in)
                    .map(|j| {
                        let back: f64 = (0..fan_out).map(|o| weights[o * fan_in + j] * delta[o]).sum();
                        back * self.activation.derivative(input[j])
                    })
                    .collect();
            }
        }
        loss
    }

    pub fn predict(&self, x: &Matrix) -> Predictions {
        finish(x.iter_rows().map(|r| self.forward(r).pop().expect("output layer")).collect(), self.classification)
    }
}

#[derive(Clone, Copy)]
enum Target {
    Class(usize),
    Value(f64),
}

fn target_of(t: Targets<'_>, i: usize) -> Target {
    match t {
        Targets::Classes { y, .. } => Target::Class(y[i]),
        Targets::Real(y) => Target::Value(y[i]),
    }
}
