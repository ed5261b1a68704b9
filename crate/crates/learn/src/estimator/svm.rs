//! Support vector machines with a Gaussian (RBF) kernel: one-vs-rest C-SVC
//! for classes, ε-SVR for real targets. The duals are solved by SMO with
//! second-order working-set selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EstimatorSpec, Predictions};
use crate::error::{LearnError, Result};
use crate::matrix::{squared_distance, Matrix};
use crate::task::Targets;

/// KKT violation at which SMO stops.
const TOLERANCE: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportVectorMachine {
    classification: bool,
    n_classes: usize,
    width: usize,
    gamma: f64,
    support: Matrix,
    /// Per machine: one dual coefficient per support row, then the bias.
    machines: Vec<Vec<f64>>,
}

/// Dual problem min ½αᵀQα + pᵀα subject to yᵀα = 0, 0 ≤ α ≤ c, with
/// Q_ij = y_i y_j K(i mod n, j mod n) for an n×n kernel matrix.
pub(crate) struct Dual<'a> {
    pub kernel: &'a [f64],
    pub n: usize,
    pub y: Vec<f64>,
    pub p: Vec<f64>,
    pub c: f64,
}

/// Optimal α and the offset ρ of the decision function Σ y_i α_i K − ρ.
pub(crate) struct DualSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
}

impl Dual<'_> {
    fn q(&self, i: usize, j: usize) -> f64 {
        self.y[i] * self.y[j] * self.kernel[(i % self.n) * self.n + j % self.n]
    }

    fn up(&self, a: f64, y: f64) -> bool {
        if y > 0.0 { a < self.c } else { a > 0.0 }
    }

    fn low(&self, a: f64, y: f64) -> bool {
        if y > 0.0 { a > 0.0 } else { a < self.c }
    }

    pub(crate) fn solve(&self, tol: f64) -> DualSolution {
        let l = self.y.len();
        let c = self.c;
        let mut alpha = vec![0.0; l];
        let mut grad = self.p.clone();
        let diag: Vec<f64> = (0..l).map(|i| self.q(i, i)).collect();
        let max_iter = (100 * l).max(10_000_000);
        for _ in 0..max_iter {
            let mut g_max = f64::NEG_INFINITY;
            let mut i = usize::MAX;
            for t in 0..l {
                if self.up(alpha[t], self.y[t]) && -self.y[t] * grad[t] >= g_max {
                    g_max = -self.y[t] * grad[t];
                    i = t;
                }
            }
            if i == usize::MAX {
                break;
            }
            let mut g_min = f64::INFINITY;
            let mut j = usize::MAX;
            let mut best = f64::INFINITY;
            for t in 0..l {
                if !self.low(alpha[t], self.y[t]) {
                    continue;
                }
                let v = -self.y[t] * grad[t];
                g_min = g_min.min(v);
                let b = g_max - v;
                if b > 0.0 {
                    let a = diag[i] + diag[t] - 2.0 * self.y[i] * self.y[t] * self.q(i, t);
                    let gain = -b * b / if a > 0.0 { a } else { 1e-12 };
                    if gain <= best {
                        best = gain;
                        j = t;
                    }
                }
            }
            if g_max - g_min < tol || j == usize::MAX {
                break;
            }

            let (old_i, old_j) = (alpha[i], alpha[j]);
            let qij = self.q(i, j);
            if self.y[i] != self.y[j] {
                let quad = (diag[i] + diag[j] + 2.0 * qij).max(1e-12);
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > 0.0 {
                    if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                        alpha[i] = diff;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if diff > 0.0 {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let quad = (diag[i] + diag[j] - 2.0 * qij).max(1e-12);
                let delta = (grad[i] - grad[j]) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
            let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
            for (t, g) in grad.iter_mut().enumerate() {
                *g += self.q(i, t) * di + self.q(j, t) * dj;
            }
        }

        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free, mut sum_free) = (0usize, 0.0);
        for t in 0..l {
            let yg = self.y[t] * grad[t];
            let at_upper = alpha[t] >= c;
            let at_lower = alpha[t] <= 0.0;
            if at_upper || at_lower {
                // the bound restricts ρ from one side only
                if (at_upper && self.y[t] < 0.0) || (at_lower && self.y[t] > 0.0) {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                sum_free += yg;
            }
        }
        let rho = if free > 0 { sum_free / free as f64 } else { 0.5 * (ub + lb) };
        DualSolution { alpha, rho }
    }
}

pub(crate) fn rbf_kernel(x: &Matrix, gamma: f64) -> Vec<f64> {
    let n = x.rows();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| (-gamma * squared_distance(x.row(i), x.row(j))).exp()).collect())
        .collect();
    rows.concat()
}

impl SupportVectorMachine {
    pub fn fit(spec: &EstimatorSpec, x: &Matrix, targets: Targets<'_>) -> Result<Self> {
        let c = spec.f64_or("c", 1.0)?;
        let gamma_scale = spec.f64_or("gamma", 1.0)?;
        let epsilon = spec.f64_or("epsilon", 0.01)?;
        if c <= 0.0 || gamma_scale <= 0.0 || epsilon < 0.0 {
            return Err(LearnError::Invalid(format!("{spec}: c and gamma must be positive, epsilon nonnegative")));
        }
        let n = x.rows();
        let width = x.cols();
        // gamma is relative to 1 / (width · variance of all entries)
        let count = (n * width) as f64;
        let mean = x.as_slice().iter().sum::<f64>() / count;
        let var = x.as_slice().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
        let gamma = gamma_scale / (width as f64 * if var > 0.0 { var } else { 1.0 });
        let kernel = rbf_kernel(x, gamma);

        let (classification, n_classes, coefs) = match targets {
            Targets::Classes { y, n_classes } => {
                // two classes need one machine; its score is negated for class 0
                let positives: Vec<usize> = if n_classes == 2 { vec![1] } else { (0..n_classes).collect() };
                let coefs = positives
                    .into_iter()
                    .map(|k| {
                        let y: Vec<f64> = y.iter().map(|&v| if v == k { 1.0 } else { -1.0 }).collect();
                        let s = Dual { kernel: &kernel, n, y: y.clone(), p: vec![-1.0; n], c }.solve(TOLERANCE);
                        let mut coef: Vec<f64> = s.alpha.iter().zip(&y).map(|(a, y)| a * y).collect();
                        coef.push(-s.rho);
                        coef
                    })
                    .collect();
                (true, n_classes, coefs)
            }
            Targets::Real(z) => {
                let mut y = vec![1.0; n];
                y.extend(vec![-1.0; n]);
                let mut p: Vec<f64> = z.iter().map(|z| epsilon - z).collect();
                p.extend(z.iter().map(|z| epsilon + z));
                let s = Dual { kernel: &kernel, n, y, p, c }.solve(TOLERANCE);
                let mut coef: Vec<f64> = (0..n).map(|i| s.alpha[i] - s.alpha[i + n]).collect();
                coef.push(-s.rho);
                (false, 1, vec![coef])
            }
        };

        // keep rows with a nonzero coefficient in any machine
        let keep: Vec<usize> = (0..n).filter(|&i| coefs.iter().any(|m| m[i] != 0.0)).collect();
        let machines = coefs
            .iter()
            .map(|m| keep.iter().map(|&i| m[i]).chain(std::iter::once(m[n])).collect())
            .collect();
        Ok(Self { classification, n_classes, width, gamma, support: x.select(&keep), machines })
    }

    pub fn input_width(&self) -> usize {
        self.width
    }

    pub fn support_len(&self) -> usize {
        self.support.rows()
    }

    /// Decision values, one per machine.
    pub fn decision(&self, row: &[f64]) -> Vec<f64> {
        let k: Vec<f64> =
            self.support.iter_rows().map(|s| (-self.gamma * squared_distance(s, row)).exp()).collect();
        self.machines
            .iter()
            .map(|m| {
                let (coef, bias) = m.split_at(k.len());
                coef.iter().zip(&k).map(|(a, k)| a * k).sum::<f64>() + bias[0]
            })
            .collect()
    }

    pub fn predict(&self, x: &Matrix) -> Predictions {
        let scores: Vec<Vec<f64>> = x.iter_rows().map(|r| self.decision(r)).collect();
        if !self.classification {
            return Predictions::Values(scores.into_iter().map(|s| s[0]).collect());
        }
        Predictions::Classes(
            scores
                .iter()
                .map(|s| if self.n_classes == 2 { usize::from(s[0] > 0.0) } else { crate::matrix::argmax(s) })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::EstimatorKind;

    fn xor() -> (Matrix, Vec<usize>) {
        let mut data = Vec::new();
        let mut y = Vec::new();
        for i in 0..40 {
            let (a, b) = ((i % 2) as f64, ((i / 2) % 2) as f64);
            let jitter = 0.05 * ((i * 7 % 11) as f64 / 11.0 - 0.5);
            data.extend([2.0 * a - 1.0 + jitter, 2.0 * b - 1.0 - jitter]);
            y.push(usize::from(a != b));
        }
        (Matrix::from_vec(40, 2, data).unwrap(), y)
    }

    #[test]
    fn separates_xor() {
        let (x, y) = xor();
        let spec = EstimatorSpec::new(EstimatorKind::SupportVectorMachine);
        let m = SupportVectorMachine::fit(&spec, &x, Targets::Classes { y: &y, n_classes: 2 }).unwrap();
        assert_eq!(m.predict(&x), Predictions::Classes(y));
    }

    #[test]
    fn dual_solution_is_feasible() {
        let (x, y) = xor();
        let kernel = rbf_kernel(&x, 0.7);
        let y: Vec<f64> = y.iter().map(|&v| if v == 1 { 1.0 } else { -1.0 }).collect();
        let s = Dual { kernel: &kernel, n: 40, y: y.clone(), p: vec![-1.0; 40], c: 2.0 }.solve(1e-8);
        assert!(s.alpha.iter().all(|&a| (0.0..=2.0).contains(&a)));
        assert!(s.alpha.iter().zip(&y).map(|(a, y)| a * y).sum::<f64>().abs() <= 1e-12);
    }

    // Reference decision values from an independent SMO implementation
    // (libsvm, tolerance 1e-10) on the same 6-point problems.
    const POINTS: [[f64; 2]; 6] = [[0.0, 0.0], [1.0, 0.2], [0.3, 1.1], [-0.8, 0.4], [0.5, -0.9], [-0.2, -0.6]];
    const PROBES: [[f64; 2]; 3] = [[0.1, 0.1], [0.9, 0.9], [-0.5, -0.5]];

    fn kernel_of(points: &[[f64; 2]], gamma: f64) -> Vec<f64> {
        let rows: Vec<Vec<f64>> = points.iter().map(|p| p.to_vec()).collect();
        rbf_kernel(&Matrix::from_rows(&rows).unwrap(), gamma)
    }

    fn decision(points: &[[f64; 2]], coef: &[f64], rho: f64, gamma: f64, probe: [f64; 2]) -> f64 {
        points.iter().zip(coef).map(|(p, a)| a * (-gamma * squared_distance(p, &probe)).exp()).sum::<f64>() - rho
    }

    #[test]
    fn classifier_matches_reference_decisions() {
        let y = [1.0, 1.0, -1.0, -1.0, 1.0, -1.0];
        let kernel = kernel_of(&POINTS, 0.8);
        let s = Dual { kernel: &kernel, n: 6, y: y.to_vec(), p: vec![-1.0; 6], c: 3.0 }.solve(1e-10);
        let coef: Vec<f64> = s.alpha.iter().zip(&y).map(|(a, y)| a * y).collect();
        let got: Vec<f64> = PROBES.iter().map(|&p| decision(&POINTS, &coef, s.rho, 0.8, p)).collect();
        for (g, want) in got.iter().zip(REFERENCE_SVC) {
            assert!((g - want).abs() <= 1e-6, "{got:?}");
        }
    }

    #[test]
    fn regressor_matches_reference_decisions() {
        let z = [0.1, 0.4, 0.0, 0.3, 0.25, 0.05];
        let kernel = kernel_of(&POINTS, 0.8);
        let mut y = vec![1.0; 6];
        y.extend([-1.0; 6]);
        let mut p: Vec<f64> = z.iter().map(|z| 0.02 - z).collect();
        p.extend(z.iter().map(|z| 0.02 + z));
        let s = Dual { kernel: &kernel, n: 6, y, p, c: 3.0 }.solve(1e-10);
        let coef: Vec<f64> = (0..6).map(|i| s.alpha[i] - s.alpha[i + 6]).collect();
        let got: Vec<f64> = PROBES.iter().map(|&p| decision(&POINTS, &coef, s.rho, 0.8, p)).collect();
        for (g, want) in got.iter().zip(REFERENCE_SVR) {
            assert!((g - want).abs() <= 1e-6, "{got:?}");
        }
    }

    const REFERENCE_SVC: [f64; 3] = [0.64276329009079, -0.3449159906874875, -0.9000512211771019];
    const REFERENCE_SVR: [f64; 3] = [0.13284289096993052, 0.1816385434920837, 0.08509628241931438];
}
