//! Z-scoring and optional principal-component projection.

use nalgebra::{DMatrix, SymmetricEigen};
use qutrit_core::dataset::Standardizer;
use serde::{Deserialize, Serialize};

use crate::error::{LearnError, Result};
use crate::matrix::{dot, Matrix};

/// Orthonormal principal directions of z-scored training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub rank: usize,
    /// `rank × width`, row-major, leading direction first.
    pub components: Vec<f64>,
}

impl Projection {
    /// Top `rank` directions of the rows of `z` (already centered). The rank
    /// is capped by the number of rows and columns.
    pub fn fit(z: &Matrix, rank: usize) -> Result<Self> {
        let (n, d) = (z.rows(), z.cols());
        let rank = rank.min(n.saturating_sub(1)).min(d).max(1);
        let zm = DMatrix::from_row_slice(n, d, z.as_slice());
        let mut components = Vec::with_capacity(rank * d);
        if n <= d {
            // eigenvectors of Z Zᵀ map to directions Zᵀu/√λ
            let eig = SymmetricEigen::new(&zm * zm.transpose());
            for k in top_indices(eig.eigenvalues.as_slice(), rank) {
                let lambda = eig.eigenvalues[k];
                let u = eig.eigenvectors.column(k);
                let mut v: Vec<f64> = (zm.transpose() * u).iter().copied().collect();
                let norm = if lambda > 0.0 { lambda.sqrt() } else { v.iter().map(|x| x * x).sum::<f64>().sqrt() };
                if !(norm > 0.0) {
                    return Err(LearnError::Numerical("zero-variance principal direction".into()));
                }
                v.iter_mut().for_each(|x| *x /= norm);
                fix_sign(&mut v);
                components.extend(v);
            }
        } else {
            let eig = SymmetricEigen::new(zm.transpose() * &zm);
            for k in top_indices(eig.eigenvalues.as_slice(), rank) {
                let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
                fix_sign(&mut v);
                components.extend(v);
            }
        }
        Ok(Self { rank, components })
    }

    pub fn width(&self) -> usize {
        self.components.len() / self.rank
    }

    pub fn project_row(&self, row: &[f64]) -> Vec<f64> {
        self.components.chunks_exact(self.width()).map(|v| dot(v, row)).collect()
    }
}

fn top_indices(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Largest-magnitude entry positive.
fn fix_sign(v: &mut [f64]) {
    let big = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if big < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Training-set statistics applied to every input row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub scaler: Standardizer,
    pub projection: Option<Projection>,
}

impl Preprocessing {
    /// Fits on the training rows; `rank = None` keeps every z-scored column.
    pub fn fit(x: &Matrix, rank: Option<usize>) -> Result<Self> {
        let scaler = Standardizer::fit(&x.to_rows())?;
        let projection = match rank {
            Some(r) => Some(Projection::fit(&scale(&scaler, x), r)?),
            None => None,
        };
        Ok(Self { scaler, projection })
    }

    pub fn input_width(&self) -> usize {
        self.scaler.width()
    }

    pub fn output_width(&self) -> usize {
        self.projection.as_ref().map_or(self.input_width(), |p| p.rank)
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_width() {
            return Err(LearnError::Width { expected: self.input_width(), got: x.cols() });
        }
        let z = scale(&self.scaler, x);
        Ok(match &self.projection {
            None => z,
            Some(p) => {
                let mut data = Vec::with_capacity(z.rows() * p.rank);
                for row in z.iter_rows() {
                    data.extend(p.project_row(row));
                }
                Matrix::from_vec(z.rows(), p.rank, data)?
            }
        })
    }

    /// Same scaler with a shorter projection; `rank` must not exceed the
    /// fitted one.
    pub(crate) fn truncated(&self, rank: Option<usize>) -> Self {
        let projection = match (rank, &self.projection) {
            (Some(r), Some(p)) => {
                let r = r.min(p.rank);
                Some(Projection { rank: r, components: p.components[..r * p.width()].to_vec() })
            }
            _ => None,
        };
        Self { scaler: self.scaler.clone(), projection }
    }
}

fn scale(s: &Standardizer, x: &Matrix) -> Matrix {
    let mut out = x.clone();
    for i in 0..out.rows() {
        for ((v, m), sd) in out.row_mut(i).iter_mut().zip(&s.mean).zip(&s.scale) {
            *v = (*v - m) / sd;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_vec(n, d, (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn training_columns_are_standardized() {
        let x = random(40, 7, 1);
        let p = Preprocessing::fit(&x, None).unwrap();
        let z = p.transform(&x).unwrap();
        for j in 0..7 {
            let col: Vec<f64> = (0..40).map(|i| z.row(i)[j]).collect();
            let mean = col.iter().sum::<f64>() / 40.0;
            let sd = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 40.0).sqrt();
            assert!(mean.abs() < 1e-12);
            assert!((sd - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_is_orthonormal_both_ways() {
        // wide (Gram route) and tall (covariance route) must agree on the span
        for (n, d) in [(10, 30), (30, 10)] {
            let x = random(n, d, 2);
            let p = Preprocessing::fit(&x, Some(5)).unwrap();
            let proj = p.projection.as_ref().unwrap();
            let w = proj.width();
            for a in 0..5 {
                for b in 0..5 {
                    let g = dot(&proj.components[a * w..(a + 1) * w], &proj.components[b * w..(b + 1) * w]);
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((g - want).abs() < 1e-9, "{n}x{d} ({a},{b}) {g}");
                }
            }
            assert_eq!(p.transform(&x).unwrap().cols(), 5);
        }
    }

    #[test]
    fn truncation_keeps_leading_directions() {
        let x = random(20, 12, 3);
        let full = Preprocessing::fit(&x, Some(8)).unwrap();
        let direct = Preprocessing::fit(&x, Some(3)).unwrap();
        let cut = full.truncated(Some(3));
        let (a, b) = (cut.transform(&x).unwrap(), direct.transform(&x).unwrap());
        for (u, v) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let p = Preprocessing::fit(&random(5, 3, 4), None).unwrap();
        assert!(matches!(p.transform(&random(2, 4, 5)), Err(LearnError::Width { expected: 3, got: 4 })));
    }
}
