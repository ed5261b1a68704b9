//! Separation oracle: maximize `⟨ab|W|ab⟩` over product vectors by
//! alternating top-eigenvector updates.

use num_complex::Complex64;

use super::ProductPoint;
use crate::error::{Error, Result};
use crate::qmat::{eig_hermitian, ComplexMatrix, QUTRIT, TWO_QUTRITS};
use crate::sampler::{pure_from_stream, PureState, SeedSpec};

const IMPROVEMENT_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 500;

/// `(I ⊗ ⟨b|) W (I ⊗ |b⟩)`.
fn contract_b(w: &ComplexMatrix, b: &[Complex64]) -> ComplexMatrix {
    let d = QUTRIT;
    let mut out = ComplexMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..d {
                let bk = b[k].conj();
                for l in 0..d {
                    acc += bk * w[(d * i + k, d * j + l)] * b[l];
                }
            }
            out[(i, j)] = acc;
        }
    }
    out.hermitian_part()
}

/// `(⟨a| ⊗ I) W (|a⟩ ⊗ I)`.
fn contract_a(w: &ComplexMatrix, a: &[Complex64]) -> ComplexMatrix {
    let d = QUTRIT;
    let mut out = ComplexMatrix::zeros(d);
    for k in 0..d {
        for l in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..d {
                let ai = a[i].conj();
                for j in 0..d {
                    acc += ai * w[(d * i + k, d * j + l)] * a[j];
                }
            }
            out[(k, l)] = acc;
        }
    }
    out.hermitian_part()
}

fn top_eigenvector(m: &ComplexMatrix) -> Result<(f64, Vec<Complex64>)> {
    let s = eig_hermitian(m)?;
    let k = s.values.len() - 1;
    Ok((s.values[k], s.vector(k)))
}

/// One see-saw ascent from the given starting `|b⟩`.
fn ascend(w: &ComplexMatrix, start_b: &PureState) -> Result<ProductPoint> {
    let mut b = start_b.amplitudes().to_vec();
    let (_, mut a) = top_eigenvector(&contract_b(w, &b))?;
    let mut value = f64::NEG_INFINITY;
    for _ in 0..MAX_SWEEPS {
        let (_, nb) = top_eigenvector(&contract_a(w, &a))?;
        b = nb;
        let (v, na) = top_eigenvector(&contract_b(w, &b))?;
        a = na;
        let improved = v - value;
        value = v;
        if improved < IMPROVEMENT_TOL {
            break;
        }
    }
    ProductPoint::new(PureState::new(a)?, PureState::new(b)?)
}

/// Local maxima from `restarts` random initializations, in restart order.
pub fn seesaw_local_maxima(w: &ComplexMatrix, restarts: usize, seed: SeedSpec) -> Result<Vec<(ProductPoint, f64)>> {
    if w.dim() != TWO_QUTRITS {
        return Err(Error::Dimension { expected: TWO_QUTRITS, got: w.dim() });
    }
    if !w.is_hermitian(1e-9) {
        return Err(Error::NotHermitian(w.hermitian_deviation()));
    }
    let w = w.hermitian_part();
    let mut g = seed.gaussians();
    (0..restarts.max(1))
        .map(|_| {
            let start = pure_from_stream(QUTRIT, &mut g);
            let p = ascend(&w, &start)?;
            let v = p.expectation(&w);
            Ok((p, v))
        })
        .collect()
}

/// Best product point found over `restarts` random starts, with its exact
/// value `⟨ab|W|ab⟩`.
pub fn seesaw_max_product(w: &ComplexMatrix, restarts: usize, seed: SeedSpec) -> Result<(ProductPoint, f64)> {
    let all = seesaw_local_maxima(w, restarts, seed)?;
    let best = all.into_iter().fold(None::<(ProductPoint, f64)>, |best, (p, v)| match best {
        Some((bp, bv)) if bv >= v => Some((bp, bv)),
        _ => Some((p, v)),
    });
    Ok(best.expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{c64, kron, max_entangled_state};

    #[test]
    fn identity_form() {
        let (p, v) = seesaw_max_product(&ComplexMatrix::identity(9), 3, SeedSpec::new(1, 0)).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert!((p.expectation(&ComplexMatrix::identity(9)) - v).abs() < 1e-12);
    }

    #[test]
    fn product_eigenvector() {
        let mut w = ComplexMatrix::zeros(9);
        w[(0, 0)] = c64(1.0, 0.0);
        let (p, v) = seesaw_max_product(&w, 5, SeedSpec::new(2, 0)).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert!((p.a().amplitudes()[0].norm() - 1.0).abs() < 1e-9);
        assert!((p.b().amplitudes()[0].norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn max_entangled_overlap_matches_grid_oracle() {
        let w = max_entangled_state().into_matrix();
        let (_, v) = seesaw_max_product(&w, 20, SeedSpec::new(3, 0)).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-6, "{v}");

        // coarse brute force over real qutrit vectors on a spherical grid
        let steps = 12;
        let mut grid = Vec::new();
        for i in 0..=steps {
            for j in 0..=2 * steps {
                let th = std::f64::consts::PI * i as f64 / steps as f64 / 2.0;
                let ph = std::f64::consts::PI * j as f64 / steps as f64;
                grid.push([c64(th.cos(), 0.0), c64(th.sin() * ph.cos(), 0.0), c64(th.sin() * ph.sin(), 0.0)]);
            }
        }
        let mut best = 0.0f64;
        for a in &grid {
            for b in &grid {
                let pa = ComplexMatrix::projector(a);
                let pb = ComplexMatrix::projector(b);
                best = best.max(kron(&pa, &pb).trace_product(&w));
            }
        }
        assert!(best <= 1.0 / 3.0 + 1e-12);
        assert!(best > 1.0 / 3.0 - 1e-2);
        assert!(v >= best - 1e-9);
    }
}
