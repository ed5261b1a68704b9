//! Tomographic encoding of two-qutrit states against local SU(3) generators.
//!
//! The basis has 80 elements in a frozen order: `λ_a ⊗ I` for `a = 1..8`,
//! then `I ⊗ λ_b` for `b = 1..8`, then `λ_a ⊗ λ_b` in lexicographic `(a, b)`
//! order. A state is encoded as `c_i = tr(E_i ρ)` and recovered by
//! `ρ = I/9 + Σ θ_i E_i` with `θ = G⁻¹ c`, `G_ij = tr(E_i E_j)`.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qmat::{c64, kron, ComplexMatrix, DensityMatrix, QUTRIT, TWO_QUTRITS};

/// Number of tomogram coefficients, `9² − 1`.
pub const TOMOGRAM_LEN: usize = TWO_QUTRITS * TWO_QUTRITS - 1;

const IMAG_RESIDUE_LIMIT: f64 = 1e-9;

/// The eight Gell-Mann matrices, normalized so `tr(λ_a λ_b) = 2δ_ab`.
pub fn gell_mann() -> [ComplexMatrix; 8] {
    let z = c64(0.0, 0.0);
    let one = c64(1.0, 0.0);
    let i = c64(0.0, 1.0);
    let m = |rows: [[Complex64; 3]; 3]| ComplexMatrix::from_fn(3, |r, c| rows[r][c]);
    let s = 1.0 / 3f64.sqrt();
    [
        m([[z, one, z], [one, z, z], [z, z, z]]),
        m([[z, -i, z], [i, z, z], [z, z, z]]),
        m([[one, z, z], [z, -one, z], [z, z, z]]),
        m([[z, z, one], [z, z, z], [one, z, z]]),
        m([[z, z, -i], [z, z, z], [i, z, z]]),
        m([[z, z, z], [z, z, one], [z, one, z]]),
        m([[z, z, z], [z, z, -i], [z, i, z]]),
        m([[one * s, z, z], [z, one * s, z], [z, z, one * (-2.0 * s)]]),
    ]
}

/// The 80 generators together with their (diagonal) Gram matrix.
pub struct GeneratorBasis {
    elements: Vec<ComplexMatrix>,
    gram_diag: Vec<f64>,
}

impl GeneratorBasis {
    fn build() -> Self {
        let lambdas = gell_mann();
        let id = ComplexMatrix::identity(QUTRIT);
        let mut elements = Vec::with_capacity(TOMOGRAM_LEN);
        elements.extend(lambdas.iter().map(|l| kron(l, &id)));
        elements.extend(lambdas.iter().map(|l| kron(&id, l)));
        for a in &lambdas {
            for b in &lambdas {
                elements.push(kron(a, b));
            }
        }
        let gram_diag = elements.iter().map(|e| e.trace_product(e)).collect();
        Self { elements, gram_diag }
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Diagonal of the Gram matrix.
    pub fn gram_diagonal(&self) -> &[f64] {
        &self.gram_diag
    }

    /// The full 80×80 Gram matrix `tr(E_i E_j)`, computed densely.
    pub fn gram(&self) -> Vec<Vec<f64>> {
        self.elements.iter().map(|ei| self.elements.iter().map(|ej| ei.trace_product(ej)).collect()).collect()
    }

    /// Human-readable name of element `i`, e.g. `λ3⊗I` or `λ1⊗λ8`.
    pub fn element_name(&self, i: usize) -> String {
        match i {
            0..=7 => format!("λ{}⊗I", i + 1),
            8..=15 => format!("I⊗λ{}", i - 7),
            _ => {
                let k = i - 16;
                format!("λ{}⊗λ{}", k / 8 + 1, k % 8 + 1)
            }
        }
    }
}

/// The shared basis, built on first use.
pub fn basis() -> &'static GeneratorBasis {
    static BASIS: OnceLock<GeneratorBasis> = OnceLock::new();
    BASIS.get_or_init(GeneratorBasis::build)
}

/// Vector of expectation values `c_i = tr(E_i ρ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tomogram(Vec<f64>);

impl Tomogram {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if c.len() != TOMOGRAM_LEN {
            return Err(Error::Format(format!("tomogram needs {TOMOGRAM_LEN} coefficients, got {}", c.len())));
        }
        Ok(Self(c))
    }

    pub fn zeros() -> Self {
        Self(vec![0.0; TOMOGRAM_LEN])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Encodes a 9×9 operator. Works for any Hermitian matrix, not only states.
pub fn encode_matrix(m: &ComplexMatrix) -> Result<Tomogram> {
    if m.dim() != TWO_QUTRITS {
        return Err(Error::Dimension { expected: TWO_QUTRITS, got: m.dim() });
    }
    let mut c = Vec::with_capacity(TOMOGRAM_LEN);
    for e in basis().elements() {
        let z = e.trace_product_complex(m);
        if z.im.abs() > IMAG_RESIDUE_LIMIT {
            return Err(Error::Numerical(format!("imaginary tomogram residue {:.3e}", z.im)));
        }
        c.push(z.re);
    }
    Ok(Tomogram(c))
}

pub fn encode(rho: &DensityMatrix) -> Tomogram {
    encode_matrix(rho.matrix()).expect("density matrices are Hermitian 9x9")
}

/// Linear inversion `ρ = I/9 + Σ θ_i E_i`, `θ = G⁻¹c`. The result is
/// Hermitian with unit trace but is not projected onto the PSD cone.
pub fn decode(c: &Tomogram) -> ComplexMatrix {
    let b = basis();
    let mut rho = ComplexMatrix::identity(TWO_QUTRITS).scale(1.0 / TWO_QUTRITS as f64);
    for ((e, &ci), &g) in b.elements().iter().zip(c.as_slice()).zip(b.gram_diagonal()) {
        let theta = ci / g;
        if theta != 0.0 {
            for (dst, src) in rho.as_mut_slice().iter_mut().zip(e.as_slice()) {
                *dst += src * theta;
            }
        }
    }
    rho.hermitian_part()
}

/// Decodes and validates as a physical state.
pub fn decode_state(c: &Tomogram) -> Result<DensityMatrix> {
    DensityMatrix::new(decode(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{horodecki_state, max_entangled_state};

    #[test]
    fn basis_structure() {
        let b = basis();
        assert_eq!(b.len(), 80);
        for e in b.elements() {
            assert!(e.trace().norm() < 1e-14);
            assert!(e.hermitian_deviation() < 1e-14);
        }
        let g = b.gram();
        for i in 0..80 {
            for j in 0..80 {
                if i != j {
                    assert!(g[i][j].abs() < 1e-12, "G[{i}][{j}] = {}", g[i][j]);
                }
            }
            let want = if i < 16 { 6.0 } else { 4.0 };
            assert!((g[i][i] - want).abs() < 1e-12);
        }
        assert_eq!(b.element_name(0), "λ1⊗I");
        assert_eq!(b.element_name(15), "I⊗λ8");
        assert_eq!(b.element_name(16), "λ1⊗λ1");
        assert_eq!(b.element_name(79), "λ8⊗λ8");
    }

    #[test]
    fn gell_mann_normalization() {
        let l = gell_mann();
        for a in 0..8 {
            for b in 0..8 {
                let want = if a == b { 2.0 } else { 0.0 };
                assert!((l[a].trace_product(&l[b]) - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn encode_known_states() {
        let c = encode(&DensityMatrix::maximally_mixed(9));
        assert!(c.as_slice().iter().all(|x| x.abs() < 1e-16));
        let c = encode(&max_entangled_state());
        assert!((c.as_slice()[16] - 2.0 / 3.0).abs() < 1e-14);
        assert_eq!(decode(&Tomogram::zeros()), ComplexMatrix::identity(9).scale(1.0 / 9.0));
    }

    #[test]
    fn roundtrip_horodecki() {
        let rho = horodecki_state(0.5).unwrap();
        let back = decode(&encode(&rho));
        assert!(back.max_abs_diff(rho.matrix()) < 1e-14);
        let state = decode_state(&encode(&rho)).unwrap();
        assert!(state.matrix().max_abs_diff(rho.matrix()) < 1e-14);
    }

    #[test]
    fn rejects_wrong_lengths() {
        assert!(Tomogram::new(vec![0.0; 79]).is_err());
        assert!(encode_matrix(&ComplexMatrix::identity(3)).is_err());
    }
}
