//! Dense complex linear algebra for the small Hermitian operators of a
//! two-qutrit system.
//!
//! Everything here works on row-major `dim × dim` matrices of
//! [`Complex64`]. The sizes involved (3 and 9) are tiny, so all routines are
//! straightforward dense loops; the eigensolver is a cyclic complex Jacobi
//! method.

mod io;

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

pub use self::io::{read_matrices, read_matrix, write_matrices, write_matrix, STATE_MAGIC, STATE_VERSION};
use crate::error::{Error, Result};

/// Local dimension of one qutrit.
pub const QUTRIT: usize = 3;
/// Dimension of the two-qutrit Hilbert space.
pub const TWO_QUTRITS: usize = 9;

/// Absolute Hermiticity tolerance, scaled by the largest entry for matrices
/// with entries above one.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-12;
/// Eigenvalue floor for positive semidefiniteness of density matrices.
pub const PSD_FLOOR: f64 = -1e-10;
/// Default tolerance of [`is_ppt`].
pub const PPT_TOL: f64 = 1e-10;

const FIDELITY_NOISE_FLOOR: f64 = 1e-14;
const JACOBI_OFF_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from row-major entries. Fails unless `data.len()` is a
    /// perfect square.
    pub fn from_vec(data: Vec<Complex64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() || dim == 0 {
            return Err(Error::Format(format!("{} entries do not form a square matrix", data.len())));
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Outer product `|v⟩⟨w|`.
    pub fn outer(v: &[Complex64], w: &[Complex64]) -> Self {
        assert_eq!(v.len(), w.len());
        Self::from_fn(v.len(), |i, j| v[i] * w[j].conj())
    }

    /// Projector `|v⟩⟨v|`.
    pub fn projector(v: &[Complex64]) -> Self {
        Self::outer(v, v)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, other: &Self, s: f64) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b * s).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `M·v`.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        assert_eq!(v.len(), n);
        (0..n).map(|i| self.data[i * n..(i + 1) * n].iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// `⟨v|M|v⟩`, real part.
    pub fn expectation(&self, v: &[Complex64]) -> f64 {
        let mv = self.apply(v);
        v.iter().zip(&mv).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// `Re tr(self · other)`, which is the Hilbert-Schmidt inner product when
    /// both matrices are Hermitian.
    pub fn trace_product(&self, other: &Self) -> f64 {
        self.trace_product_complex(other).re
    }

    pub fn trace_product_complex(&self, other: &Self) -> Complex64 {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * other.data[k * n + i];
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Largest `|M_ij − conj(M_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim;
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol * self.max_abs().max(1.0)
    }

    /// `(M + M†)/2`; exactly Hermitian in floating point.
    pub fn hermitian_part(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            out[(i, i)] = Complex64::new(self[(i, i)].re, 0.0);
            for j in i + 1..n {
                let v = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
                out[(i, j)] = v;
                out[(j, i)] = v.conj();
            }
        }
        out
    }

    fn ensure_hermitian(&self) -> Result<()> {
        let dev = self.hermitian_deviation();
        if dev > HERMITIAN_TOL * self.max_abs().max(1.0) {
            return Err(Error::NotHermitian(dev));
        }
        Ok(())
    }

    /// Applies a real function to the spectrum of a Hermitian matrix.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Ok(eig_hermitian(self)?.reconstruct_with(f))
    }

    /// Principal square root with negative eigenvalues clamped to zero.
    pub fn sqrt_psd(&self) -> Result<Self> {
        self.map_spectrum(|l| l.max(0.0).sqrt())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.add_scaled(rhs, 1.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.add_scaled(rhs, -1.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Eigendecomposition of a Hermitian matrix. Eigenvalues ascend; column `k`
/// of `vectors` is the eigenvector of `values[k]`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Spectrum {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("empty spectrum")
    }

    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        let n = self.vectors.dim();
        (0..n).map(|i| self.vectors[(i, k)]).collect()
    }

    /// `V·diag(f(λ))·V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.vectors.dim();
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, &w) in fl.iter().enumerate() {
                    if w != 0.0 {
                        acc += self.vectors[(i, k)] * self.vectors[(j, k)].conj() * w;
                    }
                }
                out[(i, j)] = acc;
                out[(j, i)] = acc.conj();
            }
            out[(i, i)].im = 0.0;
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|l| l)
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations.
///
/// Converges when the off-diagonal Frobenius mass drops below `1e-13` times
/// the matrix norm; gives up after 100 sweeps.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<Spectrum> {
    m.ensure_hermitian()?;
    let n = m.dim();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let norm = a.frobenius_norm();

    let mut converged = norm == 0.0;
    let mut sweep = 0;
    while !converged {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_OFF_TOL * norm {
            converged = true;
            break;
        }
        if sweep == JACOBI_MAX_SWEEPS {
            break;
        }
        sweep += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence(JACOBI_MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, |i, k| v[(i, order[k])]);
    Ok(Spectrum { values, vectors })
}

/// One Jacobi rotation annihilating `a[p][q]`.
///
/// The rotation is `J = D·R` where `D` removes the phase of `a[p][q]` and `R`
/// is the real Givens rotation of the resulting real symmetric 2×2 block.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let g = a[(p, q)];
    let g_abs = g.norm();
    if g_abs == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let zeta = (aqq - app) / (2.0 * g_abs);
    let t = if zeta.is_finite() {
        let sign = if zeta >= 0.0 { 1.0 } else { -1.0 };
        sign / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
    } else {
        0.0
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // e = exp(-i·arg(g))
    let e = g.conj() / g_abs;
    let n = a.dim();

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * e * s;
        a[(k, q)] = akp * s + akq * e * c;
    }
    let ec = e.conj();
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * ec * s;
        a[(q, k)] = apk * s + aqk * ec * c;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * e * s;
        v[(k, q)] = vkp * s + vkq * e * c;
    }
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite
/// up to the numerical floor.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    /// Validates `m` against the density-matrix invariants.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        m.ensure_hermitian()?;
        let tr = m.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {:.3e}{:+.3e}i", tr.re, tr.im)));
        }
        let min = eig_hermitian(&m)?.min();
        if min < PSD_FLOOR {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self(m.hermitian_part()))
    }

    /// Hermitizes and rescales to unit trace, then validates.
    pub fn normalized(m: &ComplexMatrix) -> Result<Self> {
        let h = m.hermitian_part();
        let tr = h.trace().re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::InvalidState(format!("cannot normalize trace {tr:.3e}")));
        }
        Self::new(h.scale(1.0 / tr))
    }

    /// Projects a Hermitian matrix onto the state space: negative eigenvalues
    /// are clamped to zero and the trace renormalized.
    pub fn repair(m: &ComplexMatrix) -> Result<Self> {
        let clamped = eig_hermitian(&m.hermitian_part())?.reconstruct_with(|l| l.max(0.0));
        Self::normalized(&clamped)
    }

    /// Skips validation; callers guarantee the invariants by construction.
    pub(crate) fn from_trusted(m: ComplexMatrix) -> Self {
        Self(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    /// `|ψ⟩⟨ψ|` for a vector normalized here.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidArgument("zero state vector".into()));
        }
        let v: Vec<Complex64> = psi.iter().map(|z| z / norm).collect();
        Ok(Self(ComplexMatrix::projector(&v).hermitian_part()))
    }

    /// Convex combination `(1−p)·self + p·other`.
    pub fn mix(&self, other: &Self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("mixing weight {p} outside [0, 1]")));
        }
        if self.dim() != other.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: other.dim() });
        }
        Ok(Self(self.0.scale(1.0 - p).add_scaled(&other.0, p).hermitian_part()))
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn purity(&self) -> f64 {
        self.0.trace_product(&self.0)
    }
}

impl AsRef<ComplexMatrix> for DensityMatrix {
    fn as_ref(&self) -> &ComplexMatrix {
        &self.0
    }
}

/// Which tensor factor of the 3⊗3 bipartition is transposed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Subsystem {
    A,
    #[default]
    B,
}

/// Partial transpose of a 9×9 operator on C³⊗C³. Row/column index `3i + k`
/// labels `|i⟩_A |k⟩_B`.
pub fn partial_transpose(m: &ComplexMatrix, subsystem: Subsystem) -> Result<ComplexMatrix> {
    if m.dim() != TWO_QUTRITS {
        return Err(Error::Dimension { expected: TWO_QUTRITS, got: m.dim() });
    }
    let d = QUTRIT;
    let mut out = ComplexMatrix::zeros(TWO_QUTRITS);
    for i in 0..d {
        for k in 0..d {
            for j in 0..d {
                for l in 0..d {
                    out[(d * i + k, d * j + l)] = match subsystem {
                        Subsystem::B => m[(d * i + l, d * j + k)],
                        Subsystem::A => m[(d * j + k, d * i + l)],
                    };
                }
            }
        }
    }
    Ok(out)
}

/// Smallest eigenvalue of the partial transpose over subsystem B.
pub fn min_pt_eigenvalue(rho: &ComplexMatrix) -> Result<f64> {
    Ok(eig_hermitian(&partial_transpose(rho, Subsystem::B)?)?.min())
}

/// Peres-Horodecki test: the partial transpose has no eigenvalue below
/// `-tol`.
pub fn is_ppt(rho: &DensityMatrix, tol: f64) -> Result<bool> {
    let pt = partial_transpose(rho.matrix(), Subsystem::B)?;
    // A failed Cholesky factorization of `ρ^Γ + sI` puts an eigenvalue below
    // `-s`; most random states are rejected here without an eigensolve.
    if !cholesky_succeeds(&pt, 2.0 * tol + 1e-12) {
        return Ok(false);
    }
    Ok(eig_hermitian(&pt)?.min() >= -tol)
}

/// Whether `m + shift·I` (Hermitian) admits a Cholesky factorization.
fn cholesky_succeeds(m: &ComplexMatrix, shift: f64) -> bool {
    let n = m.dim();
    let mut l = m.clone();
    for j in 0..n {
        let mut d = l[(j, j)].re + shift;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        l[(j, j)] = c64(d, 0.0);
        for i in j + 1..n {
            let mut acc = l[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / d;
        }
    }
    true
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(eig_hermitian(m)?.values.iter().map(|l| l.abs()).sum())
}

/// `½‖ρ − σ‖₁`.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension { expected: a.dim(), got: b.dim() });
    }
    Ok(0.5 * trace_norm(&(a - b).hermitian_part())?)
}

/// Uhlmann fidelity `[tr √(√ρ σ √ρ)]²`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::Dimension { expected: rho.dim(), got: sigma.dim() });
    }
    fidelity_from_sqrt(&rho.matrix().sqrt_psd()?, sigma.matrix())
}

/// Fidelity with `√ρ` precomputed, for many comparisons against one state.
pub fn fidelity_from_sqrt(sqrt_rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    if sqrt_rho.dim() != sigma.dim() {
        return Err(Error::Dimension { expected: sqrt_rho.dim(), got: sigma.dim() });
    }
    let inner = sqrt_rho.matmul(sigma).matmul(sqrt_rho).hermitian_part();
    let spec = eig_hermitian(&inner)?;
    // eigenvalues at round-off level would contribute their square roots
    let floor = FIDELITY_NOISE_FLOOR * spec.max().max(0.0);
    let root: f64 = spec.values.iter().filter(|&&l| l > floor).map(|l| l.sqrt()).sum();
    Ok(root * root)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (da, db) = (a.dim(), b.dim());
    ComplexMatrix::from_fn(da * db, |r, c| a[(r / db, c / db)] * b[(r % db, c % db)])
}

/// Kronecker product of two vectors.
pub fn kron_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// `(|00⟩ + |11⟩ + |22⟩)/√3`.
pub fn max_entangled_vector() -> Vec<Complex64> {
    let amp = 1.0 / 3f64.sqrt();
    let mut v = vec![Complex64::new(0.0, 0.0); TWO_QUTRITS];
    for i in 0..QUTRIT {
        v[QUTRIT * i + i] = Complex64::new(amp, 0.0);
    }
    v
}

pub fn max_entangled_state() -> DensityMatrix {
    DensityMatrix::from_trusted(ComplexMatrix::projector(&max_entangled_vector()))
}

/// Horodecki's 3⊗3 PPT entangled family, `0 < a < 1`.
pub fn horodecki_state(a: f64) -> Result<DensityMatrix> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidArgument(format!("Horodecki parameter {a} outside (0, 1)")));
    }
    let mut m = ComplexMatrix::zeros(TWO_QUTRITS);
    let re = |x: f64| Complex64::new(x, 0.0);
    for i in 0..8 {
        m[(i, i)] = re(a);
    }
    for &(i, j) in &[(0, 4), (0, 8), (4, 8)] {
        m[(i, j)] = re(a);
        m[(j, i)] = re(a);
    }
    m[(6, 6)] = re((1.0 + a) / 2.0);
    m[(8, 8)] = re((1.0 + a) / 2.0);
    let off = (1.0 - a * a).sqrt() / 2.0;
    m[(6, 8)] = re(off);
    m[(8, 6)] = re(off);
    DensityMatrix::new(m.scale(1.0 / (8.0 * a + 1.0)))
}
