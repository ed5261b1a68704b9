//! Reproducible random states.
//!
//! Every draw is keyed by a [`SeedSpec`]: the master seed selects a ChaCha20
//! key and the stream index selects one of its 2⁶⁴ independent streams, so the
//! state drawn for a given index never depends on how many draws happened
//! before it or on which worker produced it.

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::qmat::{kron, ComplexMatrix, DensityMatrix, QUTRIT};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub const fn new(master_seed: u64, stream_index: u64) -> Self {
        Self { master_seed, stream_index }
    }

    /// Same master seed, different stream.
    pub const fn with_stream(self, stream_index: u64) -> Self {
        Self { master_seed: self.master_seed, stream_index }
    }

    /// A seed for a sub-computation of this stream. The derived master seed is
    /// a mix of the original master seed and `domain`, so sub-streams never
    /// collide with the top-level state streams.
    pub fn derive(self, domain: u64) -> Self {
        Self { master_seed: splitmix(self.master_seed ^ splitmix(domain)), stream_index: self.stream_index }
    }

    pub fn rng(self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    pub fn gaussians(self) -> GaussianStream {
        GaussianStream::new(self.rng())
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Standard normal variates by the Box-Muller transform on a uniform stream.
pub struct GaussianStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(rng: ChaCha20Rng) -> Self {
        Self { rng, spare: None }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    /// Complex normal with independent standard real and imaginary parts.
    pub fn complex_normal(&mut self) -> Complex64 {
        let re = self.normal();
        let im = self.normal();
        Complex64::new(re, im)
    }

    /// Exponential(1) variate.
    pub fn exponential(&mut self) -> f64 {
        -(1.0 - self.uniform()).ln()
    }
}

/// A normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Normalizes `amplitudes`; fails on the zero vector.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize zero state vector".into()));
        }
        Ok(Self { amplitudes: amplitudes.into_iter().map(|z| z / norm).collect() })
    }

    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::projector(&self.amplitudes)
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidArgument(format!("dimension must be at least 2, got {dim}")));
    }
    Ok(())
}

/// Hilbert-Schmidt random state `GG†/tr(GG†)` with `G` a square complex
/// Ginibre matrix.
pub fn random_density_hs(dim: usize, seed: SeedSpec) -> Result<DensityMatrix> {
    check_dim(dim)?;
    Ok(hs_from_stream(dim, &mut seed.gaussians()))
}

pub(crate) fn hs_from_stream(dim: usize, g: &mut GaussianStream) -> DensityMatrix {
    let ginibre = ComplexMatrix::from_fn(dim, |_, _| g.complex_normal());
    let mut rho = ComplexMatrix::zeros(dim);
    let gs = ginibre.as_slice();
    for i in 0..dim {
        for j in i..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..dim {
                acc += gs[i * dim + k] * gs[j * dim + k].conj();
            }
            rho[(i, j)] = acc;
            rho[(j, i)] = acc.conj();
        }
        rho[(i, i)].im = 0.0;
    }
    let tr = rho.trace().re;
    DensityMatrix::from_trusted(rho.scale(1.0 / tr))
}

/// Haar-random pure state from a normalized complex Gaussian vector.
pub fn random_pure(dim: usize, seed: SeedSpec) -> Result<PureState> {
    check_dim(dim)?;
    Ok(pure_from_stream(dim, &mut seed.gaussians()))
}

pub(crate) fn pure_from_stream(dim: usize, g: &mut GaussianStream) -> PureState {
    loop {
        let v: Vec<Complex64> = (0..dim).map(|_| g.complex_normal()).collect();
        if let Ok(p) = PureState::new(v) {
            return p;
        }
    }
}

/// `|a⟩⟨a| ⊗ |b⟩⟨b|` with independent Haar qutrit states.
pub fn random_product_state(seed: SeedSpec) -> DensityMatrix {
    let mut g = seed.gaussians();
    let a = pure_from_stream(QUTRIT, &mut g);
    let b = pure_from_stream(QUTRIT, &mut g);
    DensityMatrix::from_trusted(kron(&a.projector(), &b.projector()).hermitian_part())
}

/// Convex mixture of `k` random product states with flat-Dirichlet weights.
pub fn random_separable_mixture(k: usize, seed: SeedSpec) -> Result<DensityMatrix> {
    if k == 0 {
        return Err(Error::InvalidArgument("mixture needs at least one component".into()));
    }
    let mut g = seed.gaussians();
    let weights: Vec<f64> = (0..k).map(|_| g.exponential()).collect();
    let total: f64 = weights.iter().sum();
    let mut acc = ComplexMatrix::zeros(QUTRIT * QUTRIT);
    for w in weights {
        let a = pure_from_stream(QUTRIT, &mut g);
        let b = pure_from_stream(QUTRIT, &mut g);
        acc = acc.add_scaled(&kron(&a.projector(), &b.projector()), w / total);
    }
    DensityMatrix::normalized(&acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{eig_hermitian, is_ppt, min_pt_eigenvalue, PPT_TOL};

    #[test]
    fn hs_state_is_valid_and_deterministic() {
        let seed = SeedSpec::new(42, 0);
        let a = random_density_hs(9, seed).unwrap();
        let b = random_density_hs(9, seed).unwrap();
        assert_eq!(a, b);
        assert!((a.matrix().trace().re - 1.0).abs() < 1e-12);
        assert!(eig_hermitian(a.matrix()).unwrap().min() >= -1e-10);
        assert_ne!(a, random_density_hs(9, seed.with_stream(1)).unwrap());
        assert!(random_density_hs(1, seed).is_err());
    }

    #[test]
    fn hs_mean_is_maximally_mixed() {
        let n = 10_000;
        let mut mean = ComplexMatrix::zeros(9);
        for i in 0..n {
            mean = mean.add_scaled(random_density_hs(9, SeedSpec::new(3, i)).unwrap().matrix(), 1.0 / n as f64);
        }
        let target = ComplexMatrix::identity(9).scale(1.0 / 9.0);
        assert!(mean.max_abs_diff(&target) < 0.01);
    }

    #[test]
    fn pure_state_norm_and_haar_moment() {
        let n = 10_000;
        let mut acc = 0.0;
        for i in 0..n {
            let p = random_pure(3, SeedSpec::new(5, i)).unwrap();
            assert!((p.norm() - 1.0).abs() < 1e-12);
            acc += p.amplitudes()[0].norm_sqr();
        }
        assert!((acc / n as f64 - 1.0 / 3.0).abs() < 0.02);
        assert_eq!(random_pure(3, SeedSpec::new(5, 1)).unwrap(), random_pure(3, SeedSpec::new(5, 1)).unwrap());
    }

    #[test]
    fn product_state_properties() {
        for i in 0..20 {
            let rho = random_product_state(SeedSpec::new(9, i));
            assert!(is_ppt(&rho, PPT_TOL).unwrap());
            let s = eig_hermitian(rho.matrix()).unwrap();
            assert!((s.max() - 1.0).abs() < 1e-12);
            assert!(s.values[..8].iter().all(|l| l.abs() <= 1e-12));
            assert!(min_pt_eigenvalue(rho.matrix()).unwrap() >= -1e-12);
        }
    }

    #[test]
    fn separable_mixture_properties() {
        let one = random_separable_mixture(1, SeedSpec::new(1, 0)).unwrap();
        assert!((eig_hermitian(one.matrix()).unwrap().max() - 1.0).abs() < 1e-12);
        for i in 0..100 {
            let rho = random_separable_mixture(1 + (i as usize % 25), SeedSpec::new(11, i)).unwrap();
            assert!(is_ppt(&rho, PPT_TOL).unwrap());
        }
        assert!(random_separable_mixture(0, SeedSpec::default()).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let s = SeedSpec::new(1, 2);
        assert_ne!(s.derive(1), s.derive(2));
        assert_eq!(s.derive(1), s.derive(1));
        assert_eq!(s.derive(1).stream_index, 2);
    }
}
