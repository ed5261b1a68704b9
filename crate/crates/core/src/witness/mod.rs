//! Generalized robustness of entanglement.
//!
//! Two routes are provided:
//!
//! * [`gr_eps_oew`]: robustness relative to the separable set. Column
//!   generation over product states: a master SDP mixes a finite working set
//!   of product projectors, and a see-saw oracle searches for a product state
//!   that violates the master's dual witness. The separable edge state is an
//!   explicit mixture of working-set projectors.
//! * [`gr_decomposable`]: robustness relative to the PPT set, solved exactly
//!   as one SDP whose dual is a decomposable witness.
//!
//! Both return a [`GrResult`] with `edge = (ρ + gr·σ)/(1 + gr)`.

mod decomposable;
mod oew;
pub mod sdp;
mod seesaw;

use num_complex::Complex64;

pub use self::decomposable::{gr_decomposable, gr_decomposable_with};
pub use self::oew::{gr_eps_oew, gr_eps_oew_with, solve_master, MasterSolution, OewSettings};
pub use self::sdp::{SdpReport, SdpSettings, SdpStatus};
pub use self::seesaw::{seesaw_local_maxima, seesaw_max_product};
use crate::error::{Error, Result};
use crate::qmat::{kron, kron_vec, trace_distance, ComplexMatrix, DensityMatrix, QUTRIT};
use crate::sampler::{pure_from_stream, GaussianStream, PureState, SeedSpec};

/// Default entanglement threshold on the robustness.
pub const DEFAULT_EPSILON: f64 = 1e-5;

/// Half trace distance above which two edge states count as different.
pub const EDGE_DISTINCT_THRESHOLD: f64 = 1e-3;

/// Robustness values at or below this are treated as exactly zero when
/// choosing the mixing state.
const ZERO_GR: f64 = 1e-9;

/// A product pure state `|a⟩|b⟩` with its cached projector.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductPoint {
    a: PureState,
    b: PureState,
    vector: Vec<Complex64>,
    projector: ComplexMatrix,
}

impl ProductPoint {
    pub fn new(a: PureState, b: PureState) -> Result<Self> {
        if a.dim() != QUTRIT || b.dim() != QUTRIT {
            return Err(Error::Dimension { expected: QUTRIT, got: if a.dim() != QUTRIT { a.dim() } else { b.dim() } });
        }
        let vector = kron_vec(a.amplitudes(), b.amplitudes());
        let projector = kron(&a.projector(), &b.projector()).hermitian_part();
        Ok(Self { a, b, vector, projector })
    }

    /// `|i⟩|j⟩`.
    pub fn computational(i: usize, j: usize) -> Self {
        Self::new(PureState::basis(QUTRIT, i), PureState::basis(QUTRIT, j)).expect("qutrit basis states")
    }

    pub(crate) fn random_from(g: &mut GaussianStream) -> Self {
        let a = pure_from_stream(QUTRIT, g);
        let b = pure_from_stream(QUTRIT, g);
        Self::new(a, b).expect("qutrit states")
    }

    pub fn random(seed: SeedSpec) -> Self {
        Self::random_from(&mut seed.gaussians())
    }

    pub fn a(&self) -> &PureState {
        &self.a
    }

    pub fn b(&self) -> &PureState {
        &self.b
    }

    /// `|a⟩⊗|b⟩`.
    pub fn vector(&self) -> &[Complex64] {
        &self.vector
    }

    pub fn projector(&self) -> &ComplexMatrix {
        &self.projector
    }

    /// `⟨ab|W|ab⟩`.
    pub fn expectation(&self, w: &ComplexMatrix) -> f64 {
        w.expectation(&self.vector)
    }

    /// `|⟨ab|a'b'⟩|²`.
    pub fn overlap(&self, other: &ProductPoint) -> f64 {
        self.vector.iter().zip(&other.vector).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm_sqr()
    }
}

/// Which robustness is computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GrMethod {
    /// Relative to the separable set (column generation).
    EpsOew,
    /// Relative to the PPT set (decomposable witnesses).
    Decomposable,
}

/// Output of a robustness computation.
#[derive(Clone, Debug)]
pub struct GrResult {
    /// Robustness `s ≥ 0`.
    pub gr: f64,
    /// Optimal mixing state; `I/9` when `gr` is zero.
    pub sigma: DensityMatrix,
    /// `(ρ + gr·σ)/(1 + gr)`: separable edge for [`GrMethod::EpsOew`], PPT
    /// boundary state for [`GrMethod::Decomposable`].
    pub edge: DensityMatrix,
    /// Dual certificate. For the separable route `W ⪰ 0` with
    /// `⟨ab|W|ab⟩ ≤ 1` on product states and `tr(Wρ) = 1 + gr`; for the PPT
    /// route the decomposable witness `W = P + Q^Γ` with `P = 0`,
    /// `tr(Wρ) = −gr` and `W ⪯ I`.
    pub witness: ComplexMatrix,
    pub report: SdpReport,
    pub method: GrMethod,
    /// Separable route only: product points and mixture weights of the edge
    /// state. Weights sum to one.
    pub decomposition: Vec<(ProductPoint, f64)>,
    /// Separable route only: column-generation rounds performed.
    pub outer_iterations: usize,
    /// Lower bound on the robustness certified alongside `gr`. Equal to `gr`
    /// for the PPT route.
    pub lower_bound: f64,
}

impl GrResult {
    pub fn is_usable(&self) -> bool {
        self.report.is_optimal()
    }

    /// Recomputes `(ρ + gr·σ)/(1 + gr)`.
    pub fn reconstruct_edge(&self, rho: &DensityMatrix) -> ComplexMatrix {
        rho.matrix().add_scaled(self.sigma.matrix(), self.gr).scale(1.0 / (1.0 + self.gr))
    }

    /// Mixture of the decomposition, `Σ w_k |a_k b_k⟩⟨a_k b_k|`.
    pub fn decomposition_state(&self) -> Option<ComplexMatrix> {
        if self.decomposition.is_empty() {
            return None;
        }
        let mut acc = ComplexMatrix::zeros(9);
        for (p, w) in &self.decomposition {
            acc = acc.add_scaled(p.projector(), *w);
        }
        Some(acc)
    }
}

/// Mixing state and edge from a mixing operator `S = gr·σ`.
fn sigma_and_edge(rho: &DensityMatrix, gr: f64, mixing: &ComplexMatrix) -> Result<(DensityMatrix, DensityMatrix)> {
    if gr <= ZERO_GR {
        let sigma = DensityMatrix::maximally_mixed(rho.dim());
        let edge = DensityMatrix::normalized(&rho.matrix().add_scaled(sigma.matrix(), gr))?;
        return Ok((sigma, edge));
    }
    let sigma = DensityMatrix::normalized(mixing).or_else(|_| DensityMatrix::repair(mixing))?;
    let edge = DensityMatrix::normalized(&rho.matrix().add_scaled(sigma.matrix(), gr))?;
    Ok((sigma, edge))
}

/// `½‖a − b‖₁ > 10⁻³`.
pub fn edge_states_distinct(a: &DensityMatrix, b: &DensityMatrix) -> Result<bool> {
    Ok(trace_distance(a.matrix(), b.matrix())? > EDGE_DISTINCT_THRESHOLD)
}
