//! Two-qutrit entanglement toolkit.
//!
//! * [`qmat`]: dense Hermitian linear algebra, partial transpose, fidelity.
//! * [`sampler`]: reproducible Hilbert-Schmidt and product-state sampling.
//! * [`tomo`]: SU(3)⊗SU(3) tomograms.
//! * [`witness`]: generalized robustness via optimal witnesses.
//! * [`dataset`]: labeled dataset generation, features and persistence.

pub mod error;
pub mod qmat;
pub mod sampler;
pub mod tomo;
pub mod witness;
pub mod dataset;

pub use error::{Error, Result};
