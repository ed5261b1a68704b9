//! PPT-relative robustness: `min tr S` over `S ⪰ 0` with `(ρ + S)^Γ ⪰ 0`.
//!
//! Variables are `S` and `T = (ρ + S)^Γ`, linked by `T − S^Γ = ρ^Γ`. The dual
//! optimum gives `Q = z_T ⪰ 0`, the decomposable witness `W = Q^Γ` (with a
//! zero `P` part) and `I − W = z_S ⪰ 0`.

use super::sdp::{block_slices, herm_basis, herm_to_vec, vec_to_herm, Cone, ConicProblem, SdpReport, SdpSettings, SdpStatus};
use super::{sigma_and_edge, GrMethod, GrResult};
use crate::error::{Error, Result};
use crate::qmat::{is_ppt, partial_transpose, PPT_TOL, ComplexMatrix, DensityMatrix, Subsystem, TWO_QUTRITS};

const N: usize = TWO_QUTRITS * TWO_QUTRITS;

pub fn gr_decomposable(rho: &DensityMatrix) -> Result<GrResult> {
    gr_decomposable_with(rho, &SdpSettings::default())
}

pub fn gr_decomposable_with(rho: &DensityMatrix, settings: &SdpSettings) -> Result<GrResult> {
    if rho.dim() != TWO_QUTRITS {
        return Err(Error::Dimension { expected: TWO_QUTRITS, got: rho.dim() });
    }
    // Already PPT: S = 0 and W = 0 are a primal-dual pair.
    if is_ppt(rho, PPT_TOL)? {
        return Ok(GrResult {
            gr: 0.0,
            sigma: DensityMatrix::maximally_mixed(TWO_QUTRITS),
            edge: rho.clone(),
            witness: ComplexMatrix::zeros(TWO_QUTRITS),
            report: SdpReport { primal_value: 0.0, dual_value: 0.0, iterations: 0, status: SdpStatus::Optimal },
            method: GrMethod::Decomposable,
            decomposition: Vec::new(),
            outer_iterations: 0,
            lower_bound: 0.0,
        });
    }

    let n = 2 * N;
    let mut a = vec![0.0; N * n];
    for i in 0..N {
        let pt = partial_transpose(&herm_basis(TWO_QUTRITS, i), Subsystem::B)?;
        let row = &mut a[i * n..(i + 1) * n];
        for (dst, v) in row[..N].iter_mut().zip(herm_to_vec(&pt)) {
            *dst = -v;
        }
        row[N + i] = 1.0;
    }
    let mut c = vec![0.0; n];
    c[..N].copy_from_slice(&herm_to_vec(&ComplexMatrix::identity(TWO_QUTRITS)));
    let b = herm_to_vec(&partial_transpose(rho.matrix(), Subsystem::B)?);
    let cones = vec![Cone::HermitianPsd(TWO_QUTRITS), Cone::HermitianPsd(TWO_QUTRITS)];
    let problem = ConicProblem { cones: cones.clone(), a, b, c };
    let sol = problem.solve(settings);

    let s = vec_to_herm(block_slices(&cones, &sol.x)[0], TWO_QUTRITS);
    let q = vec_to_herm(block_slices(&cones, &sol.z)[1], TWO_QUTRITS);
    let witness = partial_transpose(&q, Subsystem::B)?;
    let gr = sol.report.primal_value.max(0.0);
    let (sigma, edge) = sigma_and_edge(rho, gr, &s)?;
    Ok(GrResult {
        gr,
        sigma,
        edge,
        witness,
        report: sol.report,
        method: GrMethod::Decomposable,
        decomposition: Vec::new(),
        outer_iterations: 0,
        lower_bound: gr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{eig_hermitian, horodecki_state, max_entangled_state, min_pt_eigenvalue};

    #[test]
    fn max_entangled() {
        let rho = max_entangled_state();
        let r = gr_decomposable(&rho).unwrap();
        assert!(r.report.is_optimal(), "{:?}", r.report);
        assert!((r.gr - 2.0).abs() < 1e-4, "{}", r.gr);
        let w = &r.witness;
        assert!((w.trace_product(rho.matrix()) + r.gr).abs() < 1e-6);
        let q = partial_transpose(w, Subsystem::B).unwrap();
        assert!(eig_hermitian(&q).unwrap().min() >= -1e-8);
        let slack = ComplexMatrix::identity(9).add_scaled(w, -1.0);
        assert!(eig_hermitian(&slack).unwrap().min() >= -1e-8);
        let edge_pt = min_pt_eigenvalue(r.edge.matrix()).unwrap();
        assert!(edge_pt.abs() <= 1e-6, "{edge_pt}");
    }

    #[test]
    fn ppt_input_is_zero() {
        let rho = horodecki_state(0.3).unwrap();
        let r = gr_decomposable(&rho).unwrap();
        assert_eq!(r.gr, 0.0);
        assert_eq!(r.edge, rho);
        assert_eq!(r.sigma, DensityMatrix::maximally_mixed(9));
    }
}
