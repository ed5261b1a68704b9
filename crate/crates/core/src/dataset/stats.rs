//! Mean pairwise fidelities.

use rayon::prelude::*;

use super::{ClassLabel, LabeledState};
use crate::error::{Error, Result};
use crate::qmat::{fidelity_from_sqrt, ComplexMatrix, DensityMatrix};

/// Pairwise means of the fidelity `F` and of its square root `√F`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanFidelity {
    pub squared: f64,
    pub root: f64,
}

/// Mean fidelity over the whole sample and within each class. `None` where a
/// group has fewer than two states.
#[derive(Clone, Debug, PartialEq)]
pub struct FidelityStats {
    pub sample: Option<MeanFidelity>,
    /// Indexed by [`ClassLabel::index`].
    pub per_class: [Option<MeanFidelity>; 3],
}

impl FidelityStats {
    pub fn class(&self, label: ClassLabel) -> Option<MeanFidelity> {
        self.per_class[label.index()]
    }
}

/// Means of `F(ρ_i, ρ_j)` and `√F(ρ_i, ρ_j)` over unordered pairs `i < j`.
pub fn mean_pairwise_fidelity(states: &[&DensityMatrix]) -> Result<MeanFidelity> {
    let n = states.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("pairwise fidelity needs at least two states, got {n}")));
    }
    let roots: Vec<ComplexMatrix> =
        states.par_iter().map(|s| s.matrix().sqrt_psd()).collect::<Result<_>>()?;
    // per-row sums in a fixed order keep the total independent of scheduling
    let rows: Vec<(f64, f64)> = (0..n - 1)
        .into_par_iter()
        .map(|i| {
            let mut acc = (0.0, 0.0);
            for other in &states[i + 1..] {
                let f = fidelity_from_sqrt(&roots[i], other.matrix())?;
                acc.0 += f;
                acc.1 += f.max(0.0).sqrt();
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let pairs = (n * (n - 1) / 2) as f64;
    Ok(MeanFidelity {
        squared: rows.iter().map(|r| r.0).sum::<f64>() / pairs,
        root: rows.iter().map(|r| r.1).sum::<f64>() / pairs,
    })
}

pub fn fidelity_stats(states: &[LabeledState]) -> Result<FidelityStats> {
    let group = |label: Option<ClassLabel>| -> Result<Option<MeanFidelity>> {
        let members: Vec<&DensityMatrix> =
            states.iter().filter(|s| label.map_or(true, |l| s.label == l)).map(|s| &s.rho).collect();
        if members.len() < 2 {
            Ok(None)
        } else {
            mean_pairwise_fidelity(&members).map(Some)
        }
    };
    Ok(FidelityStats {
        sample: group(None)?,
        per_class: [group(Some(ClassLabel::Sep))?, group(Some(ClassLabel::Pptes))?, group(Some(ClassLabel::Npt))?],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{fidelity, max_entangled_state};
    use crate::sampler::{random_density_hs, SeedSpec};

    #[test]
    fn identical_states_have_unit_mean() {
        let rho = random_density_hs(9, SeedSpec::new(1, 2)).unwrap();
        let f = mean_pairwise_fidelity(&[&rho, &rho, &rho]).unwrap();
        assert!((f.squared - 1.0).abs() < 1e-9 && (f.root - 1.0).abs() < 1e-9, "{f:?}");
        assert!(mean_pairwise_fidelity(&[&rho]).is_err());
    }

    #[test]
    fn matches_direct_pairwise_loop() {
        let states: Vec<DensityMatrix> =
            (0..5).map(|i| random_density_hs(9, SeedSpec::new(3, i)).unwrap()).chain([max_entangled_state()]).collect();
        let refs: Vec<&DensityMatrix> = states.iter().collect();
        let (mut total, mut roots, mut count) = (0.0, 0.0, 0.0);
        for i in 0..states.len() {
            for j in i + 1..states.len() {
                let f = fidelity(&states[i], &states[j]).unwrap();
                total += f;
                roots += f.sqrt();
                count += 1.0;
            }
        }
        let mean = mean_pairwise_fidelity(&refs).unwrap();
        assert!((mean.squared - total / count).abs() < 1e-12);
        assert!((mean.root - roots / count).abs() < 1e-12);
        assert!(mean.root >= mean.squared);
    }
}
