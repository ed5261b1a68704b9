//! Separability-relative robustness by column generation.

use super::sdp::{block_slices, herm_to_vec, vec_to_herm, Cone, ConicProblem, SdpReport, SdpSettings, SdpStatus};
use super::seesaw::seesaw_local_maxima;
use super::{sigma_and_edge, GrMethod, GrResult, ProductPoint, DEFAULT_EPSILON, ZERO_GR};
use crate::error::{Error, Result};
use super::decomposable::gr_decomposable_with;
use crate::qmat::{is_ppt, ComplexMatrix, DensityMatrix, PPT_TOL, QUTRIT, TWO_QUTRITS};
use crate::sampler::SeedSpec;

const N: usize = TWO_QUTRITS * TWO_QUTRITS;

/// Overlap above which a candidate counts as already in the working set.
const DUPLICATE_OVERLAP: f64 = 1.0 - 1e-9;

#[derive(Clone, Debug)]
pub struct OewSettings {
    /// Entanglement threshold: the state is declared entangled iff `gr > epsilon`.
    pub epsilon: f64,
    /// Also stop once the master value is within `epsilon` of a lower bound:
    /// the PPT-relative robustness, or the see-saw bound confirmed by a
    /// certification pass.
    pub stop_within_epsilon: bool,
    pub max_outer: usize,
    /// A product point violates the witness when `⟨ab|W|ab⟩ > 1 + violation_tol`.
    pub violation_tol: f64,
    pub restarts: usize,
    pub final_restarts: usize,
    pub initial_random: usize,
    /// Most new points added per round.
    pub max_new_points: usize,
    /// Number of see-saw ascents on the decomposable witness used to seed
    /// the working set of an NPT input; zero disables seeding.
    pub decomposable_seeds: usize,
    pub seed: SeedSpec,
    pub sdp: SdpSettings,
}

impl Default for OewSettings {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            stop_within_epsilon: true,
            max_outer: 200,
            violation_tol: 1e-7,
            restarts: 20,
            final_restarts: 100,
            initial_random: 50,
            max_new_points: 50,
            decomposable_seeds: 100,
            seed: SeedSpec::default(),
            sdp: SdpSettings::default(),
        }
    }
}

/// Solution of the master problem over a fixed working set.
#[derive(Clone, Debug)]
pub struct MasterSolution {
    /// Mixture weights, one per working-set point.
    pub q: Vec<f64>,
    /// Slack `Σ q_k π_k − ρ`.
    pub slack: ComplexMatrix,
    /// Dual witness.
    pub witness: ComplexMatrix,
    pub report: SdpReport,
    /// `⟨x, z⟩` of the final iterate.
    pub complementarity: f64,
}

impl MasterSolution {
    /// `Σ q − 1`.
    pub fn gr(&self) -> f64 {
        self.q.iter().sum::<f64>() - 1.0
    }
}

/// Minimizes `Σ q_k − 1` over `q ≥ 0` with `Σ q_k π_k ⪰ ρ`.
pub fn solve_master(points: &[ProductPoint], rho: &DensityMatrix, settings: &SdpSettings) -> Result<MasterSolution> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("master problem needs at least one product point".into()));
    }
    let k = points.len();
    let n = k + N;
    let vecs: Vec<Vec<f64>> = points.iter().map(|p| herm_to_vec(p.projector())).collect();
    let mut a = vec![0.0; N * n];
    for i in 0..N {
        let row = &mut a[i * n..(i + 1) * n];
        for (j, v) in vecs.iter().enumerate() {
            row[j] = v[i];
        }
        row[k + i] = -1.0;
    }
    let mut c = vec![0.0; n];
    c[..k].iter_mut().for_each(|v| *v = 1.0);
    let cones = vec![Cone::NonNegative(k), Cone::HermitianPsd(TWO_QUTRITS)];
    let problem = ConicProblem { cones: cones.clone(), a, b: herm_to_vec(rho.matrix()), c };
    let sol = problem.solve(settings);
    let parts = block_slices(&cones, &sol.x);
    Ok(MasterSolution {
        q: parts[0].to_vec(),
        slack: vec_to_herm(parts[1], TWO_QUTRITS),
        witness: vec_to_herm(&sol.y, TWO_QUTRITS),
        complementarity: sol.complementarity(),
        report: sol.report,
    })
}

/// Column generation for the separability-relative robustness with default
/// settings and the given threshold.
pub fn gr_eps_oew(rho: &DensityMatrix, epsilon: f64) -> Result<GrResult> {
    gr_eps_oew_with(rho, &OewSettings { epsilon, ..OewSettings::default() })
}

fn initial_points(count: usize, seed: SeedSpec) -> Vec<ProductPoint> {
    let mut pts = Vec::with_capacity(TWO_QUTRITS + count);
    for i in 0..QUTRIT {
        for j in 0..QUTRIT {
            pts.push(ProductPoint::computational(i, j));
        }
    }
    let mut g = seed.gaussians();
    pts.extend((0..count).map(|_| ProductPoint::random_from(&mut g)));
    pts
}

fn is_new(p: &ProductPoint, set: &[ProductPoint]) -> bool {
    set.iter().all(|s| s.overlap(p) < DUPLICATE_OVERLAP)
}

/// Distinct violating local maxima, strongest first, and the best value seen.
fn violators(
    w: &ComplexMatrix,
    restarts: usize,
    seed: SeedSpec,
    threshold: f64,
    limit: usize,
    set: &[ProductPoint],
) -> Result<(Vec<ProductPoint>, f64)> {
    let mut found = seesaw_local_maxima(w, restarts, seed)?;
    let best = found.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
    found.retain(|(_, v)| *v > threshold);
    found.sort_by(|x, y| y.1.total_cmp(&x.1));
    let mut out: Vec<ProductPoint> = Vec::new();
    for (p, _) in found {
        if out.len() == limit {
            break;
        }
        if is_new(&p, set) && is_new(&p, &out) {
            out.push(p);
        }
    }
    Ok((out, best))
}

/// Lower bound on the robustness from the master dual value and the largest
/// product-state expectation `v` of its witness: `W/v` is feasible.
fn seesaw_lower_bound(master: &MasterSolution, v: f64) -> f64 {
    if v <= 1.0 {
        master.report.dual_value - 1.0
    } else {
        master.report.dual_value / v - 1.0
    }
}

/// Column generation with explicit settings.
pub fn gr_eps_oew_with(rho: &DensityMatrix, settings: &OewSettings) -> Result<GrResult> {
    if rho.dim() != TWO_QUTRITS {
        return Err(Error::Dimension { expected: TWO_QUTRITS, got: rho.dim() });
    }
    if !(settings.epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", settings.epsilon)));
    }
    let mut random = settings.initial_random;
    let mut points = initial_points(random, settings.seed.derive(0));
    let mut master = solve_master(&points, rho, &settings.sdp)?;
    while master.report.status == SdpStatus::PrimalInfeasible && random < 64 * settings.initial_random.max(1) {
        random = 2 * random.max(1);
        log::debug!("master infeasible, retrying with {random} random points");
        points = initial_points(random, settings.seed.derive(0));
        master = solve_master(&points, rho, &settings.sdp)?;
    }

    // The PPT-relative robustness is a rigorous lower bound. For NPT inputs
    // its witness also marks where the separable edge is likely supported.
    let mut lower_ppt = 0.0;
    if !is_ppt(rho, PPT_TOL)? {
        let dec = gr_decomposable_with(rho, &settings.sdp)?;
        if dec.report.is_optimal() {
            lower_ppt = dec.report.primal_value.min(dec.report.dual_value).max(0.0);
            if settings.decomposable_seeds > 0 {
                let hint = ComplexMatrix::identity(TWO_QUTRITS).add_scaled(&dec.witness, -1.0);
                let seeds = seesaw_local_maxima(&hint, settings.decomposable_seeds, settings.seed.derive(1 << 32))?;
                for (p, _) in seeds {
                    if is_new(&p, &points) {
                        points.push(p);
                    }
                }
                master = solve_master(&points, rho, &settings.sdp)?;
            }
        }
    }

    let threshold = 1.0 + settings.violation_tol;
    let limit = settings.max_new_points;
    let mut lower = lower_ppt;
    let mut rounds = 0;
    let mut capped = true;
    while rounds < settings.max_outer {
        rounds += 1;
        if !master.report.is_optimal() {
            capped = false;
            break;
        }
        let upper = master.gr();
        let within = |lower: f64| settings.stop_within_epsilon && upper - lower <= settings.epsilon;
        if within(lower_ppt) {
            lower = lower_ppt;
            capped = false;
            break;
        }
        let round_seed = settings.seed.derive(rounds as u64);
        let (mut new, mut best) = violators(&master.witness, settings.restarts, round_seed, threshold, limit, &points)?;
        let mut round_lower = seesaw_lower_bound(&master, best).max(lower_ppt);
        if new.is_empty() || within(round_lower) {
            // certification pass
            let seed = round_seed.derive(u64::MAX);
            let (more, v) = violators(&master.witness, settings.final_restarts, seed, threshold, limit, &points)?;
            best = best.max(v);
            round_lower = seesaw_lower_bound(&master, best).max(lower_ppt);
            for p in more {
                if new.len() < limit && is_new(&p, &new) {
                    new.push(p);
                }
            }
            if new.is_empty() || within(round_lower) {
                lower = round_lower;
                capped = false;
                break;
            }
        }
        lower = round_lower;
        log::trace!("oew round {rounds}: upper={upper:.10e} lower={lower:.10e} |K|={} new={}", points.len(), new.len());
        points.extend(new);
        master = solve_master(&points, rho, &settings.sdp)?;
    }

    let mut report = master.report.clone();
    if capped && report.is_optimal() {
        report.status = SdpStatus::IterationCap;
    }
    finish(rho, points, master, report, rounds, lower)
}

fn finish(
    rho: &DensityMatrix,
    points: Vec<ProductPoint>,
    master: MasterSolution,
    report: SdpReport,
    rounds: usize,
    lower: f64,
) -> Result<GrResult> {
    let gr = master.gr().max(0.0);
    let total: f64 = master.q.iter().map(|q| q.max(0.0)).sum();
    let decomposition: Vec<(ProductPoint, f64)> =
        points.into_iter().zip(&master.q).map(|(p, &q)| (p, q.max(0.0) / total)).collect();
    let (sigma, edge) = if gr <= ZERO_GR {
        (DensityMatrix::maximally_mixed(TWO_QUTRITS), rho.clone())
    } else {
        let (sigma, _) = sigma_and_edge(rho, gr, &master.slack)?;
        let mut mix = ComplexMatrix::zeros(TWO_QUTRITS);
        for (p, w) in &decomposition {
            mix = mix.add_scaled(p.projector(), *w);
        }
        (sigma, DensityMatrix::normalized(&mix)?)
    };
    Ok(GrResult {
        gr,
        sigma,
        edge,
        witness: master.witness,
        report,
        method: GrMethod::EpsOew,
        decomposition,
        outer_iterations: rounds,
        lower_bound: lower.clamp(0.0, gr),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::max_entangled_state;
    use crate::sampler::random_density_hs;

    #[test]
    fn exact_product_representation() {
        let p = ProductPoint::random(SeedSpec::new(9, 1));
        let rho = DensityMatrix::new(p.projector().clone()).unwrap();
        let m = solve_master(std::slice::from_ref(&p), &rho, &SdpSettings::default()).unwrap();
        assert!(m.report.is_optimal(), "{:?}", m.report);
        assert!((m.q[0] - 1.0).abs() < 1e-6);
        assert!(m.gr().abs() < 1e-6);
    }

    #[test]
    fn master_certificates_on_random_instances() {
        let pts = initial_points(50, SeedSpec::new(5, 0));
        for s in 0..20 {
            let rho = random_density_hs(9, SeedSpec::new(77, s)).unwrap();
            let m = solve_master(&pts, &rho, &SdpSettings::default()).unwrap();
            assert!(m.report.is_optimal(), "{:?}", m.report);
            assert!(m.report.relative_gap() <= 1e-7);
            assert!(m.complementarity.abs() <= 1e-6, "{}", m.complementarity);
            for p in &pts {
                assert!(p.expectation(&m.witness) <= 1.0 + 1e-8);
            }
        }
    }

    #[test]
    fn empty_working_set_is_rejected() {
        let rho = DensityMatrix::maximally_mixed(9);
        assert!(matches!(solve_master(&[], &rho, &SdpSettings::default()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn max_entangled_robustness() {
        let r = gr_eps_oew(&max_entangled_state(), DEFAULT_EPSILON).unwrap();
        assert!(r.report.is_optimal(), "{:?}", r.report);
        assert!((r.gr - 2.0).abs() < 1e-3, "{}", r.gr);
    }
}
