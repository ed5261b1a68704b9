//! Labeled datasets of random two-qutrit states.
//!
//! States are labeled SEP, PPTES or NPT from the PPT test and the
//! separability-relative robustness. PPTES are rare among random draws, so
//! the class is topped up with artificial states built halfway between the
//! separable and PPT edge states of an NPT draw.

mod features;
mod generate;
mod io;
mod split;
mod stats;

use std::fmt;
use std::str::FromStr;

pub use self::features::{expand, featurize, Standardizer, EXPANDED_LEN};
pub use self::generate::{generate_balanced, GenerateConfig, GeneratedDataset};
pub use self::io::{
    expanded_header, load_dataset, load_features, load_tomograms, read_manifest, save_dataset, save_features, states_header,
    verify_dataset, write_manifest, Dataset, DatasetManifest, FeatureTable, Row, VerifyReport, FORMAT_VERSION,
    MANIFEST_FILE, ORIGINS_FILE, REJECTIONS_FILE, STATES_FILE,
};
pub use self::split::split;
pub use self::stats::{fidelity_stats, mean_pairwise_fidelity, FidelityStats, MeanFidelity};
use crate::error::{Error, Result};
use crate::qmat::{is_ppt, DensityMatrix, PPT_TOL};
use crate::sampler::SeedSpec;
use crate::witness::{
    edge_states_distinct, gr_decomposable_with, gr_eps_oew_with, GrMethod, GrResult, OewSettings, SdpStatus,
};

/// Seed domain of the witness computations attached to a state.
const WITNESS_DOMAIN: u64 = 0x5749_544e;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassLabel {
    Sep,
    Pptes,
    Npt,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 3] = [ClassLabel::Sep, ClassLabel::Pptes, ClassLabel::Npt];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassLabel::Sep => "SEP",
            ClassLabel::Pptes => "PPTES",
            ClassLabel::Npt => "NPT",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "SEP" => Ok(ClassLabel::Sep),
            "PPTES" => Ok(ClassLabel::Pptes),
            "NPT" => Ok(ClassLabel::Npt),
            other => Err(Error::Format(format!("unknown class label {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Origin {
    Random,
    ArtificialPptes,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Random => "random",
            Origin::ArtificialPptes => "artificial",
        }
    }
}

impl FromStr for Origin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Origin::Random),
            "artificial" => Ok(Origin::ArtificialPptes),
            other => Err(Error::Format(format!("unknown origin {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledState {
    pub rho: DensityMatrix,
    pub label: ClassLabel,
    pub gr: f64,
    pub origin: Origin,
    /// Seed the state was drawn from.
    pub seed_trace: SeedSpec,
}

impl LabeledState {
    /// Checks the label against the PPT test and the robustness threshold.
    pub fn check(&self, epsilon: f64) -> Result<()> {
        let ppt = is_ppt(&self.rho, PPT_TOL)?;
        let fail = |msg: String| Err(Error::InvalidState(format!("{} row: {msg}", self.label)));
        if !(self.gr >= 0.0) {
            return fail(format!("negative robustness {}", self.gr));
        }
        match self.label {
            ClassLabel::Npt if ppt => fail("state is PPT".into()),
            ClassLabel::Sep | ClassLabel::Pptes if !ppt => fail("state is NPT".into()),
            ClassLabel::Sep if self.gr > epsilon => fail(format!("gr {} above epsilon", self.gr)),
            ClassLabel::Pptes | ClassLabel::Npt if self.gr <= epsilon => fail(format!("gr {} not above epsilon", self.gr)),
            _ => Ok(()),
        }
    }
}

/// Why a state was not labeled.
#[derive(Clone, Debug, PartialEq)]
pub enum RejectReason {
    Solver { method: GrMethod, status: SdpStatus },
    /// NPT input whose robustness did not exceed epsilon.
    NptBelowEpsilon { gr: f64 },
    /// Separable and PPT edges within the distinctness threshold.
    CoincidentEdges { distance: f64 },
    /// Artificial mixture failing the PPT check.
    NotPpt { min_pt_eigenvalue: f64 },
    /// Artificial mixture whose robustness did not exceed epsilon.
    NotCertified { gr: f64 },
    Numerical(String),
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::Solver { method, status } => write!(f, "solver {method:?} status {status:?}"),
            RejectReason::NptBelowEpsilon { gr } => write!(f, "npt gr {gr:e} not above epsilon"),
            RejectReason::CoincidentEdges { distance } => write!(f, "coincident edges distance {distance:e}"),
            RejectReason::NotPpt { min_pt_eigenvalue } => write!(f, "mixture not ppt {min_pt_eigenvalue:e}"),
            RejectReason::NotCertified { gr } => write!(f, "mixture gr {gr:e} not above epsilon"),
            RejectReason::Numerical(msg) => write!(f, "numerical {msg}"),
        }
    }
}

impl RejectReason {
    /// Short key used for counting in the manifest.
    pub fn kind(&self) -> &'static str {
        match self {
            RejectReason::Solver { .. } => "solver",
            RejectReason::NptBelowEpsilon { .. } => "npt_below_epsilon",
            RejectReason::CoincidentEdges { .. } => "coincident_edges",
            RejectReason::NotPpt { .. } => "not_ppt",
            RejectReason::NotCertified { .. } => "not_certified",
            RejectReason::Numerical(_) => "numerical",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rejection {
    pub seed: SeedSpec,
    pub origin: Origin,
    pub reason: RejectReason,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.seed.master_seed, self.seed.stream_index, self.origin.as_str(), self.reason)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Labeling {
    Labeled(LabeledState),
    Rejected(Rejection),
}

impl Labeling {
    pub fn labeled(self) -> Option<LabeledState> {
        match self {
            Labeling::Labeled(s) => Some(s),
            Labeling::Rejected(_) => None,
        }
    }
}

/// Witness settings for the state drawn from `seed`.
fn witness_settings(base: &OewSettings, seed: SeedSpec) -> OewSettings {
    OewSettings { seed: seed.derive(WITNESS_DOMAIN), ..base.clone() }
}

fn usable(r: &GrResult) -> std::result::Result<(), RejectReason> {
    if r.report.is_optimal() {
        Ok(())
    } else {
        Err(RejectReason::Solver { method: r.method, status: r.report.status })
    }
}

fn numerical(e: Error) -> RejectReason {
    RejectReason::Numerical(e.to_string())
}

/// Labels a randomly drawn state with the default settings.
pub fn label_random_state(rho: &DensityMatrix, epsilon: f64) -> Result<Labeling> {
    let settings = OewSettings { epsilon, ..OewSettings::default() };
    label_state(rho, SeedSpec::default(), &settings)
}

/// NPT states are labeled NPT; PPT states are SEP or PPTES by their
/// robustness. `seed` is recorded as the state's trace and keys the witness
/// computation.
pub fn label_state(rho: &DensityMatrix, seed: SeedSpec, settings: &OewSettings) -> Result<Labeling> {
    let ppt = is_ppt(rho, PPT_TOL)?;
    let reject = |reason| Labeling::Rejected(Rejection { seed, origin: Origin::Random, reason });
    let r = match gr_eps_oew_with(rho, &witness_settings(settings, seed)) {
        Ok(r) => r,
        Err(e) => return Ok(reject(numerical(e))),
    };
    if let Err(reason) = usable(&r) {
        return Ok(reject(reason));
    }
    let entangled = r.gr > settings.epsilon;
    let label = match (ppt, entangled) {
        (false, true) => ClassLabel::Npt,
        (false, false) => return Ok(reject(RejectReason::NptBelowEpsilon { gr: r.gr })),
        (true, true) => ClassLabel::Pptes,
        (true, false) => ClassLabel::Sep,
    };
    Ok(Labeling::Labeled(LabeledState { rho: rho.clone(), label, gr: r.gr, origin: Origin::Random, seed_trace: seed }))
}

/// Artificial PPTES from an NPT state with the default settings.
pub fn make_artificial_pptes(rho_npt: &DensityMatrix, epsilon: f64) -> Result<Labeling> {
    let settings = OewSettings { epsilon, ..OewSettings::default() };
    artificial_pptes(rho_npt, SeedSpec::default(), &settings)
}

/// `δ = ½ξ^PPT + ½ξ^SEP` from the two edge states of an NPT state, kept
/// when the edges differ and `δ` is certified entangled.
pub fn artificial_pptes(rho_npt: &DensityMatrix, seed: SeedSpec, settings: &OewSettings) -> Result<Labeling> {
    if is_ppt(rho_npt, PPT_TOL)? {
        return Err(Error::InvalidArgument("artificial PPTES need an NPT input".into()));
    }
    let reject = |reason| Labeling::Rejected(Rejection { seed, origin: Origin::ArtificialPptes, reason });
    let witness = witness_settings(settings, seed);
    let attempt = || -> std::result::Result<LabeledState, RejectReason> {
        let sep = gr_eps_oew_with(rho_npt, &witness).map_err(numerical)?;
        usable(&sep)?;
        let ppt = gr_decomposable_with(rho_npt, &witness.sdp).map_err(numerical)?;
        usable(&ppt)?;
        if !edge_states_distinct(&sep.edge, &ppt.edge).map_err(numerical)? {
            let distance = crate::qmat::trace_distance(sep.edge.matrix(), ppt.edge.matrix()).map_err(numerical)?;
            return Err(RejectReason::CoincidentEdges { distance });
        }
        let delta = ppt.edge.mix(&sep.edge, 0.5).map_err(numerical)?;
        if !is_ppt(&delta, PPT_TOL).map_err(numerical)? {
            let min = crate::qmat::min_pt_eigenvalue(delta.matrix()).map_err(numerical)?;
            return Err(RejectReason::NotPpt { min_pt_eigenvalue: min });
        }
        let certify = OewSettings { seed: witness.seed.derive(1), ..witness.clone() };
        let r = gr_eps_oew_with(&delta, &certify).map_err(numerical)?;
        usable(&r)?;
        if r.gr <= settings.epsilon {
            return Err(RejectReason::NotCertified { gr: r.gr });
        }
        Ok(LabeledState { rho: delta, label: ClassLabel::Pptes, gr: r.gr, origin: Origin::ArtificialPptes, seed_trace: seed })
    };
    Ok(match attempt() {
        Ok(s) => Labeling::Labeled(s),
        Err(reason) => reject(reason),
    })
}
