//! Balanced dataset generation.
//!
//! Two independent streams feed the dataset. The random stream draws
//! `SeedSpec::new(master, i)` for `i = 0, 1, …` and fills the SEP and NPT
//! quotas and the natural share of PPTES. The artificial stream draws NPT
//! states from `SeedSpec::new(master, j).derive(ARTIFICIAL_DOMAIN)` and turns
//! them into artificial PPTES.
//!
//! Candidates are labeled in batches, in parallel, and accepted in stream
//! order. A batch holds at most as many PPT and NPT draws as their classes
//! still need; its composition depends only on the quotas left before it, so
//! the output is the same for any number of worker threads.

use std::collections::{BTreeMap, VecDeque};

use log::{debug, info};
use rayon::prelude::*;

use super::io::{Dataset, DatasetManifest, Row, FORMAT_VERSION};
use super::stats::fidelity_stats;
use super::{artificial_pptes, label_state, ClassLabel, LabeledState, Labeling, Origin, Rejection};
use crate::error::{Error, Result};
use crate::qmat::{is_ppt, DensityMatrix, PPT_TOL, TWO_QUTRITS};
use crate::sampler::{random_density_hs, SeedSpec};
use crate::witness::{OewSettings, DEFAULT_EPSILON};

const ARTIFICIAL_DOMAIN: u64 = 0x4152_5446;

/// Random-stream draws PPT-screened per parallel chunk.
const SCREEN_CHUNK: u64 = 4096;

#[derive(Clone, Debug)]
pub struct GenerateConfig {
    pub per_class: usize,
    /// Share of the PPTES class built artificially.
    pub artificial_fraction: f64,
    pub epsilon: f64,
    pub master_seed: u64,
    /// Budget of random-stream draws.
    pub max_draws: u64,
    /// Budget of NPT draws spent on artificial PPTES.
    pub max_artificial_attempts: u64,
    /// Candidates labeled per batch.
    pub batch: usize,
    /// Witness settings; the seed is replaced per state.
    pub oew: OewSettings,
}

impl GenerateConfig {
    pub fn new(per_class: usize, master_seed: u64) -> Self {
        let n = per_class as u64;
        Self {
            per_class,
            artificial_fraction: 0.5,
            epsilon: DEFAULT_EPSILON,
            master_seed,
            max_draws: (100_000 * n).max(1_000_000),
            max_artificial_attempts: (10 * n).max(100),
            batch: 16,
            oew: OewSettings::default(),
        }
    }

    /// Artificial PPTES quota `round(N·fraction)`.
    pub fn artificial_quota(&self) -> usize {
        (self.per_class as f64 * self.artificial_fraction).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if self.per_class == 0 {
            return Err(Error::InvalidArgument("per-class target must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.artificial_fraction) {
            return Err(Error::InvalidArgument(format!("artificial fraction {} outside [0, 1]", self.artificial_fraction)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon {} must be positive", self.epsilon)));
        }
        if self.batch == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct GeneratedDataset {
    /// Random-stream states in stream order, then artificial PPTES.
    pub states: Vec<LabeledState>,
    pub manifest: DatasetManifest,
    pub rejections: Vec<Rejection>,
}

impl GeneratedDataset {
    pub fn to_dataset(&self) -> Dataset {
        Dataset {
            rows: self.states.iter().map(Row::from).collect(),
            manifest: self.manifest.clone(),
            rejections: self.rejections.iter().map(|r| r.to_string()).collect(),
        }
    }
}

struct Tally {
    counts: [usize; 3],
    quota: [usize; 3],
    natural_pptes_quota: usize,
    natural_pptes: usize,
    rejections: Vec<Rejection>,
    rejection_counts: BTreeMap<String, u64>,
}

impl Tally {
    fn remaining(&self, label: ClassLabel) -> usize {
        self.quota[label.index()] - self.counts[label.index()]
    }

    /// PPT states still wanted: SEP plus natural PPTES.
    fn ppt_room(&self) -> usize {
        self.remaining(ClassLabel::Sep) + (self.natural_pptes_quota - self.natural_pptes)
    }

    fn reject(&mut self, r: Rejection) {
        debug!("rejected {r}");
        *self.rejection_counts.entry(r.reason.kind().to_string()).or_default() += 1;
        self.rejections.push(r);
    }
}

/// Labels HS-random states until every class holds `per_class` states, half
/// (by default) of the PPTES being artificial. If a budget runs out the
/// partial dataset is returned with `manifest.complete = false`.
pub fn generate_balanced(config: &GenerateConfig) -> Result<GeneratedDataset> {
    config.validate()?;
    let n = config.per_class;
    let artificial_quota = config.artificial_quota();
    let mut tally = Tally {
        counts: [0; 3],
        quota: [n; 3],
        natural_pptes_quota: n - artificial_quota,
        natural_pptes: 0,
        rejections: Vec::new(),
        rejection_counts: BTreeMap::new(),
    };
    let settings = OewSettings { epsilon: config.epsilon, ..config.oew.clone() };
    let mut states = Vec::new();

    // random stream
    let (mut raw_draws, mut ppt_draws, mut pptes_draws) = (0u64, 0u64, 0u64);
    let mut screened: VecDeque<(u64, bool)> = VecDeque::new();
    let mut screened_to = 0u64;
    while (tally.remaining(ClassLabel::Npt) > 0 || tally.ppt_room() > 0) && raw_draws < config.max_draws {
        let npt_room = tally.remaining(ClassLabel::Npt);
        let ppt_room = tally.ppt_room();
        let size = config.batch.min(npt_room + ppt_room);
        let mut batch: Vec<(SeedSpec, DensityMatrix)> = Vec::with_capacity(size);
        let (mut npt_in_batch, mut ppt_in_batch) = (0, 0);
        while batch.len() < size && raw_draws < config.max_draws {
            if screened.is_empty() {
                let end = (screened_to + SCREEN_CHUNK).min(config.max_draws);
                let chunk: Vec<(u64, bool)> = (screened_to..end)
                    .into_par_iter()
                    .map(|i| {
                        let rho = random_density_hs(TWO_QUTRITS, SeedSpec::new(config.master_seed, i))?;
                        Ok((i, is_ppt(&rho, PPT_TOL)?))
                    })
                    .collect::<Result<_>>()?;
                screened.extend(chunk);
                screened_to = end;
            }
            let (i, ppt) = screened.pop_front().expect("screened draws");
            raw_draws += 1;
            let take = if ppt {
                ppt_draws += 1;
                ppt_in_batch < ppt_room
            } else {
                npt_in_batch < npt_room
            };
            if take {
                npt_in_batch += usize::from(!ppt);
                ppt_in_batch += usize::from(ppt);
                let seed = SeedSpec::new(config.master_seed, i);
                batch.push((seed, random_density_hs(TWO_QUTRITS, seed)?));
            }
        }
        let labeled: Vec<Labeling> =
            batch.par_iter().map(|(seed, rho)| label_state(rho, *seed, &settings)).collect::<Result<_>>()?;
        for outcome in labeled {
            match outcome {
                Labeling::Rejected(r) => tally.reject(r),
                Labeling::Labeled(s) => {
                    let accept = match s.label {
                        ClassLabel::Pptes => {
                            pptes_draws += 1;
                            tally.natural_pptes < tally.natural_pptes_quota
                        }
                        other => tally.remaining(other) > 0,
                    };
                    if accept {
                        if s.label == ClassLabel::Pptes {
                            tally.natural_pptes += 1;
                        }
                        tally.counts[s.label.index()] += 1;
                        states.push(s);
                    }
                }
            }
        }
        info!(
            "draws {raw_draws}: SEP {} PPTES {} NPT {} (ppt draws {ppt_draws})",
            tally.counts[0], tally.counts[1], tally.counts[2]
        );
    }

    // artificial stream
    let mut attempts = 0u64;
    let mut draw = 0u64;
    let mut artificial = 0usize;
    while artificial < artificial_quota && attempts < config.max_artificial_attempts {
        let size = config.batch.min(2 * (artificial_quota - artificial));
        let mut batch = Vec::with_capacity(size);
        while batch.len() < size && attempts < config.max_artificial_attempts {
            let seed = SeedSpec::new(config.master_seed, draw).derive(ARTIFICIAL_DOMAIN);
            draw += 1;
            let rho = random_density_hs(TWO_QUTRITS, seed)?;
            if !is_ppt(&rho, PPT_TOL)? {
                attempts += 1;
                batch.push((seed, rho));
            }
        }
        let made: Vec<Labeling> =
            batch.par_iter().map(|(seed, rho)| artificial_pptes(rho, *seed, &settings)).collect::<Result<_>>()?;
        for outcome in made {
            match outcome {
                Labeling::Rejected(r) => tally.reject(r),
                Labeling::Labeled(s) if artificial < artificial_quota => {
                    artificial += 1;
                    tally.counts[ClassLabel::Pptes.index()] += 1;
                    states.push(s);
                }
                Labeling::Labeled(_) => {}
            }
        }
        info!("artificial attempts {attempts}: {artificial}/{artificial_quota} PPTES");
    }

    let complete = tally.counts.iter().all(|&c| c == n) && artificial == artificial_quota;
    if !complete {
        log::warn!("draw budget exhausted with counts {:?} of {n}", tally.counts);
    }
    let fidelity = fidelity_stats(&states)?;
    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        master_seed: config.master_seed,
        target_per_class: n,
        artificial_fraction: config.artificial_fraction,
        epsilon: config.epsilon,
        counts: tally.counts,
        artificial_pptes: states.iter().filter(|s| s.origin == Origin::ArtificialPptes).count(),
        raw_draws,
        ppt_draws,
        pptes_draws,
        artificial_attempts: attempts,
        rejections: tally.rejection_counts,
        complete,
        fidelity,
    };
    Ok(GeneratedDataset { states, manifest, rejections: tally.rejections })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        let mut c = GenerateConfig::new(0, 1);
        assert!(generate_balanced(&c).is_err());
        c.per_class = 2;
        c.artificial_fraction = 1.5;
        assert!(generate_balanced(&c).is_err());
        assert_eq!(GenerateConfig::new(5, 1).artificial_quota(), 3);
        assert_eq!(GenerateConfig::new(300, 1).artificial_quota(), 150);
    }

    #[test]
    fn exhausted_budget_gives_partial_manifest() {
        let mut c = GenerateConfig::new(2, 11);
        c.max_draws = 4;
        c.max_artificial_attempts = 0;
        let out = generate_balanced(&c).unwrap();
        assert!(!out.manifest.complete);
        assert_eq!(out.manifest.raw_draws, 4);
        assert!(out.manifest.count(ClassLabel::Pptes) == 0);
        for s in &out.states {
            s.check(c.epsilon).unwrap();
        }
    }
}
