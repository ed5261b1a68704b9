//! Budgeted random search over pipelines with stratified cross-validation.
//!
//! Candidate `i` is drawn from its own random stream of the search seed, so
//! a larger budget with the same seed evaluates a superset of candidates and
//! the best cross-validated score never decreases with the budget.

use std::collections::BTreeMap;

use log::info;
use qutrit_core::dataset::ClassLabel;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{LearnError, Result};
use crate::estimator::{EstimatorKind, EstimatorSpec, ParamValue};
use crate::matrix::Matrix;
use crate::model::{fit_transformed, output, Candidate, Output, PipelineModel};
use crate::preprocess::Preprocessing;
use crate::task::{Samples, Task};

/// The default search space, frozen with the crate.
pub const DEFAULT_SEARCH_SPACE: &str = include_str!("search_space.toml");

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    Choice(Vec<ParamValue>),
    Uniform([f64; 2]),
    LogUniform([f64; 2]),
    IntRange([i64; 2]),
}

impl Distribution {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Result<ParamValue> {
        Ok(match self {
            Distribution::Choice(v) => v.choose(rng).cloned().ok_or_else(|| LearnError::Invalid("empty choice".into()))?,
            Distribution::Uniform([lo, hi]) => ParamValue::Float(rng.gen_range(*lo..=*hi)),
            Distribution::LogUniform([lo, hi]) => {
                if !(*lo > 0.0 && hi >= lo) {
                    return Err(LearnError::Invalid(format!("log_uniform bounds [{lo}, {hi}]")));
                }
                ParamValue::Float(rng.gen_range(lo.ln()..=hi.ln()).exp())
            }
            Distribution::IntRange([lo, hi]) => ParamValue::Int(rng.gen_range(*lo..=*hi)),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    /// PCA ranks; 0 keeps every feature.
    pub ranks: Vec<usize>,
    pub estimators: BTreeMap<EstimatorKind, BTreeMap<String, Distribution>>,
}

impl SearchSpace {
    pub fn parse(text: &str) -> Result<Self> {
        let space: Self = toml::from_str(text)?;
        if space.ranks.is_empty() || space.estimators.is_empty() {
            return Err(LearnError::Invalid("search space needs at least one rank and one estimator".into()));
        }
        for (kind, params) in &space.estimators {
            if let Some(k) = params.keys().find(|k| !kind.keys().contains(&k.as_str())) {
                return Err(LearnError::Invalid(format!("search space: {kind} has no hyperparameter {k}")));
            }
        }
        Ok(space)
    }

    /// Candidate `id` of the stream keyed by `seed`.
    pub fn candidate(&self, seed: u64, id: u64) -> Result<Candidate> {
        let mut rng = candidate_rng(seed, id);
        let rank = *self.ranks.choose(&mut rng).expect("nonempty ranks");
        let kinds: Vec<&EstimatorKind> = self.estimators.keys().collect();
        let kind = **kinds.choose(&mut rng).expect("nonempty estimators");
        let mut spec = EstimatorSpec::new(kind);
        for (key, dist) in &self.estimators[&kind] {
            spec.params.insert(key.clone(), dist.sample(&mut rng)?);
        }
        Ok(Candidate { rank: (rank > 0).then_some(rank), spec })
    }
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self::parse(DEFAULT_SEARCH_SPACE).expect("built-in search space parses")
    }
}

fn candidate_rng(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Seed handed to the estimator of candidate `id`.
fn fit_seed(seed: u64, id: u64) -> u64 {
    candidate_rng(seed, id).gen::<u64>() ^ 0x5eed
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub budget: usize,
    pub folds: usize,
    pub seed: u64,
    pub space: SearchSpace,
}

impl SearchConfig {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self { budget, folds: 5, seed, space: SearchSpace::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceEntry {
    pub id: u64,
    pub candidate: Candidate,
    /// Mean fold score, or the error that stopped the candidate.
    pub score: std::result::Result<f64, String>,
}

impl std::fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.score {
            Ok(s) => write!(f, "{:>4} {s:.16e} {}", self.id, self.candidate),
            Err(e) => write!(f, "{:>4} failed {} ({e})", self.id, self.candidate),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub model: PipelineModel,
    pub best_id: u64,
    pub trace: Vec<TraceEntry>,
}

impl SearchOutcome {
    pub fn trace_text(&self) -> String {
        self.trace.iter().map(|e| format!("{e}\n")).collect()
    }
}

/// Fold index of every row, stratified by class.
pub fn stratified_folds(labels: &[ClassLabel], folds: usize, seed: u64) -> Vec<usize> {
    let mut fold = vec![0; labels.len()];
    let mut rng = candidate_rng(seed, u64::MAX);
    for class in ClassLabel::ALL {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            fold[i] = k % folds;
        }
    }
    fold
}

/// One fold: validation rows and the transformed matrices for every rank.
struct Fold {
    train: Samples,
    val: Samples,
    /// `(rank, train, val)` after preprocessing fitted on `train`.
    views: Vec<(Option<usize>, Matrix, Matrix)>,
}

fn prepare_folds(rows: &Samples, folds: usize, seed: u64, ranks: &[Option<usize>]) -> Result<Vec<Fold>> {
    let assignment = stratified_folds(&rows.labels, folds, seed);
    let max_rank = ranks.iter().flatten().max().copied();
    (0..folds)
        .into_par_iter()
        .map(|f| {
            let train_idx: Vec<usize> = (0..rows.len()).filter(|&i| assignment[i] != f).collect();
            let val_idx: Vec<usize> = (0..rows.len()).filter(|&i| assignment[i] == f).collect();
            let train = rows.select(&train_idx);
            let val = rows.select(&val_idx);
            let base = Preprocessing::fit(&train.x, max_rank)?;
            let views = ranks
                .iter()
                .map(|&r| {
                    let p = base.truncated(r);
                    Ok((r, p.transform(&train.x)?, p.transform(&val.x)?))
                })
                .collect::<Result<_>>()?;
            Ok(Fold { train, val, views })
        })
        .collect()
}

fn score(task: Task, fold: &Fold, candidate: &Candidate, seed: u64) -> Result<f64> {
    let (_, ztrain, zval) = fold.views.iter().find(|v| v.0 == candidate.rank).expect("prepared rank");
    let fitted = fit_transformed(task, ztrain, &fold.train, &candidate.spec, seed)?;
    let s = match output(task, fitted.predict(zval)?) {
        Output::Labels(pred) => {
            let hits = pred.iter().zip(&fold.val.labels).filter(|(p, t)| p == t).count();
            hits as f64 / pred.len() as f64
        }
        Output::Gr(pred) => -pred.iter().zip(&fold.val.gr).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64,
    };
    if s.is_finite() {
        Ok(s)
    } else {
        Err(LearnError::Numerical(format!("non-finite fold score for {candidate}")))
    }
}

/// Cross-validated score of fixed candidates on the same folds the search
/// uses.
pub fn cross_validate(task: Task, train: &Samples, candidates: &[Candidate], folds: usize, seed: u64) -> Result<Vec<Result<f64>>> {
    train.validate_for_training(task)?;
    let mut ranks: Vec<Option<usize>> = candidates.iter().map(|c| c.rank).collect();
    ranks.sort();
    ranks.dedup();
    let prepared = prepare_folds(train, folds, seed, &ranks)?;
    Ok(candidates
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let scores = prepared.iter().map(|f| score(task, f, c, fit_seed(seed, i as u64))).collect::<Result<Vec<_>>>()?;
            Ok(scores.iter().sum::<f64>() / scores.len() as f64)
        })
        .collect())
}

/// Samples `budget` candidates, scores each by stratified k-fold
/// cross-validation (accuracy, or negative MAE) and refits the best on all
/// training rows.
pub fn auto_search(task: Task, train: &Samples, config: &SearchConfig) -> Result<SearchOutcome> {
    if config.budget == 0 {
        return Err(LearnError::Invalid("search budget must be at least 1".into()));
    }
    if config.folds < 2 {
        return Err(LearnError::Invalid("cross-validation needs at least 2 folds".into()));
    }
    train.validate_for_training(task)?;
    let candidates: Vec<Candidate> =
        (0..config.budget as u64).map(|id| config.space.candidate(config.seed, id)).collect::<Result<_>>()?;
    let mut ranks: Vec<Option<usize>> = candidates.iter().map(|c| c.rank).collect();
    ranks.sort();
    ranks.dedup();
    let folds = prepare_folds(train, config.folds, config.seed, &ranks)?;

    let trace: Vec<TraceEntry> = candidates
        .into_par_iter()
        .enumerate()
        .map(|(id, candidate)| {
            let id = id as u64;
            let seed = fit_seed(config.seed, id);
            let scores: Result<Vec<f64>> = folds.iter().map(|f| score(task, f, &candidate, seed)).collect();
            let score = scores.map(|s| s.iter().sum::<f64>() / s.len() as f64).map_err(|e| e.to_string());
            TraceEntry { id, candidate, score }
        })
        .collect();
    for e in &trace {
        info!("candidate {e}");
    }

    let best = trace
        .iter()
        .filter_map(|e| e.score.as_ref().ok().map(|s| (e, *s)))
        .fold(None::<(&TraceEntry, f64)>, |best, (e, s)| match best {
            Some((_, bs)) if bs >= s => best,
            _ => Some((e, s)),
        });
    let Some((best, best_score)) = best else {
        let text: String = trace.iter().map(|e| format!("{e}\n")).collect();
        return Err(LearnError::SearchFailed(text));
    };
    info!("selected candidate {} with cv score {best_score:.6}", best.id);
    let mut model = PipelineModel::fit(task, train, &best.candidate, fit_seed(config.seed, best.id))?;
    model.cv_score = Some(best_score);
    Ok(SearchOutcome { model, best_id: best.id, trace })
}

/// Fixed single-estimator pipelines with default hyperparameters.
pub fn fixed_baselines() -> Vec<Candidate> {
    EstimatorKind::ALL.iter().map(|&k| Candidate { rank: None, spec: EstimatorSpec::new(k) }).collect()
}
