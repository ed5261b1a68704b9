//! Fitted pipelines and their on-disk container.

use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use qutrit_core::dataset::ClassLabel;
use serde::{Deserialize, Serialize};

use crate::error::{LearnError, Result};
use crate::estimator::{self, EstimatorSpec, Fitted, Predictions};
use crate::matrix::Matrix;
use crate::preprocess::Preprocessing;
use crate::task::{Samples, Targets, Task};

pub const MODEL_FORMAT: &str = "qutrit-pipeline";
pub const MODEL_VERSION: u32 = 1;

/// Preprocessing rank and estimator settings of one pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// Principal components kept; `None` keeps every z-scored feature.
    pub rank: Option<usize>,
    pub spec: EstimatorSpec,
}

impl std::fmt::Display for Candidate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.rank {
            Some(r) => write!(f, "pca={r} {}", self.spec),
            None => write!(f, "pca=none {}", self.spec),
        }
    }
}

/// Model outputs: class labels or clamped robustness estimates.
#[derive(Clone, Debug, PartialEq)]
pub enum Output {
    Labels(Vec<ClassLabel>),
    Gr(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineModel {
    pub format: String,
    pub format_version: u32,
    pub task: Task,
    pub candidate: Candidate,
    pub seed: u64,
    pub preprocessing: Preprocessing,
    pub estimator: Fitted,
    /// Cross-validated accuracy, or negative MAE for regression.
    pub cv_score: Option<f64>,
}

impl PipelineModel {
    /// Fits preprocessing and estimator on the training rows only.
    pub fn fit(task: Task, train: &Samples, candidate: &Candidate, seed: u64) -> Result<Self> {
        train.validate_for_training(task)?;
        let preprocessing = Preprocessing::fit(&train.x, candidate.rank)?;
        let z = preprocessing.transform(&train.x)?;
        let estimator = fit_transformed(task, &z, train, &candidate.spec, seed)?;
        Ok(Self {
            format: MODEL_FORMAT.into(),
            format_version: MODEL_VERSION,
            task,
            candidate: candidate.clone(),
            seed,
            preprocessing,
            estimator,
            cv_score: None,
        })
    }

    pub fn input_width(&self) -> usize {
        self.preprocessing.input_width()
    }

    pub fn predict(&self, x: &Matrix) -> Result<Output> {
        let z = self.preprocessing.transform(x)?;
        Ok(output(self.task, self.estimator.predict(&z)?))
    }

    /// Cross-validated MAE of a regression model.
    pub fn cv_mae(&self) -> Option<f64> {
        match (self.task, self.cv_score) {
            (Task::Regression, Some(s)) => Some(-s),
            _ => None,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        serde_json::to_writer(&mut w, self)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_reader(BufReader::new(fs::File::open(path)?))?;
        if value.get("format").and_then(|v| v.as_str()) != Some(MODEL_FORMAT) {
            return Err(LearnError::Format(format!("{} is not a {MODEL_FORMAT} file", path.display())));
        }
        let version = value.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != MODEL_VERSION {
            return Err(LearnError::Version { expected: MODEL_VERSION, found: version });
        }
        Ok(serde_json::from_value(value)?)
    }
}

pub(crate) fn fit_transformed(task: Task, z: &Matrix, rows: &Samples, spec: &EstimatorSpec, seed: u64) -> Result<Fitted> {
    if task.is_classification() {
        let y = rows.class_targets(task)?;
        estimator::fit(spec, z, Targets::Classes { y: &y, n_classes: task.classes().len() }, seed)
    } else {
        estimator::fit(spec, z, Targets::Real(&rows.gr), seed)
    }
}

pub(crate) fn output(task: Task, p: Predictions) -> Output {
    match p {
        Predictions::Classes(c) => Output::Labels(c.into_iter().map(|i| task.classes()[i]).collect()),
        Predictions::Values(v) => Output::Gr(v.into_iter().map(|g| g.max(0.0)).collect()),
    }
}
