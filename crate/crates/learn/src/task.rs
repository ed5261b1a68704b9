//! Learning tasks and their targets.

use std::fmt;
use std::str::FromStr;

use qutrit_core::dataset::{ClassLabel, FeatureTable};
use serde::{Deserialize, Serialize};

use crate::error::{LearnError, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// SEP vs PPTES on PPT states.
    Binary,
    /// SEP vs PPTES vs NPT.
    Multi,
    /// Robustness regression.
    Regression,
}

impl Task {
    /// Classes in output order; empty for regression.
    pub fn classes(self) -> &'static [ClassLabel] {
        match self {
            Task::Binary => &[ClassLabel::Sep, ClassLabel::Pptes],
            Task::Multi => &ClassLabel::ALL,
            Task::Regression => &[],
        }
    }

    pub fn is_classification(self) -> bool {
        self != Task::Regression
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Binary => "binary",
            Task::Multi => "multi",
            Task::Regression => "regress",
        }
    }

    fn class_index(self, label: ClassLabel) -> Option<usize> {
        self.classes().iter().position(|&c| c == label)
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = LearnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(Task::Binary),
            "multi" => Ok(Task::Multi),
            "regress" | "regression" => Ok(Task::Regression),
            other => Err(LearnError::Invalid(format!("unknown task {other:?} (binary, multi or regress)"))),
        }
    }
}

/// Training or test rows for one task.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    pub x: Matrix,
    pub labels: Vec<ClassLabel>,
    pub gr: Vec<f64>,
}

/// What an estimator is fitted to.
#[derive(Clone, Copy, Debug)]
pub enum Targets<'a> {
    Classes { y: &'a [usize], n_classes: usize },
    Real(&'a [f64]),
}

impl<'a> Targets<'a> {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes { y, .. } => y.len(),
            Targets::Real(y) => y.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Samples {
    pub fn new(x: Matrix, labels: Vec<ClassLabel>, gr: Vec<f64>) -> Result<Self> {
        if labels.len() != x.rows() || gr.len() != x.rows() {
            return Err(LearnError::Invalid(format!(
                "{} feature rows, {} labels, {} targets",
                x.rows(),
                labels.len(),
                gr.len()
            )));
        }
        Ok(Self { x, labels, gr })
    }

    /// Rows of `table` usable for `task`. The binary task keeps only the PPT
    /// classes.
    pub fn from_table(table: &FeatureTable, task: Task) -> Result<Self> {
        let keep: Vec<usize> = (0..table.len()).filter(|&i| task != Task::Binary || table.labels[i] != ClassLabel::Npt).collect();
        let t = table.select(&keep);
        Self::new(Matrix::from_rows(&t.features)?, t.labels, t.gr)
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            x: self.x.select(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            gr: idx.iter().map(|&i| self.gr[i]).collect(),
        }
    }

    /// Class indices for a classification task. Rejects rows whose class is
    /// not part of the task.
    pub fn class_targets(&self, task: Task) -> Result<Vec<usize>> {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                task.class_index(l).ok_or_else(|| LearnError::Invalid(format!("row {i}: class {l} is not part of the {task} task")))
            })
            .collect()
    }

    /// Checks the rows are usable for training on `task`.
    pub fn validate_for_training(&self, task: Task) -> Result<()> {
        if self.is_empty() {
            return Err(LearnError::Degenerate("no training rows".into()));
        }
        self.x.ensure_finite("features")?;
        if task.is_classification() {
            let y = self.class_targets(task)?;
            if y.iter().all(|&c| c == y[0]) {
                return Err(LearnError::Degenerate(format!("only class {} present", task.classes()[y[0]])));
            }
        } else if let Some(i) = self.gr.iter().position(|g| !g.is_finite()) {
            return Err(LearnError::NonFinite(format!("target row {i}")));
        }
        Ok(())
    }
}
