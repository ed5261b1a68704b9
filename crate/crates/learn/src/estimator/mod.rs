//! Native estimators.
//!
//! Every estimator is fitted from a [`EstimatorSpec`] (kind plus a string-keyed
//! hyperparameter map) and a seed, and predicts deterministically afterwards.

mod boosting;
mod forest;
mod knn;
mod linear;
mod mlp;
mod svm;
mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use self::boosting::GradientBoosting;
pub use self::forest::RandomForest;
pub use self::knn::KNearest;
pub use self::linear::LinearModel;
pub use self::mlp::{Activation, Mlp};
pub use self::svm::SupportVectorMachine;
pub use self::tree::DecisionTree;
use crate::error::{LearnError, Result};
use crate::matrix::Matrix;
use crate::task::Targets;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Softmax regression; ridge regression for real targets.
    LogisticRegression,
    KNearest,
    DecisionTree,
    RandomForest,
    GradientBoosting,
    MultiLayerPerceptron,
    /// RBF-kernel C-SVC (one-vs-rest) or ε-SVR.
    SupportVectorMachine,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 7] = [
        EstimatorKind::LogisticRegression,
        EstimatorKind::KNearest,
        EstimatorKind::DecisionTree,
        EstimatorKind::RandomForest,
        EstimatorKind::GradientBoosting,
        EstimatorKind::MultiLayerPerceptron,
        EstimatorKind::SupportVectorMachine,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::LogisticRegression => "logistic_regression",
            EstimatorKind::KNearest => "k_nearest",
            EstimatorKind::DecisionTree => "decision_tree",
            EstimatorKind::RandomForest => "random_forest",
            EstimatorKind::GradientBoosting => "gradient_boosting",
            EstimatorKind::MultiLayerPerceptron => "multi_layer_perceptron",
            EstimatorKind::SupportVectorMachine => "support_vector_machine",
        }
    }

    /// Hyperparameters the kind accepts.
    pub fn keys(self) -> &'static [&'static str] {
        match self {
            EstimatorKind::LogisticRegression => &["l2", "iterations", "learning_rate"],
            EstimatorKind::KNearest => &["k", "weights"],
            EstimatorKind::DecisionTree => &["max_depth", "min_samples_leaf", "max_bins"],
            EstimatorKind::RandomForest => &["n_trees", "max_depth", "min_samples_leaf", "max_features", "max_bins"],
            EstimatorKind::GradientBoosting => {
                &["n_rounds", "learning_rate", "max_depth", "min_samples_leaf", "subsample", "max_features", "max_bins"]
            }
            EstimatorKind::MultiLayerPerceptron => {
                &["hidden", "hidden2", "activation", "l2", "learning_rate", "epochs", "batch_size"]
            }
            EstimatorKind::SupportVectorMachine => &["c", "gamma", "epsilon"],
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = LearnError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| LearnError::Invalid(format!("unknown estimator kind {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Float(v) => write!(f, "{v}"),
            ParamValue::Text(v) => f.write_str(v),
        }
    }
}

pub type Params = BTreeMap<String, ParamValue>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub params: Params,
}

impl EstimatorSpec {
    pub fn new(kind: EstimatorKind) -> Self {
        Self { kind, params: Params::new() }
    }

    pub fn with(mut self, key: &str, value: ParamValue) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.params.keys().find(|k| !self.kind.keys().contains(&k.as_str())) {
            Some(k) => Err(self.bad(k)),
            None => Ok(()),
        }
    }

    fn bad(&self, key: &str) -> LearnError {
        LearnError::Hyperparameter {
            kind: self.kind.to_string(),
            key: key.to_string(),
            value: self.params.get(key).map_or_else(|| "?".into(), |v| v.to_string()),
        }
    }

    pub(crate) fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.params.get(key) {
            None => Ok(default),
            Some(ParamValue::Int(v)) if *v >= 0 => Ok(*v as usize),
            Some(_) => Err(self.bad(key)),
        }
    }

    pub(crate) fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.params.get(key) {
            None => Ok(default),
            Some(ParamValue::Float(v)) if v.is_finite() => Ok(*v),
            Some(ParamValue::Int(v)) => Ok(*v as f64),
            Some(_) => Err(self.bad(key)),
        }
    }

    pub(crate) fn text_or<'a>(&'a self, key: &str, default: &'a str) -> Result<&'a str> {
        match self.params.get(key) {
            None => Ok(default),
            Some(ParamValue::Text(v)) => Ok(v),
            Some(_) => Err(self.bad(key)),
        }
    }
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        for (k, v) in &self.params {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

/// Predicted class indices or real values.
#[derive(Clone, Debug, PartialEq)]
pub enum Predictions {
    Classes(Vec<usize>),
    Values(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fitted {
    LogisticRegression(LinearModel),
    KNearest(KNearest),
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    GradientBoosting(GradientBoosting),
    MultiLayerPerceptron(Mlp),
    SupportVectorMachine(SupportVectorMachine),
}

pub fn fit(spec: &EstimatorSpec, x: &Matrix, targets: Targets<'_>, seed: u64) -> Result<Fitted> {
    spec.validate()?;
    if x.rows() != targets.len() {
        return Err(LearnError::Invalid(format!("{} rows but {} targets", x.rows(), targets.len())));
    }
    if x.rows() == 0 {
        return Err(LearnError::Degenerate("no training rows".into()));
    }
    Ok(match spec.kind {
        EstimatorKind::LogisticRegression => Fitted::LogisticRegression(LinearModel::fit(spec, x, targets)?),
        EstimatorKind::KNearest => Fitted::KNearest(KNearest::fit(spec, x, targets)?),
        EstimatorKind::DecisionTree => Fitted::DecisionTree(DecisionTree::fit(spec, x, targets, seed)?),
        EstimatorKind::RandomForest => Fitted::RandomForest(RandomForest::fit(spec, x, targets, seed)?),
        EstimatorKind::GradientBoosting => Fitted::GradientBoosting(GradientBoosting::fit(spec, x, targets, seed)?),
        EstimatorKind::MultiLayerPerceptron => Fitted::MultiLayerPerceptron(Mlp::fit(spec, x, targets, seed)?),
        EstimatorKind::SupportVectorMachine => Fitted::SupportVectorMachine(SupportVectorMachine::fit(spec, x, targets)?),
    })
}

impl Fitted {
    pub fn input_width(&self) -> usize {
        match self {
            Fitted::LogisticRegression(m) => m.input_width(),
            Fitted::KNearest(m) => m.input_width(),
            Fitted::DecisionTree(m) => m.input_width(),
            Fitted::RandomForest(m) => m.input_width(),
            Fitted::GradientBoosting(m) => m.input_width(),
            Fitted::MultiLayerPerceptron(m) => m.input_width(),
            Fitted::SupportVectorMachine(m) => m.input_width(),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Predictions> {
        if x.cols() != self.input_width() {
            return Err(LearnError::Width { expected: self.input_width(), got: x.cols() });
        }
        Ok(match self {
            Fitted::LogisticRegression(m) => m.predict(x),
            Fitted::KNearest(m) => m.predict(x),
            Fitted::DecisionTree(m) => m.predict(x),
            Fitted::RandomForest(m) => m.predict(x),
            Fitted::GradientBoosting(m) => m.predict(x),
            Fitted::MultiLayerPerceptron(m) => m.predict(x),
            Fitted::SupportVectorMachine(m) => m.predict(x),
        })
    }
}

/// Class scores to predicted classes, or single-output scores to values.
pub(crate) fn finish(scores: Vec<Vec<f64>>, classification: bool) -> Predictions {
    if classification {
        Predictions::Classes(scores.iter().map(|s| crate::matrix::argmax(s)).collect())
    } else {
        Predictions::Values(scores.into_iter().map(|s| s[0]).collect())
    }
}

/// Outputs per row: one score per class, or a single value.
pub(crate) fn n_outputs(targets: Targets<'_>) -> usize {
    match targets {
        Targets::Classes { n_classes, .. } => n_classes,
        Targets::Real(_) => 1,
    }
}
