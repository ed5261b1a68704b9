//! Supervised learning on two-qutrit tomograms.
//!
//! Classifiers separate SEP from PPTES (binary) or all three classes
//! (multi); the regressor estimates the generalized robustness. Pipelines
//! z-score features, optionally project onto principal components, and fit
//! one native estimator. [`auto_search`] selects the pipeline by randomized
//! search with stratified cross-validation.

pub mod error;
pub mod estimator;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod preprocess;
pub mod search;
pub mod task;

pub use error::{LearnError, Result};
pub use estimator::{EstimatorKind, EstimatorSpec, ParamValue};
pub use matrix::Matrix;
pub use metrics::{entanglement_verdict, evaluate, EvalReport, Verdict, VerdictReport};
pub use model::{Candidate, Output, PipelineModel, MODEL_FORMAT, MODEL_VERSION};
pub use search::{auto_search, cross_validate, fixed_baselines, SearchConfig, SearchOutcome, SearchSpace, TraceEntry};
pub use task::{Samples, Targets, Task};
