//! Evaluation reports and the entanglement decision rule.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{LearnError, Result};
use crate::model::{Output, PipelineModel};
use crate::task::{Samples, Task};

/// Test-set metrics. The confusion matrix has one row per predicted class
/// and one column per true class; class accuracy is the diagonal over the
/// column sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub classes: Vec<String>,
    pub confusion: Vec<Vec<usize>>,
    pub per_class_accuracy: Vec<Option<f64>>,
    pub overall_accuracy: Option<f64>,
    pub mae: Option<f64>,
    pub n_test: usize,
}

impl EvalReport {
    pub fn classification(task: Task, truth: &[usize], predicted: &[usize]) -> Result<Self> {
        if truth.is_empty() || truth.len() != predicted.len() {
            return Err(LearnError::Invalid(format!("{} predictions for {} test rows", predicted.len(), truth.len())));
        }
        let k = task.classes().len();
        let mut confusion = vec![vec![0usize; k]; k];
        for (&t, &p) in truth.iter().zip(predicted) {
            confusion[p][t] += 1;
        }
        let per_class_accuracy = (0..k)
            .map(|c| {
                let col: usize = (0..k).map(|r| confusion[r][c]).sum();
                (col > 0).then(|| confusion[c][c] as f64 / col as f64)
            })
            .collect();
        let correct: usize = (0..k).map(|c| confusion[c][c]).sum();
        Ok(Self {
            task,
            classes: task.classes().iter().map(|c| c.to_string()).collect(),
            confusion,
            per_class_accuracy,
            overall_accuracy: Some(correct as f64 / truth.len() as f64),
            mae: None,
            n_test: truth.len(),
        })
    }

    pub fn regression(truth: &[f64], predicted: &[f64]) -> Result<Self> {
        if truth.is_empty() || truth.len() != predicted.len() {
            return Err(LearnError::Invalid(format!("{} predictions for {} test rows", predicted.len(), truth.len())));
        }
        let mae = truth.iter().zip(predicted).map(|(t, p)| (t - p).abs()).sum::<f64>() / truth.len() as f64;
        Ok(Self {
            task: Task::Regression,
            classes: Vec::new(),
            confusion: Vec::new(),
            per_class_accuracy: Vec::new(),
            overall_accuracy: None,
            mae: Some(mae),
            n_test: truth.len(),
        })
    }

    /// Human-readable table.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "task: {}", self.task);
        let _ = writeln!(s, "test rows: {}", self.n_test);
        if let Some(mae) = self.mae {
            let _ = writeln!(s, "MAE: {mae:.6}");
            return s;
        }
        let _ = write!(s, "{:>14}", "pred \\ true");
        for c in &self.classes {
            let _ = write!(s, "{c:>9}");
        }
        s.push('\n');
        for (c, row) in self.classes.iter().zip(&self.confusion) {
            let _ = write!(s, "{c:>14}");
            for n in row {
                let _ = write!(s, "{n:>9}");
            }
            s.push('\n');
        }
        let _ = write!(s, "{:>14}", "accuracy");
        for a in &self.per_class_accuracy {
            match a {
                Some(a) => {
                    let _ = write!(s, "{:>8.1}%", 100.0 * a);
                }
                None => {
                    let _ = write!(s, "{:>9}", "-");
                }
            }
        }
        s.push('\n');
        if let Some(o) = self.overall_accuracy {
            let _ = writeln!(s, "overall accuracy: {:.1}%", 100.0 * o);
        }
        s
    }

    /// Machine-readable CSV: confusion rows, then accuracy lines.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        if let Some(mae) = self.mae {
            let _ = writeln!(s, "metric,value\nn_test,{}\nmae,{mae:.16e}", self.n_test);
            return s;
        }
        let _ = writeln!(s, "predicted\\true,{}", self.classes.join(","));
        for (c, row) in self.classes.iter().zip(&self.confusion) {
            let cells: Vec<String> = row.iter().map(|n| n.to_string()).collect();
            let _ = writeln!(s, "{c},{}", cells.join(","));
        }
        let acc: Vec<String> =
            self.per_class_accuracy.iter().map(|a| a.map_or_else(String::new, |a| format!("{a:.16e}"))).collect();
        let _ = writeln!(s, "class_accuracy,{}", acc.join(","));
        let _ = writeln!(s, "overall_accuracy,{:.16e}", self.overall_accuracy.unwrap_or(f64::NAN));
        let _ = writeln!(s, "n_test,{}", self.n_test);
        s
    }
}

pub fn evaluate(model: &PipelineModel, test: &Samples) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(LearnError::Invalid("empty test set".into()));
    }
    match model.predict(&test.x)? {
        Output::Labels(pred) => {
            let truth = test.class_targets(model.task)?;
            let classes = model.task.classes();
            let pred: Vec<usize> =
                pred.iter().map(|l| classes.iter().position(|c| c == l).expect("task class")).collect();
            EvalReport::classification(model.task, &truth, &pred)
        }
        Output::Gr(pred) => EvalReport::regression(&test.gr, &pred),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Entangled,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub gr: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

/// Entangled iff the predicted robustness exceeds `3·mae` (strictly).
pub fn entanglement_verdict(gr_predicted: f64, mae: f64) -> Result<VerdictReport> {
    if !(mae > 0.0) || !mae.is_finite() {
        return Err(LearnError::Invalid(format!("MAE must be positive, got {mae}")));
    }
    let threshold = 3.0 * mae;
    let verdict = if gr_predicted > threshold { Verdict::Entangled } else { Verdict::Inconclusive };
    Ok(VerdictReport { gr: gr_predicted, threshold, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absent_classes_have_no_accuracy() {
        let r = EvalReport::classification(Task::Multi, &[0, 0, 2], &[0, 1, 2]).unwrap();
        assert_eq!(r.per_class_accuracy, vec![Some(0.5), None, Some(1.0)]);
        assert!(r.to_text().contains("PPTES"));
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(EvalReport::classification(Task::Binary, &[0, 1], &[0]).is_err());
        assert!(EvalReport::regression(&[0.1], &[0.1, 0.2]).is_err());
    }
}
