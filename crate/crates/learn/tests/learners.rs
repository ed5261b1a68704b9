use qutrit_core::dataset::ClassLabel;
use qutrit_learn::estimator::{self, Activation, Mlp, Predictions};
use qutrit_learn::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two Gaussian blobs in the plane, centres (±3, 0), unit spread.
fn blobs(n: usize, seed: u64) -> (Matrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let c = i % 2;
        let cx = if c == 0 { -3.0 } else { 3.0 };
        let g = |rng: &mut ChaCha8Rng| -> f64 { (0..12).map(|_| rng.gen::<f64>()).sum::<f64>() - 6.0 };
        data.push(cx + g(&mut rng));
        data.push(g(&mut rng));
        y.push(c);
    }
    (Matrix::from_vec(n, 2, data).unwrap(), y)
}

fn classes(p: Predictions) -> Vec<usize> {
    match p {
        Predictions::Classes(c) => c,
        Predictions::Values(_) => panic!("expected classes"),
    }
}

fn values(p: Predictions) -> Vec<f64> {
    match p {
        Predictions::Values(v) => v,
        Predictions::Classes(_) => panic!("expected values"),
    }
}

#[test]
fn every_estimator_separates_blobs() {
    let (x, y) = blobs(200, 1);
    for kind in EstimatorKind::ALL {
        let spec = EstimatorSpec::new(kind);
        let m = estimator::fit(&spec, &x, Targets::Classes { y: &y, n_classes: 2 }, 3).unwrap();
        let pred = classes(m.predict(&x).unwrap());
        let acc = pred.iter().zip(&y).filter(|(a, b)| a == b).count() as f64 / y.len() as f64;
        assert!(acc >= 0.99, "{kind}: {acc}");
    }
}

#[test]
fn constant_target_is_reproduced() {
    let (x, _) = blobs(60, 2);
    let y = vec![0.37; 60];
    for kind in [EstimatorKind::DecisionTree, EstimatorKind::MultiLayerPerceptron, EstimatorKind::GradientBoosting] {
        let m = estimator::fit(&EstimatorSpec::new(kind), &x, Targets::Real(&y), 5).unwrap();
        let p = values(m.predict(&x).unwrap());
        let mae = p.iter().map(|v| (v - 0.37).abs()).sum::<f64>() / 60.0;
        assert!(mae <= 1e-6, "{kind}: {mae}");
    }
}

#[test]
fn duplicated_rows_give_identical_predictions() {
    let (x, y) = blobs(80, 3);
    let idx: Vec<usize> = (0..80).flat_map(|i| [i, i]).collect();
    let x2 = x.select(&idx);
    let y2: Vec<usize> = idx.iter().map(|&i| y[i]).collect();
    let (probe, _) = blobs(50, 4);
    for kind in [EstimatorKind::LogisticRegression, EstimatorKind::DecisionTree] {
        let spec = EstimatorSpec::new(kind);
        let a = estimator::fit(&spec, &x, Targets::Classes { y: &y, n_classes: 2 }, 9).unwrap();
        let b = estimator::fit(&spec, &x2, Targets::Classes { y: &y2, n_classes: 2 }, 9).unwrap();
        assert_eq!(a.predict(&probe).unwrap(), b.predict(&probe).unwrap(), "{kind}");
    }
}

fn toy_samples(n: usize, seed: u64) -> Samples {
    let (x, y) = blobs(n, seed);
    let labels = y.iter().map(|&c| if c == 0 { ClassLabel::Sep } else { ClassLabel::Pptes }).collect();
    let gr = (0..n).map(|i| x.row(i)[0].max(0.0) * 0.1).collect();
    Samples::new(x, labels, gr).unwrap()
}

#[test]
fn model_reload_predicts_identically() {
    let dir = tempfile::tempdir().unwrap();
    let s = toy_samples(120, 5);
    for kind in EstimatorKind::ALL {
        for task in [Task::Binary, Task::Regression] {
            let c = Candidate { rank: Some(1), spec: EstimatorSpec::new(kind) };
            let m = PipelineModel::fit(task, &s, &c, 11).unwrap();
            let path = dir.path().join("m.json");
            m.save(&path).unwrap();
            let back = PipelineModel::load(&path).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.predict(&s.x).unwrap(), m.predict(&s.x).unwrap(), "{kind} {task}");
        }
    }
}

#[test]
fn regression_outputs_are_nonnegative() {
    // targets are zero on half the rows, so an unclamped fit dips below zero
    let s = toy_samples(100, 6);
    let c = Candidate { rank: None, spec: EstimatorSpec::new(EstimatorKind::LogisticRegression) };
    let m = PipelineModel::fit(Task::Regression, &s, &c, 1).unwrap();
    let Output::Gr(g) = m.predict(&s.x).unwrap() else { panic!() };
    assert!(g.iter().all(|&v| v >= 0.0));
    assert!(g.iter().any(|&v| v == 0.0));
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

#[test]
fn mlp_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = Matrix::from_vec(6, 1, (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    let y: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..1.0)).collect();
    // 1-3-1 network: 3 + 3 + 3 + 1 = 10 parameters
    let mut net = Mlp::new(vec![1, 3, 1], Activation::Tanh, false, 8).unwrap();
    assert_eq!(net.params().len(), 10);
    for (i, p) in net.params_mut().iter_mut().enumerate() {
        *p += 0.1 * (i as f64 - 4.5);
    }
    check_gradient(&mut net, &x, Targets::Real(&y), &(0..10).collect::<Vec<_>>());

    // ten parameters of a two-hidden-layer softmax classifier
    let mut big = Mlp::new(vec![4, 5, 3, 3], Activation::Tanh, true, 9).unwrap();
    let n = big.params().len();
    let probe: Vec<usize> = (0..10).map(|k| k * (n - 1) / 9).collect();
    let cls = [0usize, 2, 1, 1, 0, 2];
    let x4 = Matrix::from_vec(6, 4, (0..24).map(|i| ((i * 7 % 11) as f64 - 5.0) / 5.0).collect()).unwrap();
    check_gradient(&mut big, &x4, Targets::Classes { y: &cls, n_classes: 3 }, &probe);
}

fn check_gradient(net: &mut Mlp, x: &Matrix, targets: Targets<'_>, probe: &[usize]) {
    let l2 = 1e-3;
    let (_, grad) = net.loss_and_gradient(x, targets, l2);
    for &j in probe {
        let h = 1e-5;
        let orig = net.params()[j];
        net.params_mut()[j] = orig + h;
        let (lp, _) = net.loss_and_gradient(x, targets, l2);
        net.params_mut()[j] = orig - h;
        let (lm, _) = net.loss_and_gradient(x, targets, l2);
        net.params_mut()[j] = orig;
        let fd = (lp - lm) / (2.0 * h);
        assert!(relative_error(grad[j], fd) <= 1e-5, "param {j}: {} vs {fd}", grad[j]);
    }
}

#[test]
fn perfect_and_constant_predictors() {
    let truth = [0, 1, 2, 2, 1, 0, 0];
    let r = EvalReport::classification(Task::Multi, &truth, &truth).unwrap();
    assert_eq!(r.overall_accuracy, Some(1.0));
    for (i, row) in r.confusion.iter().enumerate() {
        for (j, &n) in row.iter().enumerate() {
            if i != j {
                assert_eq!(n, 0);
            }
        }
    }
    assert_eq!(r.per_class_accuracy, vec![Some(1.0); 3]);

    let y = [0.0, 0.5, 0.1, 2.0];
    let c = 0.3;
    let r = EvalReport::regression(&y, &[c; 4]).unwrap();
    let mad = y.iter().map(|v| (v - c).abs()).sum::<f64>() / 4.0;
    assert_eq!(r.mae, Some(mad));
    assert!(EvalReport::regression(&[], &[]).is_err());
}

#[test]
fn confusion_rows_are_predictions() {
    // two SEP rows predicted PPTES, one PPTES row correct
    let r = EvalReport::classification(Task::Binary, &[0, 0, 1], &[1, 1, 1]).unwrap();
    assert_eq!(r.confusion, vec![vec![0, 0], vec![2, 1]]);
    assert_eq!(r.per_class_accuracy, vec![Some(0.0), Some(1.0)]);
    assert!(r.to_csv().starts_with("predicted\\true,SEP,PPTES\nSEP,0,0\nPPTES,2,1\n"));
}

#[test]
fn verdict_threshold_examples() {
    let v = entanglement_verdict(0.2, 0.0335).unwrap();
    assert_eq!(v.verdict, Verdict::Entangled);
    assert!((v.threshold - 0.1005).abs() < 1e-15);
    assert_eq!(entanglement_verdict(0.05, 0.0335).unwrap().verdict, Verdict::Inconclusive);
    assert_eq!(entanglement_verdict(3.0 * 0.0335, 0.0335).unwrap().verdict, Verdict::Inconclusive);
    assert!(entanglement_verdict(0.2, 0.0).is_err());
}

#[test]
fn binary_task_rejects_npt_rows() {
    let mut s = toy_samples(20, 8);
    s.labels[3] = ClassLabel::Npt;
    let c = Candidate { rank: None, spec: EstimatorSpec::new(EstimatorKind::DecisionTree) };
    let err = PipelineModel::fit(Task::Binary, &s, &c, 1).unwrap_err();
    assert!(err.to_string().contains("NPT"), "{err}");
    let single = Samples::new(s.x.clone(), vec![ClassLabel::Sep; 20], s.gr.clone()).unwrap();
    assert!(matches!(PipelineModel::fit(Task::Binary, &single, &c, 1), Err(LearnError::Degenerate(_))));
}

#[test]
fn search_budget_one_fits_the_single_candidate() {
    let s = toy_samples(60, 9);
    let cfg = SearchConfig::new(1, 4);
    let out = auto_search(Task::Binary, &s, &cfg).unwrap();
    assert_eq!(out.trace.len(), 1);
    assert_eq!(out.model.candidate, cfg.space.candidate(4, 0).unwrap());
    assert!(out.model.cv_score.is_some());
}

#[test]
fn best_score_is_monotone_in_budget_and_deterministic() {
    let s = toy_samples(60, 10);
    let mut last = f64::NEG_INFINITY;
    for budget in [1, 3, 6] {
        let out = auto_search(Task::Binary, &s, &SearchConfig::new(budget, 12)).unwrap();
        let best = out.model.cv_score.unwrap();
        assert!(best >= last);
        last = best;
    }
    let a = auto_search(Task::Regression, &s, &SearchConfig::new(4, 13)).unwrap();
    let b = auto_search(Task::Regression, &s, &SearchConfig::new(4, 13)).unwrap();
    assert_eq!(a.trace_text(), b.trace_text());
    assert_eq!(a.model, b.model);
}

#[test]
fn corrupting_test_labels_leaves_the_model_unchanged() {
    let s = toy_samples(100, 11);
    let train_idx: Vec<usize> = (0..80).collect();
    let test_idx: Vec<usize> = (80..100).collect();
    let fit = |rows: &Samples| {
        let out = auto_search(Task::Binary, &rows.select(&train_idx), &SearchConfig::new(3, 5)).unwrap();
        serde_json::to_string(&out.model).unwrap()
    };
    let clean = fit(&s);
    let mut corrupted = s.clone();
    for &i in &test_idx {
        corrupted.labels[i] = if corrupted.labels[i] == ClassLabel::Sep { ClassLabel::Pptes } else { ClassLabel::Sep };
        corrupted.gr[i] = 99.0;
    }
    assert_eq!(fit(&corrupted), clean);
}

#[test]
fn width_mismatch_is_an_error() {
    let s = toy_samples(30, 12);
    let c = Candidate { rank: None, spec: EstimatorSpec::new(EstimatorKind::KNearest) };
    let m = PipelineModel::fit(Task::Binary, &s, &c, 1).unwrap();
    let wide = Matrix::zeros(2, 3);
    assert!(matches!(m.predict(&wide), Err(LearnError::Width { expected: 2, got: 3 })));
}

#[test]
fn unknown_hyperparameters_are_rejected() {
    let (x, y) = blobs(10, 13);
    let spec = EstimatorSpec::new(EstimatorKind::KNearest).with("depth", ParamValue::Int(3));
    assert!(estimator::fit(&spec, &x, Targets::Classes { y: &y, n_classes: 2 }, 1).is_err());
    let spec = EstimatorSpec::new(EstimatorKind::KNearest).with("k", ParamValue::Text("five".into()));
    assert!(estimator::fit(&spec, &x, Targets::Classes { y: &y, n_classes: 2 }, 1).is_err());
}
