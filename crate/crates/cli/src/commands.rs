use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::info;
use qutrit_core::dataset::{
    self, expand, generate_balanced, load_dataset, load_features, load_tomograms, save_dataset, save_features,
    verify_dataset, ClassLabel, Dataset, FeatureTable, GenerateConfig, MeanFidelity, EXPANDED_LEN, STATES_FILE,
};
use qutrit_core::qmat::{read_matrices, write_matrix, DensityMatrix};
use qutrit_core::sampler::SeedSpec;
use qutrit_core::tomo::{encode, TOMOGRAM_LEN};
use qutrit_core::witness::{gr_decomposable_with, gr_eps_oew_with, OewSettings};
use qutrit_learn::{
    auto_search, entanglement_verdict, evaluate, Matrix, Output, PipelineModel, Samples, SearchConfig, SearchSpace,
    Task,
};

use crate::config::SNAPSHOT_FILE;
use crate::*;

pub const FEATURES_FILE: &str = "features.csv";

pub fn run(command: Command, snapshot: &str) -> Result<()> {
    match command {
        Command::Generate(a) => generate(a, snapshot),
        Command::Stats(a) => stats(&a.input),
        Command::Featurize(a) => featurize(a, snapshot),
        Command::Split(a) => split(a, snapshot),
        Command::Train(a) => train(a, snapshot),
        Command::Evaluate(a) => evaluate_model(a, snapshot),
        Command::Predict(a) => predict(a),
        Command::Verdict(a) => verdict(a),
        Command::Gr(a) => gr(a),
        Command::Verify(a) => verify(&a.input),
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// The feature table of a directory: `features.csv` if present, otherwise
/// the raw tomograms of a dataset.
fn load_table(dir: &Path) -> Result<FeatureTable> {
    let features = dir.join(FEATURES_FILE);
    if features.exists() {
        return load_features(&features).with_context(|| format!("loading {}", features.display()));
    }
    if !dir.join(STATES_FILE).exists() {
        bail!("{}: neither {FEATURES_FILE} nor {STATES_FILE} found", dir.display());
    }
    Ok(FeatureTable::from_rows(&load(dir)?.rows, false)?)
}

fn load(dir: &Path) -> Result<Dataset> {
    load_dataset(dir).with_context(|| format!("loading dataset {}", dir.display()))
}

fn load_model(path: &Path) -> Result<PipelineModel> {
    PipelineModel::load(path).with_context(|| format!("loading model {}", path.display()))
}

fn read_states(path: &Path) -> Result<Vec<DensityMatrix>> {
    let mut f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let states = read_matrices(&mut f)
        .with_context(|| format!("reading {}", path.display()))?
        .into_iter()
        .map(DensityMatrix::new)
        .collect::<qutrit_core::Result<Vec<_>>>()
        .with_context(|| format!("{}", path.display()))?;
    if states.is_empty() {
        bail!("{}: no state records", path.display());
    }
    Ok(states)
}

/// Tomograms shaped for the model: expanded when it was trained on the
/// expanded features.
fn model_input(model: &PipelineModel, tomograms: Vec<Vec<f64>>) -> Result<Matrix> {
    let rows = match model.input_width() {
        TOMOGRAM_LEN => tomograms,
        EXPANDED_LEN => tomograms.iter().map(|c| expand(c)).collect::<qutrit_core::Result<_>>()?,
        w => bail!("model expects {w} features; only {TOMOGRAM_LEN} or {EXPANDED_LEN} are supported"),
    };
    Ok(Matrix::from_rows(&rows)?)
}

fn generate(a: GenerateArgs, snapshot: &str) -> Result<()> {
    let mut cfg = GenerateConfig::new(a.per_class, a.seed);
    cfg.artificial_fraction = a.artificial_fraction;
    cfg.epsilon = a.epsilon;
    if let Some(m) = a.max_draws {
        cfg.max_draws = m;
    }
    if let Some(m) = a.max_artificial_attempts {
        cfg.max_artificial_attempts = m;
    }
    let out = generate_balanced(&cfg)?;
    save_dataset(&a.out, &out.to_dataset())?;
    write_text(&a.out.join(SNAPSHOT_FILE), snapshot)?;
    let m = &out.manifest;
    println!("wrote {} states to {} (draws {}, PPT {})", m.total(), a.out.display(), m.raw_draws, m.ppt_draws);
    if !m.complete {
        return Err(NumericalFailure(format!(
            "draw budget exhausted with class counts {:?} of {}; partial dataset written",
            m.counts, a.per_class
        ))
        .into());
    }
    Ok(())
}

fn stats(dir: &Path) -> Result<()> {
    let data = load(dir)?;
    let m = &data.manifest;
    let mut s = String::new();
    writeln!(s, "states          {}", m.total())?;
    let fid = |f: Option<MeanFidelity>| f.map_or("none".into(), |f| format!("F {:.4}  sqrt(F) {:.4}", f.squared, f.root));
    for label in ClassLabel::ALL {
        writeln!(s, "{:<15} {:>6}   mean pairwise {}", label.as_str(), m.count(label), fid(m.fidelity.class(label)))?;
    }
    writeln!(s, "artificial      {}", m.artificial_pptes)?;
    writeln!(s, "raw draws       {}", m.raw_draws)?;
    writeln!(s, "PPT fraction    {:.3e}", m.ppt_fraction())?;
    writeln!(s, "PPTES fraction  {:.3e}", m.pptes_fraction())?;
    writeln!(s, "fidelity        {}", fid(m.fidelity.sample))?;
    for (kind, n) in &m.rejections {
        writeln!(s, "rejected {kind:<22} {n}")?;
    }
    writeln!(s, "balanced        {}", m.balanced())?;
    writeln!(s, "complete        {}", m.complete)?;
    print!("{s}");
    Ok(())
}

fn featurize(a: FeaturizeArgs, snapshot: &str) -> Result<()> {
    let data = load(&a.input)?;
    let table = FeatureTable::from_rows(&data.rows, a.expand)?;
    fs::create_dir_all(&a.out)?;
    save_features(&a.out.join(FEATURES_FILE), &table)?;
    write_text(&a.out.join(SNAPSHOT_FILE), snapshot)?;
    info!("{} rows × {} features", table.len(), table.width());
    Ok(())
}

fn split(a: SplitArgs, snapshot: &str) -> Result<()> {
    let table = load_table(&a.input)?;
    let idx: Vec<usize> = (0..table.len()).collect();
    let (train, test) = dataset::split(&idx, |&i| table.labels[i], a.train, SeedSpec::new(a.seed, 0))?;
    for (name, part) in [("train", &train), ("test", &test)] {
        let dir = a.out.join(name);
        fs::create_dir_all(&dir)?;
        save_features(&dir.join(FEATURES_FILE), &table.select(part))?;
    }
    write_text(&a.out.join(SNAPSHOT_FILE), snapshot)?;
    println!("train {} rows, test {} rows", train.len(), test.len());
    Ok(())
}

fn train(a: TrainArgs, snapshot: &str) -> Result<()> {
    let table = load_table(&a.input)?;
    let samples = Samples::from_table(&table, a.task)?;
    let mut cfg = SearchConfig::new(a.budget, a.seed);
    cfg.folds = a.folds;
    if let Some(path) = &a.search_space {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        cfg.space = SearchSpace::parse(&text).with_context(|| format!("{}", path.display()))?;
    }
    let out = auto_search(a.task, &samples, &cfg)?;
    out.model.save(&a.model_out)?;
    write_text(&with_suffix(&a.model_out, ".trace.txt"), &out.trace_text())?;
    write_text(&with_suffix(&a.model_out, ".run_config.txt"), snapshot)?;
    let score = out.model.cv_score.map_or("none".into(), |s| format!("{s:.4}"));
    println!("selected {} (candidate {}, cv score {score})", out.model.candidate, out.best_id);
    Ok(())
}

fn evaluate_model(a: EvaluateArgs, snapshot: &str) -> Result<()> {
    let model = load_model(&a.model)?;
    let test = Samples::from_table(&load_table(&a.input)?, model.task)?;
    let report = evaluate(&model, &test)?;
    let text = report.to_text();
    let body = if a.json { serde_json::to_string_pretty(&report)? + "\n" } else { text.clone() };
    write_text(&a.report, &body)?;
    write_text(&with_suffix(&a.report, ".csv"), &report.to_csv())?;
    write_text(&with_suffix(&a.report, ".run_config.txt"), snapshot)?;
    print!("{text}");
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let tomograms = match (&a.state, &a.csv) {
        (Some(path), _) => read_states(path)?.iter().map(|rho| encode(rho).as_slice().to_vec()).collect(),
        (None, Some(path)) => load_tomograms(path)?,
        (None, None) => bail!("one of --state or --csv is required"),
    };
    let out = model.predict(&model_input(&model, tomograms)?)?;
    let mut text = String::new();
    match out {
        Output::Labels(labels) => {
            text.push_str("row,label\n");
            for (i, l) in labels.iter().enumerate() {
                writeln!(text, "{},{l}", i + 1)?;
            }
        }
        Output::Gr(values) => {
            text.push_str("row,gr\n");
            for (i, v) in values.iter().enumerate() {
                writeln!(text, "{},{v:.16e}", i + 1)?;
            }
        }
    }
    match &a.out {
        Some(path) => write_text(path, &text),
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

fn verdict(a: VerdictArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    if model.task != Task::Regression {
        bail!("{}: verdicts need a regression model, found task {}", a.model.display(), model.task);
    }
    let Some(mae) = a.mae.or_else(|| model.cv_mae()) else {
        bail!("{}: model has no cross-validated MAE; pass --mae", a.model.display());
    };
    let states = read_states(&a.state)?;
    let tomograms = states.iter().map(|rho| encode(rho).as_slice().to_vec()).collect();
    let Output::Gr(values) = model.predict(&model_input(&model, tomograms)?)? else {
        unreachable!("regression models predict robustness");
    };
    for (i, gr) in values.into_iter().enumerate() {
        let v = entanglement_verdict(gr, mae)?;
        println!("state {}: gr {:.6} threshold {:.6} verdict {:?}", i + 1, v.gr, v.threshold, v.verdict);
    }
    Ok(())
}

fn gr(a: GrArgs) -> Result<()> {
    let states = read_states(&a.state)?;
    if states.len() != 1 {
        bail!("{}: expected one state record, found {}", a.state.display(), states.len());
    }
    let rho = &states[0];
    let settings = OewSettings { epsilon: a.epsilon, seed: SeedSpec::new(a.seed, 0), ..OewSettings::default() };
    let r = match a.method {
        Method::EpsOew => gr_eps_oew_with(rho, &settings)?,
        Method::Decomposable => gr_decomposable_with(rho, &settings.sdp)?,
    };
    println!("gr = {:.10}", r.gr);
    println!("lower_bound = {:.10}", r.lower_bound);
    println!("entangled = {}", r.gr > a.epsilon);
    println!("status = {:?}", r.report.status);
    println!("relative_gap = {:.3e}", r.report.relative_gap());
    for (path, m) in [(&a.edge_out, r.edge.matrix()), (&a.sigma_out, r.sigma.matrix()), (&a.witness_out, &r.witness)] {
        if let Some(path) = path {
            let mut f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_matrix(&mut f, m)?;
        }
    }
    if !r.is_usable() {
        return Err(NumericalFailure(format!("solver finished with status {:?}", r.report.status)).into());
    }
    Ok(())
}

fn verify(dir: &Path) -> Result<()> {
    let data = load(dir)?;
    let report = verify_dataset(&data);
    if report.is_ok() {
        println!("{}: {} rows ok", dir.display(), report.rows);
        return Ok(());
    }
    for (row, msg) in &report.failures {
        if *row == 0 {
            eprintln!("manifest: {msg}");
        } else {
            eprintln!("row {row}: {msg}");
        }
    }
    let (row, msg) = &report.failures[0];
    if *row == 0 {
        bail!("{} failed verification: {msg}", dir.display());
    }
    bail!("{} failed verification at row {row}: {msg}", dir.display())
}
