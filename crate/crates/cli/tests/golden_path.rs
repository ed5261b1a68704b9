use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qutrit_core::qmat::{max_entangled_state, write_matrix, DensityMatrix};

fn qutrit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qutrit")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = qutrit(args);
    assert!(out.status.success(), "{args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str], code: i32) -> String {
    let out = qutrit(args);
    assert_eq!(out.status.code(), Some(code), "{args:?}:\n{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stderr).unwrap()
}

fn write_state(path: &Path, rho: &DensityMatrix) {
    let mut f = fs::File::create(path).unwrap();
    write_matrix(&mut f, rho.matrix()).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn every_subcommand_consumes_the_previous_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name);
    fs::write(d("run.cfg"), "seed = 5\nper-class = 4\nartificial-fraction = 1.0\nbudget = 4\nfolds = 3\n").unwrap();
    let cfg = d("run.cfg");
    let cfg = s(&cfg);

    ok(&["generate", "--config", cfg, "--out", s(&d("data"))]);
    let snapshot = fs::read_to_string(d("data/run_config.txt")).unwrap();
    assert!(snapshot.lines().any(|l| l == "seed = 5"), "{snapshot}");
    assert!(snapshot.lines().any(|l| l == "per-class = 4"), "{snapshot}");

    let stats = ok(&["stats", "--in", s(&d("data"))]);
    assert!(stats.contains("balanced        true"), "{stats}");
    assert!(ok(&["verify", "--in", s(&d("data"))]).contains("12 rows ok"));

    ok(&["featurize", "--in", s(&d("data")), "--out", s(&d("feat"))]);
    ok(&["split", "--config", cfg, "--in", s(&d("feat")), "--out", s(&d("split")), "--train", "0.75"]);
    let train = d("split/train");
    let test = d("split/test");
    assert_eq!(fs::read_to_string(test.join("features.csv")).unwrap().lines().count(), 1 + 3);

    ok(&["train", "--config", cfg, "--task", "multi", "--in", s(&train), "--model-out", s(&d("multi.json"))]);
    assert_eq!(fs::read_to_string(d("multi.json.trace.txt")).unwrap().lines().count(), 4);
    let report = ok(&["evaluate", "--model", s(&d("multi.json")), "--in", s(&test), "--report", s(&d("r.txt"))]);
    assert_eq!(report, fs::read_to_string(d("r.txt")).unwrap());
    assert!(fs::read_to_string(d("r.txt.csv")).unwrap().starts_with("predicted\\true,SEP,PPTES,NPT\n"));
    ok(&["evaluate", "--json", "--model", s(&d("multi.json")), "--in", s(&test), "--report", s(&d("r.json"))]);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(d("r.json")).unwrap()).unwrap();
    assert_eq!(json["n_test"], 3);

    let labels = ok(&["predict", "--model", s(&d("multi.json")), "--csv", s(&d("data/states.csv"))]);
    assert_eq!(labels.lines().count(), 13);
    assert!(labels.starts_with("row,label\n"));

    write_state(&d("maxent.q3st"), &max_entangled_state());
    ok(&["train", "--config", cfg, "--task", "regress", "--in", s(&train), "--model-out", s(&d("reg.json"))]);
    let v = ok(&["verdict", "--model", s(&d("reg.json")), "--state", s(&d("maxent.q3st"))]);
    assert!(v.starts_with("state 1: gr "), "{v}");
    let gr = ok(&["predict", "--model", s(&d("reg.json")), "--state", s(&d("maxent.q3st")), "--out", s(&d("p.csv"))]);
    assert!(gr.is_empty());
    assert!(fs::read_to_string(d("p.csv")).unwrap().starts_with("row,gr\n1,"));
    fails(&["verdict", "--model", s(&d("multi.json")), "--state", s(&d("maxent.q3st"))], 1);

    // hand-corrupted label: the first NPT row relabeled SEP
    let corrupt = d("corrupt");
    fs::create_dir(&corrupt).unwrap();
    for f in ["states.csv", "origins.csv", "manifest.txt", "rejections.log"] {
        fs::copy(d("data").join(f), corrupt.join(f)).unwrap();
    }
    let states = fs::read_to_string(corrupt.join("states.csv")).unwrap();
    let mut lines: Vec<String> = states.lines().map(String::from).collect();
    let row = lines.iter().position(|l| l.contains(",NPT,")).unwrap();
    lines[row] = lines[row].replace(",NPT,", ",SEP,");
    fs::write(corrupt.join("states.csv"), lines.join("\n") + "\n").unwrap();
    let err = fails(&["verify", "--in", s(&corrupt)], 1);
    assert!(err.contains(&format!("row {row}")), "{err}");

    let manifest = fs::read_to_string(corrupt.join("manifest.txt")).unwrap();
    fs::write(corrupt.join("manifest.txt"), manifest.replace("format_version=1", "format_version=2")).unwrap();
    assert!(fails(&["stats", "--in", s(&corrupt)], 1).contains("version"));
}

#[test]
fn gr_of_the_maximally_entangled_state() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("maxent.q3st");
    write_state(&state, &max_entangled_state());
    for method in ["eps-oew", "decomposable"] {
        let out = ok(&["gr", "--state", s(&state), "--method", method, "--edge-out", s(&dir.path().join("edge.q3st"))]);
        let gr: f64 = out.lines().next().unwrap().strip_prefix("gr = ").unwrap().parse().unwrap();
        assert!((gr - 2.0).abs() < 1e-3, "{method}: {out}");
        assert!(out.contains("status = Optimal"));
        assert!(fs::metadata(dir.path().join("edge.q3st")).unwrap().len() > 0);
    }
}

#[test]
fn invalid_input_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nothing");
    fails(&["generate", "--per-class", "2", "--out", s(&missing), "--bogus"], 1);
    fails(&["stats"], 1);
    assert!(fails(&["stats", "--in", s(&missing)], 1).contains("nothing"));
    fails(&["generate", "--per-class", "0", "--out", s(&missing)], 1);
    let junk = dir.path().join("junk.q3st");
    fs::write(&junk, b"not a state").unwrap();
    fails(&["gr", "--state", s(&junk)], 1);
    fails(&["predict", "--model", s(&junk)], 1);
    fails(&["split", "--in", s(&missing), "--out", s(&missing), "--train", "1.5"], 1);
    assert!(ok(&["--help"]).contains("generate"));
}

#[test]
fn exhausted_budget_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("partial");
    let err = fails(&["generate", "--per-class", "2", "--max-draws", "10", "--max-artificial-attempts", "0", "--out", s(&out)], 2);
    assert!(err.contains("budget"), "{err}");
    assert!(out.join("states.csv").exists());
}
