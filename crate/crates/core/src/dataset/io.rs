//! On-disk dataset layout.
//!
//! A dataset directory holds
//!
//! * `states.csv`: `c_1..c_80,label,gr`, one row per state;
//! * `origins.csv`: `row,origin,master_seed,stream_index` for the same rows;
//! * `manifest.txt`: `key=value` lines;
//! * `rejections.log`: one line per rejected candidate.
//!
//! Reals are written as `{:.16e}`, which round-trips every `f64` exactly, so
//! save → load → save reproduces the files byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::stats::{FidelityStats, MeanFidelity};
use super::{features, ClassLabel, LabeledState, Origin};
use crate::error::{Error, Result};
use crate::sampler::SeedSpec;
use crate::tomo::{decode_state, encode, Tomogram, TOMOGRAM_LEN};

pub const FORMAT_VERSION: u32 = 1;

pub const STATES_FILE: &str = "states.csv";
pub const ORIGINS_FILE: &str = "origins.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const REJECTIONS_FILE: &str = "rejections.log";

/// One persisted state: its tomogram, label and robustness.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub tomogram: Tomogram,
    pub label: ClassLabel,
    pub gr: f64,
    pub origin: Origin,
    pub seed: SeedSpec,
}

impl From<&LabeledState> for Row {
    fn from(s: &LabeledState) -> Self {
        Row { tomogram: encode(&s.rho), label: s.label, gr: s.gr, origin: s.origin, seed: s.seed_trace }
    }
}

impl Row {
    /// Rebuilds the labeled state from the tomogram.
    pub fn to_state(&self) -> Result<LabeledState> {
        Ok(LabeledState {
            rho: decode_state(&self.tomogram)?,
            label: self.label,
            gr: self.gr,
            origin: self.origin,
            seed_trace: self.seed,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub master_seed: u64,
    pub target_per_class: usize,
    pub artificial_fraction: f64,
    pub epsilon: f64,
    /// Indexed by [`ClassLabel::index`].
    pub counts: [usize; 3],
    /// PPTES rows of artificial origin.
    pub artificial_pptes: usize,
    /// Random-stream draws examined.
    pub raw_draws: u64,
    /// PPT states among `raw_draws`.
    pub ppt_draws: u64,
    /// PPT draws labeled PPTES, including any beyond the quota.
    pub pptes_draws: u64,
    pub artificial_attempts: u64,
    /// Rejected candidates by [`super::RejectReason::kind`].
    pub rejections: BTreeMap<String, u64>,
    /// False when a draw budget ran out before the quotas were met.
    pub complete: bool,
    pub fidelity: FidelityStats,
}

impl DatasetManifest {
    pub fn count(&self, label: ClassLabel) -> usize {
        self.counts[label.index()]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn ppt_fraction(&self) -> f64 {
        ratio(self.ppt_draws, self.raw_draws)
    }

    pub fn pptes_fraction(&self) -> f64 {
        ratio(self.pptes_draws, self.raw_draws)
    }

    pub fn balanced(&self) -> bool {
        self.counts.iter().all(|&c| c == self.counts[0])
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub rows: Vec<Row>,
    pub manifest: DatasetManifest,
    /// Lines of `rejections.log`.
    pub rejections: Vec<String>,
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_real(s: &str, what: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Format(format!("{what}: cannot parse {s:?} as a real")))
}

fn parse_int<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Format(format!("{what}: cannot parse {s:?} as an integer")))
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Format(format!("{other:?}")),
    }
}

fn tomogram_header() -> impl Iterator<Item = String> {
    (1..=TOMOGRAM_LEN).map(|i| format!("c_{i}"))
}

pub fn states_header() -> Vec<String> {
    tomogram_header().chain(["label".to_string(), "gr".to_string()]).collect()
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<fs::File>>> {
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(BufWriter::new(fs::File::create(path)?)))
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(csv_error)
}

fn check_header(found: &csv::StringRecord, want: &[String], path: &Path) -> Result<()> {
    if found.len() != want.len() || found.iter().zip(want).any(|(a, b)| a != b) {
        return Err(Error::Format(format!("{}: malformed header", path.display())));
    }
    Ok(())
}

/// Writes the four dataset files into `dir`, creating it if needed.
pub fn save_dataset(dir: &Path, data: &Dataset) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = writer(&dir.join(STATES_FILE))?;
    w.write_record(states_header()).map_err(csv_error)?;
    for row in &data.rows {
        let mut rec: Vec<String> = row.tomogram.as_slice().iter().map(|&x| real(x)).collect();
        rec.push(row.label.to_string());
        rec.push(real(row.gr));
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;

    let mut w = writer(&dir.join(ORIGINS_FILE))?;
    w.write_record(["row", "origin", "master_seed", "stream_index"]).map_err(csv_error)?;
    for (i, row) in data.rows.iter().enumerate() {
        let rec = [i.to_string(), row.origin.as_str().to_string(), row.seed.master_seed.to_string(), row.seed.stream_index.to_string()];
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;

    write_manifest(&dir.join(MANIFEST_FILE), &data.manifest)?;

    let mut f = BufWriter::new(fs::File::create(dir.join(REJECTIONS_FILE))?);
    for line in &data.rejections {
        writeln!(f, "{line}")?;
    }
    f.flush()?;
    Ok(())
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest = read_manifest(&dir.join(MANIFEST_FILE))?;

    let path = dir.join(STATES_FILE);
    let mut r = reader(&path)?;
    check_header(r.headers().map_err(csv_error)?, &states_header(), &path)?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let at = format!("{} row {}", path.display(), i + 1);
        let c = (0..TOMOGRAM_LEN).map(|k| parse_real(&rec[k], &at)).collect::<Result<Vec<_>>>()?;
        let label: ClassLabel = rec[TOMOGRAM_LEN].parse().map_err(|e| Error::Format(format!("{at}: {e}")))?;
        let gr = parse_real(&rec[TOMOGRAM_LEN + 1], &at)?;
        rows.push(Row { tomogram: Tomogram::new(c)?, label, gr, origin: Origin::Random, seed: SeedSpec::default() });
    }

    let path = dir.join(ORIGINS_FILE);
    let mut r = reader(&path)?;
    let want: Vec<String> = ["row", "origin", "master_seed", "stream_index"].map(String::from).to_vec();
    check_header(r.headers().map_err(csv_error)?, &want, &path)?;
    let mut n = 0;
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let at = format!("{} row {}", path.display(), i + 1);
        if rec.len() != 4 || parse_int::<usize>(&rec[0], &at)? != i || i >= rows.len() {
            return Err(Error::Format(format!("{at}: does not match {STATES_FILE}")));
        }
        rows[i].origin = rec[1].parse()?;
        rows[i].seed = SeedSpec::new(parse_int(&rec[2], &at)?, parse_int(&rec[3], &at)?);
        n += 1;
    }
    if n != rows.len() {
        return Err(Error::Format(format!("{} has {n} rows, {STATES_FILE} has {}", path.display(), rows.len())));
    }

    let rejections = match fs::File::open(dir.join(REJECTIONS_FILE)) {
        Ok(f) => BufReader::new(f).lines().collect::<std::io::Result<Vec<_>>>()?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    Ok(Dataset { rows, manifest, rejections })
}

fn opt_real(x: Option<f64>) -> String {
    x.map_or_else(|| "none".to_string(), real)
}

pub fn write_manifest(path: &Path, m: &DatasetManifest) -> Result<()> {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        out.push_str(k);
        out.push('=');
        out.push_str(&v);
        out.push('\n');
    };
    kv("format_version", m.format_version.to_string());
    kv("master_seed", m.master_seed.to_string());
    kv("target_per_class", m.target_per_class.to_string());
    kv("artificial_fraction", real(m.artificial_fraction));
    kv("epsilon", real(m.epsilon));
    for c in ClassLabel::ALL {
        kv(&format!("count_{c}"), m.count(c).to_string());
    }
    kv("artificial_pptes", m.artificial_pptes.to_string());
    kv("raw_draws", m.raw_draws.to_string());
    kv("ppt_draws", m.ppt_draws.to_string());
    kv("ppt_fraction", real(m.ppt_fraction()));
    kv("pptes_draws", m.pptes_draws.to_string());
    kv("pptes_fraction", real(m.pptes_fraction()));
    kv("artificial_attempts", m.artificial_attempts.to_string());
    for (kind, n) in &m.rejections {
        kv(&format!("rejected_{kind}"), n.to_string());
    }
    kv("complete", m.complete.to_string());
    let groups = std::iter::once(("sample".to_string(), m.fidelity.sample))
        .chain(ClassLabel::ALL.iter().map(|c| (c.to_string(), m.fidelity.class(*c))));
    for (name, f) in groups {
        kv(&format!("fidelity_{name}"), opt_real(f.map(|f| f.squared)));
        kv(&format!("fidelity_root_{name}"), opt_real(f.map(|f| f.root)));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("{} line {}: expected key=value", path.display(), i + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    let at = path.display().to_string();
    let get = |k: &str| map.get(k).map(String::as_str).ok_or_else(|| Error::Format(format!("{at}: missing key {k}")));
    let version: u32 = parse_int(get("format_version")?, &at)?;
    if version != FORMAT_VERSION {
        return Err(Error::Version { expected: FORMAT_VERSION, found: version });
    }
    let opt = |k: &str| -> Result<Option<f64>> {
        match get(k)? {
            "none" => Ok(None),
            v => parse_real(v, &at).map(Some),
        }
    };
    let fid = |name: &str| -> Result<Option<MeanFidelity>> {
        match (opt(&format!("fidelity_{name}"))?, opt(&format!("fidelity_root_{name}"))?) {
            (Some(squared), Some(root)) => Ok(Some(MeanFidelity { squared, root })),
            (None, None) => Ok(None),
            _ => Err(Error::Format(format!("{at}: fidelity_{name} and fidelity_root_{name} disagree on none"))),
        }
    };
    let mut counts = [0; 3];
    let mut per_class = [None; 3];
    for c in ClassLabel::ALL {
        counts[c.index()] = parse_int(get(&format!("count_{c}"))?, &at)?;
        per_class[c.index()] = fid(c.as_str())?;
    }
    let mut rejections = BTreeMap::new();
    for (k, v) in &map {
        if let Some(kind) = k.strip_prefix("rejected_") {
            rejections.insert(kind.to_string(), parse_int(v, &at)?);
        }
    }
    let complete = match get("complete")? {
        "true" => true,
        "false" => false,
        other => return Err(Error::Format(format!("{at}: complete={other}"))),
    };
    Ok(DatasetManifest {
        format_version: version,
        master_seed: parse_int(get("master_seed")?, &at)?,
        target_per_class: parse_int(get("target_per_class")?, &at)?,
        artificial_fraction: parse_real(get("artificial_fraction")?, &at)?,
        epsilon: parse_real(get("epsilon")?, &at)?,
        counts,
        artificial_pptes: parse_int(get("artificial_pptes")?, &at)?,
        raw_draws: parse_int(get("raw_draws")?, &at)?,
        ppt_draws: parse_int(get("ppt_draws")?, &at)?,
        pptes_draws: parse_int(get("pptes_draws")?, &at)?,
        artificial_attempts: parse_int(get("artificial_attempts")?, &at)?,
        rejections,
        complete,
        fidelity: FidelityStats { sample: fid("sample")?, per_class },
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub rows: usize,
    /// `(row, message)` with 1-based data-row numbers.
    pub failures: Vec<(usize, String)>,
}

impl VerifyReport {
    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Revalidates every row against the label invariants and the manifest
/// counts.
pub fn verify_dataset(data: &Dataset) -> VerifyReport {
    let epsilon = data.manifest.epsilon;
    let mut report = VerifyReport { rows: data.rows.len(), failures: Vec::new() };
    let mut counts = [0usize; 3];
    for (i, row) in data.rows.iter().enumerate() {
        counts[row.label.index()] += 1;
        if let Err(e) = row.to_state().and_then(|s| s.check(epsilon)) {
            report.failures.push((i + 1, e.to_string()));
        }
    }
    if counts != data.manifest.counts {
        report.failures.push((0, format!("class counts {counts:?} differ from manifest {:?}", data.manifest.counts)));
    }
    report
}

/// Feature rows with their labels and targets, unscaled.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    pub columns: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<ClassLabel>,
    pub gr: Vec<f64>,
}

impl FeatureTable {
    /// Raw tomograms, or the expanded features when `expand` is set.
    pub fn from_rows(rows: &[Row], expand: bool) -> Result<Self> {
        let features = rows
            .iter()
            .map(|r| if expand { features::expand(r.tomogram.as_slice()) } else { Ok(r.tomogram.as_slice().to_vec()) })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            columns: if expand { expanded_header() } else { tomogram_header().collect() },
            features,
            labels: rows.iter().map(|r| r.label).collect(),
            gr: rows.iter().map(|r| r.gr).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// Rows at the given indices, in that order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            columns: self.columns.clone(),
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            gr: idx.iter().map(|&i| self.gr[i]).collect(),
        }
    }
}

/// `c_*`, `e_*` and `q_*` in the expansion order.
pub fn expanded_header() -> Vec<String> {
    let n_quad = TOMOGRAM_LEN * (TOMOGRAM_LEN + 1) / 2;
    tomogram_header()
        .chain((1..=TOMOGRAM_LEN).map(|i| format!("e_{i}")))
        .chain((1..=n_quad).map(|i| format!("q_{i}")))
        .collect()
}

pub fn save_features(path: &Path, table: &FeatureTable) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = table.columns.clone();
    header.push("label".into());
    header.push("gr".into());
    w.write_record(&header).map_err(csv_error)?;
    for ((f, label), gr) in table.features.iter().zip(&table.labels).zip(&table.gr) {
        let mut rec: Vec<String> = f.iter().map(|&x| real(x)).collect();
        rec.push(label.to_string());
        rec.push(real(*gr));
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_features(path: &Path) -> Result<FeatureTable> {
    let mut r = reader(path)?;
    let header: Vec<String> = r.headers().map_err(csv_error)?.iter().map(String::from).collect();
    let width = header.len().checked_sub(2).unwrap_or(0);
    let columns = header[..width].to_vec();
    let known = columns == tomogram_header().collect::<Vec<_>>() || columns == expanded_header();
    if !known || header[width..] != ["label", "gr"] {
        return Err(Error::Format(format!("{}: malformed header", path.display())));
    }
    let mut table = FeatureTable { columns, features: Vec::new(), labels: Vec::new(), gr: Vec::new() };
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let at = format!("{} row {}", path.display(), i + 1);
        table.features.push((0..width).map(|k| parse_real(&rec[k], &at)).collect::<Result<_>>()?);
        table.labels.push(rec[width].parse().map_err(|e| Error::Format(format!("{at}: {e}")))?);
        table.gr.push(parse_real(&rec[width + 1], &at)?);
    }
    Ok(table)
}

/// The `c_1..c_80` columns of any CSV carrying them; other columns are
/// ignored, so states, feature and unlabeled tomogram files all load.
pub fn load_tomograms(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut r = reader(path)?;
    let header: Vec<String> = r.headers().map_err(csv_error)?.iter().map(String::from).collect();
    let at: Vec<usize> = tomogram_header()
        .map(|name| {
            header
                .iter()
                .position(|h| *h == name)
                .ok_or_else(|| Error::Format(format!("{}: missing column {name}", path.display())))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let loc = format!("{} row {}", path.display(), i + 1);
        rows.push(at.iter().map(|&k| parse_real(&rec[k], &loc)).collect::<Result<_>>()?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{horodecki_state, max_entangled_state, DensityMatrix};

    fn sample() -> Dataset {
        let states = [
            (DensityMatrix::maximally_mixed(9), ClassLabel::Sep, 0.0, Origin::Random),
            (horodecki_state(0.5).unwrap(), ClassLabel::Pptes, 1.2e-2, Origin::ArtificialPptes),
            (max_entangled_state(), ClassLabel::Npt, 2.0000000512, Origin::Random),
        ];
        let rows = states
            .iter()
            .enumerate()
            .map(|(i, (rho, label, gr, origin))| Row {
                tomogram: encode(rho),
                label: *label,
                gr: *gr,
                origin: *origin,
                seed: SeedSpec::new(3, i as u64),
            })
            .collect();
        let manifest = DatasetManifest {
            format_version: FORMAT_VERSION,
            master_seed: 3,
            target_per_class: 1,
            artificial_fraction: 0.5,
            epsilon: 1e-5,
            counts: [1, 1, 1],
            artificial_pptes: 1,
            raw_draws: 17,
            ppt_draws: 1,
            pptes_draws: 0,
            artificial_attempts: 2,
            rejections: BTreeMap::from([("coincident_edges".to_string(), 1)]),
            complete: true,
            fidelity: FidelityStats {
                sample: Some(MeanFidelity { squared: 0.1 + 0.2, root: 0.7 }),
                per_class: [None, None, None],
            },
        };
        Dataset { rows, manifest, rejections: vec!["3 9 artificial coincident edges distance 1e-4".into()] }
    }

    #[test]
    fn roundtrip_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        let data = sample();
        save_dataset(&a, &data).unwrap();
        let loaded = load_dataset(&a).unwrap();
        assert_eq!(loaded, data);
        save_dataset(&b, &loaded).unwrap();
        for f in [STATES_FILE, ORIGINS_FILE, MANIFEST_FILE, REJECTIONS_FILE] {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
        }
        let text = fs::read_to_string(a.join(STATES_FILE)).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("c_1,c_2,"));
        assert!(header.ends_with(",c_80,label,gr"));
    }

    #[test]
    fn unknown_label_and_version_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(dir.path(), &sample()).unwrap();
        let states = dir.path().join(STATES_FILE);
        let text = fs::read_to_string(&states).unwrap().replace(",PPTES,", ",BOUND,");
        fs::write(&states, text).unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(err.to_string().contains("BOUND"), "{err}");

        save_dataset(dir.path(), &sample()).unwrap();
        let manifest = dir.path().join(MANIFEST_FILE);
        let text = fs::read_to_string(&manifest).unwrap().replace("format_version=1", "format_version=2");
        fs::write(&manifest, text).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::Version { expected: 1, found: 2 })));
    }

    #[test]
    fn verify_names_the_bad_row() {
        let mut data = sample();
        assert!(verify_dataset(&data).is_ok());
        data.rows[2].label = ClassLabel::Sep;
        let report = verify_dataset(&data);
        assert_eq!(report.failures[0].0, 3);
        assert!(report.failures[0].1.contains("NPT"), "{:?}", report.failures);
    }

    #[test]
    fn feature_table_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let data = sample();
        for expand in [false, true] {
            let t = FeatureTable::from_rows(&data.rows, expand).unwrap();
            assert_eq!(t.width(), if expand { 3400 } else { 80 });
            let path = dir.path().join("f.csv");
            save_features(&path, &t).unwrap();
            assert_eq!(load_features(&path).unwrap(), t);
            let c: Vec<Vec<f64>> = t.features.iter().map(|f| f[..80].to_vec()).collect();
            assert_eq!(load_tomograms(&path).unwrap(), c);
        }
        std::fs::write(dir.path().join("bad.csv"), "c_1,c_2\n0,0\n").unwrap();
        assert!(load_tomograms(&dir.path().join("bad.csv")).unwrap_err().to_string().contains("c_3"));
    }
}
