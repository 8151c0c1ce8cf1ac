//! Record schema, CSV ingestion, stratified splitting and folds, and the
//! synthetic data generator used by tests and the demo.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SplitMix64;

pub const LABEL_COLUMN: &str = "HeartDisease";
pub const N_FEATURES: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureKind {
    Numeric,
    Categorical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureSpec {
    pub name: &'static str,
    pub kind: FeatureKind,
    /// A value that marks the cell as missing (physiologically impossible).
    pub missing_sentinel: Option<f64>,
}

const fn numeric(name: &'static str, missing_sentinel: Option<f64>) -> FeatureSpec {
    FeatureSpec {
        name,
        kind: FeatureKind::Numeric,
        missing_sentinel,
    }
}

const fn categorical(name: &'static str) -> FeatureSpec {
    FeatureSpec {
        name,
        kind: FeatureKind::Categorical,
        missing_sentinel: None,
    }
}

/// The canonical heart schema, in column order.
pub const SCHEMA: [FeatureSpec; N_FEATURES] = [
    numeric("Age", None),
    categorical("Sex"),
    categorical("ChestPainType"),
    numeric("RestingBP", Some(0.0)),
    numeric("Cholesterol", Some(0.0)),
    // 0/1 indicator: zero is a real value here
    numeric("FastingBS", None),
    categorical("RestingECG"),
    numeric("MaxHR", None),
    categorical("ExerciseAngina"),
    numeric("Oldpeak", None),
    categorical("ST_Slope"),
];

pub const AGE: usize = 0;
pub const SEX: usize = 1;

pub fn schema() -> &'static [FeatureSpec] {
    &SCHEMA
}

pub fn feature_index(name: &str) -> Option<usize> {
    SCHEMA.iter().position(|f| f.name == name)
}

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("file is empty")]
    EmptyFile,
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("duplicate header {0:?}")]
    DuplicateHeader(String),
    #[error("row {row}, column {column:?}: cannot parse {content:?}")]
    UnparsableCell {
        row: usize,
        column: String,
        content: String,
    },
    #[error("record {row} does not conform to the schema: {reason}")]
    NonConforming { row: usize, reason: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset contains a single class")]
    SingleClassDataset,
    #[error("test fraction {0} is outside (0, 1)")]
    FractionOutOfRange(f64),
    #[error("k = {k} exceeds the record count {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("k = {0} is below 2")]
    KTooSmall(usize),
    #[error("positive fraction {0} is outside (0, 1)")]
    BadFraction(f64),
    #[error("need at least 2 records, got {0}")]
    TooFewRecords(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Num(f64),
    Cat(String),
}

impl Cell {
    pub fn as_num(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Cat(_) => None,
        }
    }

    pub fn as_cat(&self) -> Option<&str> {
        match self {
            Cell::Cat(s) => Some(s),
            Cell::Num(_) => None,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Display for f64 is the shortest string that parses back exactly
            Cell::Num(v) => write!(f, "{v}"),
            Cell::Cat(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub values: Vec<Cell>,
    pub label: u8,
}

impl RawRecord {
    pub fn num(&self, col: usize) -> f64 {
        self.values[col].as_num().expect("numeric column")
    }

    pub fn cat(&self, col: usize) -> &str {
        self.values[col].as_cat().expect("categorical column")
    }

    fn csv_line(&self) -> String {
        let mut line = String::new();
        for cell in &self.values {
            line.push_str(&cell.to_string());
            line.push(',');
        }
        line.push_str(if self.label == 1 { "1" } else { "0" });
        line
    }
}

/// Checks a feature row against the schema.
pub fn check_cells(cells: &[Cell]) -> Result<(), String> {
    if cells.len() != N_FEATURES {
        return Err(format!("expected {N_FEATURES} cells, got {}", cells.len()));
    }
    for (spec, cell) in SCHEMA.iter().zip(cells) {
        match (spec.kind, cell) {
            (FeatureKind::Numeric, Cell::Num(v)) if v.is_finite() => {}
            (FeatureKind::Categorical, Cell::Cat(s)) if !s.is_empty() => {}
            _ => return Err(format!("bad cell {cell:?} for {}", spec.name)),
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<RawRecord>,
    source: String,
}

impl Dataset {
    pub fn new(records: Vec<RawRecord>, source: impl Into<String>) -> Result<Self, DataError> {
        for (i, r) in records.iter().enumerate() {
            check_cells(&r.values).map_err(|reason| DataError::NonConforming { row: i + 1, reason })?;
            if r.label > 1 {
                return Err(DataError::NonConforming {
                    row: i + 1,
                    reason: format!("label {} is not binary", r.label),
                });
            }
        }
        Ok(Dataset {
            records,
            source: source.into(),
        })
    }

    pub fn schema(&self) -> &'static [FeatureSpec] {
        &SCHEMA
    }

    pub fn records(&self) -> &[RawRecord] {
        &self.records
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn positives(&self) -> usize {
        self.records.iter().filter(|r| r.label == 1).count()
    }

    /// New dataset made of the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            source: self.source.clone(),
        }
    }

    /// Mutable access for tests that perturb rows. Cells must stay schema-conformant.
    #[doc(hidden)]
    pub fn records_mut(&mut self) -> &mut [RawRecord] {
        &mut self.records
    }

    pub fn to_csv(&self) -> String {
        let mut out = header_line(true);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.csv_line());
            out.push('\n');
        }
        out
    }

    fn require_both_classes(&self) -> Result<(), DataError> {
        let pos = self.positives();
        if pos == 0 || pos == self.len() {
            Err(DataError::SingleClassDataset)
        } else {
            Ok(())
        }
    }

    /// Per-class row indices in a canonical order that depends on row
    /// content rather than row position.
    fn canonical_class_indices(&self) -> [Vec<usize>; 2] {
        let keys: Vec<String> = self.records.iter().map(RawRecord::csv_line).collect();
        let mut classes = [Vec::new(), Vec::new()];
        for (i, r) in self.records.iter().enumerate() {
            classes[r.label as usize].push(i);
        }
        for class in &mut classes {
            class.sort_by(|&a, &b| keys[a].cmp(&keys[b]).then(a.cmp(&b)));
        }
        classes
    }
}

pub fn header_line(with_label: bool) -> String {
    let mut names: Vec<&str> = SCHEMA.iter().map(|f| f.name).collect();
    if with_label {
        names.push(LABEL_COLUMN);
    }
    names.join(",")
}

/// Column positions of each schema feature (and optionally the label) in a header.
fn map_header(header: &csv::StringRecord, need_label: bool) -> Result<(Vec<usize>, Option<usize>), DataError> {
    let mut positions: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, name) in header.iter().enumerate() {
        if positions.insert(name, i).is_some() {
            return Err(DataError::DuplicateHeader(name.to_string()));
        }
    }
    let mut cols = Vec::with_capacity(N_FEATURES);
    for spec in &SCHEMA {
        match positions.get(spec.name) {
            Some(&i) => cols.push(i),
            None => return Err(DataError::MissingColumn(spec.name.to_string())),
        }
    }
    let label = positions.get(LABEL_COLUMN).copied();
    if need_label && label.is_none() {
        return Err(DataError::MissingColumn(LABEL_COLUMN.to_string()));
    }
    Ok((cols, label))
}

fn parse_cells(row: usize, record: &csv::StringRecord, cols: &[usize]) -> Result<Vec<Cell>, DataError> {
    let mut cells = Vec::with_capacity(N_FEATURES);
    for (spec, &col) in SCHEMA.iter().zip(cols) {
        let raw = record.get(col).unwrap_or("");
        let content = raw.trim();
        let bad = || DataError::UnparsableCell {
            row,
            column: spec.name.to_string(),
            content: raw.to_string(),
        };
        let cell = match spec.kind {
            FeatureKind::Numeric => {
                let v: f64 = content.parse().map_err(|_| bad())?;
                if !v.is_finite() {
                    return Err(bad());
                }
                Cell::Num(v)
            }
            FeatureKind::Categorical => {
                if content.is_empty() {
                    return Err(bad());
                }
                Cell::Cat(content.to_string())
            }
        };
        cells.push(cell);
    }
    Ok(cells)
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes())
}

fn read_header(reader: &mut csv::Reader<&[u8]>) -> Result<csv::StringRecord, DataError> {
    let header = reader.headers().map_err(|e| DataError::Io {
        path: String::new(),
        message: e.to_string(),
    })?;
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(DataError::EmptyFile);
    }
    Ok(header.clone())
}

fn csv_row_error(row: usize, e: csv::Error) -> DataError {
    DataError::UnparsableCell {
        row,
        column: String::new(),
        content: e.to_string(),
    }
}

/// Parses labelled CSV text. Rows are numbered from 1 (first data row).
pub fn parse_csv(text: &str, source: &str) -> Result<Dataset, DataError> {
    let mut reader = csv_reader(text);
    let header = read_header(&mut reader)?;
    let (cols, label_col) = map_header(&header, true)?;
    let label_col = label_col.expect("label checked");
    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| csv_row_error(row, e))?;
        let values = parse_cells(row, &rec, &cols)?;
        let raw_label = rec.get(label_col).unwrap_or("");
        let label = match raw_label.trim() {
            "0" => 0,
            "1" => 1,
            _ => {
                return Err(DataError::UnparsableCell {
                    row,
                    column: LABEL_COLUMN.to_string(),
                    content: raw_label.to_string(),
                })
            }
        };
        records.push(RawRecord { values, label });
    }
    Dataset::new(records, source)
}

/// Parses unlabelled feature rows (a label column, if present, is ignored).
pub fn parse_features_csv(text: &str) -> Result<Vec<Vec<Cell>>, DataError> {
    let mut reader = csv_reader(text);
    let header = read_header(&mut reader)?;
    let (cols, _) = map_header(&header, false)?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_row_error(i + 1, e))?;
        rows.push(parse_cells(i + 1, &rec, &cols)?);
    }
    Ok(rows)
}

fn read_text(path: &Path) -> Result<String, DataError> {
    std::fs::read_to_string(path).map_err(|e| DataError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    parse_csv(&read_text(path)?, &path.display().to_string())
}

pub fn load_features_csv(path: impl AsRef<Path>) -> Result<Vec<Vec<Cell>>, DataError> {
    parse_features_csv(&read_text(path.as_ref())?)
}

// ---------------------------------------------------------------------------
// Summary

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericSummary {
    pub name: String,
    /// Non-missing values.
    pub count: usize,
    pub missing: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoricalSummary {
    pub name: String,
    pub counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryReport {
    pub records: usize,
    pub positives: usize,
    pub positive_fraction: f64,
    pub numeric: Vec<NumericSummary>,
    pub categorical: Vec<CategoricalSummary>,
}

pub fn summarize(data: &Dataset) -> Result<SummaryReport, DataError> {
    if data.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    let mut numeric = Vec::new();
    let mut categorical = Vec::new();
    for (col, spec) in SCHEMA.iter().enumerate() {
        match spec.kind {
            FeatureKind::Numeric => {
                let all = data.records.iter().map(|r| r.num(col));
                let present: Vec<f64> = all.filter(|v| Some(*v) != spec.missing_sentinel).collect();
                let missing = data.len() - present.len();
                let (mean, std) = mean_std(&present);
                numeric.push(NumericSummary {
                    name: spec.name.to_string(),
                    count: present.len(),
                    missing,
                    min: present.iter().copied().fold(f64::INFINITY, f64::min),
                    max: present.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    mean,
                    std,
                });
            }
            FeatureKind::Categorical => {
                let mut counts = BTreeMap::new();
                for r in &data.records {
                    *counts.entry(r.cat(col).to_string()).or_insert(0) += 1;
                }
                categorical.push(CategoricalSummary {
                    name: spec.name.to_string(),
                    counts,
                });
            }
        }
    }
    let positives = data.positives();
    Ok(SummaryReport {
        records: data.len(),
        positives,
        positive_fraction: positives as f64 / data.len() as f64,
        numeric,
        categorical,
    })
}

/// Mean and population standard deviation; `(NaN, NaN)` for an empty slice.
pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl fmt::Display for SummaryReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "records: {}  positives: {} ({:.4})",
            self.records, self.positives, self.positive_fraction
        )?;
        writeln!(
            f,
            "{:<14} {:>6} {:>7} {:>10} {:>10} {:>10} {:>10}",
            "feature", "count", "missing", "min", "max", "mean", "std"
        )?;
        for s in &self.numeric {
            writeln!(
                f,
                "{:<14} {:>6} {:>7} {:>10.3} {:>10.3} {:>10.3} {:>10.3}",
                s.name, s.count, s.missing, s.min, s.max, s.mean, s.std
            )?;
        }
        for c in &self.categorical {
            let parts: Vec<String> = c.counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
            writeln!(f, "{:<14} {}", c.name, parts.join(" "))?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Splits

#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub train: Dataset,
    pub test: Dataset,
    /// Input row indices of each part, ascending.
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
    pub test_fraction: f64,
}

/// Per-class test quotas: `round(count * fraction)` each, then nudged by one
/// so the total equals `round(n * fraction)`.
fn class_quotas(counts: [usize; 2], fraction: f64) -> [usize; 2] {
    let exact = counts.map(|c| c as f64 * fraction);
    let mut quota = exact.map(|e| e.round() as usize);
    let target = ((counts[0] + counts[1]) as f64 * fraction).round() as usize;
    let total = quota[0] + quota[1];
    if total > target {
        // drop from the class that was rounded up the most
        let c = if quota[0] as f64 - exact[0] >= quota[1] as f64 - exact[1] { 0 } else { 1 };
        quota[c] -= 1;
    } else if total < target {
        let c = if exact[0] - quota[0] as f64 >= exact[1] - quota[1] as f64 { 0 } else { 1 };
        quota[c] += 1;
    }
    quota
}

/// Indices of `[class0, class1]` shuffled under `rng`, in canonical content order first.
fn shuffled_classes(data: &Dataset, rng: &mut SplitMix64) -> [Vec<usize>; 2] {
    let mut classes = data.canonical_class_indices();
    for class in &mut classes {
        rng.shuffle(class);
    }
    classes
}

pub fn stratified_split(data: &Dataset, test_fraction: f64, seed: u64) -> Result<SplitResult, DataError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::FractionOutOfRange(test_fraction));
    }
    data.require_both_classes()?;
    let mut rng = SplitMix64::new(seed);
    let classes = shuffled_classes(data, &mut rng);
    let quotas = class_quotas([classes[0].len(), classes[1].len()], test_fraction);
    let mut test_indices = Vec::new();
    let mut train_indices = Vec::new();
    for (class, quota) in classes.iter().zip(quotas) {
        test_indices.extend_from_slice(&class[..quota]);
        train_indices.extend_from_slice(&class[quota..]);
    }
    test_indices.sort_unstable();
    train_indices.sort_unstable();
    Ok(SplitResult {
        train: data.subset(&train_indices),
        test: data.subset(&test_indices),
        train_indices,
        test_indices,
        seed,
        test_fraction,
    })
}

/// Stratified `(kept, held_out)` index sets over a bare label vector, using
/// the same per-class quota rule as [`stratified_split`]. Rows are keyed by
/// position only.
pub fn stratified_holdout(labels: &[u8], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(DataError::FractionOutOfRange(fraction));
    }
    let mut classes = [Vec::new(), Vec::new()];
    for (i, &y) in labels.iter().enumerate() {
        classes[y as usize].push(i);
    }
    if classes.iter().any(Vec::is_empty) {
        return Err(DataError::SingleClassDataset);
    }
    let mut rng = SplitMix64::new(seed);
    for class in &mut classes {
        rng.shuffle(class);
    }
    let quotas = class_quotas([classes[0].len(), classes[1].len()], fraction);
    let mut held = Vec::new();
    let mut kept = Vec::new();
    for (class, quota) in classes.iter().zip(quotas) {
        held.extend_from_slice(&class[..quota]);
        kept.extend_from_slice(&class[quota..]);
    }
    held.sort_unstable();
    kept.sort_unstable();
    Ok((kept, held))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Stratified k folds: each class is shuffled and dealt round-robin, with the
/// dealing position carried from one class to the next so fold sizes differ
/// by at most one.
pub fn kfold(data: &Dataset, k: usize, seed: u64) -> Result<Vec<Fold>, DataError> {
    kfold_labels(&data.labels(), k, seed, Some(data))
}

/// Same as [`kfold`] for a bare label vector (row order is the only key).
pub fn kfold_by_labels(labels: &[u8], k: usize, seed: u64) -> Result<Vec<Fold>, DataError> {
    kfold_labels(labels, k, seed, None)
}

fn kfold_labels(labels: &[u8], k: usize, seed: u64, data: Option<&Dataset>) -> Result<Vec<Fold>, DataError> {
    let n = labels.len();
    if k < 2 {
        return Err(DataError::KTooSmall(k));
    }
    if k > n {
        return Err(DataError::KTooLarge { k, n });
    }
    let mut rng = SplitMix64::new(seed);
    let classes = match data {
        Some(d) => shuffled_classes(d, &mut rng),
        None => {
            let mut classes = [Vec::new(), Vec::new()];
            for (i, &y) in labels.iter().enumerate() {
                classes[y as usize].push(i);
            }
            for class in &mut classes {
                rng.shuffle(class);
            }
            classes
        }
    };
    if classes.iter().any(|c| c.len() < k) {
        return Err(DataError::SingleClassDataset);
    }
    let mut assignment = vec![0usize; n];
    for (pos, &i) in classes.iter().flatten().enumerate() {
        assignment[i] = pos % k;
    }
    Ok((0..k)
        .map(|f| {
            let (validation, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| assignment[i] == f);
            Fold { train, validation }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Synthetic data
//
// Negatives and positives come from two fixed distributions:
//
// | feature        | negative (0)                 | positive (1)                 |
// |----------------|------------------------------|------------------------------|
// | Age            | N(47, 7) in [28, 77], int    | N(59, 7) in [28, 77], int    |
// | Sex            | M 0.60                       | M 0.90                       |
// | ChestPainType  | ATA .45 NAP .35 ASY .15 TA .05 | ASY .80 NAP .10 ATA .05 TA .05 |
// | RestingBP      | N(126, 12), int, 1% zero     | N(140, 14), int, 1% zero     |
// | Cholesterol    | N(215, 35), int, 5% zero     | N(255, 40), int, 15% zero    |
// | FastingBS      | 1 w.p. 0.10                  | 1 w.p. 0.35                  |
// | RestingECG     | Normal .65 ST .15 LVH .20    | Normal .50 ST .28 LVH .22    |
// | MaxHR          | N(158, 15), int              | N(122, 15), int              |
// | ExerciseAngina | Y 0.10                       | Y 0.70                       |
// | Oldpeak        | N(0.3, 0.4) in [0, 6], 0.1   | N(1.9, 0.8) in [0, 6], 0.1   |
// | ST_Slope       | Up .85 Flat .13 Down .02     | Up .07 Flat .80 Down .13     |
//
// Zero RestingBP/Cholesterol cells are the missing sentinels.

struct ClassProfile {
    age: (f64, f64),
    male: f64,
    chest_pain: [f64; 4],
    resting_bp: (f64, f64),
    bp_missing: f64,
    cholesterol: (f64, f64),
    chol_missing: f64,
    fasting_bs: f64,
    resting_ecg: [f64; 3],
    max_hr: (f64, f64),
    angina: f64,
    oldpeak: (f64, f64),
    st_slope: [f64; 3],
}

const CHEST_PAIN: [&str; 4] = ["ATA", "NAP", "ASY", "TA"];
const RESTING_ECG: [&str; 3] = ["Normal", "ST", "LVH"];
const ST_SLOPE: [&str; 3] = ["Up", "Flat", "Down"];

const PROFILES: [ClassProfile; 2] = [
    ClassProfile {
        age: (47.0, 7.0),
        male: 0.60,
        chest_pain: [0.45, 0.35, 0.15, 0.05],
        resting_bp: (126.0, 12.0),
        bp_missing: 0.01,
        cholesterol: (215.0, 35.0),
        chol_missing: 0.05,
        fasting_bs: 0.10,
        resting_ecg: [0.65, 0.15, 0.20],
        max_hr: (158.0, 15.0),
        angina: 0.10,
        oldpeak: (0.3, 0.4),
        st_slope: [0.85, 0.13, 0.02],
    },
    ClassProfile {
        age: (59.0, 7.0),
        male: 0.90,
        chest_pain: [0.05, 0.10, 0.80, 0.05],
        resting_bp: (140.0, 14.0),
        bp_missing: 0.01,
        cholesterol: (255.0, 40.0),
        chol_missing: 0.15,
        fasting_bs: 0.35,
        resting_ecg: [0.50, 0.28, 0.22],
        max_hr: (122.0, 15.0),
        angina: 0.70,
        oldpeak: (1.9, 0.8),
        st_slope: [0.07, 0.80, 0.13],
    },
];

fn synth_record(rng: &mut SplitMix64, label: u8) -> RawRecord {
    let p = &PROFILES[label as usize];
    let int = |v: f64| v.round();
    let age = int(rng.normal(p.age.0, p.age.1).clamp(28.0, 77.0));
    let sex = if rng.bernoulli(p.male) { "M" } else { "F" };
    let chest = CHEST_PAIN[rng.categorical(&p.chest_pain)];
    let mut bp = int(rng.normal(p.resting_bp.0, p.resting_bp.1).max(80.0));
    if rng.bernoulli(p.bp_missing) {
        bp = 0.0;
    }
    let mut chol = int(rng.normal(p.cholesterol.0, p.cholesterol.1).max(100.0));
    if rng.bernoulli(p.chol_missing) {
        chol = 0.0;
    }
    let fbs = if rng.bernoulli(p.fasting_bs) { 1.0 } else { 0.0 };
    let ecg = RESTING_ECG[rng.categorical(&p.resting_ecg)];
    let hr = int(rng.normal(p.max_hr.0, p.max_hr.1).clamp(60.0, 202.0));
    let angina = if rng.bernoulli(p.angina) { "Y" } else { "N" };
    let oldpeak = (rng.normal(p.oldpeak.0, p.oldpeak.1).clamp(0.0, 6.0) * 10.0).round() / 10.0;
    let slope = ST_SLOPE[rng.categorical(&p.st_slope)];
    RawRecord {
        values: vec![
            Cell::Num(age),
            Cell::Cat(sex.into()),
            Cell::Cat(chest.into()),
            Cell::Num(bp),
            Cell::Num(chol),
            Cell::Num(fbs),
            Cell::Cat(ecg.into()),
            Cell::Num(hr),
            Cell::Cat(angina.into()),
            Cell::Num(oldpeak),
            Cell::Cat(slope.into()),
        ],
        label,
    }
}

/// Schema-conformant synthetic data with `round(n * positive_fraction)`
/// positives (at least one of each class), drawn from the fixed class
/// profiles above.
pub fn synth_generate(n: usize, positive_fraction: f64, seed: u64) -> Result<Dataset, DataError> {
    if !(positive_fraction > 0.0 && positive_fraction < 1.0) {
        return Err(DataError::BadFraction(positive_fraction));
    }
    if n < 2 {
        return Err(DataError::TooFewRecords(n));
    }
    let positives = ((n as f64 * positive_fraction).round() as usize).clamp(1, n - 1);
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i < positives)).collect();
    let mut rng = SplitMix64::new(seed);
    rng.shuffle(&mut labels);
    let records = labels.into_iter().map(|y| synth_record(&mut rng, y)).collect();
    Dataset::new(records, format!("synthetic(n={n}, positive_fraction={positive_fraction}, seed={seed})"))
}
