//! Feature transformations learned on a training partition: cohort-median
//! imputation, label encoding, standard scaling, outlier flags, and SMOTE.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Cell, Dataset, FeatureKind, AGE, N_FEATURES, SCHEMA, SEX};
use crate::rng::SplitMix64;

pub const DEFAULT_OUTLIER_Z: f64 = 3.0;

#[derive(Debug, Error, PartialEq)]
pub enum PreprocessError {
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("unseen category {token:?} for feature {feature}")]
    UnseenCategory { feature: String, token: String },
    #[error("feature {0} has no non-missing training values")]
    AllMissing(String),
    #[error("row does not match the schema: {0}")]
    SchemaMismatch(String),
    #[error("minority class has {0} rows, SMOTE needs at least 2")]
    MinorityTooSmall(usize),
    #[error("SMOTE k = {k} must be in 1..={max}")]
    KTooLarge { k: usize, max: usize },
    #[error("outlier threshold must be positive, got {0}")]
    BadThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UnseenPolicy {
    #[default]
    Error,
    MapToMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleStats {
    pub mean: f64,
    /// Population standard deviation; exactly 0 for constant columns.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortMedians {
    pub sex: String,
    /// floor(Age / 10) * 10
    pub age_decade: i64,
    pub medians: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPreprocessor {
    /// Lexicographically sorted tokens per categorical feature; the encoded
    /// value of a token is its position.
    pub vocab: BTreeMap<String, Vec<String>>,
    /// Most frequent training token per categorical feature (ties: smallest token).
    pub modes: BTreeMap<String, String>,
    pub scale_stats: BTreeMap<String, ScaleStats>,
    pub impute_table: Vec<CohortMedians>,
    pub global_medians: BTreeMap<String, f64>,
    pub unseen_policy: UnseenPolicy,
}

/// Dense row-major matrix of transformed features with binary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
    pub labels: Vec<u8>,
    pub column_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(values: Vec<f64>, labels: Vec<u8>, column_names: Vec<String>) -> Self {
        let cols = column_names.len();
        let rows = labels.len();
        assert_eq!(values.len(), rows * cols, "matrix shape");
        FeatureMatrix {
            rows,
            cols,
            values,
            labels,
            column_names,
        }
    }

    /// Matrix from explicit rows, with generic column names `x0, x1, ...`.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<u8>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let names = (0..cols).map(|c| format!("x{c}")).collect();
        FeatureMatrix::new(rows.concat(), labels, names)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, c: usize) -> f64 {
        self.values[i * self.cols + c]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.labels.iter().filter(|&&y| y == 1).count();
        [self.rows - pos, pos]
    }

    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix::new(
            values,
            indices.iter().map(|&i| self.labels[i]).collect(),
            self.column_names.clone(),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.column_names.join(",");
        out.push_str(",HeartDisease\n");
        for (row, y) in self.iter_rows().zip(&self.labels) {
            for v in row {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{y}\n"));
        }
        out
    }
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

fn age_decade(age: f64) -> i64 {
    (age / 10.0).floor() as i64 * 10
}

fn is_missing(col: usize, v: f64) -> bool {
    SCHEMA[col].missing_sentinel == Some(v)
}

fn numeric_columns() -> impl Iterator<Item = usize> {
    (0..N_FEATURES).filter(|&c| SCHEMA[c].kind == FeatureKind::Numeric)
}

pub fn fit(train: &Dataset, unseen_policy: UnseenPolicy) -> Result<FittedPreprocessor, PreprocessError> {
    if train.is_empty() {
        return Err(PreprocessError::EmptyDataset);
    }
    let records = train.records();

    let mut vocab = BTreeMap::new();
    let mut modes = BTreeMap::new();
    for (col, spec) in SCHEMA.iter().enumerate() {
        if spec.kind != FeatureKind::Categorical {
            continue;
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for r in records {
            *counts.entry(r.cat(col)).or_insert(0) += 1;
        }
        // BTreeMap iteration is sorted, so the first max is the smallest token
        let mode = counts
            .iter()
            .fold(None::<(&str, usize)>, |best, (&tok, &c)| match best {
                Some((_, bc)) if bc >= c => best,
                _ => Some((tok, c)),
            })
            .map(|(t, _)| t.to_string())
            .expect("non-empty");
        vocab.insert(spec.name.to_string(), counts.keys().map(|t| t.to_string()).collect());
        modes.insert(spec.name.to_string(), mode);
    }

    // medians over non-missing values, globally and per (sex, decade) cohort
    let mut global_medians = BTreeMap::new();
    let mut cohorts: BTreeMap<(String, i64), BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for r in records {
        let key = (r.cat(SEX).to_string(), age_decade(r.num(AGE)));
        let entry = cohorts.entry(key).or_default();
        for col in numeric_columns() {
            let v = r.num(col);
            if !is_missing(col, v) {
                entry.entry(col).or_default().push(v);
            }
        }
    }
    for col in numeric_columns() {
        let mut present: Vec<f64> = records.iter().map(|r| r.num(col)).filter(|&v| !is_missing(col, v)).collect();
        let m = median(&mut present).ok_or_else(|| PreprocessError::AllMissing(SCHEMA[col].name.to_string()))?;
        global_medians.insert(SCHEMA[col].name.to_string(), m);
    }
    let impute_table = cohorts
        .into_iter()
        .map(|((sex, age_decade), mut cols)| CohortMedians {
            sex,
            age_decade,
            medians: cols
                .iter_mut()
                .filter_map(|(&col, vals)| median(vals).map(|m| (SCHEMA[col].name.to_string(), m)))
                .collect(),
        })
        .collect();

    let mut fp = FittedPreprocessor {
        vocab,
        modes,
        scale_stats: BTreeMap::new(),
        impute_table,
        global_medians,
        unseen_policy,
    };

    // scaling statistics on imputed training values
    let imputed: Vec<Vec<f64>> = records.iter().map(|r| fp.impute(&r.values)).collect();
    for col in numeric_columns() {
        let column: Vec<f64> = imputed.iter().map(|row| row[col]).collect();
        let constant = column.iter().all(|&v| v == column[0]);
        let (mean, std) = crate::dataset::mean_std(&column);
        let stats = if constant {
            ScaleStats { mean: column[0], std: 0.0 }
        } else {
            ScaleStats { mean, std }
        };
        fp.scale_stats.insert(SCHEMA[col].name.to_string(), stats);
    }
    Ok(fp)
}

impl FittedPreprocessor {
    fn cohort(&self, sex: &str, decade: i64) -> Option<&CohortMedians> {
        self.impute_table
            .binary_search_by(|c| (c.sex.as_str(), c.age_decade).cmp(&(sex, decade)))
            .ok()
            .map(|i| &self.impute_table[i])
    }

    /// Numeric cells with sentinels replaced by cohort (or global) medians;
    /// categorical positions hold 0.
    fn impute(&self, cells: &[Cell]) -> Vec<f64> {
        let sex = cells[SEX].as_cat().unwrap_or("");
        let decade = age_decade(cells[AGE].as_num().unwrap_or(0.0));
        let cohort = self.cohort(sex, decade);
        let mut out = vec![0.0; N_FEATURES];
        for col in numeric_columns() {
            let v = cells[col].as_num().expect("numeric");
            out[col] = if is_missing(col, v) {
                let name = SCHEMA[col].name;
                cohort
                    .and_then(|c| c.medians.get(name))
                    .or_else(|| self.global_medians.get(name))
                    .copied()
                    .expect("global median for every numeric feature")
            } else {
                v
            };
        }
        out
    }

    pub fn column_names(&self) -> Vec<String> {
        SCHEMA.iter().map(|f| f.name.to_string()).collect()
    }

    /// Encodes, imputes and scales one schema row.
    pub fn transform_row(&self, cells: &[Cell]) -> Result<Vec<f64>, PreprocessError> {
        crate::dataset::check_cells(cells).map_err(PreprocessError::SchemaMismatch)?;
        let mut out = self.impute(cells);
        for (col, spec) in SCHEMA.iter().enumerate() {
            match spec.kind {
                FeatureKind::Numeric => {
                    let s = self.scale_stats[spec.name];
                    out[col] = if s.std == 0.0 { 0.0 } else { (out[col] - s.mean) / s.std };
                }
                FeatureKind::Categorical => {
                    let token = cells[col].as_cat().expect("categorical");
                    let vocab = &self.vocab[spec.name];
                    let idx = match vocab.binary_search_by(|t| t.as_str().cmp(token)) {
                        Ok(i) => i,
                        Err(_) => match self.unseen_policy {
                            UnseenPolicy::Error => {
                                return Err(PreprocessError::UnseenCategory {
                                    feature: spec.name.to_string(),
                                    token: token.to_string(),
                                })
                            }
                            UnseenPolicy::MapToMode => {
                                let mode = &self.modes[spec.name];
                                vocab.iter().position(|t| t == mode).expect("mode in vocab")
                            }
                        },
                    };
                    out[col] = idx as f64;
                }
            }
        }
        Ok(out)
    }
}

pub fn transform(fp: &FittedPreprocessor, data: &Dataset) -> Result<FeatureMatrix, PreprocessError> {
    let mut values = Vec::with_capacity(data.len() * N_FEATURES);
    for r in data.records() {
        values.extend(fp.transform_row(&r.values)?);
    }
    Ok(FeatureMatrix::new(values, data.labels(), fp.column_names()))
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutlierReport {
    pub rows: usize,
    pub cols: usize,
    /// Row-major, same shape as the matrix.
    pub flags: Vec<bool>,
    pub threshold_z: f64,
    pub count: usize,
}

impl OutlierReport {
    /// Flag count per column.
    pub fn per_column(&self) -> Vec<usize> {
        let mut counts = vec![0; self.cols];
        for (i, &f) in self.flags.iter().enumerate() {
            if f {
                counts[i % self.cols] += 1;
            }
        }
        counts
    }
}

/// Flags standardized numeric cells with `|z| > threshold_z`. Nothing is
/// removed; categorical columns are never flagged.
pub fn flag_outliers(m: &FeatureMatrix, threshold_z: f64) -> Result<OutlierReport, PreprocessError> {
    if !(threshold_z > 0.0) {
        return Err(PreprocessError::BadThreshold(threshold_z));
    }
    let numeric: Vec<bool> = m
        .column_names
        .iter()
        .map(|name| {
            SCHEMA
                .iter()
                .find(|f| f.name == name)
                .is_none_or(|f| f.kind == FeatureKind::Numeric)
        })
        .collect();
    let flags: Vec<bool> = m
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| numeric[i % m.cols] && v.abs() > threshold_z)
        .collect();
    let count = flags.iter().filter(|&&f| f).count();
    Ok(OutlierReport {
        rows: m.rows,
        cols: m.cols,
        flags,
        threshold_z,
        count,
    })
}

// ---------------------------------------------------------------------------

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Appends interpolated minority rows until both classes have the same
/// count. Each synthetic row is `x + u * (nn - x)` for a minority row `x`,
/// one of its `k` nearest minority neighbours `nn` (Euclidean, ties to the
/// earlier row) and `u` uniform in `[0, 1)`. Source rows are visited in a
/// seeded shuffled order, cycling when more rows are needed than exist.
pub fn smote(m: &FeatureMatrix, k: usize, seed: u64) -> Result<FeatureMatrix, PreprocessError> {
    smote_traced(m, k, seed).map(|(out, _)| out)
}

/// [`smote`], also returning the `(source, neighbour)` input rows behind
/// each synthetic row, in output order.
pub fn smote_traced(m: &FeatureMatrix, k: usize, seed: u64) -> Result<(FeatureMatrix, Vec<(usize, usize)>), PreprocessError> {
    let counts = m.class_counts();
    let minority_label: u8 = if counts[1] < counts[0] { 1 } else { 0 };
    let minority: Vec<usize> = (0..m.rows).filter(|&i| m.labels[i] == minority_label).collect();
    let needed = counts[0].abs_diff(counts[1]);
    if minority.len() < 2 {
        return Err(PreprocessError::MinorityTooSmall(minority.len()));
    }
    if k == 0 || k > minority.len() - 1 {
        return Err(PreprocessError::KTooLarge {
            k,
            max: minority.len() - 1,
        });
    }

    let neighbours: Vec<Vec<usize>> = minority
        .iter()
        .map(|&i| {
            let mut others: Vec<(f64, usize)> = minority
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| (squared_distance(m.row(i), m.row(j)), j))
                .collect();
            others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            others.truncate(k);
            others.into_iter().map(|(_, j)| j).collect()
        })
        .collect();

    let mut rng = SplitMix64::new(seed);
    let mut order: Vec<usize> = (0..minority.len()).collect();
    rng.shuffle(&mut order);

    let mut values = m.values.clone();
    values.reserve(needed * m.cols);
    let mut origins = Vec::with_capacity(needed);
    for s in 0..needed {
        let pick = order[s % order.len()];
        let nn_row = neighbours[pick][rng.below(k)];
        origins.push((minority[pick], nn_row));
        let x = m.row(minority[pick]);
        let nn = m.row(nn_row);
        let u = rng.next_f64();
        for (a, b) in x.iter().zip(nn) {
            let v = a + u * (b - a);
            values.push(v.clamp(a.min(*b), a.max(*b)));
        }
    }
    let mut labels = m.labels.clone();
    labels.extend(std::iter::repeat_n(minority_label, needed));
    Ok((FeatureMatrix::new(values, labels, m.column_names.clone()), origins))
}
