//! Confusion-matrix metrics, cross-validation and grid search.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bayes::GaussianNBModel;
use crate::boosting::BoostedEnsemble;
use crate::dataset::{kfold, Dataset};
use crate::pipeline::{fit_model, Algorithm, FittedModel, TrainConfig};
use crate::preprocess::{self, FeatureMatrix, FittedPreprocessor, UnseenPolicy};
use crate::rnn::RnnParams;
use crate::Result;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("predicted and actual lengths differ ({predicted} vs {actual})")]
    LengthMismatch { predicted: usize, actual: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("model expects {expected} features, matrix has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("threshold {0} is outside (0, 1)")]
    BadThreshold(f64),
    #[error("grid has no candidates")]
    EmptyGrid,
}

/// A fitted binary classifier producing `P(y = 1 | x)`.
pub trait Classifier {
    /// Expected row width, or `None` when any width is accepted.
    fn n_features(&self) -> Option<usize>;
    fn probability(&self, x: &[f64]) -> Result<f64>;
}

impl Classifier for GaussianNBModel {
    fn n_features(&self) -> Option<usize> {
        Some(self.n_features)
    }

    fn probability(&self, x: &[f64]) -> Result<f64> {
        Ok(self.predict_proba(x)?[1])
    }
}

impl Classifier for BoostedEnsemble {
    fn n_features(&self) -> Option<usize> {
        Some(self.n_features)
    }

    fn probability(&self, x: &[f64]) -> Result<f64> {
        Ok(self.predict_proba(x)?)
    }
}

/// The recurrent model reads any row length as a sequence.
impl Classifier for RnnParams {
    fn n_features(&self) -> Option<usize> {
        None
    }

    fn probability(&self, x: &[f64]) -> Result<f64> {
        Ok(self.predict_proba(x)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion(predicted: &[u8], actual: &[u8]) -> Result<ConfusionMatrix, EvalError> {
    if predicted.len() != actual.len() {
        return Err(EvalError::LengthMismatch {
            predicted: predicted.len(),
            actual: actual.len(),
        });
    }
    if predicted.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &a) in predicted.iter().zip(actual) {
        match (p == 1, a == 1) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// A metric value, or `None` when its denominator is zero.
pub type Metric = Option<f64>;

fn ratio(num: u64, den: u64) -> Metric {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn fmt_metric(m: Metric) -> String {
    m.map_or_else(|| "undefined".to_string(), |v| format!("{v:.4}"))
}

fn csv_metric(m: Metric) -> String {
    m.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_id: String,
    pub threshold: f64,
    pub matrix: ConfusionMatrix,
    pub accuracy: Metric,
    pub precision: Metric,
    pub recall: Metric,
    pub f1: Metric,
}

pub fn metrics(cm: ConfusionMatrix, threshold: f64, model_id: &str) -> EvalReport {
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    EvalReport {
        model_id: model_id.to_string(),
        threshold,
        matrix: cm,
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        precision,
        recall,
        f1,
    }
}

impl EvalReport {
    pub fn metric(&self, which: SelectionMetric) -> Metric {
        match which {
            SelectionMetric::Accuracy => self.accuracy,
            SelectionMetric::F1 => self.f1,
        }
    }
}

/// `1` iff `probability >= threshold`.
pub fn predictions(probabilities: &[f64], threshold: f64) -> Vec<u8> {
    probabilities.iter().map(|&p| u8::from(p >= threshold)).collect()
}

pub fn probabilities(model: &dyn Classifier, m: &FeatureMatrix) -> Result<Vec<f64>> {
    if let Some(expected) = model.n_features().filter(|&d| d != m.cols) {
        return Err(EvalError::DimensionMismatch { expected, got: m.cols }.into());
    }
    m.iter_rows().map(|x| model.probability(x)).collect()
}

pub fn evaluate_model(model: &dyn Classifier, m: &FeatureMatrix, threshold: f64, model_id: &str) -> Result<EvalReport> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(EvalError::BadThreshold(threshold).into());
    }
    let probs = probabilities(model, m)?;
    let cm = confusion(&predictions(&probs, threshold), &m.labels)?;
    Ok(metrics(cm, threshold, model_id))
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cm = &self.matrix;
        writeln!(f, "model      {}", self.model_id)?;
        writeln!(f, "threshold  {}", self.threshold)?;
        writeln!(f, "accuracy   {}", fmt_metric(self.accuracy))?;
        writeln!(f, "precision  {}", fmt_metric(self.precision))?;
        writeln!(f, "recall     {}", fmt_metric(self.recall))?;
        writeln!(f, "f1         {}  (derived)", fmt_metric(self.f1))?;
        write!(f, "confusion  tp={} fp={} fn={} tn={}", cm.tp, cm.fp, cm.fn_, cm.tn)
    }
}

/// Aligned table, one row per report.
pub fn format_table(reports: &[EvalReport]) -> String {
    let mut out = format!(
        "{:<18} {:>9} {:>9} {:>9} {:>9}\n",
        "Algorithm", "Accuracy", "Precision", "Recall", "F1*"
    );
    for r in reports {
        out.push_str(&format!(
            "{:<18} {:>9} {:>9} {:>9} {:>9}\n",
            r.model_id,
            fmt_metric(r.accuracy),
            fmt_metric(r.precision),
            fmt_metric(r.recall),
            fmt_metric(r.f1)
        ));
    }
    out.push_str("* F1 is derived from precision and recall\n");
    out
}

pub fn table_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("algorithm,accuracy,precision,recall,f1,tp,fp,fn,tn,threshold\n");
    for r in reports {
        let cm = &r.matrix;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.model_id,
            csv_metric(r.accuracy),
            csv_metric(r.precision),
            csv_metric(r.recall),
            csv_metric(r.f1),
            cm.tp,
            cm.fp,
            cm.fn_,
            cm.tn,
            r.threshold
        ));
    }
    out
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    /// Over the folds where the metric is defined.
    pub mean: Metric,
    /// Population standard deviation over the same folds.
    pub std: Metric,
}

impl MetricStats {
    pub fn of(values: impl IntoIterator<Item = Metric>) -> Self {
        let defined: Vec<f64> = values.into_iter().flatten().collect();
        if defined.is_empty() {
            return MetricStats { mean: None, std: None };
        }
        let (mean, std) = crate::dataset::mean_std(&defined);
        MetricStats {
            mean: Some(mean),
            std: Some(std),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub accuracy: MetricStats,
    pub precision: MetricStats,
    pub recall: MetricStats,
    pub f1: MetricStats,
}

impl CvSummary {
    pub fn of(reports: &[EvalReport]) -> Self {
        CvSummary {
            accuracy: MetricStats::of(reports.iter().map(|r| r.accuracy)),
            precision: MetricStats::of(reports.iter().map(|r| r.precision)),
            recall: MetricStats::of(reports.iter().map(|r| r.recall)),
            f1: MetricStats::of(reports.iter().map(|r| r.f1)),
        }
    }

    pub fn mean(&self, which: SelectionMetric) -> Metric {
        match which {
            SelectionMetric::Accuracy => self.accuracy.mean,
            SelectionMetric::F1 => self.f1.mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub report: EvalReport,
    pub preprocessor: FittedPreprocessor,
    pub model: FittedModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub folds: Vec<FoldOutcome>,
    pub summary: CvSummary,
}

impl CvResult {
    pub fn reports(&self) -> Vec<EvalReport> {
        self.folds.iter().map(|f| f.report.clone()).collect()
    }
}

/// Stratified k-fold evaluation. The preprocessor is refit on each fold's
/// training rows and SMOTE (if enabled) touches only those rows. A category
/// seen only in a validation fold maps to that fold's training mode.
pub fn cross_validate(cfg: &TrainConfig, data: &Dataset, k: usize, seed: u64, threshold: f64) -> Result<CvResult> {
    let folds = kfold(data, k, seed)?;
    let mut outcomes = Vec::with_capacity(k);
    for fold in &folds {
        let train = data.subset(&fold.train);
        let val = data.subset(&fold.validation);
        let fp = preprocess::fit(&train, UnseenPolicy::MapToMode)?;
        let train_m = preprocess::transform(&fp, &train)?;
        let val_m = preprocess::transform(&fp, &val)?;
        let fit = fit_model(cfg, &train_m)?;
        let report = evaluate_model(&fit.model, &val_m, threshold, cfg.algorithm.display_name())?;
        outcomes.push(FoldOutcome {
            report,
            preprocessor: fp,
            model: fit.model,
        });
    }
    let summary = CvSummary::of(&outcomes.iter().map(|o| o.report.clone()).collect::<Vec<_>>());
    Ok(CvResult { folds: outcomes, summary })
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    #[default]
    Accuracy,
    F1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Candidate values per hyperparameter; names iterate in sorted order.
    pub params: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub selection_metric: SelectionMetric,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_k() -> usize {
    5
}

fn default_seed() -> u64 {
    crate::pipeline::DEFAULT_SEED
}

impl GridSpec {
    /// Candidates in canonical order: lexicographic over candidate indices,
    /// with parameter names sorted and the first name most significant.
    pub fn candidates(&self) -> Vec<Vec<(String, f64)>> {
        let names: Vec<&String> = self.params.keys().collect();
        if names.is_empty() || self.params.values().any(Vec::is_empty) {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut idx = vec![0usize; names.len()];
        loop {
            out.push(
                names
                    .iter()
                    .zip(&idx)
                    .map(|(n, &i)| ((*n).clone(), self.params[*n][i]))
                    .collect(),
            );
            // odometer, last name fastest
            let mut pos = names.len();
            loop {
                if pos == 0 {
                    return out;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < self.params[names[pos]].len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }
}

pub fn format_params(params: &[(String, f64)]) -> String {
    params.iter().map(|(n, v)| format!("{n}={v}")).collect::<Vec<_>>().join(";")
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCandidate {
    pub params: Vec<(String, f64)>,
    pub folds: Vec<EvalReport>,
    pub summary: CvSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub algorithm: Algorithm,
    pub candidates: Vec<GridCandidate>,
    pub best: usize,
    pub selection_metric: SelectionMetric,
}

impl GridResult {
    pub fn best(&self) -> &GridCandidate {
        &self.candidates[self.best]
    }

    /// `model_id,params,fold,accuracy,precision,recall,f1`, one row per fold.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model_id,params,fold,accuracy,precision,recall,f1\n");
        for c in &self.candidates {
            let params = format_params(&c.params);
            for (i, r) in c.folds.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    self.algorithm.display_name(),
                    params,
                    i + 1,
                    csv_metric(r.accuracy),
                    csv_metric(r.precision),
                    csv_metric(r.recall),
                    csv_metric(r.f1)
                ));
            }
        }
        out
    }
}

/// Exhaustive grid search. The best candidate has the highest mean
/// selection metric; ties keep the earlier candidate in canonical order.
pub fn grid_search(spec: &GridSpec, base: &TrainConfig, data: &Dataset, threshold: f64) -> Result<GridResult> {
    let grid = spec.candidates();
    if grid.is_empty() {
        return Err(EvalError::EmptyGrid.into());
    }
    let mut candidates = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64)> = None;
    for (i, params) in grid.into_iter().enumerate() {
        let cfg = candidate_config(base, &params)?;
        let cv = cross_validate(&cfg, data, spec.k, spec.seed, threshold)?;
        let score = cv.summary.mean(spec.selection_metric).unwrap_or(f64::NEG_INFINITY);
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((i, score));
        }
        candidates.push(GridCandidate {
            params,
            folds: cv.reports(),
            summary: cv.summary,
        });
    }
    Ok(GridResult {
        algorithm: base.algorithm,
        candidates,
        best: best.expect("non-empty grid").0,
        selection_metric: spec.selection_metric,
    })
}

pub fn candidate_config(base: &TrainConfig, params: &[(String, f64)]) -> Result<TrainConfig> {
    let mut cfg = base.clone();
    for (name, value) in params {
        cfg.apply_param(name, *value)?;
    }
    Ok(cfg)
}
