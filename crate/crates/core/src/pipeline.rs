//! End-to-end training runs shared by the CLI and the browser demo.
//!
//! Order is fixed: stratified split, preprocessor fit on the training part,
//! transform both parts, SMOTE on training rows only, model fit, evaluation
//! on the untouched test rows.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bayes::{fit_nb, GaussianNBModel};
use crate::boosting::{fit_boosted, BoostConfig, BoostedEnsemble};
use crate::dataset::{stratified_holdout, stratified_split, Dataset, SplitResult};
use crate::eval::{evaluate_model, Classifier, EvalReport};
use crate::preprocess::{self, flag_outliers, smote, FeatureMatrix, FittedPreprocessor, OutlierReport, UnseenPolicy};
use crate::rng::SplitMix64;
use crate::rnn::{train_rnn, RnnParams, RnnTrainConfig, TrainHistory};
use crate::Result;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_SMOTE_K: usize = 5;
/// Share of the (pre-SMOTE) training rows the recurrent model holds out to
/// monitor validation loss for early stopping.
pub const DEFAULT_MONITOR_FRACTION: f64 = 0.2;

// independent random streams per stage
const SMOTE_STREAM: u64 = 1;
const MONITOR_STREAM: u64 = 2;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown algorithm {0:?} (expected nb, gb, xgb or rnn)")]
    UnknownAlgorithm(String),
    #[error("unknown hyperparameter {name:?} for {algorithm}")]
    UnknownParam { name: String, algorithm: String },
    #[error("hyperparameter {name} = {value} is invalid: {reason}")]
    BadValue { name: String, value: f64, reason: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Nb,
    Gb,
    Xgb,
    Rnn,
}

impl Algorithm {
    /// Row order of the comparison table.
    pub const TABLE_ORDER: [Algorithm; 4] = [Algorithm::Rnn, Algorithm::Nb, Algorithm::Gb, Algorithm::Xgb];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::Nb => "nb",
            Algorithm::Gb => "gb",
            Algorithm::Xgb => "xgb",
            Algorithm::Rnn => "rnn",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Algorithm::Nb => "NaiveBayes",
            Algorithm::Gb => "GradientBoosting",
            Algorithm::Xgb => "XGBoost",
            Algorithm::Rnn => "RNN",
        }
    }

    /// Hyperparameter names accepted by [`TrainConfig::apply_param`].
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Algorithm::Nb => &["smote_k"],
            Algorithm::Gb => &["n_rounds", "learning_rate", "max_depth", "min_child_weight", "smote_k"],
            Algorithm::Xgb => &["n_rounds", "learning_rate", "max_depth", "lambda", "gamma", "min_child_weight", "smote_k"],
            Algorithm::Rnn => &[
                "learning_rate",
                "rms_decay",
                "epsilon",
                "max_epochs",
                "patience",
                "batch_size",
                "hidden_size",
                "init_scale",
                "smote_k",
            ],
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "nb" => Ok(Algorithm::Nb),
            "gb" => Ok(Algorithm::Gb),
            "xgb" => Ok(Algorithm::Xgb),
            "rnn" => Ok(Algorithm::Rnn),
            other => Err(ConfigError::UnknownAlgorithm(other.to_string())),
        }
    }
}

/// Every knob of a reproducible training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub smote: bool,
    pub smote_k: usize,
    pub monitor_fraction: f64,
    pub unseen_policy: UnseenPolicy,
    /// Used by `gb` and `xgb`.
    pub boost: BoostConfig,
    /// Used by `rnn`.
    pub rnn: RnnTrainConfig,
}

impl TrainConfig {
    pub fn new(algorithm: Algorithm, seed: u64) -> Self {
        let boost = match algorithm {
            Algorithm::Gb => BoostConfig::first_order(),
            _ => BoostConfig::second_order(),
        };
        TrainConfig {
            algorithm,
            seed,
            smote: true,
            smote_k: DEFAULT_SMOTE_K,
            monitor_fraction: DEFAULT_MONITOR_FRACTION,
            unseen_policy: UnseenPolicy::Error,
            boost,
            rnn: RnnTrainConfig {
                seed,
                ..RnnTrainConfig::default()
            },
        }
    }

    /// Same run settings for a different algorithm (hyperparameters reset to
    /// that algorithm's defaults).
    pub fn for_algorithm(&self, algorithm: Algorithm) -> Self {
        TrainConfig {
            smote: self.smote,
            smote_k: self.smote_k,
            monitor_fraction: self.monitor_fraction,
            unseen_policy: self.unseen_policy,
            ..TrainConfig::new(algorithm, self.seed)
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.rnn.seed = seed;
    }

    /// Sets one named hyperparameter. Integer-valued names require an
    /// integral value.
    pub fn apply_param(&mut self, name: &str, value: f64) -> Result<(), ConfigError> {
        if !self.algorithm.param_names().contains(&name) {
            return Err(ConfigError::UnknownParam {
                name: name.to_string(),
                algorithm: self.algorithm.to_string(),
            });
        }
        let bad = |reason: &str| ConfigError::BadValue {
            name: name.to_string(),
            value,
            reason: reason.to_string(),
        };
        let count = || -> Result<usize, ConfigError> {
            if value.fract() == 0.0 && value >= 1.0 && value <= u32::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(bad("expected a positive integer"))
            }
        };
        let rnn = self.algorithm == Algorithm::Rnn;
        match name {
            "smote_k" => self.smote_k = count()?,
            "n_rounds" => self.boost.n_rounds = count()?,
            "max_depth" => self.boost.max_depth = count()?,
            "learning_rate" if rnn => self.rnn.learning_rate = value,
            "learning_rate" => self.boost.learning_rate = value,
            "lambda" => self.boost.lambda = value,
            "gamma" => self.boost.gamma = value,
            "min_child_weight" => self.boost.min_child_weight = value,
            "rms_decay" => self.rnn.rms_decay = value,
            "epsilon" => self.rnn.epsilon = value,
            "max_epochs" => self.rnn.max_epochs = count()?,
            "patience" => self.rnn.patience = count()?,
            "batch_size" => self.rnn.batch_size = count()?,
            "hidden_size" => self.rnn.hidden_size = count()?,
            "init_scale" => self.rnn.init_scale = value,
            _ => unreachable!("checked against param_names"),
        }
        self.validate().map_err(|e| bad(&e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.smote_k == 0 {
            return Err(ConfigError::Invalid("smote_k must be at least 1".into()));
        }
        if !(self.monitor_fraction > 0.0 && self.monitor_fraction < 1.0) {
            return Err(ConfigError::Invalid("monitor_fraction must be in (0, 1)".into()));
        }
        match self.algorithm {
            Algorithm::Gb | Algorithm::Xgb => self.boost.validate().map_err(|e| ConfigError::Invalid(e.to_string())),
            Algorithm::Rnn => self.rnn.validate().map_err(|e| ConfigError::Invalid(e.to_string())),
            Algorithm::Nb => Ok(()),
        }
    }

    fn smote_seed(&self) -> u64 {
        SplitMix64::derive(self.seed, SMOTE_STREAM).next_u64()
    }

    fn maybe_smote(&self, m: &FeatureMatrix) -> Result<FeatureMatrix> {
        if !self.smote || m.class_counts()[0] == m.class_counts()[1] {
            return Ok(m.clone());
        }
        // small minorities cap k instead of failing the run
        let minority = m.class_counts().into_iter().min().unwrap_or(0);
        let k = self.smote_k.min(minority.saturating_sub(1)).max(1);
        Ok(smote(m, k, self.smote_seed())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum FittedModel {
    NaiveBayes(GaussianNBModel),
    Boosted(BoostedEnsemble),
    Rnn(RnnParams),
}

impl Classifier for FittedModel {
    fn n_features(&self) -> Option<usize> {
        match self {
            FittedModel::NaiveBayes(m) => m.n_features(),
            FittedModel::Boosted(m) => m.n_features(),
            FittedModel::Rnn(m) => m.n_features(),
        }
    }

    fn probability(&self, x: &[f64]) -> Result<f64> {
        match self {
            FittedModel::NaiveBayes(m) => m.probability(x),
            FittedModel::Boosted(m) => m.probability(x),
            FittedModel::Rnn(m) => m.probability(x),
        }
    }
}

impl FittedModel {
    pub fn family_matches(&self, algorithm: Algorithm) -> bool {
        matches!(
            (self, algorithm),
            (FittedModel::NaiveBayes(_), Algorithm::Nb)
                | (FittedModel::Boosted(_), Algorithm::Gb | Algorithm::Xgb)
                | (FittedModel::Rnn(_), Algorithm::Rnn)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub model: FittedModel,
    pub history: Option<TrainHistory>,
    /// Rows the model was actually fitted on (after SMOTE).
    pub fit_rows: usize,
}

/// Fits `cfg.algorithm` on transformed training rows, applying SMOTE when
/// enabled. The recurrent model first holds out a stratified monitoring
/// set for early stopping, and only the remaining rows are oversampled.
pub fn fit_model(cfg: &TrainConfig, train: &FeatureMatrix) -> Result<FitOutcome> {
    cfg.validate()?;
    match cfg.algorithm {
        Algorithm::Nb => {
            let m = cfg.maybe_smote(train)?;
            Ok(FitOutcome {
                model: FittedModel::NaiveBayes(fit_nb(&m)?),
                history: None,
                fit_rows: m.rows,
            })
        }
        Algorithm::Gb | Algorithm::Xgb => {
            let m = cfg.maybe_smote(train)?;
            Ok(FitOutcome {
                model: FittedModel::Boosted(fit_boosted(&m, &cfg.boost)?),
                history: None,
                fit_rows: m.rows,
            })
        }
        Algorithm::Rnn => {
            let monitor_seed = SplitMix64::derive(cfg.seed, MONITOR_STREAM).next_u64();
            let (kept, held) = stratified_holdout(&train.labels, cfg.monitor_fraction, monitor_seed)?;
            let fit_part = cfg.maybe_smote(&train.select(&kept))?;
            let monitor = train.select(&held);
            let rnn_cfg = RnnTrainConfig {
                seed: cfg.seed,
                ..cfg.rnn
            };
            let (params, history) = train_rnn(&fit_part, &monitor, &rnn_cfg)?;
            Ok(FitOutcome {
                model: FittedModel::Rnn(params),
                history: Some(history),
                fit_rows: fit_part.rows,
            })
        }
    }
}

/// A split with its fitted preprocessor and transformed partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub split: SplitResult,
    pub preprocessor: FittedPreprocessor,
    pub train: FeatureMatrix,
    pub test: FeatureMatrix,
    /// Flags on the transformed training rows (reported, never removed).
    pub outliers: OutlierReport,
}

pub fn prepare(data: &Dataset, test_fraction: f64, seed: u64, policy: UnseenPolicy) -> Result<PreparedData> {
    prepare_split(stratified_split(data, test_fraction, seed)?, policy)
}

/// Fits the preprocessor on an existing split. Only `split.train` feeds any
/// fitted state.
pub fn prepare_split(split: SplitResult, policy: UnseenPolicy) -> Result<PreparedData> {
    let preprocessor = preprocess::fit(&split.train, policy)?;
    let train = preprocess::transform(&preprocessor, &split.train)?;
    let test = preprocess::transform(&preprocessor, &split.test)?;
    let outliers = flag_outliers(&train, preprocess::DEFAULT_OUTLIER_Z)?;
    Ok(PreparedData {
        split,
        preprocessor,
        train,
        test,
        outliers,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub fit: FitOutcome,
    pub report: EvalReport,
}

/// Fits on the prepared training rows and evaluates on the test rows.
pub fn train_and_evaluate(prepared: &PreparedData, cfg: &TrainConfig, threshold: f64) -> Result<TrainOutcome> {
    let fit = fit_model(cfg, &prepared.train)?;
    let report = evaluate_model(&fit.model, &prepared.test, threshold, cfg.algorithm.display_name())?;
    Ok(TrainOutcome { fit, report })
}

/// All four algorithms on one split and one preprocessor, in table order.
/// Any failure aborts the whole comparison.
pub fn compare(prepared: &PreparedData, base: &TrainConfig, threshold: f64) -> Result<Vec<(Algorithm, TrainOutcome)>> {
    Algorithm::TABLE_ORDER
        .iter()
        .map(|&algo| {
            let cfg = if algo == base.algorithm { base.clone() } else { base.for_algorithm(algo) };
            train_and_evaluate(prepared, &cfg, threshold).map(|o| (algo, o))
        })
        .collect()
}
