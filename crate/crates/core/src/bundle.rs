//! Self-describing JSON model bundles.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{Classifier, EvalReport};
use crate::pipeline::{Algorithm, FittedModel, TrainConfig};
use crate::preprocess::FittedPreprocessor;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum BundleError {
    #[error("malformed bundle: {0}")]
    Json(String),
    #[error("bundle format version {found} is not supported (expected {supported})")]
    VersionMismatch { found: i64, supported: u32 },
    #[error("inconsistent bundle: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format_version: u32,
    pub created_at: String,
    pub algorithm: Algorithm,
    pub preprocessor: FittedPreprocessor,
    pub model: FittedModel,
    pub train_config: TrainConfig,
    pub metrics_at_save: Option<EvalReport>,
}

impl ModelBundle {
    pub fn new(
        created_at: impl Into<String>,
        preprocessor: FittedPreprocessor,
        model: FittedModel,
        train_config: TrainConfig,
        metrics_at_save: Option<EvalReport>,
    ) -> Result<Self, BundleError> {
        let bundle = ModelBundle {
            format_version: FORMAT_VERSION,
            created_at: created_at.into(),
            algorithm: train_config.algorithm,
            preprocessor,
            model,
            train_config,
            metrics_at_save,
        };
        bundle.check()?;
        Ok(bundle)
    }

    fn check(&self) -> Result<(), BundleError> {
        if !self.model.family_matches(self.algorithm) {
            return Err(BundleError::Inconsistent(format!(
                "model family does not match algorithm {}",
                self.algorithm
            )));
        }
        if self.train_config.algorithm != self.algorithm {
            return Err(BundleError::Inconsistent("train_config names a different algorithm".into()));
        }
        let width = self.preprocessor.column_names().len();
        if let Some(d) = self.model.n_features().filter(|&d| d != width) {
            return Err(BundleError::Inconsistent(format!(
                "preprocessor emits {width} columns, model expects {d}"
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bundle serializes");
        s.push('\n');
        s
    }

    /// Parses a bundle, rejecting unsupported versions before anything else.
    pub fn from_json(text: &str) -> Result<Self, BundleError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| BundleError::Json(e.to_string()))?;
        let found = value
            .get("format_version")
            .and_then(serde_json::Value::as_i64)
            .ok_or_else(|| BundleError::Json("missing integer format_version".into()))?;
        if found != i64::from(FORMAT_VERSION) {
            return Err(BundleError::VersionMismatch {
                found,
                supported: FORMAT_VERSION,
            });
        }
        let bundle: ModelBundle = serde_json::from_value(value).map_err(|e| BundleError::Json(e.to_string()))?;
        bundle.check()?;
        Ok(bundle)
    }

    /// JSON with `created_at` blanked, for reproducibility comparisons.
    pub fn to_json_without_timestamp(&self) -> String {
        ModelBundle {
            created_at: String::new(),
            ..self.clone()
        }
        .to_json()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth_generate;
    use crate::eval::evaluate_model;
    use crate::pipeline::{prepare, train_and_evaluate};
    use crate::preprocess::UnseenPolicy;

    fn bundle(algo: Algorithm) -> (ModelBundle, crate::preprocess::FeatureMatrix) {
        let data = synth_generate(80, 0.5, 3).unwrap();
        let prepared = prepare(&data, 0.25, 42, UnseenPolicy::Error).unwrap();
        let mut cfg = TrainConfig::new(algo, 42);
        cfg.boost.n_rounds = 10;
        cfg.rnn.max_epochs = 5;
        let out = train_and_evaluate(&prepared, &cfg, 0.5).unwrap();
        let b = ModelBundle::new("t", prepared.preprocessor.clone(), out.fit.model, cfg, Some(out.report)).unwrap();
        (b, prepared.test)
    }

    #[test]
    fn round_trip_reproduces_metrics() {
        for algo in Algorithm::TABLE_ORDER {
            let (b, test) = bundle(algo);
            let back = ModelBundle::from_json(&b.to_json()).unwrap();
            assert_eq!(back, b);
            let saved = b.metrics_at_save.clone().unwrap();
            let again = evaluate_model(&back.model, &test, 0.5, &saved.model_id).unwrap();
            assert_eq!(again, saved);
        }
    }

    #[test]
    fn version_is_checked_first() {
        let (b, _) = bundle(Algorithm::Nb);
        let mut v: serde_json::Value = serde_json::from_str(&b.to_json()).unwrap();
        v["format_version"] = 2.into();
        v["model"] = serde_json::Value::Null;
        assert_eq!(
            ModelBundle::from_json(&v.to_string()),
            Err(BundleError::VersionMismatch { found: 2, supported: 1 })
        );
        assert!(matches!(ModelBundle::from_json("{"), Err(BundleError::Json(_))));
    }

    #[test]
    fn family_mismatch_is_rejected() {
        let (b, _) = bundle(Algorithm::Nb);
        let mut v: serde_json::Value = serde_json::from_str(&b.to_json()).unwrap();
        v["algorithm"] = "xgb".into();
        assert!(matches!(ModelBundle::from_json(&v.to_string()), Err(BundleError::Inconsistent(_))));
    }
}
