//! Browser bindings for the demo page in `www/`.
//!
//! Each export takes a CSV text (empty for generated data) and returns a
//! JSON string. The `*_json` functions hold the logic and run natively too.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use heartrisk::dataset::{parse_csv, synth_generate, Dataset};
use heartrisk::eval::{self, confusion, metrics, EvalReport};
use heartrisk::pipeline::{self, Algorithm, PreparedData, TrainConfig};
use heartrisk::preprocess::UnseenPolicy;
use heartrisk::rnn::EpochLoss;

/// Where the rows come from and how they are split.
#[derive(Debug, Clone, PartialEq)]
pub struct Source<'a> {
    pub csv: &'a str,
    pub synth_n: usize,
    pub synth_seed: u64,
    pub seed: u64,
    pub test_fraction: f64,
}

impl Source<'_> {
    fn dataset(&self) -> Result<Dataset, String> {
        let data = if self.csv.trim().is_empty() {
            synth_generate(self.synth_n, 0.5, self.synth_seed)
        } else {
            parse_csv(self.csv, "upload")
        };
        data.map_err(|e| e.to_string())
    }

    fn prepare(&self) -> Result<PreparedData, String> {
        pipeline::prepare(&self.dataset()?, self.test_fraction, self.seed, UnseenPolicy::MapToMode).map_err(|e| e.to_string())
    }

    fn config(&self, algorithm: Algorithm, smote: bool) -> TrainConfig {
        let mut cfg = TrainConfig::new(algorithm, self.seed);
        cfg.smote = smote;
        cfg.unseen_policy = UnseenPolicy::MapToMode;
        cfg
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

#[derive(Serialize)]
struct Comparison {
    train_rows: usize,
    test_rows: usize,
    rows: Vec<EvalReport>,
}

pub fn compare_json(src: &Source, smote: bool) -> Result<String, String> {
    let prepared = src.prepare()?;
    let rows = pipeline::compare(&prepared, &src.config(Algorithm::Xgb, smote), pipeline::DEFAULT_THRESHOLD)
        .map_err(|e| e.to_string())?;
    Ok(to_json(&Comparison {
        train_rows: prepared.train.rows,
        test_rows: prepared.test.rows,
        rows: rows.into_iter().map(|(_, o)| o.report).collect(),
    }))
}

#[derive(Serialize)]
struct Curves {
    epochs: Vec<EpochLoss>,
    best_epoch: usize,
    stopped_epoch: usize,
    test: EvalReport,
}

pub fn curves_json(src: &Source, hidden_size: usize, learning_rate: f64, max_epochs: usize) -> Result<String, String> {
    let prepared = src.prepare()?;
    let mut cfg = src.config(Algorithm::Rnn, true);
    cfg.rnn.hidden_size = hidden_size;
    cfg.rnn.learning_rate = learning_rate;
    cfg.rnn.max_epochs = max_epochs;
    let out = pipeline::train_and_evaluate(&prepared, &cfg, pipeline::DEFAULT_THRESHOLD).map_err(|e| e.to_string())?;
    let history = out.fit.history.expect("recurrent fits record history");
    Ok(to_json(&Curves {
        best_epoch: history.best_epoch,
        stopped_epoch: history.stopped_epoch,
        epochs: history.epochs,
        test: out.report,
    }))
}

/// Test-set metrics at `steps` evenly spaced thresholds in (0, 1).
pub fn sweep_json(src: &Source, algorithm: &str, steps: usize) -> Result<String, String> {
    let algorithm: Algorithm = algorithm.parse().map_err(|e: pipeline::ConfigError| e.to_string())?;
    if steps == 0 {
        return Err("steps must be positive".into());
    }
    let prepared = src.prepare()?;
    let fit = pipeline::fit_model(&src.config(algorithm, true), &prepared.train).map_err(|e| e.to_string())?;
    let probs = eval::probabilities(&fit.model, &prepared.test).map_err(|e| e.to_string())?;
    let reports = (1..=steps)
        .map(|i| {
            let t = i as f64 / (steps + 1) as f64;
            let cm = confusion(&eval::predictions(&probs, t), &prepared.test.labels).map_err(|e| e.to_string())?;
            Ok(metrics(cm, t, algorithm.display_name()))
        })
        .collect::<Result<Vec<_>, String>>()?;
    Ok(to_json(&reports))
}

fn source(csv: &str, synth_n: u32, synth_seed: u32, seed: u32, test_fraction: f64) -> Source<'_> {
    Source {
        csv,
        synth_n: synth_n as usize,
        synth_seed: u64::from(synth_seed),
        seed: u64::from(seed),
        test_fraction,
    }
}

/// Four-row comparison table on one split.
#[wasm_bindgen]
pub fn compare_models(csv: &str, synth_n: u32, synth_seed: u32, seed: u32, test_fraction: f64, smote: bool) -> Result<String, JsError> {
    compare_json(&source(csv, synth_n, synth_seed, seed, test_fraction), smote).map_err(|e| JsError::new(&e))
}

/// Per-epoch training and validation loss of the recurrent model.
#[wasm_bindgen]
pub fn rnn_curves(
    csv: &str,
    synth_n: u32,
    synth_seed: u32,
    seed: u32,
    hidden_size: u32,
    learning_rate: f64,
    max_epochs: u32,
) -> Result<String, JsError> {
    curves_json(&source(csv, synth_n, synth_seed, seed, 0.2), hidden_size as usize, learning_rate, max_epochs as usize)
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn threshold_sweep(csv: &str, synth_n: u32, synth_seed: u32, seed: u32, algorithm: &str, steps: u32) -> Result<String, JsError> {
    sweep_json(&source(csv, synth_n, synth_seed, seed, 0.2), algorithm, steps as usize).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn synth() -> Source<'static> {
        Source {
            csv: "",
            synth_n: 160,
            synth_seed: 3,
            seed: 42,
            test_fraction: 0.25,
        }
    }

    #[test]
    fn comparison_has_four_rows() {
        let v: Value = serde_json::from_str(&compare_json(&synth(), true).unwrap()).unwrap();
        let names: Vec<&str> = v["rows"].as_array().unwrap().iter().map(|r| r["model_id"].as_str().unwrap()).collect();
        assert_eq!(names, ["RNN", "NaiveBayes", "GradientBoosting", "XGBoost"]);
        assert_eq!(v["test_rows"], 40);
    }

    #[test]
    fn curves_cover_every_epoch() {
        let v: Value = serde_json::from_str(&curves_json(&synth(), 8, 0.01, 12).unwrap()).unwrap();
        let epochs = v["epochs"].as_array().unwrap();
        assert_eq!(epochs.len() as u64, v["stopped_epoch"].as_u64().unwrap());
        assert_eq!(epochs[0]["epoch"], 1);
    }

    #[test]
    fn sweep_recall_is_non_increasing() {
        let v: Value = serde_json::from_str(&sweep_json(&synth(), "nb", 9).unwrap()).unwrap();
        let recalls: Vec<f64> = v.as_array().unwrap().iter().map(|r| r["recall"].as_f64().unwrap()).collect();
        assert_eq!(recalls.len(), 9);
        assert!(recalls.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn uploaded_csv_is_used_and_errors_are_reported() {
        let csv = synth_generate(80, 0.5, 1).unwrap().to_csv();
        let src = Source { csv: &csv, ..synth() };
        assert!(compare_json(&src, false).is_ok());
        let bad = Source { csv: "Age\n1\n", ..synth() };
        assert!(compare_json(&bad, true).unwrap_err().contains("missing column"));
        assert!(sweep_json(&synth(), "svm", 3).is_err());
    }
}
