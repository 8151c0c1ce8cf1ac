//! Gaussian naive Bayes over a transformed feature matrix.
//!
//! Each class stores a prior and one independent normal per feature. Scoring
//! stays in log space and the posterior is normalised with log-sum-exp.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preprocess::FeatureMatrix;

/// Relative variance floor: `VAR_FLOOR_SCALE * max feature variance`.
pub const VAR_FLOOR_SCALE: f64 = 1e-9;

/// Log-joint differences below this count as a tie, which goes to class 1.
pub const TIE_EPS: f64 = 1e-15;

#[derive(Debug, Error, PartialEq)]
pub enum BayesError {
    #[error("training data contains a single class")]
    SingleClassDataset,
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNBModel {
    pub n_features: usize,
    /// `[P(y = 0), P(y = 1)]`
    pub priors: [f64; 2],
    /// Per class, per feature.
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
    pub var_floor: f64,
}

pub fn fit_nb(m: &FeatureMatrix) -> Result<GaussianNBModel, BayesError> {
    let counts = m.class_counts();
    if counts.contains(&0) {
        return Err(BayesError::SingleClassDataset);
    }
    let d = m.cols;

    // overall per-feature variance sets the floor scale
    let max_var = (0..d)
        .map(|c| {
            let col: Vec<f64> = (0..m.rows).map(|i| m.get(i, c)).collect();
            crate::dataset::mean_std(&col).1.powi(2)
        })
        .fold(0.0, f64::max);
    let var_floor = VAR_FLOOR_SCALE * if max_var > 0.0 { max_var } else { 1.0 };

    let mut means = [vec![0.0; d], vec![0.0; d]];
    let mut variances = [vec![0.0; d], vec![0.0; d]];
    for (row, &y) in m.iter_rows().zip(&m.labels) {
        for (acc, v) in means[y as usize].iter_mut().zip(row) {
            *acc += v;
        }
    }
    for class in 0..2 {
        for v in &mut means[class] {
            *v /= counts[class] as f64;
        }
    }
    for (row, &y) in m.iter_rows().zip(&m.labels) {
        let c = y as usize;
        for ((acc, v), mu) in variances[c].iter_mut().zip(row).zip(&means[c]) {
            *acc += (v - mu) * (v - mu);
        }
    }
    for class in 0..2 {
        for v in &mut variances[class] {
            *v = (*v / counts[class] as f64).max(var_floor);
        }
    }
    let n = m.rows as f64;
    Ok(GaussianNBModel {
        n_features: d,
        priors: [counts[0] as f64 / n, counts[1] as f64 / n],
        means,
        variances,
        var_floor,
    })
}

fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (2.0 * PI * var).ln() - (x - mean) * (x - mean) / (2.0 * var)
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Normalised probabilities from unnormalised log weights.
pub fn softmax_from_log(log_weights: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(log_weights);
    log_weights.iter().map(|v| (v - lse).exp()).collect()
}

impl GaussianNBModel {
    fn check(&self, x: &[f64]) -> Result<(), BayesError> {
        if x.len() != self.n_features {
            return Err(BayesError::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `ln P(y) + sum_j ln N(x_j; mean, var)` for both classes.
    pub fn log_joint(&self, x: &[f64]) -> Result<[f64; 2], BayesError> {
        self.check(x)?;
        Ok([0, 1].map(|c| {
            self.priors[c].ln()
                + x.iter()
                    .zip(&self.means[c])
                    .zip(&self.variances[c])
                    .map(|((&v, &mu), &var)| log_normal_pdf(v, mu, var))
                    .sum::<f64>()
        }))
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<[f64; 2], BayesError> {
        let lj = self.log_joint(x)?;
        let p = softmax_from_log(&lj);
        Ok([p[0], p[1]])
    }

    pub fn predict(&self, x: &[f64]) -> Result<u8, BayesError> {
        let [l0, l1] = self.log_joint(x)?;
        Ok(if (l1 - l0).abs() < TIE_EPS || l1 > l0 { 1 } else { 0 })
    }
}

pub fn predict_proba_nb(model: &GaussianNBModel, x: &[f64]) -> Result<[f64; 2], BayesError> {
    model.predict_proba(x)
}

pub fn predict_nb(model: &GaussianNBModel, x: &[f64]) -> Result<u8, BayesError> {
    model.predict(x)
}
