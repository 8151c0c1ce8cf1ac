//! Heart-disease risk classification from tabular clinical records.
//!
//! The crate covers the whole pipeline: CSV ingestion and stratified
//! splitting ([`dataset`]), fit-on-train preprocessing with cohort-median
//! imputation, label encoding, standard scaling and SMOTE ([`preprocess`]),
//! four classifiers (Gaussian naive Bayes in [`bayes`], first- and
//! second-order boosted trees in [`boosting`], an Elman recurrent network in
//! [`rnn`]), metrics, cross-validation and grid search ([`eval`]), and a
//! self-describing model bundle ([`bundle`]). [`pipeline`] wires these
//! together in a fixed order: split, fit preprocessor on train, transform,
//! oversample the training rows, fit, evaluate on the untouched test rows.
//!
//! All randomness flows from explicit seeds through [`rng::SplitMix64`].

pub mod bayes;
pub mod boosting;
pub mod bundle;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod rnn;

pub use error::{Error, Result};
