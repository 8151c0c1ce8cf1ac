use thiserror::Error;

use crate::bayes::BayesError;
use crate::boosting::BoostError;
use crate::bundle::BundleError;
use crate::dataset::DataError;
use crate::eval::EvalError;
use crate::pipeline::ConfigError;
use crate::preprocess::PreprocessError;
use crate::rnn::RnnError;

/// Any failure surfaced by the pipeline.
#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Bayes(#[from] BayesError),
    #[error(transparent)]
    Boost(#[from] BoostError),
    #[error(transparent)]
    Rnn(#[from] RnnError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
