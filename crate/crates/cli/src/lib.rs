//! Command implementations behind the `heartrisk` binary.
//!
//! Every command writes human output to the supplied writer and files
//! atomically. Failures carry a stable error code and map to a distinct exit
//! status.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use thiserror::Error;

use heartrisk::bundle::{BundleError, ModelBundle};
use heartrisk::dataset::{self, DataError, Dataset};
use heartrisk::eval::{self, format_table, table_csv, EvalError, EvalReport, GridSpec, SelectionMetric};
use heartrisk::pipeline::{self, Algorithm, ConfigError, PreparedData, TrainConfig};
use heartrisk::preprocess::{self, PreprocessError};
use heartrisk::{bayes::BayesError, boosting::BoostError, rnn::RnnError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    Io,
    Schema,
    Config,
    Version,
    Data,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Io => "E_IO",
            ErrorCode::Schema => "E_SCHEMA",
            ErrorCode::Config => "E_CONFIG",
            ErrorCode::Version => "E_VERSION",
            ErrorCode::Data => "E_DATA",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCode::Io => 2,
            ErrorCode::Schema => 3,
            ErrorCode::Config => 4,
            ErrorCode::Version => 5,
            ErrorCode::Data => 6,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("{}: {message}", code.as_str())]
pub struct CliError {
    pub code: ErrorCode,
    pub message: String,
}

impl CliError {
    pub fn new(code: ErrorCode, message: impl fmt::Display) -> Self {
        // one line on the diagnostic stream, always
        let message = message.to_string().replace(['\n', '\r'], " ");
        CliError { code, message }
    }

    fn io(path: &Path, e: impl fmt::Display) -> Self {
        CliError::new(ErrorCode::Io, format!("{}: {e}", path.display()))
    }
}

fn data_code(e: &DataError) -> ErrorCode {
    use DataError::*;
    match e {
        Io { .. } => ErrorCode::Io,
        EmptyFile | MissingColumn(_) | DuplicateHeader(_) | UnparsableCell { .. } | NonConforming { .. } => ErrorCode::Schema,
        FractionOutOfRange(_) | KTooSmall(_) | BadFraction(_) => ErrorCode::Config,
        EmptyDataset | SingleClassDataset | KTooLarge { .. } | TooFewRecords(_) => ErrorCode::Data,
    }
}

impl From<heartrisk::Error> for CliError {
    fn from(e: heartrisk::Error) -> Self {
        use heartrisk::Error as E;
        let code = match &e {
            E::Data(d) => data_code(d),
            E::Preprocess(PreprocessError::UnseenCategory { .. } | PreprocessError::SchemaMismatch(_)) => ErrorCode::Schema,
            E::Preprocess(PreprocessError::KTooLarge { .. } | PreprocessError::BadThreshold(_)) => ErrorCode::Config,
            E::Preprocess(_) => ErrorCode::Data,
            E::Bayes(BayesError::DimensionMismatch { .. })
            | E::Boost(BoostError::DimensionMismatch { .. })
            | E::Rnn(RnnError::DimensionMismatch { .. })
            | E::Eval(EvalError::DimensionMismatch { .. }) => ErrorCode::Schema,
            E::Boost(BoostError::BadHyperparameter(_))
            | E::Rnn(RnnError::BadConfig(_))
            | E::Eval(EvalError::BadThreshold(_) | EvalError::EmptyGrid)
            | E::Config(_) => ErrorCode::Config,
            E::Bayes(_) | E::Boost(_) | E::Rnn(_) | E::Eval(_) => ErrorCode::Data,
            E::Bundle(BundleError::VersionMismatch { .. }) => ErrorCode::Version,
            E::Bundle(_) => ErrorCode::Schema,
        };
        CliError::new(code, e)
    }
}

macro_rules! core_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                heartrisk::Error::from(e).into()
            }
        }
    )*};
}

core_error!(DataError, PreprocessError, EvalError, ConfigError, BundleError);

pub type CliResult<T> = Result<T, CliError>;

// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(name = "heartrisk", version, about = "Cardiac-risk classifiers: naive Bayes, boosting and a recurrent network")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-column statistics and class balance of a dataset.
    Summarize(RunArgs),
    /// Split, fit the preprocessor and write raw and transformed partitions.
    Preprocess(RunArgs),
    /// Train one algorithm, evaluate on the held-out split, write a bundle.
    Train(TrainArgs),
    /// Evaluate a saved bundle on a labelled CSV.
    Evaluate(ModelArgs),
    /// Score an unlabelled CSV with a saved bundle.
    Predict(ModelArgs),
    /// Cross-validated grid search on the training split.
    Gridsearch(GridArgs),
    /// All four algorithms on one split, as a comparison table.
    Compare(CompareArgs),
    /// Train the recurrent model and write its loss curves.
    Curves(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub algo: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub no_smote: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// TOML file whose values override the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Hyperparameter override, e.g. `--param max_depth=4`.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Loss curves CSV for `rnn` (default: next to the bundle).
    #[arg(long)]
    pub curves: Option<PathBuf>,
    #[arg(long)]
    pub report_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub grid: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub report_csv: Option<PathBuf>,
}

/// `--config` file contents.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub data: Option<PathBuf>,
    pub algo: Option<String>,
    pub seed: Option<u64>,
    pub test_fraction: Option<f64>,
    pub threshold: Option<f64>,
    pub smote: Option<bool>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

/// Fully resolved and validated run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub test_fraction: f64,
    pub threshold: f64,
    pub train: TrainConfig,
}

impl RunConfig {
    pub fn resolve(args: &RunArgs, default_algo: Algorithm) -> CliResult<Self> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                toml::from_str::<ConfigFile>(&text)
                    .map_err(|e| CliError::new(ErrorCode::Config, format!("{}: {}", path.display(), e.message())))?
            }
            None => ConfigFile::default(),
        };
        let algorithm = match file.algo.as_ref().or(args.algo.as_ref()) {
            Some(name) => name.parse::<Algorithm>()?,
            None => default_algo,
        };
        let seed = file.seed.or(args.seed).unwrap_or(pipeline::DEFAULT_SEED);
        let test_fraction = file.test_fraction.or(args.test_fraction).unwrap_or(pipeline::DEFAULT_TEST_FRACTION);
        let threshold = file.threshold.or(args.threshold).unwrap_or(pipeline::DEFAULT_THRESHOLD);
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(DataError::FractionOutOfRange(test_fraction).into());
        }
        check_threshold(threshold)?;
        let mut train = TrainConfig::new(algorithm, seed);
        train.smote = file.smote.unwrap_or(!args.no_smote);
        let mut params = parse_param_flags(&args.params)?;
        params.extend(file.params);
        for (name, value) in &params {
            train.apply_param(name, *value)?;
        }
        train.validate()?;
        Ok(RunConfig {
            data: file.data.or_else(|| args.data.clone()),
            out: file.out.or_else(|| args.out.clone()),
            test_fraction,
            threshold,
            train,
        })
    }

    fn data_path(&self) -> CliResult<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| CliError::new(ErrorCode::Config, "no data file given (use --data)"))
    }

    fn load(&self) -> CliResult<Dataset> {
        Ok(dataset::load_csv(self.data_path()?)?)
    }

    fn prepare(&self, data: &Dataset) -> CliResult<PreparedData> {
        Ok(pipeline::prepare(data, self.test_fraction, self.train.seed, self.train.unseen_policy)?)
    }
}

fn check_threshold(t: f64) -> CliResult<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(EvalError::BadThreshold(t).into())
    }
}

fn parse_param_flags(flags: &[String]) -> CliResult<BTreeMap<String, f64>> {
    flags
        .iter()
        .map(|flag| {
            let bad = || CliError::new(ErrorCode::Config, format!("--param expects NAME=VALUE, got {flag:?}"));
            let (name, value) = flag.split_once('=').ok_or_else(bad)?;
            let value: f64 = value.trim().parse().map_err(|_| bad())?;
            Ok((name.trim().to_string(), value))
        })
        .collect()
}

/// Writes via a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

fn say(out: &mut dyn Write, text: impl fmt::Display) -> CliResult<()> {
    writeln!(out, "{text}").map_err(|e| CliError::new(ErrorCode::Io, format!("stdout: {e}")))
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn load_bundle(path: &Path) -> CliResult<ModelBundle> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(ModelBundle::from_json(&text)?)
}

fn curves_path_for(bundle: &Path) -> PathBuf {
    bundle.with_extension("curves.csv")
}

// ---------------------------------------------------------------------------

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Summarize(args) => cmd_summarize(&args, out),
        Command::Preprocess(args) => cmd_preprocess(&args, out),
        Command::Train(args) => cmd_train(&args, out).map(|_| ()),
        Command::Evaluate(args) => cmd_evaluate(&args, out).map(|_| ()),
        Command::Predict(args) => cmd_predict(&args, out),
        Command::Gridsearch(args) => cmd_gridsearch(&args, out),
        Command::Compare(args) => cmd_compare(&args, out).map(|_| ()),
        Command::Curves(args) => cmd_curves(&args, out),
    }
}

pub fn cmd_summarize(args: &RunArgs, out: &mut dyn Write) -> CliResult<()> {
    let cfg = RunConfig::resolve(args, Algorithm::Xgb)?;
    let data = cfg.load()?;
    say(out, dataset::summarize(&data)?)
}

/// Writes `train_raw.csv`, `test_raw.csv`, `train.csv`, `test.csv` and
/// `preprocessor.json` into the `--out` directory.
pub fn cmd_preprocess(args: &RunArgs, out: &mut dyn Write) -> CliResult<()> {
    let cfg = RunConfig::resolve(args, Algorithm::Xgb)?;
    let data = cfg.load()?;
    let prepared = cfg.prepare(&data)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("preprocessed"));
    let json = serde_json_pretty(&prepared.preprocessor);
    write_atomic(&dir.join("train_raw.csv"), &prepared.split.train.to_csv())?;
    write_atomic(&dir.join("test_raw.csv"), &prepared.split.test.to_csv())?;
    write_atomic(&dir.join("train.csv"), &prepared.train.to_csv())?;
    write_atomic(&dir.join("test.csv"), &prepared.test.to_csv())?;
    write_atomic(&dir.join("preprocessor.json"), &json)?;
    say(
        out,
        format!(
            "train rows {}  test rows {}  outlier flags {} (|z| > {})\nwrote {}",
            prepared.train.rows,
            prepared.test.rows,
            prepared.outliers.count,
            prepared.outliers.threshold_z,
            dir.display()
        ),
    )
}

fn serde_json_pretty<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serializes");
    s.push('\n');
    s
}

/// Result of a training run, as written to disk.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainArtifacts {
    pub bundle_path: PathBuf,
    pub bundle: ModelBundle,
    pub curves_path: Option<PathBuf>,
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> CliResult<TrainArtifacts> {
    let cfg = RunConfig::resolve(&args.run, Algorithm::Xgb)?;
    let data = cfg.load()?;
    let prepared = cfg.prepare(&data)?;
    let outcome = pipeline::train_and_evaluate(&prepared, &cfg.train, cfg.threshold)?;
    let bundle_path = cfg.out.clone().unwrap_or_else(|| PathBuf::from("model.json"));
    let bundle = ModelBundle::new(
        timestamp(),
        prepared.preprocessor,
        outcome.fit.model,
        cfg.train.clone(),
        Some(outcome.report.clone()),
    )?;
    write_atomic(&bundle_path, &bundle.to_json())?;
    let mut curves_path = None;
    if let Some(history) = &outcome.fit.history {
        let path = args.curves.clone().unwrap_or_else(|| curves_path_for(&bundle_path));
        write_atomic(&path, &history.to_csv())?;
        curves_path = Some(path);
    }
    if let Some(path) = &args.report_csv {
        write_atomic(path, &table_csv(std::slice::from_ref(&outcome.report)))?;
    }
    say(out, format_table(std::slice::from_ref(&outcome.report)))?;
    say(out, format!("wrote {}", bundle_path.display()))?;
    if let Some(p) = &curves_path {
        say(out, format!("wrote {}", p.display()))?;
    }
    Ok(TrainArtifacts {
        bundle_path,
        bundle,
        curves_path,
    })
}

/// Metrics of a bundle on every row of a labelled CSV.
pub fn cmd_evaluate(args: &ModelArgs, out: &mut dyn Write) -> CliResult<EvalReport> {
    let bundle = load_bundle(&args.model)?;
    let threshold = args
        .threshold
        .or(bundle.metrics_at_save.as_ref().map(|r| r.threshold))
        .unwrap_or(pipeline::DEFAULT_THRESHOLD);
    check_threshold(threshold)?;
    let data = dataset::load_csv(&args.data)?;
    let m = preprocess::transform(&bundle.preprocessor, &data)?;
    let report = eval::evaluate_model(&bundle.model, &m, threshold, bundle.algorithm.display_name())?;
    if let Some(path) = &args.out {
        write_atomic(path, &table_csv(std::slice::from_ref(&report)))?;
    }
    say(out, &report)?;
    Ok(report)
}

/// `row_index,probability,label` for every input row, to `--out` or the
/// output stream.
pub fn cmd_predict(args: &ModelArgs, out: &mut dyn Write) -> CliResult<()> {
    let bundle = load_bundle(&args.model)?;
    let threshold = args.threshold.unwrap_or(pipeline::DEFAULT_THRESHOLD);
    check_threshold(threshold)?;
    let rows = dataset::load_features_csv(&args.data)?;
    let mut csv = String::from("row_index,probability,label\n");
    for (i, cells) in rows.iter().enumerate() {
        let x = bundle.preprocessor.transform_row(cells)?;
        let p = eval::Classifier::probability(&bundle.model, &x)?;
        csv.push_str(&format!("{i},{p},{}\n", u8::from(p >= threshold)));
    }
    match &args.out {
        Some(path) => {
            write_atomic(path, &csv)?;
            say(out, format!("wrote {} predictions to {}", rows.len(), path.display()))
        }
        None => write!(out, "{csv}").map_err(|e| CliError::new(ErrorCode::Io, format!("stdout: {e}"))),
    }
}

/// `[params]` holds candidate lists; the remaining keys are optional.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridFile {
    pub params: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    pub selection_metric: SelectionMetric,
    pub k: Option<usize>,
    pub seed: Option<u64>,
}

pub fn load_grid(path: &Path, seed: u64) -> CliResult<GridSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: GridFile = toml::from_str(&text)
        .map_err(|e| CliError::new(ErrorCode::Config, format!("{}: {}", path.display(), e.message())))?;
    Ok(GridSpec {
        params: file.params,
        selection_metric: file.selection_metric,
        k: file.k.unwrap_or(5),
        seed: file.seed.unwrap_or(seed),
    })
}

pub fn cmd_gridsearch(args: &GridArgs, out: &mut dyn Write) -> CliResult<()> {
    let cfg = RunConfig::resolve(&args.run, Algorithm::Xgb)?;
    let spec = load_grid(&args.grid, cfg.train.seed)?;
    // reject bad names and values before any fitting
    for candidate in spec.candidates() {
        eval::candidate_config(&cfg.train, &candidate)?;
    }
    let data = cfg.load()?;
    let split = dataset::stratified_split(&data, cfg.test_fraction, cfg.train.seed)?;
    let result = eval::grid_search(&spec, &cfg.train, &split.train, cfg.threshold)?;
    let path = cfg.out.clone().unwrap_or_else(|| PathBuf::from("grid_results.csv"));
    write_atomic(&path, &result.to_csv())?;
    let best = result.best();
    let metric = match result.selection_metric {
        SelectionMetric::Accuracy => "accuracy",
        SelectionMetric::F1 => "f1",
    };
    say(
        out,
        format!(
            "best {} of {} candidates: {}\nmean {metric} {} (std {})\nwrote {}",
            result.best + 1,
            result.candidates.len(),
            eval::format_params(&best.params),
            eval::fmt_metric(best.summary.mean(result.selection_metric)),
            eval::fmt_metric(match result.selection_metric {
                SelectionMetric::Accuracy => best.summary.accuracy.std,
                SelectionMetric::F1 => best.summary.f1.std,
            }),
            path.display()
        ),
    )
}

pub fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> CliResult<Vec<EvalReport>> {
    let cfg = RunConfig::resolve(&args.run, Algorithm::Xgb)?;
    let data = cfg.load()?;
    let prepared = cfg.prepare(&data)?;
    let rows = pipeline::compare(&prepared, &cfg.train, cfg.threshold)?;
    let reports: Vec<EvalReport> = rows.into_iter().map(|(_, o)| o.report).collect();
    if let Some(path) = args.report_csv.as_ref().or(cfg.out.as_ref()) {
        write_atomic(path, &table_csv(&reports))?;
    }
    say(out, format_table(&reports))?;
    Ok(reports)
}

pub fn cmd_curves(args: &RunArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut cfg = RunConfig::resolve(args, Algorithm::Rnn)?;
    if cfg.train.algorithm != Algorithm::Rnn {
        return Err(CliError::new(ErrorCode::Config, "curves are only produced by --algo rnn"));
    }
    let path = cfg.out.take().unwrap_or_else(|| PathBuf::from("curves.csv"));
    let data = cfg.load()?;
    let prepared = cfg.prepare(&data)?;
    let fit = pipeline::fit_model(&cfg.train, &prepared.train)?;
    let history = fit.history.expect("recurrent fits record history");
    write_atomic(&path, &history.to_csv())?;
    say(
        out,
        format!(
            "epochs {}  best epoch {}  best val loss {:.6}\nwrote {}",
            history.stopped_epoch,
            history.best_epoch,
            history.best_val_loss(),
            path.display()
        ),
    )
}
