//! Elman recurrent classifier trained with backpropagation through time,
//! RMSprop and early stopping.
//!
//! A standardized row of `d` features is read as a length-`d` sequence of
//! scalar inputs in schema order (see [`as_sequence`]). The recurrence is
//!
//! ```text
//! h_0 = 0
//! h_t = tanh(W_xh x_t + W_hh h_{t-1} + b_h)
//! p   = sigmoid(W_hy h_T + b_y)
//! ```
//!
//! and the loss is binary cross-entropy on `p`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boosting::{clamp_prob, sigmoid, PROB_CLAMP};
use crate::preprocess::FeatureMatrix;
use crate::rng::SplitMix64;

/// Validation loss must drop by at least this much to count as an improvement.
pub const MIN_IMPROVEMENT: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum RnnError {
    #[error("sequence is empty")]
    EmptySequence,
    #[error("expected input size {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{0} partition is empty")]
    EmptyPartition(&'static str),
    #[error("bad training configuration: {0}")]
    BadConfig(String),
}

/// Row-major matrix serialized as `{ "shape": [rows, cols], "data": [...] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    shape: [usize; 2],
    data: Vec<f64>,
}

impl TryFrom<MatrixRepr> for Matrix {
    type Error = String;

    fn try_from(r: MatrixRepr) -> Result<Self, String> {
        if r.shape[0] * r.shape[1] != r.data.len() {
            return Err(format!("shape {:?} does not match {} values", r.shape, r.data.len()));
        }
        Ok(Matrix {
            rows: r.shape[0],
            cols: r.shape[1],
            data: r.data,
        })
    }
}

impl From<Matrix> for MatrixRepr {
    fn from(m: Matrix) -> Self {
        MatrixRepr {
            shape: [m.rows, m.cols],
            data: m.data,
        }
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// `out += self * v`
    fn mul_vec_add(&self, v: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            *o += row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    /// `out += self^T * v`
    fn tmul_vec_add(&self, v: &[f64], out: &mut [f64]) {
        for (r, &vr) in v.iter().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * vr;
            }
        }
    }

    /// `self += a b^T`
    fn add_outer(&mut self, a: &[f64], b: &[f64]) {
        for (r, &ar) in a.iter().enumerate() {
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (x, bc) in row.iter_mut().zip(b) {
                *x += ar * bc;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RnnParams {
    pub input_size: usize,
    pub hidden_size: usize,
    /// hidden x input
    pub w_xh: Matrix,
    /// hidden x hidden
    pub w_hh: Matrix,
    /// 1 x hidden
    pub w_hy: Matrix,
    /// hidden x 1
    pub b_h: Matrix,
    pub b_y: f64,
}

impl RnnParams {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        RnnParams {
            input_size,
            hidden_size,
            w_xh: Matrix::zeros(hidden_size, input_size),
            w_hh: Matrix::zeros(hidden_size, hidden_size),
            w_hy: Matrix::zeros(1, hidden_size),
            b_h: Matrix::zeros(hidden_size, 1),
            b_y: 0.0,
        }
    }

    /// Every entry uniform in `[-scale, scale)`, drawn in field order.
    pub fn uniform(input_size: usize, hidden_size: usize, scale: f64, rng: &mut SplitMix64) -> Self {
        let mut p = Self::zeros(input_size, hidden_size);
        for t in p.tensors_mut() {
            for v in t.iter_mut() {
                *v = rng.uniform(-scale, scale);
            }
        }
        p
    }

    pub fn tensors(&self) -> [&[f64]; 5] {
        [
            &self.w_xh.data,
            &self.w_hh.data,
            &self.w_hy.data,
            &self.b_h.data,
            std::slice::from_ref(&self.b_y),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 5] {
        [
            &mut self.w_xh.data,
            &mut self.w_hh.data,
            &mut self.w_hy.data,
            &mut self.b_h.data,
            std::slice::from_mut(&mut self.b_y),
        ]
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get_flat(&self, mut i: usize) -> f64 {
        for t in self.tensors() {
            if i < t.len() {
                return t[i];
            }
            i -= t.len();
        }
        panic!("parameter index out of range")
    }

    fn get_flat_mut(&mut self, mut i: usize) -> &mut f64 {
        for t in self.tensors_mut() {
            if i < t.len() {
                return &mut t[i];
            }
            i -= t.len();
        }
        panic!("parameter index out of range")
    }

    fn add_scaled(&mut self, other: &RnnParams, factor: f64) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += factor * y;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Probability for one standardized feature row.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, RnnError> {
        Ok(forward(self, &as_sequence(x))?.probability)
    }
}

/// One timestep per feature, each carrying that feature's scalar value.
pub fn as_sequence(x: &[f64]) -> Vec<Vec<f64>> {
    x.iter().map(|&v| vec![v]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    /// `h_1 ..= h_T`
    pub hidden: Vec<Vec<f64>>,
    /// Pre-sigmoid output.
    pub logit: f64,
    /// Clamped to `[1e-12, 1 - 1e-12]`.
    pub probability: f64,
}

fn check_seq(p: &RnnParams, seq: &[Vec<f64>]) -> Result<(), RnnError> {
    if seq.is_empty() {
        return Err(RnnError::EmptySequence);
    }
    if let Some(bad) = seq.iter().find(|x| x.len() != p.input_size) {
        return Err(RnnError::DimensionMismatch {
            expected: p.input_size,
            got: bad.len(),
        });
    }
    Ok(())
}

pub fn forward(p: &RnnParams, seq: &[Vec<f64>]) -> Result<ForwardPass, RnnError> {
    check_seq(p, seq)?;
    let hs = p.hidden_size;
    let mut hidden = Vec::with_capacity(seq.len());
    let mut prev = vec![0.0; hs];
    for x in seq {
        let mut a = p.b_h.data.clone();
        p.w_xh.mul_vec_add(x, &mut a);
        p.w_hh.mul_vec_add(&prev, &mut a);
        for v in &mut a {
            *v = v.tanh();
        }
        hidden.push(a.clone());
        prev = a;
    }
    let logit = p.b_y + p.w_hy.data.iter().zip(&prev).map(|(w, h)| w * h).sum::<f64>();
    Ok(ForwardPass {
        hidden,
        logit,
        probability: clamp_prob(sigmoid(logit)),
    })
}

/// Binary cross-entropy of a (clamped) probability.
pub fn bce(p: f64, y: u8) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

pub fn loss(p: &RnnParams, seq: &[Vec<f64>], y: u8) -> Result<f64, RnnError> {
    Ok(bce(forward(p, seq)?.probability, y))
}

/// Exact gradient of `bce(forward(p, seq), y)` with respect to every parameter.
pub fn backward(p: &RnnParams, seq: &[Vec<f64>], y: u8) -> Result<RnnParams, RnnError> {
    let fwd = forward(p, seq)?;
    Ok(backward_from(p, seq, y, &fwd))
}

fn backward_from(p: &RnnParams, seq: &[Vec<f64>], y: u8, fwd: &ForwardPass) -> RnnParams {
    let hs = p.hidden_size;
    let mut grad = RnnParams::zeros(p.input_size, hs);
    let dz = sigmoid(fwd.logit) - f64::from(y);
    let last = fwd.hidden.last().expect("non-empty");
    grad.b_y = dz;
    for (g, h) in grad.w_hy.data.iter_mut().zip(last) {
        *g = dz * h;
    }
    let mut dh: Vec<f64> = p.w_hy.data.iter().map(|w| dz * w).collect();
    let zeros = vec![0.0; hs];
    for t in (0..seq.len()).rev() {
        let h = &fwd.hidden[t];
        let da: Vec<f64> = dh.iter().zip(h).map(|(d, h)| d * (1.0 - h * h)).collect();
        for (g, d) in grad.b_h.data.iter_mut().zip(&da) {
            *g += d;
        }
        grad.w_xh.add_outer(&da, &seq[t]);
        let h_prev = if t == 0 { &zeros } else { &fwd.hidden[t - 1] };
        grad.w_hh.add_outer(&da, h_prev);
        dh.iter_mut().for_each(|v| *v = 0.0);
        p.w_hh.tmul_vec_add(&da, &mut dh);
    }
    grad
}

/// Largest relative error between analytic and central-difference gradients:
/// `|a - n| / max(|a|, |n|, 1e-8)` over every parameter entry.
pub fn grad_check(p: &RnnParams, seq: &[Vec<f64>], y: u8, step: f64) -> Result<f64, RnnError> {
    let analytic = backward(p, seq, y)?;
    let mut probe = p.clone();
    let mut worst = 0.0f64;
    for i in 0..p.len() {
        let orig = p.get_flat(i);
        *probe.get_flat_mut(i) = orig + step;
        let up = loss(&probe, seq, y)?;
        *probe.get_flat_mut(i) = orig - step;
        let down = loss(&probe, seq, y)?;
        *probe.get_flat_mut(i) = orig;
        let numeric = (up - down) / (2.0 * step);
        let a = analytic.get_flat(i);
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(err);
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RnnTrainConfig {
    pub learning_rate: f64,
    pub rms_decay: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub hidden_size: usize,
    pub seed: u64,
    pub init_scale: f64,
}

impl Default for RnnTrainConfig {
    fn default() -> Self {
        RnnTrainConfig {
            learning_rate: 0.001,
            rms_decay: 0.9,
            epsilon: 1e-8,
            max_epochs: 200,
            patience: 10,
            batch_size: 32,
            hidden_size: 16,
            seed: 42,
            init_scale: 0.1,
        }
    }
}

impl RnnTrainConfig {
    pub fn validate(&self) -> Result<(), RnnError> {
        let bad = |m: &str| Err(RnnError::BadConfig(m.to_string()));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(self.rms_decay > 0.0 && self.rms_decay < 1.0) {
            return bad("rms_decay must be in (0, 1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if self.patience == 0 || self.batch_size == 0 || self.hidden_size == 0 || self.max_epochs == 0 {
            return bad("patience, batch_size, hidden_size and max_epochs must be at least 1");
        }
        if !(self.init_scale >= 0.0) {
            return bad("init_scale must be non-negative");
        }
        Ok(())
    }
}

/// One RMSprop update on flat slices:
/// `cache = rho * cache + (1 - rho) * g^2; param -= lr * g / sqrt(cache + eps)`.
pub fn rmsprop_step(params: &mut [f64], cache: &mut [f64], grads: &[f64], lr: f64, rho: f64, eps: f64) {
    for ((p, c), g) in params.iter_mut().zip(cache.iter_mut()).zip(grads) {
        *c = rho * *c + (1.0 - rho) * g * g;
        *p -= lr * g / (*c + eps).sqrt();
    }
}

/// RMSprop state for a whole parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct RmsProp {
    pub cache: RnnParams,
    pub learning_rate: f64,
    pub rho: f64,
    pub epsilon: f64,
}

impl RmsProp {
    pub fn new(shape: &RnnParams, cfg: &RnnTrainConfig) -> Self {
        RmsProp {
            cache: RnnParams::zeros(shape.input_size, shape.hidden_size),
            learning_rate: cfg.learning_rate,
            rho: cfg.rms_decay,
            epsilon: cfg.epsilon,
        }
    }

    pub fn step(&mut self, params: &mut RnnParams, grads: &RnnParams) {
        for ((p, c), g) in params.tensors_mut().into_iter().zip(self.cache.tensors_mut()).zip(grads.tensors()) {
            rmsprop_step(p, c, g, self.learning_rate, self.rho, self.epsilon);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochLoss>,
    /// 1-based.
    pub best_epoch: usize,
    pub stopped_epoch: usize,
}

impl TrainHistory {
    /// `epoch,train_loss,val_loss` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{},{}\n", e.epoch, e.train_loss, e.val_loss));
        }
        out
    }

    pub fn best_val_loss(&self) -> f64 {
        self.epochs[self.best_epoch - 1].val_loss
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Patience-based early stopping on validation loss.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    since_best: usize,
    epoch: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            since_best: 0,
            epoch: 0,
        }
    }

    pub fn observe(&mut self, val_loss: f64) -> StopDecision {
        self.epoch += 1;
        if val_loss < self.best - MIN_IMPROVEMENT {
            self.best = val_loss;
            self.best_epoch = self.epoch;
            self.since_best = 0;
            StopDecision::Improved
        } else {
            self.since_best += 1;
            if self.since_best >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

fn rows_as_sequences(m: &FeatureMatrix) -> Vec<Vec<Vec<f64>>> {
    m.iter_rows().map(as_sequence).collect()
}

fn mean_loss(p: &RnnParams, seqs: &[Vec<Vec<f64>>], labels: &[u8]) -> f64 {
    let total: f64 = seqs
        .iter()
        .zip(labels)
        .map(|(s, &y)| loss(p, s, y).expect("validated sequence"))
        .sum();
    total / seqs.len() as f64
}

/// Mean validation-style loss of `p` on every row of `m`.
pub fn evaluate_loss(p: &RnnParams, m: &FeatureMatrix) -> f64 {
    mean_loss(p, &rows_as_sequences(m), &m.labels)
}

/// Minibatch RMSprop training with early stopping. The returned parameters
/// are the snapshot taken at the best validation epoch.
pub fn train_rnn(
    train: &FeatureMatrix,
    val: &FeatureMatrix,
    config: &RnnTrainConfig,
) -> Result<(RnnParams, TrainHistory), RnnError> {
    config.validate()?;
    if train.rows == 0 {
        return Err(RnnError::EmptyPartition("training"));
    }
    if val.rows == 0 {
        return Err(RnnError::EmptyPartition("validation"));
    }
    if train.cols == 0 {
        return Err(RnnError::EmptySequence);
    }
    let train_seqs = rows_as_sequences(train);
    let val_seqs = rows_as_sequences(val);

    let mut rng = SplitMix64::new(config.seed);
    let mut params = RnnParams::uniform(1, config.hidden_size, config.init_scale, &mut rng);
    let mut opt = RmsProp::new(&params, config);
    let mut stopper = EarlyStopping::new(config.patience);
    let mut best = params.clone();
    let mut epochs = Vec::new();
    let mut order: Vec<usize> = (0..train.rows).collect();

    for epoch in 1..=config.max_epochs {
        rng.shuffle(&mut order);
        for batch in order.chunks(config.batch_size) {
            let mut grad = RnnParams::zeros(1, config.hidden_size);
            for &i in batch {
                let g = backward(&params, &train_seqs[i], train.labels[i])?;
                grad.add_scaled(&g, 1.0);
            }
            let scale = 1.0 / batch.len() as f64;
            for t in grad.tensors_mut() {
                t.iter_mut().for_each(|v| *v *= scale);
            }
            opt.step(&mut params, &grad);
        }
        let train_loss = mean_loss(&params, &train_seqs, &train.labels);
        let val_loss = mean_loss(&params, &val_seqs, &val.labels);
        epochs.push(EpochLoss {
            epoch,
            train_loss,
            val_loss,
        });
        match stopper.observe(val_loss) {
            StopDecision::Improved => best = params.clone(),
            StopDecision::Continue => {}
            StopDecision::Stop => break,
        }
    }
    let stopped_epoch = epochs.len();
    Ok((
        best,
        TrainHistory {
            epochs,
            best_epoch: stopper.best_epoch(),
            stopped_epoch,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn random_params(hidden: usize, seed: u64) -> RnnParams {
        RnnParams::uniform(1, hidden, 1.0, &mut SplitMix64::new(seed))
    }

    #[test]
    fn sequence_encoding() {
        assert_eq!(as_sequence(&[0.5, -1.0, 2.0]), vec![vec![0.5], vec![-1.0], vec![2.0]]);
        assert!(as_sequence(&[]).is_empty());
        assert_ne!(as_sequence(&[1.0, 2.0]), as_sequence(&[2.0, 1.0]));
    }

    #[test]
    fn zero_params_give_one_half() {
        let p = RnnParams::zeros(1, 4);
        let f = forward(&p, &as_sequence(&[1.0, -3.0, 2.0])).unwrap();
        assert_eq!(f.probability, 0.5);
        let mut p = p;
        p.b_y = 3f64.ln();
        assert_abs_diff_eq!(forward(&p, &[vec![9.0]]).unwrap().probability, 0.75, epsilon = 1e-12);
    }

    #[test]
    fn forward_rejects_bad_input() {
        let p = RnnParams::zeros(1, 2);
        assert_eq!(forward(&p, &[]), Err(RnnError::EmptySequence));
        assert_eq!(
            forward(&p, &[vec![1.0, 2.0]]),
            Err(RnnError::DimensionMismatch { expected: 1, got: 2 })
        );
    }

    #[test]
    fn bce_values() {
        assert_abs_diff_eq!(bce(0.5, 0), std::f64::consts::LN_2, epsilon = 1e-12);
        assert_abs_diff_eq!(bce(0.5, 1), 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(bce(0.75, 1), 0.28768, epsilon = 1e-5);
        assert!(bce(1.0, 1) <= -(1.0 - 1e-12f64).ln() + 1e-15);
        assert!(bce(1.0, 1) >= 0.0);
    }

    #[test]
    fn output_bias_gradient_at_zero_params() {
        let p = RnnParams::zeros(1, 3);
        let g = backward(&p, &as_sequence(&[0.3, 0.1]), 1).unwrap();
        assert_eq!(g.b_y, -0.5);
    }

    #[test]
    fn single_step_has_no_recurrent_gradient() {
        let p = random_params(3, 5);
        let g = backward(&p, &[vec![0.7]], 0).unwrap();
        assert!(g.w_hh.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let zero = RnnParams::zeros(1, 4);
        assert!(grad_check(&zero, &as_sequence(&[0.2, -0.4, 1.0]), 1, 1e-5).unwrap() < 1e-6);
        let mut rng = SplitMix64::new(17);
        let p = RnnParams::uniform(1, 4, 0.5, &mut rng);
        let x: Vec<f64> = (0..11).map(|_| rng.normal(0.0, 1.0)).collect();
        let fine = grad_check(&p, &as_sequence(&x), 1, 1e-5).unwrap();
        let coarse = grad_check(&p, &as_sequence(&x), 1, 1e-1).unwrap();
        assert!(fine < 1e-4, "{fine}");
        assert!(coarse > fine);
    }

    #[test]
    fn hidden_states_are_bounded() {
        let p = random_params(6, 3);
        let f = forward(&p, &as_sequence(&[3.0, -3.0, 2.5, 0.0])).unwrap();
        assert!(f.hidden.iter().flatten().all(|h| h.abs() < 1.0));
    }

    #[test]
    fn rmsprop_arithmetic() {
        let mut p = [1.0];
        let mut c = [0.0];
        rmsprop_step(&mut p, &mut c, &[1.0], 0.001, 0.9, 1e-8);
        assert_abs_diff_eq!(c[0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(p[0] - 1.0, -0.0031623, epsilon = 1e-7);
        rmsprop_step(&mut p, &mut c, &[1.0], 0.001, 0.9, 1e-8);
        assert_abs_diff_eq!(c[0], 0.19, epsilon = 1e-15);

        let mut p = [2.0, -1.0];
        let mut c = [0.5, 0.2];
        rmsprop_step(&mut p, &mut c, &[0.0, 0.0], 0.001, 0.9, 1e-8);
        assert_eq!(p, [2.0, -1.0]);
        assert_abs_diff_eq!(c[0], 0.45, epsilon = 1e-15);
        assert_abs_diff_eq!(c[1], 0.18, epsilon = 1e-15);
    }

    #[test]
    fn early_stopping_trace() {
        let mut s = EarlyStopping::new(2);
        let decisions: Vec<StopDecision> = [0.50, 0.40, 0.45, 0.46].iter().map(|&v| s.observe(v)).collect();
        assert_eq!(
            decisions,
            [StopDecision::Improved, StopDecision::Improved, StopDecision::Continue, StopDecision::Stop]
        );
        assert_eq!(s.best_epoch(), 2);

        let mut s = EarlyStopping::new(10);
        for (i, v) in [0.9, 0.8, 0.7, 0.6].iter().enumerate() {
            assert_eq!(s.observe(*v), StopDecision::Improved);
            assert_eq!(s.best_epoch(), i + 1);
        }
        // a drop smaller than the improvement threshold does not count
        let mut s = EarlyStopping::new(1);
        s.observe(0.5);
        assert_eq!(s.observe(0.5 - 1e-7), StopDecision::Stop);
    }

    #[test]
    fn matrix_serializes_with_shape() {
        let m = Matrix {
            rows: 2,
            cols: 1,
            data: vec![1.5, -2.0],
        };
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, r#"{"shape":[2,1],"data":[1.5,-2.0]}"#);
        assert_eq!(serde_json::from_str::<Matrix>(&json).unwrap(), m);
        assert!(serde_json::from_str::<Matrix>(r#"{"shape":[2,2],"data":[1.0]}"#).is_err());
    }

    #[test]
    fn config_is_validated() {
        let m = FeatureMatrix::from_rows(&[vec![0.0]], vec![1]);
        let cfg = RnnTrainConfig { patience: 0, ..Default::default() };
        assert!(matches!(train_rnn(&m, &m, &cfg), Err(RnnError::BadConfig(_))));
        let empty = FeatureMatrix::from_rows(&[], vec![]);
        assert_eq!(
            train_rnn(&empty, &m, &RnnTrainConfig::default()).unwrap_err(),
            RnnError::EmptyPartition("training")
        );
    }
}
