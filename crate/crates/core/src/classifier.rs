//! Class-weighted linear SVM trained by stochastic subgradient descent,
//! plus dataset splitting, grid search over `c` and macro-F1 evaluation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::{mix_seed, Execution};

pub const DEFAULT_EPOCHS: usize = 100;
pub const DEFAULT_C_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];

#[derive(Debug, Error, PartialEq)]
pub enum ClassifierError {
    #[error("need at least 10 documents to split, got {0}")]
    TooFewDocuments(usize),
    #[error("labels contain a single class")]
    SingleClass,
    #[error("degenerate training input: {0}")]
    DegenerateInput(&'static str),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("length mismatch: {0} labels vs {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("invalid hyper-parameter: {0}")]
    InvalidParameter(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

/// Seeded 80/10/10 split with floor sizes; the remainder goes to train.
pub fn split_dataset(ids: &[String], seed: u64) -> Result<SplitAssignment, ClassifierError> {
    if ids.len() < 10 {
        return Err(ClassifierError::TooFewDocuments(ids.len()));
    }
    let mut shuffled = ids.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = shuffled.len();
    let (n_train, n_tenth) = (n * 8 / 10, n / 10);
    let mut train = shuffled[..n_train].to_vec();
    let val = shuffled[n_train..n_train + n_tenth].to_vec();
    let test = shuffled[n_train + n_tenth..n_train + 2 * n_tenth].to_vec();
    train.extend_from_slice(&shuffled[n_train + 2 * n_tenth..]);
    Ok(SplitAssignment { train, val, test, seed })
}

/// Per-class 80/10/10 split, so each part keeps the label ratio.
pub fn split_dataset_stratified(ids: &[String], labels: &[u8], seed: u64) -> Result<SplitAssignment, ClassifierError> {
    if ids.len() < 10 {
        return Err(ClassifierError::TooFewDocuments(ids.len()));
    }
    if ids.len() != labels.len() {
        return Err(ClassifierError::LengthMismatch(labels.len(), ids.len()));
    }
    let mut out = SplitAssignment { train: Vec::new(), val: Vec::new(), test: Vec::new(), seed };
    for class in [0u8, 1] {
        let mut group: Vec<String> =
            ids.iter().zip(labels).filter(|(_, &l)| l == class).map(|(id, _)| id.clone()).collect();
        group.shuffle(&mut ChaCha8Rng::seed_from_u64(mix_seed(seed, class as u64)));
        let n = group.len();
        let (n_train, n_tenth) = (n * 8 / 10, n / 10);
        out.val.extend_from_slice(&group[n_train..n_train + n_tenth]);
        out.test.extend_from_slice(&group[n_train + n_tenth..n_train + 2 * n_tenth]);
        out.train.extend_from_slice(&group[..n_train]);
        out.train.extend_from_slice(&group[n_train + 2 * n_tenth..]);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub pos: f64,
    pub neg: f64,
}

impl ClassWeights {
    pub const BALANCED: ClassWeights = ClassWeights { pos: 1.0, neg: 1.0 };

    pub fn of(&self, label: u8) -> f64 {
        if label == 1 {
            self.pos
        } else {
            self.neg
        }
    }
}

/// Inverse-frequency weights `n / (2 n_c)`.
pub fn class_weights(labels: &[u8]) -> Result<ClassWeights, ClassifierError> {
    let n = labels.len() as f64;
    let n_pos = labels.iter().filter(|&&l| l == 1).count() as f64;
    let n_neg = n - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(ClassifierError::SingleClass);
    }
    Ok(ClassWeights { pos: n / (2.0 * n_pos), neg: n / (2.0 * n_neg) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub class_weights: ClassWeights,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub c: f64,
    pub class_weights: ClassWeights,
    pub seed: u64,
    pub epochs: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sign(label: u8) -> f64 {
    if label == 1 {
        1.0
    } else {
        -1.0
    }
}

/// `½‖w‖² + c Σ weight(yᵢ) · max(0, 1 − yᵢ(w·xᵢ + b))` with `yᵢ ∈ {−1, +1}`.
pub fn svm_objective(weights: &[f64], bias: f64, x: &[Vec<f64>], y: &[u8], c: f64, cw: ClassWeights) -> f64 {
    let hinge: f64 =
        x.iter().zip(y).map(|(xi, &yi)| cw.of(yi) * (1.0 - sign(yi) * (dot(weights, xi) + bias)).max(0.0)).sum();
    0.5 * dot(weights, weights) + c * hinge
}

fn validate(x: &[Vec<f64>], y: &[u8]) -> Result<usize, ClassifierError> {
    if x.len() != y.len() {
        return Err(ClassifierError::LengthMismatch(y.len(), x.len()));
    }
    let dim = x.first().map_or(0, Vec::len);
    if dim == 0 {
        return Err(ClassifierError::DegenerateInput("zero-dimensional features"));
    }
    if let Some(row) = x.iter().find(|r| r.len() != dim) {
        return Err(ClassifierError::DimensionMismatch { expected: dim, found: row.len() });
    }
    let pos = y.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(ClassifierError::DegenerateInput("single-class labels"));
    }
    Ok(dim)
}

/// Stochastic subgradient descent on the weighted hinge objective with step
/// `1 / (λ t)`, `λ = 1 / (c n)`, and a fresh seeded shuffle every epoch.
///
/// The returned model is the average of the iterates over the second half
/// of training, which settles the unregularised bias.
pub fn train_svm(x: &[Vec<f64>], y: &[u8], params: TrainParams) -> Result<SvmModel, ClassifierError> {
    let dim = validate(x, y)?;
    if !(params.c > 0.0 && params.c.is_finite()) {
        return Err(ClassifierError::InvalidParameter("c must be positive"));
    }
    if params.epochs == 0 {
        return Err(ClassifierError::InvalidParameter("epochs must be positive"));
    }
    let n = x.len();
    let lambda = 1.0 / (params.c * n as f64);
    let total_steps = params.epochs * n;
    let average_from = total_steps / 2;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut w_avg = vec![0.0; dim];
    let mut b_avg = 0.0;
    let mut averaged = 0usize;
    let mut t = 0usize;

    for _ in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let yi = sign(y[i]);
            let margin = yi * (dot(&w, &x[i]) + b);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|wj| *wj *= shrink);
            if margin < 1.0 {
                let step = eta * params.class_weights.of(y[i]) * yi;
                w.iter_mut().zip(&x[i]).for_each(|(wj, xj)| *wj += step * xj);
                b += step;
            }
            if t > average_from {
                averaged += 1;
                let k = averaged as f64;
                w_avg.iter_mut().zip(&w).for_each(|(a, wj)| *a += (wj - *a) / k);
                b_avg += (b - b_avg) / k;
            }
        }
    }

    if w_avg.iter().any(|v| !v.is_finite()) || !b_avg.is_finite() {
        return Err(ClassifierError::DegenerateInput("training diverged"));
    }
    Ok(SvmModel { weights: w_avg, bias: b_avg, c: params.c, class_weights: params.class_weights, seed: params.seed })
}

impl SvmModel {
    pub fn decision(&self, x: &[f64]) -> Result<f64, ClassifierError> {
        if x.len() != self.weights.len() {
            return Err(ClassifierError::DimensionMismatch { expected: self.weights.len(), found: x.len() });
        }
        Ok(dot(&self.weights, x) + self.bias)
    }

    /// `1` when the decision value is non-negative.
    pub fn predict(&self, x: &[f64]) -> Result<u8, ClassifierError> {
        Ok((self.decision(x)? >= 0.0) as u8)
    }

    pub fn predict_all(&self, xs: &[Vec<f64>]) -> Result<Vec<u8>, ClassifierError> {
        xs.iter().map(|x| self.predict(x)).collect()
    }

    pub fn objective(&self, x: &[Vec<f64>], y: &[u8]) -> f64 {
        svm_objective(&self.weights, self.bias, x, y, self.c, self.class_weights)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub f1_pos: f64,
    pub f1_neg: f64,
    pub macro_f1: f64,
}

impl EvalReport {
    pub fn confusion(&self) -> Confusion {
        Confusion { tp: self.tp, fp: self.fp, fn_: self.fn_, tn: self.tn }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

fn f1(hit: usize, false_alarm: usize, miss: usize) -> f64 {
    let denom = 2 * hit + false_alarm + miss;
    if hit == 0 {
        0.0
    } else {
        2.0 * hit as f64 / denom as f64
    }
}

/// Per-class F1 (zero when precision + recall is zero) and their mean.
pub fn macro_f1(y_true: &[u8], y_pred: &[u8]) -> Result<EvalReport, ClassifierError> {
    if y_true.len() != y_pred.len() || y_true.is_empty() {
        return Err(ClassifierError::LengthMismatch(y_true.len(), y_pred.len()));
    }
    let mut c = Confusion { tp: 0, fp: 0, fn_: 0, tn: 0 };
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t == 1, p == 1) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (true, false) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    let f1_pos = f1(c.tp, c.fp, c.fn_);
    let f1_neg = f1(c.tn, c.fn_, c.fp);
    Ok(EvalReport { tp: c.tp, fp: c.fp, fn_: c.fn_, tn: c.tn, f1_pos, f1_neg, macro_f1: (f1_pos + f1_neg) / 2.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best_c: f64,
    pub val_macro_f1: f64,
    /// `(c, validation macro-F1)` for every grid point, in grid order.
    pub scores: Vec<(f64, f64)>,
}

/// Trains one model per `c` and keeps the best validation macro-F1; ties go
/// to the smaller `c`.
#[allow(clippy::too_many_arguments)]
pub fn grid_search(
    x_train: &[Vec<f64>],
    y_train: &[u8],
    x_val: &[Vec<f64>],
    y_val: &[u8],
    c_grid: &[f64],
    class_weights: ClassWeights,
    seed: u64,
    epochs: usize,
    exec: Execution,
) -> Result<GridResult, ClassifierError> {
    if c_grid.is_empty() {
        return Err(ClassifierError::InvalidParameter("empty c grid"));
    }
    let scores = exec.try_map(c_grid, |&c| {
        let model = train_svm(x_train, y_train, TrainParams { c, class_weights, seed, epochs })?;
        let report = macro_f1(y_val, &model.predict_all(x_val)?)?;
        Ok::<_, ClassifierError>((c, report.macro_f1))
    })?;
    let (best_c, val_macro_f1) = scores
        .iter()
        .copied()
        .reduce(|best, cur| if cur.1 > best.1 || (cur.1 == best.1 && cur.0 < best.0) { cur } else { best })
        .expect("non-empty grid");
    Ok(GridResult { best_c, val_macro_f1, scores })
}
