//! Linear softmax classifier trained by minibatch SGD with heavy-ball momentum.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{normalize, ProbVector};

/// Lower clamp on the true-class probability inside cross-entropy.
pub const PROB_CLAMP: f64 = 1e-12;

const INIT_STD: f64 = 0.01;

/// Weights (C×D, row-major) and bias (C).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Checkpoint", into = "Checkpoint")]
pub struct ModelParams {
    num_classes: usize,
    dim: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

/// On-disk layout of a checkpoint.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Checkpoint {
    #[serde(rename = "C")]
    num_classes: usize,
    #[serde(rename = "D")]
    dim: usize,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl TryFrom<Checkpoint> for ModelParams {
    type Error = Error;

    fn try_from(c: Checkpoint) -> Result<Self> {
        if c.weights.len() != c.num_classes || c.bias.len() != c.num_classes {
            return Err(Error::ClassMismatch {
                expected: c.num_classes,
                actual: c.weights.len().max(c.bias.len()),
            });
        }
        if let Some(row) = c.weights.iter().find(|r| r.len() != c.dim) {
            return Err(Error::DimensionMismatch {
                expected: c.dim,
                actual: row.len(),
            });
        }
        ModelParams::from_parts(
            c.num_classes,
            c.dim,
            c.weights.into_iter().flatten().collect(),
            c.bias,
        )
    }
}

impl From<ModelParams> for Checkpoint {
    fn from(p: ModelParams) -> Self {
        Checkpoint {
            num_classes: p.num_classes,
            dim: p.dim,
            weights: p.weights.chunks(p.dim).map(<[f64]>::to_vec).collect(),
            bias: p.bias,
        }
    }
}

impl ModelParams {
    pub fn zeros(num_classes: usize, dim: usize) -> Self {
        ModelParams {
            num_classes,
            dim,
            weights: vec![0.0; num_classes * dim],
            bias: vec![0.0; num_classes],
        }
    }

    pub fn from_parts(
        num_classes: usize,
        dim: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::TooFewClasses(num_classes));
        }
        if bias.len() != num_classes {
            return Err(Error::ClassMismatch {
                expected: num_classes,
                actual: bias.len(),
            });
        }
        if dim == 0 || weights.len() != num_classes * dim {
            return Err(Error::DimensionMismatch {
                expected: num_classes * dim,
                actual: weights.len(),
            });
        }
        if let Some(index) = weights.iter().chain(&bias).position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(ModelParams {
            num_classes,
            dim,
            weights,
            bias,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_row(&self, class: usize) -> &[f64] {
        &self.weights[class * self.dim..(class + 1) * self.dim]
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|x| x.is_finite())
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        (0..self.num_classes)
            .map(|c| {
                self.weight_row(c)
                    .iter()
                    .zip(x)
                    .map(|(w, v)| w * v)
                    .sum::<f64>()
                    + self.bias[c]
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Std of the Gaussian input jitter, in feature units.
    pub augment_std: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            momentum: 0.9,
            weight_decay: 5e-4,
            batch_size: 32,
            seed: 0,
            augment_std: 0.5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config("learning_rate", "must be nonnegative"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::config("momentum", "must lie in [0, 1)"));
        }
        if !(self.weight_decay >= 0.0) || !self.weight_decay.is_finite() {
            return Err(Error::config("weight_decay", "must be nonnegative"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be positive"));
        }
        if !(self.augment_std >= 0.0) || !self.augment_std.is_finite() {
            return Err(Error::config("augment_std", "must be nonnegative"));
        }
        Ok(())
    }
}

/// A training example: borrowed features plus a (possibly pseudo) label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPoint<'a> {
    pub features: &'a [f64],
    pub label: usize,
}

/// Weights ~ N(0, 0.01²), bias zero.
pub fn init_params(num_classes: usize, dim: usize, seed: u64) -> Result<ModelParams> {
    if num_classes < 2 {
        return Err(Error::TooFewClasses(num_classes));
    }
    if dim == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            actual: 0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = (0..num_classes * dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            INIT_STD * z
        })
        .collect();
    Ok(ModelParams {
        num_classes,
        dim,
        weights,
        bias: vec![0.0; num_classes],
    })
}

fn softmax(logits: &[f64]) -> Result<ProbVector> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    normalize(&exps)
}

pub fn predict_proba(params: &ModelParams, x: &[f64]) -> Result<ProbVector> {
    if x.len() != params.dim {
        return Err(Error::DimensionMismatch {
            expected: params.dim,
            actual: x.len(),
        });
    }
    softmax(&params.logits(x))
}

/// `x + ε`, `ε ~ N(0, std²)` per coordinate. `std == 0` returns `x` and draws nothing.
pub fn augment<R: Rng + ?Sized>(x: &[f64], std: f64, rng: &mut R) -> Vec<f64> {
    if std == 0.0 {
        return x.to_vec();
    }
    let noise = Normal::new(0.0, std).expect("augment std must be finite and nonnegative");
    x.iter().map(|&v| v + noise.sample(rng)).collect()
}

fn cross_entropy(p: &ProbVector, label: usize) -> f64 {
    -p[label].max(PROB_CLAMP).ln()
}

/// Pooled mean cross-entropy over source and pseudo-labeled points
/// (one average over `m_s + m_t` samples). Empty input gives 0.
pub fn mixed_loss(
    params: &ModelParams,
    source: &[LabeledPoint<'_>],
    pseudo: &[LabeledPoint<'_>],
) -> Result<f64> {
    let n = source.len() + pseudo.len();
    if n == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for pt in source.iter().chain(pseudo) {
        check_label(params, pt.label)?;
        total += cross_entropy(&predict_proba(params, pt.features)?, pt.label);
    }
    Ok(total / n as f64)
}

fn check_label(params: &ModelParams, label: usize) -> Result<()> {
    if label >= params.num_classes {
        return Err(Error::LabelOutOfRange {
            label,
            classes: params.num_classes,
        });
    }
    Ok(())
}

/// Gradient of the mean (unclamped) cross-entropy over `points`, without
/// weight decay, laid out like `ModelParams`.
pub fn loss_gradient(params: &ModelParams, points: &[LabeledPoint<'_>]) -> Result<ModelParams> {
    let mut grad = ModelParams::zeros(params.num_classes, params.dim);
    if points.is_empty() {
        return Ok(grad);
    }
    let scale = 1.0 / points.len() as f64;
    for pt in points {
        check_label(params, pt.label)?;
        let p = predict_proba(params, pt.features)?;
        accumulate_gradient(&mut grad, &p, pt.label, pt.features, scale);
    }
    Ok(grad)
}

fn accumulate_gradient(
    grad: &mut ModelParams,
    p: &ProbVector,
    label: usize,
    x: &[f64],
    scale: f64,
) {
    let dim = grad.dim;
    for c in 0..grad.num_classes {
        let delta = (p[c] - if c == label { 1.0 } else { 0.0 }) * scale;
        grad.bias[c] += delta;
        for (g, v) in grad.weights[c * dim..(c + 1) * dim].iter_mut().zip(x) {
            *g += delta * v;
        }
    }
}

/// Parameters plus the momentum buffer that persists across epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdState {
    pub params: ModelParams,
    velocity: ModelParams,
}

impl SgdState {
    pub fn new(params: ModelParams) -> Self {
        let velocity = ModelParams::zeros(params.num_classes, params.dim);
        SgdState { params, velocity }
    }

    pub fn reset_momentum(&mut self) {
        self.velocity = ModelParams::zeros(self.params.num_classes, self.params.dim);
    }
}

/// One shuffled pass over `train`. Each visited sample is augmented once.
/// Per batch: `v ← μ v + g`, `θ ← θ − lr v`, where `g` is the batch-mean
/// cross-entropy gradient plus `weight_decay · W` (bias is not decayed).
pub fn sgd_epoch<R: Rng + ?Sized>(
    state: &SgdState,
    train: &[LabeledPoint<'_>],
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<SgdState> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    cfg.validate()?;
    let mut next = state.clone();
    let (classes, dim) = (next.params.num_classes, next.params.dim);
    for pt in train {
        check_label(&next.params, pt.label)?;
        if pt.features.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: pt.features.len(),
            });
        }
    }

    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(rng);

    let mut grad = ModelParams::zeros(classes, dim);
    for batch in order.chunks(cfg.batch_size) {
        grad.weights.iter_mut().for_each(|g| *g = 0.0);
        grad.bias.iter_mut().for_each(|g| *g = 0.0);
        let scale = 1.0 / batch.len() as f64;
        for &i in batch {
            let pt = train[i];
            let x = augment(pt.features, cfg.augment_std, rng);
            let p = predict_proba(&next.params, &x)?;
            accumulate_gradient(&mut grad, &p, pt.label, &x, scale);
        }
        for (g, w) in grad.weights.iter_mut().zip(&next.params.weights) {
            *g += cfg.weight_decay * w;
        }
        step(
            &mut next.params.weights,
            &mut next.velocity.weights,
            &grad.weights,
            cfg,
        );
        step(
            &mut next.params.bias,
            &mut next.velocity.bias,
            &grad.bias,
            cfg,
        );
    }
    if !next.params.is_finite() {
        return Err(Error::NonFinite { index: 0 });
    }
    Ok(next)
}

fn step(params: &mut [f64], velocity: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
    for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(grad) {
        *v = cfg.momentum * *v + g;
        *p -= cfg.learning_rate * *v;
    }
}

pub fn save_checkpoint(params: &ModelParams, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(params)?;
    text.push('\n');
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}
