//! Feed-forward binary classifier: five ReLU hidden layers, one sigmoid
//! output unit, binary cross-entropy loss and minibatch training.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::matrix::{gemm, Matrix};
use crate::preprocess::DesignMatrix;

pub const HIDDEN_LAYERS: usize = 5;

/// Probabilities are clamped into `[PROB_CLAMP, 1 - PROB_CLAMP]` before taking logs.
pub const PROB_CLAMP: f64 = 1e-7;

/// Rows per forward pass when scoring whole matrices.
const EVAL_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpArchitecture {
    pub input_dim: usize,
    pub hidden_widths: Vec<usize>,
}

impl MlpArchitecture {
    pub fn new(input_dim: usize, hidden_widths: Vec<usize>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidConfig("input_dim must be positive".into()));
        }
        if hidden_widths.len() != HIDDEN_LAYERS {
            return Err(Error::InvalidConfig(format!(
                "expected {HIDDEN_LAYERS} hidden layers, got {}",
                hidden_widths.len()
            )));
        }
        if hidden_widths.contains(&0) {
            return Err(Error::InvalidConfig("hidden widths must be positive".into()));
        }
        Ok(MlpArchitecture {
            input_dim,
            hidden_widths,
        })
    }

    /// `(fan_in, fan_out)` of every dense layer, output layer last.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = vec![self.input_dim];
        dims.extend(&self.hidden_widths);
        dims.push(1);
        dims.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `fan_in x fan_out`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Layer {
            weights: Matrix::zeros(fan_in, fan_out),
            bias: vec![0.0; fan_out],
        }
    }

    fn is_finite(&self) -> bool {
        self.weights.is_finite() && self.bias.iter().all(|b| b.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub arch: MlpArchitecture,
    pub layers: Vec<Layer>,
}

impl MlpParams {
    /// Checks that layer shapes chain from `input_dim` through the hidden widths to 1.
    pub fn validate(&self) -> Result<()> {
        let shapes = self.arch.layer_shapes();
        if shapes.len() != self.layers.len() {
            return Err(Error::InvalidArtifact(format!(
                "expected {} layers, found {}",
                shapes.len(),
                self.layers.len()
            )));
        }
        for (i, ((fi, fo), l)) in shapes.iter().zip(&self.layers).enumerate() {
            if l.weights.rows() != *fi || l.weights.cols() != *fo || l.bias.len() != *fo {
                return Err(Error::InvalidArtifact(format!("layer {i} has the wrong shape")));
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Layer::is_finite)
    }
}

/// Parameter-shaped gradient set.
pub type Gradients = Vec<Layer>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
    Sgd,
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
    /// Epochs without validation-loss improvement before stopping; 0 disables.
    pub early_stop_patience: usize,
    pub shuffle_each_epoch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 512,
            max_epochs: 100,
            seed: 42,
            optimizer: Optimizer::default(),
            early_stop_patience: 5,
            shuffle_each_epoch: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::InvalidConfig(
                "batch_size and max_epochs must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    /// Epoch whose parameters were returned when early stopping was active.
    pub best_epoch: Option<usize>,
}

/// He-normal weights (variance `2 / fan_in`), zero biases.
pub fn init_mlp(arch: &MlpArchitecture, seed: u64) -> MlpParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = arch
        .layer_shapes()
        .into_iter()
        .map(|(fan_in, fan_out)| {
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
            let data = (0..fan_in * fan_out).map(|_| normal.sample(&mut rng)).collect();
            Layer {
                weights: Matrix::from_vec(fan_in, fan_out, data).expect("sized"),
                bias: vec![0.0; fan_out],
            }
        })
        .collect();
    MlpParams {
        arch: arch.clone(),
        layers,
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    // keep strictly inside (0, 1)
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Pre-activations of every layer for one batch.
struct Trace {
    inputs: Matrix,
    pre: Vec<Matrix>,
    post: Vec<Matrix>,
}

fn dense(input: &Matrix, layer: &Layer) -> Matrix {
    let mut z = Matrix::zeros(input.rows(), layer.bias.len());
    for r in 0..z.rows() {
        z.row_mut(r).copy_from_slice(&layer.bias);
    }
    gemm(false, input, false, &layer.weights, 1.0, 1.0, &mut z).expect("checked widths");
    z
}

fn forward_trace(params: &MlpParams, batch: &Matrix) -> Result<Trace> {
    if batch.cols() != params.arch.input_dim {
        return Err(Error::DimensionMismatch {
            expected: params.arch.input_dim,
            found: batch.cols(),
        });
    }
    let last = params.layers.len() - 1;
    let mut pre = Vec::with_capacity(params.layers.len());
    let mut post: Vec<Matrix> = Vec::with_capacity(params.layers.len());
    for (i, layer) in params.layers.iter().enumerate() {
        let input = if i == 0 { batch } else { &post[i - 1] };
        let z = dense(input, layer);
        let mut a = z.clone();
        if i == last {
            a.as_mut_slice().iter_mut().for_each(|v| *v = sigmoid(*v));
        } else {
            a.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
        }
        pre.push(z);
        post.push(a);
    }
    Ok(Trace {
        inputs: batch.clone(),
        pre,
        post,
    })
}

/// Attack probability of every row.
pub fn forward(params: &MlpParams, batch: &Matrix) -> Result<Vec<f64>> {
    if batch.cols() != params.arch.input_dim {
        return Err(Error::DimensionMismatch {
            expected: params.arch.input_dim,
            found: batch.cols(),
        });
    }
    let mut out = Vec::with_capacity(batch.rows());
    let idx: Vec<usize> = (0..batch.rows()).collect();
    for chunk in idx.chunks(EVAL_CHUNK) {
        let sub = if chunk.len() == batch.rows() {
            batch.clone()
        } else {
            batch.select_rows(chunk)
        };
        let trace = forward_trace(params, &sub)?;
        out.extend_from_slice(trace.post.last().expect("output layer").as_slice());
    }
    Ok(out)
}

/// Mean binary cross-entropy with probabilities clamped away from 0 and 1.
pub fn bce_loss(p: &[f64], e: &[u8]) -> Result<f64> {
    if p.len() != e.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: e.len(),
        });
    }
    if p.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = p
        .iter()
        .zip(e)
        .map(|(&p, &e)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            if e == 1 {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        })
        .sum();
    Ok(-sum / p.len() as f64)
}

/// Analytic gradient of `bce_loss(forward(params, batch), labels)`.
///
/// The output-unit error is `(p - e) / N` inside the clamp band and 0 outside
/// it, where the clamped loss is flat.
pub fn gradients(params: &MlpParams, batch: &Matrix, labels: &[u8]) -> Result<(f64, Gradients)> {
    if labels.len() != batch.rows() {
        return Err(Error::LengthMismatch {
            left: batch.rows(),
            right: labels.len(),
        });
    }
    let trace = forward_trace(params, batch)?;
    let p = trace.post.last().expect("output layer").as_slice();
    let loss = bce_loss(p, labels)?;
    let n = batch.rows().max(1) as f64;

    let mut delta = Matrix::from_vec(
        batch.rows(),
        1,
        p.iter()
            .zip(labels)
            .map(|(&p, &e)| {
                if p > PROB_CLAMP && p < 1.0 - PROB_CLAMP {
                    (p - f64::from(e)) / n
                } else {
                    0.0
                }
            })
            .collect(),
    )?;
    let mut grads: Gradients = params
        .layers
        .iter()
        .map(|l| Layer::zeros(l.weights.rows(), l.weights.cols()))
        .collect();
    for i in (0..params.layers.len()).rev() {
        let input = if i == 0 { &trace.inputs } else { &trace.post[i - 1] };
        gemm(true, input, false, &delta, 1.0, 0.0, &mut grads[i].weights)?;
        for r in 0..delta.rows() {
            for (b, d) in grads[i].bias.iter_mut().zip(delta.row(r)) {
                *b += d;
            }
        }
        if i > 0 {
            let mut upstream = Matrix::zeros(delta.rows(), params.layers[i].weights.rows());
            gemm(false, &delta, true, &params.layers[i].weights, 1.0, 0.0, &mut upstream)?;
            for (u, &z) in upstream
                .as_mut_slice()
                .iter_mut()
                .zip(trace.pre[i - 1].as_slice())
            {
                if z <= 0.0 {
                    *u = 0.0;
                }
            }
            delta = upstream;
        }
    }
    Ok((loss, grads))
}

enum OptimizerState {
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
        step: i32,
        m: Gradients,
        v: Gradients,
    },
    Sgd,
}

impl OptimizerState {
    fn new(opt: Optimizer, params: &MlpParams) -> Self {
        let zeros = || -> Gradients {
            params
                .layers
                .iter()
                .map(|l| Layer::zeros(l.weights.rows(), l.weights.cols()))
                .collect()
        };
        match opt {
            Optimizer::Adam {
                beta1,
                beta2,
                epsilon,
            } => OptimizerState::Adam {
                beta1,
                beta2,
                epsilon,
                step: 0,
                m: zeros(),
                v: zeros(),
            },
            Optimizer::Sgd => OptimizerState::Sgd,
        }
    }

    fn apply(&mut self, params: &mut MlpParams, grads: &Gradients, lr: f64) {
        match self {
            OptimizerState::Sgd => {
                for (layer, g) in params.layers.iter_mut().zip(grads) {
                    for (w, gw) in layer.weights.as_mut_slice().iter_mut().zip(g.weights.as_slice()) {
                        *w -= lr * gw;
                    }
                    for (b, gb) in layer.bias.iter_mut().zip(&g.bias) {
                        *b -= lr * gb;
                    }
                }
            }
            OptimizerState::Adam {
                beta1,
                beta2,
                epsilon,
                step,
                m,
                v,
            } => {
                *step += 1;
                let c1 = 1.0 - beta1.powi(*step);
                let c2 = 1.0 - beta2.powi(*step);
                let (b1, b2, eps) = (*beta1, *beta2, *epsilon);
                let update = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                };
                for (((layer, g), ml), vl) in params.layers.iter_mut().zip(grads).zip(m).zip(v) {
                    let ws = layer.weights.as_mut_slice();
                    let gs = g.weights.as_slice();
                    let ms = ml.weights.as_mut_slice();
                    let vs = vl.weights.as_mut_slice();
                    for j in 0..ws.len() {
                        update(&mut ws[j], gs[j], &mut ms[j], &mut vs[j]);
                    }
                    for j in 0..layer.bias.len() {
                        update(&mut layer.bias[j], g.bias[j], &mut ml.bias[j], &mut vl.bias[j]);
                    }
                }
            }
        }
    }
}

/// Row order for one epoch; depends only on `(seed, epoch)` and the row count.
pub fn epoch_order(n: usize, seed: u64, epoch: usize, shuffle: bool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if shuffle {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1 + epoch as u64));
        order.shuffle(&mut rng);
    }
    order
}

fn loss_and_accuracy(params: &MlpParams, m: &DesignMatrix) -> Result<(f64, f64)> {
    let p = forward(params, &m.values)?;
    let loss = bce_loss(&p, &m.labels)?;
    let correct = p
        .iter()
        .zip(&m.labels)
        .filter(|(&p, &e)| u8::from(p >= 0.5) == e)
        .count();
    Ok((loss, correct as f64 / m.rows().max(1) as f64))
}

/// Minibatch training from a seeded He initialization.
///
/// With `early_stop_patience > 0` and a non-empty validation set, training
/// stops once validation loss has not improved for that many epochs and the
/// best-validation parameters are returned.
pub fn train(
    train: &DesignMatrix,
    val: &DesignMatrix,
    arch: &MlpArchitecture,
    config: &TrainConfig,
) -> Result<(MlpParams, TrainHistory)> {
    config.validate()?;
    if train.rows() == 0 {
        return Err(Error::EmptyInput);
    }
    for m in [train, val] {
        if m.cols() != arch.input_dim {
            return Err(Error::DimensionMismatch {
                expected: arch.input_dim,
                found: m.cols(),
            });
        }
    }
    let mut params = init_mlp(arch, config.seed);
    let mut opt = OptimizerState::new(config.optimizer, &params);
    let mut history = TrainHistory::default();
    let early_stop = config.early_stop_patience > 0 && val.rows() > 0;
    let mut best: Option<(f64, usize, MlpParams)> = None;
    let mut stale = 0;

    for epoch in 0..config.max_epochs {
        let order = epoch_order(train.rows(), config.seed, epoch, config.shuffle_each_epoch);
        for chunk in order.chunks(config.batch_size) {
            let batch = train.values.select_rows(chunk);
            let labels: Vec<u8> = chunk.iter().map(|&i| train.labels[i]).collect();
            let (loss, grads) = gradients(&params, &batch, &labels)?;
            if !loss.is_finite() || !grads.iter().all(Layer::is_finite) {
                return Err(Error::NonFiniteLoss { epoch });
            }
            opt.apply(&mut params, &grads, config.learning_rate);
        }
        if !params.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        let (train_loss, train_accuracy) = loss_and_accuracy(&params, train)?;
        if !train_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        let (val_loss, val_accuracy) = if val.rows() > 0 {
            let (l, a) = loss_and_accuracy(&params, val)?;
            (Some(l), Some(a))
        } else {
            (None, None)
        };
        history.epochs.push(EpochStats {
            epoch,
            train_loss,
            train_accuracy,
            val_loss,
            val_accuracy,
        });

        if early_stop {
            let vl = val_loss.expect("validation present");
            if best.as_ref().is_none_or(|(b, _, _)| vl < *b) {
                best = Some((vl, epoch, params.clone()));
                stale = 0;
            } else {
                stale += 1;
                if stale >= config.early_stop_patience {
                    break;
                }
            }
        }
    }
    if let Some((_, epoch, p)) = best {
        history.best_epoch = Some(epoch);
        params = p;
    }
    Ok((params, history))
}

/// 1 where the forward probability is at least `threshold`.
pub fn predict(params: &MlpParams, m: &Matrix, threshold: f64) -> Result<Vec<u8>> {
    Ok(forward(params, m)?
        .into_iter()
        .map(|p| u8::from(p >= threshold))
        .collect())
}
