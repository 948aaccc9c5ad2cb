//! Loss, gradients and Adam training.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{shape_bail, Error, Result};
use crate::pdegrid::{Field, Sample};

use super::cells;
use super::tape::{Tape, Var};
use super::{forward, input_cells, ModelParams};

/// `‖pred − target‖ / ‖target‖`.
pub fn relative_l2(pred: &Field, target: &Field) -> Result<f64> {
    pred.relative_error(target)
}

/// A recorded batch loss, ready for [`backward`].
#[derive(Debug)]
pub struct LossTape {
    tape: Tape,
    output: Var,
    sizes: Vec<usize>,
    /// Mean squared relative L2 error over the batch.
    pub value: f64,
}

/// Records the mean squared relative L2 loss of `batch`.
pub fn loss_with_tape(params: &ModelParams, batch: &[Sample]) -> Result<LossTape> {
    if batch.is_empty() {
        shape_bail!("empty batch");
    }
    let mut tape = Tape::new();
    let weight = 1.0 / batch.len() as f64;
    let mut terms = Vec::with_capacity(batch.len());
    for s in batch {
        s.input.check_layout(&s.target, "target")?;
        let (x, grid) = input_cells(params, &s.input)?;
        let target = cells::to_cells(s.target.data(), s.target.shape(), 1, params.config.k);
        let xv = tape.leaf(x);
        let y = params.record_forward(&mut tape, xv, &grid);
        terms.push(tape.rel_sq(y, &target, weight)?);
    }
    let output = if terms.len() == 1 { terms[0] } else { tape.sum(terms) };
    let value = tape.value(output)[0];
    if !value.is_finite() {
        return Err(Error::Numerical("non-finite training loss".into()));
    }
    Ok(LossTape { tape, output, sizes: params.sizes(), value })
}

pub fn loss(params: &ModelParams, batch: &[Sample]) -> Result<f64> {
    Ok(loss_with_tape(params, batch)?.value)
}

/// Gradients of the recorded loss, one buffer per parameter tensor.
pub fn backward(lt: &mut LossTape) -> Result<Vec<Vec<f64>>> {
    lt.tape.backward(lt.output, &[1.0], &lt.sizes)
}

/// Mean relative L2 error of the model over `samples`.
pub fn evaluate(params: &ModelParams, samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        shape_bail!("no samples to evaluate");
    }
    let mut total = 0.0;
    for s in samples {
        total += relative_l2(&forward(params, &s.input)?, &s.target)?;
    }
    Ok(total / samples.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    /// The learning rate is multiplied by `gamma` every `step_size` epochs.
    pub step_size: usize,
    pub gamma: f64,
    /// Seeds the per-epoch shuffles.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 500, batch: 8, lr: 1e-3, step_size: 100, gamma: 0.5, seed: 0 }
    }
}

/// Adam with the usual bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(sizes: &[usize]) -> Self {
        let zeros = || sizes.iter().map(|&n| vec![0.0; n]).collect();
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: zeros(), v: zeros() }
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &[Vec<f64>], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (i, t) in params.tensors.iter_mut().enumerate() {
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (j, p) in t.data.iter_mut().enumerate() {
                let g = grads[i][j];
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g;
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g * g;
                *p -= lr * (m[j] / c1) / ((v[j] / c2).sqrt() + self.eps);
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    /// Mean batch loss per epoch.
    pub train_loss: Vec<f64>,
    /// Validation mean relative L2 per epoch (empty without validation data).
    pub valid_rel_l2: Vec<f64>,
    /// Validation error before the first update.
    pub initial_valid_rel_l2: Option<f64>,
}

/// Trains `params` in place; `progress` sees `(epoch, loss, valid)` after each epoch.
pub fn train(
    params: &mut ModelParams,
    train_set: &[Sample],
    valid_set: &[Sample],
    cfg: &TrainConfig,
    progress: &mut dyn FnMut(usize, f64, Option<f64>),
) -> Result<History> {
    if train_set.is_empty() || cfg.batch == 0 || cfg.step_size == 0 {
        return Err(Error::InvalidParameter("training needs samples and positive batch and step sizes".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(&params.sizes());
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut hist = History::default();
    if !valid_set.is_empty() {
        hist.initial_valid_rel_l2 = Some(evaluate(params, valid_set)?);
    }
    for epoch in 0..cfg.epochs {
        let lr = cfg.lr * cfg.gamma.powi((epoch / cfg.step_size) as i32);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(cfg.batch) {
            let batch: Vec<Sample> = chunk.iter().map(|&i| train_set[i].clone()).collect();
            let mut lt = loss_with_tape(params, &batch)?;
            let grads = backward(&mut lt)?;
            adam.step(params, &grads, lr);
            total += lt.value;
            batches += 1;
        }
        let mean = total / batches as f64;
        hist.train_loss.push(mean);
        let valid = if valid_set.is_empty() { None } else { Some(evaluate(params, valid_set)?) };
        if let Some(v) = valid {
            hist.valid_rel_l2.push(v);
        }
        progress(epoch, mean, valid);
    }
    Ok(hist)
}
