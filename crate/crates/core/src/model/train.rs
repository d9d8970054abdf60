use std::borrow::Cow;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::network::{CanModel, CanParams};
use crate::error::{Error, Result};

/// Optimizer and schedule settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            steps: 1000,
            batch_size: 8,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be non-negative"));
        }
        if self.steps == 0 || self.batch_size == 0 {
            return Err(Error::invalid("steps and batch size must be positive"));
        }
        let beta_ok = |b: f64| (0.0..1.0).contains(&b);
        if !beta_ok(self.adam_beta1) || !beta_ok(self.adam_beta2) {
            return Err(Error::invalid("Adam betas must lie in [0, 1)"));
        }
        if !(self.adam_eps > 0.0) {
            return Err(Error::invalid("Adam epsilon must be positive"));
        }
        Ok(())
    }
}

/// One training example.
#[derive(Debug, Clone)]
pub struct Window<'a> {
    pub appearance: Cow<'a, [f64]>,
    pub motion: Cow<'a, [f64]>,
    pub target: Cow<'a, [f64]>,
}

/// Indexed collection of training windows.
pub trait WindowSet: Sync {
    fn len(&self) -> usize;

    fn window(&self, index: usize) -> Window<'_>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Windows held fully in memory.
#[derive(Debug, Clone, Default)]
pub struct OwnedWindows(pub Vec<(Vec<f64>, Vec<f64>, Vec<f64>)>);

impl WindowSet for OwnedWindows {
    fn len(&self) -> usize {
        self.0.len()
    }

    fn window(&self, index: usize) -> Window<'_> {
        let (a, m, t) = &self.0[index];
        Window {
            appearance: Cow::Borrowed(a),
            motion: Cow::Borrowed(m),
            target: Cow::Borrowed(t),
        }
    }
}

/// Adam state: first and second moments plus the step counter.
#[derive(Debug, Clone)]
pub struct Adam {
    m: CanParams,
    v: CanParams,
    t: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    pub fn new(model: &CanModel, cfg: &TrainConfig) -> Self {
        Self {
            m: CanParams::zeros(&model.config),
            v: CanParams::zeros(&model.config),
            t: 0,
            lr: cfg.learning_rate,
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_eps,
        }
    }

    pub fn step(&mut self, params: &mut CanParams, grads: &CanParams) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let moments = self.m.iter_mut().zip(self.v.iter_mut());
        for (((_, p), (_, g)), ((_, m), (_, v))) in params.iter_mut().zip(grads.iter()).zip(moments)
        {
            for (((p, &g), m), v) in p
                .data
                .iter_mut()
                .zip(&g.data)
                .zip(&mut m.data)
                .zip(&mut v.data)
            {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

/// Mean squared error of one window and its output gradient, scaled so that
/// summing over a batch of `batch` windows gives the batch-mean loss.
fn window_loss(model: &CanModel, w: &Window<'_>, batch: usize) -> Result<(f64, CanParams)> {
    if w.target.len() != model.config.n {
        return Err(Error::shape(format!(
            "target has {} samples, model predicts {}",
            w.target.len(),
            model.config.n
        )));
    }
    let (out, cache) = model.forward(&w.appearance, &w.motion)?;
    let denom = (batch * out.len()) as f64;
    let mut loss = 0.0;
    let d_out: Vec<f64> = out
        .iter()
        .zip(w.target.iter())
        .map(|(&y, &t)| {
            let r = y - t;
            loss += r * r;
            2.0 * r / denom
        })
        .collect();
    let grads = model.backward(&cache, &d_out)?;
    Ok((loss / denom, grads))
}

/// Loss and summed gradients over `batch`. Windows are evaluated in
/// parallel on the current rayon pool and reduced in index order.
pub fn batch_gradients(
    model: &CanModel,
    data: &dyn WindowSet,
    batch: &[usize],
) -> Result<(f64, CanParams)> {
    let per_window: Vec<(f64, CanParams)> = batch
        .par_iter()
        .map(|&i| window_loss(model, &data.window(i), batch.len()))
        .collect::<Result<_>>()?;
    let mut total = CanParams::zeros(&model.config);
    let mut loss = 0.0;
    for (l, g) in &per_window {
        loss += l;
        total.accumulate(g);
    }
    Ok((loss, total))
}

/// Result of [`train`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Mean batch loss before each update.
    pub loss_trace: Vec<f64>,
}

/// Adam on shuffled mini-batches. Every pass over the data uses a fresh
/// permutation from the seeded generator.
pub fn train(
    model: &mut CanModel,
    data: &dyn WindowSet,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(model, cfg);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut cursor = order.len();
    let mut loss_trace = Vec::with_capacity(cfg.steps);
    let batch_size = cfg.batch_size.min(data.len());
    let mut batch = Vec::with_capacity(batch_size);
    for _ in 0..cfg.steps {
        batch.clear();
        while batch.len() < batch_size {
            if cursor == order.len() {
                order.shuffle(&mut rng);
                cursor = 0;
            }
            let next = order[cursor];
            cursor += 1;
            if !batch.contains(&next) {
                batch.push(next);
            }
        }
        // summation order independent of the shuffle
        batch.sort_unstable();
        let (loss, grads) = batch_gradients(model, data, &batch)?;
        if !loss.is_finite() {
            return Err(Error::invalid(format!(
                "training diverged at step {}",
                loss_trace.len()
            )));
        }
        loss_trace.push(loss);
        adam.step(&mut model.params, &grads);
    }
    Ok(TrainOutcome { loss_trace })
}

/// Mean loss over every window, without updating.
pub fn evaluate_loss(model: &CanModel, data: &dyn WindowSet) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::invalid("dataset is empty"));
    }
    let per_window: Vec<f64> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let w = data.window(i);
            let out = model.predict(&w.appearance, &w.motion)?;
            if w.target.len() != out.len() {
                return Err(Error::shape("target length differs from model output"));
            }
            Ok(out
                .iter()
                .zip(w.target.iter())
                .map(|(y, t)| (y - t) * (y - t))
                .sum::<f64>())
        })
        .collect::<Result<_>>()?;
    Ok(per_window.iter().sum::<f64>() / (data.len() * model.config.n) as f64)
}
