//! Focal-loss training with Adam, step learning-rate decay, best-validation
//! checkpointing and accuracy evaluation.

mod adam;
mod checkpoint;
mod loss;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta};
pub use loss::focal_loss;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::mix_seed;
use crate::error::{Error, Result};
use crate::nn::{backward, forward_train, update_running_stats, NetworkSpec, Tensor};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Focal-loss focusing exponent.
    pub gamma: f64,
    pub learning_rate: f64,
    /// Multiplier applied every `decay_every` epochs.
    pub lr_decay: f64,
    pub decay_every: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { gamma: 2.0, learning_rate: 1e-3, lr_decay: 0.5, decay_every: 5, batch_size: 16, epochs: 20, seed: 0, adam: AdamConfig::default() }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::Config(format!("lr_decay must lie in (0, 1], got {}", self.lr_decay)));
        }
        if self.decay_every == 0 {
            return Err(Error::Config("decay_every must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        self.adam.validate()
    }

    /// Learning rate in effect during 0-based `epoch`.
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        self.learning_rate * self.lr_decay.powi((epoch / self.decay_every) as i32)
    }
}

/// Per-epoch training record; all vectors have one entry per epoch run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub train_accuracy: Vec<f64>,
    /// `None` when training ran without a validation set.
    pub validation_accuracy: Vec<Option<f64>>,
    pub learning_rate: Vec<f64>,
    /// 1-based epoch whose weights were kept, 0 when none ran.
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.train_loss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train_loss.is_empty()
    }
}

/// Inputs with class labels (0 = initial stress, 1 = final stress).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledSet {
    pub inputs: Vec<Tensor>,
    pub labels: Vec<usize>,
}

impl LabeledSet {
    pub fn new(inputs: Vec<Tensor>, labels: Vec<usize>) -> Result<Self> {
        if inputs.len() != labels.len() {
            return Err(Error::shape("dataset", format!("{} inputs, {} labels", inputs.len(), labels.len())));
        }
        Ok(Self { inputs, labels })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn push(&mut self, input: Tensor, label: usize) {
        self.inputs.push(input);
        self.labels.push(label);
    }

    /// Same inputs with every label swapped between the two classes.
    pub fn inverted(&self) -> Self {
        Self { inputs: self.inputs.clone(), labels: self.labels.iter().map(|&y| 1 - y.min(1)).collect() }
    }
}

/// Accuracy and confusion counts (`confusion[truth][predicted]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub confusion: [[usize; 2]; 2],
    pub predictions: Vec<usize>,
}

/// Argmax accuracy of `net` on `data` (batch norm in inference mode).
pub fn evaluate(net: &NetworkSpec, data: &LabeledSet) -> Result<Evaluation> {
    if data.is_empty() {
        return Err(Error::Config("cannot evaluate on an empty set".into()));
    }
    let preds: Vec<Result<usize>> = par::map(&data.inputs, |x| net.predict(x).map(|l| l.argmax()));
    let predictions = preds.into_iter().collect::<Result<Vec<_>>>()?;
    let mut confusion = [[0usize; 2]; 2];
    let mut correct = 0;
    for (&p, &y) in predictions.iter().zip(&data.labels) {
        if p == y {
            correct += 1;
        }
        if p < 2 && y < 2 {
            confusion[y][p] += 1;
        }
    }
    Ok(Evaluation { n: data.len(), correct, accuracy: correct as f64 / data.len() as f64, confusion, predictions })
}

/// Trains `net` on `train_set`, returning the weights from the epoch with
/// the best validation accuracy (the last epoch when `validation` is
/// empty).
pub fn train(net: &NetworkSpec, train_set: &LabeledSet, validation: &LabeledSet, cfg: &TrainConfig) -> Result<(NetworkSpec, TrainHistory)> {
    cfg.validate()?;
    let mut history = TrainHistory::default();
    if cfg.epochs == 0 {
        return Ok((net.clone(), history));
    }
    if train_set.is_empty() {
        return Err(Error::Config("training set is empty".into()));
    }
    if let Some(&y) = train_set.labels.iter().chain(&validation.labels).find(|&&y| y >= net.n_classes()) {
        return Err(Error::Range(format!("label {y} for a {}-class network", net.n_classes())));
    }

    let mut current = net.clone();
    let lens: Vec<usize> = current.trainable_mut().iter().map(|b| b.len()).collect();
    let mut adam = AdamState::new(&lens);
    let mut master: Vec<Vec<f64>> = current.trainable_mut().iter().map(|b| b.iter().map(|&v| v as f64).collect()).collect();
    let mut best: Option<(f64, NetworkSpec)> = None;
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 0..cfg.epochs {
        let lr = cfg.learning_rate_at(epoch);
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, epoch as u64));
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let inputs: Vec<Tensor> = chunk.iter().map(|&i| train_set.inputs[i].clone()).collect();
            let fwd = forward_train(&current, &inputs)?;
            let scale = 1.0 / chunk.len() as f64;
            let mut grad_logits = Vec::with_capacity(chunk.len());
            for (logits, &i) in fwd.logits().iter().zip(chunk) {
                let y = train_set.labels[i];
                let (l, g) = focal_loss(logits, y, cfg.gamma).map_err(|_| Error::Diverged { epoch: epoch + 1, batch: batch_idx + 1 })?;
                if !l.is_finite() {
                    return Err(Error::Diverged { epoch: epoch + 1, batch: batch_idx + 1 });
                }
                loss_sum += l;
                if logits.argmax() == y {
                    correct += 1;
                }
                grad_logits.push(Tensor::from_raw(g.shape().to_vec(), g.data().iter().map(|v| v * scale).collect()));
            }
            let grads = backward(&current, &fwd, &grad_logits)?;
            if grads.buffers.iter().flatten().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch: epoch + 1, batch: batch_idx + 1 });
            }
            let mut views: Vec<&mut [f64]> = master.iter_mut().map(|b| b.as_mut_slice()).collect();
            adam_step(&mut views, &grads.buffers, &mut adam, lr, &cfg.adam)?;
            for (dst, src) in current.trainable_mut().into_iter().zip(&master) {
                dst.iter_mut().zip(src).for_each(|(d, &s)| *d = s as f32);
            }
            update_running_stats(&mut current, &fwd);
        }
        let val_acc = if validation.is_empty() { None } else { Some(evaluate(&current, validation)?.accuracy) };
        history.train_loss.push(loss_sum / train_set.len() as f64);
        history.train_accuracy.push(correct as f64 / train_set.len() as f64);
        history.validation_accuracy.push(val_acc);
        history.learning_rate.push(lr);
        log::info!(
            "epoch {}: loss {:.4}, train acc {:.3}, val acc {:?}, lr {lr:.2e}",
            epoch + 1,
            history.train_loss[epoch],
            history.train_accuracy[epoch],
            val_acc
        );
        let improved = match (&best, val_acc) {
            (None, _) | (_, None) => true,
            (Some((b, _)), Some(v)) => v > *b,
        };
        if improved {
            best = Some((val_acc.unwrap_or(0.0), current.clone()));
            history.best_epoch = epoch + 1;
        }
    }
    let (_, net) = best.expect("at least one epoch ran");
    Ok((net, history))
}
