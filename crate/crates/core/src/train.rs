//! Shared training-loop plumbing: epoch history, checkpoint selection and
//! mini-batch iteration.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::dataio::Features;
use crate::harness::metrics::{label, MetricSet};
use crate::numcore::{seeded_rng, HasParams, Optimizer, OptimizerKind, Rng};

/// Hard ceiling on epochs for every neural trainer.
pub const MAX_EPOCHS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub train_acc: Option<f64>,
    pub val_acc: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Highest validation accuracy, earliest epoch on ties.
    ValAccuracy,
    /// Lowest validation loss, earliest epoch on ties.
    ValLoss,
    /// The last iterate.
    Final,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model: String,
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were retained.
    pub best_epoch: usize,
    pub selection: Selection,
    pub converged: bool,
    /// Whether the per-epoch training loss never increased (reported, not enforced).
    pub monotone_train_loss: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub test: Option<MetricSet>,
}

impl TrainReport {
    pub fn new(model: impl Into<String>, selection: Selection) -> Self {
        Self {
            model: model.into(),
            epochs: Vec::new(),
            best_epoch: 0,
            selection,
            converged: false,
            monotone_train_loss: true,
            warnings: Vec::new(),
            test: None,
        }
    }

    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs.iter().find(|e| e.epoch == self.best_epoch)
    }

    /// Fills the derived flags. Training counts as converged when the last
    /// five epoch losses vary by at most 1% of their maximum.
    pub(crate) fn finish(&mut self) {
        let tail: Vec<f64> = self.epochs.iter().rev().take(5).map(|e| e.train_loss).collect();
        if tail.len() >= 2 {
            let hi = tail.iter().copied().fold(f64::MIN, f64::max);
            let lo = tail.iter().copied().fold(f64::MAX, f64::min);
            self.converged = hi - lo <= 0.01 * hi.abs().max(1e-12);
        }
        self.monotone_train_loss = self
            .epochs
            .windows(2)
            .all(|w| w[1].train_loss <= w[0].train_loss);
    }
}

/// Tracks the best epoch under a selection rule and keeps a copy of the
/// corresponding model.
pub struct BestTracker<M> {
    selection: Selection,
    best_score: Option<f64>,
    best_epoch: usize,
    best_model: Option<M>,
}

impl<M: Clone> BestTracker<M> {
    pub fn new(selection: Selection) -> Self {
        Self {
            selection,
            best_score: None,
            best_epoch: 0,
            best_model: None,
        }
    }

    /// Offers an epoch; returns true if it became the new best.
    pub fn offer(&mut self, record: &EpochRecord, model: &M) -> bool {
        let score = match self.selection {
            Selection::ValAccuracy => record.val_acc.map(|a| -a),
            Selection::ValLoss => record.val_loss,
            Selection::Final => Some(-(record.epoch as f64)),
        };
        let Some(score) = score else {
            return false;
        };
        // strict improvement keeps the earliest epoch on ties
        if self.best_score.is_none_or(|b| score < b) {
            self.best_score = Some(score);
            self.best_epoch = record.epoch;
            self.best_model = Some(model.clone());
            true
        } else {
            false
        }
    }

    pub fn into_best(self) -> Option<(usize, M)> {
        self.best_model.map(|m| (self.best_epoch, m))
    }
}

/// Shuffled mini-batches of `0..n`.
pub fn minibatches(n: usize, batch_size: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx.chunks(batch_size.max(1)).map(<[usize]>::to_vec).collect()
}

pub fn check_loss(loss: f64, what: &str, epoch: usize) -> Result<()> {
    if loss.is_finite() {
        Ok(())
    } else {
        Err(Error::Numeric(format!(
            "{what} diverged at epoch {epoch}: loss = {loss}"
        )))
    }
}

pub fn check_max_epochs(max_epochs: usize) -> Result<()> {
    if max_epochs == 0 || max_epochs > MAX_EPOCHS {
        return Err(Error::Validation(format!(
            "max_epochs must be in 1..={MAX_EPOCHS}, got {max_epochs}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl Default for ClassifierTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 64,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            seed: 0,
        }
    }
}

/// A model producing `P(y = 1)` for a batch of featurized records.
pub trait BinaryClassifier: HasParams + Clone {
    /// Train-mode objective on a batch; accumulates parameter gradients.
    fn batch_loss(&mut self, batch: &Features) -> Result<f64>;
    /// Inference-mode scores in `(0, 1)`.
    fn scores(&self, data: &Features) -> Result<Vec<f64>>;
    fn clear_cache(&mut self);
}

pub fn accuracy_of<M: BinaryClassifier>(model: &M, data: &Features) -> Result<f64> {
    let s = model.scores(data)?;
    let correct = s
        .iter()
        .zip(&data.y)
        .filter(|(s, y)| f64::from(label(**s)) == **y)
        .count();
    Ok(correct as f64 / data.len().max(1) as f64)
}

/// Mini-batch training with per-epoch train/validation accuracy. Keeps the
/// parameters of the best validation-accuracy epoch (earliest on ties), or
/// the last epoch when there is no validation data.
pub fn fit_classifier<M: BinaryClassifier>(
    model: &mut M,
    name: &str,
    train: &Features,
    val: Option<&Features>,
    cfg: &ClassifierTrainConfig,
) -> Result<TrainReport> {
    check_max_epochs(cfg.epochs)?;
    if train.is_empty() {
        return Err(Error::Validation("cannot train on empty data".into()));
    }
    let val = val.filter(|v| !v.is_empty());
    let selection = if val.is_some() { Selection::ValAccuracy } else { Selection::Final };
    let mut report = TrainReport::new(name, selection);
    let mut rng = seeded_rng(cfg.seed);
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate)?;
    let mut best = BestTracker::new(selection);

    for epoch in 1..=cfg.epochs {
        let mut total = 0.0;
        for batch in minibatches(train.len(), cfg.batch_size, &mut rng) {
            let b = train.select(&batch);
            let loss = model.batch_loss(&b)?;
            check_loss(loss, name, epoch)?;
            total += loss * b.len() as f64;
            opt.step(&mut model.params_mut())?;
        }
        model.clear_cache();
        let rec = EpochRecord {
            epoch,
            train_loss: total / train.len() as f64,
            val_loss: None,
            train_acc: Some(accuracy_of(model, train)?),
            val_acc: val.map(|v| accuracy_of(model, v)).transpose()?,
        };
        best.offer(&rec, &*model);
        report.epochs.push(rec);
    }
    if let Some((epoch, m)) = best.into_best() {
        *model = m;
        report.best_epoch = epoch;
    }
    report.finish();
    Ok(report)
}
