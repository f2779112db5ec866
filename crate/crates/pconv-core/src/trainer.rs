//! Batch-sequential training of the congruence classification task.
//!
//! One run samples `r` disjoint batches of `s` anchors plus a validation
//! batch, initializes the network from the seed, and performs `t` epochs.
//! Within an epoch the batches are visited in a fixed order with an Adam
//! update after each. Validation accuracy is measured after every epoch and
//! the best-epoch snapshot is retained (ties go to the earliest epoch).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{sample_batches, sparse_row, Dataset, DatasetError};
use crate::net::{
    adam_step, grad_sums, AdamConfig, AdamState, ArchConfig, Gradients, ModelState, NetError,
    Tensor,
};
use crate::patterns::ConfusionMatrix;

/// Stream index used to derive weight initialization from the run seed (the
/// batch plan uses stream 0 inside the dataset module).
const WEIGHT_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Number of training batches per epoch (`r`).
    pub batches: usize,
    /// Anchors per batch (`s`).
    pub batch_size: usize,
    /// Epochs (`t`).
    pub epochs: usize,
    /// Classification modulus (`m`).
    pub modulus: u64,
    pub seed: u64,
    pub adam: AdamConfig,
    pub validation_size: usize,
}

impl TrainConfig {
    /// Defaults from the tuning experiments: r=400, s=256, t=10, and a
    /// 512-anchor validation batch.
    pub fn new(modulus: u64) -> Self {
        TrainConfig {
            batches: 400,
            batch_size: 256,
            epochs: 10,
            modulus,
            seed: 1,
            adam: AdamConfig::default(),
            validation_size: 512,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochMetrics {
    /// Mean of the per-batch mean losses.
    pub train_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epoch_metrics: Vec<EpochMetrics>,
    /// 1-based epoch with the highest validation accuracy (earliest on ties).
    pub best_epoch: usize,
    pub best_accuracy: f64,
    pub best_model: ModelState,
    /// Validation confusion matrix of the best model.
    pub best_confusion: ConfusionMatrix,
    /// Mean loss of the very first batch, before any update.
    pub first_batch_loss: f64,
    /// Total weight updates performed (= r * t).
    pub updates: u64,
    /// Wall-clock seconds, filled by callers that have a clock; not part of
    /// the deterministic run identity.
    pub wall_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    Dataset(DatasetError),
    Net(NetError),
    Config(String),
    /// A congruence class has fewer anchors than one batch needs.
    ClassStarved { class: u64, count: u64, needed: u64 },
    /// Training diverged; the loss stopped being finite.
    NonFiniteLoss { epoch: usize, batch: usize, seed: u64 },
}

impl From<DatasetError> for TrainError {
    fn from(e: DatasetError) -> Self {
        TrainError::Dataset(e)
    }
}

impl From<NetError> for TrainError {
    fn from(e: NetError) -> Self {
        TrainError::Net(e)
    }
}

impl core::fmt::Display for TrainError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TrainError::Dataset(e) => write!(f, "{e}"),
            TrainError::Net(e) => write!(f, "{e}"),
            TrainError::Config(msg) => write!(f, "invalid training configuration: {msg}"),
            TrainError::ClassStarved {
                class,
                count,
                needed,
            } => write!(
                f,
                "congruence class {class} has only {count} anchors, fewer than the {needed} one batch needs"
            ),
            TrainError::NonFiniteLoss { epoch, batch, seed } => write!(
                f,
                "loss became non-finite at epoch {epoch}, batch {batch} (seed {seed}); aborting"
            ),
        }
    }
}

impl core::error::Error for TrainError {}

/// Sanity check run before training: every congruence class must hold at
/// least one batch worth of anchors.
pub fn preflight_class_balance(
    dataset: &Dataset,
    modulus: u64,
    batch_size: usize,
) -> Result<(), TrainError> {
    for (class, &count) in dataset.class_histogram(modulus).iter().enumerate() {
        if count < batch_size as u64 {
            return Err(TrainError::ClassStarved {
                class: class as u64,
                count,
                needed: batch_size as u64,
            });
        }
    }
    Ok(())
}

/// Precomputed sparse exponent rows for a list of anchors.
struct PreparedAnchors {
    /// `anchors.len() * B` rows of `(basis index, exponent)` pairs.
    rows: Vec<Vec<(u32, u32)>>,
    labels: Vec<usize>,
}

fn prepare_anchors(anchors: &[u64], dataset: &Dataset, modulus: u64) -> PreparedAnchors {
    let b = dataset.context_len() as usize;
    let mut rows = Vec::with_capacity(anchors.len() * b);
    let mut labels = Vec::with_capacity(anchors.len());
    for &a in anchors {
        for i in 0..b {
            rows.push(sparse_row(a + i as u64, dataset.basis()));
        }
        labels.push((a % modulus) as usize);
    }
    PreparedAnchors { rows, labels }
}

/// Scatters prepared rows into a zeroed `[n, 1, B, N]` batch tensor.
fn fill_batch(tensor: &mut Tensor, rows: &[Vec<(u32, u32)>], grid_width: usize) {
    tensor.fill(0.0);
    let data = tensor.data_mut();
    for (ri, row) in rows.iter().enumerate() {
        let base = ri * grid_width;
        for &(idx, e) in row {
            data[base + idx as usize] = e as f64;
        }
    }
}

/// Trains with the default sequential gradient routine.
pub fn train(
    dataset: &Dataset,
    arch: &ArchConfig,
    cfg: &TrainConfig,
) -> Result<TrainReport, TrainError> {
    train_with(dataset, arch, cfg, |model, batch, labels| {
        grad_sums(model, batch, labels)
    })
}

/// Trains with a caller-supplied gradient routine, which must return the
/// *sum* of per-sample losses and gradients for the given batch (the loop
/// divides by the batch size). This is the hook used to parallelize batch
/// gradients over sample chunks without changing the update semantics.
pub fn train_with<F>(
    dataset: &Dataset,
    arch: &ArchConfig,
    cfg: &TrainConfig,
    mut batch_grad: F,
) -> Result<TrainReport, TrainError>
where
    F: FnMut(&ModelState, &Tensor, &[usize]) -> Result<(f64, Gradients), NetError>,
{
    arch.validate()?;
    if cfg.modulus < 2 {
        return Err(TrainError::Config("modulus must be >= 2".into()));
    }
    if arch.classes != cfg.modulus as usize {
        return Err(TrainError::Config(format!(
            "architecture emits {} classes but the modulus is {}",
            arch.classes, cfg.modulus
        )));
    }
    if arch.context_len != dataset.context_len() as usize
        || arch.grid_width != dataset.basis().size()
    {
        return Err(TrainError::Config(format!(
            "architecture expects {}x{} contexts, dataset provides {}x{}",
            arch.context_len,
            arch.grid_width,
            dataset.context_len(),
            dataset.basis().size()
        )));
    }
    if cfg.epochs == 0 {
        return Err(TrainError::Config("need at least one epoch".into()));
    }
    preflight_class_balance(dataset, cfg.modulus, cfg.batch_size)?;

    let plan = sample_batches(
        dataset,
        cfg.batches,
        cfg.batch_size,
        cfg.validation_size,
        cfg.seed,
    )?;

    let b = dataset.context_len() as usize;
    let n = dataset.basis().size();
    let prepared: Vec<PreparedAnchors> = plan
        .batches
        .iter()
        .map(|anchors| prepare_anchors(anchors, dataset, cfg.modulus))
        .collect();

    let mut model = crate::net::init_weights(
        arch,
        crate::rng::SplitMix64::new(cfg.seed ^ WEIGHT_STREAM.wrapping_mul(0x9e37_79b9_7f4a_7c15))
            .next_u64(),
    )?;
    let mut adam = AdamState::new(&model, cfg.adam);

    let mut batch_tensor = Tensor::zeros(&[cfg.batch_size, 1, b, n]);
    let mut epoch_metrics = Vec::with_capacity(cfg.epochs);
    let mut first_batch_loss = f64::NAN;
    let mut best: Option<(usize, f64, ModelState, ConfusionMatrix)> = None;

    for epoch in 1..=cfg.epochs {
        let mut loss_total = 0.0;
        for (bi, pb) in prepared.iter().enumerate() {
            fill_batch(&mut batch_tensor, &pb.rows, n);
            let (loss_sum, mut grads) = batch_grad(&model, &batch_tensor, &pb.labels)?;
            let scale = 1.0 / cfg.batch_size as f64;
            let loss = loss_sum * scale;
            if epoch == 1 && bi == 0 {
                first_batch_loss = loss;
            }
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss {
                    epoch,
                    batch: bi + 1,
                    seed: cfg.seed,
                });
            }
            grads.scale(scale);
            adam_step(&mut model, &grads, &mut adam);
            loss_total += loss;
        }
        let train_loss = loss_total / cfg.batches as f64;

        let (val_accuracy, confusion) = evaluate(&model, dataset, &plan.validation, cfg.modulus)?;
        epoch_metrics.push(EpochMetrics {
            train_loss,
            val_accuracy,
        });
        let improved = match &best {
            None => true,
            Some((_, acc, _, _)) => val_accuracy > *acc,
        };
        if improved {
            best = Some((epoch, val_accuracy, model.clone(), confusion));
        }
    }

    let (best_epoch, best_accuracy, best_model, best_confusion) = best.unwrap();
    Ok(TrainReport {
        epoch_metrics,
        best_epoch,
        best_accuracy,
        best_model,
        best_confusion,
        first_batch_loss,
        updates: adam.step,
        wall_secs: 0.0,
    })
}

/// Validation batch size used by [`evaluate`].
const EVAL_CHUNK: usize = 128;

/// Accuracy and confusion matrix of a model over the given anchors. The
/// predicted label is the argmax of the logits (lowest index on ties);
/// entry `(i, j)` counts anchors with true label `i` assigned label `j`.
pub fn evaluate(
    model: &ModelState,
    dataset: &Dataset,
    anchors: &[u64],
    modulus: u64,
) -> Result<(f64, ConfusionMatrix), TrainError> {
    if modulus < 2 {
        return Err(TrainError::Config("modulus must be >= 2".into()));
    }
    if model.arch.classes != modulus as usize {
        return Err(TrainError::Config(format!(
            "model emits {} classes but the modulus is {}",
            model.arch.classes, modulus
        )));
    }
    if anchors.is_empty() {
        return Err(TrainError::Config("no anchors to evaluate".into()));
    }
    if let Some(&bad) = anchors.iter().find(|&&a| !dataset.contains_anchor(a)) {
        return Err(TrainError::Dataset(DatasetError::UnknownAnchor(bad)));
    }
    let b = dataset.context_len() as usize;
    let n = dataset.basis().size();
    let m = modulus as usize;
    let mut confusion = ConfusionMatrix::new(m);
    for chunk in anchors.chunks(EVAL_CHUNK) {
        let pb = prepare_anchors(chunk, dataset, modulus);
        let mut tensor = Tensor::zeros(&[chunk.len(), 1, b, n]);
        fill_batch(&mut tensor, &pb.rows, n);
        let logits = crate::net::forward(model, &tensor)?;
        for (row, &label) in logits.data().chunks(m).zip(&pb.labels) {
            let mut arg = 0usize;
            let mut best = row[0];
            for (i, &v) in row.iter().enumerate().skip(1) {
                if v > best {
                    best = v;
                    arg = i;
                }
            }
            confusion.record(label, arg);
        }
    }
    Ok((confusion.accuracy(), confusion))
}
