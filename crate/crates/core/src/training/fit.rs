use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, AdamState};
use super::checkpoint::Checkpoint;
use super::config::TrainConfig;
use crate::dataset::{apply_norm, batch_order, fit_norm_stats, Dataset, FeatureTable, NormStats};
use crate::error::{Error, Result};
use crate::model::{model_forward, Forward, ModelConfig, Parameters};
use crate::tensor::{argmax_rows, Mode, Tape};

const SPLIT_STREAM: u64 = 1 << 40;
const DROPOUT_STREAM: u64 = 1 << 41;

#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

pub const EPOCH_LOG_HEADER: &str = "epoch,train_loss,train_acc,val_loss,val_acc";

impl EpochLog {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.epoch, self.train_loss, self.train_acc, self.val_loss, self.val_acc
        )
    }
}

pub fn write_epoch_log(path: &Path, logs: &[EpochLog]) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "{EPOCH_LOG_HEADER}").expect("write to memory");
    for l in logs {
        writeln!(out, "{}", l.csv_row()).expect("write to memory");
    }
    crate::fsutil::write_atomic(path, &out)
}

/// Per-class seeded split: `round(n_c * val_fraction)` samples of each class
/// go to validation. Both returned index lists are sorted.
pub fn stratified_split(
    labels: &[usize],
    val_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let classes = labels.iter().map(|&l| l + 1).max().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SPLIT_STREAM);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for c in 0..classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(&mut rng);
        let k = (idx.len() as f64 * val_fraction).round() as usize;
        val.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    if train.is_empty() || val.is_empty() {
        return Err(Error::Config(format!(
            "split of {} samples at val_fraction {val_fraction} leaves {} train and {} validation",
            labels.len(),
            train.len(),
            val.len()
        )));
    }
    Ok((train, val))
}

/// Feature table holding a dataset's current feature matrix and labels.
pub fn dataset_table(data: &Dataset) -> Result<FeatureTable> {
    let values = (0..data.len())
        .flat_map(|i| data.feature_row(i).to_vec())
        .collect();
    FeatureTable::new(
        data.ids().to_vec(),
        data.feature_columns().to_vec(),
        values,
        Some(data.labels().to_vec()),
    )
}

/// Replaces raw features with their z-scores under `norm`.
pub fn normalize_dataset(data: &Dataset, norm: &NormStats) -> Result<Dataset> {
    let table = apply_norm(&dataset_table(data)?, norm)?;
    data.clone().with_features(&table)
}

/// Mean loss and accuracy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub loss: f64,
    pub acc: f64,
}

/// One pass over `data` in the seeded order of `epoch`: train-mode forward,
/// backward and an Adam step per batch. Parameters are kept at f32
/// precision. Batches of one sample are skipped.
pub fn train_epoch(
    params: &mut Parameters,
    adam: &mut AdamState,
    data: &Dataset,
    cfg: &TrainConfig,
    epoch: usize,
) -> Result<Summary> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(DROPOUT_STREAM + epoch as u64);
    let mut tape = Tape::new();
    let (mut loss_sum, mut correct, mut seen) = (0.0, 0usize, 0usize);
    for (bi, idx) in batch_order(data.len(), cfg.batch, cfg.seed, epoch)
        .iter()
        .enumerate()
    {
        if idx.len() < 2 {
            continue;
        }
        let batch = data.batch(idx);
        tape.reset();
        let mut f = Forward::new(&mut tape, params, Mode::Train, &mut rng);
        let img = f.tape.constant(batch.images);
        let feat = f.tape.constant(batch.features);
        let logits = model_forward(&mut f, img, feat)?;
        let loss = f.tape.softmax_cross_entropy(logits, &batch.labels)?;
        let state = f.finish();
        let value = tape.value(loss).data()[0];
        if !value.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, batch: bi });
        }
        let preds = argmax_rows(tape.value(logits))?;
        correct += preds
            .iter()
            .zip(&batch.labels)
            .filter(|(p, l)| p == l)
            .count();
        loss_sum += value * idx.len() as f64;
        seen += idx.len();
        tape.backward(loss)?;

        let mut grads: Vec<Option<&[f64]>> = vec![None; params.len()];
        for &(i, var) in &state.bound {
            grads[i] = tape.grad(var);
        }
        adam_step(params, &grads, adam, cfg)?;
        params.apply_bn_updates(&state.bn_updates)?;
        params.round_to_f32();
    }
    if seen == 0 {
        return Err(Error::Config(
            "no training batch has at least two samples".into(),
        ));
    }
    Ok(Summary {
        loss: loss_sum / seen as f64,
        acc: correct as f64 / seen as f64,
    })
}

/// Eval-mode mean cross-entropy and accuracy.
pub fn evaluate_loss(params: &Parameters, data: &Dataset, batch: usize) -> Result<Summary> {
    let mut rng = rand::rngs::mock::StepRng::new(0, 0);
    let (mut loss_sum, mut correct) = (0.0, 0usize);
    for b in data.sequential_batches(batch) {
        let mut tape = Tape::new();
        let mut f = Forward::new(&mut tape, params, Mode::Eval, &mut rng);
        let img = f.tape.constant(b.images);
        let feat = f.tape.constant(b.features);
        let logits = model_forward(&mut f, img, feat)?;
        let loss = f.tape.softmax_cross_entropy(logits, &b.labels)?;
        loss_sum += tape.value(loss).data()[0] * b.labels.len() as f64;
        let preds = argmax_rows(tape.value(logits))?;
        correct += preds.iter().zip(&b.labels).filter(|(p, l)| p == l).count();
    }
    let n = data.len().max(1) as f64;
    Ok(Summary {
        loss: loss_sum / n,
        acc: correct as f64 / n,
    })
}

#[derive(Clone, Debug)]
pub struct FitOutput {
    pub final_checkpoint: Checkpoint,
    /// Highest validation accuracy, earliest epoch on ties.
    pub best_checkpoint: Checkpoint,
    pub logs: Vec<EpochLog>,
}

/// Trains on a seeded stratified split of `data` (raw features).
///
/// `model.d_in` is set to the number of feature columns that survive
/// normalization. With `resume`, weights, normalization and split come from
/// the checkpoint and training continues at its epoch + 1; optimizer moments
/// restart from zero.
pub fn fit(
    model: &ModelConfig,
    cfg: &TrainConfig,
    data: &Dataset,
    resume: Option<Checkpoint>,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<FitOutput> {
    cfg.validate()?;
    let (seed, val_fraction) = match &resume {
        Some(c) => (c.seed, c.val_fraction),
        None => (cfg.seed, cfg.val_fraction),
    };
    let cfg = TrainConfig {
        seed,
        val_fraction,
        ..cfg.clone()
    };
    let (train_idx, val_idx) = stratified_split(data.labels(), val_fraction, seed)?;
    let train_raw = data.subset(&train_idx);
    let val_raw = data.subset(&val_idx);

    let (mut params, norm, start) = match resume {
        Some(c) => (c.params, c.norm, c.epoch + 1),
        None => {
            let norm = fit_norm_stats(&dataset_table(&train_raw)?, train_raw.ids())?;
            let model = ModelConfig {
                d_in: norm.width(),
                ..model.clone()
            };
            let mut p = Parameters::init(&model, seed)?;
            p.round_to_f32();
            (p, norm, 1)
        }
    };
    if params.config().num_classes <= data.labels().iter().copied().max().unwrap_or(0) {
        return Err(Error::Config(format!(
            "labels reach {} but the model has {} classes",
            data.labels().iter().max().unwrap_or(&0),
            params.config().num_classes
        )));
    }
    let train = normalize_dataset(&train_raw, &norm)?;
    let val = normalize_dataset(&val_raw, &norm)?;

    let mut adam = AdamState::new(&params);
    let snapshot = |params: &Parameters, epoch| Checkpoint {
        params: params.clone(),
        norm: norm.clone(),
        seed,
        val_fraction,
        epoch,
    };
    let mut best: Option<(f64, Checkpoint)> = None;
    let mut logs = Vec::new();
    for epoch in start..=cfg.epochs {
        let tr = train_epoch(&mut params, &mut adam, &train, &cfg, epoch)?;
        let va = evaluate_loss(&params, &val, cfg.batch)?;
        let log = EpochLog {
            epoch,
            train_loss: tr.loss,
            train_acc: tr.acc,
            val_loss: va.loss,
            val_acc: va.acc,
        };
        on_epoch(&log);
        if best.as_ref().is_none_or(|(acc, _)| va.acc > *acc) {
            best = Some((va.acc, snapshot(&params, epoch)));
        }
        logs.push(log);
    }
    let final_checkpoint = snapshot(&params, cfg.epochs.max(start - 1));
    let best_checkpoint = best.map_or_else(|| final_checkpoint.clone(), |(_, c)| c);
    Ok(FitOutput {
        final_checkpoint,
        best_checkpoint,
        logs,
    })
}
