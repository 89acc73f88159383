//! Mini-batch training with dev-based model selection, and the checkpoint
//! layout it writes.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use candle_core::Tensor;
use candle_nn::{AdamW, Optimizer, ParamsAdamW};
use docarg_core::corpus::{long_argument_count, AnnotatedDocument, Schema};
use docarg_model::ops::Ctx;
use docarg_model::{ArgumentModel, PreparedExample};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{cache_dir, RunConfig, SelectionMetric};
use crate::evaluate::{predict_examples, selection_value};
use crate::write_json;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-event losses over the epoch.
    pub total_loss: f64,
    pub classification_loss: f64,
    pub boundary_loss: f64,
    pub dev_metric: f64,
    pub seconds: f64,
}

/// Everything besides the weights that a checkpoint records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub format_version: u32,
    pub config: RunConfig,
    pub selection_metric: SelectionMetric,
    pub best_epoch: usize,
    pub best_dev_metric: f64,
    pub history: Vec<EpochRecord>,
}

pub fn model_dir(checkpoint: &Path) -> PathBuf {
    checkpoint.join("model")
}

pub fn save_meta(checkpoint: &Path, meta: &CheckpointMeta) -> Result<()> {
    write_json(&checkpoint.join("meta.json"), meta)
}

pub fn load_meta(checkpoint: &Path) -> Result<CheckpointMeta> {
    let path = checkpoint.join("meta.json");
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let meta: CheckpointMeta = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if meta.format_version != CHECKPOINT_FORMAT_VERSION {
        bail!("{}: unsupported checkpoint format {}", path.display(), meta.format_version);
    }
    Ok(meta)
}

/// Load the model and metadata written by [`train`].
pub fn load_checkpoint(checkpoint: &Path) -> Result<(ArgumentModel, CheckpointMeta)> {
    let meta = load_meta(checkpoint)?;
    let model = ArgumentModel::load(&model_dir(checkpoint))
        .with_context(|| format!("loading model from {}", checkpoint.display()))?;
    Ok((model, meta))
}

pub struct TrainOutcome {
    pub model: ArgumentModel,
    pub meta: CheckpointMeta,
    pub checkpoint: PathBuf,
}

fn scalar(t: &Tensor) -> Result<f64> {
    Ok(t.to_dtype(candle_core::DType::F64)?.to_scalar::<f64>()?)
}

fn prepare(model: &ArgumentModel, docs: &[AnnotatedDocument], what: &str) -> Result<Vec<PreparedExample>> {
    let examples = model
        .prepare_all(docs)
        .with_context(|| format!("preparing {what} examples"))?;
    let clipped: usize = examples.iter().map(|e| e.clipped_arguments).sum();
    if clipped > 0 {
        log::warn!("{what}: {clipped} gold arguments fall outside the encoder window and cannot be recalled");
    }
    let long = long_argument_count(docs, model.config.head.max_span_len);
    if long > 0 {
        log::warn!(
            "{what}: {long} gold arguments are longer than head.max_span_len = {} and cannot be recalled",
            model.config.head.max_span_len
        );
    }
    Ok(examples)
}

/// Train on `train_docs`, select the best epoch on `dev_docs`, and write the
/// checkpoint under `<outdir>/checkpoints/best`.
pub fn train(cfg: &RunConfig, train_docs: &[AnnotatedDocument], dev_docs: &[AnnotatedDocument]) -> Result<TrainOutcome> {
    cfg.validate()?;
    let all: Vec<AnnotatedDocument> = train_docs.iter().chain(dev_docs).cloned().collect();
    let schema = Schema::from_corpus(&all);
    let cache = cache_dir();
    let model = ArgumentModel::initialise(cfg.model(), schema, train_docs, cache.as_deref(), cfg.seed)?;
    log::info!("model has {} parameters", model.params().num_parameters());
    let train_ex = prepare(&model, train_docs, "train")?;
    let dev_ex = prepare(&model, dev_docs, "dev")?;
    if train_ex.is_empty() {
        bail!("the training corpus has no events");
    }

    let metric = cfg.selection();
    let checkpoint = cfg.checkpoint_dir().join("best");
    let log_path = cfg.reports_dir().join("train_log.json");
    let mut opt = AdamW::new(
        model.vars(),
        ParamsAdamW {
            lr: cfg.optimizer.learning_rate,
            weight_decay: 0.0,
            ..ParamsAdamW::default()
        },
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut meta = CheckpointMeta {
        format_version: CHECKPOINT_FORMAT_VERSION,
        config: cfg.clone(),
        selection_metric: metric,
        best_epoch: 0,
        best_dev_metric: 0.0,
        history: Vec::new(),
    };
    let mut order: Vec<usize> = (0..train_ex.len()).collect();

    for epoch in 1..=cfg.optimizer.epochs {
        let started = Instant::now();
        order.shuffle(&mut rng);
        let (mut total, mut cls, mut bnd) = (0.0, 0.0, 0.0);
        for batch in order.chunks(cfg.optimizer.batch_size) {
            let mut losses = Vec::with_capacity(batch.len());
            for &i in batch {
                let ctx = Ctx::train(cfg.encoder.dropout, rng.gen());
                let out = model.forward(&train_ex[i], &ctx)?;
                cls += scalar(&out.classification_loss)?;
                bnd += scalar(&out.boundary.loss)?;
                losses.push(out.total_loss);
            }
            let loss = Tensor::stack(&losses, 0)?.sum_all()?;
            let value = scalar(&loss)?;
            if !value.is_finite() {
                write_json(&log_path, &meta)?;
                bail!(
                    "loss became non-finite in epoch {epoch}; the last good checkpoint is {} (epoch {}). \
                     Lower optimizer.learning_rate or check the inputs",
                    checkpoint.display(),
                    meta.best_epoch
                );
            }
            total += value;
            opt.backward_step(&loss)?;
        }
        let preds = predict_examples(&model, &dev_ex)?;
        let dev_metric = selection_value(metric, dev_docs, &preds, cfg.head_rule)?;
        let n = train_ex.len() as f64;
        let record = EpochRecord {
            epoch,
            total_loss: total / n,
            classification_loss: cls / n,
            boundary_loss: bnd / n,
            dev_metric,
            seconds: started.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {epoch}: loss {:.4} (L_c {:.4}, L_b {:.4}), dev {:?} {:.4}",
            record.total_loss,
            record.classification_loss,
            record.boundary_loss,
            metric,
            dev_metric
        );
        meta.history.push(record);
        if meta.best_epoch == 0 || dev_metric > meta.best_dev_metric {
            meta.best_dev_metric = dev_metric;
            meta.best_epoch = epoch;
            model.save(&model_dir(&checkpoint))?;
        }
        save_meta(&checkpoint, &meta)?;
        write_json(&log_path, &meta)?;
        if cfg.optimizer.target_metric.is_some_and(|t| dev_metric >= t) {
            log::info!("dev metric reached the target after {epoch} epochs");
            break;
        }
    }
    if meta.best_epoch == 0 {
        bail!("optimizer.epochs is 0; nothing was trained");
    }
    let (model, meta) = load_checkpoint(&checkpoint)?;
    Ok(TrainOutcome { model, meta, checkpoint })
}
