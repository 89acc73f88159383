//! Command-line surface. Every command writes a JSON report under
//! `<outdir>/reports` and fails with a non-zero exit on invalid input.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use docarg_core::amr::{merge_parses, read_jamr, read_parsed_jsonl};
use docarg_core::corpus::{write_normalized, AnnotatedDocument, CorpusFormat, CorpusStats};
use docarg_core::metrics::{
    align, error_taxonomy, read_predictions, write_predictions, EventPredictions, HeadRule, PredictionsHeader,
};
use docarg_core::synth::{generate, SynthConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::load_run_config;
use crate::evaluate::{predict_examples, score};
use crate::train::{load_checkpoint, train};
use crate::{data, write_json, write_text};

#[derive(Debug, Parser)]
#[command(name = "docarg", version, about = "Document-level event argument extraction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Merge external AMR parses into a corpus.
    PrepareAmr(PrepareAmrArgs),
    /// Train a model, keeping the best epoch on dev.
    Train(TrainArgs),
    /// Score a checkpoint or a predictions file against a gold corpus.
    Evaluate(EvaluateArgs),
    /// Write predictions for a corpus.
    Predict(PredictArgs),
    /// Break false positives down into the five error categories.
    AnalyzeErrors(AnalyzeArgs),
    /// Write a synthetic corpus with dependency parses and AMR graphs.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// Gold corpus file.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "normalized")]
    pub format: CorpusFormat,
    /// WikiEvents coreference file.
    #[arg(long)]
    pub coref: Option<PathBuf>,
}

impl CorpusArgs {
    fn load(&self) -> Result<Vec<AnnotatedDocument>> {
        data::load(&self.corpus, self.format, self.coref.as_deref())
            .with_context(|| format!("loading {}", self.corpus.display()))
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ParseFormat {
    Jsonl,
    Jamr,
}

#[derive(Debug, Args)]
pub struct PrepareAmrArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Parser output: JSONL graphs or JAMR-style alignment comments.
    #[arg(long)]
    pub parses: PathBuf,
    /// Defaults to `jsonl` for `.jsonl`/`.json` files and `jamr` otherwise.
    #[arg(long)]
    pub parse_format: Option<ParseFormat>,
    /// Normalized corpus to write.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value = "out")]
    pub outdir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set head.lambda=0.05`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Checkpoint directory written by `train`.
    #[arg(long, conflicts_with = "predictions", required_unless_present = "predictions")]
    pub checkpoint: Option<PathBuf>,
    /// Predictions JSONL to score instead of running a model.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dependency")]
    pub head_rule: HeadRuleArg,
    #[arg(long, default_value = "out")]
    pub outdir: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum HeadRuleArg {
    Dependency,
    LastWordFallback,
}

impl From<HeadRuleArg> for HeadRule {
    fn from(a: HeadRuleArg) -> Self {
        match a {
            HeadRuleArg::Dependency => HeadRule::Dependency,
            HeadRuleArg::LastWordFallback => HeadRule::LastWordFallback,
        }
    }
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Defaults to `<outdir>/predictions/<corpus stem>.jsonl`.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub outdir: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long)]
    pub predictions: PathBuf,
    /// Analyse a random sample of this many events.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub outdir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub documents: usize,
    #[arg(long, default_value_t = 1)]
    pub events_per_doc: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub outdir: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::PrepareAmr(a) => prepare_amr(&a),
        Command::Train(a) => train_command(&a),
        Command::Evaluate(a) => evaluate_command(&a),
        Command::Predict(a) => predict_command(&a),
        Command::AnalyzeErrors(a) => analyze_command(&a),
        Command::Synth(a) => synth_command(&a),
    }
}

fn report_path(outdir: &Path, name: &str) -> PathBuf {
    outdir.join("reports").join(format!("{name}.json"))
}

pub fn prepare_amr(a: &PrepareAmrArgs) -> Result<()> {
    let mut docs = a.corpus.load()?;
    let ext = a.parses.extension().and_then(|e| e.to_str()).unwrap_or("");
    let format = a.parse_format.unwrap_or(if matches!(ext, "jsonl" | "json") {
        ParseFormat::Jsonl
    } else {
        ParseFormat::Jamr
    });
    let parses = match format {
        ParseFormat::Jsonl => read_parsed_jsonl(&a.parses)?,
        ParseFormat::Jamr => read_jamr(&a.parses)?,
    };
    let report = merge_parses(&mut docs, parses)?;
    if !report.missing.is_empty() {
        log::warn!("{} sentences have no parse and get an empty graph", report.missing.len());
    }
    if !report.orphaned.is_empty() {
        log::warn!("{} parses match no corpus sentence", report.orphaned.len());
    }
    write_normalized(&a.output, &docs)?;
    write_json(&report_path(&a.outdir, "prepare_amr"), &report)?;
    println!(
        "attached {} sentence graphs ({} missing, {} orphaned) -> {}",
        report.attached,
        report.missing.len(),
        report.orphaned.len(),
        a.output.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    checkpoint: &'a Path,
    best_epoch: usize,
    best_dev_metric: f64,
    selection_metric: crate::config::SelectionMetric,
    epochs_run: usize,
}

pub fn train_command(a: &TrainArgs) -> Result<()> {
    let cfg = load_run_config(a.config.as_deref(), &a.overrides)?;
    let d = &cfg.data;
    let train_docs = data::load_required(d.train.as_deref(), "train", d.format, d.train_coref.as_deref())?;
    let dev_docs = data::load_required(d.dev.as_deref(), "dev", d.format, d.dev_coref.as_deref())?;
    write_text(&cfg.outdir.join("config.toml"), &cfg.to_toml())?;
    let outcome = train(&cfg, &train_docs, &dev_docs)?;
    let summary = TrainSummary {
        checkpoint: &outcome.checkpoint,
        best_epoch: outcome.meta.best_epoch,
        best_dev_metric: outcome.meta.best_dev_metric,
        selection_metric: outcome.meta.selection_metric,
        epochs_run: outcome.meta.history.len(),
    };
    write_json(&report_path(&cfg.outdir, "train"), &summary)?;
    println!(
        "best epoch {} with dev {:?} = {:.4}; checkpoint {}",
        summary.best_epoch,
        summary.selection_metric,
        summary.best_dev_metric,
        outcome.checkpoint.display()
    );
    if let Some(test) = d.test.as_deref() {
        let test_docs = data::load(test, d.format, d.test_coref.as_deref())?;
        let examples = outcome.model.prepare_all(&test_docs)?;
        let preds = predict_examples(&outcome.model, &examples)?;
        std::fs::create_dir_all(cfg.predictions_dir())?;
        write_predictions(
            cfg.predictions_dir().join("test.jsonl"),
            &header(&test_docs, &preds, &outcome.checkpoint),
            &preds,
        )?;
        let report = score(&test_docs, &preds, cfg.head_rule)?;
        write_json(&report_path(&cfg.outdir, "test"), &report)?;
        println!("{}", report.table());
    }
    Ok(())
}

fn header(docs: &[AnnotatedDocument], preds: &[EventPredictions], checkpoint: &Path) -> PredictionsHeader {
    let mut extra = serde_json::Map::new();
    extra.insert("checkpoint".into(), checkpoint.display().to_string().into());
    PredictionsHeader {
        format_version: 1,
        documents: docs.len(),
        events: preds.len(),
        extra,
    }
}

/// Predictions from a trained checkpoint, ordered by (doc_id, event_index).
pub fn predict_corpus(checkpoint: &Path, docs: &[AnnotatedDocument]) -> Result<Vec<EventPredictions>> {
    let (model, _) = load_checkpoint(checkpoint)?;
    model.schema.check(docs).context("corpus does not match the checkpoint schema")?;
    let examples = model.prepare_all(docs)?;
    let mut preds = predict_examples(&model, &examples)?;
    preds.sort_by(|a, b| (&a.doc_id, a.event_index).cmp(&(&b.doc_id, b.event_index)));
    Ok(preds)
}

pub fn evaluate_command(a: &EvaluateArgs) -> Result<()> {
    let docs = a.corpus.load()?;
    let preds = match (&a.checkpoint, &a.predictions) {
        (Some(c), _) => predict_corpus(c, &docs)?,
        (None, Some(p)) => read_predictions(p)?.1,
        (None, None) => bail!("pass --checkpoint or --predictions"),
    };
    let report = score(&docs, &preds, a.head_rule.into())?;
    let table = report.table();
    write_json(&report_path(&a.outdir, "evaluation"), &report)?;
    write_text(&a.outdir.join("reports").join("evaluation.txt"), &table)?;
    println!("{table}");
    Ok(())
}

#[derive(Serialize)]
struct PredictSummary<'a> {
    output: &'a Path,
    documents: usize,
    events: usize,
    arguments: usize,
}

pub fn predict_command(a: &PredictArgs) -> Result<()> {
    let docs = a.corpus.load()?;
    let preds = predict_corpus(&a.checkpoint, &docs)?;
    let output = a.output.clone().unwrap_or_else(|| {
        let stem = a.corpus.corpus.file_stem().and_then(|s| s.to_str()).unwrap_or("predictions");
        a.outdir.join("predictions").join(format!("{stem}.jsonl"))
    });
    if let Some(parent) = output.parent() {
        std::fs::create_dir_all(parent)?;
    }
    write_predictions(&output, &header(&docs, &preds, &a.checkpoint), &preds)?;
    let summary = PredictSummary {
        output: &output,
        documents: docs.len(),
        events: preds.len(),
        arguments: preds.iter().map(|p| p.predictions.len()).sum(),
    };
    write_json(&report_path(&a.outdir, "predict"), &summary)?;
    println!("wrote {} events to {}", summary.events, output.display());
    Ok(())
}

pub fn analyze_command(a: &AnalyzeArgs) -> Result<()> {
    let docs = a.corpus.load()?;
    let (_, preds) = read_predictions(&a.predictions)?;
    let mut items = align(&docs, &preds);
    if let Some(n) = a.sample {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        items.shuffle(&mut rng);
        items.truncate(n);
    }
    let report = error_taxonomy(&items);
    write_json(&report_path(&a.outdir, "errors"), &report)?;
    println!("{} events analysed, {} errors", items.len(), report.total);
    for (c, n) in &report.counts {
        println!("  {:<12} {n}", format!("{c:?}"));
    }
    Ok(())
}

pub fn synth_command(a: &SynthArgs) -> Result<()> {
    let docs = generate(&SynthConfig {
        documents: a.documents,
        events_per_doc: a.events_per_doc,
        seed: a.seed,
        ..SynthConfig::default()
    });
    write_normalized(&a.output, &docs)?;
    let stats = CorpusStats::of(&docs);
    write_json(&report_path(&a.outdir, "synth"), &stats)?;
    println!("wrote {} documents to {}", stats.documents, a.output.display());
    Ok(())
}
