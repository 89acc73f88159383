//! Run configuration: a TOML file, overridden key by key from the command
//! line with `--set section.key=value`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use docarg_core::corpus::CorpusFormat;
use docarg_core::metrics::HeadRule;
use docarg_model::config::{Ablation, EncoderConfig, HeadConfig, InteractionConfig, ModelConfig, Precision};
use serde::{Deserialize, Serialize};

/// Environment variable naming the directory searched for pretrained
/// encoder checkpoints.
pub const CACHE_ENV: &str = "DOCARG_CACHE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub format: CorpusFormat,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    /// WikiEvents coreference files, one per split.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_coref: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev_coref: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_coref: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            format: CorpusFormat::Normalized,
            train: None,
            dev: None,
            test: None,
            train_coref: None,
            dev_coref: None,
            test_coref: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub name: String,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Stop as soon as the dev selection metric reaches this value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_metric: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            name: "adam".into(),
            learning_rate: 3e-5,
            batch_size: 8,
            epochs: 50,
            target_metric: None,
        }
    }
}

/// Dev metric used to pick the best epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    SpanF1,
    HeadF1,
}

impl SelectionMetric {
    pub fn for_format(format: CorpusFormat) -> Self {
        match format {
            CorpusFormat::Wikievents => SelectionMetric::HeadF1,
            CorpusFormat::Rams | CorpusFormat::Normalized => SelectionMetric::SpanF1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub outdir: PathBuf,
    /// Defaults to Span F1 for RAMS and normalized corpora, Head F1 for
    /// WikiEvents.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selection_metric: Option<SelectionMetric>,
    pub head_rule: HeadRule,
    pub precision: Precision,
    pub data: DataConfig,
    pub optimizer: OptimizerConfig,
    pub encoder: EncoderConfig,
    pub interaction: InteractionConfig,
    pub head: HeadConfig,
    pub ablation: Ablation,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            outdir: PathBuf::from("runs/default"),
            selection_metric: None,
            head_rule: HeadRule::default(),
            precision: Precision::F32,
            data: DataConfig::default(),
            optimizer: OptimizerConfig::default(),
            encoder: EncoderConfig::default(),
            interaction: InteractionConfig::default(),
            head: HeadConfig::default(),
            ablation: Ablation::default(),
        }
    }
}

impl RunConfig {
    pub fn model(&self) -> ModelConfig {
        ModelConfig {
            encoder: self.encoder.clone(),
            interaction: self.interaction.clone(),
            head: self.head.clone(),
            ablation: self.ablation,
            precision: self.precision,
        }
    }

    pub fn selection(&self) -> SelectionMetric {
        self.selection_metric
            .unwrap_or_else(|| SelectionMetric::for_format(self.data.format))
    }

    pub fn validate(&self) -> Result<()> {
        self.model().validate()?;
        let o = &self.optimizer;
        if !o.name.eq_ignore_ascii_case("adam") {
            bail!("optimizer.name `{}` is not supported; use \"adam\"", o.name);
        }
        if !(o.learning_rate > 0.0 && o.learning_rate.is_finite()) {
            bail!("optimizer.learning_rate must be positive");
        }
        if o.batch_size == 0 {
            bail!("optimizer.batch_size must be at least 1");
        }
        Ok(())
    }

    pub fn checkpoint_dir(&self) -> PathBuf {
        self.outdir.join("checkpoints")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.outdir.join("reports")
    }

    pub fn predictions_dir(&self) -> PathBuf {
        self.outdir.join("predictions")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }
}

/// Pretrained checkpoint cache from the environment.
pub fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).map(PathBuf::from)
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Apply one `dotted.key=value` override. Values parse as TOML, falling
/// back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .with_context(|| format!("override `{assignment}` must read key=value"))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("override key `{key}` is malformed");
    }
    let (last, sections) = parts.split_last().expect("at least one part");
    let mut cur = table;
    for s in sections {
        let entry = cur
            .entry(s.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .with_context(|| format!("override `{key}`: `{s}` is not a section"))?;
    }
    cur.insert(last.to_string(), parse_value(raw.trim()));
    Ok(())
}

/// Read `path` (if any), apply overrides, and check the result.
pub fn load_run_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str::<toml::Table>(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .context("invalid run configuration")?;
    cfg.validate()?;
    Ok(cfg)
}
