//! The full extraction model: two-stream encoding, AMR interaction over the
//! local and global graphs, fused span classification.

use std::path::{Path, PathBuf};

use candle_core::{Tensor, Var};
use docarg_core::amr::{build_global_graph, build_local_graph};
use docarg_core::corpus::{AnnotatedDocument, Document, EventInstance, EventTypeId, Schema, Span};
use docarg_core::metrics::ScoredArgument;
use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::encoder::{load_pretrained, Encoder, TransformerConfig};
use crate::head::{self, BoundaryOutput, CandidateLabels, DecodeOptions, HeadWeights};
use crate::interaction::{category_inventory, run_pass, GraphOperators, InteractionWeights, NodeStates, SelfLoop};
use crate::ops::{self, Ctx};
use crate::params::ParamStore;
use crate::tokenizer::{WordTokenizer, WordVocab};
use crate::twostream::{encode, select_window, EncodeProbe, EncoderInput, TwoStreamState};
use crate::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// One event made ready for the network: windowed document, candidates,
/// labels and graph operators.
#[derive(Debug, Clone)]
pub struct PreparedExample {
    pub doc_id: String,
    pub event_index: usize,
    /// Encoded word range of the original document.
    pub window: Span,
    /// The window, re-indexed from zero.
    pub document: Document,
    /// The event in window coordinates, restricted to arguments inside it.
    pub event: EventInstance,
    pub event_type: EventTypeId,
    pub trigger_sentence: usize,
    pub input: EncoderInput,
    pub candidates: Vec<Span>,
    pub labels: CandidateLabels,
    pub boundary_starts: Vec<f64>,
    pub boundary_ends: Vec<f64>,
    pub local_ops: GraphOperators,
    pub global_ops: GraphOperators,
    /// Gold arguments dropped because they fall outside the window.
    pub clipped_arguments: usize,
}

/// Every intermediate of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub state: TwoStreamState,
    pub h_global: Tensor,
    pub h_local: Tensor,
    pub global_nodes: Option<NodeStates>,
    pub local_nodes: Option<NodeStates>,
    pub fused: Tensor,
    pub gate: Tensor,
    pub trigger_rep: Tensor,
    /// `None` when the event has no candidates.
    pub span_reps: Option<Tensor>,
    pub logits: Option<Tensor>,
    pub boundary: BoundaryOutput,
    pub classification_loss: Tensor,
    pub total_loss: Tensor,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    config: ModelConfig,
    schema: Schema,
    geometry: TransformerConfig,
}

pub struct ArgumentModel {
    pub config: ModelConfig,
    pub schema: Schema,
    pub tokenizer: WordTokenizer,
    params: ParamStore,
    encoder: Encoder,
    local: InteractionWeights,
    global: Option<InteractionWeights>,
    head: HeadWeights,
}

/// Directory of a pretrained checkpoint: a literal path, or a name under
/// `cache_dir`.
pub fn resolve_checkpoint(name: &str, cache_dir: Option<&Path>) -> Result<PathBuf> {
    let direct = PathBuf::from(name);
    let candidates = std::iter::once(direct).chain(cache_dir.map(|c| c.join(name)));
    for dir in candidates {
        if dir.join("config.json").is_file() {
            return Ok(dir);
        }
    }
    Err(Error::Checkpoint {
        path: PathBuf::from(name),
        reason: format!(
            "no config.json found; place config.json, tokenizer.json and model.safetensors in that \
             directory or under the cache directory ({})",
            cache_dir.map(|c| c.display().to_string()).unwrap_or_else(|| "unset".into())
        ),
    })
}

impl ArgumentModel {
    pub fn new(
        config: ModelConfig,
        schema: Schema,
        tokenizer: WordTokenizer,
        geometry: TransformerConfig,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let mut params = ParamStore::new(seed, config.precision.dtype());
        let encoder = Encoder::new(&mut params, geometry)?;
        let d = encoder.config.hidden_dim;
        let local = InteractionWeights::new(&mut params, "interaction.local", d, &config.interaction)?;
        let global = if config.interaction.share_local_global_weights {
            None
        } else {
            Some(InteractionWeights::new(&mut params, "interaction.global", d, &config.interaction)?)
        };
        let head = HeadWeights::new(
            &mut params,
            d,
            schema.event_types.len(),
            schema.num_classes(),
            &config.head,
        )?;
        Ok(ArgumentModel {
            config,
            schema,
            tokenizer,
            params,
            encoder,
            local,
            global,
            head,
        })
    }

    /// Build a model for training. A `"random"` encoder gets a word
    /// vocabulary from `train`; anything else names a pretrained checkpoint.
    pub fn initialise(
        mut config: ModelConfig,
        schema: Schema,
        train: &[AnnotatedDocument],
        cache_dir: Option<&Path>,
        seed: u64,
    ) -> Result<Self> {
        let enc = &config.encoder;
        if enc.checkpoint == "random" {
            let vocab = WordVocab::build(train.iter().flat_map(|d| d.document.words.iter().map(String::as_str)));
            let geometry = TransformerConfig {
                vocab_size: vocab.len(),
                hidden_dim: enc.hidden_dim,
                layers: enc.layers,
                heads: enc.heads,
                intermediate_dim: enc.intermediate_dim,
                max_positions: enc.max_positions,
                type_vocab_size: 1,
                layer_norm_eps: 1e-12,
                position_offset: 0,
            };
            return Self::new(config, schema, WordTokenizer::Vocab(vocab), geometry, seed);
        }
        let dir = resolve_checkpoint(&enc.checkpoint, cache_dir)?;
        let geometry = TransformerConfig::from_hf_json(&dir.join("config.json"))?;
        let tokenizer = WordTokenizer::from_file(&dir.join("tokenizer.json"))?;
        config.encoder.hidden_dim = geometry.hidden_dim;
        config.encoder.layers = geometry.layers;
        config.encoder.heads = geometry.heads;
        config.encoder.intermediate_dim = geometry.intermediate_dim;
        config.encoder.max_positions = config.encoder.max_positions.min(geometry.usable_positions());
        let model = Self::new(config, schema, tokenizer, geometry, seed)?;
        load_pretrained(&model.params, &dir.join("model.safetensors"))?;
        Ok(model)
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn vars(&self) -> Vec<Var> {
        self.params.all_vars()
    }

    pub fn geometry(&self) -> &TransformerConfig {
        &self.encoder.config
    }

    pub fn hidden_dim(&self) -> usize {
        self.encoder.config.hidden_dim
    }

    pub fn head_weights(&self) -> &HeadWeights {
        &self.head
    }

    pub fn local_interaction(&self) -> &InteractionWeights {
        &self.local
    }

    pub fn global_interaction(&self) -> &InteractionWeights {
        self.global_weights()
    }

    fn global_weights(&self) -> &InteractionWeights {
        self.global.as_ref().unwrap_or(&self.local)
    }

    /// Subword positions available to words, markers excluded.
    pub fn word_budget(&self) -> usize {
        self.config
            .encoder
            .max_positions
            .min(self.encoder.config.usable_positions())
            .saturating_sub(2)
    }

    pub fn prepare(&self, doc: &AnnotatedDocument, event_index: usize) -> Result<PreparedExample> {
        let full = &doc.document;
        let event = doc.events.get(event_index).ok_or_else(|| {
            Error::Data(docarg_core::Error::IndexOutOfRange {
                index: event_index,
                len: doc.events.len(),
            })
        })?;
        let event_type = self
            .schema
            .event_type_id(&event.event_type)
            .ok_or_else(|| Error::UnknownEventType(event.event_type.clone()))?;
        let subwords = self.tokenizer.tokenize(&full.words)?;
        let counts: Vec<usize> = subwords.iter().map(Vec::len).collect();
        let window = select_window(full, &counts, event.trigger, self.word_budget(), self.config.encoder.window_policy)?;
        let document = if window == Span::new(0, full.len().saturating_sub(1)) {
            full.clone()
        } else {
            full.slice(window)?
        };
        let shift = |s: Span| Span::new(s.start - window.start, s.end - window.start);
        let kept: Vec<_> = event
            .arguments
            .iter()
            .filter(|a| window.covers(&a.span))
            .map(|a| docarg_core::corpus::Argument {
                role: a.role.clone(),
                span: shift(a.span),
            })
            .collect();
        let clipped_arguments = event.arguments.len() - kept.len();
        let event = EventInstance {
            event_type: event.event_type.clone(),
            trigger: shift(event.trigger),
            arguments: kept,
        };
        let trigger_sentence = document.sentence_index(event.trigger.start)?;
        let sentence_ids = document.sentence_ids();
        let input = EncoderInput::new(
            &subwords[window.start..=window.end],
            &sentence_ids,
            self.tokenizer.cls(),
            self.tokenizer.sep(),
        );
        let mut candidates: Vec<Span> = document
            .enumerate_candidates(self.config.head.max_span_len)
            .into_iter()
            .map(|c| c.span)
            .collect();
        if self.config.head.exclude_trigger_overlap {
            candidates.retain(|c| !c.overlaps(&event.trigger));
        }
        let labels = head::label_candidates(&candidates, &event, &self.schema)?;
        let gold: Vec<Span> = event.arguments.iter().map(|a| a.span).collect();
        let (boundary_starts, boundary_ends) = head::boundary_targets(document.len(), &gold);
        let dtype = self.params.dtype();
        let dev = self.params.device();
        let self_loop = if self.config.interaction.single_self_loop {
            SelfLoop::Single
        } else {
            SelfLoop::PerCategory
        };
        let local_ops = GraphOperators::new(
            &document.doc_id,
            &build_local_graph(&document)?,
            document.len(),
            &category_inventory(false, self.config.interaction.root_link_category),
            self_loop,
            dtype,
            dev,
        )?;
        let global_ops = GraphOperators::new(
            &document.doc_id,
            &build_global_graph(&document)?,
            document.len(),
            &category_inventory(true, self.config.interaction.root_link_category),
            self_loop,
            dtype,
            dev,
        )?;
        Ok(PreparedExample {
            doc_id: document.doc_id.clone(),
            event_index,
            window,
            document,
            event,
            event_type,
            trigger_sentence,
            input,
            candidates,
            labels,
            boundary_starts,
            boundary_ends,
            local_ops,
            global_ops,
            clipped_arguments,
        })
    }

    /// Prepare every event of every document, in corpus order.
    pub fn prepare_all(&self, docs: &[AnnotatedDocument]) -> Result<Vec<PreparedExample>> {
        let mut out = Vec::new();
        for doc in docs {
            for i in 0..doc.events.len() {
                out.push(self.prepare(doc, i)?);
            }
        }
        Ok(out)
    }

    pub fn forward(&self, ex: &PreparedExample, ctx: &Ctx) -> Result<ForwardOutput> {
        self.forward_with_probe(ex, ctx, None)
    }

    pub fn forward_with_probe(&self, ex: &PreparedExample, ctx: &Ctx, probe: Option<&mut EncodeProbe>) -> Result<ForwardOutput> {
        let ab = &self.config.ablation;
        let state = encode(
            &self.encoder,
            &ex.input,
            ex.trigger_sentence,
            self.config.encoder.subword_pooling,
            ab,
            ctx,
            probe,
        )?;
        let (h_global, global_nodes, h_local, local_nodes) = if ab.use_amr {
            let (hg, gn) = run_pass(&state.z_global, &ex.global_ops, self.global_weights())?;
            let (hl, ln) = run_pass(&state.z_local, &ex.local_ops, &self.local)?;
            (hg, gn, hl, ln)
        } else {
            (state.z_global.clone(), None, state.z_local.clone(), None)
        };
        let (fused, gate) = head::gate_fuse(&h_global, &h_local, &self.head)?;
        let trigger_rep = head::span_mean(&fused, ex.event.trigger)?;
        let boundary = head::boundary_loss(&fused, &ex.boundary_starts, &ex.boundary_ends, &self.head)?;
        let (span_reps, logits, classification_loss) = if ex.candidates.is_empty() {
            (None, None, boundary.loss.zeros_like()?)
        } else {
            let reps = head::span_representation(&fused, &ex.candidates, &self.head)?;
            let lengths: Vec<usize> = ex.candidates.iter().map(Span::len).collect();
            let logits = head::classify_spans(&reps, &trigger_rep, ex.event_type, &lengths, &self.head)?;
            let loss = head::classification_loss(&logits, &ex.labels.labels)?;
            (Some(reps), Some(logits), loss)
        };
        let total_loss = head::total_loss(&classification_loss, &boundary.loss, self.config.effective_lambda())?;
        Ok(ForwardOutput {
            state,
            h_global,
            h_local,
            global_nodes,
            local_nodes,
            fused,
            gate,
            trigger_rep,
            span_reps,
            logits,
            boundary,
            classification_loss,
            total_loss,
        })
    }

    pub fn decode_options(&self) -> DecodeOptions {
        DecodeOptions {
            legal_role_mask: self.config.head.legal_role_mask,
            top1_per_role: self.config.head.top1_per_role,
        }
    }

    /// Predictions in original document coordinates.
    pub fn decode(&self, ex: &PreparedExample, out: &ForwardOutput) -> Result<Vec<ScoredArgument>> {
        let Some(logits) = &out.logits else {
            return Ok(Vec::new());
        };
        let rows = ops::to_f64_rows(logits)?;
        let decoded = head::decode_event(&rows, &ex.candidates, &self.schema, ex.event_type, self.decode_options());
        Ok(decoded
            .into_iter()
            .map(|a| ScoredArgument {
                role: self.schema.role_name(a.role).to_string(),
                span: Span::new(a.span.start + ex.window.start, a.span.end + ex.window.start),
                score: a.score,
            })
            .collect())
    }

    pub fn predict(&self, ex: &PreparedExample) -> Result<Vec<ScoredArgument>> {
        let out = self.forward(ex, &Ctx::eval())?;
        self.decode(ex, &out)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::Checkpoint {
            path: dir.to_path_buf(),
            reason: e.to_string(),
        };
        std::fs::create_dir_all(dir).map_err(io)?;
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            config: self.config.clone(),
            schema: self.schema.clone(),
            geometry: self.encoder.config.clone(),
        };
        let text = serde_json::to_string_pretty(&file).expect("model metadata serialises");
        std::fs::write(dir.join("model.json"), text).map_err(io)?;
        self.tokenizer.save(dir)?;
        self.params.save(&dir.join("weights.safetensors"))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("model.json");
        let bad = |reason: String| Error::Checkpoint {
            path: path.clone(),
            reason,
        };
        let text = std::fs::read_to_string(&path).map_err(|e| bad(e.to_string()))?;
        let file: ModelFile = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(bad(format!("unsupported format version {}", file.format_version)));
        }
        let tokenizer = WordTokenizer::load(dir)?;
        let model = Self::new(file.config, file.schema, tokenizer, file.geometry, 0)?;
        model.params.load(&dir.join("weights.safetensors"))?;
        Ok(model)
    }
}
