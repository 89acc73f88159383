//! AMR-guided interaction: span-mean node composition, relation-typed graph
//! convolution, layer aggregation and residual write-back to words.

use candle_core::{DType, Device, Tensor};
use docarg_core::amr::{InteractionGraph, RelationCategory};

use crate::config::InteractionConfig;
use crate::ops;
use crate::params::{Init, ParamStore};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelfLoop {
    /// `u` joins every category's neighbourhood, `c = |N_k(u) ∪ {u}|`.
    PerCategory,
    /// Neighbourhoods exclude `u`, `c = |N_k(u)|`, plus one self transform.
    Single,
}

/// Relation categories used by a pass, in weight order. Both inventories
/// are prefixes of [`RelationCategory::ALL`].
pub fn category_inventory(global: bool, root_link_category: bool) -> Vec<RelationCategory> {
    let n = if global && root_link_category {
        RelationCategory::COUNT
    } else {
        RelationCategory::COUNT - 1
    };
    RelationCategory::ALL[..n].to_vec()
}

/// Dense operators derived from one graph over one document window.
#[derive(Debug, Clone)]
pub struct GraphOperators {
    pub num_words: usize,
    pub num_nodes: usize,
    pub num_categories: usize,
    /// `V×D`: row `u` averages the words aligned to `u`; zero if unaligned.
    pub compose: Tensor,
    /// `(K·V)×V`: block `k` holds the `1/c_{u,k}` weights.
    pub adjacency: Tensor,
    /// `D×V`: row `i` averages the nodes covering word `i`.
    pub decompose: Tensor,
    pub self_loop: SelfLoop,
}

impl GraphOperators {
    pub fn new(
        doc_id: &str,
        graph: &InteractionGraph,
        num_words: usize,
        categories: &[RelationCategory],
        self_loop: SelfLoop,
        dtype: DType,
        device: &Device,
    ) -> Result<Self> {
        let v = graph.num_nodes();
        let k = categories.len();
        let folds_root_link = !categories.contains(&RelationCategory::RootLink);
        let mut compose = vec![0.0f64; v * num_words];
        let mut cover = vec![0usize; num_words];
        for (u, node) in graph.nodes.iter().enumerate() {
            if let Some(span) = node.span {
                if span.end >= num_words {
                    return Err(Error::GraphMismatch {
                        doc_id: doc_id.to_string(),
                        reason: format!("node {u} aligned to {span} beyond {num_words} words"),
                    });
                }
                let inv = 1.0 / span.len() as f64;
                for i in span.words() {
                    compose[u * num_words + i] = inv;
                    cover[i] += 1;
                }
            }
        }
        let mut decompose = vec![0.0f64; num_words * v];
        for (u, node) in graph.nodes.iter().enumerate() {
            if let Some(span) = node.span {
                for i in span.words() {
                    decompose[i * v + u] = 1.0 / cover[i] as f64;
                }
            }
        }
        let mut adjacency = vec![0.0f64; k * v * v];
        for (ki, cat) in categories.iter().enumerate() {
            for u in 0..v {
                let mut members: Vec<usize> = graph.neighbors(*cat, u).iter().copied().collect();
                if folds_root_link && *cat == RelationCategory::Others {
                    members.extend(graph.neighbors(RelationCategory::RootLink, u).iter().copied());
                }
                if self_loop == SelfLoop::PerCategory {
                    members.push(u);
                }
                members.sort_unstable();
                members.dedup();
                let c = members.len() as f64;
                for m in members {
                    adjacency[(ki * v + u) * v + m] = 1.0 / c;
                }
            }
        }
        let mk = |data: Vec<f64>, shape: (usize, usize)| -> Result<Tensor> {
            Ok(Tensor::from_vec(data, shape, device)?.to_dtype(dtype)?)
        };
        Ok(GraphOperators {
            num_words,
            num_nodes: v,
            num_categories: k,
            compose: mk(compose, (v, num_words))?,
            adjacency: mk(adjacency, (k * v, v))?,
            decompose: mk(decompose, (num_words, v))?,
            self_loop,
        })
    }
}

/// Per-layer relation transforms and the aggregation matrix for one pass.
pub struct InteractionWeights {
    /// One `COUNT×d×d` stack per layer.
    pub layers: Vec<Tensor>,
    /// Dedicated self transforms under [`SelfLoop::Single`].
    pub self_loops: Vec<Tensor>,
    /// `W_1`: `d×((L+1)·d)`.
    pub aggregate: Tensor,
}

impl InteractionWeights {
    pub fn new(params: &mut ParamStore, prefix: &str, d: usize, cfg: &InteractionConfig) -> Result<Self> {
        let b = 1.0 / (d as f64).sqrt();
        let mut layers = Vec::new();
        let mut self_loops = Vec::new();
        for l in 0..cfg.layers {
            layers.push(params.create(
                &format!("{prefix}.layer.{l}.relation"),
                (RelationCategory::COUNT, d, d),
                Init::Uniform(b),
            )?);
            if cfg.single_self_loop {
                self_loops.push(params.create(&format!("{prefix}.layer.{l}.self"), (d, d), Init::Uniform(b))?);
            }
        }
        let aggregate = params.create(&format!("{prefix}.aggregate"), (d, (cfg.layers + 1) * d), Init::Uniform(b))?;
        Ok(InteractionWeights {
            layers,
            self_loops,
            aggregate,
        })
    }
}

/// Layer-0 node states: the mean of each node's aligned word rows.
pub fn compose_nodes(z: &Tensor, ops: &GraphOperators) -> Result<Tensor> {
    Ok(ops.compose.matmul(z)?)
}

/// `ReLU(Σ_k Σ_{v} (1/c_{u,k}) W_k h_v)` over the operator's categories.
/// `relation` is a stack of at least `num_categories` matrices.
pub fn rgcn_layer(h: &Tensor, ops: &GraphOperators, relation: &Tensor, self_w: Option<&Tensor>) -> Result<Tensor> {
    let (v, d) = h.dims2()?;
    let k = ops.num_categories;
    let w = relation.narrow(0, 0, k)?;
    let mixed = ops.adjacency.matmul(h)?.reshape((k, v, d))?;
    let mut out = mixed.matmul(&w.transpose(1, 2)?)?.sum(0)?;
    if let Some(sw) = self_w {
        out = (out + ops::linear(h, sw, None)?)?;
    }
    Ok(out.relu()?)
}

/// `W_1 [h^0; …; h^L]` per node.
pub fn finalize_nodes(states: &[Tensor], aggregate: &Tensor) -> Result<Tensor> {
    let cat = Tensor::cat(states, 1)?;
    ops::linear(&cat, aggregate, None)
}

/// `z_i` plus the mean of the covering nodes' vectors.
pub fn decompose(z: &Tensor, ops: &GraphOperators, nodes: &Tensor) -> Result<Tensor> {
    Ok((z + ops.decompose.matmul(nodes)?)?)
}

/// All node states of one pass.
#[derive(Debug, Clone)]
pub struct NodeStates {
    pub layers: Vec<Tensor>,
    pub final_nodes: Tensor,
}

/// Compose, convolve, aggregate and decompose. A graph without nodes
/// returns `z` unchanged.
pub fn run_pass(z: &Tensor, ops: &GraphOperators, weights: &InteractionWeights) -> Result<(Tensor, Option<NodeStates>)> {
    if ops.num_words != z.dim(0)? {
        return Err(Error::GraphMismatch {
            doc_id: String::new(),
            reason: format!("graph spans {} words, representations {}", ops.num_words, z.dim(0)?),
        });
    }
    if ops.num_nodes == 0 {
        return Ok((z.clone(), None));
    }
    let mut layers = vec![compose_nodes(z, ops)?];
    for (l, relation) in weights.layers.iter().enumerate() {
        let self_w = match ops.self_loop {
            SelfLoop::Single => weights.self_loops.get(l),
            SelfLoop::PerCategory => None,
        };
        let next = rgcn_layer(layers.last().unwrap(), ops, relation, self_w)?;
        layers.push(next);
    }
    let final_nodes = finalize_nodes(&layers, &weights.aggregate)?;
    let out = decompose(z, ops, &final_nodes)?;
    Ok((out, Some(NodeStates { layers, final_nodes })))
}
