//! End-to-end forward computation for one sentence.

use rand::Rng;

use crate::autodiff::{Tape, Tensor, Var};
use crate::corpus::{Example, Label, Vocab};
use crate::error::ModelError;
use crate::graph::{Adjacency, SdiTable};

use super::bilstm::{bilstm_encode, LstmDirection};
use super::config::{AblationFlags, ModelConfig};
use super::gcn::{bigcn_layer, GcnLayer};
use super::head::{aspect_mask, classify, fuse_representations, retrieval_attention};
use super::params::{TapeParams, EMBEDDING};
use super::transformer::transformer_encode;

/// Whether dropout masks are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// A sentence resolved against the vocabulary with its adjacency built once;
/// reused across epochs.
#[derive(Debug, Clone)]
pub struct PreparedExample {
    pub ids: Vec<usize>,
    pub aspect_start: usize,
    pub aspect_len: usize,
    pub label: Label,
    pub adjacency: Adjacency,
}

/// Pick the adjacency variant the ablation flags call for.
pub fn build_adjacency(
    example: &Example,
    table: &SdiTable,
    flags: &AblationFlags,
) -> Adjacency {
    if flags.no_dependency {
        Adjacency::identity(example.len())
    } else if flags.no_edge_weight {
        Adjacency::binary(&example.parse)
    } else {
        Adjacency::sdi(&example.parse, table)
    }
}

impl PreparedExample {
    pub fn new(example: &Example, vocab: &Vocab, table: &SdiTable, flags: &AblationFlags) -> Self {
        PreparedExample {
            ids: example.tokens.iter().map(|t| vocab.id(t)).collect(),
            aspect_start: example.aspect_start,
            aspect_len: example.aspect_len,
            label: example.label,
            adjacency: build_adjacency(example, table, flags),
        }
    }
}

/// Tape handles for the interesting outputs of one pass.
#[derive(Debug, Clone, Copy)]
pub struct ForwardPass {
    pub logits: Var,
    pub prob: Var,
}

impl ForwardPass {
    pub fn probabilities(&self, tape: &Tape) -> [f64; 3] {
        let data = tape.value(self.prob).data();
        [data[0], data[1], data[2]]
    }

    pub fn predicted_label(&self, tape: &Tape) -> Label {
        let p = self.probabilities(tape);
        let mut best = 0;
        for i in 1..3 {
            if p[i] > p[best] {
                best = i;
            }
        }
        Label::from_index(best).expect("class index in range")
    }
}

fn dropout<R: Rng>(
    tape: &mut Tape,
    x: Var,
    rate: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<Var, ModelError> {
    if mode == Mode::Eval || rate == 0.0 {
        return Ok(x);
    }
    let keep = 1.0 - rate;
    let shape = tape.value(x).shape().to_vec();
    let numel = tape.value(x).numel();
    let mask_data: Vec<f64> =
        (0..numel).map(|_| if rng.gen_bool(keep) { 1.0 / keep } else { 0.0 }).collect();
    let mask = tape.leaf(Tensor::new(shape, mask_data).expect("dropout mask shape"));
    Ok(tape.mul(x, mask)?)
}

/// Run the full pipeline for one prepared sentence: embed, encode with the
/// Bi-LSTM and the transformer, propagate over the dependency graph, mask to
/// the aspect, attend back over the context, fuse, and classify.
pub fn forward_pass<R: Rng>(
    tape: &mut Tape,
    prepared: &PreparedExample,
    binding: &TapeParams,
    config: &ModelConfig,
    mode: Mode,
    rng: &mut R,
) -> Result<ForwardPass, ModelError> {
    let embedding = binding.var(EMBEDDING);
    let rows = tape.gather_rows(embedding, &prepared.ids)?;
    let embedded = dropout(tape, rows, config.dropout, mode, rng)?;

    let fwd = LstmDirection::from_params(binding, "fwd");
    let bwd = LstmDirection::from_params(binding, "bwd");
    let h_ctx = bilstm_encode(tape, embedded, &fwd, &bwd, config.d_h)?;

    let z_out = transformer_encode(tape, embedded, binding, config)?;

    let mut h = dropout(tape, h_ctx, config.dropout, mode, rng)?;
    let bidirectional = !config.ablation.no_bidirectional;
    for l in 0..config.gcn_layers {
        let layer = GcnLayer::from_params(binding, l);
        h = bigcn_layer(tape, h, &prepared.adjacency, &layer, bidirectional)?;
    }

    let masked = aspect_mask(tape, h, prepared.aspect_start, prepared.aspect_len)?;
    let alpha = retrieval_attention(tape, h_ctx, masked)?;
    let fused = fuse_representations(tape, h_ctx, alpha, z_out, binding.var("fuse.proj"))?;
    let (logits, prob) =
        classify(tape, fused, binding.var("classifier.w"), binding.var("classifier.b"))?;
    Ok(ForwardPass { logits, prob })
}
