//! Trainable parameter construction and per-tape binding.

use std::collections::HashMap;

use rand::Rng;

use crate::autodiff::{ParamStore, Tape, Tensor, Var};
use crate::corpus::EmbeddingTable;
use crate::error::ModelError;

use super::config::ModelConfig;

/// Everything except the loaded embeddings starts uniform in this bound.
pub const INIT_BOUND: f64 = 0.01;

pub const EMBEDDING: &str = "embedding";

/// All trainable tensors, keyed by stable names. The store's insertion order
/// fixes the optimizer and checkpoint layout.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub store: ParamStore,
    pub config: ModelConfig,
}

fn uniform<R: Rng>(shape: &[usize], rng: &mut R) -> Tensor {
    Tensor::uniform(shape, -INIT_BOUND, INIT_BOUND, rng)
}

impl ModelParams {
    /// Fresh parameters: embeddings from the pretrained table, everything
    /// else drawn uniformly.
    pub fn init<R: Rng>(
        config: &ModelConfig,
        embeddings: &EmbeddingTable,
        rng: &mut R,
    ) -> Result<ModelParams, ModelError> {
        config.validate()?;
        if embeddings.dim != config.d_w {
            return Err(ModelError::BadConfig(format!(
                "embedding width {} does not match configured d_w {}",
                embeddings.dim, config.d_w
            )));
        }
        let mut store = ParamStore::new();
        store.insert(EMBEDDING, embeddings.matrix.clone(), true);

        let (d_w, d_h) = (config.d_w, config.d_h);
        for dir in ["fwd", "bwd"] {
            store.insert(&format!("lstm.{dir}.w_ih"), uniform(&[d_w, 4 * d_h], rng), true);
            store.insert(&format!("lstm.{dir}.w_hh"), uniform(&[d_h, 4 * d_h], rng), true);
            store.insert(&format!("lstm.{dir}.b"), uniform(&[4 * d_h], rng), false);
        }

        let d_model = config.d_model();
        let d_k = d_model / config.heads;
        for b in 0..config.transformer_blocks {
            for h in 0..config.heads {
                store.insert(&format!("transformer.{b}.head.{h}.wq"), uniform(&[d_model, d_k], rng), true);
                store.insert(&format!("transformer.{b}.head.{h}.wk"), uniform(&[d_model, d_k], rng), true);
                store.insert(&format!("transformer.{b}.head.{h}.wv"), uniform(&[d_model, d_k], rng), true);
            }
            store.insert(&format!("transformer.{b}.wo"), uniform(&[d_model, d_model], rng), true);
            store.insert(&format!("transformer.{b}.ln1.gain"), uniform(&[d_model], rng), false);
            store.insert(&format!("transformer.{b}.ln1.shift"), uniform(&[d_model], rng), false);
            store.insert(&format!("transformer.{b}.ff.w1"), uniform(&[d_model, config.ffn_width], rng), true);
            store.insert(&format!("transformer.{b}.ff.b1"), uniform(&[config.ffn_width], rng), false);
            store.insert(&format!("transformer.{b}.ff.w2"), uniform(&[config.ffn_width, d_model], rng), true);
            store.insert(&format!("transformer.{b}.ff.b2"), uniform(&[d_model], rng), false);
            store.insert(&format!("transformer.{b}.ln2.gain"), uniform(&[d_model], rng), false);
            store.insert(&format!("transformer.{b}.ln2.shift"), uniform(&[d_model], rng), false);
        }

        // each layer concatenates both directions (2d -> d) unless the
        // backward direction is ablated away (d -> d)
        let d = config.gcn_width();
        let in_width = if config.ablation.no_bidirectional { d } else { 2 * d };
        for l in 0..config.gcn_layers {
            store.insert(&format!("gcn.{l}.w"), uniform(&[in_width, d], rng), true);
            store.insert(&format!("gcn.{l}.b"), uniform(&[d], rng), false);
        }

        store.insert("fuse.proj", uniform(&[d_model, d], rng), true);
        store.insert("classifier.w", uniform(&[d, 3], rng), true);
        store.insert("classifier.b", uniform(&[3], rng), false);

        Ok(ModelParams { store, config: *config })
    }

    /// Wrap an existing store (checkpoint loading); shapes are trusted to
    /// match the config they were saved with.
    pub fn from_store(store: ParamStore, config: ModelConfig) -> Result<ModelParams, ModelError> {
        config.validate()?;
        Ok(ModelParams { store, config })
    }

    pub fn vocab_size(&self) -> usize {
        self.store.get(EMBEDDING).map(|t| t.shape()[0]).unwrap_or(0)
    }

    /// Place every parameter on a tape for one forward/backward pass.
    pub fn bind(&self, tape: &mut Tape) -> TapeParams {
        let mut vars = HashMap::new();
        for entry in self.store.iter() {
            vars.insert(entry.name.clone(), tape.param(entry.value.clone()));
        }
        TapeParams { vars }
    }

    /// Copy gradients accumulated on the tape back into the store.
    pub fn absorb_grads(&mut self, tape: &Tape, binding: &TapeParams) -> Result<(), ModelError> {
        let names: Vec<String> = self.store.iter().map(|e| e.name.clone()).collect();
        for name in names {
            let var = binding.var(&name);
            if let Some(grad) = tape.grad(var) {
                self.store.accumulate_grad(&name, grad.data()).map_err(ModelError::Autodiff)?;
            }
        }
        Ok(())
    }
}

/// Tape-resident parameter handles for a single pass.
#[derive(Debug, Clone)]
pub struct TapeParams {
    vars: HashMap<String, Var>,
}

impl TapeParams {
    /// Assemble from explicit name/handle pairs; gradient-check harnesses
    /// place parameters themselves and still reuse the forward code.
    pub fn from_pairs<I: IntoIterator<Item = (String, Var)>>(pairs: I) -> TapeParams {
        TapeParams { vars: pairs.into_iter().collect() }
    }

    pub fn var(&self, name: &str) -> Var {
        *self
            .vars
            .get(name)
            .unwrap_or_else(|| panic!("parameter `{name}` not bound on this tape"))
    }

    /// Vars of every weight-decay tensor, in a deterministic order.
    pub fn decayed_vars(&self, params: &ModelParams) -> Vec<Var> {
        params
            .store
            .iter()
            .filter(|e| e.weight_decay)
            .map(|e| self.var(&e.name))
            .collect()
    }
}
