//! Shared fixtures for integration tests: a tiny deterministic corpus with
//! parses, a synthetic embedding table, and a reduced model configuration.

#![allow(dead_code)]

use eegcn_core::autodiff::Tensor;
use eegcn_core::corpus::{DependencyGraph, EmbeddingTable, Example, Label, Vocab};
use eegcn_core::graph::SdiTable;
use eegcn_core::model::ModelConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const POSITIVE_WORDS: [&str; 4] = ["great", "fresh", "friendly", "tasty"];
pub const NEGATIVE_WORDS: [&str; 4] = ["awful", "stale", "rude", "bland"];
pub const NEUTRAL_WORDS: [&str; 4] = ["ordinary", "plain", "average", "typical"];
pub const ASPECT_WORDS: [&str; 4] = ["food", "service", "menu", "staff"];

/// `count` five-token sentences of the form "the <aspect> was very <cue>",
/// labels decided by the cue word, parses a simple head chain off "was".
pub fn synthetic_examples(count: usize, seed: u64) -> Vec<Example> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let class = rng.gen_range(0..3usize);
            let cue = match class {
                0 => NEGATIVE_WORDS[rng.gen_range(0..4)],
                1 => NEUTRAL_WORDS[rng.gen_range(0..4)],
                _ => POSITIVE_WORDS[rng.gen_range(0..4)],
            };
            let aspect = ASPECT_WORDS[rng.gen_range(0..4)];
            let tokens: Vec<String> =
                ["the", aspect, "was", "very", cue].iter().map(|s| s.to_string()).collect();
            // "was" (token 3) is the root; everything hangs off it
            let parse = DependencyGraph::from_heads(
                &[2, 3, 0, 5, 3],
                &["det", "nsubj", "root", "advmod", "acomp"],
            )
            .unwrap();
            Example {
                tokens,
                aspect_start: 2,
                aspect_len: 1,
                label: Label::from_index(class).unwrap(),
                parse,
            }
        })
        .collect()
}

pub fn vocab_for(examples: &[Example]) -> Vocab {
    let sentences: Vec<&[String]> = examples.iter().map(|e| e.tokens.as_slice()).collect();
    Vocab::build(sentences, 1)
}

pub fn random_embeddings(vocab: &Vocab, dim: usize, seed: u64) -> EmbeddingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let matrix = Tensor::uniform(&[vocab.len(), dim], -0.1, 0.1, &mut rng);
    EmbeddingTable::from_parts(vocab.clone(), matrix)
}

/// Reduced-width configuration used by gradient checks: 4 tokens fit it
/// comfortably and every path stays cheap.
pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        d_w: 6,
        d_h: 6,
        gcn_layers: 2,
        transformer_blocks: 1,
        heads: 2,
        ffn_width: 12,
        dropout: 0.0,
        ..ModelConfig::default()
    }
}

pub fn sdi_for(examples: &[Example]) -> SdiTable {
    SdiTable::from_graphs(examples.iter().map(|e| &e.parse)).unwrap()
}

/// A random dependency tree on `n` nodes: node 1 is the root, every later
/// node picks an earlier head, so the structure is acyclic by construction.
pub fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> DependencyGraph {
    const RELATIONS: [&str; 6] = ["nsubj", "dobj", "amod", "advmod", "det", "nmod"];
    let mut heads = vec![0usize];
    let mut relations = vec!["root"];
    for i in 1..n {
        heads.push(rng.gen_range(1..=i));
        relations.push(RELATIONS[rng.gen_range(0..RELATIONS.len())]);
    }
    DependencyGraph::from_heads(&heads, &relations).unwrap()
}
