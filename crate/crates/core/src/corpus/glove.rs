//! Pretrained embedding loader: GloVe text format, one token and its vector
//! per whitespace-separated line.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Tensor;
use crate::error::CorpusError;

use super::vocab::{Vocab, PAD_ID};

/// Vocabulary-aligned embedding matrix. Row `i` is the vector for token id
/// `i`; rows without a pretrained vector are drawn uniformly from
/// `[-0.25/dim, 0.25/dim]`, except the pad row which stays zero.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    pub vocab: Vocab,
    pub matrix: Tensor,
    pub dim: usize,
    /// Vocabulary tokens that had a row in the embeddings file.
    pub pretrained_rows: usize,
}

impl EmbeddingTable {
    /// Assemble directly from a vocabulary-aligned matrix (tests, bindings).
    pub fn from_parts(vocab: Vocab, matrix: Tensor) -> EmbeddingTable {
        assert_eq!(matrix.shape()[0], vocab.len(), "one embedding row per token");
        let dim = matrix.cols();
        EmbeddingTable { vocab, matrix, dim, pretrained_rows: 0 }
    }
}

/// Load vectors for the vocabulary from a GloVe-format text file. Tokens are
/// matched exactly first, then case-insensitively; everything else gets a
/// small uniform draw seeded by `seed`.
pub fn load_glove(path: &Path, vocab: &Vocab, seed: u64) -> Result<EmbeddingTable, CorpusError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|e| CorpusError::Io { path: display.clone(), source: e })?;

    // lowercase fallback candidates: vocab ids keyed by lowercased token
    let mut lower_ids: HashMap<String, Vec<usize>> = HashMap::new();
    for id in 0..vocab.len() {
        lower_ids.entry(vocab.token(id).to_lowercase()).or_default().push(id);
    }

    let mut exact: HashMap<usize, Vec<f64>> = HashMap::new();
    let mut lower: HashMap<usize, Vec<f64>> = HashMap::new();
    let mut dim: Option<usize> = None;

    for (line_no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::Io { path: display.clone(), source: e })?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let token = parts.next().unwrap_or_default().to_string();
        let values: Vec<&str> = parts.collect();
        let expected = *dim.get_or_insert(values.len());
        if values.len() != expected || expected == 0 {
            return Err(CorpusError::EmbeddingDim {
                path: display,
                line: line_no + 1,
                token,
                got: values.len(),
                expected,
            });
        }

        let exact_id = vocab.contains(&token).then(|| vocab.id(&token));
        let lower_targets: Vec<usize> = lower_ids
            .get(&token.to_lowercase())
            .map(|ids| ids.iter().copied().filter(|&id| vocab.token(id) != token).collect())
            .unwrap_or_default();
        if exact_id.is_none() && lower_targets.is_empty() {
            continue;
        }

        let mut vector = Vec::with_capacity(expected);
        for v in &values {
            let parsed: f64 = v.parse().map_err(|_| CorpusError::BadFloat {
                path: display.clone(),
                line: line_no + 1,
                value: v.to_string(),
            })?;
            vector.push(parsed);
        }
        if let Some(id) = exact_id {
            exact.entry(id).or_insert_with(|| vector.clone());
        }
        for id in lower_targets {
            lower.entry(id).or_insert_with(|| vector.clone());
        }
    }

    let dim = dim.ok_or(CorpusError::EmptyFile { path: display })?;
    let bound = 0.25 / dim as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(vocab.len() * dim);
    let mut pretrained_rows = 0;
    for id in 0..vocab.len() {
        if let Some(row) = exact.get(&id).or_else(|| lower.get(&id)) {
            pretrained_rows += 1;
            data.extend_from_slice(row);
        } else if id == PAD_ID {
            data.extend(std::iter::repeat(0.0).take(dim));
        } else {
            data.extend(Tensor::uniform(&[dim], -bound, bound, &mut rng).into_data());
        }
    }
    let matrix = Tensor::new(vec![vocab.len(), dim], data).expect("embedding matrix shape");
    Ok(EmbeddingTable { vocab: vocab.clone(), matrix, dim, pretrained_rows })
}
