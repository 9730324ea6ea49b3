//! Self-describing checkpoint container: every parameter tensor, the model
//! and training configuration, the vocabulary and its digest, and the
//! relation-frequency table, in one versioned JSON file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::{ParamStore, Tensor};
use crate::corpus::Vocab;
use crate::error::TrainError;
use crate::graph::SdiTable;
use crate::model::{ModelConfig, ModelParams};

use super::trainer::TrainConfig;

pub const CHECKPOINT_FORMAT: &str = "eegcn-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct SavedTensor {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
    weight_decay: bool,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    model_config: ModelConfig,
    train_config: TrainConfig,
    label_order: [String; 3],
    vocab_digest: String,
    vocab_tokens: Vec<String>,
    sdi: serde_json::Value,
    params: Vec<SavedTensor>,
}

/// A loaded checkpoint, ready for evaluation or further inspection.
pub struct Checkpoint {
    pub params: ModelParams,
    pub train_config: TrainConfig,
    pub vocab: Vocab,
    pub sdi: SdiTable,
}

pub fn save_checkpoint(
    path: &Path,
    params: &ModelParams,
    train_config: &TrainConfig,
    vocab: &Vocab,
    sdi: &SdiTable,
) -> Result<(), TrainError> {
    let file = CheckpointFile {
        format: CHECKPOINT_FORMAT.to_string(),
        version: CHECKPOINT_VERSION,
        model_config: params.config,
        train_config: *train_config,
        label_order: ["negative".into(), "neutral".into(), "positive".into()],
        vocab_digest: vocab.digest(),
        vocab_tokens: vocab.tokens().to_vec(),
        sdi: sdi.to_json(),
        params: params
            .store
            .iter()
            .map(|e| SavedTensor {
                name: e.name.clone(),
                shape: e.value.shape().to_vec(),
                data: e.value.data().to_vec(),
                weight_decay: e.weight_decay,
            })
            .collect(),
    };
    let json = serde_json::to_string(&file).map_err(|e| TrainError::BadCheckpoint {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    fs::write(path, json)
        .map_err(|e| TrainError::Io { path: path.display().to_string(), source: e })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, TrainError> {
    let display = path.display().to_string();
    let bad = |detail: String| TrainError::BadCheckpoint { path: display.clone(), detail };
    let text =
        fs::read_to_string(path).map_err(|e| TrainError::Io { path: display.clone(), source: e })?;
    let file: CheckpointFile = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    if file.format != CHECKPOINT_FORMAT {
        return Err(bad(format!("unrecognized format tag `{}`", file.format)));
    }
    if file.version != CHECKPOINT_VERSION {
        return Err(TrainError::CheckpointVersion {
            path: display,
            got: file.version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let vocab = Vocab::from_tokens(file.vocab_tokens);
    if vocab.digest() != file.vocab_digest {
        return Err(bad("vocabulary digest mismatch".to_string()));
    }
    let sdi = SdiTable::from_json(&file.sdi).map_err(|e| bad(e.to_string()))?;
    let mut store = ParamStore::new();
    for saved in file.params {
        let tensor = Tensor::new(saved.shape, saved.data)
            .map_err(|e| bad(format!("tensor `{}`: {e}", saved.name)))?;
        store.insert(&saved.name, tensor, saved.weight_decay);
    }
    let params = ModelParams::from_store(store, file.model_config).map_err(TrainError::Model)?;
    Ok(Checkpoint { params, train_config: file.train_config, vocab, sdi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DependencyGraph, EmbeddingTable};
    use crate::model::ModelConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny_params() -> (ModelParams, Vocab, SdiTable) {
        let sentences = vec![vec!["good".to_string(), "food".to_string()]];
        let refs: Vec<&[String]> = sentences.iter().map(|s| s.as_slice()).collect();
        let vocab = Vocab::build(refs, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let matrix = Tensor::uniform(&[vocab.len(), 4], -0.1, 0.1, &mut rng);
        let table = EmbeddingTable::from_parts(vocab.clone(), matrix);
        let config = ModelConfig {
            d_w: 4,
            d_h: 3,
            gcn_layers: 1,
            transformer_blocks: 1,
            heads: 2,
            ffn_width: 5,
            dropout: 0.0,
            ..ModelConfig::default()
        };
        let params = ModelParams::init(&config, &table, &mut rng).unwrap();
        let graph = DependencyGraph::from_heads(&[2, 0], &["amod", "root"]).unwrap();
        let sdi = SdiTable::from_graphs([&graph]).unwrap();
        (params, vocab, sdi)
    }

    #[test]
    fn checkpoint_round_trips_every_tensor() {
        let (params, vocab, sdi) = tiny_params();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt.json");
        save_checkpoint(&path, &params, &TrainConfig::default(), &vocab, &sdi).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.vocab, vocab);
        assert_eq!(loaded.sdi, sdi);
        assert_eq!(loaded.params.config, params.config);
        for entry in params.store.iter() {
            let restored = loaded.params.store.get(&entry.name).unwrap();
            assert_eq!(restored.data(), entry.value.data(), "tensor {}", entry.name);
        }
    }

    #[test]
    fn future_version_is_refused_with_the_version_error() {
        let (params, vocab, sdi) = tiny_params();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt.json");
        save_checkpoint(&path, &params, &TrainConfig::default(), &vocab, &sdi).unwrap();
        let mut value: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        value["version"] = serde_json::Value::from(99);
        std::fs::write(&path, serde_json::to_string(&value).unwrap()).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(TrainError::CheckpointVersion { got: 99, .. })
        ));
    }

    #[test]
    fn tampered_vocabulary_fails_the_digest() {
        let (params, vocab, sdi) = tiny_params();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt.json");
        save_checkpoint(&path, &params, &TrainConfig::default(), &vocab, &sdi).unwrap();
        let mut value: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        value["vocab_tokens"][2] = serde_json::Value::from("swapped");
        std::fs::write(&path, serde_json::to_string(&value).unwrap()).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(TrainError::BadCheckpoint { .. })));
    }
}
