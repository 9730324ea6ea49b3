//! Model hyperparameters and ablation switches.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Switches that remove one architectural ingredient at a time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationFlags {
    /// Replace the dependency adjacency with the identity (self-loops only).
    #[serde(default)]
    pub no_dependency: bool,
    /// Use unit edge weights instead of relation frequencies.
    #[serde(default)]
    pub no_edge_weight: bool,
    /// Run the graph convolution in the head-to-dependent direction only.
    #[serde(default)]
    pub no_bidirectional: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Word-embedding width; also the transformer model width.
    pub d_w: usize,
    /// Per-direction LSTM hidden width.
    pub d_h: usize,
    pub gcn_layers: usize,
    pub transformer_blocks: usize,
    pub heads: usize,
    pub ffn_width: usize,
    /// Dropout rate on embeddings and graph-convolution inputs while
    /// training; zero disables it (and all verification runs use zero).
    pub dropout: f64,
    #[serde(default)]
    pub ablation: AblationFlags,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d_w: 300,
            d_h: 300,
            gcn_layers: 3,
            transformer_blocks: 1,
            heads: 6,
            ffn_width: 600,
            dropout: 0.3,
            ablation: AblationFlags::default(),
        }
    }
}

impl ModelConfig {
    /// Transformer width; tied to the embedding width.
    pub fn d_model(&self) -> usize {
        self.d_w
    }

    /// Width of the graph-convolution stream (both LSTM directions).
    pub fn gcn_width(&self) -> usize {
        2 * self.d_h
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.d_w == 0 || self.d_h == 0 || self.ffn_width == 0 {
            return Err(ModelError::BadConfig("widths must be positive".to_string()));
        }
        if self.gcn_layers == 0 {
            return Err(ModelError::BadConfig("at least one graph-convolution layer".to_string()));
        }
        if self.transformer_blocks == 0 {
            return Err(ModelError::BadConfig("at least one transformer block".to_string()));
        }
        if self.heads == 0 || self.d_model() % self.heads != 0 {
            return Err(ModelError::HeadSplit { heads: self.heads, d_model: self.d_model() });
        }
        if self.d_model() % 2 != 0 {
            return Err(ModelError::OddWidth(self.d_model()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::BadConfig(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        assert!(ModelConfig::default().validate().is_ok());
    }

    #[test]
    fn head_split_must_divide() {
        let cfg = ModelConfig { heads: 7, ..ModelConfig::default() };
        assert!(matches!(cfg.validate(), Err(ModelError::HeadSplit { .. })));
    }

    #[test]
    fn odd_model_width_is_rejected() {
        let cfg = ModelConfig { d_w: 9, heads: 3, ..ModelConfig::default() };
        assert!(matches!(cfg.validate(), Err(ModelError::OddWidth(9))));
    }
}
