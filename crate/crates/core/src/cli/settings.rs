//! Flat key-value configuration files and flag overrides.
//!
//! Every model and training field has a key; `#` starts a comment. Flags
//! given on the command line win over file values, which win over defaults.

use std::fs;
use std::path::Path;

use crate::error::Error;
use crate::model::ModelConfig;
use crate::train::TrainConfig;

/// Fully resolved run settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// Minimum corpus count for a token to get its own vocabulary id.
    pub min_count: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings { model: ModelConfig::default(), train: TrainConfig::default(), min_count: 1 }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str, origin: &str) -> Result<T, Error> {
    value.parse().map_err(|_| {
        Error::Usage(format!("{origin}: invalid value `{value}` for key `{key}`"))
    })
}

impl RunSettings {
    /// Apply `key = value` lines from a config file body.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), Error> {
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let origin = format!("{origin}:{}", line_no + 1);
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Usage(format!("{origin}: expected `key = value`, got `{line}`"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "d_w" => self.model.d_w = parse(key, value, &origin)?,
                "d_h" => self.model.d_h = parse(key, value, &origin)?,
                "gcn_layers" => self.model.gcn_layers = parse(key, value, &origin)?,
                "transformer_blocks" => {
                    self.model.transformer_blocks = parse(key, value, &origin)?
                }
                "heads" => self.model.heads = parse(key, value, &origin)?,
                "ffn_width" => self.model.ffn_width = parse(key, value, &origin)?,
                "dropout" => self.model.dropout = parse(key, value, &origin)?,
                "no_dependency" => self.model.ablation.no_dependency = parse(key, value, &origin)?,
                "no_edge_weight" => {
                    self.model.ablation.no_edge_weight = parse(key, value, &origin)?
                }
                "no_bidirectional" => {
                    self.model.ablation.no_bidirectional = parse(key, value, &origin)?
                }
                "learning_rate" => self.train.learning_rate = parse(key, value, &origin)?,
                "batch_size" => self.train.batch_size = parse(key, value, &origin)?,
                "max_epochs" => self.train.max_epochs = parse(key, value, &origin)?,
                "lambda" => self.train.lambda = parse(key, value, &origin)?,
                "seed" => self.train.seed = parse(key, value, &origin)?,
                "patience" => self.train.patience = Some(parse(key, value, &origin)?),
                "min_count" => self.min_count = parse(key, value, &origin)?,
                other => {
                    return Err(Error::Usage(format!("{origin}: unknown config key `{other}`")))
                }
            }
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), Error> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.display().to_string(), source: e })?;
        self.apply_text(&text, &path.display().to_string())
    }
}
