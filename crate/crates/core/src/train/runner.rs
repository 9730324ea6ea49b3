//! Layer sweeps and ablation runs, each a fresh training run under a shared
//! seed.

use std::str::FromStr;

use crate::corpus::{EmbeddingTable, Example};
use crate::error::TrainError;
use crate::model::{AblationFlags, ModelConfig};

use super::trainer::{TrainConfig, TrainOutcome, Trainer};

/// Everything a run needs besides its configuration.
pub struct ExperimentData<'a> {
    pub train: &'a [Example],
    pub test: &'a [Example],
    pub embeddings: &'a EmbeddingTable,
}

/// One row of the layer-sweep CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub layers: usize,
    pub acc: f64,
    pub macro_f1: f64,
}

pub const SWEEP_HEADER: &str = "layers,acc,macro_f1";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.layers, r.acc, r.macro_f1));
    }
    out
}

/// Train one model per layer count, sharing the seed and every other
/// setting, and report each run's best test metrics.
pub fn layer_sweep(
    layer_values: &[usize],
    data: &ExperimentData,
    model_config: &ModelConfig,
    train_config: &TrainConfig,
) -> Result<Vec<SweepRow>, TrainError> {
    let mut rows = Vec::with_capacity(layer_values.len());
    for &layers in layer_values {
        let config = ModelConfig { gcn_layers: layers, ..*model_config };
        let mut trainer =
            Trainer::new(data.train, data.test, data.embeddings, config, *train_config)?;
        let outcome = trainer.train()?;
        rows.push(SweepRow {
            layers,
            acc: outcome.report.accuracy,
            macro_f1: outcome.report.macro_f1,
        });
    }
    Ok(rows)
}

/// Which architectural ingredient to drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationVariant {
    Full,
    NoDependency,
    NoEdgeWeight,
    NoBidirectional,
}

impl AblationVariant {
    pub const ALL: [AblationVariant; 4] = [
        AblationVariant::Full,
        AblationVariant::NoDependency,
        AblationVariant::NoEdgeWeight,
        AblationVariant::NoBidirectional,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AblationVariant::Full => "full",
            AblationVariant::NoDependency => "no-dependency",
            AblationVariant::NoEdgeWeight => "no-edge-weight",
            AblationVariant::NoBidirectional => "no-bidirectional",
        }
    }

    pub fn flags(self) -> AblationFlags {
        AblationFlags {
            no_dependency: self == AblationVariant::NoDependency,
            no_edge_weight: self == AblationVariant::NoEdgeWeight,
            no_bidirectional: self == AblationVariant::NoBidirectional,
        }
    }
}

impl FromStr for AblationVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(AblationVariant::Full),
            "no-dependency" => Ok(AblationVariant::NoDependency),
            "no-edge-weight" => Ok(AblationVariant::NoEdgeWeight),
            "no-bidirectional" => Ok(AblationVariant::NoBidirectional),
            other => Err(format!(
                "unknown variant `{other}` (expected full, no-dependency, no-edge-weight or no-bidirectional)"
            )),
        }
    }
}

/// Train one ablation variant; the report is tagged with the variant name.
pub fn run_ablation(
    variant: AblationVariant,
    data: &ExperimentData,
    model_config: &ModelConfig,
    train_config: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    let config = ModelConfig { ablation: variant.flags(), ..*model_config };
    let mut trainer = Trainer::new(data.train, data.test, data.embeddings, config, *train_config)?;
    let mut outcome = trainer.train()?;
    outcome.report.variant = Some(variant.as_str().to_string());
    Ok(outcome)
}
