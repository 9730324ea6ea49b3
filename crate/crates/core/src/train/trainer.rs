//! The training loop: seeded shuffling, minibatch Adam steps, per-epoch test
//! evaluation, and best-accuracy checkpoint tracking.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{adam_step, AdamConfig, AdamState, Tape};
use crate::corpus::{EmbeddingTable, Example, Label, Vocab};
use crate::error::TrainError;
use crate::graph::SdiTable;
use crate::model::{forward_pass, Mode, ModelConfig, ModelParams, PreparedExample};

use super::loss::batch_loss;
use super::metrics::{evaluate, MetricsReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// L2 coefficient on the weight matrices.
    pub lambda: f64,
    pub seed: u64,
    /// Stop after this many epochs without a test-accuracy improvement;
    /// absent means run to `max_epochs`.
    #[serde(default)]
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            batch_size: 32,
            max_epochs: 100,
            lambda: 1e-5,
            seed: 1,
            patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.learning_rate <= 0.0 || self.batch_size == 0 || self.lambda < 0.0 {
            return Err(TrainError::BadCheckpoint {
                path: "<config>".to_string(),
                detail: "learning rate and batch size must be positive, lambda nonnegative"
                    .to_string(),
            });
        }
        Ok(())
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_acc: f64,
    pub test_macro_f1: f64,
}

pub const EPOCH_LOG_HEADER: &str = "epoch,train_loss,test_acc,test_macro_f1";

/// Render the per-epoch log as CSV, header included.
pub fn epoch_log_csv(records: &[EpochRecord]) -> String {
    let mut out = String::from(EPOCH_LOG_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.epoch, r.train_loss, r.test_acc, r.test_macro_f1
        ));
    }
    out
}

/// Result of a run: the best-test-accuracy parameters, its report, and the
/// full epoch log.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub best_epoch: usize,
    pub report: MetricsReport,
    pub epoch_log: Vec<EpochRecord>,
}

/// Owns everything one run needs. The relation-frequency table is built from
/// the training split only and never mutated afterwards.
pub struct Trainer {
    pub model_config: ModelConfig,
    pub train_config: TrainConfig,
    pub vocab: Vocab,
    pub sdi: SdiTable,
    pub params: ModelParams,
    train_set: Vec<PreparedExample>,
    test_set: Vec<PreparedExample>,
    test_golds: Vec<Label>,
    rng: ChaCha8Rng,
}

impl Trainer {
    pub fn new(
        train: &[Example],
        test: &[Example],
        embeddings: &EmbeddingTable,
        model_config: ModelConfig,
        train_config: TrainConfig,
    ) -> Result<Trainer, TrainError> {
        model_config.validate().map_err(TrainError::Model)?;
        train_config.validate()?;
        let sdi = SdiTable::from_graphs(train.iter().map(|e| &e.parse))?;
        let mut rng = ChaCha8Rng::seed_from_u64(train_config.seed);
        let params = ModelParams::init(&model_config, embeddings, &mut rng)?;
        let vocab = embeddings.vocab.clone();
        let flags = model_config.ablation;
        let train_set =
            train.iter().map(|e| PreparedExample::new(e, &vocab, &sdi, &flags)).collect();
        let test_set: Vec<PreparedExample> =
            test.iter().map(|e| PreparedExample::new(e, &vocab, &sdi, &flags)).collect();
        let test_golds = test.iter().map(|e| e.label).collect();
        Ok(Trainer {
            model_config,
            train_config,
            vocab,
            sdi,
            params,
            train_set,
            test_set,
            test_golds,
            rng,
        })
    }

    pub fn train_len(&self) -> usize {
        self.train_set.len()
    }

    /// Predictions of the current parameters on the test split.
    pub fn evaluate_test(&self) -> Result<MetricsReport, TrainError> {
        let preds = predict(&self.params, &self.model_config, &self.test_set)?;
        evaluate(&preds, &self.test_golds)
    }

    /// Accuracy of the current parameters on the training split.
    pub fn evaluate_train(&self) -> Result<MetricsReport, TrainError> {
        let preds = predict(&self.params, &self.model_config, &self.train_set)?;
        let golds: Vec<Label> = self.train_set.iter().map(|p| p.label).collect();
        evaluate(&preds, &golds)
    }

    /// Run up to `max_epochs` epochs and keep the parameters with the best
    /// test accuracy. Zero epochs returns the initial model untouched.
    pub fn train(&mut self) -> Result<TrainOutcome, TrainError> {
        let n = self.train_set.len();
        if n == 0 {
            return Err(TrainError::EmptyEval);
        }
        let adam_cfg =
            AdamConfig { learning_rate: self.train_config.learning_rate, ..AdamConfig::default() };
        let mut adam = AdamState::new(&self.params.store);
        let mut log = Vec::new();
        let mut best: Option<(usize, ModelParams, MetricsReport)> = None;
        let mut since_best = 0usize;
        let mut indices: Vec<usize> = (0..n).collect();

        for epoch in 1..=self.train_config.max_epochs {
            indices.shuffle(&mut self.rng);
            let mut loss_sum = 0.0;
            for (batch_no, chunk) in indices.chunks(self.train_config.batch_size).enumerate() {
                let mut tape = Tape::new();
                let binding = self.params.bind(&mut tape);
                let mut items = Vec::with_capacity(chunk.len());
                for &i in chunk {
                    let pass = forward_pass(
                        &mut tape,
                        &self.train_set[i],
                        &binding,
                        &self.model_config,
                        Mode::Train,
                        &mut self.rng,
                    )?;
                    items.push((pass.logits, self.train_set[i].label.index()));
                }
                let weights = binding.decayed_vars(&self.params);
                let loss = batch_loss(&mut tape, &items, &weights, self.train_config.lambda)?;
                let loss_value = tape.value(loss).data()[0];
                if !loss_value.is_finite() {
                    return Err(TrainError::NonFiniteLoss {
                        epoch,
                        batch: batch_no + 1,
                        norms: self.params.store.norm_summary(),
                    });
                }
                tape.backward(loss).map_err(TrainError::Autodiff)?;
                self.params.absorb_grads(&tape, &binding).map_err(TrainError::Model)?;
                adam_step(&mut self.params.store, &mut adam, &adam_cfg)?;
                loss_sum += loss_value * chunk.len() as f64;
            }

            let report = self.evaluate_test()?;
            log.push(EpochRecord {
                epoch,
                train_loss: loss_sum / n as f64,
                test_acc: report.accuracy,
                test_macro_f1: report.macro_f1,
            });
            log::info!(
                "epoch {epoch}: train_loss {:.6} test_acc {:.4} test_f1 {:.4}",
                loss_sum / n as f64,
                report.accuracy,
                report.macro_f1
            );

            let improved = best.as_ref().map_or(true, |(_, _, b)| report.accuracy > b.accuracy);
            if improved {
                best = Some((epoch, self.params.clone(), report));
                since_best = 0;
            } else {
                since_best += 1;
                if let Some(patience) = self.train_config.patience {
                    if since_best >= patience {
                        break;
                    }
                }
            }
        }

        let (best_epoch, params, report) = match best {
            Some(b) => b,
            None => (0, self.params.clone(), self.evaluate_test()?),
        };
        Ok(TrainOutcome { params, best_epoch, report, epoch_log: log })
    }
}

/// Evaluation-mode predictions for a prepared set. Parameters are bound to
/// one tape and per-example nodes are discarded after reading each output.
pub fn predict(
    params: &ModelParams,
    config: &ModelConfig,
    prepared: &[PreparedExample],
) -> Result<Vec<Label>, TrainError> {
    let mut tape = Tape::new();
    let binding = params.bind(&mut tape);
    let mark = tape.len();
    // evaluation draws nothing from the stream; any seed works
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut preds = Vec::with_capacity(prepared.len());
    for example in prepared {
        let pass = forward_pass(&mut tape, example, &binding, config, Mode::Eval, &mut rng)?;
        preds.push(pass.predicted_label(&tape));
        tape.truncate(mark);
    }
    Ok(preds)
}

/// Per-example probability outputs in evaluation mode.
pub fn predict_probs(
    params: &ModelParams,
    config: &ModelConfig,
    prepared: &[PreparedExample],
) -> Result<Vec<[f64; 3]>, TrainError> {
    let mut tape = Tape::new();
    let binding = params.bind(&mut tape);
    let mark = tape.len();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut probs = Vec::with_capacity(prepared.len());
    for example in prepared {
        let pass = forward_pass(&mut tape, example, &binding, config, Mode::Eval, &mut rng)?;
        probs.push(pass.probabilities(&tape));
        tape.truncate(mark);
    }
    Ok(probs)
}
