//! Command implementations behind the `eegcn` binary.

use std::fs;
use std::path::Path;

use crate::corpus::{load_examples, load_glove, Example, Label, Vocab};
use crate::error::Error;
use crate::model::PreparedExample;
use crate::train::{
    epoch_log_csv, evaluate, layer_sweep, load_checkpoint, predict, save_checkpoint, sweep_csv,
    AblationVariant, ExperimentData, MetricsReport, TrainOutcome, Trainer,
};

use super::manifest::RunManifest;
use super::settings::RunSettings;
use super::{DataArgs, EvalArgs};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const EPOCH_LOG_FILE: &str = "epochs.csv";
pub const REPORT_FILE: &str = "report.json";
pub const SWEEP_FILE: &str = "sweep.csv";

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    fs::write(path, contents).map_err(|e| Error::Io { path: path.display().to_string(), source: e })
}

/// Defaults, then the config file, then explicit flags.
pub fn resolve_settings(data: &DataArgs) -> Result<RunSettings, Error> {
    let mut settings = RunSettings::default();
    if let Some(config) = &data.config {
        settings.apply_file(config)?;
    }
    if let Some(seed) = data.seed {
        settings.train.seed = seed;
    }
    if let Some(epochs) = data.epochs {
        settings.train.max_epochs = epochs;
    }
    if let Some(batch) = data.batch_size {
        settings.train.batch_size = batch;
    }
    if let Some(lr) = data.learning_rate {
        settings.train.learning_rate = lr;
    }
    if let Some(lambda) = data.lambda {
        settings.train.lambda = lambda;
    }
    if let Some(dropout) = data.dropout {
        settings.model.dropout = dropout;
    }
    if let Some(layers) = data.gcn_layers {
        settings.model.gcn_layers = layers;
    }
    settings.model.validate().map_err(Error::Model)?;
    settings.train.validate().map_err(Error::Train)?;
    Ok(settings)
}

pub struct LoadedData {
    pub train: Vec<Example>,
    pub test: Vec<Example>,
    pub embeddings: crate::corpus::EmbeddingTable,
}

/// Load both splits with their parses, build the vocabulary over all
/// tokens, and resolve pretrained embeddings against it.
pub fn load_data(data: &DataArgs, settings: &RunSettings) -> Result<LoadedData, Error> {
    let train = load_examples(&data.train, &data.parses_train)?;
    let test = load_examples(&data.test, &data.parses_test)?;
    let sentences: Vec<&[String]> =
        train.iter().chain(&test).map(|e| e.tokens.as_slice()).collect();
    let vocab = Vocab::build(sentences, settings.min_count);
    let embeddings = load_glove(&data.glove, &vocab, settings.train.seed)?;
    log::info!(
        "vocabulary {} tokens, {} with pretrained vectors",
        vocab.len(),
        embeddings.pretrained_rows
    );
    Ok(LoadedData { train, test, embeddings })
}

fn base_manifest(
    command: &str,
    data: &DataArgs,
    settings: &RunSettings,
) -> Result<RunManifest, Error> {
    let inputs = RunManifest::digest_inputs(&[
        ("train", data.train.as_path()),
        ("test", data.test.as_path()),
        ("parses-train", data.parses_train.as_path()),
        ("parses-test", data.parses_test.as_path()),
        ("glove", data.glove.as_path()),
    ])?;
    Ok(RunManifest {
        command: command.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        created_utc: chrono::Utc::now().to_rfc3339(),
        out_dir: data.out.display().to_string(),
        seed: settings.train.seed,
        model_config: settings.model,
        train_config: settings.train,
        min_count: settings.min_count,
        variant: None,
        layer_values: None,
        inputs,
    })
}

fn ensure_out(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.display().to_string(), source: e })
}

fn report_json(report: &MetricsReport) -> Result<String, Error> {
    serde_json::to_string_pretty(report)
        .map_err(|e| Error::Usage(format!("report serialization: {e}")))
}

fn write_run_artifacts(
    out: &Path,
    trainer: &Trainer,
    outcome: &TrainOutcome,
) -> Result<(), Error> {
    save_checkpoint(
        &out.join(CHECKPOINT_FILE),
        &outcome.params,
        &trainer.train_config,
        &trainer.vocab,
        &trainer.sdi,
    )
    .map_err(Error::Train)?;
    write_file(&out.join(EPOCH_LOG_FILE), &epoch_log_csv(&outcome.epoch_log))?;
    write_file(&out.join(REPORT_FILE), &report_json(&outcome.report)?)?;
    Ok(())
}

pub fn cmd_train(data: &DataArgs) -> Result<(), Error> {
    let settings = resolve_settings(data)?;
    ensure_out(&data.out)?;
    let manifest = base_manifest("train", data, &settings)?;
    manifest.write(&data.out.join(MANIFEST_FILE))?;

    let loaded = load_data(data, &settings)?;
    let mut trainer = Trainer::new(
        &loaded.train,
        &loaded.test,
        &loaded.embeddings,
        settings.model,
        settings.train,
    )
    .map_err(Error::Train)?;
    let outcome = trainer.train().map_err(Error::Train)?;
    write_run_artifacts(&data.out, &trainer, &outcome)?;
    log::info!(
        "best epoch {}: test accuracy {:.4}, macro-F1 {:.4}",
        outcome.best_epoch,
        outcome.report.accuracy,
        outcome.report.macro_f1
    );
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs) -> Result<(), Error> {
    let checkpoint = load_checkpoint(&args.checkpoint).map_err(Error::Train)?;
    let test = load_examples(&args.test, &args.parses_test)?;
    let flags = checkpoint.params.config.ablation;
    let prepared: Vec<PreparedExample> = test
        .iter()
        .map(|e| PreparedExample::new(e, &checkpoint.vocab, &checkpoint.sdi, &flags))
        .collect();
    let preds = predict(&checkpoint.params, &checkpoint.params.config, &prepared)
        .map_err(Error::Train)?;
    let golds: Vec<Label> = test.iter().map(|e| e.label).collect();
    let report = evaluate(&preds, &golds).map_err(Error::Train)?;
    println!("{}", report_json(&report)?);
    Ok(())
}

/// Parse a `--layers` list such as `1,2,3`; duplicates are rejected.
pub fn parse_layer_list(raw: &str) -> Result<Vec<usize>, Error> {
    let mut layers = Vec::new();
    for part in raw.split(',') {
        let value: usize = part
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("--layers: invalid layer count `{part}`")))?;
        if value == 0 {
            return Err(Error::Usage("--layers: layer counts must be positive".to_string()));
        }
        if layers.contains(&value) {
            return Err(Error::Usage(format!("--layers: duplicate layer count {value}")));
        }
        layers.push(value);
    }
    if layers.is_empty() {
        return Err(Error::Usage("--layers: empty list".to_string()));
    }
    Ok(layers)
}

pub fn cmd_sweep(data: &DataArgs, layers_raw: &str) -> Result<(), Error> {
    let layers = parse_layer_list(layers_raw)?;
    let settings = resolve_settings(data)?;
    ensure_out(&data.out)?;
    let mut manifest = base_manifest("sweep", data, &settings)?;
    manifest.layer_values = Some(layers.clone());
    manifest.write(&data.out.join(MANIFEST_FILE))?;

    let loaded = load_data(data, &settings)?;
    let experiment = ExperimentData {
        train: &loaded.train,
        test: &loaded.test,
        embeddings: &loaded.embeddings,
    };
    let rows =
        layer_sweep(&layers, &experiment, &settings.model, &settings.train).map_err(Error::Train)?;
    write_file(&data.out.join(SWEEP_FILE), &sweep_csv(&rows))?;
    Ok(())
}

pub fn cmd_ablate(data: &DataArgs, variant_raw: &str) -> Result<(), Error> {
    let variant: AblationVariant = variant_raw.parse().map_err(Error::Usage)?;
    let settings = resolve_settings(data)?;
    ensure_out(&data.out)?;
    let mut manifest = base_manifest("ablate", data, &settings)?;
    manifest.variant = Some(variant.as_str().to_string());
    manifest.write(&data.out.join(MANIFEST_FILE))?;

    let loaded = load_data(data, &settings)?;
    let config = crate::model::ModelConfig { ablation: variant.flags(), ..settings.model };
    let mut trainer = Trainer::new(
        &loaded.train,
        &loaded.test,
        &loaded.embeddings,
        config,
        settings.train,
    )
    .map_err(Error::Train)?;
    let mut outcome = trainer.train().map_err(Error::Train)?;
    outcome.report.variant = Some(variant.as_str().to_string());

    // same artifact set as a training run, plus the report on stdout
    write_run_artifacts(&data.out, &trainer, &outcome)?;
    println!("{}", report_json(&outcome.report)?);
    Ok(())
}
