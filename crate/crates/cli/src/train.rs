use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use influx_core::model::{save_checkpoint, train, Checkpoint};
use influx_core::{ArchSpec, Dataset, ExampleKind, Family, ModelParams, TrainConfig, Vocabulary};
use log::info;
use serde::Serialize;

use crate::data::{load_like, load_train, percent};
use crate::manifest::Manifest;
use crate::report::write_json;
use crate::GlobalOpts;

#[derive(ValueEnum, Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum FamilyArg {
    LinearBow,
    EmbMlp,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::LinearBow => Family::LinearBow,
            FamilyArg::EmbMlp => Family::EmbMlp,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    /// Training data (JSONL).
    #[arg(long)]
    pub data: PathBuf,
    /// Held-out data for reporting accuracy.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FamilyArg::LinearBow)]
    pub family: FamilyArg,
    /// L2 weight [default: 1e-3 linear_bow, 1e-4 emb_mlp].
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Minimum training count for a token to get its own id.
    #[arg(long, default_value_t = 1)]
    pub min_count: usize,
    #[arg(long, default_value_t = 16)]
    pub embed_dim: usize,
    #[arg(long, default_value_t = 32)]
    pub hidden_dim: usize,
    /// Checkpoint path [default: <out-dir>/model.json].
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Serialize)]
struct Summary {
    family: Family,
    num_params: usize,
    vocab_size: usize,
    train_examples: usize,
    train_accuracy: f64,
    dev_examples: Option<usize>,
    dev_accuracy: Option<f64>,
    model_hash: String,
}

pub fn accuracy(params: &ModelParams, data: &Dataset) -> Result<f64> {
    let mut correct = 0usize;
    for ex in data.iter() {
        if params.predict(ex)? == ex.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len().max(1) as f64)
}

pub fn run(global: &GlobalOpts, args: &TrainArgs) -> Result<()> {
    let mut manifest = Manifest::new("train", global, args)?;
    let data = load_train(&args.data)?;
    manifest.input(&args.data)?;
    let dev = match &args.dev {
        Some(p) => {
            manifest.input(p)?;
            Some(load_like(p, &data)?)
        }
        None => None,
    };

    let family = Family::from(args.family);
    let vocab = Arc::new(Vocabulary::build(&data, args.min_count)?);
    let pair = data.kind() == Some(ExampleKind::Pair);
    let arch = match family {
        Family::LinearBow => ArchSpec::linear_bow(vocab.size(), data.num_classes(), pair),
        Family::EmbMlp => ArchSpec::emb_mlp(vocab.size(), data.num_classes(), pair)
            .with_dims(args.embed_dim, args.hidden_dim),
    };
    let defaults = TrainConfig::for_family(family);
    let config = TrainConfig {
        l2_lambda: args.l2.unwrap_or(defaults.l2_lambda),
        epochs: args.epochs.unwrap_or(defaults.epochs),
        learning_rate: args.lr.unwrap_or(defaults.learning_rate),
        batch_size: args.batch_size.unwrap_or(defaults.batch_size),
        ..defaults
    }
    .with_seed(global.seed);

    info!(
        "training {} ({} parameters) on {} examples",
        family.as_str(),
        arch.num_params(),
        data.len()
    );
    let params = train(&data, &arch, vocab.clone(), &config)?;
    let train_acc = accuracy(&params, &data)?;
    println!("train accuracy: {}", percent(train_acc));
    let dev_acc = match &dev {
        Some(d) => {
            let acc = accuracy(&params, d)?;
            println!("dev accuracy: {}", percent(acc));
            Some(acc)
        }
        None => None,
    };

    let path = args
        .output
        .clone()
        .unwrap_or_else(|| global.out_dir.join("model.json"));
    let checkpoint = Checkpoint {
        params,
        train_config: Some(config),
    };
    save_checkpoint(&path, &checkpoint).with_context(|| format!("saving {}", path.display()))?;
    let bytes = std::fs::read(&path)?;
    manifest.write(&path, &bytes)?;
    let summary = Summary {
        family,
        num_params: checkpoint.params.num_params(),
        vocab_size: vocab.size(),
        train_examples: data.len(),
        train_accuracy: train_acc,
        dev_examples: dev.as_ref().map(|d| d.len()),
        dev_accuracy: dev_acc,
        model_hash: checkpoint.params.content_hash(),
    };
    write_json(
        &mut manifest,
        &global.out_dir.join("train.summary.json"),
        &summary,
    )?;
    manifest.finish()?;
    info!("saved checkpoint to {}", path.display());
    Ok(())
}
