use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Subcommand, ValueEnum};
use influx_core::corpus::{
    generate_hans_style, generate_nli_mixture, generate_sentiment, negate_hypothesis, write_jsonl,
    HansLexicon, HansTemplateSpec, Heuristic, NliMixConfig, SentimentConfig,
};
use influx_core::Dataset;
use log::{info, warn};
use serde::Serialize;

use crate::manifest::Manifest;
use crate::GlobalOpts;

#[derive(Args, Debug, Serialize)]
pub struct GenerateArgs {
    #[command(subcommand)]
    pub corpus: Corpus,

    /// Output file [default: <out-dir>/<corpus>.jsonl].
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(tag = "corpus", rename_all = "snake_case")]
pub enum Corpus {
    /// Binary sentiment sentences from polarity cue words and filler.
    Sentiment(SentimentArgs),
    /// Template premise/hypothesis pairs for one shallow heuristic.
    Hans(HansArgs),
    /// Two-way NLI training mixture over the same lexicon.
    Nli(NliArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct SentimentArgs {
    #[arg(long, default_value_t = 2000)]
    pub count: usize,
    /// Token planted into most examples of the positive class.
    #[arg(long)]
    pub plant: Option<String>,
    #[arg(long, default_value_t = 0.9)]
    pub plant_fraction: f64,
    /// Probability that a cue word has the opposite polarity.
    #[arg(long, default_value_t = 0.2)]
    pub cue_noise: f64,
    /// Zipf exponent of filler words (0 = uniform).
    #[arg(long, default_value_t = 1.0)]
    pub filler_zipf: f64,
    /// Cue words per polarity.
    #[arg(long, default_value_t = 50)]
    pub cue_words: usize,
    #[arg(long, default_value_t = 6)]
    pub min_len: usize,
    #[arg(long, default_value_t = 14)]
    pub max_len: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum HeuristicArg {
    LexicalOverlap,
    Subsequence,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum HansLabel {
    Entailment,
    NonEntailment,
    /// Alternate entailing and non-entailing templates.
    Both,
}

#[derive(Args, Debug, Serialize)]
pub struct HansArgs {
    #[arg(long, value_enum, default_value_t = HeuristicArg::LexicalOverlap)]
    pub heuristic: HeuristicArg,
    #[arg(long, default_value_t = 500)]
    pub count: usize,
    #[arg(long, value_enum, default_value_t = HansLabel::Both)]
    pub label: HansLabel,
    /// Insert negation into every hypothesis (flipping its label).
    #[arg(long)]
    pub negate: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct NliArgs {
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    /// Probability of flipping a label.
    #[arg(long, default_value_t = 0.05)]
    pub label_noise: f64,
}

pub fn run(global: &GlobalOpts, args: &GenerateArgs) -> Result<()> {
    let seed = global.seed;
    let (name, dataset) = match &args.corpus {
        Corpus::Sentiment(a) => (
            "sentiment",
            generate_sentiment(&SentimentConfig {
                count: a.count,
                seed,
                planted_artifact: a.plant.clone(),
                plant_fraction: a.plant_fraction,
                cue_noise: a.cue_noise,
                filler_zipf: a.filler_zipf,
                cue_words: a.cue_words,
                min_len: a.min_len,
                max_len: a.max_len,
                ..SentimentConfig::default()
            })?,
        ),
        Corpus::Hans(a) => ("hans", hans(a, seed)?),
        Corpus::Nli(a) => (
            "nli",
            generate_nli_mixture(&NliMixConfig {
                count: a.count,
                seed,
                label_noise: a.label_noise,
                ..NliMixConfig::default()
            })?,
        ),
    };
    let path = args
        .output
        .clone()
        .unwrap_or_else(|| global.out_dir.join(format!("{name}.jsonl")));
    let mut bytes = Vec::new();
    write_jsonl(&dataset, &mut bytes)?;
    let mut manifest = Manifest::new("generate", global, args)?;
    manifest.write(&path, &bytes)?;
    manifest.finish()?;
    info!("wrote {} examples to {}", dataset.len(), path.display());
    Ok(())
}

fn hans(a: &HansArgs, seed: u64) -> Result<Dataset> {
    let heuristic = match a.heuristic {
        HeuristicArg::LexicalOverlap => Heuristic::LexicalOverlap,
        HeuristicArg::Subsequence => Heuristic::Subsequence,
    };
    let dataset = match a.label {
        HansLabel::Entailment | HansLabel::NonEntailment => {
            let spec = HansTemplateSpec::new(heuristic, a.label == HansLabel::Entailment);
            generate_hans_style(&spec, a.count, seed)?
        }
        HansLabel::Both => {
            let ent = a.count.div_ceil(2);
            let mut all = generate_hans_style(&HansTemplateSpec::new(heuristic, true), ent, seed)?
                .into_examples();
            if a.count > ent {
                let n = generate_hans_style(
                    &HansTemplateSpec::new(heuristic, false),
                    a.count - ent,
                    seed,
                )?;
                // interleave so any prefix is close to balanced
                let mut mixed = Vec::with_capacity(a.count);
                let mut ne = n.into_examples().into_iter();
                for ex in all {
                    mixed.push(ex);
                    mixed.extend(ne.next());
                }
                all = mixed;
            }
            Dataset::new(all, influx_core::LabelScheme::nli_collapsed().names)?
        }
    };
    if !a.negate {
        return Ok(dataset);
    }
    let lexicon = HansLexicon::default();
    let mut negated = Vec::with_capacity(dataset.len());
    for ex in dataset.iter() {
        match negate_hypothesis(ex, &lexicon) {
            Ok(n) => negated.push(n),
            Err(e) => warn!("skipping `{}`: {e}", ex.id),
        }
    }
    dataset
        .with_examples(negated)
        .context("building the negated dataset")
}
