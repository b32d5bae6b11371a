use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use influx_core::model::load_checkpoint;
use influx_core::saliency::{extreme_tokens, saliency_map};
use influx_core::{Dataset, Example, InfluenceResult, ModelParams, SaliencyMap};
use log::info;
use serde::Serialize;

use crate::data::{load_like, load_train};
use crate::influence::{CachedInfluence, MethodArgs};
use crate::manifest::Manifest;
use crate::report::{file_stem, write_json, write_records};
use crate::GlobalOpts;

#[derive(ValueEnum, Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ExplainMethod {
    Saliency,
    Influence,
    Both,
}

#[derive(Args, Debug, Serialize)]
pub struct ExplainArgs {
    /// Checkpoint written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Training data the checkpoint was trained on.
    #[arg(long)]
    pub train: PathBuf,
    /// Examples to explain.
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, value_enum, default_value_t = ExplainMethod::Both)]
    pub method: ExplainMethod,
    /// Explain only the first N test examples.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Supporting training examples shown per test example.
    #[arg(long, default_value_t = 4)]
    pub top_k: usize,
    /// Opposing training examples shown per test example.
    #[arg(long, default_value_t = 2)]
    pub bottom_k: usize,
    #[command(flatten)]
    pub influence: MethodArgs,
}

#[derive(Serialize)]
struct SaliencyRow<'a> {
    example_id: &'a str,
    position: usize,
    token: &'a str,
    score: f64,
}

#[derive(Serialize)]
struct InfluenceRow<'a> {
    train_index: usize,
    train_id: &'a str,
    raw: f64,
    z: f64,
}

#[derive(Serialize)]
struct Exemplar {
    train_index: usize,
    train_id: String,
    z: f64,
    text: String,
}

#[derive(Serialize, Default)]
struct TestSummary {
    test_id: String,
    text: String,
    gold: String,
    predicted: String,
    confidence: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    saliency_extremes: Option<[(String, String); 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    influence_key: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    converged: Option<bool>,
    most_supporting: Vec<Exemplar>,
    most_opposing: Vec<Exemplar>,
}

pub fn load_model(path: &std::path::Path) -> Result<ModelParams> {
    Ok(load_checkpoint(path)
        .with_context(|| format!("loading checkpoint {}", path.display()))?
        .params)
}

pub fn limited(tests: Dataset, limit: Option<usize>) -> Vec<Example> {
    let mut v = tests.into_examples();
    if let Some(n) = limit {
        v.truncate(n);
    }
    v
}

pub fn run(global: &GlobalOpts, args: &ExplainArgs) -> Result<()> {
    let mut manifest = Manifest::new("explain", global, args)?;
    for p in [&args.model, &args.train, &args.test] {
        manifest.input(p)?;
    }
    let params = load_model(&args.model)?;
    let train = load_train(&args.train)?;
    let tests = limited(load_like(&args.test, &train)?, args.limit);
    let names = train.label_names().to_vec();
    let do_saliency = args.method != ExplainMethod::Influence;
    let do_influence = args.method != ExplainMethod::Saliency;

    let method = args.influence.method(global.seed);
    let source = CachedInfluence::new(global, &params, &train, method)?;
    let dir = &global.out_dir;
    let mut saliency_rows: Vec<(String, usize, String, f64)> = Vec::new();
    let mut summaries = Vec::new();
    let mut text = String::new();

    for test in &tests {
        let probs = params.forward(test)?;
        let predicted = influx_core::model::argmax(&probs);
        let mut summary = TestSummary {
            test_id: test.id.clone(),
            text: test.display_text(),
            gold: names[test.label].clone(),
            predicted: names[predicted].clone(),
            confidence: probs[predicted],
            ..TestSummary::default()
        };
        writeln!(text, "== {}", test.id)?;
        writeln!(text, "text: {}", summary.text)?;
        writeln!(
            text,
            "gold: {}  predicted: {} (p = {:.4})",
            summary.gold, summary.predicted, summary.confidence
        )?;

        if do_saliency {
            let map = saliency_map(&params, test)?;
            render_saliency(&mut text, &map)?;
            let ext = extreme_tokens(&map)?;
            summary.saliency_extremes = Some(ext.named().map(|(name, pos)| {
                (
                    name.to_string(),
                    map.token_at(pos).unwrap_or_default().to_string(),
                )
            }));
            for s in &map.scores {
                saliency_rows.push((map.example_id.clone(), s.position, s.token.clone(), s.score));
            }
        }

        if do_influence {
            let result = source.get(test)?;
            write_influence(&mut manifest, global, &train, &result)?;
            summary.influence_key = Some(result.cache_key());
            summary.converged = result.converged;
            summary.most_supporting = exemplars(&train, &result, result.top(args.top_k));
            summary.most_opposing = exemplars(&train, &result, result.bottom(args.bottom_k));
            writeln!(text, "influence ({}):", result.method)?;
            writeln!(text, "  Most supporting")?;
            for e in &summary.most_supporting {
                writeln!(text, "    {:+.3}  [{}] {}", e.z, e.train_id, e.text)?;
            }
            writeln!(text, "  Most opposing")?;
            for e in &summary.most_opposing {
                writeln!(text, "    {:+.3}  [{}] {}", e.z, e.train_id, e.text)?;
            }
        }
        writeln!(text)?;
        summaries.push(summary);
    }

    if do_saliency {
        let rows: Vec<SaliencyRow> = saliency_rows
            .iter()
            .map(|(id, position, token, score)| SaliencyRow {
                example_id: id,
                position: *position,
                token,
                score: *score,
            })
            .collect();
        write_records(&mut manifest, dir, "saliency", global.format, &rows)?;
    }
    manifest.write(&dir.join("explain.txt"), text.as_bytes())?;
    write_json(&mut manifest, &dir.join("explain.summary.json"), &summaries)?;
    manifest.finish()?;
    print!("{text}");
    info!("explained {} test examples", tests.len());
    Ok(())
}

fn render_saliency(out: &mut String, map: &SaliencyMap) -> Result<()> {
    let parts: Vec<String> = map
        .scores
        .iter()
        .map(|s| format!("{}({:+.3})", s.token, s.score))
        .collect();
    writeln!(out, "saliency: {}", parts.join(" "))?;
    Ok(())
}

fn exemplars(train: &Dataset, result: &InfluenceResult, indices: Vec<usize>) -> Vec<Exemplar> {
    indices
        .into_iter()
        .map(|i| {
            let ex = &train.examples()[i];
            Exemplar {
                train_index: i,
                train_id: ex.id.clone(),
                z: result.z_scores[i],
                text: ex.display_text(),
            }
        })
        .collect()
}

fn write_influence(
    manifest: &mut Manifest,
    global: &GlobalOpts,
    train: &Dataset,
    result: &InfluenceResult,
) -> Result<()> {
    let rows: Vec<InfluenceRow> = result
        .ranked()
        .into_iter()
        .map(|i| InfluenceRow {
            train_index: i,
            train_id: &train.examples()[i].id,
            raw: result.raw_scores[i],
            z: result.z_scores[i],
        })
        .collect();
    let dir = global.out_dir.join("influence");
    write_records(
        manifest,
        &dir,
        &file_stem(&result.test_example_id),
        global.format,
        &rows,
    )
}
