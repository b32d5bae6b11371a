use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use anyhow::{bail, Context, Result};
use influx_core::corpus::load_jsonl;
use influx_core::{Dataset, Error, ExampleKind, LabelScheme};

/// Reads the first non-empty record to decide between the single-text and
/// pair schemas.
pub fn detect_schema(path: &Path) -> Result<ExampleKind> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    for line in BufReader::new(file).lines() {
        let line = line.with_context(|| format!("reading {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value = serde_json::from_str(&line)
            .with_context(|| format!("{}: first record is not JSON", path.display()))?;
        return Ok(
            if v.get("premise").is_some() || v.get("hypothesis").is_some() {
                ExampleKind::Pair
            } else {
                ExampleKind::Single
            },
        );
    }
    bail!("{} contains no records", path.display())
}

/// Loads a training file. Pair data uses the collapsed two-way NLI labels;
/// single-text data uses `negative`/`positive` when every label fits and
/// first-occurrence order otherwise.
pub fn load_train(path: &Path) -> Result<Dataset> {
    let kind = detect_schema(path)?;
    let loaded = match kind {
        ExampleKind::Pair => load_jsonl(path, kind, Some(&LabelScheme::nli_collapsed())),
        ExampleKind::Single => match load_jsonl(path, kind, Some(&LabelScheme::sentiment())) {
            Err(Error::Parse { .. }) => load_jsonl(path, kind, None),
            other => other,
        },
    };
    loaded.with_context(|| format!("loading {}", path.display()))
}

/// Loads an evaluation file with the label names of `train`.
pub fn load_like(path: &Path, train: &Dataset) -> Result<Dataset> {
    let kind = detect_schema(path)?;
    if Some(kind) != train.kind() {
        bail!(
            "{} holds {} examples but the training data holds {}",
            path.display(),
            kind.as_str(),
            train.kind().map(|k| k.as_str()).unwrap_or("no")
        );
    }
    let scheme = if kind == ExampleKind::Pair {
        LabelScheme::nli_collapsed()
    } else {
        LabelScheme::from_names(train.label_names())
    };
    load_jsonl(path, kind, Some(&scheme)).with_context(|| format!("loading {}", path.display()))
}

/// Percentage with two decimals.
pub fn percent(x: f64) -> String {
    format!("{:.2}%", 100.0 * x)
}
