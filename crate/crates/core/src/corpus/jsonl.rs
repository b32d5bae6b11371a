use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{tokenize, Dataset, Example, ExampleKind, LabelScheme};
use crate::error::{Error, Result};

#[derive(Deserialize)]
#[serde(untagged)]
enum RawLabel {
    Name(String),
    Index(i64),
}

impl RawLabel {
    fn into_string(self) -> String {
        match self {
            RawLabel::Name(s) => s,
            RawLabel::Index(i) => i.to_string(),
        }
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<String>,
    text: Option<String>,
    premise: Option<String>,
    hypothesis: Option<String>,
    label: RawLabel,
    genre: Option<String>,
}

#[derive(Serialize)]
struct SingleOut<'a> {
    id: &'a str,
    text: String,
    label: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    genre: Option<&'a str>,
}

#[derive(Serialize)]
struct PairOut<'a> {
    id: &'a str,
    premise: String,
    hypothesis: String,
    label: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    genre: Option<&'a str>,
}

/// Reads a JSONL dataset from disk. See [`read_jsonl`].
pub fn load_jsonl(
    path: impl AsRef<Path>,
    schema: ExampleKind,
    labels: Option<&LabelScheme>,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_jsonl(BufReader::new(file), path, schema, labels)
}

/// Parses one record per line. `single` reads `{id?, text, label}`, `pair`
/// reads `{id?, premise, hypothesis, label}`. Missing ids become `line-<k>`.
///
/// Without an explicit scheme, label names are assigned indices in order of
/// first occurrence. With one, unmapped labels are an error.
pub fn read_jsonl<R: BufRead>(
    reader: R,
    path: &Path,
    schema: ExampleKind,
    labels: Option<&LabelScheme>,
) -> Result<Dataset> {
    let mut examples = Vec::new();
    let mut names: Vec<String> = labels.map(|s| s.names.clone()).unwrap_or_default();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RawRecord =
            serde_json::from_str(&line).map_err(|e| parse_err(lineno, e.to_string()))?;
        let raw_label = rec.label.into_string();
        let label = match labels {
            Some(scheme) => scheme
                .index(&raw_label)
                .ok_or_else(|| parse_err(lineno, format!("unknown label `{raw_label}`")))?,
            None => match names.iter().position(|n| *n == raw_label) {
                Some(i) => i,
                None => {
                    names.push(raw_label);
                    names.len() - 1
                }
            },
        };
        let id = rec.id.unwrap_or_else(|| format!("line-{lineno}"));
        let example = match schema {
            ExampleKind::Single => {
                let text = rec
                    .text
                    .ok_or_else(|| parse_err(lineno, "missing field `text`".into()))?;
                Example {
                    id,
                    kind: ExampleKind::Single,
                    tokens_a: tokenize(&text),
                    tokens_b: None,
                    label,
                    genre: rec.genre,
                }
            }
            ExampleKind::Pair => {
                let premise = rec
                    .premise
                    .ok_or_else(|| parse_err(lineno, "missing field `premise`".into()))?;
                let hypothesis = rec
                    .hypothesis
                    .ok_or_else(|| parse_err(lineno, "missing field `hypothesis`".into()))?;
                Example {
                    id,
                    kind: ExampleKind::Pair,
                    tokens_a: tokenize(&premise),
                    tokens_b: Some(tokenize(&hypothesis)),
                    label,
                    genre: rec.genre,
                }
            }
        };
        example
            .validate()
            .map_err(|e| parse_err(lineno, e.to_string()))?;
        examples.push(example);
    }
    if names.is_empty() {
        names.push("unlabeled".into());
    }
    Dataset::new(examples, names)
}

/// Writes the dataset in the same schema [`read_jsonl`] accepts, with labels
/// rendered by name.
pub fn write_jsonl<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    let names = dataset.label_names();
    for ex in dataset {
        let label = names[ex.label].as_str();
        let line = match &ex.tokens_b {
            None => serde_json::to_string(&SingleOut {
                id: &ex.id,
                text: ex.tokens_a.join(" "),
                label,
                genre: ex.genre.as_deref(),
            })?,
            Some(b) => serde_json::to_string(&PairOut {
                id: &ex.id,
                premise: ex.tokens_a.join(" "),
                hypothesis: b.join(" "),
                label,
                genre: ex.genre.as_deref(),
            })?,
        };
        writeln!(out, "{line}").map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}
