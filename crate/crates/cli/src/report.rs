use std::path::Path;

use anyhow::Result;
use serde::Serialize;

use crate::manifest::Manifest;
use crate::Format;

/// One long-format report row.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub experiment: String,
    pub test_id: String,
    pub condition: String,
    pub granularity: String,
    pub value: f64,
}

impl Row {
    pub fn new(
        experiment: &str,
        test_id: &str,
        condition: &str,
        granularity: impl ToString,
        value: f64,
    ) -> Self {
        Row {
            experiment: experiment.to_string(),
            test_id: test_id.to_string(),
            condition: condition.to_string(),
            granularity: granularity.to_string(),
            value,
        }
    }
}

/// Serialises `records` as CSV (RFC 4180) or a JSON array, by `format`.
/// `stem` gets the matching extension.
pub fn write_records<T: Serialize>(
    manifest: &mut Manifest,
    dir: &Path,
    stem: &str,
    format: Format,
    records: &[T],
) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in records {
                w.serialize(r)?;
            }
            let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
            manifest.write(&dir.join(format!("{stem}.csv")), &bytes)
        }
        Format::Json => write_json(manifest, &dir.join(format!("{stem}.json")), &records),
    }
}

pub fn write_json(manifest: &mut Manifest, path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    manifest.write(path, text.as_bytes())
}

/// Signed scientific notation with three significant digits, e.g. `+3.05e-3`.
pub fn sci(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:+.2e}")
}

/// Makes an example id safe to use as a file name.
pub fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}
