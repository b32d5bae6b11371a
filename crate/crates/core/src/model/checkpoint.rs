use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ArchSpec, ModelParams, ParamLayout, TrainConfig};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::hashing::{f64s_to_hex, hex_to_f64s, ContentHasher};

const FORMAT: &str = "influx-checkpoint";
const VERSION: u32 = 1;

/// Trained parameters plus the configuration that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub train_config: Option<TrainConfig>,
}

#[derive(Serialize, Deserialize)]
struct Repr {
    format: String,
    version: u32,
    arch: ArchSpec,
    layout: ParamLayout,
    l2_lambda: f64,
    train_config: Option<TrainConfig>,
    vocab: Vocabulary,
    /// IEEE-754 bits, 16 hex digits per parameter.
    theta: String,
    content_hash: String,
}

impl ModelParams {
    /// SHA-256 over architecture, vocabulary, ridge weight and the exact bits
    /// of `theta`. Used to key cached influence results.
    pub fn content_hash(&self) -> String {
        let mut h = ContentHasher::new();
        h.str(&serde_json::to_string(&self.arch).unwrap_or_default());
        for t in self.vocab.tokens() {
            h.str(t);
        }
        h.f64s(&[self.l2_lambda]).f64s(&self.theta);
        h.finish()
    }
}

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    let p = &checkpoint.params;
    let repr = Repr {
        format: FORMAT.into(),
        version: VERSION,
        arch: p.arch.clone(),
        layout: p.layout.clone(),
        l2_lambda: p.l2_lambda,
        train_config: checkpoint.train_config.clone(),
        vocab: (*p.vocab).clone(),
        theta: f64s_to_hex(&p.theta),
        content_hash: p.content_hash(),
    };
    let text = serde_json::to_string_pretty(&repr)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let repr: Repr = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    if repr.format != FORMAT || repr.version != VERSION {
        return Err(bad(format!(
            "unsupported checkpoint format {} v{}",
            repr.format, repr.version
        )));
    }
    repr.arch.validate()?;
    let theta = hex_to_f64s(&repr.theta).map_err(|e| bad(e.to_string()))?;
    if repr.layout != repr.arch.layout() || theta.len() != repr.layout.total() {
        return Err(bad(
            "parameter layout does not match the architecture".into()
        ));
    }
    if repr.vocab.size() != repr.arch.vocab_size {
        return Err(bad("vocabulary size does not match the architecture".into()));
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(bad("non-finite parameter".into()));
    }
    let params = ModelParams {
        arch: repr.arch,
        theta,
        layout: repr.layout,
        vocab: Arc::new(repr.vocab),
        l2_lambda: repr.l2_lambda,
    };
    if params.content_hash() != repr.content_hash {
        return Err(bad("content hash mismatch".into()));
    }
    Ok(Checkpoint {
        params,
        train_config: repr.train_config,
    })
}
