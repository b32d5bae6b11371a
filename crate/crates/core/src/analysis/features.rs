//! Artifact features of premise/hypothesis pairs.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::Example;
use crate::error::{Error, Result};
use crate::hashing::ContentHasher;

/// Default negation lexicon for detection.
pub const NEGATION_WORDS: &[&str] = &["not", "n't", "no", "never", "none", "nothing", "nobody"];

fn hypothesis(example: &Example) -> Result<&[String]> {
    example
        .hypothesis()
        .ok_or(Error::KindMismatch { expected: "pair" })
}

/// Fraction of hypothesis token types that also occur in the premise.
pub fn lexical_overlap_rate(example: &Example) -> Result<f64> {
    let h: BTreeSet<&str> = hypothesis(example)?.iter().map(String::as_str).collect();
    let p: HashSet<&str> = example.premise().iter().map(String::as_str).collect();
    let shared = h.iter().filter(|t| p.contains(*t)).count();
    Ok(shared as f64 / h.len() as f64)
}

/// 1 if any lexicon token occurs in the hypothesis, else 0.
pub fn negation_feature<S: AsRef<str>>(example: &Example, lexicon: &[S]) -> Result<f64> {
    let h = hypothesis(example)?;
    let hit = h.iter().any(|t| lexicon.iter().any(|w| w.as_ref() == t));
    Ok(if hit { 1.0 } else { 0.0 })
}

/// A named per-example feature used by the artifact scan.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Overlap,
    Negation {
        lexicon: Vec<String>,
    },
    /// Label-independent coin flip keyed by example id.
    Random {
        seed: u64,
    },
    /// 1 if the token occurs anywhere in the example.
    Token {
        token: String,
    },
}

impl Feature {
    pub fn negation() -> Self {
        Feature::Negation {
            lexicon: NEGATION_WORDS.iter().map(|w| w.to_string()).collect(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Feature::Overlap => "overlap".into(),
            Feature::Negation { .. } => "negation".into(),
            Feature::Random { .. } => "random".into(),
            Feature::Token { token } => format!("token:{token}"),
        }
    }

    /// Parses `overlap`, `negation`, `random` or `token:<word>`.
    pub fn parse(name: &str, seed: u64) -> Result<Self> {
        if let Some(token) = name.strip_prefix("token:") {
            return Ok(Feature::Token {
                token: token.to_string(),
            });
        }
        match name {
            "overlap" => Ok(Feature::Overlap),
            "negation" => Ok(Feature::negation()),
            "random" => Ok(Feature::Random { seed }),
            other => Err(Error::invalid(format!("unknown feature `{other}`"))),
        }
    }

    pub fn value(&self, example: &Example) -> Result<f64> {
        match self {
            Feature::Overlap => lexical_overlap_rate(example),
            Feature::Negation { lexicon } => negation_feature(example, lexicon),
            Feature::Random { seed } => {
                let h = ContentHasher::new().u64(*seed).str(&example.id).finish();
                Ok(if h.as_bytes()[0].is_multiple_of(2) {
                    0.0
                } else {
                    1.0
                })
            }
            Feature::Token { token } => Ok(if example.contains_token(token) {
                1.0
            } else {
                0.0
            }),
        }
    }
}
