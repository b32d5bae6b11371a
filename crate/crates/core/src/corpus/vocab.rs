use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// Token-to-id map. Id 0 is reserved for unknown tokens and never assigned to
/// a real token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabRepr", into = "VocabRepr")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

pub const UNKNOWN_ID: u32 = 0;
const UNKNOWN_TOKEN: &str = "<unk>";

impl Vocabulary {
    /// Tokens seen at least `min_count` times in `train`, ordered by
    /// descending count then lexicographically.
    pub fn build(train: &Dataset, min_count: usize) -> Result<Self> {
        if min_count == 0 {
            return Err(Error::invalid("min_count must be at least 1"));
        }
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for ex in train {
            for tok in ex.tokens() {
                *counts.entry(tok).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .collect();
        // BTreeMap order is lexicographic; a stable sort keeps it for ties.
        ranked.sort_by(|a, b| b.1.cmp(&a.1));
        Ok(Self::from_tokens(
            ranked.into_iter().map(|(t, _)| t.to_string()),
        ))
    }

    /// Builds from an ordered token list; the first token gets id 1.
    pub fn from_tokens(tokens: impl IntoIterator<Item = String>) -> Self {
        let mut all = vec![UNKNOWN_TOKEN.to_string()];
        all.extend(tokens);
        let index = all
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary { tokens: all, index }
    }

    /// Number of ids including the reserved unknown id.
    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNKNOWN_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        if id == UNKNOWN_ID {
            return None;
        }
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Real tokens in id order (id 1 first).
    pub fn tokens(&self) -> &[String] {
        &self.tokens[1..]
    }

    pub fn encode<'a>(&self, tokens: impl IntoIterator<Item = &'a str>) -> Vec<u32> {
        tokens.into_iter().map(|t| self.id(t)).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct VocabRepr {
    tokens: Vec<String>,
}

impl From<VocabRepr> for Vocabulary {
    fn from(r: VocabRepr) -> Self {
        Vocabulary::from_tokens(r.tokens)
    }
}

impl From<Vocabulary> for VocabRepr {
    fn from(v: Vocabulary) -> Self {
        VocabRepr {
            tokens: v.tokens[1..].to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{tokenize, Example};

    fn corpus(texts: &[&str]) -> Dataset {
        let ex = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Example::single(format!("e{i}"), tokenize(t), 0).unwrap())
            .collect();
        Dataset::new(ex, vec!["only".into()]).unwrap()
    }

    #[test]
    fn ids_follow_count_then_lexicographic_order() {
        let v = Vocabulary::build(&corpus(&["a a b"]), 1).unwrap();
        assert_eq!(v.size(), 3);
        assert_eq!(v.id("a"), 1);
        assert_eq!(v.id("b"), 2);
        assert_eq!(v.id("zzz"), UNKNOWN_ID);

        let v = Vocabulary::build(&corpus(&["a a b"]), 2).unwrap();
        assert_eq!(v.size(), 2);
        assert_eq!(v.id("a"), 1);
        assert_eq!(v.id("b"), UNKNOWN_ID);

        let v = Vocabulary::build(&corpus(&["d c", "b a"]), 1).unwrap();
        assert_eq!(v.tokens(), ["a", "b", "c", "d"]);
    }

    #[test]
    fn reserved_id_never_maps_from_a_real_token() {
        let v = Vocabulary::from_tokens(["<unk>".to_string(), "x".to_string()]);
        assert_ne!(v.id("<unk>"), UNKNOWN_ID);
        assert_eq!(v.token(UNKNOWN_ID), None);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Vocabulary::build(&corpus(&["a"]), 0).is_err());
        let empty = Dataset::new(vec![], vec!["x".into()]).unwrap();
        assert!(matches!(
            Vocabulary::build(&empty, 1),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn serde_round_trip() {
        let v = Vocabulary::build(&corpus(&["the cat saw the dog"]), 1).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(v, back);
    }
}
