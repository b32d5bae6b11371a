use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label index of `entailment` in the collapsed two-way NLI scheme.
pub const ENTAILMENT: usize = 0;
/// Label index of `non-entailment` in the collapsed two-way NLI scheme.
pub const NON_ENTAILMENT: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleKind {
    Single,
    Pair,
}

impl ExampleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExampleKind::Single => "single",
            ExampleKind::Pair => "pair",
        }
    }
}

/// One labeled instance: a single text, or a premise/hypothesis pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub kind: ExampleKind,
    /// The text, or the premise for pairs.
    pub tokens_a: Vec<String>,
    /// The hypothesis; present iff `kind == Pair`.
    pub tokens_b: Option<Vec<String>>,
    pub label: usize,
    /// Carried through I/O, never used in computation.
    pub genre: Option<String>,
}

impl Example {
    pub fn single(id: impl Into<String>, tokens: Vec<String>, label: usize) -> Result<Self> {
        let ex = Example {
            id: id.into(),
            kind: ExampleKind::Single,
            tokens_a: tokens,
            tokens_b: None,
            label,
            genre: None,
        };
        ex.validate()?;
        Ok(ex)
    }

    pub fn pair(
        id: impl Into<String>,
        premise: Vec<String>,
        hypothesis: Vec<String>,
        label: usize,
    ) -> Result<Self> {
        let ex = Example {
            id: id.into(),
            kind: ExampleKind::Pair,
            tokens_a: premise,
            tokens_b: Some(hypothesis),
            label,
            genre: None,
        };
        ex.validate()?;
        Ok(ex)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::InvalidExample {
                id: self.id.clone(),
                reason: reason.to_string(),
            })
        };
        if self.tokens_a.is_empty() {
            return fail("first text is empty");
        }
        match (self.kind, &self.tokens_b) {
            (ExampleKind::Single, None) => Ok(()),
            (ExampleKind::Single, Some(_)) => fail("single example carries a hypothesis"),
            (ExampleKind::Pair, None) => fail("pair example has no hypothesis"),
            (ExampleKind::Pair, Some(b)) if b.is_empty() => fail("hypothesis is empty"),
            (ExampleKind::Pair, Some(_)) => Ok(()),
        }
    }

    pub fn premise(&self) -> &[String] {
        &self.tokens_a
    }

    pub fn hypothesis(&self) -> Option<&[String]> {
        self.tokens_b.as_deref()
    }

    /// Total number of token positions (premise then hypothesis for pairs).
    pub fn len(&self) -> usize {
        self.tokens_a.len() + self.tokens_b.as_ref().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Tokens of the concatenated premise + hypothesis stream.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens_a
            .iter()
            .chain(self.tokens_b.iter().flatten())
            .map(String::as_str)
    }

    pub fn contains_token(&self, token: &str) -> bool {
        self.tokens().any(|t| t == token)
    }

    /// Text rendering used by reports: `P: ... H: ...` for pairs.
    pub fn display_text(&self) -> String {
        match &self.tokens_b {
            None => self.tokens_a.join(" "),
            Some(b) => format!("P: {} H: {}", self.tokens_a.join(" "), b.join(" ")),
        }
    }
}

/// Maps raw label strings onto class indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelScheme {
    pub names: Vec<String>,
    pub map: BTreeMap<String, usize>,
}

impl LabelScheme {
    /// Identity scheme: each name maps to its own position.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Self {
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        let map = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        LabelScheme { names, map }
    }

    /// Two-way NLI: neutral and contradiction collapse onto non-entailment.
    pub fn nli_collapsed() -> Self {
        let mut scheme = LabelScheme::from_names(&["entailment", "non-entailment"]);
        scheme.map.insert("neutral".into(), NON_ENTAILMENT);
        scheme.map.insert("contradiction".into(), NON_ENTAILMENT);
        scheme.map.insert("non_entailment".into(), NON_ENTAILMENT);
        scheme
    }

    pub fn sentiment() -> Self {
        LabelScheme::from_names(&["negative", "positive"])
    }

    pub fn num_classes(&self) -> usize {
        self.names.len()
    }

    pub fn index(&self, raw: &str) -> Option<usize> {
        self.map.get(raw).copied()
    }
}

/// An ordered collection of examples. Index `i` is the canonical training
/// index used by influence scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    examples: Vec<Example>,
    label_names: Vec<String>,
}

impl Dataset {
    pub fn new(examples: Vec<Example>, label_names: Vec<String>) -> Result<Self> {
        if label_names.is_empty() {
            return Err(Error::InvalidDataset("no classes".into()));
        }
        let mut ids = HashSet::with_capacity(examples.len());
        let kind = examples.first().map(|e| e.kind);
        for ex in &examples {
            ex.validate()?;
            if Some(ex.kind) != kind {
                return Err(Error::InvalidDataset(format!(
                    "example `{}` is a {} example in a {} dataset",
                    ex.id,
                    ex.kind.as_str(),
                    kind.map_or("?", ExampleKind::as_str)
                )));
            }
            if ex.label >= label_names.len() {
                return Err(Error::InvalidDataset(format!(
                    "example `{}` has label {} but there are {} classes",
                    ex.id,
                    ex.label,
                    label_names.len()
                )));
            }
            if !ids.insert(ex.id.as_str()) {
                return Err(Error::InvalidDataset(format!("duplicate id `{}`", ex.id)));
            }
        }
        Ok(Dataset {
            examples,
            label_names,
        })
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn into_examples(self) -> Vec<Example> {
        self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    /// `None` for an empty dataset.
    pub fn kind(&self) -> Option<ExampleKind> {
        self.examples.first().map(|e| e.kind)
    }

    pub fn get(&self, index: usize) -> Option<&Example> {
        self.examples.get(index)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Example> {
        self.examples.iter()
    }

    /// Copy of the dataset without the given canonical indices; order is kept.
    pub fn without(&self, exclude: &std::collections::BTreeSet<usize>) -> Dataset {
        let examples = self
            .examples
            .iter()
            .enumerate()
            .filter(|(i, _)| !exclude.contains(i))
            .map(|(_, e)| e.clone())
            .collect();
        Dataset {
            examples,
            label_names: self.label_names.clone(),
        }
    }

    /// Copy with examples replaced; labels and names are revalidated.
    pub fn with_examples(&self, examples: Vec<Example>) -> Result<Dataset> {
        Dataset::new(examples, self.label_names.clone())
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for e in &self.examples {
            counts[e.label] += 1;
        }
        counts
    }
}

impl<'a> IntoIterator for &'a Dataset {
    type Item = &'a Example;
    type IntoIter = std::slice::Iter<'a, Example>;

    fn into_iter(self) -> Self::IntoIter {
        self.examples.iter()
    }
}
