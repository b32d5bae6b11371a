//! Examples, datasets, tokenization and synthetic corpora.

mod example;
pub mod hans;
mod jsonl;
pub mod nli;
pub mod sentiment;
mod tokenize;
mod vocab;

pub use example::{Dataset, Example, ExampleKind, LabelScheme, ENTAILMENT, NON_ENTAILMENT};
pub use hans::{generate_hans_style, negate_hypothesis, HansLexicon, HansTemplateSpec, Heuristic};
pub use jsonl::{load_jsonl, read_jsonl, write_jsonl};
pub use nli::{generate_nli_mixture, NliMixConfig};
pub use sentiment::{generate_sentiment, generate_sentiment_toy, SentimentConfig};
pub use tokenize::tokenize;
pub use vocab::Vocabulary;
