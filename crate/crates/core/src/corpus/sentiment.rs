//! Toy binary sentiment corpus with an optional planted spurious token.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, Example, LabelScheme};
use crate::error::{Error, Result};

pub const NEGATIVE: usize = 0;
pub const POSITIVE: usize = 1;

const POSITIVE_WORDS: &[&str] = &[
    "great",
    "wonderful",
    "brilliant",
    "delightful",
    "charming",
    "moving",
    "superb",
    "funny",
    "touching",
    "beautiful",
    "excellent",
    "engaging",
    "clever",
    "gripping",
    "fresh",
    "warm",
    "stunning",
    "enjoyable",
    "masterful",
    "thoughtful",
    "lovely",
    "powerful",
    "witty",
    "vivid",
    "heartfelt",
    "inspired",
    "smart",
    "sharp",
    "rich",
    "memorable",
    "joyous",
    "elegant",
    "luminous",
    "tender",
    "riveting",
    "satisfying",
    "graceful",
    "playful",
    "honest",
    "bold",
    "dazzling",
    "sweet",
    "uplifting",
    "compelling",
    "fascinating",
    "exhilarating",
    "solid",
    "refreshing",
    "winning",
    "poignant",
];

const NEGATIVE_WORDS: &[&str] = &[
    "boring",
    "dull",
    "awful",
    "terrible",
    "tedious",
    "bland",
    "clumsy",
    "predictable",
    "stale",
    "mediocre",
    "lifeless",
    "pointless",
    "messy",
    "tiresome",
    "flat",
    "weak",
    "shallow",
    "silly",
    "lame",
    "forgettable",
    "dreary",
    "sloppy",
    "hollow",
    "bloated",
    "annoying",
    "painful",
    "muddled",
    "inept",
    "listless",
    "contrived",
    "grating",
    "overlong",
    "cheap",
    "lazy",
    "incoherent",
    "sluggish",
    "uneven",
    "numbing",
    "trite",
    "ugly",
    "unfunny",
    "derivative",
    "plodding",
    "insipid",
    "witless",
    "joyless",
    "cynical",
    "murky",
    "stiff",
    "vapid",
];

// Ordered roughly by how often they should appear.
const FILLER_WORDS: &[&str] = &[
    "the",
    "a",
    "and",
    "of",
    "is",
    "it",
    "this",
    "film",
    "movie",
    "to",
    "in",
    "that",
    "with",
    "story",
    "its",
    "as",
    "for",
    "but",
    "an",
    "on",
    "characters",
    "director",
    "performance",
    "plot",
    "cast",
    "script",
    "one",
    "all",
    "about",
    "more",
    "than",
    "there",
    "be",
    "so",
    "by",
    "who",
    "from",
    "at",
    "has",
    "his",
    "her",
    "their",
    "what",
    "too",
    "just",
    "much",
    "some",
    "very",
    "like",
    "comedy",
    "drama",
    "audience",
    "screen",
    "scene",
    "scenes",
    "time",
    "life",
    "work",
    "way",
    "picture",
    "moments",
    "ending",
    "dialogue",
    "music",
    "camera",
    "actors",
    "acting",
    "feature",
    "premise",
    "material",
    "narrative",
    "style",
    "tone",
    "pace",
    "humor",
    "sense",
    "effort",
    "minutes",
    "hour",
    "thriller",
    "romance",
    "documentary",
    "sequel",
    "genre",
    "viewers",
    "filmmaker",
    "writer",
    "star",
    "role",
    "lead",
    "ensemble",
    "visuals",
    "effects",
    "score",
    "soundtrack",
    "editing",
    "setting",
    "world",
    "family",
    "city",
    "town",
    "night",
    "day",
    "year",
    "love",
    "war",
    "friendship",
    "journey",
    "history",
    "heart",
    "mind",
    "idea",
    "ideas",
    "characters'",
    "subject",
    "theme",
    "themes",
    "portrait",
    "look",
    "feel",
    "kind",
    "sort",
    "bit",
    "lot",
    "piece",
    "entertainment",
    "experience",
    "version",
    "book",
    "novel",
    "adaptation",
    "remake",
    "animation",
    "thing",
    "things",
    "people",
    "man",
    "woman",
    "kids",
    "children",
    "young",
    "old",
    "new",
    "first",
    "last",
    "final",
    "other",
    "own",
    "long",
    "short",
    "big",
    "small",
    "real",
    "whole",
    "human",
    "modern",
    "classic",
    "french",
    "american",
    "british",
    "summer",
    "holiday",
    "studio",
    "festival",
    "budget",
    "twist",
    "climax",
    "opening",
    "middle",
    "end",
    "tale",
    "fable",
    "mystery",
    "journey's",
    "melodrama",
    "satire",
    "spectacle",
    "character",
    "hero",
    "villain",
    "mother",
    "father",
    "son",
    "daughter",
    "brother",
    "sister",
    "wife",
    "husband",
    "teacher",
    "soldier",
    "detective",
    "when",
    "where",
    "while",
    "after",
    "before",
    "during",
    "through",
    "into",
    "over",
    "under",
    "around",
    "between",
    "against",
    "without",
    "again",
    "still",
    "even",
    "also",
    "only",
    "never",
    "always",
    "often",
    "almost",
    "enough",
    "rather",
    "quite",
    "perhaps",
    "maybe",
    "which",
    "whose",
    "these",
    "those",
    "them",
    "they",
    "we",
    "you",
    "our",
    "your",
    "he",
    "she",
    "him",
    "were",
    "was",
    "are",
    "been",
    "being",
    "have",
    "had",
    "does",
    "did",
    "will",
    "would",
    "could",
    "should",
    "might",
    "must",
    "can",
    "may",
    "makes",
    "made",
    "make",
    "takes",
    "took",
    "gets",
    "got",
    "goes",
    "went",
    "comes",
    "came",
    "seems",
    "seemed",
    "looks",
    "feels",
    "plays",
    "played",
    "tells",
    "told",
    "shows",
    "showed",
    "turns",
    "keeps",
    "gives",
    "gave",
    "finds",
    "found",
    "knows",
    "wants",
    "tries",
    "becomes",
    "leaves",
    "begins",
    "ends",
    "runs",
    "moves",
    "sets",
    "puts",
    "brings",
    "holds",
    "stands",
    "lives",
    "dies",
    "falls",
    "rises",
    "returns",
    "road",
    "house",
    "room",
    "school",
    "country",
    "river",
    "sea",
    "island",
    "village",
    "street",
    "office",
    "church",
    "hospital",
    "prison",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentimentConfig {
    pub count: usize,
    pub seed: u64,
    pub planted_artifact: Option<String>,
    /// Fraction of `plant_class` examples that receive the artifact.
    pub plant_fraction: f64,
    pub plant_class: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability that a cue word is drawn from the opposite polarity.
    pub cue_noise: f64,
    /// Zipf exponent of the filler distribution; 0 is uniform.
    pub filler_zipf: f64,
    /// Number of cue words drawn per polarity, at most 50.
    pub cue_words: usize,
}

impl Default for SentimentConfig {
    fn default() -> Self {
        SentimentConfig {
            count: 2000,
            seed: 0,
            planted_artifact: None,
            plant_fraction: 0.9,
            plant_class: POSITIVE,
            min_len: 6,
            max_len: 14,
            cue_noise: 0.2,
            filler_zipf: 1.0,
            cue_words: POSITIVE_WORDS.len(),
        }
    }
}

/// Shorthand for [`generate_sentiment`] with default shape parameters.
pub fn generate_sentiment_toy(
    count: usize,
    seed: u64,
    planted_artifact: Option<&str>,
) -> Result<Dataset> {
    generate_sentiment(&SentimentConfig {
        count,
        seed,
        planted_artifact: planted_artifact.map(String::from),
        ..SentimentConfig::default()
    })
}

/// Class-balanced sentences mixing polarity cue words with Zipf-weighted
/// filler. Deterministic in the seed.
pub fn generate_sentiment(config: &SentimentConfig) -> Result<Dataset> {
    if config.count == 0 {
        return Err(Error::invalid("count must be at least 1"));
    }
    if config.min_len < 3 || config.max_len < config.min_len {
        return Err(Error::invalid("need 3 <= min_len <= max_len"));
    }
    if !(0.0..=1.0).contains(&config.plant_fraction) || !(0.0..=1.0).contains(&config.cue_noise) {
        return Err(Error::invalid("fractions must lie in [0, 1]"));
    }
    if config.cue_words == 0 || config.cue_words > POSITIVE_WORDS.len() {
        return Err(Error::invalid(format!(
            "cue_words must lie in 1..={}",
            POSITIVE_WORDS.len()
        )));
    }
    if config.plant_class > POSITIVE {
        return Err(Error::invalid("plant_class must be 0 or 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let filler_cdf = zipf_cdf(FILLER_WORDS.len(), config.filler_zipf);

    let mut labels: Vec<usize> = (0..config.count).map(|i| i % 2).collect();
    labels.shuffle(&mut rng);

    let mut examples = Vec::with_capacity(config.count);
    for (i, &label) in labels.iter().enumerate() {
        let len = rng.gen_range(config.min_len..=config.max_len);
        let cues = rng.gen_range(1..=3usize).min(len);
        let mut tokens: Vec<String> = Vec::with_capacity(len + 1);
        for _ in 0..cues {
            let flip = rng.gen_bool(config.cue_noise);
            let positive = (label == POSITIVE) != flip;
            let pool = if positive {
                POSITIVE_WORDS
            } else {
                NEGATIVE_WORDS
            };
            let pool = &pool[..config.cue_words];
            tokens.push(pool.choose(&mut rng).unwrap().to_string());
        }
        while tokens.len() < len {
            let u: f64 = rng.gen();
            let k = filler_cdf
                .partition_point(|&c| c < u)
                .min(FILLER_WORDS.len() - 1);
            tokens.push(FILLER_WORDS[k].to_string());
        }
        tokens.shuffle(&mut rng);
        if let Some(art) = &config.planted_artifact {
            if label == config.plant_class && rng.gen_bool(config.plant_fraction) {
                let at = rng.gen_range(0..=tokens.len());
                tokens.insert(at, art.clone());
            }
        }
        examples.push(Example::single(format!("sent-{i}"), tokens, label)?);
    }
    Dataset::new(examples, LabelScheme::sentiment().names)
}

fn zipf_cdf(n: usize, exponent: f64) -> Vec<f64> {
    let weights: Vec<f64> = (1..=n).map(|r| (r as f64).powf(-exponent)).collect();
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w / total;
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_without_artifact() {
        for count in [1, 2, 7, 100] {
            let ds = generate_sentiment_toy(count, 1, None).unwrap();
            let c = ds.class_counts();
            assert!(c[0].abs_diff(c[1]) <= 1, "{c:?}");
        }
    }

    #[test]
    fn artifact_only_in_planted_class() {
        let ds = generate_sentiment_toy(4000, 9, Some("xyzzy")).unwrap();
        let mut with = [0usize; 2];
        let counts = ds.class_counts();
        for ex in &ds {
            if ex.contains_token("xyzzy") {
                with[ex.label] += 1;
            }
        }
        assert_eq!(with[NEGATIVE], 0);
        let rate = with[POSITIVE] as f64 / counts[POSITIVE] as f64;
        // binomial sd at n=2000 is ~0.0067
        assert!((rate - 0.9).abs() < 0.03, "rate {rate}");
    }

    #[test]
    fn deterministic_in_seed() {
        let a = generate_sentiment_toy(300, 5, Some("xyzzy")).unwrap();
        let b = generate_sentiment_toy(300, 5, Some("xyzzy")).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_sentiment_toy(300, 6, Some("xyzzy")).unwrap());
    }

    #[test]
    fn vocabulary_is_desk_scale() {
        let ds = generate_sentiment_toy(200, 0, None).unwrap();
        let v = crate::corpus::Vocabulary::build(&ds, 1).unwrap();
        assert!((200..=400).contains(&v.size()), "vocab {}", v.size());
    }
}
