//! Desk-scale NLI training mixture.
//!
//! Pairs are built from the HANS lexicon with a controlled correlation between
//! lexical overlap and entailment, and between hypothesis negation and
//! non-entailment, so that models trained on it pick up both artifacts.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::hans::{draw_pair, negate_hypothesis, HansLexicon, Heuristic};
use super::{Dataset, Example, LabelScheme, ENTAILMENT, NON_ENTAILMENT};
use crate::error::{Error, Result};

/// Relative weights of each pair construction. They need not sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliMixConfig {
    pub count: usize,
    pub seed: u64,
    /// Full-overlap pairs from entailing templates (entailment).
    pub overlap_entailing: f64,
    /// Full-overlap pairs from role-swapping templates (non-entailment).
    pub overlap_non_entailing: f64,
    /// Entailing hypothesis with one or two content words replaced (non-entailment).
    pub partial_overlap: f64,
    /// Hypothesis about unrelated people (non-entailment).
    pub unrelated: f64,
    /// Entailing hypothesis with negation inserted (non-entailment).
    pub negated: f64,
    /// Hypothesis generalising one argument to `someone` (entailment).
    pub generalised: f64,
    /// Probability of flipping the final label.
    pub label_noise: f64,
    pub lexicon: HansLexicon,
}

impl Default for NliMixConfig {
    fn default() -> Self {
        NliMixConfig {
            count: 1000,
            seed: 0,
            overlap_entailing: 0.30,
            overlap_non_entailing: 0.10,
            partial_overlap: 0.20,
            unrelated: 0.15,
            negated: 0.15,
            generalised: 0.10,
            label_noise: 0.05,
            lexicon: HansLexicon::default(),
        }
    }
}

#[derive(Clone, Copy)]
enum Construction {
    OverlapEntailing,
    OverlapNonEntailing,
    Partial,
    Unrelated,
    Negated,
    Generalised,
}

pub fn generate_nli_mixture(config: &NliMixConfig) -> Result<Dataset> {
    if config.count == 0 {
        return Err(Error::invalid("count must be at least 1"));
    }
    let weights = [
        (Construction::OverlapEntailing, config.overlap_entailing),
        (
            Construction::OverlapNonEntailing,
            config.overlap_non_entailing,
        ),
        (Construction::Partial, config.partial_overlap),
        (Construction::Unrelated, config.unrelated),
        (Construction::Negated, config.negated),
        (Construction::Generalised, config.generalised),
    ];
    if weights.iter().any(|(_, w)| *w < 0.0 || !w.is_finite()) {
        return Err(Error::invalid(
            "mixture weights must be finite and non-negative",
        ));
    }
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    if total <= 0.0 {
        return Err(Error::invalid("mixture weights sum to zero"));
    }
    let lex = &config.lexicon;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut examples = Vec::with_capacity(config.count);
    for i in 0..config.count {
        let mut u = rng.gen::<f64>() * total;
        let mut which = weights[weights.len() - 1].0;
        for &(c, w) in &weights {
            if u < w {
                which = c;
                break;
            }
            u -= w;
        }
        let heuristic = if rng.gen_bool(0.5) {
            Heuristic::LexicalOverlap
        } else {
            Heuristic::Subsequence
        };
        let id = format!("nli-{i}");
        let (premise, hypothesis, label) = match which {
            Construction::OverlapEntailing => {
                let (p, h) = draw_pair(lex, heuristic, true, &mut rng);
                (p, h, ENTAILMENT)
            }
            Construction::OverlapNonEntailing => {
                let (p, h) = draw_pair(lex, heuristic, false, &mut rng);
                (p, h, NON_ENTAILMENT)
            }
            Construction::Partial => {
                let (p, mut h) = draw_pair(lex, heuristic, true, &mut rng);
                let swaps = rng.gen_range(1..=2);
                replace_content_words(&mut h, &p, swaps, lex, &mut rng);
                (p, h, NON_ENTAILMENT)
            }
            Construction::Unrelated => {
                let (p, _) = draw_pair(lex, heuristic, true, &mut rng);
                let h = fresh_clause(&p, lex, &mut rng);
                (p, h, NON_ENTAILMENT)
            }
            Construction::Negated => {
                let (p, h) = draw_pair(lex, heuristic, true, &mut rng);
                let ex = Example::pair(id.clone(), p, h, ENTAILMENT)?;
                let neg = negate_hypothesis(&ex, lex)?;
                (
                    neg.tokens_a,
                    neg.tokens_b.unwrap_or_default(),
                    NON_ENTAILMENT,
                )
            }
            Construction::Generalised => {
                let (p, mut h) = draw_pair(lex, heuristic, true, &mut rng);
                generalise(&mut h, &mut rng);
                (p, h, ENTAILMENT)
            }
        };
        let label = if rng.gen_bool(config.label_noise) {
            1 - label
        } else {
            label
        };
        examples.push(Example::pair(id, premise, hypothesis, label)?);
    }
    Dataset::new(examples, LabelScheme::nli_collapsed().names)
}

/// Positions of the two nouns and the verb in `the X V the Y`.
fn clause_slots(h: &[String]) -> [usize; 3] {
    let last = h.len() - 1;
    [1, 2.min(last), last]
}

fn replace_content_words(
    h: &mut [String],
    premise: &[String],
    swaps: usize,
    lex: &HansLexicon,
    rng: &mut ChaCha8Rng,
) {
    let mut slots = clause_slots(h).to_vec();
    slots.shuffle(rng);
    for &pos in slots.iter().take(swaps) {
        let is_verb = pos == 2 && lex.verbs.iter().any(|v| v.past == h[pos]);
        for _ in 0..32 {
            let cand = if is_verb {
                lex.verbs.choose(rng).unwrap().past.clone()
            } else {
                lex.patients.choose(rng).unwrap().clone()
            };
            if !premise.contains(&cand) {
                h[pos] = cand;
                break;
            }
        }
    }
}

fn fresh_clause(premise: &[String], lex: &HansLexicon, rng: &mut ChaCha8Rng) -> Vec<String> {
    let pick_noun = |pool: &[String], avoid: &[String], rng: &mut ChaCha8Rng| {
        for _ in 0..64 {
            let w = pool.choose(rng).unwrap();
            if !premise.contains(w) && !avoid.contains(w) {
                return w.clone();
            }
        }
        pool.choose(rng).unwrap().clone()
    };
    let x = pick_noun(&lex.agents, &[], rng);
    let y = pick_noun(&lex.patients, std::slice::from_ref(&x), rng);
    let verb = lex
        .verbs
        .iter()
        .filter(|v| !premise.contains(&v.past))
        .collect::<Vec<_>>()
        .choose(rng)
        .map(|v| v.past.clone())
        .unwrap_or_else(|| lex.verbs[0].past.clone());
    vec!["the".into(), x, verb, "the".into(), y]
}

fn generalise(h: &mut Vec<String>, rng: &mut ChaCha8Rng) {
    // `the X V the Y` -> `someone V the Y` or `the X V someone`
    if h.len() < 5 {
        return;
    }
    if rng.gen_bool(0.5) {
        h.splice(0..2, ["someone".to_string()]);
    } else {
        let n = h.len();
        h.splice(n - 2..n, ["someone".to_string()]);
    }
}
