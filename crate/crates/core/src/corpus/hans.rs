//! Template grammar for HANS-style diagnostic NLI pairs, plus the rule-based
//! hypothesis negator.
//!
//! Every hypothesis is a simple transitive clause `the X V the Y`, so it can
//! be negated by [`negate_hypothesis`].

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, Example, LabelScheme, ENTAILMENT, NON_ENTAILMENT};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heuristic {
    LexicalOverlap,
    Subsequence,
}

impl Heuristic {
    pub fn as_str(self) -> &'static str {
        match self {
            Heuristic::LexicalOverlap => "lexical_overlap",
            Heuristic::Subsequence => "subsequence",
        }
    }
}

impl std::str::FromStr for Heuristic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lexical_overlap" | "overlap" => Ok(Heuristic::LexicalOverlap),
            "subsequence" => Ok(Heuristic::Subsequence),
            other => Err(Error::invalid(format!("unknown heuristic `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbForms {
    pub past: String,
    pub bare: String,
    pub participle: String,
}

impl VerbForms {
    pub fn new(past: &str, bare: &str, participle: &str) -> Self {
        VerbForms {
            past: past.into(),
            bare: bare.into(),
            participle: participle.into(),
        }
    }
}

/// Named word lists used by the templates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HansLexicon {
    pub agents: Vec<String>,
    pub patients: Vec<String>,
    pub verbs: Vec<VerbForms>,
    pub prepositions: Vec<String>,
    /// Auxiliaries that take `not` directly (`was` -> `was not`).
    pub auxiliaries: Vec<String>,
    /// Tokens that mark an already-negated hypothesis.
    pub negators: Vec<String>,
}

fn words(ws: &[&str]) -> Vec<String> {
    ws.iter().map(|w| w.to_string()).collect()
}

impl Default for HansLexicon {
    fn default() -> Self {
        let verbs = [
            ("encouraged", "encourage", "encouraged"),
            ("saw", "see", "seen"),
            ("helped", "help", "helped"),
            ("called", "call", "called"),
            ("introduced", "introduce", "introduced"),
            ("thanked", "thank", "thanked"),
            ("advised", "advise", "advised"),
            ("contacted", "contact", "contacted"),
            ("recommended", "recommend", "recommended"),
            ("supported", "support", "supported"),
            ("avoided", "avoid", "avoided"),
            ("admired", "admire", "admired"),
            ("mentioned", "mention", "mentioned"),
            ("stopped", "stop", "stopped"),
            ("visited", "visit", "visited"),
            ("paid", "pay", "paid"),
        ];
        HansLexicon {
            agents: words(&[
                "athlete",
                "doctor",
                "doctors",
                "senator",
                "senators",
                "secretary",
                "manager",
                "managers",
                "lawyer",
                "lawyers",
                "professor",
                "banker",
                "bankers",
                "author",
                "actor",
                "actors",
                "tourist",
                "tourists",
                "judge",
                "student",
                "students",
                "president",
                "artist",
                "scientist",
            ]),
            patients: words(&[
                "athlete",
                "doctor",
                "senator",
                "secretary",
                "secretaries",
                "manager",
                "lawyer",
                "professor",
                "professors",
                "banker",
                "author",
                "authors",
                "actor",
                "tourist",
                "judge",
                "judges",
                "student",
                "president",
                "artist",
                "artists",
                "scientist",
                "scientists",
            ]),
            verbs: verbs
                .iter()
                .map(|(p, b, pp)| VerbForms::new(p, b, pp))
                .collect(),
            prepositions: words(&["by", "near", "behind", "with", "beside"]),
            auxiliaries: words(&[
                "was", "were", "is", "are", "has", "have", "had", "will", "would", "can", "could",
                "did", "does", "do", "should", "must", "may", "might",
            ]),
            negators: words(&["not", "n't", "never", "no"]),
        }
    }
}

impl HansLexicon {
    pub fn verb_by_past(&self, past: &str) -> Option<&VerbForms> {
        self.verbs.iter().find(|v| v.past == past)
    }

    fn validate(&self) -> Result<()> {
        if self.agents.is_empty()
            || self.patients.is_empty()
            || self.verbs.is_empty()
            || self.prepositions.is_empty()
        {
            return Err(Error::invalid("HANS lexicon lists must be non-empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HansTemplateSpec {
    pub heuristic: Heuristic,
    pub entailing: bool,
    pub lexicon: HansLexicon,
}

impl HansTemplateSpec {
    pub fn new(heuristic: Heuristic, entailing: bool) -> Self {
        HansTemplateSpec {
            heuristic,
            entailing,
            lexicon: HansLexicon::default(),
        }
    }
}

/// Slot fillers drawn for one pair.
struct Slots<'a> {
    a: &'a str,
    b: &'a str,
    c: &'a str,
    d: &'a str,
    verb: &'a VerbForms,
    verb2: &'a VerbForms,
    passive_verb: &'a VerbForms,
    prep: &'a str,
}

fn be_for(noun: &str) -> &'static str {
    if noun.ends_with('s') {
        "were"
    } else {
        "was"
    }
}

fn draw_slots<'a>(lex: &'a HansLexicon, rng: &mut ChaCha8Rng) -> Slots<'a> {
    let mut used: Vec<&str> = Vec::with_capacity(4);
    let mut pick = |pool: &'a [String], rng: &mut ChaCha8Rng| -> &'a str {
        for _ in 0..64 {
            let w = pool.choose(rng).expect("non-empty pool").as_str();
            if !used.iter().any(|u| stem(u) == stem(w)) {
                used.push(w);
                return w;
            }
        }
        let w = pool.choose(rng).expect("non-empty pool").as_str();
        used.push(w);
        w
    };
    let a = pick(&lex.agents, rng);
    let b = pick(&lex.patients, rng);
    let c = pick(&lex.agents, rng);
    let d = pick(&lex.patients, rng);
    let verb = lex.verbs.choose(rng).expect("non-empty verbs");
    let mut verb2 = lex.verbs.choose(rng).expect("non-empty verbs");
    if lex.verbs.len() > 1 {
        while verb2 == verb {
            verb2 = lex.verbs.choose(rng).expect("non-empty verbs");
        }
    }
    let regular: Vec<&VerbForms> = lex
        .verbs
        .iter()
        .filter(|v| v.past == v.participle)
        .collect();
    let passive_verb = regular.choose(rng).copied().unwrap_or(verb);
    let prep = lex
        .prepositions
        .choose(rng)
        .expect("non-empty prepositions");
    Slots {
        a,
        b,
        c,
        d,
        verb,
        verb2,
        passive_verb,
        prep,
    }
}

fn stem(noun: &str) -> &str {
    noun.strip_suffix("ies")
        .or_else(|| noun.strip_suffix('s'))
        .unwrap_or(noun)
}

fn sentence(parts: &[&str]) -> Vec<String> {
    parts
        .iter()
        .flat_map(|p| p.split_whitespace())
        .map(String::from)
        .collect()
}

/// Premise/hypothesis for template `index` (0..3) of the given cell.
fn fill(
    heuristic: Heuristic,
    entailing: bool,
    index: usize,
    s: &Slots,
) -> (Vec<String>, Vec<String>) {
    let (v, v2, pv) = (&s.verb.past, &s.verb2.past, &s.passive_verb);
    let (a, b, c, d, prep) = (s.a, s.b, s.c, s.d, s.prep);
    match (heuristic, entailing, index) {
        // passive to active
        (Heuristic::LexicalOverlap, true, 0) => (
            sentence(&["the", a, be_for(a), &pv.participle, "by the", b]),
            sentence(&["the", b, &pv.past, "the", a]),
        ),
        // PP on the subject dropped
        (Heuristic::LexicalOverlap, true, 1) => (
            sentence(&["the", a, prep, "the", c, v, "the", b]),
            sentence(&["the", a, v, "the", b]),
        ),
        // conjoined subject
        (Heuristic::LexicalOverlap, true, _) => (
            sentence(&["the", a, "and the", c, v, "the", b]),
            sentence(&["the", c, v, "the", b]),
        ),
        // subject/object swap
        (Heuristic::LexicalOverlap, false, 0) => (
            sentence(&["the", a, v, "the", b]),
            sentence(&["the", b, v, "the", a]),
        ),
        // passive misread as active
        (Heuristic::LexicalOverlap, false, 1) => (
            sentence(&["the", a, be_for(a), &pv.participle, "by the", b]),
            sentence(&["the", a, &pv.past, "the", b]),
        ),
        // PP noun taken as subject
        (Heuristic::LexicalOverlap, false, _) => (
            sentence(&["the", a, prep, "the", c, v, "the", b]),
            sentence(&["the", c, v, "the", b]),
        ),
        // PP on the object dropped
        (Heuristic::Subsequence, true, 0) => (
            sentence(&["the", a, v, "the", b, prep, "the", c]),
            sentence(&["the", a, v, "the", b]),
        ),
        // conjoined object
        (Heuristic::Subsequence, true, 1) => (
            sentence(&["the", a, v, "the", b, "and the", c]),
            sentence(&["the", a, v, "the", b]),
        ),
        // second conjoined clause
        (Heuristic::Subsequence, true, _) => (
            sentence(&["the", a, v, "the", b, "and the", c, v2, "the", d]),
            sentence(&["the", c, v2, "the", d]),
        ),
        (Heuristic::Subsequence, false, 0) => (
            sentence(&["the", a, prep, "the", c, v, "the", b]),
            sentence(&["the", c, v, "the", b]),
        ),
        // relative clause on the subject
        (Heuristic::Subsequence, false, 1) => (
            sentence(&["the", a, "who", v2, "the", c, v, "the", b]),
            sentence(&["the", c, v, "the", b]),
        ),
        // disjoined subject
        (Heuristic::Subsequence, false, _) => (
            sentence(&["the", a, "or the", c, v, "the", b]),
            sentence(&["the", c, v, "the", b]),
        ),
    }
}

pub(crate) const TEMPLATES_PER_CELL: usize = 3;

/// Draws one template pair; shared with the training-mixture generator.
pub(crate) fn draw_pair(
    lexicon: &HansLexicon,
    heuristic: Heuristic,
    entailing: bool,
    rng: &mut ChaCha8Rng,
) -> (Vec<String>, Vec<String>) {
    let slots = draw_slots(lexicon, rng);
    let index = rng.gen_range(0..TEMPLATES_PER_CELL);
    fill(heuristic, entailing, index, &slots)
}

/// Deterministic HANS-style pairs for one (heuristic, entailing) cell.
///
/// Under `lexical_overlap` every hypothesis token occurs in the premise; under
/// `subsequence` the hypothesis is a contiguous span of the premise.
pub fn generate_hans_style(spec: &HansTemplateSpec, count: usize, seed: u64) -> Result<Dataset> {
    if count == 0 {
        return Err(Error::invalid("count must be at least 1"));
    }
    spec.lexicon.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let label = if spec.entailing {
        ENTAILMENT
    } else {
        NON_ENTAILMENT
    };
    let tag = if spec.entailing { "e" } else { "n" };
    let examples = (0..count)
        .map(|i| {
            let (p, h) = draw_pair(&spec.lexicon, spec.heuristic, spec.entailing, &mut rng);
            Example::pair(
                format!("hans-{}-{tag}-{i}", spec.heuristic.as_str()),
                p,
                h,
                label,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(examples, LabelScheme::nli_collapsed().names)
}

/// Flips entailment <-> non-entailment.
pub fn flip_nli_label(label: usize) -> usize {
    if label == ENTAILMENT {
        NON_ENTAILMENT
    } else {
        ENTAILMENT
    }
}

/// Inserts negation into a simple transitive hypothesis.
///
/// `the lawyers saw the professor` becomes `the lawyers did not see the
/// professor`; with an auxiliary (`was encouraged`) `not` follows it. The
/// label is flipped and the id gets a `-neg` suffix.
pub fn negate_hypothesis(example: &Example, lexicon: &HansLexicon) -> Result<Example> {
    let hyp = example
        .hypothesis()
        .ok_or_else(|| Error::Unnegatable(example.tokens_a.join(" ")))?;
    let unnegatable = || Error::Unnegatable(hyp.join(" "));
    if hyp.iter().any(|t| lexicon.negators.contains(t)) {
        return Err(unnegatable());
    }
    let is_aux = |t: &str| lexicon.auxiliaries.iter().any(|a| a == t);
    let verb_pos = hyp
        .iter()
        .position(|t| {
            lexicon
                .verbs
                .iter()
                .any(|v| v.past == *t || v.participle == *t)
        })
        .ok_or_else(unnegatable)?;
    // Subject before the verb group and an object after it.
    if verb_pos == 0 || verb_pos + 1 >= hyp.len() {
        return Err(unnegatable());
    }
    let mut negated: Vec<String> = Vec::with_capacity(hyp.len() + 2);
    if is_aux(&hyp[verb_pos - 1]) {
        if verb_pos < 2 {
            return Err(unnegatable());
        }
        negated.extend_from_slice(&hyp[..verb_pos]);
        negated.push("not".into());
        negated.extend_from_slice(&hyp[verb_pos..]);
    } else {
        let verb = lexicon
            .verb_by_past(&hyp[verb_pos])
            .ok_or_else(unnegatable)?;
        negated.extend_from_slice(&hyp[..verb_pos]);
        negated.push("did".into());
        negated.push("not".into());
        negated.push(verb.bare.clone());
        negated.extend_from_slice(&hyp[verb_pos + 1..]);
    }
    let mut out = example.clone();
    out.id = format!("{}-neg", example.id);
    out.tokens_b = Some(negated);
    out.label = flip_nli_label(example.label);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use std::collections::HashSet;

    fn pair(p: &str, h: &str, label: usize) -> Example {
        Example::pair("t", tokenize(p), tokenize(h), label).unwrap()
    }

    #[test]
    fn lexical_overlap_pairs_have_full_overlap() {
        for entailing in [true, false] {
            let spec = HansTemplateSpec::new(Heuristic::LexicalOverlap, entailing);
            let ds = generate_hans_style(&spec, 200, 3).unwrap();
            for ex in &ds {
                let prem: HashSet<&String> = ex.tokens_a.iter().collect();
                assert!(
                    ex.hypothesis().unwrap().iter().all(|t| prem.contains(t)),
                    "{}",
                    ex.display_text()
                );
                let expected = if entailing {
                    ENTAILMENT
                } else {
                    NON_ENTAILMENT
                };
                assert_eq!(ex.label, expected);
            }
        }
    }

    #[test]
    fn subsequence_hypothesis_is_contiguous_span() {
        for entailing in [true, false] {
            let spec = HansTemplateSpec::new(Heuristic::Subsequence, entailing);
            let ds = generate_hans_style(&spec, 200, 11).unwrap();
            for ex in &ds {
                let h = ex.hypothesis().unwrap();
                assert!(
                    ex.tokens_a.windows(h.len()).any(|w| w == h),
                    "{}",
                    ex.display_text()
                );
            }
        }
    }

    #[test]
    fn non_entailing_swap_reverses_roles() {
        let lex = HansLexicon::default();
        let s = Slots {
            a: "secretary",
            b: "manager",
            c: "actor",
            d: "judge",
            verb: &lex.verbs[0],
            verb2: &lex.verbs[1],
            passive_verb: &lex.verbs[0],
            prep: "by",
        };
        let (p, h) = fill(Heuristic::LexicalOverlap, false, 0, &s);
        assert_eq!(p.join(" "), "the secretary encouraged the manager");
        assert_eq!(h.join(" "), "the manager encouraged the secretary");
        let (p, h) = fill(
            Heuristic::LexicalOverlap,
            true,
            1,
            &Slots {
                a: "athlete",
                c: "doctors",
                b: "senator",
                ..s
            },
        );
        assert_eq!(
            p.join(" "),
            "the athlete by the doctors encouraged the senator"
        );
        assert_eq!(h.join(" "), "the athlete encouraged the senator");
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = HansTemplateSpec::new(Heuristic::LexicalOverlap, true);
        assert_eq!(
            generate_hans_style(&spec, 50, 7).unwrap(),
            generate_hans_style(&spec, 50, 7).unwrap()
        );
        assert_ne!(
            generate_hans_style(&spec, 50, 7).unwrap(),
            generate_hans_style(&spec, 50, 8).unwrap()
        );
        assert!(generate_hans_style(&spec, 0, 7).is_err());
    }

    #[test]
    fn negates_simple_past_and_auxiliary_forms() {
        let lex = HansLexicon::default();
        let ex = pair(
            "the lawyers saw the professor behind the bankers",
            "the lawyers saw the professor",
            ENTAILMENT,
        );
        let neg = negate_hypothesis(&ex, &lex).unwrap();
        assert_eq!(
            neg.hypothesis().unwrap().join(" "),
            "the lawyers did not see the professor"
        );
        assert_eq!(neg.label, NON_ENTAILMENT);
        assert_eq!(neg.id, "t-neg");
        assert_eq!(neg.tokens_a, ex.tokens_a);

        let ex = pair(
            "x",
            "the manager was encouraged by the secretary",
            NON_ENTAILMENT,
        );
        let neg = negate_hypothesis(&ex, &lex).unwrap();
        assert_eq!(
            neg.hypothesis().unwrap().join(" "),
            "the manager was not encouraged by the secretary"
        );
        assert_eq!(neg.label, ENTAILMENT);
    }

    #[test]
    fn refuses_negated_or_off_template_hypotheses() {
        let lex = HansLexicon::default();
        let ex = pair("x", "the lawyers did not see the professor", ENTAILMENT);
        assert!(matches!(
            negate_hypothesis(&ex, &lex),
            Err(Error::Unnegatable(_))
        ));
        let ex = pair("x", "the lawyers slept", ENTAILMENT);
        assert!(matches!(
            negate_hypothesis(&ex, &lex),
            Err(Error::Unnegatable(_))
        ));
        let single = Example::single("s", tokenize("the lawyers saw the judge"), 0).unwrap();
        assert!(negate_hypothesis(&single, &lex).is_err());
    }

    #[test]
    fn generated_entailing_hypotheses_are_all_negatable() {
        let lex = HansLexicon::default();
        for h in [Heuristic::LexicalOverlap, Heuristic::Subsequence] {
            let ds = generate_hans_style(&HansTemplateSpec::new(h, true), 100, 5).unwrap();
            for ex in &ds {
                negate_hypothesis(ex, &lex).unwrap();
            }
        }
    }

    #[test]
    fn label_flip_is_an_involution() {
        for l in [ENTAILMENT, NON_ENTAILMENT] {
            assert_eq!(flip_nli_label(flip_nli_label(l)), l);
        }
    }
}
