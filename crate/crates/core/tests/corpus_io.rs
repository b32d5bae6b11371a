use std::io::Write;

use influx_core::analysis::lexical_overlap_rate;
use influx_core::corpus::{
    generate_hans_style, load_jsonl, negate_hypothesis, read_jsonl, tokenize, write_jsonl,
    HansLexicon, HansTemplateSpec, Heuristic, LabelScheme, ENTAILMENT, NON_ENTAILMENT,
};
use influx_core::{Dataset, Example, ExampleKind, Vocabulary};
use proptest::prelude::*;

#[test]
fn loads_files_and_reports_missing_paths() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mnli.jsonl");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(
        f,
        r#"{{"premise":"A man sleeps.","hypothesis":"A man rests.","label":"entailment"}}"#
    )
    .unwrap();
    writeln!(
        f,
        r#"{{"premise":"A man sleeps.","hypothesis":"A dog runs.","label":"neutral"}}"#
    )
    .unwrap();
    writeln!(f, r#"{{"id":"c","premise":"A man sleeps.","hypothesis":"Nobody sleeps.","label":"contradiction"}}"#).unwrap();
    drop(f);
    let d = load_jsonl(
        &path,
        ExampleKind::Pair,
        Some(&LabelScheme::nli_collapsed()),
    )
    .unwrap();
    assert_eq!(d.num_classes(), 2);
    let labels: Vec<usize> = d.iter().map(|e| e.label).collect();
    assert_eq!(labels, vec![ENTAILMENT, NON_ENTAILMENT, NON_ENTAILMENT]);
    assert_eq!(d.examples()[0].id, "line-1");
    assert_eq!(d.examples()[2].id, "c");

    let missing = dir.path().join("nope.jsonl");
    let err = load_jsonl(&missing, ExampleKind::Pair, None).unwrap_err();
    assert!(err.to_string().contains("nope.jsonl"));
}

#[test]
fn vocabulary_is_stable_across_builds() {
    let spec = HansTemplateSpec::new(Heuristic::Subsequence, true);
    let d = generate_hans_style(&spec, 2000, 3).unwrap();
    let a = Vocabulary::build(&d, 1).unwrap();
    let b = Vocabulary::build(&d, 1).unwrap();
    assert_eq!(a, b);
}

#[test]
fn hans_overlap_and_negation_contracts() {
    let spec = HansTemplateSpec::new(Heuristic::LexicalOverlap, true);
    let d = generate_hans_style(&spec, 300, 9).unwrap();
    for e in &d {
        assert_eq!(lexical_overlap_rate(e).unwrap(), 1.0);
        let n = negate_hypothesis(e, &HansLexicon::default()).unwrap();
        assert_eq!(n.label, NON_ENTAILMENT);
        assert!(n.id.ends_with("-neg"));
        assert!(negate_hypothesis(&n, &HansLexicon::default()).is_err());
    }
    let ex = Example::pair(
        "f5",
        tokenize("The lawyers saw the professor behind the bankers"),
        tokenize("The lawyers saw the professor"),
        ENTAILMENT,
    )
    .unwrap();
    let n = negate_hypothesis(&ex, &HansLexicon::default()).unwrap();
    assert_eq!(
        n.hypothesis().unwrap().join(" "),
        "the lawyers did not see the professor"
    );
}

fn word() -> impl Strategy<Value = String> {
    "[a-z]{1,6}"
}

proptest! {
    #[test]
    fn jsonl_round_trips(rows in prop::collection::vec(
        (prop::collection::vec(word(), 1..6), prop::collection::vec(word(), 1..6), 0usize..2), 1..20))
    {
        let examples: Vec<Example> = rows
            .iter()
            .enumerate()
            .map(|(i, (a, b, l))| Example::pair(format!("e{i}"), a.clone(), b.clone(), *l).unwrap())
            .collect();
        let d = Dataset::new(examples, vec!["entailment".into(), "non_entailment".into()]).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&d, &mut buf).unwrap();
        let back = read_jsonl(&buf[..], "mem".as_ref(), ExampleKind::Pair, Some(&LabelScheme::nli_collapsed())).unwrap();
        prop_assert_eq!(back.examples(), d.examples());
    }
}
