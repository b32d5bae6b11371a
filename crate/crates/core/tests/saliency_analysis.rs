mod common;

use std::sync::Arc;

use common::*;
use influx_core::analysis::{
    artifact_scan, consistency_removal_overlap, consistency_token_influence, quadratic_fit,
    removal_count, sanity_check, Feature, FitKind, Ranking, RemovalType, SanityConfig,
};
use influx_core::corpus::{generate_sentiment_toy, SentimentConfig};
use influx_core::influence::{ExactConfig, InfluenceEngine, InfluenceMethod};
use influx_core::model::{init_params, train, ArchSpec, Family, TrainConfig};
use influx_core::saliency::{extreme_tokens, saliency_map};
use influx_core::{Dataset, Example, Vocabulary};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn saliency_is_l1_normalised_and_sign_faithful() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for k in 0..40 {
        let family = if k % 2 == 0 {
            Family::LinearBow
        } else {
            Family::EmbMlp
        };
        let pair = k % 4 >= 2;
        let m = random_model(family, pair, 6, k);
        let ex = random_example(pair, 6, 0, &mut rng);
        let map = saliency_map(&m, &ex).unwrap();
        assert_eq!(map.scores.len(), ex.len());
        let l1: f64 = map.scores.iter().map(|s| s.score.abs()).sum();
        assert!((l1 - 1.0).abs() < 1e-9 || l1 == 0.0);
        assert_eq!(saliency_map(&m, &ex).unwrap(), map);
        if family == Family::LinearBow {
            let p = m.forward(&ex).unwrap();
            let y = map.predicted_class;
            let c = m.arch.num_classes;
            for (pos, tok) in ex.tokens().enumerate() {
                let id = m.vocab.id(tok) as usize;
                let count = ex.tokens().filter(|t| *t == tok).count() as f64;
                let w = &m.theta[id * c..(id + 1) * c];
                let expected = if id == 0 {
                    0.0
                } else {
                    count * (w[y] - (0..c).map(|j| p[j] * w[j]).sum::<f64>())
                };
                let got = map.scores[pos].score;
                if expected == 0.0 {
                    assert_eq!(got, 0.0);
                } else {
                    assert_eq!(got.signum(), expected.signum());
                }
            }
        }
    }
}

#[test]
fn single_token_and_symmetric_point_maps() {
    let m = random_model(Family::LinearBow, false, 4, 1);
    let one = Example::single("o", toks("w2"), 0).unwrap();
    let s = saliency_map(&m, &one).unwrap().scores[0].score;
    assert!(s == 1.0 || s == -1.0 || s == 0.0);

    let vocab = Arc::new(Vocabulary::from_tokens(words(4)));
    let mut z = init_params(&ArchSpec::emb_mlp(5, 2, false).with_dims(3, 3), vocab, 0).unwrap();
    z.theta.iter_mut().for_each(|t| *t = 0.0);
    let map = saliency_map(&z, &Example::single("z", toks("w0 w1 w3"), 0).unwrap()).unwrap();
    assert!(map.scores.iter().all(|s| s.score == 0.0));
}

#[test]
fn strongly_positive_word_gets_the_top_score() {
    let vocab = Arc::new(Vocabulary::from_tokens(toks("great movie plot")));
    let mut m = init_params(&ArchSpec::linear_bow(4, 2, false), vocab, 0).unwrap();
    // class 1 is positive; "great" pushes hard toward it
    m.theta[1 * 2 + 1] = 3.0;
    m.theta[1 * 2] = -1.0;
    m.theta[2 * 2 + 1] = 0.2;
    m.theta[3 * 2] = 0.4;
    let ex = Example::single("e", toks("movie great plot"), 1).unwrap();
    let map = saliency_map(&m, &ex).unwrap();
    assert_eq!(map.predicted_class, 1);
    let e = extreme_tokens(&map).unwrap();
    assert_eq!(e.most_positive, 1);
    assert_eq!(e.most_negative, 2);
    // raw = count * (W[t,1] - Σ p W[t,:])
    let p = m.forward(&ex).unwrap();
    let raw: Vec<f64> = [(2usize, 0.2, 0.0), (1, 3.0, -1.0), (3, 0.0, 0.4)]
        .iter()
        .map(|&(_, w1, w0)| w1 - (p[0] * w0 + p[1] * w1))
        .collect();
    let l1: f64 = raw.iter().map(|r| r.abs()).sum();
    for (s, r) in map.scores.iter().zip(&raw) {
        assert!((s.score - r / l1).abs() < 1e-12);
    }
}

fn normal_equations(xs: &[f64], zs: &[f64]) -> [f64; 3] {
    let mut a = vec![vec![0.0; 3]; 3];
    let mut b = vec![0.0; 3];
    for (&x, &z) in xs.iter().zip(zs) {
        let row = [x * x, x, 1.0];
        for i in 0..3 {
            b[i] += row[i] * z;
            for j in 0..3 {
                a[i][j] += row[i] * row[j];
            }
        }
    }
    let c = matvec(&gauss_jordan_inverse(&a), &b);
    [c[0], c[1], c[2]]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn quadratic_fit_matches_normal_equations(
        pts in prop::collection::vec((-2.0f64..2.0, -3.0f64..3.0), 6..60)
    ) {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let zs: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let f = quadratic_fit(&xs, &zs).unwrap();
        prop_assume!(f.kind == FitKind::Full && f.condition < 1e4);
        let o = normal_equations(&xs, &zs);
        for (got, want) in [f.a, f.b, f.c].iter().zip(o) {
            prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0));
        }
    }

    #[test]
    fn quadratic_fit_recovers_exact_parabolas(
        a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0,
        xs in prop::collection::vec(-3.0f64..3.0, 8..40)
    ) {
        let zs: Vec<f64> = xs.iter().map(|x| a * x * x + b * x + c).collect();
        let f = quadratic_fit(&xs, &zs).unwrap();
        prop_assume!(f.kind == FitKind::Full && f.condition < 1e4);
        prop_assert!((f.a - a).abs() < 1e-10 && (f.b - b).abs() < 1e-10 && (f.c - c).abs() < 1e-10);
        prop_assert!(f.r2 > 1.0 - 1e-10);
    }
}

fn linear_setup(
    n: usize,
    seed: u64,
) -> (
    influx_core::ModelParams,
    Dataset,
    TrainConfig,
    Arc<Vocabulary>,
) {
    let data = generate_sentiment_toy(n, seed, None).unwrap();
    let vocab = Arc::new(Vocabulary::build(&data, 1).unwrap());
    let cfg = TrainConfig::for_family(Family::LinearBow);
    let m = train(
        &data,
        &ArchSpec::linear_bow(vocab.size(), 2, false),
        vocab.clone(),
        &cfg,
    )
    .unwrap();
    (m, data, cfg, vocab)
}

#[test]
fn token_influence_is_invariant_to_training_order() {
    let (m, data, _, _) = linear_setup(120, 31);
    let tests: Vec<Example> = generate_sentiment_toy(6, 77, None).unwrap().into_examples();
    let method = InfluenceMethod::Exact(ExactConfig::default());
    let eng = InfluenceEngine::new(&m, &data, method.clone()).unwrap();
    let res: Vec<_> = tests.iter().map(|t| eng.influence(t).unwrap()).collect();
    let a = consistency_token_influence(&m, &data, &tests, &res, Ranking::Signed).unwrap();

    let mut shuffled = data.examples().to_vec();
    shuffled.reverse();
    let data2 = data.with_examples(shuffled).unwrap();
    let eng2 = InfluenceEngine::new(&m, &data2, method).unwrap();
    let res2: Vec<_> = tests.iter().map(|t| eng2.influence(t).unwrap()).collect();
    let b = consistency_token_influence(&m, &data2, &tests, &res2, Ranking::Signed).unwrap();
    assert_eq!(a.cells.len(), 12);
    for (x, y) in a.cells.iter().zip(&b.cells) {
        assert_eq!(x.count, y.count);
        assert!((x.mean - y.mean).abs() < 1e-9 || (x.mean.is_nan() && y.mean.is_nan()));
    }
}

#[test]
fn removing_an_unknown_token_keeps_the_whole_ranking() {
    let (m, data, _, _) = linear_setup(100, 32);
    let eng =
        InfluenceEngine::new(&m, &data, InfluenceMethod::Exact(ExactConfig::default())).unwrap();
    // every unknown token has zero saliency, so the median pick is one of them
    let test = Example::single("t", toks("qq1 great qq2 qq3 awful qq4"), 1).unwrap();
    let res = vec![eng.influence(&test).unwrap()];
    let r =
        consistency_removal_overlap(&m, std::slice::from_ref(&test), &res, &eng, Ranking::Signed)
            .unwrap();
    let median: Vec<f64> = r
        .records
        .iter()
        .filter(|c| c.extreme == "median")
        .map(|c| c.value)
        .collect();
    assert_eq!(median, vec![1.0; 4]);
}

#[test]
fn sanity_check_runs_every_removal_type() {
    let data = generate_sentiment_toy(200, 41, None).unwrap();
    let vocab = Arc::new(Vocabulary::build(&data, 1).unwrap());
    let arch = ArchSpec::linear_bow(vocab.size(), 2, false);
    let tests = generate_sentiment_toy(3, 42, None).unwrap().into_examples();
    let mut cfg = TrainConfig::for_family(Family::LinearBow);
    cfg.grad_tol = 1e-7;
    let report = sanity_check(
        &data,
        &arch,
        vocab,
        &cfg,
        &tests,
        &InfluenceMethod::Exact(ExactConfig::default()),
        &SanityConfig {
            fraction: 0.1,
            seeds: vec![1, 2],
        },
    )
    .unwrap();
    assert_eq!(report.removed_per_run, 20);
    assert_eq!(report.records.len(), 2 * 3 * 4);
    assert!(report
        .records
        .iter()
        .all(|r| (-100.0..=100.0).contains(&r.delta)));
    let pos = report.row(RemovalType::Positive).unwrap().mean;
    let neg = report.row(RemovalType::Negative).unwrap().mean;
    assert!(pos < neg);
    assert!(removal_count(5, 0.05).is_err());
    assert!(removal_count(5, 0.6).is_err());
}

#[test]
fn planted_token_outscores_a_random_feature() {
    let mut wins = 0;
    for seed in 0..10 {
        let data = influx_core::corpus::sentiment::generate_sentiment(&SentimentConfig {
            count: 300,
            seed,
            planted_artifact: Some("xyzzy".into()),
            ..SentimentConfig::default()
        })
        .unwrap();
        let vocab = Arc::new(Vocabulary::build(&data, 1).unwrap());
        let cfg = TrainConfig::for_family(Family::LinearBow);
        let m = train(
            &data,
            &ArchSpec::linear_bow(vocab.size(), 2, false),
            vocab,
            &cfg,
        )
        .unwrap();
        let eng = InfluenceEngine::new(&m, &data, InfluenceMethod::Exact(ExactConfig::default()))
            .unwrap();
        let tests: Vec<&Example> = data
            .iter()
            .filter(|e| e.contains_token("xyzzy"))
            .take(8)
            .collect();
        let res: Vec<_> = tests.iter().map(|t| eng.influence(t).unwrap()).collect();
        let features = [
            Feature::Token {
                token: "xyzzy".into(),
            },
            Feature::Random { seed },
        ];
        let reports = artifact_scan(&data, &res, &features).unwrap();
        if reports[0].mean_a > reports[1].mean_a {
            wins += 1;
        }
    }
    assert!(wins >= 9, "planted feature won {wins} of 10 runs");
}
