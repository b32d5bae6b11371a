mod common;

use std::sync::Arc;

use common::*;
use influx_core::model::{argmax, init_params, train, ArchSpec, Family, ModelParams, TrainConfig};
use influx_core::{Dataset, Example, Vocabulary};
use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;

fn fd_grad(p: &ModelParams, ex: &Example, target: usize) -> Vec<f64> {
    let mut q = p.clone();
    (0..p.theta.len())
        .map(|i| {
            q.theta[i] = p.theta[i] + H;
            let up = q.loss(ex, target).unwrap();
            q.theta[i] = p.theta[i] - H;
            let down = q.loss(ex, target).unwrap();
            q.theta[i] = p.theta[i];
            (up - down) / (2.0 * H)
        })
        .collect()
}

fn instances(family: Family, pair: bool, count: usize) -> Vec<(ModelParams, Example, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    (0..count)
        .map(|k| {
            let m = random_model(family, pair, 6, k as u64);
            let ex = random_example(pair, 6, 0, &mut rng);
            let target = rng.gen_range(0..3);
            (m, ex, target)
        })
        .collect()
}

#[test]
fn gradients_match_central_differences() {
    for family in [Family::LinearBow, Family::EmbMlp] {
        for pair in [false, true] {
            for (m, ex, t) in instances(family, pair, 30) {
                let g = m.grad(&ex, t).unwrap();
                let fd = fd_grad(&m, &ex, t);
                let e = rel_err(&g, &fd);
                assert!(e <= 1e-5, "{family:?} pair={pair}: relative error {e}");
            }
        }
    }
}

#[test]
fn embedding_gradients_match_central_differences() {
    for pair in [false, true] {
        for (m, ex, _) in instances(Family::EmbMlp, pair, 30) {
            let eg = m.grad_wrt_embedding(&ex).unwrap();
            let d = m.arch.embed_dim;
            let target = eg.predicted_class;
            let tokens: Vec<&str> = ex.tokens().collect();
            for id in 1..m.vocab.size() as u32 {
                let tok = m.vocab.token(id).unwrap();
                let positions: Vec<usize> =
                    (0..tokens.len()).filter(|&i| tokens[i] == tok).collect();
                if positions.is_empty() {
                    continue;
                }
                // a vocabulary row is shared by every position holding the token
                let analytic: Vec<f64> = (0..d)
                    .map(|j| positions.iter().map(|&i| eg.grads[i][j]).sum())
                    .collect();
                let mut q = m.clone();
                let fd: Vec<f64> = (0..d)
                    .map(|j| {
                        let k = id as usize * d + j;
                        q.theta[k] = m.theta[k] + H;
                        let up = q.loss(&ex, target).unwrap();
                        q.theta[k] = m.theta[k] - H;
                        let down = q.loss(&ex, target).unwrap();
                        q.theta[k] = m.theta[k];
                        (up - down) / (2.0 * H)
                    })
                    .collect();
                assert!(rel_err(&analytic, &fd) <= 1e-5);
                for &i in &positions {
                    assert_eq!(
                        eg.inputs[i],
                        m.theta[id as usize * d..(id as usize + 1) * d].to_vec()
                    );
                }
            }
            for (i, tok) in tokens.iter().enumerate() {
                if !m.vocab.contains(tok) {
                    assert!(eg.grads[i].iter().all(|&g| g == 0.0));
                }
            }
        }
    }
}

#[test]
fn count_gradients_match_central_differences() {
    // logits are linear in the counts, so moving count t by h is the same as
    // moving the bias by h * W[t, :]
    for (m, ex, _) in instances(Family::LinearBow, false, 30) {
        let eg = m.grad_wrt_embedding(&ex).unwrap();
        let c = m.arch.num_classes;
        let b0 = m.arch.vocab_size * c;
        for (i, tok) in ex.tokens().enumerate() {
            let id = m.vocab.id(tok) as usize;
            if id == 0 {
                assert_eq!(eg.grads[i], vec![0.0]);
                continue;
            }
            let shifted = |sign: f64| {
                let mut q = m.clone();
                for k in 0..c {
                    q.theta[b0 + k] += sign * H * m.theta[id * c + k];
                }
                q.loss(&ex, eg.predicted_class).unwrap()
            };
            let fd = (shifted(1.0) - shifted(-1.0)) / (2.0 * H);
            assert!((eg.grads[i][0] - fd).abs() <= 1e-5 * fd.abs().max(1e-6));
            let count = ex.tokens().filter(|t| *t == tok).count() as f64;
            assert_eq!(eg.inputs[i], vec![count]);
        }
    }
}

#[test]
fn duplicate_positions_share_gradients() {
    let m = random_model(Family::EmbMlp, false, 6, 4);
    let ex = Example::single("d", toks("w1 w2 w1"), 0).unwrap();
    let eg = m.grad_wrt_embedding(&ex).unwrap();
    assert_eq!(eg.grads[0], eg.grads[2]);
    let unk = Example::single("u", toks("zz yy"), 0).unwrap();
    let eg = m.grad_wrt_embedding(&unk).unwrap();
    assert!(eg.grads.iter().flatten().all(|&g| g == 0.0));
}

#[test]
fn linear_forward_matches_hand_computation() {
    let vocab = Arc::new(Vocabulary::from_tokens(toks("good bad")));
    let arch = ArchSpec::linear_bow(3, 2, false);
    let mut m = init_params(&arch, vocab, 0).unwrap();
    // W rows: unk, good, bad; then b
    m.theta = vec![0.0, 0.0, -1.0, 2.0, 1.5, -0.5, 0.1, -0.1];
    let ex = Example::single("e", toks("good good bad"), 1).unwrap();
    let z0 = 2.0 * -1.0 + 1.5 + 0.1;
    let z1 = 2.0 * 2.0 - 0.5 - 0.1;
    let p1 = 1.0 / (1.0 + (z0 - z1 as f64).exp());
    let p = m.forward(&ex).unwrap();
    assert!((p[1] - p1).abs() < 1e-15 && (p[0] + p[1] - 1.0).abs() < 1e-15);
    let unk = Example::single("u", toks("nothing known"), 0).unwrap();
    let pb = m.forward(&unk).unwrap();
    assert!((pb[0] - 1.0 / (1.0 + (-0.2f64).exp())).abs() < 1e-15);
}

#[test]
fn zero_theta_gradient_is_half_counts() {
    let vocab = Arc::new(Vocabulary::from_tokens(toks("a b c")));
    let m = init_params(&ArchSpec::linear_bow(4, 2, false), vocab, 0).unwrap();
    let ex = Example::single("e", toks("a a c"), 1).unwrap();
    let g = m.grad(&ex, 1).unwrap();
    let counts = [0.0, 2.0, 0.0, 1.0];
    for t in 0..4 {
        assert_eq!(g[t * 2 + 1], -0.5 * counts[t]);
        assert_eq!(g[t * 2], 0.5 * counts[t]);
    }
    assert_eq!(g[8] + g[9], 0.0);
}

#[test]
fn prediction_loss_is_the_smallest_class_loss() {
    for (m, ex, _) in instances(Family::EmbMlp, true, 20) {
        let lp = m.loss_wrt_prediction(&ex).unwrap();
        let yhat = m.predict(&ex).unwrap();
        assert_eq!(lp, m.loss(&ex, yhat).unwrap());
        for c in 0..3 {
            assert!(lp <= m.loss(&ex, c).unwrap());
        }
        let p = m.forward(&ex).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&q| q > 0.0 && q < 1.0));
    }
}

#[test]
fn relabelling_classes_permutes_probabilities() {
    let (m, ex, _) = instances(Family::LinearBow, false, 1).remove(0);
    let perm = [2usize, 0, 1];
    let mut q = m.clone();
    let c = 3;
    for row in 0..m.arch.vocab_size + 1 {
        for k in 0..c {
            q.theta[row * c + perm[k]] = m.theta[row * c + k];
        }
    }
    let p = m.forward(&ex).unwrap();
    let pq = q.forward(&ex).unwrap();
    for k in 0..c {
        assert!((pq[perm[k]] - p[k]).abs() < 1e-14);
    }
}

fn small_dataset(pair: bool, n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ex = (0..n)
        .map(|i| {
            let mut e = random_example(pair, 6, i % 3, &mut rng);
            e.id = format!("d{i}");
            e
        })
        .collect();
    Dataset::new(ex, vec!["x".into(), "y".into(), "z".into()]).unwrap()
}

#[test]
fn hessian_matches_differences_of_gradients() {
    for family in [Family::LinearBow, Family::EmbMlp] {
        for pair in [false, true] {
            let m = random_model(family, pair, 5, 3);
            let data = small_dataset(pair, 7, 11);
            let h = m.hessian(&data, 0.0, 5000).unwrap();
            let enc = m.encode_dataset(&data).unwrap();
            let p = m.num_params();
            let mut q = m.clone();
            let mut fd = vec![vec![0.0; p]; p];
            for j in 0..p {
                q.theta[j] = m.theta[j] + H;
                let (_, gu) = q.objective_and_grad(&enc);
                q.theta[j] = m.theta[j] - H;
                let (_, gd) = q.objective_and_grad(&enc);
                q.theta[j] = m.theta[j];
                for i in 0..p {
                    fd[i][j] = (gu[i] - gd[i]) / (2.0 * H);
                }
            }
            let hv: Vec<f64> = h.iter().copied().collect();
            let fv: Vec<f64> = (0..p)
                .flat_map(|j| (0..p).map(move |i| (i, j)))
                .map(|(i, j)| fd[i][j])
                .collect();
            let e = rel_err(&hv, &fv);
            assert!(e <= 1e-4, "{family:?} pair={pair}: {e}");
            assert!((&h - h.transpose()).amax() <= 1e-10);
        }
    }
}

#[test]
fn hvp_matches_dense_products_and_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for family in [Family::LinearBow, Family::EmbMlp] {
        for pair in [false, true] {
            let m = random_model(family, pair, 5, 8);
            let data = small_dataset(pair, 9, 12);
            let batch: Vec<(Example, usize)> = data.iter().map(|e| (e.clone(), e.label)).collect();
            let h = m.hessian(&data, 0.3, 5000).unwrap();
            let p = m.num_params();
            let v1: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v2: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let hv = m.hvp(&batch, &v1, 0.3).unwrap();
            let dense: Vec<f64> = (&h * nalgebra::DVector::from_column_slice(&v1))
                .iter()
                .copied()
                .collect();
            assert!(rel_err(&hv, &dense) <= 1e-8);
            let zero = m.hvp(&batch, &vec![0.0; p], 0.3).unwrap();
            assert!(zero.iter().all(|&z| z == 0.0));
            let sum: Vec<f64> = v1.iter().zip(&v2).map(|(a, b)| a + b).collect();
            let hs = m.hvp(&batch, &sum, 0.3).unwrap();
            let h2 = m.hvp(&batch, &v2, 0.3).unwrap();
            for i in 0..p {
                assert!((hs[i] - hv[i] - h2[i]).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn linear_hessian_is_ridge_bounded_and_shifts_with_damping() {
    let m = random_model(Family::LinearBow, false, 5, 2);
    let data = small_dataset(false, 12, 3);
    let h = m.hessian(&data, 0.0, 5000).unwrap();
    let eig = SymmetricEigen::new(h.clone()).eigenvalues;
    assert!(eig.min() >= m.l2_lambda - 1e-12);
    let hd = m.hessian(&data, 0.25, 5000).unwrap();
    let mut e0: Vec<f64> = eig.iter().copied().collect();
    let mut e1: Vec<f64> = SymmetricEigen::new(hd)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    e0.sort_by(f64::total_cmp);
    e1.sort_by(f64::total_cmp);
    for (a, b) in e0.iter().zip(&e1) {
        assert!((b - a - 0.25).abs() < 1e-10);
    }
    assert!(matches!(
        m.hessian(&data, 0.0, 10),
        Err(influx_core::Error::HessianTooLarge { .. })
    ));
}

fn separable() -> (Dataset, Arc<Vocabulary>) {
    let ex = vec![
        Example::single("a", toks("good fine"), 1).unwrap(),
        Example::single("b", toks("good great"), 1).unwrap(),
        Example::single("c", toks("bad awful"), 0).unwrap(),
        Example::single("d", toks("bad poor"), 0).unwrap(),
    ];
    let d = Dataset::new(ex, vec!["neg".into(), "pos".into()]).unwrap();
    let v = Arc::new(Vocabulary::build(&d, 1).unwrap());
    (d, v)
}

#[test]
fn training_fits_separable_data_and_converges() {
    let (d, v) = separable();
    for family in [Family::LinearBow, Family::EmbMlp] {
        let arch = match family {
            Family::LinearBow => ArchSpec::linear_bow(v.size(), 2, false),
            Family::EmbMlp => ArchSpec::emb_mlp(v.size(), 2, false).with_dims(4, 6),
        };
        let mut cfg = TrainConfig::for_family(family);
        if family == Family::EmbMlp {
            cfg.learning_rate = 0.5;
            cfg.epochs = 400;
            cfg.batch_size = 2;
        }
        let m = train(&d, &arch, v.clone(), &cfg).unwrap();
        for e in &d {
            assert_eq!(argmax(&m.forward(e).unwrap()), e.label, "{family:?}");
        }
        let again = train(&d, &arch, v.clone(), &cfg).unwrap();
        assert_eq!(
            m.theta.iter().map(|t| t.to_bits()).collect::<Vec<_>>(),
            again.theta.iter().map(|t| t.to_bits()).collect::<Vec<_>>()
        );
        if family == Family::LinearBow {
            let (_, g) = m.objective_and_grad(&m.encode_dataset(&d).unwrap());
            assert!(g.iter().all(|x| x.abs() <= 1e-5));
        }
    }
}

#[test]
fn training_rejects_unregularised_linear_models() {
    let (d, v) = separable();
    let mut cfg = TrainConfig::for_family(Family::LinearBow);
    cfg.l2_lambda = 0.0;
    assert!(train(&d, &ArchSpec::linear_bow(v.size(), 2, false), v, &cfg).is_err());
}

#[test]
fn divergent_training_is_reported() {
    let (d, v) = separable();
    let mut cfg = TrainConfig::for_family(Family::EmbMlp);
    cfg.learning_rate = 1e200;
    let arch = ArchSpec::emb_mlp(v.size(), 2, false).with_dims(2, 2);
    assert!(matches!(
        train(&d, &arch, v, &cfg),
        Err(influx_core::Error::Diverged { .. })
    ));
}

#[test]
fn checkpoints_round_trip_bitwise() {
    use influx_core::model::{load_checkpoint, save_checkpoint, Checkpoint};
    let (d, v) = separable();
    let cfg = TrainConfig::for_family(Family::EmbMlp);
    let m = train(
        &d,
        &ArchSpec::emb_mlp(v.size(), 2, false).with_dims(3, 3),
        v,
        &cfg,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let ck = Checkpoint {
        params: m.clone(),
        train_config: Some(cfg),
    };
    save_checkpoint(&path, &ck).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back, ck);
    assert_eq!(back.params.content_hash(), m.content_hash());
    let text = std::fs::read_to_string(&path).unwrap().replacen(
        "\"l2_lambda\": 0.0001",
        "\"l2_lambda\": 0.001",
        1,
    );
    std::fs::write(&path, text).unwrap();
    assert!(load_checkpoint(&path).is_err());
}
