#![allow(dead_code)]

use std::sync::Arc;

use influx_core::model::{init_params, ArchSpec, Family, ModelParams};
use influx_core::{Example, Vocabulary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn words(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("w{i}")).collect()
}

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

/// A model with random parameters of moderate size.
pub fn random_model(family: Family, pair: bool, vocab_words: usize, seed: u64) -> ModelParams {
    let vocab = Arc::new(Vocabulary::from_tokens(words(vocab_words)));
    let arch = match family {
        Family::LinearBow => ArchSpec::linear_bow(vocab.size(), 3, pair),
        Family::EmbMlp => ArchSpec::emb_mlp(vocab.size(), 3, pair).with_dims(4, 5),
    };
    let mut p = init_params(&arch, vocab, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let d = arch.embed_dim;
    for (i, t) in p.theta.iter_mut().enumerate() {
        if family == Family::EmbMlp && i < d {
            continue;
        }
        *t = rng.gen_range(-0.8..0.8);
    }
    p.l2_lambda = 1e-2;
    p
}

/// Random example over `w0..w{vocab_words}` plus an occasional unknown word.
pub fn random_example(
    pair: bool,
    vocab_words: usize,
    label: usize,
    rng: &mut ChaCha8Rng,
) -> Example {
    let side = |rng: &mut ChaCha8Rng| -> Vec<String> {
        let n = rng.gen_range(1..6);
        (0..n)
            .map(|_| {
                if rng.gen_bool(0.1) {
                    "oov".to_string()
                } else {
                    format!("w{}", rng.gen_range(0..vocab_words))
                }
            })
            .collect()
    };
    let id = format!("r{}", rng.gen::<u32>());
    if pair {
        let a = side(rng);
        let b = side(rng);
        Example::pair(id, a, b, label).unwrap()
    } else {
        Example::single(id, side(rng), label).unwrap()
    }
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-12);
    num / den
}

/// Explicit inverse by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, piv);
        let d = a[col][col];
        for v in a[col].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

pub fn matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}
