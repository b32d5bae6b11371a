use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use influx_core::corpus::{generate_sentiment_toy, Vocabulary};
use influx_core::influence::{
    inverse_hvp_lissa, max_eigenvalue, ExactConfig, FactoredHessian, InfluenceEngine,
    InfluenceMethod, LissaConfig, ModelCurvature,
};
use influx_core::model::{train, ArchSpec, Family, ModelParams, TrainConfig};
use influx_core::Dataset;

fn setup(family: Family, n: usize) -> (ModelParams, Dataset) {
    let data = generate_sentiment_toy(n, 1, None).unwrap();
    let vocab = Arc::new(Vocabulary::build(&data, 1).unwrap());
    let arch = match family {
        Family::LinearBow => ArchSpec::linear_bow(vocab.size(), 2, false),
        Family::EmbMlp => ArchSpec::emb_mlp(vocab.size(), 2, false).with_dims(8, 8),
    };
    let cfg = TrainConfig {
        epochs: 5,
        ..TrainConfig::for_family(family)
    };
    (train(&data, &arch, vocab, &cfg).unwrap(), data)
}

fn curvature(c: &mut Criterion) {
    let (linear, data) = setup(Family::LinearBow, 1000);
    let enc = linear.encode_dataset(&data).unwrap();
    let all: Vec<usize> = (0..enc.len()).collect();
    let v: Vec<f64> = (0..linear.num_params()).map(|i| (i as f64).sin()).collect();
    let mut out = vec![0.0; v.len()];

    c.bench_function("hvp/linear_bow/n1000", |b| {
        b.iter(|| linear.hvp_encoded(&enc, &all, black_box(&v), 0.0, &mut out))
    });
    c.bench_function("hessian/linear_bow/n1000", |b| {
        b.iter(|| linear.hessian_encoded(&enc, 0.0, 5000).unwrap())
    });
    let h = linear.hessian_encoded(&enc, 0.0, 5000).unwrap();
    c.bench_function("cholesky/linear_bow/n1000", |b| {
        b.iter(|| FactoredHessian::new(h.clone(), 3e-3).unwrap())
    });

    let oracle = ModelCurvature::new(&linear, &enc);
    let lmax = max_eigenvalue(&oracle, 3e-3, 50, 0);
    let config = LissaConfig {
        scale: 1.1 * lmax,
        depth: 500,
        batch_size: 256,
        ..LissaConfig::default()
    };
    let mut group = c.benchmark_group("lissa");
    group.sample_size(10);
    group.bench_function("linear_bow/n1000/depth500", |b| {
        b.iter(|| inverse_hvp_lissa(&oracle, black_box(&v), &config).unwrap())
    });
    group.finish();

    let (mlp, data) = setup(Family::EmbMlp, 500);
    let test = &data.examples()[0];
    let mut group = c.benchmark_group("influence");
    group.sample_size(10);
    group.bench_function("exact/emb_mlp/n500", |b| {
        b.iter(|| {
            let method = InfluenceMethod::Exact(ExactConfig {
                damping: 0.1,
                ..ExactConfig::default()
            });
            InfluenceEngine::new(&mlp, &data, method)
                .unwrap()
                .influence(test)
                .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, curvature);
criterion_main!(benches);
