use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use fedlfd_bench::{profile_sessions, scenario_config, sinusoids, uploads, PROFILE_DIMS};
use fedlfd_core::federated::{AggregationStrategy, StrategyKind};
use fedlfd_core::harness::CellRun;
use fedlfd_core::lstm::LstmAutoencoder;
use fedlfd_core::nn::SimRng;
use fedlfd_core::profile::build_profile_model;

fn lstm(c: &mut Criterion) {
    let corpus = sinusoids(1);
    let model = LstmAutoencoder::init(3, 8, &mut SimRng::from_seed(2));
    let longest = corpus.iter().max_by_key(|s| s.len()).expect("non-empty corpus");

    c.bench_function("lstm/encode", |b| b.iter(|| model.encode(black_box(longest)).unwrap()));
    c.bench_function("lstm/loss_and_grad", |b| {
        b.iter(|| model.loss_and_grad(black_box(longest)).unwrap())
    });
    c.bench_function("lstm/train_epoch", |b| {
        b.iter_batched(
            || (model.clone(), SimRng::from_seed(3)),
            |(mut m, mut rng)| m.train(&corpus, 1, 0.05, Some(5.0), &mut rng).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn profile(c: &mut Criterion) {
    let sessions = profile_sessions(20, 4);
    let model = build_profile_model(PROFILE_DIMS, &mut SimRng::from_seed(5)).unwrap();
    c.bench_function("profile/train_epoch", |b| {
        b.iter_batched(
            || (model.clone(), SimRng::from_seed(6)),
            |(mut m, mut rng)| m.train(&sessions, 1, 0.05, &mut rng).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn aggregation(c: &mut Criterion) {
    let mut group = c.benchmark_group("aggregate");
    for n in [10, 100] {
        let (ups, global) = uploads(n, 1_000, 7);
        let weighted = AggregationStrategy::user_weighted(1e-6, global).unwrap();
        group.bench_with_input(BenchmarkId::new("fedavg", n), &ups, |b, ups| {
            b.iter(|| AggregationStrategy::FedAvg.aggregate(black_box(ups)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("user_weighted", n), &ups, |b, ups| {
            b.iter(|| weighted.aggregate(black_box(ups)).unwrap())
        });
    }
    group.finish();
}

fn round(c: &mut Criterion) {
    let config = scenario_config();
    let mut group = c.benchmark_group("round");
    group.sample_size(10);
    for kind in [StrategyKind::Fedavg, StrategyKind::UserWeighted] {
        let start = CellRun::start(&config, 1, kind).unwrap();
        group.bench_function(kind.name(), |b| {
            b.iter_batched(|| start.clone(), |mut cell| cell.step().unwrap(), BatchSize::LargeInput)
        });
    }
    group.finish();
}

criterion_group!(benches, lstm, profile, aggregation, round);
criterion_main!(benches);
