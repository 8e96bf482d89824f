use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use num_rational::Ratio;
use sublis::estimator::improved_main;
use sublis::estimator::run_with;
use sublis::exact::{lis_exact, lis_exact_dp};
use sublis::harness::{desk_profile, gen_corrupted_monotone, gen_staircase, Algo};
use sublis::splitter::{find_splitter, SplitterConfig};
use sublis::{RandomnessLedger, SequenceOracle};

fn exact(c: &mut Criterion) {
    let mut g = c.benchmark_group("exact");
    for n in [1u64 << 10, 1 << 14, 1 << 18] {
        let v = gen_corrupted_monotone(n, 0.1, 1).unwrap();
        g.bench_with_input(BenchmarkId::new("patience", n), &v, |b, v| {
            b.iter(|| lis_exact(black_box(v)))
        });
    }
    let v = gen_corrupted_monotone(2048, 0.1, 1).unwrap();
    g.bench_function("dp/2048", |b| b.iter(|| lis_exact_dp(black_box(&v), 4096)));
    g.finish();
}

fn estimator(c: &mut Criterion) {
    let mut g = c.benchmark_group("estimator");
    g.sample_size(10);
    for n in [1u64 << 12, 1 << 16] {
        let o = SequenceOracle::from_values(gen_corrupted_monotone(n, 0.1, 1).unwrap()).unwrap();
        let desk = desk_profile()
            .parameter_set(Algo::Improved, o.n(), o.valbound())
            .unwrap();
        g.bench_with_input(BenchmarkId::new("improved-desk", n), &o, |b, o| {
            b.iter(|| run_with(&o.fresh(), &RandomnessLedger::new(1), desk.clone()).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("improved-default", n), &o, |b, o| {
            b.iter(|| improved_main(&o.fresh(), &RandomnessLedger::new(1), 0.2, 0.2).unwrap())
        });
    }
    g.finish();
}

fn splitter(c: &mut Criterion) {
    let o = SequenceOracle::from_values(gen_staircase(2, 1 << 12).unwrap()).unwrap();
    let u = o.universe();
    let cfg = SplitterConfig::new(o.n());
    c.bench_function("find_splitter/staircase-8192", |b| {
        b.iter(|| {
            find_splitter(
                &o,
                &RandomnessLedger::new(3),
                &u,
                &u,
                Ratio::new(1, 2),
                64.0,
                1.0 / 16.0,
                &cfg,
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, exact, estimator, splitter);
criterion_main!(benches);
