use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use protoseg_bench::{large_bank_scene, noisy_sequence};
use protoseg_core::classify::{fit_lr, lr_classify, nn_classify};
use protoseg_core::consistency::{relabel_sequence, vote, VotePolicy};
use protoseg_core::DEFAULT_IGNORE_ID;

fn classify(c: &mut Criterion) {
    let scene = large_bank_scene(300);
    let model = fit_lr(&scene.bank, 1.0).unwrap();
    let mut g = c.benchmark_group("classify");
    g.throughput(Throughput::Elements(scene.points.rows() as u64));
    g.bench_function("nn_68x1024", |b| b.iter(|| nn_classify(&scene.points, &scene.bank).unwrap()));
    g.bench_function("lr_68x1024", |b| b.iter(|| lr_classify(&scene.points, &model).unwrap()));
    g.finish();
}

fn fit(c: &mut Criterion) {
    let scene = large_bank_scene(1);
    let mut g = c.benchmark_group("fit");
    g.sample_size(20);
    g.bench_function("lr_68x1024", |b| b.iter(|| fit_lr(&scene.bank, 1.0).unwrap()));
    g.finish();
}

fn consistency(c: &mut Criterion) {
    let seq = noisy_sequence(100_000);
    let mut g = c.benchmark_group("consistency");
    g.throughput(Throughput::Elements(5 * 100_000));
    g.sample_size(20);
    g.bench_function("vote", |b| b.iter(|| vote(&seq.scans, 0.1, DEFAULT_IGNORE_ID).unwrap()));
    g.bench_function("relabel", |b| {
        b.iter(|| relabel_sequence(&seq.scans, 0.1, DEFAULT_IGNORE_ID, VotePolicy::Majority).unwrap())
    });
    g.finish();
}

criterion_group!(benches, classify, fit, consistency);
criterion_main!(benches);
