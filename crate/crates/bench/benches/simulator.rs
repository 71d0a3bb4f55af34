use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use ipersea::adversary::ForgeMode;
use ipersea::dht::{iterative_lookup, LookupParams, Overlay, OverlayParams};
use ipersea::experiment::{run_on_graph, World};
use ipersea::idspace::{build_network, IdSpace};
use ipersea::{ExperimentConfig, NodeId, NodeIdx};
use ipersea_bench::chorded_ring;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bootstrap(c: &mut Criterion) {
    let mut group = c.benchmark_group("bootstrap");
    for n in [1_000u64, 5_000] {
        let g = chorded_ring(n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &g, |b, g| {
            b.iter(|| {
                build_network(
                    g,
                    7,
                    IdSpace::new(31).unwrap(),
                    0.65,
                    &mut ChaCha8Rng::seed_from_u64(1),
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn tables(c: &mut Criterion) {
    let g = chorded_ring(2_000).unwrap();
    let (tree, _) = build_network(
        &g,
        7,
        IdSpace::new(31).unwrap(),
        0.65,
        &mut ChaCha8Rng::seed_from_u64(1),
    )
    .unwrap();
    c.bench_function("routing_tables/2000", |b| {
        b.iter(|| Overlay::build(&tree, OverlayParams::default(), ForgeMode::Colluding, 1).unwrap())
    });
}

fn lookup(c: &mut Criterion) {
    let g = chorded_ring(2_000).unwrap();
    let (tree, _) = build_network(
        &g,
        7,
        IdSpace::new(31).unwrap(),
        0.65,
        &mut ChaCha8Rng::seed_from_u64(1),
    )
    .unwrap();
    let overlay = Overlay::build(&tree, OverlayParams::default(), ForgeMode::Colluding, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    c.bench_function("lookup/2000", |b| {
        b.iter_batched(
            || {
                let init = NodeIdx(rng.gen_range(0..overlay.len() as u32));
                (
                    init,
                    overlay.replica_target(NodeId(rng.gen_range(0..1 << 31))),
                )
            },
            |(init, key)| {
                iterative_lookup(&overlay, init, &key, LookupParams::default(), &|_| true).unwrap()
            },
            BatchSize::SmallInput,
        )
    });
}

fn campaign(c: &mut Criterion) {
    let g = chorded_ring(1_000).unwrap();
    let config = ExperimentConfig {
        gn_ratio: 1.0,
        lookups: 100,
        ..ExperimentConfig::default()
    };
    let world = World::build(&config, &g).unwrap();
    c.bench_function("campaign/1000", |b| {
        b.iter_batched(
            || world.clone(),
            |mut w| w.run_campaign().map(|r| r.records.len()).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

fn end_to_end(c: &mut Criterion) {
    let g = chorded_ring(1_000).unwrap();
    let config = ExperimentConfig {
        gn_ratio: 1.0,
        lookups: 200,
        ..ExperimentConfig::default()
    };
    let mut group = c.benchmark_group("experiment");
    group.sample_size(10);
    group.bench_function("1000", |b| b.iter(|| run_on_graph(&config, &g).unwrap()));
    group.finish();
}

criterion_group!(benches, bootstrap, tables, lookup, campaign, end_to_end);
criterion_main!(benches);
