use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use fedmpc::fl::Program;
use fedmpc::rational::{int, ratio};
use fedmpc::secagg::PairwiseMaskSet;
use fedmpc::sim::{
    check_private_computation, field_grid, CompositeSimulator, CorruptionSet, EnumOptions, Mode,
    Setup,
};
use fedmpc::{
    enumerate_real_distribution, run_fl, secure_agg_round, ClientDataset, Example, FieldSpec,
    FieldVector, FlConfig, MaskSource, Modulus, Variant,
};

fn config(q: u64, d: usize, clients: usize) -> FlConfig {
    FlConfig {
        field: FieldSpec::new(Modulus::new(q).unwrap(), d).unwrap(),
        clients,
        scale: 1,
        learning_rate: ratio(1, 64),
        program: Program::LinearSquaredGradient,
        eligibility_min: 1,
        selection_seed: 0,
        initial_model: vec![int(0); d],
    }
}

fn pool(clients: usize, d: usize) -> Vec<ClientDataset> {
    (0..clients)
        .map(|i| {
            let examples = (0..4)
                .map(|k| {
                    let x = (0..d).map(|j| int(((i + k + j) % 3) as i64 - 1)).collect();
                    Example::new(x, int((k % 2) as i64))
                })
                .collect();
            ClientDataset::new(i as u64 + 1, examples).unwrap()
        })
        .collect()
}

fn secure_aggregation(c: &mut Criterion) {
    let mut group = c.benchmark_group("secure_agg_round");
    for clients in [3usize, 10, 30] {
        let field = FieldSpec::new(Modulus::new(1_000_003).unwrap(), 16).unwrap();
        let updates: Vec<_> = (0..clients)
            .map(|i| FieldVector::new(field.modulus, vec![i as u64 * 7919; 16]).unwrap())
            .collect();
        let masks = PairwiseMaskSet::derive(42, 0, field, clients);
        group.bench_with_input(BenchmarkId::from_parameter(clients), &clients, |b, _| {
            b.iter(|| secure_agg_round(black_box(&updates), &masks).unwrap())
        });
    }
    group.finish();
}

fn protocol_runs(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_fl");
    let cfg = config(1_000_003, 4, 5);
    let data = pool(5, 4);
    for variant in Variant::ALL {
        group.bench_function(variant.tag(), |b| {
            b.iter(|| run_fl(&cfg, black_box(&data), variant, 3, &MaskSource::Seeded(1)).unwrap())
        });
    }
    group.finish();
}

fn enumeration(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumeration");
    group.sample_size(10);
    let setup = Setup::new(config(5, 1, 3), 1).unwrap();
    let opts = EnumOptions::default();
    let grid = field_grid(&setup.config, &opts).unwrap();
    let server = CorruptionSet::server_only(4).unwrap();
    group.bench_function("real_masked_3_clients", |b| {
        b.iter(|| {
            enumerate_real_distribution(
                Variant::Masked,
                &setup,
                &grid[17].datasets,
                &server,
                Mode::Deterministic,
                &opts,
            )
            .unwrap()
        })
    });
    let small = Setup::new(config(5, 1, 2), 1).unwrap();
    let small_grid = field_grid(&small.config, &opts).unwrap();
    let sets = [CorruptionSet::server_only(3).unwrap(), CorruptionSet::all_clients(3).unwrap()];
    let sim = CompositeSimulator::for_variant(Variant::Masked);
    group.bench_function("privacy_check_2_clients", |b| {
        b.iter(|| {
            check_private_computation(
                Variant::Masked,
                &sim,
                &small,
                &small_grid,
                &sets,
                &[Mode::Deterministic, Mode::General],
                &opts,
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, secure_aggregation, protocol_runs, enumeration);
criterion_main!(benches);
