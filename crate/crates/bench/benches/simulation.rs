use std::hint::black_box;

use bwbroker_core::io::{bundled, parse_scenario_str};
use bwbroker_core::{run, BamModel};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

/// One seed of the first hour of the reference scenario.
fn first_phase(c: &mut Criterion) {
    let mut scenario = parse_scenario_str(bundled("scenario1.toml").unwrap(), "scenario1", None).unwrap();
    scenario.phases.truncate(1);
    let mut group = c.benchmark_group("simulate_one_hour");
    group.sample_size(10);
    for model in BamModel::ALL {
        let ms = scenario.with_model(model);
        group.bench_function(BenchmarkId::from_parameter(model), |b| {
            b.iter(|| black_box(run(&ms, 1).unwrap()));
        });
    }
    group.finish();
}

criterion_group!(benches, first_phase);
criterion_main!(benches);
