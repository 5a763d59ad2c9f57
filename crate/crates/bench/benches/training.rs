//! Training throughput: episodes per second for one demand level, per
//! settlement rule. One level is the parallel work unit of a full run, so
//! a full table costs roughly `levels / cores` times these figures.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use spaclab_core::{build_pniec_scenario, train_state, Mechanism, TrainingConfig};

fn one_demand_level(c: &mut Criterion) {
    let scenario = build_pniec_scenario();
    let mut group = c.benchmark_group("train_500_episodes_one_level");
    group.sample_size(20);
    for mechanism in Mechanism::ALL {
        let mut config = TrainingConfig::new(mechanism, 7);
        config.episodes = 500;
        group.bench_function(mechanism.to_string(), |b| {
            b.iter(|| {
                train_state(&scenario, &config, black_box(0), black_box(1200.0), false).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, one_demand_level);
criterion_main!(benches);
