use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use duojaw_core::parallel::{map_indexed, Execution};
use duojaw_core::search::{Episode, EpisodeSetup, SearchConfig, SpiralOutcome};
use duojaw_core::tasks::{run_task, RunContext, TaskKind, TaskScript};
use duojaw_core::world::{BoreSegment, BoredPart, Compliance, Entry, Peg, TipState, WorldConfig};
use nalgebra::Isometry3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn spiral_grid(c: &mut Criterion) {
    let cfg = SearchConfig::default();
    let world = WorldConfig::default();
    let part = BoredPart::through(vec![BoreSegment::new(6.01, 12.0)], 30.0, 0.3);
    let n = 21;
    let search = |i: usize| {
        let (x, y) = (-2.0 + (i % n) as f64 * 0.2, -2.0 + (i / n) as f64 * 0.2);
        let setup = EpisodeSetup {
            peg: Peg::cylinder(6.0, 40.0, 0.0),
            part: part.clone(),
            entry: Entry::Front,
            frame: Isometry3::identity(),
            start: TipState::new(x, y, 0.0),
            tilt_rad: 0.0,
            compliance: Compliance::Compliant,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
        let mut ep = Episode::new(setup, &cfg, &world, 0.0, 0.0, &mut rng).unwrap();
        matches!(ep.spiral_search().unwrap(), SpiralOutcome::HoleFound { .. })
    };
    let mut group = c.benchmark_group("spiral_grid_21x21");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(map_indexed(n * n, exec, search)))
        });
    }
    group.finish();
}

fn task_batch(c: &mut Criterion) {
    let script = TaskScript::canonical(TaskKind::ClampingPulleySet);
    let mut group = c.benchmark_group("clamping_task_x32");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                black_box(map_indexed(32, exec, |i| {
                    run_task(&script, &RunContext::with_seed(i as u64)).unwrap().success
                }))
            })
        });
    }
    group.finish();
}

criterion_group!(benches, spiral_grid, task_batch);
criterion_main!(benches);
