use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use suc_core::benders::Recourse;
use suc_core::dw::PricingProblem;
use suc_core::extensive::hold_initial_state;
use suc_core::formulation::{schedules_to_vector, FirstStageLayout};
use suc_core::io::{generate_synthetic, SyntheticConfig};
use suc_core::Executor;

fn executors() -> Vec<(&'static str, Executor)> {
    vec![
        ("sequential", Executor::sequential()),
        ("parallel", Executor::with_workers(0)),
    ]
}

fn scenario_fanout(c: &mut Criterion) {
    let inst = generate_synthetic(&SyntheticConfig {
        seed: 1,
        generators: 20,
        combined_cycle: 2,
        horizon: 24,
        scenarios: 16,
    })
    .unwrap();
    let layout = FirstStageLayout::new(&inst);
    let x = schedules_to_vector(&hold_initial_state(&inst), &layout);
    let mut group = c.benchmark_group("subproblems");
    group.sample_size(10);
    for (name, exec) in executors() {
        let recourse = Recourse::new(&inst, exec);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| recourse.evaluate(&x).unwrap())
        });
    }
    group.finish();
}

fn pricing_fanout(c: &mut Criterion) {
    let inst = generate_synthetic(&SyntheticConfig {
        seed: 2,
        generators: 16,
        combined_cycle: 4,
        horizon: 24,
        scenarios: 1,
    })
    .unwrap();
    let layout = FirstStageLayout::new(&inst);
    let pi: Vec<f64> = (0..layout.len).map(|j| ((j * 37 % 101) as f64 - 50.0) * 10.0).collect();
    let mut group = c.benchmark_group("pricing");
    group.sample_size(10);
    for (name, exec) in executors() {
        let problems: Vec<std::sync::Mutex<PricingProblem>> = inst
            .generators
            .iter()
            .enumerate()
            .map(|(g, gen)| std::sync::Mutex::new(PricingProblem::new(g, gen, inst.horizon)))
            .collect();
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                exec.map(problems.len(), |g| {
                    problems[g].lock().unwrap().solve(&pi[layout.block(g)], 0.0).unwrap()
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, scenario_fanout, pricing_fanout);
criterion_main!(benches);
