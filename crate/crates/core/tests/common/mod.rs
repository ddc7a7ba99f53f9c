#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use suc_core::formulation::FirstStageLayout;
use suc_core::io::{generate_synthetic, SyntheticConfig};
use suc_core::model::{
    check_schedule_feasibility, first_stage_cost, CostBreakpoint, Generator, InitialState, Instance, Mode,
    Scenario, Schedule,
};

/// Desk-scale synthetic instance: 3-5 generators (at least one two-mode
/// unit), 4-6 periods, 2-3 scenarios.
pub fn desk_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    generate_synthetic(&SyntheticConfig {
        seed,
        generators: rng.gen_range(3..=5),
        combined_cycle: 1,
        horizon: rng.gen_range(4..=6),
        scenarios: rng.gen_range(2..=3),
    })
    .expect("synthetic instance")
}

/// Every feasible schedule of one generator, by brute force over
/// commitments. Startups and shutdowns follow from commitment transitions.
pub fn enumerate_schedules(g: usize, gen: &Generator, horizon: usize) -> Vec<Schedule> {
    let modes = gen.num_modes();
    let n = modes * horizon;
    assert!(n <= 16, "enumeration too large");
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        let u: Vec<Vec<bool>> = (0..modes)
            .map(|m| (0..horizon).map(|t| mask >> (m * horizon + t) & 1 == 1).collect())
            .collect();
        let s = Schedule::from_commitment(g, gen, &u);
        if check_schedule_feasibility(&s, gen).unwrap().is_empty() {
            out.push(s);
        }
    }
    out
}

/// Random feasible first-stage point: one enumerated schedule per generator.
pub fn random_point(pools: &[Vec<Schedule>], layout: &FirstStageLayout, rng: &mut impl Rng) -> Vec<f64> {
    let mut x = vec![0.0; layout.len];
    for (g, pool) in pools.iter().enumerate() {
        let s = &pool[rng.gen_range(0..pool.len())];
        x[layout.block(g)].copy_from_slice(&s.to_vector());
    }
    x
}

/// Instance whose ramp limits never bind and whose costs are convex, so
/// dispatch reduces to merit order.
pub fn merit_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = rng.gen_range(3..=4);
    let n_gen = rng.gen_range(2..=3);
    let mut generators = Vec::new();
    let mut capacity = 0.0;
    for g in 0..n_gen {
        let n_modes = if g == 0 { 2 } else { 1 };
        let mut modes = Vec::new();
        for m in 0..n_modes {
            let min = rng.gen_range(5..=20) as f64;
            let max = min + rng.gen_range(10..=40) as f64;
            capacity += max;
            let mut cost = rng.gen_range(10..=40) as f64;
            let segments = rng.gen_range(1..=2);
            let mut bps = vec![CostBreakpoint {
                power: min,
                marginal_cost: cost,
            }];
            for k in 1..=segments {
                cost += rng.gen_range(1..=10) as f64;
                let power = if k == segments {
                    max
                } else {
                    (min + max) / 2.0
                };
                bps.push(CostBreakpoint {
                    power,
                    marginal_cost: cost,
                });
            }
            modes.push(Mode {
                min_power: min,
                max_power: max,
                min_up: rng.gen_range(1..=2),
                min_down: rng.gen_range(1..=2),
                ramp_up: 1e4,
                ramp_down: 1e4,
                ramp_startup: 1e4,
                ramp_shutdown: 1e4,
                cost_breakpoints: bps,
                supporting_mode: (m > 0).then_some(0),
            });
        }
        let initial_state = if rng.gen_bool(0.5) {
            InitialState {
                mode: Some(0),
                periods: rng.gen_range(1..=3),
                power: modes[0].min_power,
            }
        } else {
            InitialState::offline(rng.gen_range(1..=3))
        };
        generators.push(Generator {
            name: format!("g{g}"),
            modes,
            initial_state,
        });
    }
    let n_scen = rng.gen_range(1..=3);
    let scenarios = (0..n_scen)
        .map(|_| Scenario {
            demand: (0..horizon).map(|_| rng.gen_range(0.2..0.9) * capacity).collect(),
            probability: 1.0 / n_scen as f64,
        })
        .collect();
    let instance = Instance {
        horizon,
        period_hours: 1.0,
        generators,
        scenarios,
        penalty: vec![500.0; horizon],
        reserve_requirement: vec![0.0; horizon],
    };
    instance.validate().unwrap();
    instance
}

/// Dispatch cost of one scenario by merit order; valid for
/// [`merit_instance`]-style instances only.
pub fn merit_order_q(instance: &Instance, schedules: &[Schedule], s: usize) -> f64 {
    let h = instance.period_hours;
    let mut total = 0.0;
    for t in 0..instance.horizon {
        let mut residual = instance.scenarios[s].demand[t];
        let mut blocks: Vec<(f64, f64)> = Vec::new();
        for (sch, gen) in schedules.iter().zip(&instance.generators) {
            for (m, mode) in gen.modes.iter().enumerate() {
                if !sch.u(m, t) {
                    continue;
                }
                residual -= mode.min_power;
                for pair in mode.cost_breakpoints.windows(2) {
                    blocks.push((pair[1].marginal_cost, pair[1].power - pair[0].power));
                }
            }
        }
        let pen = instance.penalty[t];
        if residual < 0.0 {
            total += h * pen * -residual;
            continue;
        }
        blocks.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for (cost, size) in blocks {
            if residual <= 0.0 || cost >= pen {
                break;
            }
            let take = size.min(residual);
            total += h * cost * take;
            residual -= take;
        }
        total += h * pen * residual.max(0.0);
    }
    total
}

/// Optimum by enumerating every combination of generator schedules.
pub fn brute_force_optimum(instance: &Instance) -> f64 {
    let pools: Vec<Vec<Schedule>> = instance
        .generators
        .iter()
        .enumerate()
        .map(|(g, gen)| enumerate_schedules(g, gen, instance.horizon))
        .collect();
    let mut best = f64::INFINITY;
    let mut pick = vec![0usize; pools.len()];
    loop {
        let chosen: Vec<Schedule> = pick.iter().enumerate().map(|(g, &k)| pools[g][k].clone()).collect();
        let mut value: f64 = chosen
            .iter()
            .zip(&instance.generators)
            .map(|(s, gen)| first_stage_cost(s, gen, instance.period_hours))
            .sum();
        for (s, sc) in instance.scenarios.iter().enumerate() {
            value += sc.probability * merit_order_q(instance, &chosen, s);
        }
        best = best.min(value);
        let mut g = 0;
        loop {
            if g == pick.len() {
                return best;
            }
            pick[g] += 1;
            if pick[g] < pools[g].len() {
                break;
            }
            pick[g] = 0;
            g += 1;
        }
    }
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}
