mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use suc_core::benders::{run_bd_with_cuts, BdParams, Recourse};
use suc_core::crg::{run_crg, CrgParams};
use suc_core::dw::{add_column, build_master, solve_pricing, ColumnPool, PricingProblem};
use suc_core::extensive::{build_extensive_form, solve_bb, BbParams};
use suc_core::formulation::{first_stage_costs, FirstStageLayout, SecondStage};
use suc_core::model::{check_second_stage, evaluate_objective, Scenario, Schedule};
use suc_core::solver::{MipOptions, RowSense};
use suc_core::{formulation, Executor};

fn bb(instance: &suc_core::Instance) -> f64 {
    let params = BbParams {
        time_limit: 60.0,
        rel_gap: 1e-9,
        warm_start: true,
    };
    solve_bb(instance, &params, Executor::sequential()).unwrap().0.objective
}

#[test]
fn recourse_matches_merit_order() {
    for seed in 0..6 {
        let inst = merit_instance(seed);
        let layout = FirstStageLayout::new(&inst);
        let pools: Vec<_> = inst
            .generators
            .iter()
            .enumerate()
            .map(|(g, gen)| enumerate_schedules(g, gen, inst.horizon))
            .collect();
        let recourse = Recourse::new(&inst, Executor::sequential());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let x = random_point(&pools, &layout, &mut rng);
            let schedules = formulation::vector_to_schedules(&x, &layout);
            for s in 0..inst.num_scenarios() {
                let (q, _) = recourse.evaluate_q(&x, s).unwrap();
                let oracle = merit_order_q(&inst, &schedules, s);
                assert!(rel_diff(q, oracle) < 1e-9, "seed {seed} scenario {s}: {q} vs {oracle}");
            }
        }
    }
}

#[test]
fn all_algorithms_match_brute_force() {
    for seed in 0..4 {
        let inst = merit_instance(100 + seed);
        let oracle = brute_force_optimum(&inst);
        let bb = bb(&inst);
        let bd = run_bd_with_cuts(
            &inst,
            &BdParams {
                alpha: 0.4,
                beta: 0.5,
                epsilon: 1e-6,
                time_limit: 60.0,
            },
            Executor::sequential(),
        )
        .unwrap()
        .0
        .objective;
        let crg = run_crg(
            &inst,
            &CrgParams {
                epsilon: 1e-6,
                time_limit: 60.0,
                ..CrgParams::default()
            },
            Executor::sequential(),
        )
        .unwrap()
        .0
        .objective;
        for (name, v) in [("bb", bb), ("bd", bd), ("crg", crg)] {
            assert!(rel_diff(v, oracle) <= 1e-6, "seed {seed} {name}: {v} vs {oracle}");
        }
    }
}

#[test]
fn reported_solutions_are_feasible_and_priced_consistently() {
    let inst = desk_instance(7);
    let (sol, _) = run_crg(&inst, &CrgParams::default(), Executor::sequential()).unwrap();
    for (s, gen) in sol.schedules.iter().zip(&inst.generators) {
        assert!(suc_core::model::check_schedule_feasibility(s, gen).unwrap().is_empty());
    }
    for y in &sol.second_stage {
        let v = check_second_stage(y, &sol.schedules, &inst, y.scenario).unwrap();
        assert!(v.is_empty(), "{v:?}");
    }
    let recomputed = evaluate_objective(&sol.schedules, &sol.second_stage, &inst).unwrap();
    assert!(rel_diff(recomputed, sol.objective) < 1e-9);
}

#[test]
fn subproblem_duals_are_dual_feasible_and_tight() {
    let inst = desk_instance(3);
    let layout = FirstStageLayout::new(&inst);
    let pools: Vec<_> = inst
        .generators
        .iter()
        .enumerate()
        .map(|(g, gen)| enumerate_schedules(g, gen, inst.horizon))
        .collect();
    let recourse = Recourse::new(&inst, Executor::sequential());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let x = random_point(&pools, &layout, &mut rng);
        let res = recourse.evaluate(&x).unwrap();
        for (r, cut) in res.iter().zip(recourse.cuts(&res)) {
            let stage = SecondStage::build(&inst, &layout, r.scenario);
            // W^T gamma <= q
            let mut wt = vec![0.0; stage.vars.len()];
            for (row, &g) in stage.rows.iter().zip(&r.duals) {
                match row.sense {
                    RowSense::Ge => assert!(g >= -1e-7, "Ge row with negative dual {g}"),
                    RowSense::Le => assert!(g <= 1e-7, "Le row with positive dual {g}"),
                    RowSense::Eq => {}
                }
                for &(j, a) in &row.w {
                    wt[j] += a * g;
                }
            }
            for (j, v) in stage.vars.iter().enumerate() {
                assert!(wt[j] <= v.cost + 1e-6 * (1.0 + v.cost.abs()), "column {j}: {} > {}", wt[j], v.cost);
            }
            assert!(rel_diff(cut.value_at(&x), r.value) < 1e-7);
        }
    }
}

#[test]
fn cuts_support_q_along_segments() {
    // Q is convex on the hull of feasible points, so a cut taken at any
    // combination underestimates Q at every other combination.
    let inst = desk_instance(5);
    let layout = FirstStageLayout::new(&inst);
    let pools: Vec<_> = inst
        .generators
        .iter()
        .enumerate()
        .map(|(g, gen)| enumerate_schedules(g, gen, inst.horizon))
        .collect();
    let recourse = Recourse::new(&inst, Executor::sequential());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let a = random_point(&pools, &layout, &mut rng);
        let b = random_point(&pools, &layout, &mut rng);
        let at = |t: f64| -> Vec<f64> { a.iter().zip(&b).map(|(p, q)| t * p + (1.0 - t) * q).collect() };
        let base = at(rng.gen_range(0.0..1.0));
        let cuts = recourse.cuts(&recourse.evaluate(&base).unwrap());
        for k in 0..=10 {
            let x = at(k as f64 / 10.0);
            for cut in &cuts {
                let (q, _) = recourse.evaluate_q(&x, cut.scenario).unwrap();
                assert!(cut.value_at(&x) <= q + 1e-5 * (1.0 + q.abs()));
            }
        }
    }
}

#[test]
fn lp_relaxation_bounds_the_integer_optimum() {
    for seed in 0..4 {
        let inst = desk_instance(seed);
        let mut ef = build_extensive_form(&inst, true).unwrap();
        let lp = ef.model.solve_lp(f64::INFINITY).unwrap().objective;
        let opt = bb(&inst);
        assert!(lp <= opt + 1e-6 * opt.abs(), "seed {seed}: {lp} > {opt}");
    }
}

#[test]
fn zero_probability_scenario_changes_nothing() {
    let inst = desk_instance(9);
    let base = bb(&inst);
    let mut extra = inst.clone();
    extra.scenarios.push(Scenario {
        demand: inst.scenarios[0].demand.iter().map(|d| d * 1.5).collect(),
        probability: 0.0,
    });
    let with = bb(&extra);
    assert!(rel_diff(base, with) < 1e-9, "{base} vs {with}");
}

#[test]
fn pricing_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for seed in 0..4 {
        let inst = desk_instance(seed);
        for (g, gen) in inst.generators.iter().enumerate() {
            let all = enumerate_schedules(g, gen, inst.horizon);
            let n = 3 * gen.num_modes() * inst.horizon;
            for _ in 0..5 {
                let pi: Vec<f64> = (0..n).map(|_| rng.gen_range(-100.0..100.0)).collect();
                let r = solve_pricing(g, gen, inst.horizon, &pi, 0.0).unwrap();
                let best = all
                    .iter()
                    .map(|s| -s.to_vector().iter().zip(&pi).map(|(a, b)| a * b).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                assert!((r.reduced_value - best).abs() <= 1e-7 * (1.0 + best.abs()));
            }
        }
    }
}

#[test]
fn dynamic_program_and_binary_program_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for seed in 0..6 {
        let inst = merit_instance(seed);
        for (g, gen) in inst.generators.iter().enumerate() {
            let mut dp = PricingProblem::new(g, gen, inst.horizon);
            let mut mip = PricingProblem::new_mip(g, gen, inst.horizon);
            assert!(dp.uses_dynamic_program() && !mip.uses_dynamic_program());
            let all = enumerate_schedules(g, gen, inst.horizon);
            let n = 3 * gen.num_modes() * inst.horizon;
            for _ in 0..10 {
                let pi: Vec<f64> = (0..n).map(|_| rng.gen_range(-50.0..50.0)).collect();
                let a = dp.solve(&pi, 1.0).unwrap();
                let b = mip.solve(&pi, 1.0).unwrap();
                assert!(all.contains(&a.schedule));
                assert!((a.reduced_value - b.reduced_value).abs() <= 1e-7 * (1.0 + b.reduced_value.abs()));
            }
        }
    }
}

#[test]
fn full_pool_with_benders_cuts_reproduces_the_optimum() {
    for seed in 0..3 {
        let inst = desk_instance(20 + seed);
        let opt = bb(&inst);
        let (_, _, cuts) = run_bd_with_cuts(
            &inst,
            &BdParams {
                alpha: 0.4,
                beta: 0.5,
                epsilon: 1e-6,
                time_limit: 60.0,
            },
            Executor::sequential(),
        )
        .unwrap();
        let mut pool = ColumnPool::new(inst.generators.len());
        for (g, gen) in inst.generators.iter().enumerate() {
            for s in enumerate_schedules(g, gen, inst.horizon) {
                assert!(add_column(&mut pool, &inst, s).unwrap());
            }
        }
        let master = build_master(&inst, &pool, &cuts, true).unwrap();
        let mip = master
            .solve_integer(
                MipOptions {
                    time_limit: 60.0,
                    rel_gap: 1e-9,
                },
                None,
            )
            .unwrap();
        assert!(rel_diff(mip.objective, opt) <= 1e-6, "seed {seed}: {} vs {opt}", mip.objective);
    }
}

#[test]
fn master_lp_value_does_not_increase_with_columns() {
    let inst = desk_instance(11);
    let layout = FirstStageLayout::new(&inst);
    let c = first_stage_costs(&inst, &layout);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pools: Vec<Vec<Schedule>> = inst
        .generators
        .iter()
        .enumerate()
        .map(|(g, gen)| enumerate_schedules(g, gen, inst.horizon))
        .collect();
    let mut pool = ColumnPool::new(inst.generators.len());
    for (g, p) in pools.iter().enumerate() {
        pool.add(&inst.generators[g], &c[layout.block(g)], p[rng.gen_range(0..p.len())].clone())
            .unwrap();
    }
    let recourse = Recourse::new(&inst, Executor::sequential());
    let x0 = random_point(&pools, &layout, &mut rng);
    let cuts = recourse.cuts(&recourse.evaluate(&x0).unwrap());
    let mut master = build_master(&inst, &pool, &cuts, false).unwrap();
    let mut prev = master.solve_lp(f64::INFINITY).unwrap().objective;
    for _ in 0..15 {
        let g = rng.gen_range(0..pools.len());
        let s = pools[g][rng.gen_range(0..pools[g].len())].clone();
        if pool.add(&inst.generators[g], &c[layout.block(g)], s).unwrap() {
            let col = pool.columns(g).last().unwrap().clone();
            master.add_column(g, &col);
            let sol = master.solve_lp(f64::INFINITY).unwrap();
            assert!(sol.objective <= prev + 1e-7 * (1.0 + prev.abs()));
            for (g, w) in sol.mu.iter().enumerate() {
                let total: f64 = w.iter().sum();
                assert!((total - 1.0).abs() < 1e-7, "generator {g} weights sum to {total}");
                assert!(w.iter().all(|&v| v >= -1e-9));
            }
            prev = sol.objective;
        }
    }
}

#[test]
fn parallel_and_sequential_runs_agree() {
    let inst = desk_instance(13);
    let params = CrgParams::default();
    let (a, ta) = run_crg(&inst, &params, Executor::sequential()).unwrap();
    let (b, tb) = run_crg(&inst, &params, Executor::with_workers(4)).unwrap();
    assert_eq!(a.objective, b.objective);
    assert_eq!(a.lower_bound, b.lower_bound);
    assert_eq!(a.schedules, b.schedules);
    let events = |t: &suc_core::SolveTrace| {
        t.records
            .iter()
            .map(|r| (r.event, r.best_ub, r.best_lb))
            .collect::<Vec<_>>()
    };
    assert_eq!(events(&ta), events(&tb));
}
