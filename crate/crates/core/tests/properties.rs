mod common;

use proptest::prelude::*;

use suc_core::benders::convex_combination;
use suc_core::crg::{in_out_point, update_core_point};
use suc_core::formulation::{schedule_rows, FirstStageLayout};
use suc_core::io::{generate_synthetic, instance_to_string, parse_instance_str, SyntheticConfig};
use suc_core::model::{check_schedule_feasibility, Schedule};
use suc_core::optimality_gap;
use suc_core::trace::{SolveTrace, TraceEvent};

fn unit_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn in_out_point_stays_in_the_box(a in unit_vec(12), b in unit_vec(12), alpha in 0.0f64..=1.0) {
        let io = in_out_point(&a, &b, alpha).unwrap();
        for ((p, q), r) in a.iter().zip(&b).zip(&io) {
            prop_assert!(*r >= p.min(*q) - 1e-15 && *r <= p.max(*q) + 1e-15);
        }
    }

    #[test]
    fn endpoint_weights_are_exact(a in unit_vec(8), b in unit_vec(8)) {
        prop_assert_eq!(convex_combination(&a, &b, 1.0).unwrap(), a.clone());
        prop_assert_eq!(convex_combination(&a, &b, 0.0).unwrap(), b.clone());
    }

    #[test]
    fn core_update_contracts_toward_io(io in unit_vec(10), core in unit_vec(10), beta in 0.0f64..=1.0) {
        let next = update_core_point(&io, &core, beta).unwrap();
        let dist = |x: &[f64]| x.iter().zip(&io).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(dist(&next) <= (1.0 - beta) * dist(&core) + 1e-12);
    }

    #[test]
    fn gap_is_nonnegative_and_zero_at_equality(ub in 1.0f64..1e9, frac in 0.0f64..1.0) {
        let lb = ub * frac;
        let g = optimality_gap(ub, lb);
        prop_assert!(g >= 0.0);
        prop_assert!((g - (ub - lb) / ub).abs() < 1e-12);
        prop_assert_eq!(optimality_gap(ub, ub), 0.0);
    }

    #[test]
    fn trace_bounds_are_monotone(offers in prop::collection::vec((any::<bool>(), 0.0f64..1e6), 1..40)) {
        let mut trace = SolveTrace::new();
        let mut last = (f64::INFINITY, f64::NEG_INFINITY);
        for (i, (is_ub, v)) in offers.into_iter().enumerate() {
            if is_ub { trace.offer_ub(v); } else { trace.offer_lb(v); }
            trace.record(TraceEvent::CutRound, i);
            let r = trace.last().unwrap();
            prop_assert!(r.best_ub <= last.0 && r.best_lb >= last.1);
            last = (r.best_ub, r.best_lb);
        }
    }

    #[test]
    fn instance_files_round_trip(
        seed in any::<u64>(),
        generators in 1usize..8,
        cc in 0usize..3,
        horizon in 2usize..10,
        scenarios in 1usize..5,
    ) {
        let cfg = SyntheticConfig {
            seed,
            generators,
            combined_cycle: cc.min(generators),
            horizon,
            scenarios,
        };
        let inst = generate_synthetic(&cfg).unwrap();
        inst.validate().unwrap();
        let text = instance_to_string(&inst);
        let back = parse_instance_str(&text, "prop").unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(instance_to_string(&generate_synthetic(&cfg).unwrap()), text);
    }

    #[test]
    fn schedule_vectors_round_trip(seed in 0u64..500, mask in any::<u32>()) {
        let inst = common::desk_instance(seed);
        let gen = &inst.generators[0];
        let t = inst.horizon;
        let u: Vec<Vec<bool>> = (0..gen.num_modes())
            .map(|m| (0..t).map(|k| mask >> ((m * t + k) % 32) & 1 == 1).collect())
            .collect();
        let s = Schedule::from_commitment(0, gen, &u);
        let x = s.to_vector();
        prop_assert_eq!(Schedule::from_vector(0, gen.num_modes(), t, &x), s.clone());
        let layout = FirstStageLayout::new(&inst);
        prop_assert_eq!(layout.block(0).len(), x.len());

        // the checker and the model rows agree on every commitment pattern
        let rows = schedule_rows(gen, t, 0);
        // initial-state fixings live in the variable bounds, not the rows
        let fixed_ok = (0..gen.num_modes())
            .all(|m| (0..t).all(|k| gen.initial_fixing(m, k).map_or(true, |f| f == s.u(m, k))));
        let by_rows = fixed_ok && rows.iter().all(|r| r.violation(&x) <= 1e-9);
        let by_checker = check_schedule_feasibility(&s, gen).unwrap().is_empty();
        prop_assert_eq!(by_rows, by_checker);
    }
}
