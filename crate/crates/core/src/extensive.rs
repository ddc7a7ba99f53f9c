//! Deterministic-equivalent model: first-stage binaries shared by all
//! scenarios, one dispatch block per scenario. Variable order is
//! `x` (generator blocks) followed by each scenario's `y` in scenario order.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::formulation::{
    add_schedule_vars, first_stage_costs, schedules_to_vector, vector_to_schedules, FirstStageLayout,
    SecondStage,
};
use crate::model::{Instance, Schedule, SecondStageSolution};
use crate::parallel::Executor;
use crate::solution::{Algorithm, RunStatus, Timings, UcSolution};
use crate::solver::{MipOptions, ModelHandle, Row, SolveStatus, VarKind};
use crate::trace::{SolveTrace, TraceEvent};

/// Binaries farther than this from {0, 1} are reported before rounding.
pub const BINARY_TOL: f64 = 1e-6;

#[derive(Debug)]
pub struct ExtensiveFormModel {
    pub model: ModelHandle,
    pub layout: FirstStageLayout,
    pub stages: Vec<SecondStage>,
    /// First model variable of each scenario block.
    pub y_offsets: Vec<usize>,
    /// Model row of every template row, per scenario.
    pub stage_rows: Vec<Vec<usize>>,
    pub relaxed: bool,
}

impl ExtensiveFormModel {
    pub fn num_binaries(&self) -> usize {
        self.layout.len
    }

    pub fn first_stage<'a>(&self, primal: &'a [f64]) -> &'a [f64] {
        &primal[..self.layout.len]
    }

    pub fn decode(&self, primal: &[f64], instance: &Instance) -> (Vec<Schedule>, Vec<SecondStageSolution>) {
        let x = self.first_stage(primal);
        if !self.relaxed {
            if let Some(worst) = x
                .iter()
                .map(|v| (v - v.round()).abs())
                .max_by(|a, b| a.total_cmp(b))
            {
                if worst > BINARY_TOL {
                    log::warn!("binary value {worst} away from integral before rounding");
                }
            }
        }
        let schedules = vector_to_schedules(x, &self.layout);
        let second = self
            .stages
            .iter()
            .zip(&self.y_offsets)
            .map(|(st, &off)| st.decode(&primal[off..off + st.num_vars()], instance))
            .collect();
        (schedules, second)
    }

    /// Full primal vector from a first-stage point and per-scenario dispatch.
    pub fn assemble(&self, x: &[f64], ys: &[Vec<f64>]) -> Vec<f64> {
        let mut out = x.to_vec();
        for y in ys {
            out.extend_from_slice(y);
        }
        out
    }
}

pub fn build_extensive_form(instance: &Instance, relax_integrality: bool) -> Result<ExtensiveFormModel> {
    instance.validate()?;
    let layout = FirstStageLayout::new(instance);
    let c = first_stage_costs(instance, &layout);
    let kind = if relax_integrality {
        VarKind::Continuous
    } else {
        VarKind::Binary
    };
    let mut model = ModelHandle::new();
    let mut rows = Vec::new();
    for (g, gen) in instance.generators.iter().enumerate() {
        let base = add_schedule_vars(&mut model, gen, instance.horizon, &c[layout.block(g)], kind);
        rows.extend(crate::formulation::schedule_rows(gen, instance.horizon, base));
    }
    for row in rows {
        model.add_row(row);
    }
    let mut stages = Vec::new();
    let mut y_offsets = Vec::new();
    let mut stage_rows = Vec::new();
    for (s, sc) in instance.scenarios.iter().enumerate() {
        let stage = SecondStage::build(instance, &layout, s);
        let off = model.num_vars();
        for v in &stage.vars {
            let mut v = *v;
            v.cost *= sc.probability;
            model.add_var(v);
        }
        let mut idx = Vec::with_capacity(stage.rows.len());
        for row in &stage.rows {
            let mut entries: Vec<(usize, f64)> = row.w.iter().map(|&(j, a)| (off + j, a)).collect();
            entries.extend(row.t.iter().copied());
            idx.push(model.add_row(Row::new(entries, row.sense, row.h)));
        }
        y_offsets.push(off);
        stage_rows.push(idx);
        stages.push(stage);
    }
    Ok(ExtensiveFormModel {
        model,
        layout,
        stages,
        y_offsets,
        stage_rows,
        relaxed: relax_integrality,
    })
}

/// Schedules that keep every generator in its initial state for the whole
/// horizon. Always feasible: no transitions, and the initial chain has a
/// single base mode.
pub fn hold_initial_state(instance: &Instance) -> Vec<Schedule> {
    instance
        .generators
        .iter()
        .enumerate()
        .map(|(g, gen)| {
            let online = gen.initially_online();
            let u: Vec<Vec<bool>> = online.iter().map(|&on| vec![on; instance.horizon]).collect();
            Schedule::from_commitment(g, gen, &u)
        })
        .collect()
}

/// Solves the single-scenario problem for the scenario with the highest
/// single-period demand (ties to the lowest id) to a 1e-4 relative gap.
pub fn solve_deterministic_peak(instance: &Instance, time_limit: f64) -> Result<Vec<Schedule>> {
    if instance.scenarios.is_empty() {
        return Err(Error::InvalidInstance("no scenarios".into()));
    }
    let peak = instance.single_scenario(instance.peak_scenario());
    let mut ef = build_extensive_form(&peak, false)?;
    let mip = ef.model.solve_mip(
        MipOptions {
            time_limit,
            rel_gap: 1e-4,
        },
        None,
    )?;
    match mip.primal {
        Some(x) => Ok(vector_to_schedules(ef.first_stage(&x), &ef.layout)),
        None => Err(Error::SolveStatus {
            context: "deterministic peak-scenario problem".into(),
            status: mip.status,
        }),
    }
}

/// Peak-scenario schedules, or the hold-initial-state schedules if that
/// solve produced no incumbent.
pub fn deterministic_peak_or_hold(instance: &Instance, time_limit: f64) -> Result<Vec<Schedule>> {
    match solve_deterministic_peak(instance, time_limit) {
        Ok(s) => Ok(s),
        Err(Error::SolveStatus { status, .. }) => {
            log::warn!("peak-scenario warm start unavailable ({status:?}); holding initial state");
            Ok(hold_initial_state(instance))
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BbParams {
    pub time_limit: f64,
    pub rel_gap: f64,
    pub warm_start: bool,
}

impl Default for BbParams {
    fn default() -> Self {
        BbParams {
            time_limit: 3600.0,
            rel_gap: 1e-6,
            warm_start: true,
        }
    }
}

/// Branch-and-bound on the extensive form.
pub fn solve_bb(instance: &Instance, params: &BbParams, exec: Executor) -> Result<(UcSolution, SolveTrace)> {
    let started = Instant::now();
    let mut trace = SolveTrace::starting_at(started);
    let mut timings = Timings::default();
    trace.record(TraceEvent::Start, 0);
    let mut ef = build_extensive_form(instance, false)?;

    let warm = if params.warm_start {
        let t0 = Instant::now();
        let schedules = deterministic_peak_or_hold(instance, params.time_limit)?;
        let x = schedules_to_vector(&schedules, &ef.layout);
        let recourse = crate::benders::Recourse::new(instance, exec);
        let res = recourse.evaluate(&x)?;
        timings.inner += t0.elapsed().as_secs_f64();
        let value = crate::benders::first_stage_value(&first_stage_costs(instance, &ef.layout), &x)
            + recourse.expected(&res);
        trace.offer_ub(value);
        trace.record(TraceEvent::WarmStart, 0);
        let ys: Vec<Vec<f64>> = res.into_iter().map(|r| r.primal).collect();
        Some(ef.assemble(&x, &ys))
    } else {
        None
    };

    let remaining = (params.time_limit - trace.elapsed()).max(1e-3);
    let mip_start = trace.elapsed();
    let t0 = Instant::now();
    let mip = ef.model.solve_mip(
        MipOptions {
            time_limit: remaining,
            rel_gap: params.rel_gap,
        },
        warm.as_deref(),
    )?;
    timings.outer += t0.elapsed().as_secs_f64();
    for p in &mip.trace {
        let ub = trace.offer_ub(p.objective);
        let lb = p.bound.is_finite() && trace.offer_lb(p.bound.min(p.objective));
        if ub || lb {
            trace.push(mip_start + p.time, TraceEvent::Incumbent, 1);
        }
    }
    if mip.primal.is_some() {
        trace.offer_ub(mip.objective);
    }
    if mip.bound.is_finite() {
        trace.offer_lb(mip.bound);
    }
    let status = match (mip.status, &mip.primal) {
        (_, None) if warm.is_some() => RunStatus::TimeLimit,
        (_, None) => RunStatus::NoIncumbent,
        (SolveStatus::Optimal, _) => RunStatus::Converged,
        (SolveStatus::Limit, _) => RunStatus::TimeLimit,
        _ => RunStatus::Stalled,
    };
    if status == RunStatus::TimeLimit {
        trace.record(TraceEvent::TimeLimit, 1);
    }
    trace.record(TraceEvent::Finish, 1);
    timings.total = started.elapsed().as_secs_f64();

    let (schedules, second_stage, objective) = match mip.primal.as_deref().or(warm.as_deref()) {
        Some(x) => {
            let (s, y) = ef.decode(x, instance);
            let obj = if mip.primal.is_some() {
                mip.objective
            } else {
                trace.best_ub
            };
            (s, y, obj)
        }
        None => (Vec::new(), Vec::new(), f64::INFINITY),
    };
    let solution = UcSolution {
        algorithm: Algorithm::Bb,
        status,
        objective,
        lower_bound: trace.best_lb,
        schedules,
        second_stage,
        timings,
        iterations: 1,
        column_counts: Vec::new(),
    };
    Ok((solution, trace))
}
