//! Column-row generation: a Dantzig-Wolfe master over schedule columns that
//! also collects Benders optimality cuts, stabilized by in-out separation.

use std::collections::HashSet;
use std::sync::Mutex;
use std::time::Instant;

use crate::benders::{convex_combination, first_stage_value, validate_stabilization, Cut, Incumbent, Recourse, CUT_TOL};
use crate::dw::{ColumnPool, DwMaster, MasterDuals, PricingProblem, PricingResult};
use crate::error::{Error, Result};
use crate::extensive::{build_extensive_form, deterministic_peak_or_hold};
use crate::formulation::{first_stage_costs, schedules_to_vector, vector_to_schedules, FirstStageLayout};
use crate::model::{
    check_schedule_feasibility, evaluate_objective, Instance, Schedule, SecondStageSolution,
};
use crate::parallel::Executor;
use crate::solution::{Algorithm, RunStatus, Timings, UcSolution};
use crate::solver::{MipOptions, SolveStatus};
use crate::trace::{SolveTrace, TraceEvent};

pub use crate::trace::optimality_gap;

/// Consecutive iterations without a new column or violated cut before the
/// engine forces the integer step.
pub const STALL_LIMIT: usize = 3;

/// Per-generator cap on schedules added when completing the pool.
pub const ENUMERATION_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrgParams {
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub time_limit: f64,
    pub seed: u64,
}

impl Default for CrgParams {
    fn default() -> Self {
        CrgParams {
            epsilon: 1e-3,
            alpha: 0.4,
            beta: 0.5,
            time_limit: 3600.0,
            seed: 0,
        }
    }
}

impl CrgParams {
    pub fn validate(&self) -> Result<()> {
        validate_stabilization(self.alpha, self.beta, self.epsilon, self.time_limit)
    }
}

/// `alpha * x_master + (1 - alpha) * core`
pub fn in_out_point(x_master: &[f64], core: &[f64], alpha: f64) -> Result<Vec<f64>> {
    convex_combination(x_master, core, alpha)
}

/// `beta * io + (1 - beta) * core`
pub fn update_core_point(io: &[f64], core: &[f64], beta: f64) -> Result<Vec<f64>> {
    convex_combination(io, core, beta)
}

/// First-stage cost plus expected recourse of a full schedule set. The
/// schedules must be feasible.
pub fn compute_upper_bound(
    instance: &Instance,
    schedules: &[Schedule],
    second_stage: &[SecondStageSolution],
) -> Result<f64> {
    for (s, gen) in schedules.iter().zip(&instance.generators) {
        let v = check_schedule_feasibility(s, gen)?;
        if !v.is_empty() {
            return Err(Error::InfeasibleColumn {
                generator: s.generator,
                reason: v[0].to_string(),
            });
        }
    }
    evaluate_objective(schedules, second_stage, instance)
}

/// `sum_g (-pi_g^T x_g - sigma_g) + master dual objective`, where `x` holds
/// the pricing optimizers in layout order.
pub fn compute_lower_bound(
    x: &[f64],
    duals: &MasterDuals,
    layout: &FirstStageLayout,
    master_dual_objective: f64,
) -> f64 {
    let mut lb = master_dual_objective;
    for g in 0..layout.generators() {
        let block = layout.block(g);
        let pix: f64 = duals.pi[block.clone()]
            .iter()
            .zip(&x[block])
            .map(|(p, v)| p * v)
            .sum();
        lb += -pix - duals.sigma[g];
    }
    lb
}

/// Initial columns: one pricing solution per generator at prices derived
/// from the extensive-form LP relaxation, plus the peak-scenario schedules.
/// Returns the pool and the peak-scenario schedules.
pub fn seed_columns(instance: &Instance, time_limit: f64) -> Result<(ColumnPool, Vec<Schedule>)> {
    let layout = FirstStageLayout::new(instance);
    let c = first_stage_costs(instance, &layout);
    let warm = deterministic_peak_or_hold(instance, time_limit)?;
    let mut pool = ColumnPool::new(instance.generators.len());
    for s in &warm {
        pool.add(&instance.generators[s.generator], &c[layout.block(s.generator)], s.clone())?;
    }
    match relaxation_prices(instance, &layout, &c) {
        Ok(pi) => {
            for (g, gen) in instance.generators.iter().enumerate() {
                match PricingProblem::new(g, gen, instance.horizon).solve(&pi[layout.block(g)], 0.0) {
                    Ok(r) => {
                        pool.add(gen, &c[layout.block(g)], r.schedule)?;
                    }
                    Err(e) => log::warn!("seed pricing for generator {g} failed: {e}"),
                }
            }
        }
        Err(e) => log::warn!("LP relaxation seeding failed, using warm start only: {e}"),
    }
    Ok((pool, warm))
}

/// `pi_j = -c_j + sum_i y_i T_ij` over the dispatch rows of the relaxed
/// extensive form.
fn relaxation_prices(instance: &Instance, layout: &FirstStageLayout, c: &[f64]) -> Result<Vec<f64>> {
    let mut ef = build_extensive_form(instance, true)?;
    let sol = ef.model.solve_lp(f64::INFINITY)?;
    if sol.status != SolveStatus::Optimal {
        return Err(Error::SolveStatus {
            context: "extensive-form LP relaxation".into(),
            status: sol.status,
        });
    }
    let mut pi: Vec<f64> = c.iter().map(|v| -v).collect();
    for (stage, rows) in ef.stages.iter().zip(&ef.stage_rows) {
        for (row, &r) in stage.rows.iter().zip(rows) {
            let y = sol.duals[r];
            for &(j, a) in &row.t {
                pi[j] += y * a;
            }
        }
    }
    debug_assert_eq!(pi.len(), layout.len);
    Ok(pi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Columns,
    Cuts,
    Integer,
}

/// Stabilization points seen at the end of a row-generation or integer step.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilizationSnapshot {
    pub iteration: usize,
    pub step: Step,
    /// Master solution the step started from (LP or integer).
    pub x_master: Vec<f64>,
    pub io: Vec<f64>,
    pub core_before: Vec<f64>,
    pub core: Vec<f64>,
}

#[derive(Debug)]
pub struct CrgState {
    pub pool: ColumnPool,
    pub cuts: Vec<Cut>,
    pub core: Vec<f64>,
    pub io: Vec<f64>,
    pub cut_generated: bool,
    pub trace: SolveTrace,
}

struct Engine<'a> {
    instance: &'a Instance,
    params: CrgParams,
    layout: FirstStageLayout,
    c: Vec<f64>,
    recourse: Recourse,
    pricing: Vec<Mutex<PricingProblem>>,
    master: DwMaster,
    state: CrgState,
    incumbent: Option<Incumbent>,
    evaluated: HashSet<Vec<bool>>,
    timings: Timings,
}

fn key(x: &[f64]) -> Vec<bool> {
    x.iter().map(|&v| v > 0.5).collect()
}

impl<'a> Engine<'a> {
    fn remaining(&self) -> f64 {
        self.params.time_limit - self.state.trace.elapsed()
    }

    /// Evaluates an integer point: adds its cuts and offers it as incumbent.
    /// Returns the cuts and whether the point improved the incumbent.
    fn evaluate_integer(&mut self, x: &[f64], iteration: usize) -> Result<Vec<Cut>> {
        let t0 = Instant::now();
        let res = self.recourse.evaluate(x)?;
        self.timings.inner += t0.elapsed().as_secs_f64();
        self.evaluated.insert(key(x));
        let value = first_stage_value(&self.c, x) + self.recourse.expected(&res);
        if self.state.trace.offer_ub(value) {
            self.incumbent = Some(Incumbent {
                x: x.to_vec(),
                value,
                second_stage: self.recourse.decode(&res, self.instance),
            });
            self.state.trace.record(TraceEvent::Incumbent, iteration);
        }
        Ok(self.recourse.cuts(&res))
    }

    fn add_cuts(&mut self, cuts: Vec<Cut>) {
        for cut in cuts {
            self.master.add_cut(&cut);
            self.state.cuts.push(cut);
        }
    }

    fn price(&mut self, pi: &[f64], sigma: &[f64]) -> Result<Vec<PricingResult>> {
        let t0 = Instant::now();
        let layout = &self.layout;
        let pricing = &self.pricing;
        let out: Result<Vec<PricingResult>> = self
            .recourse
            .executor()
            .map(pricing.len(), |g| {
                pricing[g]
                    .lock()
                    .expect("pricing lock poisoned")
                    .solve(&pi[layout.block(g)], sigma[g])
            })
            .into_iter()
            .collect();
        self.timings.inner += t0.elapsed().as_secs_f64();
        out
    }

    /// Per generator, the pool column with the largest weight (ties to the
    /// lowest index).
    fn heaviest_columns(mu: &[Vec<f64>]) -> Vec<usize> {
        mu.iter()
            .map(|w| {
                let mut best = 0;
                for (k, &v) in w.iter().enumerate() {
                    if v > w[best] + 1e-9 {
                        best = k;
                    }
                }
                best
            })
            .collect()
    }

    fn selection_point(&self, selection: &[usize]) -> Vec<f64> {
        let mut x = vec![0.0; self.layout.len];
        for (g, &k) in selection.iter().enumerate() {
            let col = &self.state.pool.columns(g)[k];
            x[self.layout.block(g)].copy_from_slice(&col.x);
        }
        x
    }

    /// Master point at the incumbent, when every incumbent schedule is a
    /// pool column.
    fn incumbent_master_point(&self) -> Option<Vec<f64>> {
        let inc = self.incumbent.as_ref()?;
        let schedules = vector_to_schedules(&inc.x, &self.layout);
        let mut selection = Vec::with_capacity(schedules.len());
        for s in &schedules {
            let k = self
                .state
                .pool
                .columns(s.generator)
                .iter()
                .position(|c| c.schedule == *s)?;
            selection.push(k);
        }
        Some(self.master.point_for(&selection, &self.state.pool, &self.state.cuts))
    }

    /// Solves the master with binary `x`; returns the integer point, its
    /// `eta` and the solver's bound, or `None` when no incumbent was found
    /// in time.
    fn integer_master(&mut self, rel_gap: f64) -> Result<Option<(Vec<f64>, Vec<f64>, f64)>> {
        let warm = self.incumbent_master_point();
        let t0 = Instant::now();
        let mip = self.master.solve_integer(
            MipOptions {
                time_limit: self.remaining().max(1e-3),
                rel_gap,
            },
            warm.as_deref(),
        )?;
        self.timings.outer += t0.elapsed().as_secs_f64();
        let bound = mip.bound;
        Ok(mip.primal.map(|p| {
            let x: Vec<f64> = p[..self.layout.len].iter().map(|v| v.round()).collect();
            let eta = self.master.eta.iter().map(|&j| p[j]).collect();
            (x, eta, bound)
        }))
    }

    /// Completes the pool against the prices of the best Lagrangian bound
    /// and the current incumbent. `None` when enumeration was not possible.
    fn try_complete(&mut self, prices: Option<&(f64, Vec<f64>)>, iteration: usize) -> Result<Option<usize>> {
        let Some((lb, pi)) = prices else {
            return Ok(None);
        };
        let ub = self.state.trace.best_ub;
        let slack = (ub - lb).max(0.0) + 1e-7 * (1.0 + ub.abs());
        let t0 = Instant::now();
        let out = self.complete_pool(pi, slack)?;
        self.timings.inner += t0.elapsed().as_secs_f64();
        if out.is_some() {
            self.state.trace.record(TraceEvent::Columns, iteration);
        }
        Ok(out)
    }

    /// With a complete pool the integer master bounds the true optimum.
    fn offer_master_bound(&mut self, bound: f64) {
        if bound.is_finite() {
            let ub = self.state.trace.best_ub;
            self.state.trace.offer_lb(bound.min(ub));
        }
    }

    /// Adds every schedule whose reduced value at `pi` is within `slack` of
    /// the generator's best. Returns the number of new columns, or `None`
    /// when some generator has too many such schedules.
    fn complete_pool(&mut self, pi: &[f64], slack: f64) -> Result<Option<usize>> {
        let layout = &self.layout;
        let pricing = &self.pricing;
        let found: Vec<Option<Vec<Schedule>>> = self.recourse.executor().map(pricing.len(), |g| {
            pricing[g]
                .lock()
                .expect("pricing lock poisoned")
                .enumerate(&pi[layout.block(g)], slack, ENUMERATION_LIMIT)
        });
        if found.iter().any(Option::is_none) {
            return Ok(None);
        }
        let mut added = 0;
        for schedules in found.into_iter().flatten() {
            for s in schedules {
                let g = s.generator;
                let block = self.layout.block(g);
                if self.state.pool.add(&self.instance.generators[g], &self.c[block], s)? {
                    let col = self.state.pool.columns(g).last().expect("just added").clone();
                    self.master.add_column(g, &col);
                    added += 1;
                }
            }
        }
        Ok(Some(added))
    }

    fn violated(cuts: &[Cut], x: &[f64], eta: &[f64]) -> usize {
        cuts.iter()
            .filter(|c| c.value_at(x) > eta[c.scenario] + CUT_TOL)
            .count()
    }
}

/// Runs column-row generation; see [`run_crg_observed`].
pub fn run_crg(instance: &Instance, params: &CrgParams, exec: Executor) -> Result<(UcSolution, SolveTrace)> {
    run_crg_observed(instance, params, exec, |_| {})
}

/// Column-row generation with a callback receiving the stabilization
/// points after every row-generation and integer step.
pub fn run_crg_observed<F>(
    instance: &Instance,
    params: &CrgParams,
    exec: Executor,
    observe: F,
) -> Result<(UcSolution, SolveTrace)>
where
    F: FnMut(&StabilizationSnapshot),
{
    run_crg_with_cuts(instance, params, exec, observe).map(|(sol, trace, _)| (sol, trace))
}

/// [`run_crg_observed`], also returning every cut added to the master.
pub fn run_crg_with_cuts<F>(
    instance: &Instance,
    params: &CrgParams,
    exec: Executor,
    mut observe: F,
) -> Result<(UcSolution, SolveTrace, Vec<Cut>)>
where
    F: FnMut(&StabilizationSnapshot),
{
    instance.validate()?;
    params.validate()?;
    let started = Instant::now();
    let mut trace = SolveTrace::starting_at(started);
    trace.record(TraceEvent::Start, 0);
    let mut timings = Timings::default();

    let t0 = Instant::now();
    let (pool, warm) = seed_columns(instance, params.time_limit)?;
    timings.outer += t0.elapsed().as_secs_f64();

    let layout = FirstStageLayout::new(instance);
    let c = first_stage_costs(instance, &layout);
    let x0 = schedules_to_vector(&warm, &layout);
    let master = DwMaster::build(instance, &pool, &[], false)?;
    let pricing = instance
        .generators
        .iter()
        .enumerate()
        .map(|(g, gen)| Mutex::new(PricingProblem::new(g, gen, instance.horizon)))
        .collect();
    let mut engine = Engine {
        instance,
        params: *params,
        recourse: Recourse::new(instance, exec),
        layout,
        c,
        pricing,
        master,
        state: CrgState {
            pool,
            cuts: Vec::new(),
            core: x0.clone(),
            io: x0.clone(),
            cut_generated: false,
            trace,
        },
        incumbent: None,
        evaluated: HashSet::new(),
        timings,
    };
    let cuts = engine.evaluate_integer(&x0, 0)?;
    engine.add_cuts(cuts);
    engine.state.trace.record(TraceEvent::WarmStart, 0);

    // intermediate integer steps only supply incumbents and cuts
    let int_gap = 1e-4f64.max(params.epsilon / 10.0);
    let final_gap = (params.epsilon / 10.0).min(1e-6);
    let mut status = RunStatus::Stalled;
    let mut stall = 0usize;
    let mut iteration = 0usize;
    // true when the last integer step left the master unchanged
    let mut settled = false;
    // prices behind the best Lagrangian bound
    let mut bound_prices: Option<(f64, Vec<f64>)> = None;
    // every column of any solution cheaper than the incumbent is in the pool
    let mut complete = false;
    // integer steps solve the master to the final tolerance
    let mut tight = false;

    loop {
        iteration += 1;
        if engine.remaining() <= 0.0 {
            status = RunStatus::TimeLimit;
            engine.state.trace.record(TraceEvent::TimeLimit, iteration);
            break;
        }
        // (i) master LP
        let t0 = Instant::now();
        let lp = match engine.master.solve_lp(engine.remaining().max(1e-3)) {
            Err(Error::SolveStatus {
                status: SolveStatus::Limit,
                ..
            }) => {
                engine.timings.outer += t0.elapsed().as_secs_f64();
                status = RunStatus::TimeLimit;
                engine.state.trace.record(TraceEvent::TimeLimit, iteration);
                break;
            }
            other => other?,
        };
        engine.timings.outer += t0.elapsed().as_secs_f64();
        engine.state.trace.record(TraceEvent::MasterSolve, iteration);

        // (ii) pricing and lower bound
        let priced = engine.price(&lp.duals.pi, &lp.duals.sigma)?;
        let mut x_priced = vec![0.0; engine.layout.len];
        for r in &priced {
            x_priced[engine.layout.block(r.schedule.generator)].copy_from_slice(&r.schedule.to_vector());
        }
        let lb = compute_lower_bound(&x_priced, &lp.duals, &engine.layout, lp.dual_objective);
        engine.state.trace.offer_lb(lb);
        if bound_prices.as_ref().map_or(true, |(best, _)| lb > *best) {
            bound_prices = Some((lb, lp.duals.pi.clone()));
        }
        engine.state.trace.record(TraceEvent::Pricing, iteration);
        if engine.state.trace.gap() <= params.epsilon {
            status = RunStatus::Converged;
            break;
        }

        // (iii) columns
        let mut added = 0;
        for r in priced.into_iter().filter(PricingResult::improving) {
            let g = r.schedule.generator;
            let block = engine.layout.block(g);
            if engine
                .state
                .pool
                .add(&instance.generators[g], &engine.c[block], r.schedule)?
            {
                let k = engine.state.pool.len(g) - 1;
                let col = engine.state.pool.columns(g)[k].clone();
                engine.master.add_column(g, &col);
                added += 1;
            }
        }
        if added > 0 {
            engine.state.cut_generated = false;
            stall = 0;
            settled = false;
            engine.state.trace.record(TraceEvent::Columns, iteration);
            continue;
        }

        let force_integer = stall >= STALL_LIMIT;
        let productive;
        if !engine.state.cut_generated && !force_integer {
            // (iv) cuts at the in-out point
            let io = in_out_point(&lp.x, &engine.state.core, params.alpha)?;
            let t0 = Instant::now();
            let res = engine.recourse.evaluate(&io)?;
            engine.timings.inner += t0.elapsed().as_secs_f64();
            let cuts = engine.recourse.cuts(&res);
            let mut violated = Engine::violated(&cuts, &lp.x, &lp.eta);
            engine.add_cuts(cuts);
            engine.state.cut_generated = true;
            let core_before = engine.state.core.clone();
            engine.state.core = update_core_point(&io, &engine.state.core, params.beta)?;
            engine.state.io = io;

            // incumbent from the heaviest columns
            let selection = Engine::heaviest_columns(&lp.mu);
            let candidate = engine.selection_point(&selection);
            if !engine.evaluated.contains(&key(&candidate)) {
                let cuts = engine.evaluate_integer(&candidate, iteration)?;
                violated += Engine::violated(&cuts, &lp.x, &lp.eta);
                engine.add_cuts(cuts);
            }
            engine.state.trace.record(TraceEvent::CutRound, iteration);
            observe(&StabilizationSnapshot {
                iteration,
                step: Step::Cuts,
                x_master: lp.x.clone(),
                io: engine.state.io.clone(),
                core_before,
                core: engine.state.core.clone(),
            });
            productive = violated > 0;
            settled = false;
        } else {
            // (v) integer-feasible step
            if !complete {
                if let Some(added) = engine.try_complete(bound_prices.as_ref(), iteration)? {
                    complete = true;
                    settled &= added == 0;
                }
            }
            if settled {
                engine.state.trace.record(TraceEvent::Stall, iteration);
                break;
            }
            let gap = if complete || tight { final_gap } else { int_gap };
            let Some((x_int, eta, bound)) = engine.integer_master(gap)? else {
                status = RunStatus::TimeLimit;
                engine.state.trace.record(TraceEvent::TimeLimit, iteration);
                break;
            };
            let cuts = engine.evaluate_integer(&x_int, iteration)?;
            let violated = Engine::violated(&cuts, &x_int, &eta);
            engine.add_cuts(cuts);
            if complete {
                engine.offer_master_bound(bound);
            }
            engine.state.cut_generated = true;
            let core_before = engine.state.core.clone();
            engine.state.core = update_core_point(&engine.state.io, &engine.state.core, params.beta)?;
            engine.state.trace.record(TraceEvent::IntegerStep, iteration);
            observe(&StabilizationSnapshot {
                iteration,
                step: Step::Integer,
                x_master: x_int,
                io: engine.state.io.clone(),
                core_before,
                core: engine.state.core.clone(),
            });
            productive = violated > 0;
            settled = !productive && gap <= final_gap;
            tight |= !productive;
        }
        if engine.state.trace.gap() <= params.epsilon {
            status = RunStatus::Converged;
            break;
        }
        stall = if productive { 0 } else { stall + 1 };
        if stall > STALL_LIMIT {
            engine.state.trace.record(TraceEvent::Stall, iteration);
            break;
        }
    }

    if status != RunStatus::TimeLimit && !complete && engine.state.trace.gap() > params.epsilon {
        if let Some(added) = engine.try_complete(bound_prices.as_ref(), iteration)? {
            complete = true;
            settled &= added == 0;
        }
    }

    // final integer master over the generated columns and cuts
    if status != RunStatus::TimeLimit && !settled && engine.state.trace.gap() > params.epsilon {
        while engine.remaining() > 0.0 {
            let Some((x_int, eta, bound)) = engine.integer_master(final_gap)? else {
                break;
            };
            let cuts = engine.evaluate_integer(&x_int, iteration)?;
            let violated = Engine::violated(&cuts, &x_int, &eta);
            engine.add_cuts(cuts);
            if complete {
                engine.offer_master_bound(bound);
            }
            engine.state.trace.record(TraceEvent::IntegerStep, iteration);
            if violated == 0 || engine.state.trace.gap() <= params.epsilon {
                break;
            }
        }
    }
    if status != RunStatus::TimeLimit && engine.state.trace.gap() <= params.epsilon {
        status = RunStatus::Converged;
    }
    engine.state.trace.record(TraceEvent::Finish, iteration);
    engine.timings.total = started.elapsed().as_secs_f64();

    let incumbent = engine
        .incumbent
        .clone()
        .expect("the warm start always yields an incumbent");
    let solution = UcSolution {
        algorithm: Algorithm::Crg,
        status,
        objective: incumbent.value,
        lower_bound: engine.state.trace.best_lb,
        schedules: vector_to_schedules(&incumbent.x, &engine.layout),
        second_stage: incumbent.second_stage,
        timings: engine.timings,
        iterations: iteration,
        column_counts: engine.state.pool.counts(),
    };
    Ok((solution, engine.state.trace, engine.state.cuts))
}
