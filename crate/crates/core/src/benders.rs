//! Scenario subproblems, optimality cuts and the multi-cut Benders loop
//! with in-out stabilization.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::extensive::deterministic_peak_or_hold;
use crate::formulation::{
    add_schedule_vars, first_stage_costs, schedule_rows, schedules_to_vector, vector_to_schedules,
    FirstStageLayout, SecondStage,
};
use crate::model::{Instance, ScenarioId, SecondStageSolution};
use crate::parallel::Executor;
use crate::solution::{Algorithm, RunStatus, Timings, UcSolution};
use crate::solver::{MipOptions, ModelHandle, Row, RowSense, SolveStatus, Var, VarKind};
use crate::trace::{SolveTrace, TraceEvent};

/// Violation threshold for treating a cut as cutting off a master point.
pub const CUT_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SubproblemResult {
    pub scenario: ScenarioId,
    pub value: f64,
    pub duals: Vec<f64>,
    pub primal: Vec<f64>,
}

/// A scenario's dispatch LP kept alive between evaluations; only the
/// right-hand sides change with the first-stage point.
#[derive(Debug)]
pub struct ScenarioSubproblem {
    pub stage: SecondStage,
    model: ModelHandle,
}

impl ScenarioSubproblem {
    pub fn new(stage: SecondStage, first_stage_len: usize) -> Self {
        let model = stage.model_at(&vec![0.0; first_stage_len]);
        ScenarioSubproblem { stage, model }
    }

    pub fn solve(&mut self, x: &[f64]) -> Result<SubproblemResult> {
        for (i, row) in self.stage.rows.iter().enumerate() {
            if !row.t.is_empty() {
                self.model.set_rhs(i, row.rhs_at(x));
            }
        }
        let sol = self.model.solve_lp(f64::INFINITY)?;
        if sol.status != SolveStatus::Optimal {
            return Err(Error::SolveStatus {
                context: format!("subproblem of scenario {}", self.stage.scenario),
                status: sol.status,
            });
        }
        Ok(SubproblemResult {
            scenario: self.stage.scenario,
            value: sol.objective,
            duals: sol.duals,
            primal: sol.primal,
        })
    }
}

/// All scenario subproblems of an instance.
#[derive(Debug)]
pub struct Recourse {
    pub layout: FirstStageLayout,
    pub probabilities: Vec<f64>,
    subproblems: Vec<Mutex<ScenarioSubproblem>>,
    stages: Vec<SecondStage>,
    exec: Executor,
}

impl Recourse {
    pub fn new(instance: &Instance, exec: Executor) -> Self {
        let layout = FirstStageLayout::new(instance);
        let stages: Vec<SecondStage> = (0..instance.num_scenarios())
            .map(|s| SecondStage::build(instance, &layout, s))
            .collect();
        let subproblems = stages
            .iter()
            .map(|st| Mutex::new(ScenarioSubproblem::new(st.clone(), layout.len)))
            .collect();
        Recourse {
            probabilities: instance.scenarios.iter().map(|s| s.probability).collect(),
            layout,
            subproblems,
            stages,
            exec,
        }
    }

    pub fn scenarios(&self) -> usize {
        self.stages.len()
    }

    pub fn stage(&self, s: ScenarioId) -> &SecondStage {
        &self.stages[s]
    }

    pub fn executor(&self) -> &Executor {
        &self.exec
    }

    /// Solves every scenario at `x`; results are ordered by scenario.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<SubproblemResult>> {
        if x.len() != self.layout.len {
            return Err(Error::Dimension(format!(
                "first-stage point has {} entries, expected {}",
                x.len(),
                self.layout.len
            )));
        }
        self.exec
            .map(self.subproblems.len(), |s| {
                self.subproblems[s]
                    .lock()
                    .expect("subproblem lock poisoned")
                    .solve(x)
            })
            .into_iter()
            .collect()
    }

    /// Recourse value of one scenario and its dual vector.
    pub fn evaluate_q(&self, x: &[f64], s: ScenarioId) -> Result<(f64, Vec<f64>)> {
        let r = self.subproblems[s]
            .lock()
            .expect("subproblem lock poisoned")
            .solve(x)?;
        Ok((r.value, r.duals))
    }

    pub fn expected(&self, results: &[SubproblemResult]) -> f64 {
        results
            .iter()
            .map(|r| self.probabilities[r.scenario] * r.value)
            .sum()
    }

    pub fn cuts(&self, results: &[SubproblemResult]) -> Vec<Cut> {
        results
            .iter()
            .map(|r| make_cut(&self.stages[r.scenario], r.duals.clone()))
            .collect()
    }

    pub fn decode(&self, results: &[SubproblemResult], instance: &Instance) -> Vec<SecondStageSolution> {
        results
            .iter()
            .map(|r| self.stages[r.scenario].decode(&r.primal, instance))
            .collect()
    }
}

/// Optimality cut `eta_s >= constant - sum_j coefficients_j x_j`, where
/// `constant = gamma^T h` and `coefficients = T^T gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub scenario: ScenarioId,
    pub gamma: Vec<f64>,
    pub constant: f64,
    pub coefficients: Vec<(usize, f64)>,
}

impl Cut {
    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.constant - self.coefficients.iter().map(|&(j, a)| a * x[j]).sum::<f64>()
    }

    /// Zero dual vector: the cut only restates `eta_s >= 0`.
    pub fn is_null(&self) -> bool {
        self.gamma.iter().all(|g| g.abs() <= 1e-12)
    }

    /// Master row over first-stage variables at `x_base + j` and `eta`.
    pub fn master_row(&self, x_base: usize, eta: usize) -> Row {
        let mut entries = Vec::with_capacity(self.coefficients.len() + 1);
        entries.push((eta, 1.0));
        entries.extend(self.coefficients.iter().map(|&(j, a)| (x_base + j, a)));
        Row::new(entries, RowSense::Ge, self.constant)
    }
}

pub fn make_cut(stage: &SecondStage, gamma: Vec<f64>) -> Cut {
    let mut constant = 0.0;
    let mut coef: BTreeMap<usize, f64> = BTreeMap::new();
    for (row, &g) in stage.rows.iter().zip(&gamma) {
        if g == 0.0 {
            continue;
        }
        constant += g * row.h;
        for &(j, a) in &row.t {
            *coef.entry(j).or_insert(0.0) += g * a;
        }
    }
    let coefficients = coef.into_iter().filter(|(_, a)| a.abs() > 1e-12).collect();
    Cut {
        scenario: stage.scenario,
        gamma,
        constant,
        coefficients,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdParams {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub time_limit: f64,
}

impl Default for BdParams {
    fn default() -> Self {
        BdParams {
            alpha: 0.4,
            beta: 0.5,
            epsilon: 1e-3,
            time_limit: 3600.0,
        }
    }
}

impl BdParams {
    pub fn validate(&self) -> Result<()> {
        validate_stabilization(self.alpha, self.beta, self.epsilon, self.time_limit)
    }
}

pub fn validate_stabilization(alpha: f64, beta: f64, epsilon: f64, time_limit: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidInstance(format!("alpha {alpha} outside [0, 1]")));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidInstance(format!("beta {beta} outside [0, 1]")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidInstance(format!("epsilon {epsilon} must be positive")));
    }
    if !(time_limit > 0.0) {
        return Err(Error::InvalidInstance(format!("time limit {time_limit} must be positive")));
    }
    Ok(())
}

/// Elementwise `alpha * a + (1 - alpha) * b`.
pub fn convex_combination(a: &[f64], b: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "points of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(&p, &q)| {
            if alpha == 1.0 {
                p
            } else if alpha == 0.0 {
                q
            } else {
                alpha * p + (1.0 - alpha) * q
            }
        })
        .collect())
}

/// Best first-stage point found so far with its dispatch.
#[derive(Debug, Clone)]
pub(crate) struct Incumbent {
    pub x: Vec<f64>,
    pub value: f64,
    pub second_stage: Vec<SecondStageSolution>,
}

pub(crate) fn first_stage_value(c: &[f64], x: &[f64]) -> f64 {
    c.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Benders master: scheduling rows over binary `x`, one `eta` per scenario.
struct BdMaster {
    model: ModelHandle,
    eta: Vec<usize>,
    n_x: usize,
}

impl BdMaster {
    fn new(instance: &Instance, layout: &FirstStageLayout, c: &[f64]) -> Self {
        let mut model = ModelHandle::new();
        for (g, gen) in instance.generators.iter().enumerate() {
            let base = add_schedule_vars(
                &mut model,
                gen,
                instance.horizon,
                &c[layout.block(g)],
                VarKind::Binary,
            );
            for row in schedule_rows(gen, instance.horizon, base) {
                model.add_row(row);
            }
        }
        let eta = instance
            .scenarios
            .iter()
            .map(|s| model.add_var(Var::continuous(0.0, f64::INFINITY, s.probability)))
            .collect();
        BdMaster {
            model,
            eta,
            n_x: layout.len,
        }
    }

    fn add_cut(&mut self, cut: &Cut) {
        self.model.add_row(cut.master_row(0, self.eta[cut.scenario]));
    }

    /// Feasible master point from `x`, with each `eta` lifted to its cuts.
    fn lift(&self, x: &[f64], cuts: &[Cut]) -> Vec<f64> {
        let mut point = x.to_vec();
        let mut eta = vec![0.0f64; self.eta.len()];
        for cut in cuts {
            eta[cut.scenario] = eta[cut.scenario].max(cut.value_at(x));
        }
        point.extend(eta);
        point
    }
}

/// Multi-cut Benders decomposition with in-out stabilization. The master
/// is solved as a MIP every iteration.
pub fn run_bd(instance: &Instance, params: &BdParams, exec: Executor) -> Result<(UcSolution, SolveTrace)> {
    run_bd_with_cuts(instance, params, exec).map(|(sol, trace, _)| (sol, trace))
}

/// [`run_bd`], also returning every cut added to the master.
pub fn run_bd_with_cuts(
    instance: &Instance,
    params: &BdParams,
    exec: Executor,
) -> Result<(UcSolution, SolveTrace, Vec<Cut>)> {
    instance.validate()?;
    params.validate()?;
    let started = Instant::now();
    let mut trace = SolveTrace::starting_at(started);
    let mut timings = Timings::default();
    trace.record(TraceEvent::Start, 0);

    let recourse = Recourse::new(instance, exec);
    let layout = recourse.layout.clone();
    let c = first_stage_costs(instance, &layout);

    let t0 = Instant::now();
    let warm = deterministic_peak_or_hold(instance, params.time_limit)?;
    timings.outer += t0.elapsed().as_secs_f64();
    let x0 = schedules_to_vector(&warm, &layout);

    let t0 = Instant::now();
    let res = recourse.evaluate(&x0)?;
    timings.inner += t0.elapsed().as_secs_f64();
    let mut incumbent = Incumbent {
        value: first_stage_value(&c, &x0) + recourse.expected(&res),
        second_stage: recourse.decode(&res, instance),
        x: x0.clone(),
    };
    trace.offer_ub(incumbent.value);
    trace.record(TraceEvent::WarmStart, 0);

    let mut master = BdMaster::new(instance, &layout, &c);
    let mut pool: Vec<Cut> = recourse.cuts(&res);
    for cut in &pool {
        master.add_cut(cut);
    }
    let mut core = x0;
    let rel_gap = (params.epsilon / 10.0).min(1e-6);
    let status;
    let mut iteration = 0;

    loop {
        iteration += 1;
        let remaining = params.time_limit - trace.elapsed();
        if remaining <= 0.0 {
            status = RunStatus::TimeLimit;
            trace.record(TraceEvent::TimeLimit, iteration);
            break;
        }
        let t0 = Instant::now();
        let warm_point = master.lift(&incumbent.x, &pool);
        let mip = master.model.solve_mip(
            MipOptions {
                time_limit: remaining,
                rel_gap,
            },
            Some(&warm_point),
        )?;
        timings.outer += t0.elapsed().as_secs_f64();
        if mip.bound.is_finite() {
            trace.offer_lb(mip.bound);
        }
        trace.record(TraceEvent::MasterSolve, iteration);
        let Some(point) = mip.primal else {
            status = RunStatus::TimeLimit;
            trace.record(TraceEvent::TimeLimit, iteration);
            break;
        };
        let x_master: Vec<f64> = point[..master.n_x].iter().map(|v| v.round()).collect();
        let eta_master: Vec<f64> = master.eta.iter().map(|&j| point[j]).collect();
        if trace.gap() <= params.epsilon {
            status = RunStatus::Converged;
            break;
        }
        if mip.status == SolveStatus::Limit {
            status = RunStatus::TimeLimit;
            trace.record(TraceEvent::TimeLimit, iteration);
            break;
        }

        let io = convex_combination(&x_master, &core, params.alpha)?;
        let t0 = Instant::now();
        let res_master = recourse.evaluate(&x_master)?;
        let res_io = if params.alpha == 1.0 {
            res_master.clone()
        } else {
            recourse.evaluate(&io)?
        };
        timings.inner += t0.elapsed().as_secs_f64();

        let value = first_stage_value(&c, &x_master) + recourse.expected(&res_master);
        if trace.offer_ub(value) {
            incumbent = Incumbent {
                x: x_master.clone(),
                value,
                second_stage: recourse.decode(&res_master, instance),
            };
            trace.record(TraceEvent::Incumbent, iteration);
        }

        let cuts_io = recourse.cuts(&res_io);
        let cuts_master = recourse.cuts(&res_master);
        let mut added = 0;
        for (cut_io, cut_m) in cuts_io.into_iter().zip(cuts_master) {
            let s = cut_io.scenario;
            let chosen = if cut_io.value_at(&x_master) > eta_master[s] + CUT_TOL {
                cut_io
            } else {
                cut_m
            };
            if chosen.value_at(&x_master) > eta_master[s] + CUT_TOL {
                master.add_cut(&chosen);
                pool.push(chosen);
                added += 1;
            }
        }
        core = convex_combination(&io, &core, params.beta)?;
        trace.record(TraceEvent::CutRound, iteration);

        if trace.gap() <= params.epsilon {
            status = RunStatus::Converged;
            break;
        }
        if added == 0 {
            // master value already matches the true cost at its optimum
            status = if trace.gap() <= params.epsilon {
                RunStatus::Converged
            } else {
                RunStatus::Stalled
            };
            trace.record(TraceEvent::Stall, iteration);
            break;
        }
    }
    trace.record(TraceEvent::Finish, iteration);
    timings.total = started.elapsed().as_secs_f64();
    let solution = UcSolution {
        algorithm: Algorithm::Bd,
        status,
        objective: incumbent.value,
        lower_bound: trace.best_lb,
        schedules: vector_to_schedules(&incumbent.x, &layout),
        second_stage: incumbent.second_stage,
        timings,
        iterations: iteration,
        column_counts: Vec::new(),
    };
    Ok((solution, trace, pool))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::Schedule;

    #[test]
    fn nothing_committed_sheds_everything() {
        let inst = instance(vec![unit(vec![simple_mode(10.0, 50.0, 20.0)])], vec![vec![10.0]]);
        let rec = Recourse::new(&inst, Executor::sequential());
        let x = vec![0.0; rec.layout.len];
        let (q, gamma) = rec.evaluate_q(&x, 0).unwrap();
        assert!((q - 50_000.0).abs() < 1e-6);
        let cut = make_cut(rec.stage(0), gamma);
        assert!((cut.value_at(&x) - q).abs() < 1e-6);
    }

    #[test]
    fn enough_capacity_at_zero_marginal_cost() {
        let mut mode = simple_mode(10.0, 50.0, 20.0);
        for b in &mut mode.cost_breakpoints[1..] {
            b.marginal_cost = 0.0;
        }
        let inst = instance(vec![unit(vec![mode])], vec![vec![40.0]]);
        let rec = Recourse::new(&inst, Executor::sequential());
        let s = Schedule::from_commitment(0, &inst.generators[0], &[vec![true]]);
        let x = schedules_to_vector(&[s], &rec.layout);
        let (q, _) = rec.evaluate_q(&x, 0).unwrap();
        assert!(q.abs() < 1e-9);
    }

    #[test]
    fn null_cut_is_flagged() {
        let inst = instance(vec![unit(vec![simple_mode(10.0, 50.0, 20.0)])], vec![vec![10.0]]);
        let rec = Recourse::new(&inst, Executor::sequential());
        let cut = make_cut(rec.stage(0), vec![0.0; rec.stage(0).rows.len()]);
        assert!(cut.is_null());
        assert_eq!(cut.value_at(&vec![1.0; rec.layout.len]), 0.0);
    }

    #[test]
    fn convex_combination_examples() {
        let io = convex_combination(&[1.0, 0.0], &[0.5, 0.5], 0.4).unwrap();
        assert!((io[0] - 0.7).abs() < 1e-15 && (io[1] - 0.3).abs() < 1e-15);
        assert_eq!(convex_combination(&[1.0, 0.0], &[0.5, 0.5], 1.0).unwrap(), vec![1.0, 0.0]);
        assert_eq!(convex_combination(&[1.0, 0.0], &[0.5, 0.5], 0.0).unwrap(), vec![0.5, 0.5]);
        assert!(convex_combination(&[1.0], &[0.5, 0.5], 0.3).is_err());
    }
}
