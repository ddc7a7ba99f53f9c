//! Restricted Dantzig-Wolfe master with explicit first-stage variables,
//! the per-generator column pool, and pricing problems.

use std::collections::HashMap;

use crate::benders::Cut;
use crate::error::{Error, Result};
use crate::formulation::{first_stage_costs, schedule_model, FirstStageLayout};
use crate::model::{check_schedule_feasibility, Generator, GeneratorId, Instance, Schedule};
use crate::pricing::ScheduleDp;
use crate::solver::{LpSolution, MipOptions, MipSolution, ModelHandle, Row, RowSense, SolveStatus, Var, VarKind};

/// A column improves the master when `pi^T x + sigma` exceeds this.
pub const REDUCED_COST_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub schedule: Schedule,
    /// Local first-stage vector of the schedule.
    pub x: Vec<f64>,
    /// First-stage cost `c^T x`.
    pub cost: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ColumnPool {
    columns: Vec<Vec<Column>>,
    keys: Vec<HashMap<Schedule, usize>>,
}

impl ColumnPool {
    pub fn new(generators: usize) -> Self {
        ColumnPool {
            columns: vec![Vec::new(); generators],
            keys: vec![HashMap::new(); generators],
        }
    }

    pub fn generators(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self, g: GeneratorId) -> &[Column] {
        &self.columns[g]
    }

    pub fn len(&self, g: GeneratorId) -> usize {
        self.columns[g].len()
    }

    pub fn total(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    pub fn contains(&self, schedule: &Schedule) -> bool {
        self.keys[schedule.generator].contains_key(schedule)
    }

    /// Per-generator column counts.
    pub fn counts(&self) -> Vec<usize> {
        self.columns.iter().map(Vec::len).collect()
    }

    /// Adds a column after checking it; returns false for duplicates.
    pub fn add(&mut self, generator: &Generator, costs: &[f64], schedule: Schedule) -> Result<bool> {
        let g = schedule.generator;
        if g >= self.columns.len() {
            return Err(Error::Dimension(format!("generator {g} outside the pool")));
        }
        let violations = check_schedule_feasibility(&schedule, generator)?;
        if !violations.is_empty() {
            let reason = violations
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; ");
            return Err(Error::InfeasibleColumn { generator: g, reason });
        }
        if self.keys[g].contains_key(&schedule) {
            return Ok(false);
        }
        let x = schedule.to_vector();
        let cost = costs.iter().zip(&x).map(|(a, b)| a * b).sum();
        self.keys[g].insert(schedule.clone(), self.columns[g].len());
        self.columns[g].push(Column { schedule, x, cost });
        Ok(true)
    }
}

/// Adds `schedule` to the pool of its generator; false on duplicates.
pub fn add_column(pool: &mut ColumnPool, instance: &Instance, schedule: Schedule) -> Result<bool> {
    let layout = FirstStageLayout::new(instance);
    let c = first_stage_costs(instance, &layout);
    let g = schedule.generator;
    if g >= instance.generators.len() {
        return Err(Error::Dimension(format!("generator {g} does not exist")));
    }
    pool.add(&instance.generators[g], &c[layout.block(g)], schedule)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterDuals {
    /// Over all first-stage coordinates, in layout order.
    pub pi: Vec<f64>,
    /// One per generator convexity row.
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct MasterLpSolution {
    pub x: Vec<f64>,
    /// `[g][column]`
    pub mu: Vec<Vec<f64>>,
    pub eta: Vec<f64>,
    pub duals: MasterDuals,
    pub objective: f64,
    pub dual_objective: f64,
}

/// Restricted master: `x` in `[0,1]` (or binary), weights `mu >= 0` per
/// column, `eta` per scenario. Rows: `sum mu omega - x = 0` per coordinate,
/// `sum mu = 1` per generator, then optimality cuts.
#[derive(Debug, Clone)]
pub struct DwMaster {
    pub model: ModelHandle,
    pub layout: FirstStageLayout,
    pub eta: Vec<usize>,
    pub convexity: Vec<usize>,
    pub mu: Vec<Vec<usize>>,
    pub cuts: usize,
    integer: bool,
}

impl DwMaster {
    pub fn build(instance: &Instance, pool: &ColumnPool, cuts: &[Cut], integer: bool) -> Result<Self> {
        let layout = FirstStageLayout::new(instance);
        if pool.generators() != layout.generators() {
            return Err(Error::Dimension(format!(
                "pool covers {} generators, instance has {}",
                pool.generators(),
                layout.generators()
            )));
        }
        if let Some(g) = (0..pool.generators()).find(|&g| pool.len(g) == 0) {
            return Err(Error::Dimension(format!("generator {g} has no columns")));
        }
        let c = first_stage_costs(instance, &layout);
        let mut model = ModelHandle::new();
        for &cost in &c {
            model.add_var(if integer {
                Var::binary(cost)
            } else {
                Var::continuous(0.0, 1.0, cost)
            });
        }
        let eta = instance
            .scenarios
            .iter()
            .map(|s| model.add_var(Var::continuous(0.0, f64::INFINITY, s.probability)))
            .collect();
        for j in 0..layout.len {
            model.add_row(Row::new(vec![(j, -1.0)], RowSense::Eq, 0.0));
        }
        let convexity = (0..layout.generators())
            .map(|_| model.add_row(Row::new(vec![], RowSense::Eq, 1.0)))
            .collect();
        let mut master = DwMaster {
            model,
            layout,
            eta,
            convexity,
            mu: vec![Vec::new(); pool.generators()],
            cuts: 0,
            integer,
        };
        for g in 0..pool.generators() {
            for col in pool.columns(g) {
                master.add_column(g, col);
            }
        }
        for cut in cuts {
            master.add_cut(cut);
        }
        Ok(master)
    }

    pub fn add_column(&mut self, g: GeneratorId, column: &Column) -> usize {
        let base = self.layout.offsets[g];
        let mut entries: Vec<(usize, f64)> = column
            .x
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(j, &v)| (base + j, v))
            .collect();
        entries.push((self.convexity[g], 1.0));
        let j = self.model.add_column(Var::continuous(0.0, f64::INFINITY, 0.0), &entries);
        self.mu[g].push(j);
        j
    }

    pub fn add_cut(&mut self, cut: &Cut) {
        self.model.add_row(cut.master_row(0, self.eta[cut.scenario]));
        self.cuts += 1;
    }

    pub fn is_integer(&self) -> bool {
        self.integer
    }

    pub fn solve_lp(&mut self, time_limit: f64) -> Result<MasterLpSolution> {
        let sol = self.model.solve_lp(time_limit)?;
        if sol.status != SolveStatus::Optimal {
            return Err(Error::SolveStatus {
                context: "restricted master LP".into(),
                status: sol.status,
            });
        }
        Ok(self.unpack(&sol))
    }

    fn unpack(&self, sol: &LpSolution) -> MasterLpSolution {
        let n = self.layout.len;
        MasterLpSolution {
            x: sol.primal[..n].to_vec(),
            mu: self
                .mu
                .iter()
                .map(|cols| cols.iter().map(|&j| sol.primal[j]).collect())
                .collect(),
            eta: self.eta.iter().map(|&j| sol.primal[j]).collect(),
            duals: MasterDuals {
                pi: sol.duals[..n].to_vec(),
                sigma: self.convexity.iter().map(|&r| sol.duals[r]).collect(),
            },
            objective: sol.objective,
            dual_objective: self.model.dual_objective(sol),
        }
    }

    /// Solves a copy of the master with binary `x`.
    pub fn solve_integer(&self, options: MipOptions, warm_start: Option<&[f64]>) -> Result<MipSolution> {
        let mut model = self.model.clone();
        for j in 0..self.layout.len {
            model.set_kind(j, VarKind::Binary);
        }
        model.solve_mip(options, warm_start)
    }

    /// Master point selecting one pool column per generator: `x`, then
    /// `eta` lifted to the cuts, then the weights.
    pub fn point_for(&self, selection: &[usize], pool: &ColumnPool, cuts: &[Cut]) -> Vec<f64> {
        let mut point = vec![0.0; self.model.num_vars()];
        for (g, &k) in selection.iter().enumerate() {
            let col = &pool.columns(g)[k];
            let base = self.layout.offsets[g];
            point[base..base + col.x.len()].copy_from_slice(&col.x);
            point[self.mu[g][k]] = 1.0;
        }
        let x = point[..self.layout.len].to_vec();
        for cut in cuts {
            let j = self.eta[cut.scenario];
            point[j] = point[j].max(cut.value_at(&x));
        }
        point
    }
}

/// Builds the restricted master for the pool and cuts.
pub fn build_master(instance: &Instance, pool: &ColumnPool, cuts: &[Cut], integer: bool) -> Result<DwMaster> {
    DwMaster::build(instance, pool, cuts, integer)
}

#[derive(Debug, Clone)]
pub struct PricingResult {
    pub schedule: Schedule,
    /// `-pi^T x* - sigma`; negative means the column improves the master.
    pub reduced_value: f64,
}

impl PricingResult {
    pub fn improving(&self) -> bool {
        -self.reduced_value > REDUCED_COST_TOL
    }
}

/// Pricing problem of one generator. Solved by dynamic programming when
/// the state space is small, otherwise by a persistent binary program whose
/// objective changes between calls.
#[derive(Debug)]
pub struct PricingProblem {
    pub generator: GeneratorId,
    modes: usize,
    horizon: usize,
    backend: PricingBackend,
}

#[derive(Debug)]
enum PricingBackend {
    Dp(ScheduleDp),
    Mip(ModelHandle),
}

impl PricingProblem {
    pub fn new(generator: GeneratorId, gen: &Generator, horizon: usize) -> Self {
        let backend = match ScheduleDp::new(gen, horizon) {
            Some(dp) => PricingBackend::Dp(dp),
            None => PricingProblem::mip_backend(gen, horizon),
        };
        PricingProblem {
            generator,
            modes: gen.num_modes(),
            horizon,
            backend,
        }
    }

    /// Always uses the binary program.
    pub fn new_mip(generator: GeneratorId, gen: &Generator, horizon: usize) -> Self {
        PricingProblem {
            generator,
            modes: gen.num_modes(),
            horizon,
            backend: PricingProblem::mip_backend(gen, horizon),
        }
    }

    fn mip_backend(gen: &Generator, horizon: usize) -> PricingBackend {
        let n = 3 * gen.num_modes() * horizon;
        PricingBackend::Mip(schedule_model(gen, horizon, &vec![0.0; n], VarKind::Binary))
    }

    pub fn uses_dynamic_program(&self) -> bool {
        matches!(self.backend, PricingBackend::Dp(_))
    }

    /// All schedules within `slack` of the best `-pi_g^T x`. `None` when
    /// there are more than `limit` or no dynamic program is available.
    pub fn enumerate(&self, pi_g: &[f64], slack: f64, limit: usize) -> Option<Vec<Schedule>> {
        match &self.backend {
            PricingBackend::Dp(dp) if pi_g.len() == 3 * self.modes * self.horizon => {
                dp.enumerate(self.generator, pi_g, slack, limit)
            }
            _ => None,
        }
    }

    /// Minimizes `-pi_g^T x` over the generator's schedules.
    pub fn solve(&mut self, pi_g: &[f64], sigma: f64) -> Result<PricingResult> {
        let n = 3 * self.modes * self.horizon;
        if pi_g.len() != n {
            return Err(Error::Dimension(format!(
                "pricing vector has {} entries, generator {} has {n}",
                pi_g.len(),
                self.generator
            )));
        }
        let schedule = match &mut self.backend {
            PricingBackend::Dp(dp) => dp.solve(self.generator, pi_g).ok_or_else(|| Error::SolveStatus {
                context: format!("pricing problem of generator {}", self.generator),
                status: SolveStatus::Infeasible,
            })?,
            PricingBackend::Mip(model) => {
                for (j, &p) in pi_g.iter().enumerate() {
                    model.set_cost(j, -p);
                }
                let mip = model.solve_mip(
                    MipOptions {
                        time_limit: f64::INFINITY,
                        rel_gap: 1e-9,
                    },
                    None,
                )?;
                let Some(x) = mip.primal else {
                    return Err(Error::SolveStatus {
                        context: format!("pricing problem of generator {}", self.generator),
                        status: mip.status,
                    });
                };
                Schedule::from_vector(self.generator, self.modes, self.horizon, &x)
            }
        };
        let rounded = schedule.to_vector();
        let value: f64 = -pi_g.iter().zip(&rounded).map(|(a, b)| a * b).sum::<f64>();
        Ok(PricingResult {
            schedule,
            reduced_value: value - sigma,
        })
    }
}

/// One-shot pricing for a generator.
pub fn solve_pricing(
    g: GeneratorId,
    gen: &Generator,
    horizon: usize,
    pi_g: &[f64],
    sigma: f64,
) -> Result<PricingResult> {
    PricingProblem::new(g, gen, horizon).solve(pi_g, sigma)
}
