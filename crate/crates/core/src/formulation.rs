//! Shared model pieces: the first-stage variable layout, the per-generator
//! scheduling rows, and the per-scenario dispatch template written as
//! `W y (>=|=) h - T x`.

use crate::model::{Generator, GeneratorId, Instance, ModeId, ScenarioId, TimeStep};
use crate::solver::{ModelHandle, Row, RowSense, Var, VarKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Commit = 0,
    Start = 1,
    Stop = 2,
}

/// Position of every first-stage binary. Each generator owns a contiguous
/// block laid out as `(mode * horizon + t) * 3 + kind`, matching
/// [`crate::model::Schedule::to_vector`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FirstStageLayout {
    pub horizon: usize,
    pub modes: Vec<usize>,
    pub offsets: Vec<usize>,
    pub len: usize,
}

impl FirstStageLayout {
    pub fn new(instance: &Instance) -> Self {
        let horizon = instance.horizon;
        let modes: Vec<usize> = instance.generators.iter().map(Generator::num_modes).collect();
        let mut offsets = Vec::with_capacity(modes.len());
        let mut len = 0;
        for &m in &modes {
            offsets.push(len);
            len += 3 * m * horizon;
        }
        FirstStageLayout {
            horizon,
            modes,
            offsets,
            len,
        }
    }

    #[inline]
    pub fn index(&self, g: GeneratorId, m: ModeId, t: TimeStep, kind: Kind) -> usize {
        self.offsets[g] + local_index(self.horizon, m, t, kind)
    }

    pub fn block(&self, g: GeneratorId) -> std::ops::Range<usize> {
        let start = self.offsets[g];
        start..start + self.block_len(g)
    }

    pub fn block_len(&self, g: GeneratorId) -> usize {
        3 * self.modes[g] * self.horizon
    }

    pub fn generators(&self) -> usize {
        self.modes.len()
    }

    /// Generator owning global index `j`.
    pub fn owner(&self, j: usize) -> GeneratorId {
        match self.offsets.binary_search(&j) {
            Ok(g) => {
                // skip empty blocks sharing the same offset
                let mut g = g;
                while g + 1 < self.offsets.len() && self.offsets[g + 1] == j {
                    g += 1;
                }
                g
            }
            Err(g) => g - 1,
        }
    }
}

#[inline]
pub fn local_index(horizon: usize, m: ModeId, t: TimeStep, kind: Kind) -> usize {
    (m * horizon + t) * 3 + kind as usize
}

/// First-stage cost vector: the minimum-generation block on every
/// commitment variable, scaled by the period length.
pub fn first_stage_costs(instance: &Instance, layout: &FirstStageLayout) -> Vec<f64> {
    let mut c = vec![0.0; layout.len];
    for (g, gen) in instance.generators.iter().enumerate() {
        for (m, mode) in gen.modes.iter().enumerate() {
            let cost = mode.min_generation_cost() * instance.period_hours;
            for t in 0..instance.horizon {
                c[layout.index(g, m, t, Kind::Commit)] = cost;
            }
        }
    }
    c
}

/// Adds the generator's scheduling variables (binary or `[0,1]`
/// continuous) with the given costs; returns the first index.
pub fn add_schedule_vars(
    model: &mut ModelHandle,
    gen: &Generator,
    horizon: usize,
    costs: &[f64],
    kind: VarKind,
) -> usize {
    let n = 3 * gen.num_modes() * horizon;
    debug_assert_eq!(costs.len(), n);
    let base = model.num_vars();
    for &c in costs {
        let var = match kind {
            VarKind::Binary => Var::binary(c),
            VarKind::Continuous => Var::continuous(0.0, 1.0, c),
        };
        model.add_var(var);
    }
    fix_initial_commitment(model, gen, horizon, base);
    base
}

/// Fixes commitment variables forced by minimum up/down credit from the
/// initial state.
pub fn fix_initial_commitment(model: &mut ModelHandle, gen: &Generator, horizon: usize, base: usize) {
    for m in 0..gen.num_modes() {
        for t in 0..horizon {
            let j = base + local_index(horizon, m, t, Kind::Commit);
            match gen.initial_fixing(m, t) {
                Some(true) => model.set_bounds(j, 1.0, 1.0),
                Some(false) => model.set_bounds(j, 0.0, 0.0),
                None => {}
            }
        }
    }
}

/// Rows describing the generator's feasible schedules: commitment logic,
/// minimum up and down times, dependent-mode rules and the single base mode
/// rule. Variables live at `base + local_index(..)`.
pub fn schedule_rows(gen: &Generator, horizon: usize, base: usize) -> Vec<Row> {
    let idx = |m, t, k| base + local_index(horizon, m, t, k);
    let online = gen.initially_online();
    let mut rows = Vec::new();
    for (m, mode) in gen.modes.iter().enumerate() {
        for t in 0..horizon {
            let mut e = vec![
                (idx(m, t, Kind::Commit), 1.0),
                (idx(m, t, Kind::Start), -1.0),
                (idx(m, t, Kind::Stop), 1.0),
            ];
            let rhs = if t == 0 {
                online[m] as u8 as f64
            } else {
                e.push((idx(m, t - 1, Kind::Commit), -1.0));
                0.0
            };
            rows.push(Row::new(e, RowSense::Eq, rhs));
        }
        for t in 0..horizon {
            let lo = (t + 1).saturating_sub(mode.min_up);
            let mut e = vec![(idx(m, t, Kind::Commit), 1.0)];
            e.extend((lo..=t).map(|i| (idx(m, i, Kind::Start), -1.0)));
            rows.push(Row::new(e, RowSense::Ge, 0.0));

            let lo = (t + 1).saturating_sub(mode.min_down);
            let mut e = vec![(idx(m, t, Kind::Commit), 1.0)];
            e.extend((lo..=t).map(|i| (idx(m, i, Kind::Stop), 1.0)));
            rows.push(Row::new(e, RowSense::Le, 1.0));
        }
        if let Some(s) = mode.supporting_mode {
            for t in 0..horizon {
                rows.push(Row::new(
                    vec![(idx(m, t, Kind::Start), 1.0), (idx(s, t, Kind::Commit), -1.0)],
                    RowSense::Le,
                    0.0,
                ));
                rows.push(Row::new(
                    vec![(idx(m, t, Kind::Commit), 1.0), (idx(s, t, Kind::Start), 1.0)],
                    RowSense::Le,
                    1.0,
                ));
            }
        }
    }
    let bases: Vec<ModeId> = (0..gen.num_modes()).filter(|&m| gen.modes[m].is_base()).collect();
    if bases.len() > 1 {
        for t in 0..horizon {
            let e = bases.iter().map(|&m| (idx(m, t, Kind::Commit), 1.0)).collect();
            rows.push(Row::new(e, RowSense::Le, 1.0));
        }
    }
    rows
}

/// Builds a standalone model of one generator's schedule set.
pub fn schedule_model(gen: &Generator, horizon: usize, costs: &[f64], kind: VarKind) -> ModelHandle {
    let mut model = ModelHandle::new();
    let base = add_schedule_vars(&mut model, gen, horizon, costs, kind);
    for row in schedule_rows(gen, horizon, base) {
        model.add_row(row);
    }
    model
}

/// One dispatch row `sum W y (sense) h - sum T x`.
#[derive(Debug, Clone)]
pub struct TemplateRow {
    pub w: Vec<(usize, f64)>,
    pub t: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub h: f64,
}

impl TemplateRow {
    /// Right-hand side `h - T x` at a first-stage point.
    pub fn rhs_at(&self, x: &[f64]) -> f64 {
        self.h - self.t.iter().map(|&(j, a)| a * x[j]).sum::<f64>()
    }
}

/// Dispatch problem of one scenario. Variable costs are unweighted by the
/// scenario probability.
#[derive(Debug, Clone)]
pub struct SecondStage {
    pub scenario: ScenarioId,
    pub vars: Vec<Var>,
    pub rows: Vec<TemplateRow>,
    /// `[g][m * horizon + t]`
    pub p: Vec<Vec<usize>>,
    pub r: Vec<Vec<usize>>,
    /// `[g][m][t * breakpoints + l]`
    pub lambda: Vec<Vec<Vec<usize>>>,
    pub shortage: Vec<usize>,
    pub surplus: Vec<usize>,
    /// Present for periods with a positive reserve requirement.
    pub reserve_shortfall: Vec<Option<usize>>,
}

impl SecondStage {
    pub fn build(instance: &Instance, layout: &FirstStageLayout, scenario: ScenarioId) -> Self {
        let horizon = instance.horizon;
        let hours = instance.period_hours;
        let mut vars = Vec::new();
        let push = |vars: &mut Vec<Var>, cost: f64| {
            vars.push(Var::continuous(0.0, f64::INFINITY, cost));
            vars.len() - 1
        };
        let mut p = Vec::new();
        let mut r = Vec::new();
        let mut lambda = Vec::new();
        for gen in &instance.generators {
            let n = gen.num_modes() * horizon;
            p.push((0..n).map(|_| push(&mut vars, 0.0)).collect::<Vec<_>>());
            r.push((0..n).map(|_| push(&mut vars, 0.0)).collect::<Vec<_>>());
            let mut per_mode = Vec::new();
            for mode in &gen.modes {
                let costs = mode.breakpoint_costs();
                let mut idx = Vec::with_capacity(costs.len() * horizon);
                for _t in 0..horizon {
                    for c in &costs {
                        idx.push(push(&mut vars, hours * c));
                    }
                }
                per_mode.push(idx);
            }
            lambda.push(per_mode);
        }
        let shortage: Vec<usize> = (0..horizon)
            .map(|t| push(&mut vars, hours * instance.penalty[t]))
            .collect();
        let surplus: Vec<usize> = (0..horizon)
            .map(|t| push(&mut vars, hours * instance.penalty[t]))
            .collect();
        let reserve_shortfall: Vec<Option<usize>> = (0..horizon)
            .map(|t| {
                (instance.reserve_requirement[t] > 0.0)
                    .then(|| push(&mut vars, hours * instance.penalty[t]))
            })
            .collect();

        let demand = &instance.scenarios[scenario].demand;
        let mut rows = Vec::new();
        for (g, gen) in instance.generators.iter().enumerate() {
            let init = gen.initial_marginal_power();
            for (m, mode) in gen.modes.iter().enumerate() {
                let offsets = mode.breakpoint_offsets();
                let nl = offsets.len();
                for t in 0..horizon {
                    let i = m * horizon + t;
                    let (pv, rv) = (p[g][i], r[g][i]);
                    let u = layout.index(g, m, t, Kind::Commit);
                    let v = layout.index(g, m, t, Kind::Start);

                    // ramp up: p_{t-1} - p_t - r_t >= -ramp_up
                    let mut w = vec![(pv, -1.0), (rv, -1.0)];
                    let mut h = -mode.ramp_up;
                    if t == 0 {
                        h -= init[m];
                    } else {
                        w.push((p[g][i - 1], 1.0));
                    }
                    rows.push(TemplateRow {
                        w,
                        t: vec![],
                        sense: RowSense::Ge,
                        h,
                    });

                    // ramp down: p_t - p_{t-1} >= -ramp_down
                    let mut w = vec![(pv, 1.0)];
                    let mut h = -mode.ramp_down;
                    if t == 0 {
                        h += init[m];
                    } else {
                        w.push((p[g][i - 1], -1.0));
                    }
                    rows.push(TemplateRow {
                        w,
                        t: vec![],
                        sense: RowSense::Ge,
                        h,
                    });

                    // startup ramp: -p - r >= -headroom u + su v
                    let mut tx = vec![(u, mode.headroom())];
                    if mode.startup_coefficient() != 0.0 {
                        tx.push((v, -mode.startup_coefficient()));
                    }
                    rows.push(TemplateRow {
                        w: vec![(pv, -1.0), (rv, -1.0)],
                        t: tx,
                        sense: RowSense::Ge,
                        h: 0.0,
                    });

                    // shutdown ramp: -p - r >= -headroom u + sd w_{t+1}
                    let mut tx = vec![(u, mode.headroom())];
                    if t + 1 < horizon && mode.shutdown_coefficient() != 0.0 {
                        tx.push((
                            layout.index(g, m, t + 1, Kind::Stop),
                            -mode.shutdown_coefficient(),
                        ));
                    }
                    rows.push(TemplateRow {
                        w: vec![(pv, -1.0), (rv, -1.0)],
                        t: tx,
                        sense: RowSense::Ge,
                        h: 0.0,
                    });

                    // dispatch weights sum to commitment
                    let lam = &lambda[g][m][t * nl..(t + 1) * nl];
                    rows.push(TemplateRow {
                        w: lam.iter().map(|&j| (j, 1.0)).collect(),
                        t: vec![(u, -1.0)],
                        sense: RowSense::Eq,
                        h: 0.0,
                    });

                    // weights reproduce marginal output
                    let mut w: Vec<(usize, f64)> = lam
                        .iter()
                        .zip(&offsets)
                        .filter(|(_, &o)| o != 0.0)
                        .map(|(&j, &o)| (j, o))
                        .collect();
                    w.push((pv, -1.0));
                    rows.push(TemplateRow {
                        w,
                        t: vec![],
                        sense: RowSense::Eq,
                        h: 0.0,
                    });
                }
            }
        }
        for t in 0..horizon {
            let mut w = vec![(shortage[t], 1.0), (surplus[t], -1.0)];
            let mut tx = Vec::new();
            for (g, gen) in instance.generators.iter().enumerate() {
                for (m, mode) in gen.modes.iter().enumerate() {
                    w.push((p[g][m * horizon + t], 1.0));
                    if mode.min_power != 0.0 {
                        tx.push((layout.index(g, m, t, Kind::Commit), mode.min_power));
                    }
                }
            }
            rows.push(TemplateRow {
                w,
                t: tx,
                sense: RowSense::Eq,
                h: demand[t],
            });
        }
        for t in 0..horizon {
            if let Some(k) = reserve_shortfall[t] {
                let mut w = vec![(k, 1.0)];
                for (g, gen) in instance.generators.iter().enumerate() {
                    for m in 0..gen.num_modes() {
                        w.push((r[g][m * horizon + t], 1.0));
                    }
                }
                rows.push(TemplateRow {
                    w,
                    t: vec![],
                    sense: RowSense::Ge,
                    h: instance.reserve_requirement[t],
                });
            }
        }
        SecondStage {
            scenario,
            vars,
            rows,
            p,
            r,
            lambda,
            shortage,
            surplus,
            reserve_shortfall,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    /// LP of this scenario with right-hand sides evaluated at `x`.
    pub fn model_at(&self, x: &[f64]) -> ModelHandle {
        let mut model = ModelHandle::new();
        for v in &self.vars {
            model.add_var(*v);
        }
        for row in &self.rows {
            model.add_row(Row::new(row.w.clone(), row.sense, row.rhs_at(x)));
        }
        model
    }

    /// `sum_i gamma_i (h_i - T_i x)`
    pub fn dual_value(&self, gamma: &[f64], x: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(gamma)
            .map(|(row, g)| g * row.rhs_at(x))
            .sum()
    }

    /// Decodes a primal vector into a dispatch solution, clipping tiny
    /// negatives to zero.
    pub fn decode(&self, y: &[f64], instance: &Instance) -> crate::model::SecondStageSolution {
        let clip = |v: f64| if v < 0.0 && v > -1e-9 { 0.0 } else { v };
        let mut sol = crate::model::SecondStageSolution::zeros(instance, self.scenario);
        for g in 0..self.p.len() {
            for (i, &j) in self.p[g].iter().enumerate() {
                sol.p[g][i] = clip(y[j]);
            }
            for (i, &j) in self.r[g].iter().enumerate() {
                sol.r[g][i] = clip(y[j]);
            }
            for (m, idx) in self.lambda[g].iter().enumerate() {
                for (k, &j) in idx.iter().enumerate() {
                    sol.lambda[g][m][k] = clip(y[j]);
                }
            }
        }
        for t in 0..self.shortage.len() {
            sol.shortage[t] = clip(y[self.shortage[t]]);
            sol.surplus[t] = clip(y[self.surplus[t]]);
            sol.reserve_shortfall[t] = self.reserve_shortfall[t].map_or(0.0, |j| clip(y[j]));
        }
        sol
    }
}

/// Writes a per-generator schedule set into a first-stage vector.
pub fn schedules_to_vector(
    schedules: &[crate::model::Schedule],
    layout: &FirstStageLayout,
) -> Vec<f64> {
    let mut x = vec![0.0; layout.len];
    for (g, s) in schedules.iter().enumerate() {
        x[layout.block(g)].copy_from_slice(&s.to_vector());
    }
    x
}

/// Splits a first-stage vector into per-generator schedules (rounded).
pub fn vector_to_schedules(x: &[f64], layout: &FirstStageLayout) -> Vec<crate::model::Schedule> {
    (0..layout.generators())
        .map(|g| {
            crate::model::Schedule::from_vector(g, layout.modes[g], layout.horizon, &x[layout.block(g)])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::{check_schedule_feasibility, Schedule};

    #[test]
    fn layout_blocks_are_contiguous() {
        let mut dep = simple_mode(5.0, 30.0, 10.0);
        dep.supporting_mode = Some(0);
        let inst = instance(
            vec![
                unit(vec![simple_mode(10.0, 50.0, 20.0)]),
                unit(vec![simple_mode(10.0, 50.0, 20.0), dep]),
            ],
            vec![vec![1.0, 2.0, 3.0]],
        );
        let layout = FirstStageLayout::new(&inst);
        assert_eq!(layout.len, 9 + 18);
        assert_eq!(layout.block(1), 9..27);
        assert_eq!(layout.index(1, 1, 2, Kind::Stop), 9 + (3 + 2) * 3 + 2);
        assert_eq!(layout.owner(8), 0);
        assert_eq!(layout.owner(9), 1);
        assert_eq!(layout.owner(26), 1);
    }

    /// Every 0/1 vector satisfying the scheduling rows is accepted by the
    /// checker and vice versa.
    #[test]
    fn schedule_rows_agree_with_checker() {
        let mut base = simple_mode(10.0, 50.0, 20.0);
        base.min_up = 2;
        base.min_down = 2;
        let mut dep = simple_mode(5.0, 30.0, 10.0);
        dep.supporting_mode = Some(0);
        let mut gen = unit(vec![base, dep]);
        gen.initial_state.periods = 1;
        let horizon = 3;
        let rows = schedule_rows(&gen, horizon, 0);
        let n = 2 * horizon;
        for mask in 0u32..(1 << n) {
            let u: Vec<Vec<bool>> = (0..2)
                .map(|m| (0..horizon).map(|t| mask >> (m * horizon + t) & 1 == 1).collect())
                .collect();
            let s = Schedule::from_commitment(0, &gen, &u);
            let x = s.to_vector();
            let mut ok = rows.iter().all(|r| r.violation(&x) <= 1e-9);
            for m in 0..2 {
                for t in 0..horizon {
                    if let Some(f) = gen.initial_fixing(m, t) {
                        ok &= s.u(m, t) == f;
                    }
                }
            }
            let checker = check_schedule_feasibility(&s, &gen).unwrap().is_empty();
            assert_eq!(ok, checker, "mask {mask:b}");
        }
    }
}
