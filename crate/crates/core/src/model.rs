//! Domain types for unit commitment with multi-mode (combined-cycle)
//! generators, with solver-free feasibility and cost checks.
//!
//! Indexing is 0-based throughout. Periods run `0..horizon`; the state
//! before period 0 comes from each generator's [`InitialState`].
//!
//! Cost conventions:
//! - Breakpoint `l` of a mode's dispatch curve is `(P_l, c_l)`. `P_0` is the
//!   minimum power and `P_last` the maximum power.
//! - `c_0` prices the minimum-generation block (`c_0 * p_min * u`, a
//!   first-stage cost). For `l >= 1`, `c_l` is the marginal cost of the
//!   segment `P_{l-1}..P_l`.
//! - Dispatch weights `lambda_l` form a convex combination of breakpoints
//!   (summing to `u`), marginal output is `sum_l lambda_l (P_l - P_0)` and
//!   its cost is `sum_l lambda_l (C(P_l) - C(P_0))`.
//! - All costs are per hour and scaled by `period_hours`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type GeneratorId = usize;
pub type ModeId = usize;
pub type ScenarioId = usize;
pub type TimeStep = usize;

/// Default balance tolerance for dispatch checks.
pub const CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakpoint {
    /// MW
    pub power: f64,
    /// $/MWh
    pub marginal_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub min_power: f64,
    pub max_power: f64,
    pub min_up: usize,
    pub min_down: usize,
    pub ramp_up: f64,
    pub ramp_down: f64,
    pub ramp_startup: f64,
    pub ramp_shutdown: f64,
    pub cost_breakpoints: Vec<CostBreakpoint>,
    /// Mode that must be online for this one to start. `None` for base modes.
    pub supporting_mode: Option<ModeId>,
}

impl Mode {
    pub fn is_base(&self) -> bool {
        self.supporting_mode.is_none()
    }

    /// Dispatchable range above the minimum.
    pub fn headroom(&self) -> f64 {
        self.max_power - self.min_power
    }

    /// Coefficient of the startup indicator in the startup ramp row.
    pub fn startup_coefficient(&self) -> f64 {
        (self.max_power - self.ramp_startup).max(0.0)
    }

    pub fn shutdown_coefficient(&self) -> f64 {
        (self.max_power - self.ramp_shutdown).max(0.0)
    }

    /// Hourly cost of the minimum-generation block.
    pub fn min_generation_cost(&self) -> f64 {
        self.cost_breakpoints[0].marginal_cost * self.min_power
    }

    /// `P_l - P_0` for every breakpoint.
    pub fn breakpoint_offsets(&self) -> Vec<f64> {
        let p0 = self.cost_breakpoints[0].power;
        self.cost_breakpoints.iter().map(|b| b.power - p0).collect()
    }

    /// Hourly cost of breakpoint `l` above the minimum block, `C(P_l) - C(P_0)`.
    pub fn breakpoint_costs(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(self.cost_breakpoints.len());
        out.push(0.0);
        for pair in self.cost_breakpoints.windows(2) {
            acc += pair[1].marginal_cost * (pair[1].power - pair[0].power);
            out.push(acc);
        }
        out
    }

    pub fn segments(&self) -> usize {
        self.cost_breakpoints.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    /// Highest committed mode before period 0 (its supporting chain is online
    /// too), or `None` when the unit is offline.
    pub mode: Option<ModeId>,
    /// Periods the unit has already spent in that state.
    pub periods: usize,
    /// Total output (MW) in the period before the horizon.
    pub power: f64,
}

impl InitialState {
    pub fn offline(periods: usize) -> Self {
        InitialState {
            mode: None,
            periods,
            power: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub modes: Vec<Mode>,
    pub initial_state: InitialState,
}

impl Generator {
    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn is_combined_cycle(&self) -> bool {
        self.modes.len() > 1
    }

    /// Modes online before period 0: the initial mode and its supporting chain.
    pub fn initially_online(&self) -> Vec<bool> {
        let mut online = vec![false; self.modes.len()];
        let mut cursor = self.initial_state.mode;
        while let Some(m) = cursor {
            if m >= self.modes.len() || online[m] {
                break;
            }
            online[m] = true;
            cursor = self.modes[m].supporting_mode;
        }
        online
    }

    /// Base-first ordering of the initially online modes.
    fn online_chain(&self) -> Vec<ModeId> {
        let mut chain = Vec::new();
        let mut cursor = self.initial_state.mode;
        while let Some(m) = cursor {
            if m >= self.modes.len() || chain.contains(&m) {
                break;
            }
            chain.push(m);
            cursor = self.modes[m].supporting_mode;
        }
        chain.reverse();
        chain
    }

    /// Marginal output (above minimum) of each mode before period 0. The
    /// initial power is split base-first: every online mode supplies its
    /// minimum, the remainder fills modes in chain order.
    pub fn initial_marginal_power(&self) -> Vec<f64> {
        let mut marginal = vec![0.0; self.modes.len()];
        let chain = self.online_chain();
        let floor: f64 = chain.iter().map(|&m| self.modes[m].min_power).sum();
        let mut rest = (self.initial_state.power - floor).max(0.0);
        for &m in &chain {
            let take = rest.min(self.modes[m].headroom());
            marginal[m] = take;
            rest -= take;
        }
        marginal
    }

    /// Commitment fixings implied by minimum up/down credit carried over
    /// from the initial state: `Some(true)` forces on, `Some(false)` off.
    pub fn initial_fixing(&self, mode: ModeId, t: TimeStep) -> Option<bool> {
        let online = self.initially_online()[mode];
        let m = &self.modes[mode];
        let k = self.initial_state.periods;
        if online {
            (t + k < m.min_up).then_some(true)
        } else {
            (t + k < m.min_down).then_some(false)
        }
    }

    fn validate(&self, g: usize, horizon: usize, errors: &mut Vec<String>) {
        let at = format!("generators[{g}]");
        if self.modes.is_empty() {
            errors.push(format!("{at}.modes: generator has no modes"));
            return;
        }
        if !self.modes.iter().any(Mode::is_base) {
            errors.push(format!("{at}.modes: no base mode (every mode has a supporting mode)"));
        }
        for (i, m) in self.modes.iter().enumerate() {
            let at = format!("{at}.modes[{i}]");
            let finite = [
                m.min_power,
                m.max_power,
                m.ramp_up,
                m.ramp_down,
                m.ramp_startup,
                m.ramp_shutdown,
            ]
            .iter()
            .all(|v| v.is_finite());
            if !finite {
                errors.push(format!("{at}: non-finite power or ramp value"));
                continue;
            }
            if !(0.0 <= m.min_power && m.min_power <= m.max_power) {
                errors.push(format!(
                    "{at}: need 0 <= min_power <= max_power, got {} and {}",
                    m.min_power, m.max_power
                ));
            }
            if m.min_up < 1 {
                errors.push(format!("{at}.min_up: must be >= 1"));
            }
            if m.min_down < 1 {
                errors.push(format!("{at}.min_down: must be >= 1"));
            }
            if m.ramp_up < 0.0 || m.ramp_down < 0.0 {
                errors.push(format!("{at}: ramp limits must be nonnegative"));
            }
            if m.ramp_startup < m.min_power {
                errors.push(format!(
                    "{at}.ramp_startup: {} is below min_power {}, the mode could never start",
                    m.ramp_startup, m.min_power
                ));
            }
            if m.ramp_shutdown < m.min_power {
                errors.push(format!(
                    "{at}.ramp_shutdown: {} is below min_power {}, the mode could never stop",
                    m.ramp_shutdown, m.min_power
                ));
            }
            let bp = &m.cost_breakpoints;
            if bp.is_empty() {
                errors.push(format!("{at}.cost_breakpoints: must not be empty"));
            } else {
                if (bp[0].power - m.min_power).abs() > 1e-9 {
                    errors.push(format!(
                        "{at}.cost_breakpoints[0].power: {} differs from min_power {}",
                        bp[0].power, m.min_power
                    ));
                }
                if (bp[bp.len() - 1].power - m.max_power).abs() > 1e-9 {
                    errors.push(format!(
                        "{at}.cost_breakpoints[{}].power: {} differs from max_power {}",
                        bp.len() - 1,
                        bp[bp.len() - 1].power,
                        m.max_power
                    ));
                }
                for (l, pair) in bp.windows(2).enumerate() {
                    if pair[1].power <= pair[0].power {
                        errors.push(format!(
                            "{at}.cost_breakpoints[{}].power: powers must be strictly increasing",
                            l + 1
                        ));
                    }
                }
                for (l, b) in bp.iter().enumerate() {
                    if !(b.marginal_cost.is_finite() && b.marginal_cost >= 0.0) {
                        errors.push(format!(
                            "{at}.cost_breakpoints[{l}].marginal_cost: must be finite and nonnegative"
                        ));
                    }
                }
            }
            if let Some(s) = m.supporting_mode {
                if s >= self.modes.len() {
                    errors.push(format!(
                        "{at}.supporting_mode: mode {s} does not exist (generator has {} modes)",
                        self.modes.len()
                    ));
                } else if s == i {
                    errors.push(format!("{at}.supporting_mode: mode {s} cannot support itself"));
                }
            }
        }
        // dependency graph must be acyclic
        for start in 0..self.modes.len() {
            let mut seen = vec![false; self.modes.len()];
            let mut cursor = Some(start);
            while let Some(m) = cursor {
                if m >= self.modes.len() {
                    break;
                }
                if seen[m] {
                    errors.push(format!(
                        "{at}.modes[{start}].supporting_mode: dependency cycle through mode {m}"
                    ));
                    break;
                }
                seen[m] = true;
                cursor = self.modes[m].supporting_mode;
            }
        }

        let init = &self.initial_state;
        let at_init = format!("{at}.initial_state");
        match init.mode {
            Some(m) if m >= self.modes.len() => {
                errors.push(format!("{at_init}.mode: mode {m} does not exist"));
            }
            Some(_) => {
                let chain = self.online_chain();
                let lo: f64 = chain.iter().map(|&m| self.modes[m].min_power).sum();
                let hi: f64 = chain.iter().map(|&m| self.modes[m].max_power).sum();
                if init.power < lo - 1e-9 || init.power > hi + 1e-9 {
                    errors.push(format!(
                        "{at_init}.power: {} outside the online range [{lo}, {hi}]",
                        init.power
                    ));
                } else {
                    for (m, p) in self.initial_marginal_power().iter().enumerate() {
                        if *p > self.modes[m].ramp_down + 1e-9 {
                            errors.push(format!(
                                "{at_init}.power: mode {m} starts {p} MW above minimum, more than its ramp_down {}",
                                self.modes[m].ramp_down
                            ));
                        }
                    }
                }
            }
            None => {
                if init.power.abs() > 1e-9 {
                    errors.push(format!("{at_init}.power: offline unit must have zero power"));
                }
            }
        }
        if init.periods == 0 {
            errors.push(format!("{at_init}.periods: must be >= 1"));
        }
        // initial fixings must respect single-base-mode logic
        let _ = horizon;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub demand: Vec<f64>,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub horizon: usize,
    pub period_hours: f64,
    pub generators: Vec<Generator>,
    pub scenarios: Vec<Scenario>,
    /// $/MWh per period for unmet or excess demand.
    pub penalty: Vec<f64>,
    /// MW of spinning reserve per period (zero when unused).
    pub reserve_requirement: Vec<f64>,
}

impl Instance {
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.horizon == 0 {
            errors.push("horizon: must be >= 1".to_string());
        }
        if !(self.period_hours.is_finite() && self.period_hours > 0.0) {
            errors.push("period_hours: must be positive".to_string());
        }
        if self.penalty.len() != self.horizon {
            errors.push(format!(
                "penalty: {} values for horizon {}",
                self.penalty.len(),
                self.horizon
            ));
        }
        for (t, &c) in self.penalty.iter().enumerate() {
            if !(c.is_finite() && c > 0.0) {
                errors.push(format!("penalty[{t}]: must be positive, got {c}"));
            }
        }
        if self.reserve_requirement.len() != self.horizon {
            errors.push(format!(
                "reserve_requirement: {} values for horizon {}",
                self.reserve_requirement.len(),
                self.horizon
            ));
        }
        for (t, &r) in self.reserve_requirement.iter().enumerate() {
            if !(r.is_finite() && r >= 0.0) {
                errors.push(format!("reserve_requirement[{t}]: must be nonnegative"));
            }
        }
        if self.generators.is_empty() {
            errors.push("generators: at least one generator is required".to_string());
        }
        for (g, gen) in self.generators.iter().enumerate() {
            gen.validate(g, self.horizon, &mut errors);
        }
        if self.scenarios.is_empty() {
            errors.push("scenarios: at least one scenario is required".to_string());
        }
        let mut total = 0.0;
        for (s, sc) in self.scenarios.iter().enumerate() {
            if sc.demand.len() != self.horizon {
                errors.push(format!(
                    "scenarios[{s}].demand: {} values for horizon {}",
                    sc.demand.len(),
                    self.horizon
                ));
            }
            if sc.demand.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
                errors.push(format!("scenarios[{s}].demand: values must be finite and >= 0"));
            }
            if !(0.0..=1.0).contains(&sc.probability) {
                errors.push(format!(
                    "scenarios[{s}].probability: {} outside [0, 1]",
                    sc.probability
                ));
            }
            total += sc.probability;
        }
        if !self.scenarios.is_empty() && (total - 1.0).abs() > 1e-9 {
            errors.push(format!("scenarios: probabilities sum to {total}, expected 1"));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInstance(errors.join("; ")))
        }
    }

    pub fn num_scenarios(&self) -> usize {
        self.scenarios.len()
    }

    /// Copy of the instance restricted to one scenario with probability 1.
    pub fn single_scenario(&self, s: ScenarioId) -> Instance {
        let mut sc = self.scenarios[s].clone();
        sc.probability = 1.0;
        Instance {
            scenarios: vec![sc],
            ..self.clone()
        }
    }

    /// Copy keeping only the first `n` scenarios, reweighted uniformly.
    pub fn truncate_scenarios(&self, n: usize) -> Instance {
        let n = n.clamp(1, self.scenarios.len());
        let scenarios = self.scenarios[..n]
            .iter()
            .map(|s| Scenario {
                demand: s.demand.clone(),
                probability: 1.0 / n as f64,
            })
            .collect();
        Instance {
            scenarios,
            ..self.clone()
        }
    }

    /// Index of the scenario containing the single highest-demand period;
    /// ties go to the lowest index.
    pub fn peak_scenario(&self) -> ScenarioId {
        let mut best = 0;
        let mut best_peak = f64::NEG_INFINITY;
        for (s, sc) in self.scenarios.iter().enumerate() {
            let peak = sc.demand.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if peak > best_peak {
                best_peak = peak;
                best = s;
            }
        }
        best
    }
}

/// One generator's commitment, startup and shutdown indicators over all
/// modes and periods (an extreme point of its scheduling polytope).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Schedule {
    pub generator: GeneratorId,
    pub modes: usize,
    pub horizon: usize,
    pub u: Vec<bool>,
    pub v: Vec<bool>,
    pub w: Vec<bool>,
}

impl Schedule {
    pub fn all_off(generator: GeneratorId, modes: usize, horizon: usize) -> Self {
        let n = modes * horizon;
        Schedule {
            generator,
            modes,
            horizon,
            u: vec![false; n],
            v: vec![false; n],
            w: vec![false; n],
        }
    }

    /// Builds a schedule from commitment alone, deriving startups and
    /// shutdowns from transitions (against the generator's initial state).
    pub fn from_commitment(generator: GeneratorId, gen: &Generator, u: &[Vec<bool>]) -> Self {
        let modes = gen.num_modes();
        let horizon = u.first().map_or(0, Vec::len);
        let mut s = Schedule::all_off(generator, modes, horizon);
        let online = gen.initially_online();
        for m in 0..modes {
            let mut prev = online[m];
            for t in 0..horizon {
                let cur = u[m][t];
                let i = m * horizon + t;
                s.u[i] = cur;
                s.v[i] = cur && !prev;
                s.w[i] = !cur && prev;
                prev = cur;
            }
        }
        s
    }

    #[inline]
    pub fn idx(&self, m: ModeId, t: TimeStep) -> usize {
        m * self.horizon + t
    }

    pub fn u(&self, m: ModeId, t: TimeStep) -> bool {
        self.u[self.idx(m, t)]
    }

    pub fn v(&self, m: ModeId, t: TimeStep) -> bool {
        self.v[self.idx(m, t)]
    }

    pub fn w(&self, m: ModeId, t: TimeStep) -> bool {
        self.w[self.idx(m, t)]
    }

    /// First-stage vector in the layout used by the decomposition modules:
    /// `(u, v, w)` interleaved per mode-period.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(3 * self.u.len());
        for i in 0..self.u.len() {
            out.push(self.u[i] as u8 as f64);
            out.push(self.v[i] as u8 as f64);
            out.push(self.w[i] as u8 as f64);
        }
        out
    }

    /// Inverse of [`Schedule::to_vector`]; values are rounded to {0, 1}.
    pub fn from_vector(generator: GeneratorId, modes: usize, horizon: usize, x: &[f64]) -> Self {
        let mut s = Schedule::all_off(generator, modes, horizon);
        for i in 0..modes * horizon {
            s.u[i] = x[3 * i] > 0.5;
            s.v[i] = x[3 * i + 1] > 0.5;
            s.w[i] = x[3 * i + 2] > 0.5;
        }
        s
    }

    pub fn committed_periods(&self) -> usize {
        self.u.iter().filter(|&&b| b).count()
    }
}

/// Dispatch decisions for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondStageSolution {
    pub scenario: ScenarioId,
    /// `[g][m * horizon + t]`, MW above minimum.
    pub p: Vec<Vec<f64>>,
    /// `[g][m * horizon + t]`, MW of reserve.
    pub r: Vec<Vec<f64>>,
    /// `[g][m][t * breakpoints + l]`
    pub lambda: Vec<Vec<Vec<f64>>>,
    pub shortage: Vec<f64>,
    pub surplus: Vec<f64>,
    pub reserve_shortfall: Vec<f64>,
}

impl SecondStageSolution {
    pub fn zeros(instance: &Instance, scenario: ScenarioId) -> Self {
        let t_len = instance.horizon;
        SecondStageSolution {
            scenario,
            p: instance
                .generators
                .iter()
                .map(|g| vec![0.0; g.num_modes() * t_len])
                .collect(),
            r: instance
                .generators
                .iter()
                .map(|g| vec![0.0; g.num_modes() * t_len])
                .collect(),
            lambda: instance
                .generators
                .iter()
                .map(|g| {
                    g.modes
                        .iter()
                        .map(|m| vec![0.0; m.segments() * t_len])
                        .collect()
                })
                .collect(),
            shortage: vec![0.0; t_len],
            surplus: vec![0.0; t_len],
            reserve_shortfall: vec![0.0; t_len],
        }
    }

    pub fn total_shortage(&self) -> f64 {
        self.shortage.iter().sum()
    }

    pub fn total_surplus(&self) -> f64 {
        self.surplus.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    Commitment,
    MinUp,
    MinDown,
    DependentStartup,
    DependentCommitment,
    SingleBaseMode,
    RampUp,
    RampDown,
    StartupRamp,
    ShutdownRamp,
    PowerBalance,
    DispatchWeights,
    DispatchLink,
    Reserve,
    Nonnegative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: Constraint,
    pub generator: Option<GeneratorId>,
    pub mode: Option<ModeId>,
    pub period: TimeStep,
    pub amount: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?} violated at t={}", self.constraint, self.period)?;
        if let Some(g) = self.generator {
            write!(f, " generator {g}")?;
        }
        if let Some(m) = self.mode {
            write!(f, " mode {m}")?;
        }
        write!(f, " by {}", self.amount)
    }
}

fn violation(
    constraint: Constraint,
    generator: Option<GeneratorId>,
    mode: Option<ModeId>,
    period: TimeStep,
    amount: f64,
) -> Violation {
    Violation {
        constraint,
        generator,
        mode,
        period,
        amount,
    }
}

/// Checks commitment logic, minimum up/down times (with initial-state
/// credit), dependent-mode rules and the single-base-mode rule.
pub fn check_schedule_feasibility(
    schedule: &Schedule,
    generator: &Generator,
) -> Result<Vec<Violation>> {
    let modes = generator.num_modes();
    let horizon = schedule.horizon;
    let n = modes * horizon;
    if schedule.modes != modes || schedule.u.len() != n || schedule.v.len() != n || schedule.w.len() != n
    {
        return Err(Error::Dimension(format!(
            "schedule is {}x{} with {} entries, generator has {} modes",
            schedule.modes,
            schedule.horizon,
            schedule.u.len(),
            modes
        )));
    }
    let g = Some(schedule.generator);
    let b = |x: bool| x as i32;
    let online = generator.initially_online();
    let mut out = Vec::new();

    for (m, mode) in generator.modes.iter().enumerate() {
        for t in 0..horizon {
            let u = b(schedule.u(m, t));
            let prev = if t == 0 {
                b(online[m])
            } else {
                b(schedule.u(m, t - 1))
            };
            let v = b(schedule.v(m, t));
            let w = b(schedule.w(m, t));
            if u - prev != v - w {
                out.push(violation(
                    Constraint::Commitment,
                    g,
                    Some(m),
                    t,
                    ((u - prev) - (v - w)).abs() as f64,
                ));
            }
            let lo = (t + 1).saturating_sub(mode.min_up);
            let starts: i32 = (lo..=t).map(|i| b(schedule.v(m, i))).sum();
            if u < starts {
                out.push(violation(Constraint::MinUp, g, Some(m), t, (starts - u) as f64));
            }
            let lo = (t + 1).saturating_sub(mode.min_down);
            let stops: i32 = (lo..=t).map(|i| b(schedule.w(m, i))).sum();
            if u > 1 - stops {
                out.push(violation(
                    Constraint::MinDown,
                    g,
                    Some(m),
                    t,
                    (u - 1 + stops) as f64,
                ));
            }
            match generator.initial_fixing(m, t) {
                Some(true) if u == 0 => {
                    out.push(violation(Constraint::MinUp, g, Some(m), t, 1.0));
                }
                Some(false) if u == 1 => {
                    out.push(violation(Constraint::MinDown, g, Some(m), t, 1.0));
                }
                _ => {}
            }
            if let Some(s) = mode.supporting_mode {
                if v > b(schedule.u(s, t)) {
                    out.push(violation(Constraint::DependentStartup, g, Some(m), t, 1.0));
                }
                if u > 1 - b(schedule.v(s, t)) {
                    out.push(violation(
                        Constraint::DependentCommitment,
                        g,
                        Some(m),
                        t,
                        1.0,
                    ));
                }
            }
        }
    }
    for t in 0..horizon {
        let base_on: i32 = generator
            .modes
            .iter()
            .enumerate()
            .filter(|(_, m)| m.is_base())
            .map(|(m, _)| b(schedule.u(m, t)))
            .sum();
        if base_on > 1 {
            out.push(violation(
                Constraint::SingleBaseMode,
                g,
                None,
                t,
                (base_on - 1) as f64,
            ));
        }
    }
    Ok(out)
}

/// Hourly-scaled first-stage cost (minimum-generation blocks) of a schedule.
pub fn first_stage_cost(schedule: &Schedule, generator: &Generator, period_hours: f64) -> f64 {
    let mut cost = 0.0;
    for (m, mode) in generator.modes.iter().enumerate() {
        let unit = mode.min_generation_cost() * period_hours;
        for t in 0..schedule.horizon {
            if schedule.u(m, t) {
                cost += unit;
            }
        }
    }
    cost
}

/// Unweighted dispatch and penalty cost of one scenario.
pub fn second_stage_cost(sol: &SecondStageSolution, instance: &Instance) -> f64 {
    let h = instance.period_hours;
    let mut cost = 0.0;
    for (g, gen) in instance.generators.iter().enumerate() {
        for (m, mode) in gen.modes.iter().enumerate() {
            let costs = mode.breakpoint_costs();
            let lam = &sol.lambda[g][m];
            for t in 0..instance.horizon {
                for (l, c) in costs.iter().enumerate() {
                    cost += h * c * lam[t * costs.len() + l];
                }
            }
        }
    }
    for t in 0..instance.horizon {
        let slack = sol.shortage[t] + sol.surplus[t] + sol.reserve_shortfall[t];
        cost += h * instance.penalty[t] * slack;
    }
    cost
}

/// First-stage cost plus probability-weighted second-stage cost.
pub fn evaluate_objective(
    schedules: &[Schedule],
    second_stage: &[SecondStageSolution],
    instance: &Instance,
) -> Result<f64> {
    if schedules.len() != instance.generators.len() {
        return Err(Error::Dimension(format!(
            "{} schedules for {} generators",
            schedules.len(),
            instance.generators.len()
        )));
    }
    if second_stage.len() != instance.scenarios.len() {
        return Err(Error::Dimension(format!(
            "{} second-stage solutions for {} scenarios",
            second_stage.len(),
            instance.scenarios.len()
        )));
    }
    let mut total = 0.0;
    for (s, gen) in schedules.iter().zip(&instance.generators) {
        total += first_stage_cost(s, gen, instance.period_hours);
    }
    for sol in second_stage {
        let rho = instance.scenarios[sol.scenario].probability;
        total += rho * second_stage_cost(sol, instance);
    }
    Ok(total)
}

/// Checks one scenario's dispatch against every second-stage constraint,
/// within [`CHECK_TOL`].
pub fn check_second_stage(
    sol: &SecondStageSolution,
    schedules: &[Schedule],
    instance: &Instance,
    scenario: ScenarioId,
) -> Result<Vec<Violation>> {
    let horizon = instance.horizon;
    if schedules.len() != instance.generators.len()
        || sol.p.len() != instance.generators.len()
        || sol.r.len() != instance.generators.len()
        || sol.lambda.len() != instance.generators.len()
        || sol.shortage.len() != horizon
        || sol.surplus.len() != horizon
        || sol.reserve_shortfall.len() != horizon
    {
        return Err(Error::Dimension("second-stage solution shape mismatch".into()));
    }
    let demand = &instance.scenarios[scenario].demand;
    let tol = CHECK_TOL;
    let mut out = Vec::new();
    let mut supplied = vec![0.0; horizon];
    let mut reserve = vec![0.0; horizon];

    for (g, gen) in instance.generators.iter().enumerate() {
        let sched = &schedules[g];
        let init = gen.initial_marginal_power();
        let gi = Some(g);
        if sol.p[g].len() != gen.num_modes() * horizon || sol.r[g].len() != gen.num_modes() * horizon {
            return Err(Error::Dimension(format!("dispatch of generator {g} has wrong shape")));
        }
        for (m, mode) in gen.modes.iter().enumerate() {
            let offsets = mode.breakpoint_offsets();
            let lam = &sol.lambda[g][m];
            if lam.len() != offsets.len() * horizon {
                return Err(Error::Dimension(format!(
                    "dispatch weights of generator {g} mode {m} have wrong shape"
                )));
            }
            for t in 0..horizon {
                let i = m * horizon + t;
                let p = sol.p[g][i];
                let r = sol.r[g][i];
                let prev = if t == 0 { init[m] } else { sol.p[g][i - 1] };
                let u = sched.u(m, t) as u8 as f64;
                let v = sched.v(m, t) as u8 as f64;
                let w_next = if t + 1 < horizon {
                    sched.w(m, t + 1) as u8 as f64
                } else {
                    0.0
                };
                if p < -tol || r < -tol {
                    out.push(violation(Constraint::Nonnegative, gi, Some(m), t, -p.min(r)));
                }
                let excess = p + r - prev - mode.ramp_up;
                if excess > tol {
                    out.push(violation(Constraint::RampUp, gi, Some(m), t, excess));
                }
                let excess = prev - p - mode.ramp_down;
                if excess > tol {
                    out.push(violation(Constraint::RampDown, gi, Some(m), t, excess));
                }
                let excess = p + r - mode.headroom() * u + mode.startup_coefficient() * v;
                if excess > tol {
                    out.push(violation(Constraint::StartupRamp, gi, Some(m), t, excess));
                }
                let excess = p + r - mode.headroom() * u + mode.shutdown_coefficient() * w_next;
                if excess > tol {
                    out.push(violation(Constraint::ShutdownRamp, gi, Some(m), t, excess));
                }
                let weights = &lam[t * offsets.len()..(t + 1) * offsets.len()];
                if weights.iter().any(|&x| x < -tol) {
                    out.push(violation(Constraint::Nonnegative, gi, Some(m), t, 0.0));
                }
                let sum: f64 = weights.iter().sum();
                if (sum - u).abs() > tol {
                    out.push(violation(
                        Constraint::DispatchWeights,
                        gi,
                        Some(m),
                        t,
                        (sum - u).abs(),
                    ));
                }
                let linked: f64 = weights.iter().zip(&offsets).map(|(a, b)| a * b).sum();
                if (linked - p).abs() > tol * (1.0 + p.abs()) {
                    out.push(violation(
                        Constraint::DispatchLink,
                        gi,
                        Some(m),
                        t,
                        (linked - p).abs(),
                    ));
                }
                supplied[t] += mode.min_power * u + p;
                reserve[t] += r;
            }
        }
    }
    for t in 0..horizon {
        let (short, surplus, rs) = (sol.shortage[t], sol.surplus[t], sol.reserve_shortfall[t]);
        if short < -tol || surplus < -tol || rs < -tol {
            out.push(violation(Constraint::Nonnegative, None, None, t, 0.0));
        }
        let gap = supplied[t] + short - surplus - demand[t];
        if gap.abs() > tol * (1.0 + demand[t].abs()) {
            out.push(violation(Constraint::PowerBalance, None, None, t, gap.abs()));
        }
        let missing = instance.reserve_requirement[t] - reserve[t] - rs;
        if missing > tol {
            out.push(violation(Constraint::Reserve, None, None, t, missing));
        }
    }
    Ok(out)
}
