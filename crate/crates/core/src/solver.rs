//! Thin LP/MIP layer over HiGHS.
//!
//! [`ModelHandle`] keeps its own copy of the model and lazily mirrors it into
//! a persistent HiGHS instance. Rows and columns appended after a solve are
//! pushed incrementally and the next solve starts from the previous basis.
//!
//! Dual convention at this boundary: minimization, and for every row the
//! dual `y` satisfies `reduced_cost = c - A^T y`. A `>=` row has `y >= 0`,
//! a `<=` row has `y <= 0`, an equality row is free. With this convention
//! a Benders cut `eta >= y^T (h - T x)` transcribes directly.

use std::ffi::{c_void, CString};
use std::fmt::Write as _;
use std::os::raw::{c_char, c_int};
use std::path::Path;
use std::time::Instant;

use highs_sys::*;

use crate::error::{Error, Result};

pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Var {
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
    pub kind: VarKind,
}

impl Var {
    pub fn continuous(lower: f64, upper: f64, cost: f64) -> Self {
        Var {
            lower,
            upper,
            cost,
            kind: VarKind::Continuous,
        }
    }

    pub fn binary(cost: f64) -> Self {
        Var {
            lower: 0.0,
            upper: 1.0,
            cost,
            kind: VarKind::Binary,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub entries: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

impl Row {
    pub fn new(entries: Vec<(usize, f64)>, sense: RowSense, rhs: f64) -> Self {
        Row {
            entries,
            sense,
            rhs,
        }
    }

    fn bounds(&self) -> (f64, f64) {
        match self.sense {
            RowSense::Le => (f64::NEG_INFINITY, self.rhs),
            RowSense::Ge => (self.rhs, f64::INFINITY),
            RowSense::Eq => (self.rhs, self.rhs),
        }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.entries.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.activity(x);
        match self.sense {
            RowSense::Le => (lhs - self.rhs).max(0.0),
            RowSense::Ge => (self.rhs - lhs).max(0.0),
            RowSense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Time or iteration limit reached.
    Limit,
    Error,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncumbentPoint {
    pub time: f64,
    pub objective: f64,
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct MipSolution {
    pub status: SolveStatus,
    pub primal: Option<Vec<f64>>,
    pub objective: f64,
    pub bound: f64,
    pub trace: Vec<IncumbentPoint>,
}

#[derive(Debug, Clone, Copy)]
pub struct MipOptions {
    pub time_limit: f64,
    pub rel_gap: f64,
}

impl Default for MipOptions {
    fn default() -> Self {
        MipOptions {
            time_limit: f64::INFINITY,
            rel_gap: 1e-6,
        }
    }
}

struct Backend {
    ptr: *mut c_void,
    synced_vars: usize,
    synced_rows: usize,
    integrality_on: bool,
}

impl Drop for Backend {
    fn drop(&mut self) {
        unsafe { Highs_destroy(self.ptr) }
    }
}

/// A single-owner LP/MIP model. Distinct handles may be solved on different
/// threads; one handle is never shared.
#[derive(Default)]
pub struct ModelHandle {
    vars: Vec<Var>,
    rows: Vec<Row>,
    offset: f64,
    // column entries of not-yet-synced variables into already-synced rows
    pending_col_entries: Vec<(usize, usize, f64)>,
    backend: Option<Backend>,
}

// The HiGHS instance is exclusively owned by the handle and HiGHS keeps no
// thread-local state tied to the creating thread.
unsafe impl Send for ModelHandle {}

impl Clone for ModelHandle {
    fn clone(&self) -> Self {
        ModelHandle {
            vars: self.vars.clone(),
            rows: self.rows.clone(),
            offset: self.offset,
            pending_col_entries: Vec::new(),
            backend: None,
        }
    }
}

impl std::fmt::Debug for ModelHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelHandle")
            .field("vars", &self.vars.len())
            .field("rows", &self.rows.len())
            .finish()
    }
}

/// True when concurrent solves of distinct handles are safe.
pub const BACKEND_SUPPORTS_CONCURRENCY: bool = true;

impl ModelHandle {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn set_objective_offset(&mut self, offset: f64) {
        self.offset = offset;
        if let Some(b) = &self.backend {
            unsafe { Highs_changeObjectiveOffset(b.ptr, offset) };
        }
    }

    pub fn add_var(&mut self, var: Var) -> usize {
        assert!(var.cost.is_finite(), "non-finite objective coefficient");
        self.vars.push(var);
        self.vars.len() - 1
    }

    /// Adds a variable together with its coefficients in existing rows.
    pub fn add_column(&mut self, var: Var, entries: &[(usize, f64)]) -> usize {
        let j = self.add_var(var);
        let synced_rows = self.backend.as_ref().map_or(0, |b| b.synced_rows);
        for &(r, a) in entries {
            assert!(r < self.rows.len(), "column references missing row {r}");
            assert!(a.is_finite());
            self.rows[r].entries.push((j, a));
            if r < synced_rows {
                self.pending_col_entries.push((j, r, a));
            }
        }
        j
    }

    pub fn add_row(&mut self, row: Row) -> usize {
        for &(j, a) in &row.entries {
            assert!(j < self.vars.len(), "row references missing variable {j}");
            assert!(a.is_finite(), "non-finite coefficient");
        }
        assert!(row.rhs.is_finite(), "non-finite right-hand side");
        self.rows.push(row);
        self.rows.len() - 1
    }

    pub fn set_rhs(&mut self, r: usize, rhs: f64) {
        self.rows[r].rhs = rhs;
        if let Some(b) = &self.backend {
            if r < b.synced_rows {
                let (lo, hi) = self.rows[r].bounds();
                unsafe { Highs_changeRowBounds(b.ptr, r as HighsInt, lo, hi) };
            }
        }
    }

    pub fn set_cost(&mut self, j: usize, cost: f64) {
        self.vars[j].cost = cost;
        if let Some(b) = &self.backend {
            if j < b.synced_vars {
                unsafe { Highs_changeColCost(b.ptr, j as HighsInt, cost) };
            }
        }
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.vars[j].lower = lower;
        self.vars[j].upper = upper;
        if let Some(b) = &self.backend {
            if j < b.synced_vars {
                unsafe { Highs_changeColBounds(b.ptr, j as HighsInt, lower, upper) };
            }
        }
    }

    pub fn set_kind(&mut self, j: usize, kind: VarKind) {
        self.vars[j].kind = kind;
        if let Some(b) = &mut self.backend {
            // integrality is re-applied wholesale before the next MIP solve
            b.integrality_on = false;
            unsafe { Highs_clearIntegrality(b.ptr) };
        }
    }

    pub fn has_integers(&self) -> bool {
        self.vars.iter().any(|v| v.kind == VarKind::Binary)
    }

    /// Objective value of `x` under this model's objective.
    pub fn objective_of(&self, x: &[f64]) -> f64 {
        self.offset + self.vars.iter().zip(x).map(|(v, xi)| v.cost * xi).sum::<f64>()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &xi) in self.vars.iter().zip(x) {
            worst = worst.max(v.lower - xi).max(xi - v.upper);
        }
        for row in &self.rows {
            worst = worst.max(row.violation(x));
        }
        worst
    }

    /// Dual objective implied by row duals and reduced costs.
    pub fn dual_objective(&self, sol: &LpSolution) -> f64 {
        let mut obj = self.offset;
        for (row, &y) in self.rows.iter().zip(&sol.duals) {
            obj += y * row.rhs;
        }
        for (v, &d) in self.vars.iter().zip(&sol.reduced_costs) {
            if d > 0.0 && v.lower.is_finite() {
                obj += d * v.lower;
            } else if d < 0.0 && v.upper.is_finite() {
                obj += d * v.upper;
            }
        }
        obj
    }

    fn ensure_backend(&mut self) -> Result<&mut Backend> {
        if self.backend.is_none() {
            let ptr = unsafe { Highs_create() };
            if ptr.is_null() {
                return Err(Error::Solver("Highs_create returned null".into()));
            }
            let backend = Backend {
                ptr,
                synced_vars: 0,
                synced_rows: 0,
                integrality_on: false,
            };
            set_bool_option(ptr, "output_flag", false)?;
            set_int_option(ptr, "threads", 1)?;
            set_int_option(ptr, "random_seed", 0)?;
            unsafe { Highs_changeObjectiveOffset(ptr, self.offset) };
            self.pending_col_entries.clear();
            self.backend = Some(backend);
        }
        self.sync()?;
        Ok(self.backend.as_mut().expect("backend just created"))
    }

    fn sync(&mut self) -> Result<()> {
        let b = self.backend.as_mut().expect("sync without backend");
        if b.synced_vars < self.vars.len() {
            let first = b.synced_vars;
            let n = self.vars.len() - first;
            let costs: Vec<f64> = self.vars[first..].iter().map(|v| v.cost).collect();
            let lower: Vec<f64> = self.vars[first..].iter().map(|v| v.lower).collect();
            let upper: Vec<f64> = self.vars[first..].iter().map(|v| v.upper).collect();
            let mut starts = Vec::with_capacity(n);
            let mut index = Vec::new();
            let mut value = Vec::new();
            let mut pending = std::mem::take(&mut self.pending_col_entries);
            pending.sort_by_key(|&(j, r, _)| (j, r));
            let mut cursor = 0;
            for j in first..self.vars.len() {
                starts.push(index.len() as HighsInt);
                while cursor < pending.len() && pending[cursor].0 == j {
                    let (_, r, a) = pending[cursor];
                    if r < b.synced_rows {
                        index.push(r as HighsInt);
                        value.push(a);
                    }
                    cursor += 1;
                }
            }
            let status = unsafe {
                Highs_addCols(
                    b.ptr,
                    n as HighsInt,
                    costs.as_ptr(),
                    lower.as_ptr(),
                    upper.as_ptr(),
                    index.len() as HighsInt,
                    starts.as_ptr(),
                    index.as_ptr(),
                    value.as_ptr(),
                )
            };
            check_status(status, "Highs_addCols")?;
            b.synced_vars = self.vars.len();
            b.integrality_on = false;
        }
        self.pending_col_entries.clear();
        if b.synced_rows < self.rows.len() {
            let first = b.synced_rows;
            let n = self.rows.len() - first;
            let mut lower = Vec::with_capacity(n);
            let mut upper = Vec::with_capacity(n);
            let mut starts = Vec::with_capacity(n);
            let mut index = Vec::new();
            let mut value = Vec::new();
            for row in &self.rows[first..] {
                let (lo, hi) = row.bounds();
                lower.push(lo);
                upper.push(hi);
                starts.push(index.len() as HighsInt);
                for &(j, a) in &row.entries {
                    index.push(j as HighsInt);
                    value.push(a);
                }
            }
            let status = unsafe {
                Highs_addRows(
                    b.ptr,
                    n as HighsInt,
                    lower.as_ptr(),
                    upper.as_ptr(),
                    index.len() as HighsInt,
                    starts.as_ptr(),
                    index.as_ptr(),
                    value.as_ptr(),
                )
            };
            check_status(status, "Highs_addRows")?;
            b.synced_rows = self.rows.len();
        }
        Ok(())
    }

    fn apply_integrality(&mut self, on: bool) -> Result<()> {
        let n = self.vars.len();
        let integrality: Vec<HighsInt> = self
            .vars
            .iter()
            .map(|v| match v.kind {
                VarKind::Binary => kHighsVarTypeInteger,
                VarKind::Continuous => kHighsVarTypeContinuous,
            })
            .collect();
        let b = self.backend.as_mut().expect("backend");
        if on == b.integrality_on {
            return Ok(());
        }
        if on {
            if n > 0 {
                let status = unsafe {
                    Highs_changeColsIntegralityByRange(
                        b.ptr,
                        0,
                        (n - 1) as HighsInt,
                        integrality.as_ptr(),
                    )
                };
                check_status(status, "Highs_changeColsIntegralityByRange")?;
            }
        } else {
            unsafe { Highs_clearIntegrality(b.ptr) };
        }
        b.integrality_on = on;
        Ok(())
    }

    /// Solves the LP relaxation (integrality is ignored). A solver error on
    /// a warm model is retried once on a freshly built backend.
    pub fn solve_lp(&mut self, time_limit: f64) -> Result<LpSolution> {
        let start = Instant::now();
        let warm = self.backend.is_some();
        match self.run_lp(time_limit) {
            Ok(sol) if sol.status != SolveStatus::Error => return Ok(sol),
            Ok(_) | Err(Error::Solver(_)) if warm => {}
            other => return other,
        }
        log::warn!("LP solve failed on a warm model; rebuilding the backend");
        self.backend = None;
        self.run_lp((time_limit - start.elapsed().as_secs_f64()).max(1e-3))
    }

    fn run_lp(&mut self, time_limit: f64) -> Result<LpSolution> {
        self.ensure_backend()?;
        self.apply_integrality(false)?;
        let ptr = self.backend.as_ref().unwrap().ptr;
        set_double_option(ptr, "time_limit", clamp_time(time_limit))?;
        unsafe { Highs_zeroAllClocks(ptr) };
        let run = unsafe { Highs_run(ptr) };
        if run == kHighsStatusError {
            return Err(Error::Solver("Highs_run failed on LP".into()));
        }
        let status = model_status(ptr);
        let (ncol, nrow) = (self.vars.len(), self.rows.len());
        let mut primal = vec![0.0; ncol];
        let mut reduced_costs = vec![0.0; ncol];
        let mut row_value = vec![0.0; nrow];
        let mut duals = vec![0.0; nrow];
        if status == SolveStatus::Optimal {
            unsafe {
                Highs_getSolution(
                    ptr,
                    primal.as_mut_ptr(),
                    reduced_costs.as_mut_ptr(),
                    row_value.as_mut_ptr(),
                    duals.as_mut_ptr(),
                )
            };
        }
        let objective = if status == SolveStatus::Optimal {
            unsafe { Highs_getObjectiveValue(ptr) }
        } else {
            f64::NAN
        };
        Ok(LpSolution {
            status,
            primal,
            duals,
            reduced_costs,
            objective,
        })
    }

    /// Solves the model with integrality enforced on binary variables.
    pub fn solve_mip(
        &mut self,
        options: MipOptions,
        warm_start: Option<&[f64]>,
    ) -> Result<MipSolution> {
        let start = Instant::now();
        let warm = self.backend.is_some();
        match self.run_mip(options, warm_start) {
            Ok(sol) if sol.status != SolveStatus::Error => return Ok(sol),
            Ok(_) | Err(Error::Solver(_)) if warm => {}
            other => return other,
        }
        log::warn!("MIP solve failed on a warm model; rebuilding the backend");
        self.backend = None;
        let time_limit = (options.time_limit - start.elapsed().as_secs_f64()).max(1e-3);
        self.run_mip(MipOptions { time_limit, ..options }, warm_start)
    }

    fn run_mip(&mut self, options: MipOptions, warm_start: Option<&[f64]>) -> Result<MipSolution> {
        self.ensure_backend()?;
        self.apply_integrality(true)?;
        let ptr = self.backend.as_ref().unwrap().ptr;
        set_double_option(ptr, "time_limit", clamp_time(options.time_limit))?;
        set_double_option(ptr, "mip_rel_gap", options.rel_gap)?;
        set_double_option(ptr, "mip_abs_gap", 1e-9)?;
        if let Some(x) = warm_start {
            if x.len() != self.vars.len() {
                return Err(Error::Dimension(format!(
                    "warm start has {} entries, model has {} variables",
                    x.len(),
                    self.vars.len()
                )));
            }
            let status =
                unsafe { Highs_setSolution(ptr, x.as_ptr(), std::ptr::null(), std::ptr::null(), std::ptr::null()) };
            if status == kHighsStatusError {
                log::warn!("HiGHS rejected warm start");
            }
        }

        let mut trace: Box<Vec<IncumbentPoint>> = Box::default();
        unsafe {
            Highs_setCallback(
                ptr,
                Some(improving_solution_callback),
                trace.as_mut() as *mut Vec<IncumbentPoint> as *mut c_void,
            );
            Highs_startCallback(ptr, kHighsCallbackMipImprovingSolution);
        }
        unsafe { Highs_zeroAllClocks(ptr) };
        let run = unsafe { Highs_run(ptr) };
        unsafe {
            Highs_stopCallback(ptr, kHighsCallbackMipImprovingSolution);
            Highs_setCallback(ptr, None, std::ptr::null_mut());
        }
        if run == kHighsStatusError {
            return Err(Error::Solver("Highs_run failed on MIP".into()));
        }
        let status = model_status(ptr);
        let has_primal = primal_feasible(ptr);
        let primal = if has_primal {
            let mut x = vec![0.0; self.vars.len()];
            let mut dummy_c = vec![0.0; self.vars.len()];
            let mut dummy_r = vec![0.0; self.rows.len()];
            let mut dummy_d = vec![0.0; self.rows.len()];
            unsafe {
                Highs_getSolution(
                    ptr,
                    x.as_mut_ptr(),
                    dummy_c.as_mut_ptr(),
                    dummy_r.as_mut_ptr(),
                    dummy_d.as_mut_ptr(),
                )
            };
            Some(x)
        } else {
            None
        };
        let objective = if primal.is_some() {
            unsafe { Highs_getObjectiveValue(ptr) }
        } else {
            f64::INFINITY
        };
        let mut bound = get_double_info(ptr, "mip_dual_bound").unwrap_or(f64::NEG_INFINITY);
        if status == SolveStatus::Optimal && !bound.is_finite() {
            bound = objective;
        }
        let bound = bound.min(objective);
        let trace = *trace;
        Ok(MipSolution {
            status,
            primal,
            objective,
            bound,
            trace,
        })
    }

    /// Writes the model in CPLEX LP text format.
    pub fn write_lp(&self, path: &Path) -> Result<()> {
        let mut out = String::from("Minimize\n obj:");
        let name = |j: usize| format!("x{j}");
        let mut any = false;
        for (j, v) in self.vars.iter().enumerate() {
            if v.cost != 0.0 {
                let _ = write!(out, " {:+} {}", v.cost, name(j));
                any = true;
            }
        }
        if self.offset != 0.0 || !any {
            let _ = write!(out, " {:+}", self.offset);
        }
        out.push_str("\nSubject To\n");
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(out, " r{i}:");
            if row.entries.is_empty() {
                let _ = write!(out, " 0 x0");
            }
            for &(j, a) in &row.entries {
                let _ = write!(out, " {:+} {}", a, name(j));
            }
            let op = match row.sense {
                RowSense::Le => "<=",
                RowSense::Ge => ">=",
                RowSense::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", row.rhs);
        }
        out.push_str("Bounds\n");
        for (j, v) in self.vars.iter().enumerate() {
            let lo = if v.lower.is_finite() {
                v.lower.to_string()
            } else {
                "-inf".into()
            };
            let hi = if v.upper.is_finite() {
                v.upper.to_string()
            } else {
                "+inf".into()
            };
            let _ = writeln!(out, " {lo} <= {} <= {hi}", name(j));
        }
        let binaries: Vec<String> = self
            .vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(j, _)| name(j))
            .collect();
        if !binaries.is_empty() {
            out.push_str("Binaries\n ");
            out.push_str(&binaries.join(" "));
            out.push('\n');
        }
        out.push_str("End\n");
        std::fs::write(path, out).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

unsafe extern "C" fn improving_solution_callback(
    callback_type: c_int,
    _message: *const c_char,
    data_out: *const HighsCallbackDataOut,
    _data_in: *mut HighsCallbackDataIn,
    user_data: *mut c_void,
) {
    if callback_type != kHighsCallbackMipImprovingSolution || data_out.is_null() || user_data.is_null()
    {
        return;
    }
    let data = &*data_out;
    let trace = &mut *(user_data as *mut Vec<IncumbentPoint>);
    trace.push(IncumbentPoint {
        time: data.running_time,
        objective: data.objective_function_value,
        bound: data.mip_dual_bound,
    });
}

fn clamp_time(t: f64) -> f64 {
    if t.is_finite() {
        t.max(1e-3)
    } else {
        1e30
    }
}

fn check_status(status: HighsInt, what: &str) -> Result<()> {
    if status == kHighsStatusError {
        Err(Error::Solver(format!("{what} failed")))
    } else {
        Ok(())
    }
}

fn model_status(ptr: *mut c_void) -> SolveStatus {
    let s = unsafe { Highs_getModelStatus(ptr) };
    match s {
        x if x == kHighsModelStatusOptimal || x == kHighsModelStatusModelEmpty => SolveStatus::Optimal,
        x if x == kHighsModelStatusInfeasible => SolveStatus::Infeasible,
        x if x == kHighsModelStatusUnbounded || x == kHighsModelStatusUnboundedOrInfeasible => {
            SolveStatus::Unbounded
        }
        x if x == kHighsModelStatusTimeLimit
            || x == kHighsModelStatusIterationLimit
            || x == kHighsModelStatusSolutionLimit
            || x == kHighsModelStatusInterrupt =>
        {
            SolveStatus::Limit
        }
        _ => SolveStatus::Error,
    }
}

fn primal_feasible(ptr: *mut c_void) -> bool {
    let mut value: HighsInt = 0;
    let name = CString::new("primal_solution_status").unwrap();
    let status = unsafe { Highs_getIntInfoValue(ptr, name.as_ptr(), &mut value) };
    status != kHighsStatusError && value == kHighsSolutionStatusFeasible
}

fn get_double_info(ptr: *mut c_void, name: &str) -> Option<f64> {
    let mut value = 0.0;
    let name = CString::new(name).unwrap();
    let status = unsafe { Highs_getDoubleInfoValue(ptr, name.as_ptr(), &mut value) };
    (status != kHighsStatusError).then_some(value)
}

fn set_bool_option(ptr: *mut c_void, name: &str, value: bool) -> Result<()> {
    let cname = CString::new(name).unwrap();
    let status = unsafe { Highs_setBoolOptionValue(ptr, cname.as_ptr(), value as HighsInt) };
    check_status(status, name)
}

fn set_int_option(ptr: *mut c_void, name: &str, value: i32) -> Result<()> {
    let cname = CString::new(name).unwrap();
    let status = unsafe { Highs_setIntOptionValue(ptr, cname.as_ptr(), value as HighsInt) };
    check_status(status, name)
}

fn set_double_option(ptr: *mut c_void, name: &str, value: f64) -> Result<()> {
    let cname = CString::new(name).unwrap();
    let status = unsafe { Highs_setDoubleOptionValue(ptr, cname.as_ptr(), value) };
    check_status(status, name)
}

/// Convenience wrapper: solve an LP held in `model`, erroring on any status
/// other than optimal.
pub fn solve_lp(model: &mut ModelHandle, time_limit: f64) -> Result<LpSolution> {
    model.solve_lp(time_limit)
}

pub fn solve_mip(
    model: &mut ModelHandle,
    options: MipOptions,
    warm_start: Option<&[f64]>,
) -> Result<MipSolution> {
    model.solve_mip(options, warm_start)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable_lp_has_unit_dual() {
        let mut m = ModelHandle::new();
        let x = m.add_var(Var::continuous(0.0, f64::INFINITY, 1.0));
        m.add_row(Row::new(vec![(x, 1.0)], RowSense::Ge, 3.0));
        let sol = m.solve_lp(10.0).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal[0] - 3.0).abs() < 1e-9);
        assert!((sol.duals[0] - 1.0).abs() < 1e-9);
        assert!((sol.objective - 3.0).abs() < 1e-9);
        assert!((m.dual_objective(&sol) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn le_row_has_nonpositive_dual() {
        // min -x s.t. x <= 2
        let mut m = ModelHandle::new();
        let x = m.add_var(Var::continuous(0.0, f64::INFINITY, -1.0));
        m.add_row(Row::new(vec![(x, 1.0)], RowSense::Le, 2.0));
        let sol = m.solve_lp(10.0).unwrap();
        assert!((sol.duals[0] + 1.0).abs() < 1e-9);
        assert!((m.dual_objective(&sol) + 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_lp_is_reported() {
        let mut m = ModelHandle::new();
        let x = m.add_var(Var::continuous(f64::NEG_INFINITY, f64::INFINITY, 0.0));
        m.add_row(Row::new(vec![(x, 1.0)], RowSense::Ge, 3.0));
        m.add_row(Row::new(vec![(x, 1.0)], RowSense::Le, 2.0));
        let sol = m.solve_lp(10.0).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn binary_rounds_up() {
        let mut m = ModelHandle::new();
        let x = m.add_var(Var::binary(1.0));
        m.add_row(Row::new(vec![(x, 1.0)], RowSense::Ge, 0.3));
        let sol = m.solve_mip(MipOptions::default(), None).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.primal.unwrap()[0] - 1.0).abs() < 1e-9);
        // LP relaxation of the same handle afterwards
        let lp = m.solve_lp(10.0).unwrap();
        assert!((lp.primal[0] - 0.3).abs() < 1e-9);
    }

    #[test]
    fn knapsack_matches_enumeration() {
        // max 6a + 5b + 4c s.t. 5a + 4b + 3c <= 8  (as min of the negation)
        let values = [6.0, 5.0, 4.0];
        let weights = [5.0, 4.0, 3.0];
        let mut m = ModelHandle::new();
        let cols: Vec<usize> = values.iter().map(|v| m.add_var(Var::binary(-v))).collect();
        m.add_row(Row::new(
            cols.iter().zip(&weights).map(|(&j, &w)| (j, w)).collect(),
            RowSense::Le,
            8.0,
        ));
        let sol = m.solve_mip(MipOptions::default(), None).unwrap();

        let mut best = 0.0f64;
        for mask in 0..8u32 {
            let (mut v, mut w) = (0.0, 0.0);
            for i in 0..3 {
                if mask & (1 << i) != 0 {
                    v += values[i];
                    w += weights[i];
                }
            }
            if w <= 8.0 {
                best = best.max(v);
            }
        }
        assert!((sol.objective + best).abs() < 1e-9);
    }

    #[test]
    fn warm_start_at_optimum_bounds_trace() {
        let mut m = ModelHandle::new();
        let a = m.add_var(Var::binary(-3.0));
        let b = m.add_var(Var::binary(-2.0));
        m.add_row(Row::new(vec![(a, 1.0), (b, 1.0)], RowSense::Le, 1.0));
        let warm = [1.0, 0.0];
        let sol = m.solve_mip(MipOptions::default(), Some(&warm)).unwrap();
        assert!((sol.objective + 3.0).abs() < 1e-9);
        for p in &sol.trace {
            assert!(p.objective <= -3.0 + 1e-9);
        }
        assert!(sol.bound <= sol.objective + 1e-9);
    }

    #[test]
    fn adding_rows_only_tightens() {
        let mut m = ModelHandle::new();
        let x = m.add_var(Var::continuous(0.0, 10.0, 1.0));
        let y = m.add_var(Var::continuous(0.0, 10.0, 2.0));
        m.add_row(Row::new(vec![(x, 1.0), (y, 1.0)], RowSense::Ge, 2.0));
        let first = m.solve_lp(10.0).unwrap().objective;
        m.add_row(Row::new(vec![(x, 1.0)], RowSense::Le, 1.0));
        let second = m.solve_lp(10.0).unwrap();
        assert!(second.objective >= first - 1e-9);
        assert!((second.objective - 3.0).abs() < 1e-9);
        // a column appended after a solve enters existing rows
        let z = m.add_column(Var::continuous(0.0, 10.0, 0.5), &[(0, 1.0)]);
        let third = m.solve_lp(10.0).unwrap();
        assert!((third.primal[z] - 2.0).abs() < 1e-9);
        assert!((third.objective - 1.0).abs() < 1e-9);
        assert!((m.dual_objective(&third) - third.objective).abs() < 1e-9);
    }

    #[test]
    fn rhs_change_is_pushed_to_backend() {
        let mut m = ModelHandle::new();
        let x = m.add_var(Var::continuous(0.0, f64::INFINITY, 1.0));
        let r = m.add_row(Row::new(vec![(x, 1.0)], RowSense::Ge, 3.0));
        m.solve_lp(10.0).unwrap();
        m.set_rhs(r, 5.0);
        let sol = m.solve_lp(10.0).unwrap();
        assert!((sol.objective - 5.0).abs() < 1e-9);
    }
}
