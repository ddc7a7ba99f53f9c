use std::time::Instant;

use serde::{Deserialize, Serialize};

/// `(UB - LB) / UB`. Negative values (bounds crossing by round-off) are
/// clamped to zero with a warning. Equal bounds give zero even at `UB = 0`.
pub fn optimality_gap(ub: f64, lb: f64) -> f64 {
    if ub == lb {
        return 0.0;
    }
    if !ub.is_finite() || !lb.is_finite() || ub == 0.0 {
        return f64::INFINITY;
    }
    let gap = (ub - lb) / ub;
    if gap < 0.0 {
        log::warn!("lower bound {lb} exceeds upper bound {ub}; gap clamped to 0");
        0.0
    } else {
        gap
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceEvent {
    Start,
    WarmStart,
    Incumbent,
    MasterSolve,
    Pricing,
    Columns,
    CutRound,
    IntegerStep,
    Stall,
    TimeLimit,
    Finish,
}

impl TraceEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceEvent::Start => "start",
            TraceEvent::WarmStart => "warm_start",
            TraceEvent::Incumbent => "incumbent",
            TraceEvent::MasterSolve => "master_solve",
            TraceEvent::Pricing => "pricing",
            TraceEvent::Columns => "columns",
            TraceEvent::CutRound => "cut_round",
            TraceEvent::IntegerStep => "integer_step",
            TraceEvent::Stall => "stall",
            TraceEvent::TimeLimit => "time_limit",
            TraceEvent::Finish => "finish",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub wall_time_s: f64,
    pub iteration: usize,
    pub event: TraceEvent,
    pub best_ub: f64,
    pub best_lb: f64,
    pub gap: f64,
}

/// Timestamped bound history. Bounds are tracked extrema, so `best_ub` never
/// increases and `best_lb` never decreases.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
    pub best_ub: f64,
    pub best_lb: f64,
    #[serde(skip, default = "Instant::now")]
    start: Instant,
}

impl Default for SolveTrace {
    fn default() -> Self {
        SolveTrace::new()
    }
}

impl SolveTrace {
    pub fn new() -> Self {
        SolveTrace::starting_at(Instant::now())
    }

    pub fn starting_at(start: Instant) -> Self {
        SolveTrace {
            records: Vec::new(),
            best_ub: f64::INFINITY,
            best_lb: f64::NEG_INFINITY,
            start,
        }
    }

    pub fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    /// Returns true when `ub` improves the incumbent value.
    pub fn offer_ub(&mut self, ub: f64) -> bool {
        if ub < self.best_ub {
            self.best_ub = ub;
            true
        } else {
            false
        }
    }

    pub fn offer_lb(&mut self, lb: f64) -> bool {
        if lb > self.best_lb {
            self.best_lb = lb;
            true
        } else {
            false
        }
    }

    pub fn gap(&self) -> f64 {
        optimality_gap(self.best_ub, self.best_lb)
    }

    pub fn record(&mut self, event: TraceEvent, iteration: usize) {
        let wall_time_s = self.elapsed();
        self.push(wall_time_s, event, iteration);
    }

    /// Appends a record with an explicit timestamp (used for solver-side
    /// incumbent callbacks).
    pub fn push(&mut self, wall_time_s: f64, event: TraceEvent, iteration: usize) {
        self.records.push(TraceRecord {
            wall_time_s,
            iteration,
            event,
            best_ub: self.best_ub,
            best_lb: self.best_lb,
            gap: self.gap(),
        });
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }
}
