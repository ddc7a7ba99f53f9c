use serde::{Deserialize, Serialize};

use crate::model::{Schedule, SecondStageSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Bb,
    Bd,
    Crg,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Bb, Algorithm::Bd, Algorithm::Crg];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Bb => "bb",
            Algorithm::Bd => "bd",
            Algorithm::Crg => "crg",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bb" => Ok(Algorithm::Bb),
            "bd" => Ok(Algorithm::Bd),
            "crg" => Ok(Algorithm::Crg),
            other => Err(format!("unknown algorithm `{other}` (expected bb, bd or crg)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// Gap closed to the requested tolerance.
    Converged,
    TimeLimit,
    /// No further progress possible; the gap may exceed the tolerance.
    Stalled,
    /// Stopped without a feasible schedule.
    NoIncumbent,
}

/// Seconds spent in master/extensive solves (outer), pricing and scenario
/// subproblems (inner), and overall wall clock (total).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub outer: f64,
    pub inner: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UcSolution {
    pub algorithm: Algorithm,
    pub status: RunStatus,
    pub objective: f64,
    pub lower_bound: f64,
    pub schedules: Vec<Schedule>,
    pub second_stage: Vec<SecondStageSolution>,
    pub timings: Timings,
    pub iterations: usize,
    /// Column pool size per generator (empty for algorithms without a pool).
    #[serde(default)]
    pub column_counts: Vec<usize>,
}

impl UcSolution {
    pub fn gap(&self) -> f64 {
        crate::trace::optimality_gap(self.objective, self.lower_bound)
    }
}
