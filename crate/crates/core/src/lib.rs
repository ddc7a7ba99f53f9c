//! Two-stage stochastic unit commitment with multi-mode (combined-cycle)
//! generators. [`harness::run_algorithm`] dispatches to the solvers.

pub mod benders;
pub mod crg;
pub mod dw;
pub mod error;
pub mod extensive;
pub mod formulation;
pub mod harness;
pub mod io;
pub mod model;
pub mod parallel;
pub mod pricing;
pub mod solution;
pub mod solver;
pub mod trace;

pub use error::{Error, Result};
pub use model::{Generator, Instance, Mode, Scenario, Schedule, SecondStageSolution};
pub use parallel::Executor;
pub use solution::{Algorithm, RunStatus, Timings, UcSolution};
pub use trace::{optimality_gap, SolveTrace};
