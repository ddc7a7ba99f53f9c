//! Experiment runners shared by the command-line tool and tests.

use serde::{Deserialize, Serialize};

use crate::benders::{run_bd, BdParams};
use crate::crg::{run_crg, CrgParams};
use crate::error::Result;
use crate::extensive::{solve_bb, BbParams};
use crate::model::Instance;
use crate::parallel::Executor;
use crate::solution::{Algorithm, UcSolution};
use crate::trace::SolveTrace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub time_limit: f64,
    /// Target relative gap (also the branch-and-bound gap).
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            time_limit: 3600.0,
            epsilon: 1e-3,
            alpha: 0.4,
            beta: 0.5,
            seed: 0,
        }
    }
}

pub fn run_algorithm(
    instance: &Instance,
    algorithm: Algorithm,
    config: &RunConfig,
    exec: Executor,
) -> Result<(UcSolution, SolveTrace)> {
    match algorithm {
        Algorithm::Bb => solve_bb(
            instance,
            &BbParams {
                time_limit: config.time_limit,
                rel_gap: config.epsilon,
                warm_start: true,
            },
            exec,
        ),
        Algorithm::Bd => run_bd(
            instance,
            &BdParams {
                alpha: config.alpha,
                beta: config.beta,
                epsilon: config.epsilon,
                time_limit: config.time_limit,
            },
            exec,
        ),
        Algorithm::Crg => run_crg(
            instance,
            &CrgParams {
                epsilon: config.epsilon,
                alpha: config.alpha,
                beta: config.beta,
                time_limit: config.time_limit,
                seed: config.seed,
            },
            exec,
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub scenarios: usize,
    pub algorithm: Algorithm,
    pub status: String,
    pub outer_s: f64,
    pub inner_s: f64,
    pub total_s: f64,
    pub objective: f64,
    pub lower_bound: f64,
    pub gap: f64,
}

/// Runs every algorithm on the first `n` scenarios for each `n` in
/// `counts`. Failed cells are recorded with status `error: ...`.
pub fn benchmark<F>(
    instance: &Instance,
    counts: &[usize],
    algorithms: &[Algorithm],
    config: &RunConfig,
    exec: Executor,
    mut on_run: F,
) -> Vec<BenchmarkRow>
where
    F: FnMut(usize, Algorithm, &UcSolution, &SolveTrace),
{
    let mut rows = Vec::new();
    for &n in counts {
        let sub = instance.truncate_scenarios(n);
        for &alg in algorithms {
            let row = match run_algorithm(&sub, alg, config, exec.clone()) {
                Ok((sol, trace)) => {
                    on_run(n, alg, &sol, &trace);
                    BenchmarkRow {
                        scenarios: sub.num_scenarios(),
                        algorithm: alg,
                        status: format!("{:?}", sol.status).to_lowercase(),
                        outer_s: sol.timings.outer,
                        inner_s: sol.timings.inner,
                        total_s: sol.timings.total,
                        objective: sol.objective,
                        lower_bound: sol.lower_bound,
                        gap: sol.gap(),
                    }
                }
                Err(e) => {
                    log::error!("{alg} with {n} scenarios failed: {e}");
                    BenchmarkRow {
                        scenarios: sub.num_scenarios(),
                        algorithm: alg,
                        status: format!("error: {e}"),
                        outer_s: f64::NAN,
                        inner_s: f64::NAN,
                        total_s: f64::NAN,
                        objective: f64::NAN,
                        lower_bound: f64::NAN,
                        gap: f64::NAN,
                    }
                }
            };
            rows.push(row);
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub alpha: f64,
    pub beta: f64,
    pub status: String,
    pub objective: f64,
    pub lower_bound: f64,
    pub gap: f64,
    pub total_s: f64,
}

/// Column-row generation over an `(alpha, beta)` grid with a fixed budget.
pub fn sensitivity(
    instance: &Instance,
    alphas: &[f64],
    betas: &[f64],
    config: &RunConfig,
    exec: Executor,
) -> Vec<SensitivityRow> {
    let mut rows = Vec::new();
    for &alpha in alphas {
        for &beta in betas {
            let cfg = RunConfig {
                alpha,
                beta,
                ..*config
            };
            let row = match run_algorithm(instance, Algorithm::Crg, &cfg, exec.clone()) {
                Ok((sol, _)) => SensitivityRow {
                    alpha,
                    beta,
                    status: format!("{:?}", sol.status).to_lowercase(),
                    objective: sol.objective,
                    lower_bound: sol.lower_bound,
                    gap: sol.gap(),
                    total_s: sol.timings.total,
                },
                Err(e) => {
                    log::error!("alpha={alpha} beta={beta} failed: {e}");
                    SensitivityRow {
                        alpha,
                        beta,
                        status: format!("error: {e}"),
                        objective: f64::NAN,
                        lower_bound: f64::NAN,
                        gap: f64::NAN,
                        total_s: f64::NAN,
                    }
                }
            };
            rows.push(row);
        }
    }
    rows
}
