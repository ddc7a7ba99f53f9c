//! Instance files, synthetic instances and run output.
//!
//! Instances are JSON documents (see `docs/instance-schema.md`). Traces are
//! CSV with the columns `wall_time_s,event,best_ub,best_lb,gap`; reports are
//! JSON.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CostBreakpoint, Generator, InitialState, Instance, Mode, Scenario};
use crate::solution::{Algorithm, RunStatus, UcSolution};
use crate::trace::{optimality_gap, SolveTrace};

pub const FORMAT_VERSION: u32 = 1;

/// A value given once for every period, or per period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerPeriod {
    Constant(f64),
    Series(Vec<f64>),
}

impl PerPeriod {
    fn expand(&self, horizon: usize, field: &str) -> Result<Vec<f64>> {
        match self {
            PerPeriod::Constant(v) => Ok(vec![*v; horizon]),
            PerPeriod::Series(v) if v.len() == horizon => Ok(v.clone()),
            PerPeriod::Series(v) => Err(Error::InvalidInstance(format!(
                "{field}: {} values for horizon {horizon}",
                v.len()
            ))),
        }
    }

    fn compact(values: &[f64]) -> Self {
        match values.first() {
            Some(&first) if values.iter().all(|&v| v == first) => PerPeriod::Constant(first),
            _ => PerPeriod::Series(values.to_vec()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub format_version: u32,
    pub horizon: usize,
    #[serde(default = "one")]
    pub period_hours: f64,
    pub penalty: PerPeriod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reserve_requirement: Option<PerPeriod>,
    pub generators: Vec<GeneratorFile>,
    pub scenarios: Vec<ScenarioFile>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorFile {
    #[serde(default)]
    pub name: String,
    pub modes: Vec<ModeFile>,
    pub initial_state: InitialStateFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeFile {
    pub min_power: f64,
    pub max_power: f64,
    pub min_up: usize,
    pub min_down: usize,
    pub ramp_up: f64,
    pub ramp_down: f64,
    pub ramp_startup: f64,
    pub ramp_shutdown: f64,
    /// `[power, marginal_cost]` pairs.
    pub cost_breakpoints: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supporting_mode: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateFile {
    #[serde(default)]
    pub mode: Option<usize>,
    pub periods: usize,
    #[serde(default)]
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub demand: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::InvalidInstance(format!(
                "format_version: unsupported version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        let horizon = self.horizon;
        let penalty = self.penalty.expand(horizon, "penalty")?;
        let reserve_requirement = match &self.reserve_requirement {
            Some(r) => r.expand(horizon, "reserve_requirement")?,
            None => vec![0.0; horizon],
        };
        let given = self.scenarios.iter().filter(|s| s.probability.is_some()).count();
        if given != 0 && given != self.scenarios.len() {
            return Err(Error::InvalidInstance(
                "scenarios: give a probability for every scenario or for none".into(),
            ));
        }
        let uniform = 1.0 / self.scenarios.len().max(1) as f64;
        let scenarios = self
            .scenarios
            .into_iter()
            .map(|s| Scenario {
                probability: s.probability.unwrap_or(uniform),
                demand: s.demand,
            })
            .collect();
        let generators = self
            .generators
            .into_iter()
            .enumerate()
            .map(|(g, gen)| Generator {
                name: if gen.name.is_empty() {
                    format!("g{g}")
                } else {
                    gen.name
                },
                modes: gen
                    .modes
                    .into_iter()
                    .map(|m| Mode {
                        min_power: m.min_power,
                        max_power: m.max_power,
                        min_up: m.min_up,
                        min_down: m.min_down,
                        ramp_up: m.ramp_up,
                        ramp_down: m.ramp_down,
                        ramp_startup: m.ramp_startup,
                        ramp_shutdown: m.ramp_shutdown,
                        cost_breakpoints: m
                            .cost_breakpoints
                            .iter()
                            .map(|&[power, marginal_cost]| CostBreakpoint {
                                power,
                                marginal_cost,
                            })
                            .collect(),
                        supporting_mode: m.supporting_mode,
                    })
                    .collect(),
                initial_state: InitialState {
                    mode: gen.initial_state.mode,
                    periods: gen.initial_state.periods,
                    power: gen.initial_state.power,
                },
            })
            .collect();
        let instance = Instance {
            horizon,
            period_hours: self.period_hours,
            generators,
            scenarios,
            penalty,
            reserve_requirement,
        };
        instance.validate()?;
        Ok(instance)
    }

    pub fn from_instance(instance: &Instance) -> Self {
        let reserve = (instance.reserve_requirement.iter().any(|&r| r != 0.0))
            .then(|| PerPeriod::compact(&instance.reserve_requirement));
        InstanceFile {
            format_version: FORMAT_VERSION,
            horizon: instance.horizon,
            period_hours: instance.period_hours,
            penalty: PerPeriod::compact(&instance.penalty),
            reserve_requirement: reserve,
            generators: instance
                .generators
                .iter()
                .map(|g| GeneratorFile {
                    name: g.name.clone(),
                    modes: g
                        .modes
                        .iter()
                        .map(|m| ModeFile {
                            min_power: m.min_power,
                            max_power: m.max_power,
                            min_up: m.min_up,
                            min_down: m.min_down,
                            ramp_up: m.ramp_up,
                            ramp_down: m.ramp_down,
                            ramp_startup: m.ramp_startup,
                            ramp_shutdown: m.ramp_shutdown,
                            cost_breakpoints: m
                                .cost_breakpoints
                                .iter()
                                .map(|b| [b.power, b.marginal_cost])
                                .collect(),
                            supporting_mode: m.supporting_mode,
                        })
                        .collect(),
                    initial_state: InitialStateFile {
                        mode: g.initial_state.mode,
                        periods: g.initial_state.periods,
                        power: g.initial_state.power,
                    },
                })
                .collect(),
            scenarios: instance
                .scenarios
                .iter()
                .map(|s| ScenarioFile {
                    demand: s.demand.clone(),
                    probability: Some(s.probability),
                })
                .collect(),
        }
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Parses instance JSON text. Syntax and schema errors carry line and
/// column; semantic errors name the offending field.
pub fn parse_instance_str(text: &str, origin: &str) -> Result<Instance> {
    let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    file.into_instance().map_err(|e| match e {
        Error::InvalidInstance(msg) => Error::Parse {
            path: origin.to_string(),
            message: msg,
        },
        other => other,
    })
}

pub fn parse_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_instance_str(&text, &path.display().to_string())
}

pub fn instance_to_string(instance: &Instance) -> String {
    let mut s = serde_json::to_string_pretty(&InstanceFile::from_instance(instance))
        .expect("instance serialization cannot fail");
    s.push('\n');
    s
}

pub fn write_instance(instance: &Instance, path: &Path) -> Result<()> {
    fs::write(path, instance_to_string(instance)).map_err(|e| io_error(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub generators: usize,
    pub combined_cycle: usize,
    pub horizon: usize,
    pub scenarios: usize,
}

fn breakpoints(rng: &mut ChaCha8Rng, min: f64, max: f64, base_cost: f64) -> Vec<CostBreakpoint> {
    let segments = rng.gen_range(1..=3usize);
    let mut out = vec![CostBreakpoint {
        power: min,
        marginal_cost: base_cost,
    }];
    let mut cost = base_cost;
    for k in 1..=segments {
        cost += rng.gen_range(1.0..8.0);
        out.push(CostBreakpoint {
            power: if k == segments { max } else { round2(min + (max - min) * k as f64 / segments as f64) },
            marginal_cost: round2(cost),
        });
    }
    out
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

fn random_mode(rng: &mut ChaCha8Rng, min: f64, max: f64, base_cost: f64, horizon: usize) -> Mode {
    let max_window = (horizon / 2).clamp(1, 4);
    let headroom = max - min;
    Mode {
        min_power: min,
        max_power: max,
        min_up: rng.gen_range(1..=max_window),
        min_down: rng.gen_range(1..=max_window),
        ramp_up: round2(headroom * rng.gen_range(0.4..1.0)),
        ramp_down: round2(headroom * rng.gen_range(0.4..1.0)),
        ramp_startup: round2(min + headroom * rng.gen_range(0.2..0.8)),
        ramp_shutdown: round2(min + headroom * rng.gen_range(0.2..0.8)),
        cost_breakpoints: breakpoints(rng, min, max, base_cost),
        supporting_mode: None,
    }
}

/// Reproducible desk-scale instance. Combined-cycle units get two modes,
/// the second depending on the first. Demand follows a smooth daily shape
/// whose peak sits 10-40% below total capacity; scenarios perturb it by a
/// few percent.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<Instance> {
    let SyntheticConfig {
        seed,
        generators: n,
        combined_cycle: n_cc,
        horizon,
        scenarios,
    } = *config;
    if n == 0 || n_cc > n || horizon < 2 || scenarios == 0 {
        return Err(Error::InvalidInstance(format!(
            "synthetic config needs generators >= 1, combined_cycle <= generators, horizon >= 2, scenarios >= 1 (got {config:?})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gens = Vec::with_capacity(n);
    let mut capacity = 0.0;
    for g in 0..n {
        let is_cc = g < n_cc;
        let gen = if is_cc {
            let min0 = round2(rng.gen_range(60.0..120.0));
            let max0 = round2(min0 + rng.gen_range(60.0..150.0));
            let cost0 = round2(rng.gen_range(18.0..35.0));
            let base = random_mode(&mut rng, min0, max0, cost0, horizon);
            let min1 = round2(rng.gen_range(40.0..100.0));
            let max1 = round2(min1 + rng.gen_range(40.0..120.0));
            let cost1 = round2(rng.gen_range(15.0..30.0));
            let mut dep = random_mode(&mut rng, min1, max1, cost1, horizon);
            dep.supporting_mode = Some(0);
            capacity += max0 + max1;
            Generator {
                name: format!("cc{g}"),
                modes: vec![base, dep],
                initial_state: InitialState::offline(0),
            }
        } else {
            let max = round2(rng.gen_range(50.0..400.0));
            let min = round2(max * rng.gen_range(0.25..0.5));
            let cost = round2(rng.gen_range(15.0..60.0));
            capacity += max;
            Generator {
                name: format!("g{g}"),
                modes: vec![random_mode(&mut rng, min, max, cost, horizon)],
                initial_state: InitialState::offline(0),
            }
        };
        gens.push(gen);
    }
    for gen in &mut gens {
        let on = rng.gen_bool(0.5);
        let base = &gen.modes[0];
        gen.initial_state = if on {
            InitialState {
                mode: Some(0),
                periods: rng.gen_range(1..=4),
                power: base.min_power,
            }
        } else {
            InitialState::offline(rng.gen_range(1..=4))
        };
    }

    let peak = capacity / rng.gen_range(1.1..1.4);
    let shape: Vec<f64> = (0..horizon)
        .map(|t| {
            let phase = t as f64 / (horizon - 1) as f64;
            0.65 + 0.35 * (std::f64::consts::PI * phase).sin().powi(2)
        })
        .collect();
    let top = shape.iter().cloned().fold(f64::MIN, f64::max);
    let mut scen = Vec::with_capacity(scenarios);
    for _ in 0..scenarios {
        let level = rng.gen_range(-0.04..0.04);
        let mut drift = 0.0;
        let demand = shape
            .iter()
            .map(|s| {
                drift = 0.6 * drift + rng.gen_range(-0.02..0.02);
                let f: f64 = (1.0f64 + level + drift).clamp(0.92, 1.08);
                round2(peak * s / top * f)
            })
            .collect();
        scen.push(Scenario {
            demand,
            probability: 1.0 / scenarios as f64,
        });
    }
    let instance = Instance {
        horizon,
        period_hours: 1.0,
        generators: gens,
        scenarios: scen,
        penalty: vec![5000.0; horizon],
        reserve_requirement: vec![0.0; horizon],
    };
    instance.validate()?;
    Ok(instance)
}

#[derive(Debug, Serialize)]
struct TraceRow<'a> {
    wall_time_s: f64,
    event: &'a str,
    best_ub: f64,
    best_lb: f64,
    gap: f64,
}

pub fn trace_to_csv(trace: &SolveTrace) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &trace.records {
        w.serialize(TraceRow {
            wall_time_s: r.wall_time_s,
            event: r.event.as_str(),
            best_ub: r.best_ub,
            best_lb: r.best_lb,
            gap: r.gap,
        })
        .map_err(|e| Error::Parse {
            path: "trace".into(),
            message: e.to_string(),
        })?;
    }
    if trace.records.is_empty() {
        w.write_record(["wall_time_s", "event", "best_ub", "best_lb", "gap"])
            .map_err(|e| Error::Parse {
                path: "trace".into(),
                message: e.to_string(),
            })?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse {
        path: "trace".into(),
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_trace(trace: &SolveTrace, path: &Path) -> Result<()> {
    fs::write(path, trace_to_csv(trace)?).map_err(|e| io_error(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSummary {
    pub generator: String,
    /// One string per mode, `1` for committed periods.
    pub commitment: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario: usize,
    pub probability: f64,
    pub cost: f64,
    pub shortage_mwh: f64,
    pub surplus_mwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTimes {
    pub outer_s: f64,
    pub inner_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub algorithm: Algorithm,
    pub status: RunStatus,
    pub objective: f64,
    pub lower_bound: f64,
    pub gap: f64,
    pub iterations: usize,
    pub times: ReportTimes,
    pub schedules: Vec<ScheduleSummary>,
    pub scenarios: Vec<ScenarioSummary>,
}

impl SolveReport {
    pub fn new(solution: &UcSolution, instance: &Instance) -> Self {
        let schedules = solution
            .schedules
            .iter()
            .zip(&instance.generators)
            .map(|(s, g)| ScheduleSummary {
                generator: g.name.clone(),
                commitment: (0..s.modes)
                    .map(|m| {
                        (0..s.horizon)
                            .map(|t| if s.u(m, t) { '1' } else { '0' })
                            .collect()
                    })
                    .collect(),
            })
            .collect();
        let scenarios = solution
            .second_stage
            .iter()
            .map(|y| ScenarioSummary {
                scenario: y.scenario,
                probability: instance.scenarios[y.scenario].probability,
                cost: crate::model::second_stage_cost(y, instance),
                shortage_mwh: y.total_shortage() * instance.period_hours,
                surplus_mwh: y.total_surplus() * instance.period_hours,
            })
            .collect();
        SolveReport {
            algorithm: solution.algorithm,
            status: solution.status,
            objective: solution.objective,
            lower_bound: solution.lower_bound,
            gap: optimality_gap(solution.objective, solution.lower_bound),
            iterations: solution.iterations,
            times: ReportTimes {
                outer_s: solution.timings.outer,
                inner_s: solution.timings.inner,
                total_s: solution.timings.total,
            },
            schedules,
            scenarios,
        }
    }

    /// Copy with wall-clock fields zeroed, for reproducibility comparisons.
    pub fn without_times(&self) -> Self {
        SolveReport {
            times: ReportTimes {
                outer_s: 0.0,
                inner_s: 0.0,
                total_s: 0.0,
            },
            ..self.clone()
        }
    }
}

pub fn report_to_string(report: &SolveReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serialization cannot fail");
    s.push('\n');
    s
}

pub fn write_report(report: &SolveReport, path: &Path) -> Result<()> {
    fs::write(path, report_to_string(report)).map_err(|e| io_error(path, e))
}

/// Writes any serializable rows as CSV with a header.
pub fn write_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::TraceEvent;

    const MINIMAL: &str = r#"{
        "format_version": 1,
        "horizon": 2,
        "penalty": 5000,
        "generators": [{
            "modes": [{
                "min_power": 10, "max_power": 50, "min_up": 1, "min_down": 1,
                "ramp_up": 40, "ramp_down": 40, "ramp_startup": 50, "ramp_shutdown": 50,
                "cost_breakpoints": [[10, 20], [50, 25]]
            }],
            "initial_state": {"periods": 3}
        }],
        "scenarios": [{"demand": [20, 30]}]
    }"#;

    #[test]
    fn minimal_file() {
        let inst = parse_instance_str(MINIMAL, "minimal.json").unwrap();
        assert_eq!(inst.generators.len(), 1);
        assert_eq!(inst.generators[0].modes.len(), 1);
        assert_eq!(inst.scenarios[0].probability, 1.0);
        assert_eq!(inst.penalty, vec![5000.0, 5000.0]);
    }

    #[test]
    fn dangling_support_names_the_mode() {
        let text = MINIMAL.replace(
            r#""cost_breakpoints": [[10, 20], [50, 25]]"#,
            r#""cost_breakpoints": [[10, 20], [50, 25]], "supporting_mode": 4"#,
        );
        let err = parse_instance_str(&text, "bad.json").unwrap_err().to_string();
        assert!(err.contains("supporting_mode"), "{err}");
        assert!(err.contains("mode 4"), "{err}");
    }

    #[test]
    fn unknown_field_reports_line() {
        let text = MINIMAL.replace(r#""horizon": 2,"#, "\"horizon\": 2,\n        \"horizn\": 3,");
        let err = parse_instance_str(&text, "typo.json").unwrap_err().to_string();
        assert!(err.contains("horizn") && err.contains("line 4"), "{err}");
    }

    #[test]
    fn synthetic_is_reproducible_and_round_trips() {
        let cfg = SyntheticConfig {
            seed: 11,
            generators: 5,
            combined_cycle: 1,
            horizon: 6,
            scenarios: 3,
        };
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        assert_eq!(instance_to_string(&a), instance_to_string(&b));
        let back = parse_instance_str(&instance_to_string(&a), "rt").unwrap();
        assert_eq!(back, a);
        assert_eq!(a.generators[0].modes.len(), 2);
        assert_eq!(a.generators[0].modes[1].supporting_mode, Some(0));
    }

    #[test]
    fn trace_csv_shape() {
        let mut t = SolveTrace::new();
        t.offer_ub(4.62);
        t.record(TraceEvent::WarmStart, 0);
        t.offer_lb(4.48);
        t.record(TraceEvent::Pricing, 1);
        t.record(TraceEvent::Finish, 1);
        let csv = trace_to_csv(&t).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "wall_time_s,event,best_ub,best_lb,gap");
        let gap: f64 = lines[3].split(',').nth(4).unwrap().parse().unwrap();
        assert!((gap - 0.0303).abs() < 1e-4);
    }
}
