use std::path::Path;
use std::process::{Command, Output};

fn suc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_suc")).args(args).output().unwrap()
}

fn generate(dir: &Path) -> String {
    let path = dir.join("inst.json");
    let p = path.to_str().unwrap().to_string();
    let o = suc(&["generate", &p, "--seed", "4", "--generators", "3", "--horizon", "4", "--scenarios", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    p
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn missing_instance_exits_with_2() {
    let o = suc(&["solve", "/definitely/not/here.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no such file"));
}

#[test]
fn out_of_range_alpha_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path());
    let out = dir.path().join("out");
    let o = suc(&["solve", &inst, "--alpha", "1.5", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn unknown_flag_and_algorithm_exit_with_2() {
    assert_eq!(suc(&["solve", "x.json", "--bogus"]).status.code(), Some(2));
    assert_eq!(suc(&["solve", "x.json", "-a", "simplex"]).status.code(), Some(2));
}

#[test]
fn malformed_instance_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"horizon\": 3").unwrap();
    let o = suc(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solve_writes_report_trace_and_pool() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path());
    let out = dir.path().join("out");
    let lp = dir.path().join("ef.lp");
    let o = suc(&[
        "solve",
        &inst,
        "-a",
        "crg",
        "-o",
        out.to_str().unwrap(),
        "--export-lp",
        lp.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["algorithm"], "crg");
    assert!(report["objective"].as_f64().unwrap() > 0.0);
    assert_eq!(report["schedules"].as_array().unwrap().len(), 3);
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("wall_time_s,event,best_ub,best_lb,gap"));
    assert!(trace.lines().last().unwrap().contains("finish"));
    assert_eq!(csv_rows(&out.join("columns.csv")).len(), 3);
    assert!(std::fs::metadata(&lp).unwrap().len() > 0);
}

#[test]
fn algorithms_agree_through_the_cli() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path());
    let objective = |alg: &str| -> f64 {
        let out = dir.path().join(alg);
        let o = suc(&["solve", &inst, "-a", alg, "--epsilon", "1e-6", "-o", out.to_str().unwrap()]);
        assert!(o.status.success());
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        report["objective"].as_f64().unwrap()
    };
    let bb = objective("bb");
    for alg in ["bd", "crg"] {
        let v = objective(alg);
        assert!((v - bb).abs() <= 1e-6 * bb.abs(), "{alg}: {v} vs {bb}");
    }
}

#[test]
fn benchmark_writes_one_row_per_count_and_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path());
    let out = dir.path().join("bench");
    let o = suc(&["benchmark", &inst, "--counts", "1,3", "--time-limit", "30", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("benchmark.csv"));
    assert_eq!(rows.len(), 6);
    for alg in ["bb", "bd", "crg"] {
        for n in [1, 3] {
            assert!(out.join(format!("trace_{alg}_{n}.csv")).exists());
        }
    }
}

#[test]
fn sensitivity_covers_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path());
    let out = dir.path().join("sens");
    let o = suc(&[
        "sensitivity",
        &inst,
        "--alphas",
        "0,0.5,1",
        "--betas",
        "0.3,0.5,1",
        "--time-limit",
        "30",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out.join("sensitivity.csv"));
    assert_eq!(rows.len(), 9);
    assert_eq!(rows[0][0], "0.0");
    assert_eq!(rows[8][1], "1.0");
}

#[test]
fn sensitivity_rejects_grid_values_outside_the_unit_interval() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path());
    let o = suc(&["sensitivity", &inst, "--alphas", "0,2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_summarizes_the_instance() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path());
    let o = suc(&["validate", &inst]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "ok: 3 generators, 4 periods, 3 scenarios");
}
