use std::fs;
use std::path::Path;
use std::process::Command;

use densnav::config::{bundled, ScenarioConfig};
use serde_json::Value;
use tempfile::TempDir;

fn densnav(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_densnav"))
        .args(args)
        .output()
        .expect("spawn densnav");
    (
        out.status.code().expect("exit code"),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write_config(dir: &Path, name: &str, cfg: &ScenarioConfig) -> String {
    let p = dir.join(name);
    fs::write(&p, cfg.to_toml().unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn out_of_range_theta_is_a_config_error_with_a_line() {
    let dir = TempDir::new().unwrap();
    let text = bundled("dynamic_obstacles")
        .unwrap()
        .replacen("theta = 0.05", "theta = 1.5", 1);
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, &text).unwrap();
    let line = text
        .lines()
        .position(|l| l.contains("theta = 1.5"))
        .unwrap()
        + 1;
    let (code, err) = densnav(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(&dir.path().join("o")),
    ]);
    assert_eq!(code, 1);
    assert!(err.contains(&format!("line {line}")), "{err}");
    assert!(err.contains("theta"), "{err}");
}

#[test]
fn missing_config_file_exits_one() {
    let dir = TempDir::new().unwrap();
    let (code, err) = densnav(&[
        "simulate",
        "--config",
        s(&dir.path().join("nope.toml")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("nope.toml"), "{err}");
}

#[test]
fn dynamic_obstacles_run_is_safe_and_converges() {
    let dir = TempDir::new().unwrap();
    let (code, err) = densnav(&[
        "simulate",
        "--config",
        "bundled:dynamic_obstacles",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(dir.path().join("log.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "t,x,y,ux,uy,rho,psi,d_1,d_2,d_3,d_4,saturated,in_workspace"
    );
    let summary = read_json(&dir.path().join("summary.json"));
    assert_eq!(summary["converged"], Value::Bool(true));
    assert!(summary["min_clearance"].as_f64().unwrap() > 0.0);
}

#[test]
fn intersection_runs_exit_zero() {
    for name in ["intersection6", "intersection6_large"] {
        let dir = TempDir::new().unwrap();
        let (code, err) = densnav(&[
            "simulate",
            "--config",
            &format!("bundled:{name}"),
            "--out",
            s(dir.path()),
        ]);
        assert_eq!(code, 0, "{name}: {err}");
        for k in 1..=6 {
            assert!(dir.path().join(format!("agent_{k}.csv")).exists());
        }
    }
}

#[test]
fn exit_codes_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let run = |sub: &str| {
        densnav(&[
            "simulate",
            "--config",
            "bundled:static_example",
            "--out",
            s(&dir.path().join(sub)),
        ])
        .0
    };
    assert_eq!(run("a"), run("b"));
    let a = fs::read(dir.path().join("a/log.csv")).unwrap();
    let b = fs::read(dir.path().join("b/log.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn short_horizon_is_reported_as_not_converged() {
    let dir = TempDir::new().unwrap();
    let mut cfg = ScenarioConfig::load("bundled:static_example").unwrap();
    cfg.integration.horizon = 2.0;
    let path = write_config(dir.path(), "short.toml", &cfg);
    let (code, _) = densnav(&["simulate", "--config", &path, "--out", s(dir.path())]);
    assert_eq!(code, 3);
}

#[test]
fn certify_below_sampled_beta_bound_exits_four_and_names_it() {
    let dir = TempDir::new().unwrap();
    let mut cfg = ScenarioConfig::load("bundled:dynamic_obstacles").unwrap();
    cfg.single.as_mut().unwrap().beta = 1.0;
    let c = cfg.certify.as_mut().unwrap();
    c.nx = 60;
    c.ny = 60;
    c.nt = 10;
    let path = write_config(dir.path(), "low_beta.toml", &cfg);
    let out = dir.path().join("report.json");
    let (code, err) = densnav(&["certify", "--config", &path, "--out", s(&out)]);
    assert_eq!(code, 4, "{err}");
    let report = read_json(&out);
    let violations = report["violations"].as_array().unwrap();
    assert!(
        violations
            .iter()
            .any(|v| v.as_str().unwrap().starts_with("beta_min")),
        "{violations:?}"
    );
}

#[test]
fn obstacle_free_certificate_has_zero_time_constant_and_beta_bound() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("nested/report.json");
    let (code, _) = densnav(&[
        "certify",
        "--config",
        "bundled:obstacle_free",
        "--out",
        s(&out),
    ]);
    // the sampled margin is negative next to the target, so the run exits 4
    assert_eq!(code, 4);
    let report = read_json(&out);
    assert_eq!(report["constants"]["c_psi_t"].as_f64(), Some(0.0));
    assert_eq!(report["beta_min"].as_f64(), Some(0.0));
    for key in ["p1", "p2", "p3", "L1", "alpha_min", "lemma1_margin"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn single_sample_obstacle_free_occupancy_is_a_corridor() {
    let dir = TempDir::new().unwrap();
    let (code, err) = densnav(&[
        "occupancy",
        "--config",
        "bundled:obstacle_free",
        "--samples",
        "1",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(dir.path().join("occupancy.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 120);
    let occupied: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.iter().any(|v| *v > 0.0))
        .map(|(i, _)| i)
        .collect();
    // y = 0 sits on the boundary between rows 59 and 60
    assert!(!occupied.is_empty() && occupied.iter().all(|i| (59..=60).contains(i)));
    // the straight run from x = 0 to x = 10 fills the cells in between
    let row = &rows[occupied[0]];
    let filled = row.iter().filter(|v| **v > 0.0).count();
    assert!((95..=101).contains(&filled), "{filled}");
    let summary = read_json(&dir.path().join("occupancy.json"));
    assert_eq!(summary["unsafe_steps"].as_u64(), Some(0));
}

#[test]
fn fig1_occupancy_never_enters_the_obstacle() {
    let dir = TempDir::new().unwrap();
    let (code, err) = densnav(&[
        "occupancy",
        "--config",
        "bundled:fig1_occupancy",
        "--samples",
        "20",
        "--seed",
        "3",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code, 0, "{err}");
    let summary = read_json(&dir.path().join("occupancy.json"));
    assert_eq!(summary["unsafe_occupancy"].as_f64(), Some(0.0));
}

#[test]
fn compare_sfm_reports_heading_variation_for_both_controllers() {
    let dir = TempDir::new().unwrap();
    let (code, err) = densnav(&[
        "compare-sfm",
        "--config",
        "bundled:sfm_swap",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code, 0, "{err}");
    let report = read_json(&dir.path().join("comparison.json"));
    for run in ["density", "sfm"] {
        let tv = report[run]["heading_total_variation"].as_array().unwrap();
        assert_eq!(tv.len(), 4);
        assert!(tv.iter().all(|v| v.as_f64().unwrap() >= 0.0));
        assert!(report[run]["mean_heading_total_variation"].is_number());
        for k in 1..=4 {
            assert!(dir.path().join(format!("{run}_agent_{k}.csv")).exists());
        }
    }
    assert_eq!(report["density_smoother"], Value::Bool(true));
}

#[test]
fn arm_pipeline_writes_logs_and_exits_zero() {
    let dir = TempDir::new().unwrap();
    let (code, err) = densnav(&[
        "arm",
        "--config",
        "bundled:arm_tracking",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code, 0, "{err}");
    let header = fs::read_to_string(dir.path().join("arm.csv"))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert!(header.starts_with("t,q1,q2,q1_dot,q2_dot,tau1,tau2,rho,psi,d_1"));
    let report = read_json(&dir.path().join("arm.json"));
    assert!(!report["joint_obstacles"].as_array().unwrap().is_empty());
}

#[test]
fn dt_override_is_validated() {
    let dir = TempDir::new().unwrap();
    let (code, _) = densnav(&[
        "simulate",
        "--config",
        "bundled:obstacle_free",
        "--dt=-1",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code, 1);
}
