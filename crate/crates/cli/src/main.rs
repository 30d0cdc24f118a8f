use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use densnav::certify::{certify, LiouvilleSettings};
use densnav::config::{ConfigError, ScenarioConfig};
use densnav::sim::{
    estimate_occupancy, run_arm, simulate, simulate_multi, InitialSet, MultiAgentLog,
    TrajectoryLog, TRACKING_TOLERANCE,
};
use serde_json::{json, Value};

const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 1;
const EXIT_UNSAFE: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;
const EXIT_CERTIFY_FAILED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "densnav",
    version,
    about = "Density-function navigation: simulate, certify and sample scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario TOML file, or `bundled:<name>`.
    #[arg(long)]
    config: String,
    /// Output directory (a file path for `certify`).
    #[arg(long)]
    out: PathBuf,
    /// Override the integration step.
    #[arg(long)]
    dt: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed-loop simulation and write its logs.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Accepted for uniformity; simulations are deterministic.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check the convergence conditions on a sampled grid and write a JSON report.
    Certify {
        #[command(flatten)]
        common: Common,
        /// Monte-Carlo samples for the transport-identity residual.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Monte-Carlo occupancy over sampled initial conditions.
    Occupancy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the four-agent swap with the density and social-force controllers.
    CompareSfm {
        #[command(flatten)]
        common: Common,
    },
    /// Two-link arm: joint-space obstacles, motion plan and computed-torque tracking.
    Arm {
        #[command(flatten)]
        common: Common,
    },
}

/// Outcome of a command: an exit code or an error message for exit 1.
enum Failure {
    Config(String),
    Other(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn load(common: &Common) -> Result<ScenarioConfig, Failure> {
    let mut cfg = ScenarioConfig::load(&common.config)?;
    if let Some(dt) = common.dt {
        cfg.integration.dt = dt;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(f), value)?;
    Ok(())
}

fn write_log(path: &Path, log: &TrajectoryLog) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    log.write_csv(BufWriter::new(f))?;
    Ok(())
}

fn out_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))
}

fn exit_for(safe: bool, converged: bool) -> u8 {
    match (safe, converged) {
        (false, _) => EXIT_UNSAFE,
        (true, false) => EXIT_NOT_CONVERGED,
        (true, true) => EXIT_OK,
    }
}

fn write_agent_logs(dir: &Path, prefix: &str, log: &MultiAgentLog) -> Result<Vec<Value>> {
    log.agents
        .iter()
        .enumerate()
        .map(|(k, a)| {
            write_log(&dir.join(format!("{prefix}agent_{}.csv", k + 1)), a)?;
            Ok(serde_json::to_value(&a.summary)?)
        })
        .collect()
}

fn multi_json(log: &MultiAgentLog, agents: Vec<Value>) -> Value {
    json!({
        "min_pairwise_clearance": log.min_pairwise_clearance,
        "safety_violation": log.safety_violation(),
        "all_converged": log.all_converged,
        "time_all_converged": log.time_all_converged,
        "agents": agents,
    })
}

fn cmd_simulate(common: &Common) -> Result<u8, Failure> {
    let cfg = load(common)?;
    out_dir(&common.out)?;
    if cfg.arm.is_some() {
        return cmd_arm(common);
    }
    if cfg.multi.is_some() {
        let sc = cfg.multi_scenario()?;
        let log = simulate_multi(&sc).context("multi-agent simulation failed")?;
        let agents = write_agent_logs(&common.out, "", &log)?;
        write_json(&common.out.join("summary.json"), &multi_json(&log, agents))?;
        return Ok(exit_for(!log.safety_violation(), log.all_converged));
    }
    let sc = cfg.single_scenario()?;
    let log = simulate(&sc).context("simulation failed")?;
    write_log(&common.out.join("log.csv"), &log)?;
    write_json(
        &common.out.join("summary.json"),
        &serde_json::to_value(&log.summary).map_err(anyhow::Error::from)?,
    )?;
    Ok(exit_for(
        !log.summary.safety_violation,
        log.summary.converged,
    ))
}

fn cmd_certify(common: &Common, samples: Option<usize>, seed: Option<u64>) -> Result<u8, Failure> {
    let cfg = load(common)?;
    let sc = cfg.single_scenario()?;
    let grid = cfg.certify_grid()?;
    let liouville = cfg
        .certify
        .and_then(|c| c.liouville)
        .map(|l| LiouvilleSettings {
            samples: samples.unwrap_or(l.samples),
            seed: seed.unwrap_or(l.seed),
            ..l
        });
    let report = certify(&sc.field, &grid, liouville.as_ref()).context("certification failed")?;
    if let Some(dir) = common.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        out_dir(dir)?;
    }
    write_json(
        &common.out,
        &serde_json::to_value(&report).map_err(anyhow::Error::from)?,
    )?;
    for v in &report.violations {
        log::warn!("violated: {v}");
    }
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_CERTIFY_FAILED
    })
}

fn cmd_occupancy(
    common: &Common,
    samples: Option<usize>,
    seed: Option<u64>,
) -> Result<u8, Failure> {
    let cfg = load(common)?;
    let sc = cfg.single_scenario()?;
    let occ = cfg
        .occupancy
        .ok_or_else(|| Failure::Config("config has no [occupancy] section".into()))?;
    let n = samples.unwrap_or(occ.samples);
    if n == 0 {
        return Err(Failure::Config("--samples must be at least 1".into()));
    }
    let est = estimate_occupancy(
        &sc,
        &occ.initial,
        &occ.region,
        n,
        seed.unwrap_or(cfg.seed),
        cfg.occupancy_grid(),
    )
    .context("occupancy sampling failed")?;
    out_dir(&common.out)?;
    if let Some(g) = &est.grid {
        let f = File::create(common.out.join("occupancy.csv")).context("creating occupancy.csv")?;
        g.write_csv(BufWriter::new(f))
            .context("writing occupancy.csv")?;
    }
    let summary = json!({
        "samples": est.samples,
        "region": occ.region,
        "initial": occ.initial,
        "initial_volume": InitialSet::volume(&occ.initial),
        "total": est.total,
        "std_error": est.std_error,
        "unsafe_occupancy": est.unsafe_occupancy,
        "unsafe_steps": est.unsafe_steps,
        "grid": est.grid.as_ref().map(|g| json!({"bounds": g.bounds, "nx": g.nx, "ny": g.ny})),
    });
    write_json(&common.out.join("occupancy.json"), &summary)?;
    Ok(if est.unsafe_steps == 0 {
        EXIT_OK
    } else {
        EXIT_UNSAFE
    })
}

fn heading_variation(log: &MultiAgentLog) -> Vec<f64> {
    log.agents
        .iter()
        .map(|a| a.summary.heading_total_variation.unwrap_or(0.0))
        .collect()
}

fn cmd_compare_sfm(common: &Common) -> Result<u8, Failure> {
    let cfg = load(common)?;
    let (density, sfm) = cfg.comparison_scenarios()?;
    out_dir(&common.out)?;
    let mut runs = Vec::new();
    for (name, sc) in [("density", density), ("sfm", sfm)] {
        let log = simulate_multi(&sc).with_context(|| format!("{name} run failed"))?;
        let agents = write_agent_logs(&common.out, &format!("{name}_"), &log)?;
        runs.push((name, log, agents));
    }
    let tv: Vec<Vec<f64>> = runs.iter().map(|r| heading_variation(&r.1)).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let smoother = mean(&tv[0]) < mean(&tv[1]);
    if !smoother {
        log::warn!(
            "density heading variation {:.3} is not below the social-force value {:.3}",
            mean(&tv[0]),
            mean(&tv[1])
        );
    }
    let mut report = serde_json::Map::new();
    for ((name, log, agents), tv) in runs.iter().zip(&tv) {
        let mut v = multi_json(log, agents.clone());
        v["heading_total_variation"] = json!(tv);
        v["mean_heading_total_variation"] = json!(mean(tv));
        report.insert(name.to_string(), v);
    }
    report.insert("density_smoother".into(), json!(smoother));
    write_json(&common.out.join("comparison.json"), &Value::Object(report))?;
    let safe = runs.iter().all(|r| !r.1.safety_violation());
    let converged = runs.iter().all(|r| r.1.all_converged);
    Ok(exit_for(safe, converged))
}

fn cmd_arm(common: &Common) -> Result<u8, Failure> {
    let cfg = load(common)?;
    let sc = cfg.arm_scenario()?;
    let run = run_arm(&sc).context("arm pipeline failed")?;
    out_dir(&common.out)?;
    write_log(&common.out.join("arm.csv"), &run.log)?;
    let last = run.log.rows.last().expect("a run logs at least one row");
    let ee_error = {
        let target = sc.target.position(last.t);
        let n = run
            .log
            .extra_labels
            .iter()
            .position(|l| l == "ee_x")
            .expect("ee columns");
        ((last.extra[n] - target[0]).powi(2) + (last.extra[n + 1] - target[1]).powi(2)).sqrt()
    };
    let summary = json!({
        "joint_obstacles": run.joint_obstacles,
        "coverage": run.coverage,
        "avoidance_windows": run.avoidance_windows,
        "max_tracking_error": run.max_tracking_error,
        "max_tracking_error_outside_windows": run.max_tracking_error_outside_windows,
        "min_ee_clearance": run.min_ee_clearance,
        "min_link_clearance": run.min_link_clearance,
        "final_ee_error": ee_error,
        "summary": run.log.summary,
    });
    write_json(&common.out.join("arm.json"), &summary)?;
    let safe = run.min_ee_clearance.is_none_or(|c| c > 0.0)
        && run.min_link_clearance.is_none_or(|c| c > 0.0);
    // the plan, not the target, is what the controller must converge to
    Ok(exit_for(
        safe,
        run.max_tracking_error_outside_windows < TRACKING_TOLERANCE,
    ))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { common, seed: _ } => cmd_simulate(common),
        Command::Certify {
            common,
            samples,
            seed,
        } => cmd_certify(common, *samples, *seed),
        Command::Occupancy {
            common,
            samples,
            seed,
        } => cmd_occupancy(common, *samples, *seed),
        Command::CompareSfm { common } => cmd_compare_sfm(common),
        Command::Arm { common } => cmd_arm(common),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
