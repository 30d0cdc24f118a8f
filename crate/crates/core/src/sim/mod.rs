//! Fixed-step closed-loop simulation with safety and convergence monitors.

pub mod arm;
pub mod log;
pub mod multi;
pub mod sampling;

pub use arm::{run_arm, ArmRun, ArmScenario, Window, TRACKING_TOLERANCE};
pub use log::{LogRow, Summary, TrajectoryLog};
pub use multi::{
    multiagent_step, simulate_multi, AgentModel, MultiAgentLog, MultiAgentScenario, SecondOrderLaw,
};
pub use sampling::{
    ae_convergence_sample, estimate_occupancy, AeReport, InitialSet, OccupancyEstimate,
    OccupancyGrid, Region,
};

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{gradient_control, saturate};
use crate::density::{DensityField, FieldError};
use crate::ode::rk4_step;
use crate::robots::{ArmError, CspaceError, PlanError};
use log::Monitor;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("state became non-finite at step {step} (agent {agent})")]
    NonFinite { step: usize, agent: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Arm(#[from] ArmError),
    #[error(transparent)]
    Cspace(#[from] CspaceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Integration {
    pub dt: f64,
    pub horizon: f64,
    /// Keep every `log_every`-th step in the log.
    pub log_every: usize,
}

impl Default for Integration {
    fn default() -> Self {
        Self {
            dt: 0.01,
            horizon: 60.0,
            log_every: 10,
        }
    }
}

impl Integration {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0 && self.dt.is_finite() && self.horizon > 0.0 && self.horizon.is_finite())
        {
            return Err(SimError::Invalid(format!(
                "dt and horizon must be positive, got dt = {}, horizon = {}",
                self.dt, self.horizon
            )));
        }
        if self.log_every == 0 {
            return Err(SimError::Invalid("log_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Monitors {
    pub convergence_radius: f64,
    /// Time the state must stay inside the convergence ball.
    pub convergence_hold: f64,
    pub stop_on_convergence: bool,
}

impl Default for Monitors {
    fn default() -> Self {
        Self {
            convergence_radius: 0.1,
            convergence_hold: 1.0,
            stop_on_convergence: true,
        }
    }
}

/// Axis-aligned box in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Bounds {
    pub fn new(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        (0..2).all(|i| p[i] >= self.lo[i] && p[i] <= self.hi[i])
    }

    pub fn area(&self) -> f64 {
        (self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1])
    }

    pub fn translated(&self, d: &Vector2<f64>) -> Self {
        Self {
            lo: [self.lo[0] + d[0], self.lo[1] + d[1]],
            hi: [self.hi[0] + d[0], self.hi[1] + d[1]],
        }
    }
}

/// One single-integrator robot driven by the gradient law of `field`.
#[derive(Debug, Clone)]
pub struct SingleScenario {
    pub field: DensityField<2>,
    pub x0: Vector2<f64>,
    /// Saturate with `u_max`; the saturated control is held over each step.
    pub u_max: Option<f64>,
    pub integration: Integration,
    pub monitors: Monitors,
    pub bounds: Option<Bounds>,
}

impl SingleScenario {
    pub fn validate(&self) -> Result<(), SimError> {
        self.integration.validate()?;
        if let Some(u) = self.u_max {
            if !(u > 0.0) {
                return Err(SimError::Invalid(format!(
                    "u_max must be positive, got {u}"
                )));
            }
        }
        if let Some(c) = self
            .field
            .clearances(0.0, &self.x0)
            .iter()
            .copied()
            .find(|c| *c <= 0.0)
        {
            return Err(SimError::Invalid(format!(
                "initial state lies inside an unsafe set (clearance {c})"
            )));
        }
        Ok(())
    }
}

/// Run the scenario from its own initial state.
pub fn simulate(sc: &SingleScenario) -> Result<TrajectoryLog, SimError> {
    sc.validate()?;
    simulate_from(sc, sc.x0, |_, _| {})
}

/// Run from `x0`, calling `visit(t, x)` at every integration step.
pub fn simulate_from<F>(
    sc: &SingleScenario,
    x0: Vector2<f64>,
    mut visit: F,
) -> Result<TrajectoryLog, SimError>
where
    F: FnMut(f64, &Vector2<f64>),
{
    let field = &sc.field;
    let dt = sc.integration.dt;
    let steps = sc.integration.steps();
    let nobs = field.obstacles().len();
    let mut monitor = Monitor::new(
        sc.monitors.convergence_radius,
        sc.monitors.convergence_hold,
        true,
    );
    let mut rows = Vec::with_capacity(steps / sc.integration.log_every + 2);
    let control = |t: f64, x: &Vector2<f64>| {
        let cmd = gradient_control(field, t, x);
        match sc.u_max {
            Some(m) => saturate(cmd, m),
            None => cmd,
        }
    };
    let mut x = x0;
    let mut t = 0.0;
    for i in 0..=steps {
        t = i as f64 * dt;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(SimError::NonFinite { step: i, agent: 0 });
        }
        visit(t, &x);
        let cmd = control(t, &x);
        let e = field.eval(t, &x);
        let clear = field.clearances(t, &x);
        let inside = sc.bounds.is_none_or(|b| b.contains(&x));
        let dist = field.distance().offset(t, &x).norm();
        monitor.observe(
            t,
            dist,
            &clear,
            cmd.u.as_slice(),
            Some((cmd.u[1].atan2(cmd.u[0]), cmd.u.norm())),
            e.rho,
            e.psi,
            inside,
        );
        let stop = i == steps || (sc.monitors.stop_on_convergence && monitor.converged());
        if i % sc.integration.log_every == 0 || stop {
            rows.push(LogRow {
                t,
                state: vec![x[0], x[1]],
                control: vec![cmd.u[0], cmd.u[1]],
                rho: e.rho,
                psi: e.psi,
                clearances: clear,
                saturated: cmd.saturated,
                in_workspace: inside,
                extra: vec![],
            });
        }
        if stop {
            break;
        }
        x = if sc.u_max.is_some() {
            x + cmd.u * dt
        } else {
            rk4_step(&mut |s, y: &Vector2<f64>| control(s, y).u, t, &x, dt)
        };
    }
    Ok(TrajectoryLog {
        state_labels: vec!["x".into(), "y".into()],
        control_labels: vec!["ux".into(), "uy".into()],
        clearance_labels: (1..=nobs).map(|k| format!("d_{k}")).collect(),
        extra_labels: vec![],
        rows,
        summary: monitor.finish(t, vec![x[0], x[1]]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{DistanceFn, Mode};
    use crate::path::Path;
    use crate::smoothfn::{BumpShape, ObstacleSpec};

    fn free(beta: f64) -> SingleScenario {
        SingleScenario {
            field: DensityField::new(
                vec![],
                DistanceFn::quadratic(Vector2::new(10.0, 0.0)),
                0.2,
                beta,
                Mode::Static,
            )
            .unwrap(),
            x0: Vector2::zeros(),
            u_max: None,
            integration: Integration::default(),
            monitors: Monitors::default(),
            bounds: None,
        }
    }

    #[test]
    fn obstacle_free_run_converges_along_the_axis() {
        let log = simulate(&free(10.0)).unwrap();
        assert!(log.summary.converged);
        assert!(log.rows.iter().all(|r| r.state[1] == 0.0));
        assert!(log.summary.min_clearance.is_none());
    }

    #[test]
    fn zero_gain_keeps_the_state() {
        let mut sc = free(0.0);
        sc.x0 = Vector2::new(1.0, 2.0);
        sc.integration.horizon = 5.0;
        let log = simulate(&sc).unwrap();
        assert!(log.rows.iter().all(|r| r.state == vec![1.0, 2.0]));
        assert!(!log.summary.converged);
    }

    #[test]
    fn runs_are_bit_identical() {
        let a = simulate(&free(10.0)).unwrap();
        let b = simulate(&free(10.0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fourth_order_under_step_halving() {
        let end = |dt: f64| {
            let mut sc = free(10.0);
            sc.integration = Integration {
                dt,
                horizon: 2.0,
                log_every: 1,
            };
            sc.monitors.stop_on_convergence = false;
            let log = simulate(&sc).unwrap();
            log.summary.final_state[0]
        };
        let (a, b, c) = (end(0.2), end(0.1), end(0.05));
        let ratio = (a - b).abs() / (b - c).abs();
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn full_log_minimum_matches_summary() {
        let obs = ObstacleSpec::new(
            BumpShape::new(0.05, 1.0, 2.0).unwrap(),
            Path::fixed(Vector2::new(5.0, 0.3)),
        );
        let mut sc = free(10.0);
        sc.field = DensityField::new(
            vec![obs],
            DistanceFn::quadratic(Vector2::new(10.0, 0.0)),
            0.2,
            10.0,
            Mode::Static,
        )
        .unwrap();
        sc.integration.log_every = 1;
        let log = simulate(&sc).unwrap();
        assert_eq!(log.min_logged_clearance(), log.summary.min_clearance);
        assert!(log.summary.min_clearance.unwrap() > 0.0);
    }

    #[test]
    fn start_inside_obstacle_is_rejected() {
        let obs = ObstacleSpec::new(
            BumpShape::new(0.05, 1.0, 2.0).unwrap(),
            Path::fixed(Vector2::new(0.2, 0.0)),
        );
        let mut sc = free(10.0);
        sc.field = DensityField::new(
            vec![obs],
            DistanceFn::quadratic(Vector2::new(10.0, 0.0)),
            0.2,
            10.0,
            Mode::Static,
        )
        .unwrap();
        assert!(matches!(simulate(&sc), Err(SimError::Invalid(_))));
    }
}
