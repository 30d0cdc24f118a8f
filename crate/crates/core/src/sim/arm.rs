//! Two-link arm pipeline: task obstacles to joint space, density plan,
//! inverse-dynamics tracking.

use nalgebra::{Vector2, Vector4};
use serde::{Deserialize, Serialize};

use super::log::Monitor;
use super::{Integration, LogRow, SimError, TrajectoryLog};
use crate::control::arm_inverse_dynamics;
use crate::density::wrap_angle;
use crate::ode::rk4_step;
use crate::path::Path;
use crate::robots::{
    coverage, joint_motion_plan, link_clearance, task_target_path, workspace_to_joint_obstacles,
    JointCircle, JointDensitySpec, JointPlan, TaskCircle, TwoLinkArm,
};

/// Joint tracking error (rad) tolerated outside avoidance windows.
pub const TRACKING_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct ArmScenario {
    pub model: TwoLinkArm,
    pub task_obstacles: Vec<TaskCircle>,
    pub grid_resolution: usize,
    /// End-effector target in task space.
    pub target: Path<2>,
    pub theta: f64,
    pub sensing_margin: f64,
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub feedforward: bool,
    pub kp: Vector2<f64>,
    pub kv: Vector2<f64>,
    pub integration: Integration,
    /// Time after leaving a sensing band that still counts as avoidance.
    pub window_padding: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone)]
pub struct ArmRun {
    pub joint_obstacles: Vec<JointCircle>,
    /// Fraction of grid-colliding configurations inside the joint circles.
    pub coverage: f64,
    pub plan: JointPlan,
    pub log: TrajectoryLog,
    /// Intervals in which the plan is inside a joint-space sensing band.
    pub avoidance_windows: Vec<Window>,
    /// Largest `max_i |q_i - q_d,i|` over the run.
    pub max_tracking_error: f64,
    pub max_tracking_error_outside_windows: f64,
    pub min_ee_clearance: Option<f64>,
    pub min_link_clearance: Option<f64>,
}

impl ArmScenario {
    pub fn validate(&self) -> Result<(), SimError> {
        self.model.validate()?;
        self.integration.validate()?;
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(SimError::Invalid(format!(
                "theta must lie in (0, 1), got {}",
                self.theta
            )));
        }
        if !(self.sensing_margin > 0.0 && self.window_padding >= 0.0) {
            return Err(SimError::Invalid("sensing margin must be positive".into()));
        }
        if self.kp.iter().chain(self.kv.iter()).any(|g| !(*g > 0.0)) {
            return Err(SimError::Invalid("tracking gains must be positive".into()));
        }
        Ok(())
    }

    pub fn density_spec(&self, joint_obstacles: Vec<JointCircle>) -> JointDensitySpec {
        JointDensitySpec {
            obstacles: joint_obstacles,
            theta: self.theta,
            sensing_margin: self.sensing_margin,
            target: task_target_path(self.model, self.target.clone()),
            alpha: self.alpha,
            beta: self.beta,
            kappa: self.kappa,
            feedforward: self.feedforward,
        }
    }
}

fn windows(plan: &JointPlan, padding: f64) -> Vec<Window> {
    let mut out: Vec<Window> = Vec::new();
    let mut open: Option<f64> = None;
    for (i, &p) in plan.psi.iter().enumerate() {
        let t = i as f64 * plan.dt;
        match (p < 1.0, open) {
            (true, None) => open = Some(t),
            (false, Some(s)) => {
                out.push(Window {
                    start: s,
                    end: t + padding,
                });
                open = None;
            }
            _ => {}
        }
    }
    if let Some(s) = open {
        out.push(Window {
            start: s,
            end: plan.horizon() + padding,
        });
    }
    out
}

/// Plan in joint space from the reference start and track the plan with
/// computed torque.
pub fn run_arm(sc: &ArmScenario) -> Result<ArmRun, SimError> {
    sc.validate()?;
    let model = sc.model;
    let joint_obstacles =
        workspace_to_joint_obstacles(&model, &sc.task_obstacles, sc.grid_resolution)?;
    let cover = coverage(
        &model,
        &sc.task_obstacles,
        &joint_obstacles,
        sc.grid_resolution,
    );
    let spec = sc.density_spec(joint_obstacles.clone());
    let field = spec.field()?;
    let q0 = spec.target.position(0.0);
    if joint_obstacles.iter().any(|c| c.contains(&q0)) {
        return Err(SimError::Invalid(
            "reference start lies inside a joint-space obstacle".into(),
        ));
    }
    let dt = sc.integration.dt;
    // half-step plan so every RK4 stage lands on a sample
    let plan = joint_motion_plan(&spec, q0, sc.integration.horizon, dt / 2.0)?;
    let avoidance = windows(&plan, sc.window_padding);
    let in_window = |t: f64| avoidance.iter().any(|w| t >= w.start && t <= w.end);

    let torque = |t: f64, s: &Vector4<f64>| {
        let (qr, qdr, qddr) = plan.sample(t);
        let q = Vector2::new(s[0], s[1]);
        let qd = Vector2::new(s[2], s[3]);
        // compare angles on the circle so the reference may wrap
        let qr = q + (qr - q).map(wrap_angle);
        arm_inverse_dynamics(&model, &q, &qd, &qr, &qdr, &qddr, &sc.kp, &sc.kv)
    };

    let steps = sc.integration.steps();
    let nobs = sc.task_obstacles.len();
    let mut monitor = Monitor::new(0.0, f64::INFINITY, false);
    let mut rows = Vec::new();
    let mut x = Vector4::new(q0[0], q0[1], plan.qd[0][0], plan.qd[0][1]);
    let (mut max_err, mut max_err_out) = (0.0f64, 0.0f64);
    let mut min_link: Option<f64> = None;
    let mut t = 0.0;
    for i in 0..=steps {
        t = i as f64 * dt;
        if !x.iter().all(|v| v.is_finite()) {
            return Err(SimError::NonFinite { step: i, agent: 0 });
        }
        let q = Vector2::new(x[0], x[1]);
        let u = torque(t, &x)?;
        let (qr, qdr, _) = plan.sample(t);
        let err = (q - qr).map(wrap_angle);
        let e_max = err.amax();
        max_err = max_err.max(e_max);
        if !in_window(t) {
            max_err_out = max_err_out.max(e_max);
        }
        let ee = model.fk(&q).end_effector;
        let clear: Vec<f64> = sc
            .task_obstacles
            .iter()
            .map(|o| (ee - o.center).norm() - o.radius)
            .collect();
        let link = sc
            .task_obstacles
            .iter()
            .map(|o| link_clearance(&model, &q, o))
            .fold(None, |m: Option<f64>, c| Some(m.map_or(c, |m| m.min(c))));
        if let Some(l) = link {
            min_link = Some(min_link.map_or(l, |m| m.min(l)));
        }
        let e = field.eval(t, &q);
        monitor.observe(
            t,
            (ee - sc.target.position(t)).norm(),
            &clear,
            u.as_slice(),
            None,
            e.rho,
            e.psi,
            true,
        );
        if i % sc.integration.log_every == 0 || i == steps {
            rows.push(LogRow {
                t,
                state: x.iter().copied().collect(),
                control: u.iter().copied().collect(),
                rho: e.rho,
                psi: e.psi,
                clearances: clear,
                saturated: false,
                in_workspace: true,
                extra: vec![
                    qr[0],
                    qr[1],
                    qdr[0],
                    qdr[1],
                    err[0],
                    err[1],
                    ee[0],
                    ee[1],
                    link.unwrap_or(f64::NAN),
                ],
            });
        }
        if i == steps {
            break;
        }
        let mut failure = None;
        x = rk4_step(
            &mut |s, y: &Vector4<f64>| {
                let q = Vector2::new(y[0], y[1]);
                let qd = Vector2::new(y[2], y[3]);
                let acc = torque(s, y).and_then(|u| model.forward_dynamics(&q, &qd, &u));
                match acc {
                    Ok(a) => Vector4::new(qd[0], qd[1], a[0], a[1]),
                    Err(e) => {
                        failure.get_or_insert(e);
                        Vector4::zeros()
                    }
                }
            },
            t,
            &x,
            dt,
        );
        if let Some(e) = failure {
            return Err(e.into());
        }
    }
    let summary = monitor.finish(t, x.iter().copied().collect());
    let log = TrajectoryLog {
        state_labels: ["q1", "q2", "q1_dot", "q2_dot"].map(String::from).to_vec(),
        control_labels: ["tau1", "tau2"].map(String::from).to_vec(),
        clearance_labels: (1..=nobs).map(|k| format!("d_{k}")).collect(),
        extra_labels: [
            "q1_ref",
            "q2_ref",
            "q1_dot_ref",
            "q2_dot_ref",
            "e1",
            "e2",
            "ee_x",
            "ee_y",
            "link_clearance",
        ]
        .map(String::from)
        .to_vec(),
        rows,
        summary: summary.clone(),
    };
    Ok(ArmRun {
        joint_obstacles,
        coverage: cover,
        plan,
        log,
        avoidance_windows: avoidance,
        max_tracking_error: max_err,
        max_tracking_error_outside_windows: max_err_out,
        min_ee_clearance: summary.min_clearance,
        min_link_clearance: min_link,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(obstacles: Vec<TaskCircle>) -> ArmScenario {
        ArmScenario {
            model: TwoLinkArm::default(),
            task_obstacles: obstacles,
            grid_resolution: 120,
            target: Path::Circle {
                center: Vector2::new(0.5, -0.6),
                radius: 1.0,
                rate: 1.0,
                phase: -std::f64::consts::FRAC_PI_2,
            },
            theta: 0.05,
            sensing_margin: 0.4,
            alpha: 0.2,
            beta: 10.0,
            kappa: 1.0,
            feedforward: true,
            kp: Vector2::new(1.0, 1.0),
            kv: Vector2::new(10.0, 10.0),
            integration: Integration {
                dt: 0.01,
                horizon: 4.0,
                log_every: 10,
            },
            window_padding: 0.5,
        }
    }

    #[test]
    fn obstacle_free_run_tracks_the_reference() {
        let run = run_arm(&scenario(vec![])).unwrap();
        assert!(run.avoidance_windows.is_empty());
        assert!(run.max_tracking_error < 1e-2, "{}", run.max_tracking_error);
        let last = run.log.rows.last().unwrap();
        let target = Path::Circle {
            center: Vector2::new(0.5, -0.6),
            radius: 1.0,
            rate: 1.0,
            phase: -std::f64::consts::FRAC_PI_2,
        }
        .position(last.t);
        assert!((Vector2::new(last.extra[6], last.extra[7]) - target).norm() < 5e-2);
    }

    #[test]
    fn windows_merge_band_stretches() {
        let plan = JointPlan {
            dt: 1.0,
            q: vec![Vector2::zeros(); 6],
            qd: vec![Vector2::zeros(); 6],
            qdd: vec![Vector2::zeros(); 6],
            psi: vec![1.0, 0.5, 0.4, 1.0, 1.0, 0.9],
        };
        let w = windows(&plan, 0.5);
        assert_eq!(
            w,
            vec![
                Window {
                    start: 1.0,
                    end: 3.5
                },
                Window {
                    start: 5.0,
                    end: 5.5
                }
            ]
        );
    }
}
