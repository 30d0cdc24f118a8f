//! Joint-space motion plans from the gradient flow of a configuration-space density.

use nalgebra::Vector2;
use thiserror::Error;

use super::arm::TwoLinkArm;
use super::cspace::JointCircle;
use crate::density::{DensityField, DistanceFn, FieldError, Mode};
use crate::ode::rk4_step;
use crate::path::Path;
use crate::smoothfn::{BumpShape, ObstacleSpec, Zone};

/// Half-width of the moving average applied to the differentiated velocity.
const SMOOTHING_HALF_WINDOW: usize = 2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("plan entered joint-space obstacle {obstacle} at t = {time:.3} s")]
    EnteredObstacle { obstacle: usize, time: f64 },
    #[error("plan diverged at t = {0:.3} s")]
    NonFinite(f64),
    #[error("invalid plan setting: {0}")]
    InvalidSetting(String),
}

/// Configuration-space density: obstacle circles, a joint reference
/// `q_T(t)` and the field parameters.
#[derive(Debug, Clone)]
pub struct JointDensitySpec {
    pub obstacles: Vec<JointCircle>,
    pub theta: f64,
    /// Sensing radius of each circle is `radius + sensing_margin`.
    pub sensing_margin: f64,
    pub target: Path<2>,
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    /// Add `q_T'(t)` to the gradient flow.
    pub feedforward: bool,
}

impl JointDensitySpec {
    pub fn field(&self) -> Result<DensityField<2>, FieldError> {
        let obstacles = self
            .obstacles
            .iter()
            .map(|c| {
                let shape = BumpShape::new(self.theta, c.radius, c.radius + self.sensing_margin)?;
                Ok(ObstacleSpec::new(shape, Path::fixed(c.center)))
            })
            .collect::<Result<Vec<_>, FieldError>>()?;
        Ok(DensityField::new(
            obstacles,
            DistanceFn::joint_cosine(self.target.clone()).with_kappa(self.kappa),
            self.alpha,
            self.beta,
            Mode::DynamicTarget,
        )?
        .periodic())
    }

    /// Plan velocity `beta grad(rho)` plus the optional reference feedforward.
    pub fn flow(&self, field: &DensityField<2>, t: f64, q: &Vector2<f64>) -> Vector2<f64> {
        let g = field.rho_grad(t, q) * self.beta;
        if self.feedforward {
            g + self.target.velocity(t)
        } else {
            g
        }
    }
}

/// Reference sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct JointPlan {
    pub dt: f64,
    pub q: Vec<Vector2<f64>>,
    pub qd: Vec<Vector2<f64>>,
    pub qdd: Vec<Vector2<f64>>,
    /// Product of the joint-space bumps at each sample.
    pub psi: Vec<f64>,
}

impl JointPlan {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        (self.len().saturating_sub(1)) as f64 * self.dt
    }

    /// `(q, q', q'')` at time `t`: cubic Hermite for `q` and `q'`, linear for `q''`.
    pub fn sample(&self, t: f64) -> (Vector2<f64>, Vector2<f64>, Vector2<f64>) {
        let last = self.len() - 1;
        let s = (t / self.dt).clamp(0.0, last as f64);
        let i = (s.floor() as usize).min(last.saturating_sub(1));
        if last == 0 {
            return (self.q[0], self.qd[0], self.qdd[0]);
        }
        let u = s - i as f64;
        let h = self.dt;
        let (h00, h10, h01, h11) = (
            2.0 * u * u * u - 3.0 * u * u + 1.0,
            u * u * u - 2.0 * u * u + u,
            -2.0 * u * u * u + 3.0 * u * u,
            u * u * u - u * u,
        );
        let herm = |p0: &Vector2<f64>, m0: &Vector2<f64>, p1: &Vector2<f64>, m1: &Vector2<f64>| {
            p0 * h00 + m0 * (h10 * h) + p1 * h01 + m1 * (h11 * h)
        };
        let q = herm(&self.q[i], &self.qd[i], &self.q[i + 1], &self.qd[i + 1]);
        let qd = herm(&self.qd[i], &self.qdd[i], &self.qd[i + 1], &self.qdd[i + 1]);
        let qdd = self.qdd[i] * (1.0 - u) + self.qdd[i + 1] * u;
        (q, qd, qdd)
    }
}

/// Integrate the plan flow from `q0` over `[0, horizon]` with step `dt`.
pub fn joint_motion_plan(
    spec: &JointDensitySpec,
    q0: Vector2<f64>,
    horizon: f64,
    dt: f64,
) -> Result<JointPlan, PlanError> {
    if !(dt > 0.0 && horizon > 0.0) {
        return Err(PlanError::InvalidSetting(format!(
            "dt = {dt}, horizon = {horizon}"
        )));
    }
    let field = spec.field()?;
    let steps = (horizon / dt).round() as usize;
    let mut q = Vec::with_capacity(steps + 1);
    let mut qd = Vec::with_capacity(steps + 1);
    let mut psi = Vec::with_capacity(steps + 1);
    let mut f = |t: f64, x: &Vector2<f64>| spec.flow(&field, t, x);
    let mut x = q0;
    for i in 0..=steps {
        let t = i as f64 * dt;
        if let Some(k) =
            (0..field.obstacles().len()).find(|&k| field.zone(k, t, &x) == Zone::Unsafe)
        {
            return Err(PlanError::EnteredObstacle {
                obstacle: k,
                time: t,
            });
        }
        q.push(x);
        qd.push(f(t, &x));
        psi.push(field.psi(t, &x));
        if i < steps {
            x = rk4_step(&mut f, t, &x, dt);
            if !x.iter().all(|v| v.is_finite()) {
                return Err(PlanError::NonFinite(t + dt));
            }
        }
    }
    let qdd = smoothed_derivative(&qd, dt);
    Ok(JointPlan {
        dt,
        q,
        qd,
        qdd,
        psi,
    })
}

fn smoothed_derivative(v: &[Vector2<f64>], dt: f64) -> Vec<Vector2<f64>> {
    let n = v.len();
    if n < 2 {
        return vec![Vector2::zeros(); n];
    }
    let raw: Vec<_> = (0..n)
        .map(|i| match i {
            0 => (v[1] - v[0]) / dt,
            _ if i == n - 1 => (v[n - 1] - v[n - 2]) / dt,
            _ => (v[i + 1] - v[i - 1]) / (2.0 * dt),
        })
        .collect();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(SMOOTHING_HALF_WINDOW);
            let hi = (i + SMOOTHING_HALF_WINDOW).min(n - 1);
            raw[lo..=hi].iter().sum::<Vector2<f64>>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Joint reference tracking a task-space path on the elbow-down branch.
///
/// Points outside the reachable annulus are clamped to its boundary along
/// the same ray.
pub fn task_target_path(model: TwoLinkArm, target: Path<2>) -> Path<2> {
    let ik = move |p: Vector2<f64>| {
        let (lo, hi) = ((model.l1 - model.l2).abs(), model.l1 + model.l2);
        let r = p.norm().clamp(lo + 1e-9, hi - 1e-9);
        let p = if p.norm() > 0.0 {
            p * (r / p.norm())
        } else {
            Vector2::new(r, 0.0)
        };
        model.ik_elbow_down(&p).expect("clamped point is reachable")
    };
    let tp = target.clone();
    let tv = target;
    Path::custom_with_velocity(
        move |t| ik(tp.position(t)),
        move |t| {
            let q = ik(tv.position(t));
            model
                .jacobian(&q)
                .try_inverse()
                .map(|j| j * tv.velocity(t))
                .unwrap_or_else(Vector2::zeros)
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::wrap_angle;

    fn spec(obstacles: Vec<JointCircle>, target: Path<2>) -> JointDensitySpec {
        JointDensitySpec {
            obstacles,
            theta: 0.05,
            sensing_margin: 0.4,
            target,
            alpha: 0.2,
            beta: 10.0,
            kappa: 1.0,
            feedforward: true,
        }
    }

    #[test]
    fn obstacle_free_plan_converges_to_fixed_reference() {
        // the cosine distance is quartic at its minimum, so the flow is cubic
        // there and the approach is slow
        let s = spec(vec![], Path::fixed(Vector2::new(0.5, -1.0)));
        let plan = joint_motion_plan(&s, Vector2::new(0.6, -1.08), 6000.0, 0.1).unwrap();
        let end = plan.q.last().unwrap() - Vector2::new(0.5, -1.0);
        assert!(end.map(wrap_angle).norm() < 1e-2);
    }

    #[test]
    fn reference_velocity_matches_difference_quotient() {
        let arm = TwoLinkArm::default();
        let target = Path::Circle {
            center: Vector2::new(0.5, -0.6),
            radius: 1.0,
            rate: 1.0,
            phase: -std::f64::consts::FRAC_PI_2,
        };
        let qt = task_target_path(arm, target.clone());
        for &t in &[0.3, 1.7, 2.2, 4.0, 5.5] {
            let h = 1e-6;
            let fd = (qt.position(t + h) - qt.position(t - h)).map(wrap_angle) / (2.0 * h);
            assert!((qt.velocity(t) - fd).norm() < 1e-5 * (1.0 + fd.norm()));
            assert!((arm.fk(&qt.position(t)).end_effector - target.position(t)).norm() < 1e-9);
        }
    }

    #[test]
    fn plan_stays_out_of_obstacles() {
        let target = Path::Linear {
            origin: Vector2::new(-1.0, 0.0),
            velocity: Vector2::new(0.4, 0.0),
        };
        let circle = JointCircle {
            center: Vector2::new(0.0, 0.0),
            radius: 0.3,
        };
        let s = spec(vec![circle], target);
        let plan = joint_motion_plan(&s, Vector2::new(-1.0, 0.05), 6.0, 0.005).unwrap();
        assert!(plan.psi.iter().all(|&p| p > s.theta));
        assert!(plan.q.iter().all(|q| !circle.contains(q)));
    }

    #[test]
    fn sampling_hits_grid_values() {
        let s = spec(vec![], Path::fixed(Vector2::zeros()));
        let plan = joint_motion_plan(&s, Vector2::new(0.4, 0.2), 1.0, 0.01).unwrap();
        let (q, qd, _) = plan.sample(0.5);
        assert!((q - plan.q[50]).norm() < 1e-12);
        assert!((qd - plan.qd[50]).norm() < 1e-12);
        let (qm, _, _) = plan.sample(0.505);
        assert!((qm - (plan.q[50] + plan.q[51]) * 0.5).norm() < 1e-4);
    }
}
