//! Feedback laws: density gradient, saturation, unicycle conversion,
//! double-integrator backstepping, the social-force baseline and the
//! arm inverse-dynamics law.

use log::warn;
use nalgebra::{SVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::density::{wrap_angle, DensityField};
use crate::robots::{ArmError, TwoLinkArm};

/// Step of the directional difference used for the Hessian-velocity product.
pub const HESSIAN_STEP: f64 = 1e-5;
/// Speeds below this leave the unicycle heading reference undefined.
pub const DEGENERATE_SPEED: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlCommand<const M: usize> {
    pub u: SVector<f64, M>,
    pub saturated: bool,
}

impl<const M: usize> ControlCommand<M> {
    pub fn new(u: SVector<f64, M>) -> Self {
        Self {
            u,
            saturated: false,
        }
    }
}

/// `u = beta grad(rho)`, plus the target velocity in dynamic-target mode.
pub fn gradient_control<const N: usize>(
    field: &DensityField<N>,
    t: f64,
    x: &SVector<f64, N>,
) -> ControlCommand<N> {
    ControlCommand::new(field.velocity(t, x))
}

/// Scale `u` so that `|u|_inf <= u_max`, keeping its direction.
pub fn saturate<const M: usize>(cmd: ControlCommand<M>, u_max: f64) -> ControlCommand<M> {
    let m = cmd.u.amax();
    if m <= u_max {
        cmd
    } else {
        // clamp guards against the scaled maximum landing one ulp above the bound
        ControlCommand {
            u: (cmd.u * (u_max / m)).map(|v| v.clamp(-u_max, u_max)),
            saturated: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnicycleState {
    pub x: f64,
    pub y: f64,
    /// Heading in `(-pi, pi]`.
    pub delta: f64,
}

impl UnicycleState {
    pub fn new(x: f64, y: f64, delta: f64) -> Self {
        Self {
            x,
            y,
            delta: wrap_angle(delta),
        }
    }
}

/// Speed and turn rate realising the planar velocity `u_xy`:
/// `v = |u|`, `omega = d_ref - K (delta - atan2(u_y, u_x))`.
///
/// A vanishing `u_xy` gives `(0, 0)`.
pub fn unicycle_control(
    state: &UnicycleState,
    u_xy: &Vector2<f64>,
    k: f64,
    d_ref: f64,
) -> (f64, f64) {
    let v = u_xy.norm();
    if v < DEGENERATE_SPEED {
        return (0.0, 0.0);
    }
    let reference = u_xy[1].atan2(u_xy[0]);
    (v, d_ref - k * wrap_angle(state.delta - reference))
}

/// Unicycle conversion with memory: the reference heading rate is the
/// wrap-aware difference of successive reference headings, and the
/// reference is held while the commanded velocity vanishes.
#[derive(Debug, Clone, Default)]
pub struct HeadingTracker {
    previous: Option<f64>,
}

impl HeadingTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn command(
        &mut self,
        state: &UnicycleState,
        u_xy: &Vector2<f64>,
        k: f64,
        dt: f64,
    ) -> (f64, f64) {
        let speed = u_xy.norm();
        if speed < DEGENERATE_SPEED {
            let held = self.previous.unwrap_or(state.delta);
            return (0.0, -k * wrap_angle(state.delta - held));
        }
        let reference = u_xy[1].atan2(u_xy[0]);
        let rate = match self.previous {
            Some(p) if dt > 0.0 => wrap_angle(reference - p) / dt,
            _ => 0.0,
        };
        self.previous = Some(reference);
        (speed, rate - k * wrap_angle(state.delta - reference))
    }
}

/// `u = d/dt(beta grad(rho)) - K (v - beta grad(rho))` for `x'' = u`.
///
/// The total derivative is `beta (d grad(rho)/dt + H v)`; the Hessian-velocity
/// product is a central difference of the gradient along `v`.
pub fn backstepping_control<const N: usize>(
    field: &DensityField<N>,
    t: f64,
    x: &SVector<f64, N>,
    v: &SVector<f64, N>,
    k: f64,
) -> ControlCommand<N> {
    let beta = field.beta();
    let e = field.eval(t, x);
    let speed = v.norm();
    let hv = if speed > 0.0 {
        let dir = v / speed;
        let h = HESSIAN_STEP;
        (field.rho_grad(t, &(x + dir * h)) - field.rho_grad(t, &(x - dir * h)))
            * (speed / (2.0 * h))
    } else {
        SVector::zeros()
    };
    let virtual_u = e.grad * beta;
    ControlCommand::new((e.grad_dt + hv) * beta - (v - virtual_u) * k)
}

/// Social-force parameters; desired-force terms use unit mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SfmParams {
    pub a: f64,
    pub b: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    /// Surface gap beyond which a neighbour is ignored.
    pub d_h: f64,
    pub desired_speed: f64,
    pub relaxation_time: f64,
    /// Cap on the normal repulsion magnitude, used for coincident agents.
    pub max_repulsion: f64,
    /// Within this distance of the target the desired speed shrinks linearly.
    pub arrival_radius: f64,
}

impl Default for SfmParams {
    fn default() -> Self {
        Self {
            a: 2000.0,
            b: 0.08,
            kappa1: 1.2e5,
            kappa2: 2.4e5,
            d_h: 2.0,
            desired_speed: 1.0,
            relaxation_time: 0.5,
            max_repulsion: 1e6,
            arrival_radius: 0.5,
        }
    }
}

impl SfmParams {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("a", self.a),
            ("b", self.b),
            ("kappa1", self.kappa1),
            ("kappa2", self.kappa2),
            ("d_h", self.d_h),
            ("desired_speed", self.desired_speed),
            ("relaxation_time", self.relaxation_time),
            ("max_repulsion", self.max_repulsion),
            ("arrival_radius", self.arrival_radius),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("SFM parameter {name} must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// Position, velocity and radius of a disc-shaped agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscAgent {
    pub position: Vector2<f64>,
    pub velocity: Vector2<f64>,
    pub radius: f64,
}

/// Desired force plus pairwise body, sliding-friction and exponential repulsion.
pub fn sfm_control(
    me: &DiscAgent,
    neighbours: &[DiscAgent],
    params: &SfmParams,
    target: &Vector2<f64>,
) -> ControlCommand<2> {
    let to_goal = target - me.position;
    let dist = to_goal.norm();
    let desired = if dist > 0.0 {
        to_goal * (params.desired_speed * (dist / params.arrival_radius).min(1.0) / dist)
    } else {
        Vector2::zeros()
    };
    let mut f = (desired - me.velocity) / params.relaxation_time;
    for other in neighbours {
        let r = me.radius + other.radius;
        let diff = me.position - other.position;
        let d = diff.norm();
        if d - r > params.d_h {
            continue;
        }
        let overlap = (r - d).max(0.0);
        if d < 1e-12 {
            warn!(
                "coincident agents at ({}, {}); repulsion capped",
                me.position[0], me.position[1]
            );
            f += Vector2::new(params.max_repulsion, 0.0);
            continue;
        }
        let n = diff / d;
        let tangent = Vector2::new(-n[1], n[0]);
        let normal = (params.a * ((r - d) / params.b).exp() + params.kappa1 * overlap)
            .min(params.max_repulsion);
        let slip = (other.velocity - me.velocity).dot(&tangent);
        f += n * normal + tangent * (params.kappa2 * overlap * slip);
    }
    ControlCommand::new(f)
}

/// `u = M(q) (q_d'' - Kp e - Kv e') + H(q, q')` with `e = q - q_d`.
#[allow(clippy::too_many_arguments)]
pub fn arm_inverse_dynamics(
    model: &TwoLinkArm,
    q: &Vector2<f64>,
    qd: &Vector2<f64>,
    q_ref: &Vector2<f64>,
    qd_ref: &Vector2<f64>,
    qdd_ref: &Vector2<f64>,
    kp: &Vector2<f64>,
    kv: &Vector2<f64>,
) -> Result<Vector2<f64>, ArmError> {
    let m = model.mass_matrix(q);
    if m.determinant().abs() < 1e-12 {
        return Err(ArmError::SingularInertia(q[0], q[1]));
    }
    let e = q - q_ref;
    let ed = qd - qd_ref;
    let a = qdd_ref - kp.component_mul(&e) - kv.component_mul(&ed);
    Ok(m * a + model.bias(q, qd))
}
