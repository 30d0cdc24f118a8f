//! Robot models integrated by the simulator.

pub mod arm;
pub mod cspace;
pub mod plan;

pub use arm::{ArmError, ArmPose, TwoLinkArm};
pub use cspace::{
    coverage, link_clearance, workspace_to_joint_obstacles, CspaceError, JointCircle, TaskCircle,
};
pub use plan::{joint_motion_plan, task_target_path, JointDensitySpec, JointPlan, PlanError};

use nalgebra::{Vector2, Vector3, Vector4};

/// `x' = u`
pub fn single_integrator(u: &Vector2<f64>) -> Vector2<f64> {
    *u
}

/// State `(x, y, vx, vy)`, input is acceleration.
pub fn double_integrator(state: &Vector4<f64>, u: &Vector2<f64>) -> Vector4<f64> {
    Vector4::new(state[2], state[3], u[0], u[1])
}

/// State `(x, y, heading)` driven by speed `v` and turn rate `omega`.
pub fn unicycle(state: &Vector3<f64>, v: f64, omega: f64) -> Vector3<f64> {
    let (s, c) = state[2].sin_cos();
    Vector3::new(v * c, v * s, omega)
}
