//! Planar two-link arm with point masses at the link ends.
//!
//! With `c2 = cos q2`, `s2 = sin q2`:
//!
//! ```text
//! M11 = (m1 + m2) l1^2 + m2 l2^2 + 2 m2 l1 l2 c2
//! M12 = M21 = m2 l2^2 + m2 l1 l2 c2
//! M22 = m2 l2^2
//! C   = [-m2 l1 l2 s2 (2 q1' q2' + q2'^2),  m2 l1 l2 s2 q1'^2]
//! G   = [(m1 + m2) g l1 cos q1 + m2 g l2 cos(q1 + q2),  m2 g l2 cos(q1 + q2)]
//! H   = C + G
//! ```
//!
//! Gravity acts along `-y`; there is no friction.

use nalgebra::{Matrix2, Vector2};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArmError {
    #[error("invalid arm parameter: {0}")]
    InvalidParameter(String),
    #[error("singular inertia matrix at q = ({0}, {1})")]
    SingularInertia(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TwoLinkArm {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    pub g: f64,
}

impl Default for TwoLinkArm {
    fn default() -> Self {
        Self {
            m1: 1.0,
            m2: 1.0,
            l1: 1.0,
            l2: 1.0,
            g: 9.81,
        }
    }
}

/// Elbow and end-effector positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmPose {
    pub elbow: Vector2<f64>,
    pub end_effector: Vector2<f64>,
}

impl TwoLinkArm {
    pub fn validate(&self) -> Result<(), ArmError> {
        for (name, v) in [
            ("m1", self.m1),
            ("m2", self.m2),
            ("l1", self.l1),
            ("l2", self.l2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ArmError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(ArmError::InvalidParameter(format!(
                "g must be non-negative, got {}",
                self.g
            )));
        }
        Ok(())
    }

    pub fn mass_matrix(&self, q: &Vector2<f64>) -> Matrix2<f64> {
        let c2 = q[1].cos();
        let a = self.m2 * self.l2 * self.l2;
        let b = self.m2 * self.l1 * self.l2 * c2;
        Matrix2::new(
            (self.m1 + self.m2) * self.l1 * self.l1 + a + 2.0 * b,
            a + b,
            a + b,
            a,
        )
    }

    pub fn coriolis(&self, q: &Vector2<f64>, qd: &Vector2<f64>) -> Vector2<f64> {
        let h = self.m2 * self.l1 * self.l2 * q[1].sin();
        Vector2::new(
            -h * (2.0 * qd[0] * qd[1] + qd[1] * qd[1]),
            h * qd[0] * qd[0],
        )
    }

    pub fn gravity(&self, q: &Vector2<f64>) -> Vector2<f64> {
        let c12 = (q[0] + q[1]).cos();
        let g2 = self.m2 * self.g * self.l2 * c12;
        Vector2::new((self.m1 + self.m2) * self.g * self.l1 * q[0].cos() + g2, g2)
    }

    /// `H(q, q') = C(q, q') + G(q)`
    pub fn bias(&self, q: &Vector2<f64>, qd: &Vector2<f64>) -> Vector2<f64> {
        self.coriolis(q, qd) + self.gravity(q)
    }

    /// `q'' = M^-1 (torque - H)`
    pub fn forward_dynamics(
        &self,
        q: &Vector2<f64>,
        qd: &Vector2<f64>,
        torque: &Vector2<f64>,
    ) -> Result<Vector2<f64>, ArmError> {
        let m = self.mass_matrix(q);
        let inv = m
            .try_inverse()
            .ok_or(ArmError::SingularInertia(q[0], q[1]))?;
        Ok(inv * (torque - self.bias(q, qd)))
    }

    pub fn fk(&self, q: &Vector2<f64>) -> ArmPose {
        let elbow = Vector2::new(q[0].cos(), q[0].sin()) * self.l1;
        let a = q[0] + q[1];
        ArmPose {
            elbow,
            end_effector: elbow + Vector2::new(a.cos(), a.sin()) * self.l2,
        }
    }

    pub fn jacobian(&self, q: &Vector2<f64>) -> Matrix2<f64> {
        let (s1, c1) = q[0].sin_cos();
        let (s12, c12) = (q[0] + q[1]).sin_cos();
        Matrix2::new(
            -self.l1 * s1 - self.l2 * s12,
            -self.l2 * s12,
            self.l1 * c1 + self.l2 * c12,
            self.l2 * c12,
        )
    }

    /// Closed-form inverse kinematics on the branch `q2 <= 0`.
    pub fn ik_elbow_down(&self, p: &Vector2<f64>) -> Option<Vector2<f64>> {
        let (l1, l2) = (self.l1, self.l2);
        let c2 = (p.norm_squared() - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
        if !(-1.0..=1.0).contains(&c2) {
            return None;
        }
        let q2 = -c2.acos();
        let q1 = p[1].atan2(p[0]) - (l2 * q2.sin()).atan2(l1 + l2 * c2);
        Some(Vector2::new(q1, q2))
    }

    pub fn kinetic_energy(&self, q: &Vector2<f64>, qd: &Vector2<f64>) -> f64 {
        0.5 * qd.dot(&(self.mass_matrix(q) * qd))
    }

    pub fn potential_energy(&self, q: &Vector2<f64>) -> f64 {
        let p = self.fk(q);
        self.g * (self.m1 * p.elbow[1] + self.m2 * p.end_effector[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::integrate;
    use nalgebra::Vector4;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forward_kinematics_reference_poses() {
        let arm = TwoLinkArm::default();
        let p = arm.fk(&Vector2::zeros()).end_effector;
        assert!((p - Vector2::new(2.0, 0.0)).norm() < 1e-15);
        let p = arm
            .fk(&Vector2::new(std::f64::consts::FRAC_PI_2, 0.0))
            .end_effector;
        assert!((p - Vector2::new(0.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn reach_and_inertia_over_random_configurations() {
        let arm = TwoLinkArm::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let q = Vector2::new(rng.random_range(-3.2..3.2), rng.random_range(-3.2..3.2));
            assert!(arm.fk(&q).end_effector.norm() <= 2.0 + 1e-12);
        }
        for _ in 0..100 {
            let q = Vector2::new(rng.random_range(-3.2..3.2), rng.random_range(-3.2..3.2));
            let m = arm.mass_matrix(&q);
            assert_eq!(m[(0, 1)], m[(1, 0)]);
            let eig = m.symmetric_eigenvalues();
            assert!(eig.min() > 0.0);
        }
    }

    #[test]
    fn gravity_compensation_is_equilibrium() {
        let arm = TwoLinkArm::default();
        let q = Vector2::zeros();
        let acc = arm
            .forward_dynamics(&q, &Vector2::zeros(), &arm.gravity(&q))
            .unwrap();
        assert!(acc.norm() < 1e-14);
    }

    #[test]
    fn gravity_is_gradient_of_potential() {
        let arm = TwoLinkArm::default();
        let q = Vector2::new(0.4, -1.1);
        let h = 1e-6;
        for j in 0..2 {
            let mut qp = q;
            let mut qm = q;
            qp[j] += h;
            qm[j] -= h;
            let fd = (arm.potential_energy(&qp) - arm.potential_energy(&qm)) / (2.0 * h);
            assert!((fd - arm.gravity(&q)[j]).abs() < 1e-7);
        }
    }

    #[test]
    fn kinetic_energy_conserved_without_gravity_or_torque() {
        let arm = TwoLinkArm {
            g: 0.0,
            ..TwoLinkArm::default()
        };
        let x0 = Vector4::new(0.3, -0.8, 1.2, -0.7);
        let energy = |x: &Vector4<f64>| {
            arm.kinetic_energy(&Vector2::new(x[0], x[1]), &Vector2::new(x[2], x[3]))
        };
        let f = |_t: f64, x: &Vector4<f64>| {
            let q = Vector2::new(x[0], x[1]);
            let qd = Vector2::new(x[2], x[3]);
            let a = arm.forward_dynamics(&q, &qd, &Vector2::zeros()).unwrap();
            Vector4::new(qd[0], qd[1], a[0], a[1])
        };
        let x1 = integrate(f, 0.0, x0, 1e-3, 5000);
        assert!((energy(&x1) - energy(&x0)).abs() < 1e-8 * energy(&x0));
    }

    #[test]
    fn inverse_kinematics_round_trip() {
        let arm = TwoLinkArm::default();
        for &(x, y) in &[(0.5, -1.6), (1.3, -0.01), (0.28, -0.1), (-0.4, 0.9)] {
            let p = Vector2::new(x, y);
            let q = arm.ik_elbow_down(&p).unwrap();
            assert!(q[1] <= 0.0);
            assert!((arm.fk(&q).end_effector - p).norm() < 1e-12);
        }
        assert!(arm.ik_elbow_down(&Vector2::new(3.0, 0.0)).is_none());
    }

    #[test]
    fn validation_rejects_nonpositive_links() {
        let arm = TwoLinkArm {
            l2: 0.0,
            ..TwoLinkArm::default()
        };
        assert!(arm.validate().is_err());
        assert!(TwoLinkArm::default().validate().is_ok());
    }
}
