//! Smooth transition functions and the inverse bump used to encode obstacles.
//!
//! The bump of an obstacle with radius `r`, sensing radius `s` and floor
//! `theta` is
//!
//! ```text
//! psi(d) = theta                                   |d| <= r
//!        = smooth_step((|d|^2 - r^2) / (s^2 - r^2)) r < |d| < s
//!        = 1                                       |d| >= s
//! ```
//!
//! where `d = x - c(t)`. All derivatives vanish outside the sensing band.

use nalgebra::SVector;
use thiserror::Error;

use crate::path::Path;

/// Below this argument `exp(-1/tau)` is returned as exactly zero.
///
/// At the cutoff the true value is about `1.4e-87`, far below the resolution
/// of any quantity it is added to, and its derivatives are treated as zero
/// with it.
pub const TAU_CUTOFF: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShapeError {
    #[error("occupancy floor theta must lie in (0, 1), got {0}")]
    Theta(f64),
    #[error("radii must satisfy 0 < r < s, got r = {r}, s = {s}")]
    Radii { r: f64, s: f64 },
}

/// `exp(-1/tau)` for positive `tau`, zero otherwise.
pub fn elementary_f(tau: f64) -> f64 {
    if tau > TAU_CUTOFF {
        (-1.0 / tau).exp()
    } else {
        0.0
    }
}

/// `(f, f', f'')` of [`elementary_f`].
pub fn elementary_f_derivs(tau: f64) -> (f64, f64, f64) {
    if tau <= TAU_CUTOFF {
        return (0.0, 0.0, 0.0);
    }
    let f = (-1.0 / tau).exp();
    let t2 = tau * tau;
    (f, f / t2, f * (1.0 - 2.0 * tau) / (t2 * t2))
}

/// Smooth step rising from `theta` at `tau <= 0` to 1 at `tau >= 1`.
pub fn smooth_step(tau: f64, theta: f64) -> f64 {
    smooth_step_derivs(tau, theta).0
}

/// Value, first and second derivative of [`smooth_step`] with respect to `tau`.
pub fn smooth_step_derivs(tau: f64, theta: f64) -> (f64, f64, f64) {
    let (a, da, dda) = elementary_f_derivs(tau);
    let (b, fb1, fb2) = elementary_f_derivs(1.0 - tau);
    if a == 0.0 {
        return (theta, 0.0, 0.0);
    }
    if b == 0.0 {
        return (1.0, 0.0, 0.0);
    }
    // d/dtau f(1 - tau) = -f'(1 - tau), second derivative +f''(1 - tau)
    let db = -fb1;
    let ddb = fb2;
    let sum = a + b;
    let num = da * b - a * db;
    let g = a / sum;
    let g1 = num / (sum * sum);
    let g2 = (dda * b - a * ddb) / (sum * sum) - 2.0 * num * (da + db) / (sum * sum * sum);
    let scale = 1.0 - theta;
    (scale * g + theta, scale * g1, scale * g2)
}

/// Where a point sits relative to one obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Zone {
    Unsafe,
    Band,
    Clear,
}

/// Occupancy floor and radii of one circular obstacle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpShape {
    theta: f64,
    r: f64,
    s: f64,
}

/// Bump value and its derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpEval<const N: usize> {
    pub value: f64,
    pub grad: SVector<f64, N>,
    pub hess_diag: SVector<f64, N>,
    /// Partial time derivative, `-grad . c'(t)`.
    pub dt: f64,
    /// Time derivative of the spatial gradient, `-Hess . c'(t)`.
    pub grad_dt: SVector<f64, N>,
}

impl BumpShape {
    pub fn new(theta: f64, r: f64, s: f64) -> Result<Self, ShapeError> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(ShapeError::Theta(theta));
        }
        if !(r > 0.0 && s > r && s.is_finite()) {
            return Err(ShapeError::Radii { r, s });
        }
        Ok(Self { theta, r, s })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn radius(&self) -> f64 {
        self.r
    }

    pub fn sensing_radius(&self) -> f64 {
        self.s
    }

    pub fn zone<const N: usize>(&self, d: &SVector<f64, N>) -> Zone {
        let d2 = d.norm_squared();
        if d2 <= self.r * self.r {
            Zone::Unsafe
        } else if d2 >= self.s * self.s {
            Zone::Clear
        } else {
            Zone::Band
        }
    }

    fn tau<const N: usize>(&self, d: &SVector<f64, N>) -> f64 {
        (d.norm_squared() - self.r * self.r) / (self.s * self.s - self.r * self.r)
    }

    /// Bump value for displacement `d = x - c`.
    pub fn value<const N: usize>(&self, d: &SVector<f64, N>) -> f64 {
        match self.zone(d) {
            Zone::Unsafe => self.theta,
            Zone::Clear => 1.0,
            Zone::Band => smooth_step(self.tau(d), self.theta),
        }
    }

    /// Full evaluation for displacement `d` of a centre moving with velocity `c_dot`.
    pub fn eval<const N: usize>(
        &self,
        d: &SVector<f64, N>,
        c_dot: &SVector<f64, N>,
    ) -> BumpEval<N> {
        match self.zone(d) {
            Zone::Unsafe => BumpEval::constant(self.theta),
            Zone::Clear => BumpEval::constant(1.0),
            Zone::Band => {
                let width = self.s * self.s - self.r * self.r;
                let (value, g1, g2) = smooth_step_derivs(self.tau(d), self.theta);
                // dtau/dx_j = 2 d_j / width, d2tau/dx_j2 = 2 / width
                let dtau = d * (2.0 / width);
                let grad = dtau * g1;
                let hess_diag = dtau.map(|v| g2 * v * v + g1 * 2.0 / width);
                let dt = -grad.dot(c_dot);
                let grad_dt = -(dtau * (g2 * dtau.dot(c_dot)) + c_dot * (g1 * 2.0 / width));
                BumpEval {
                    value,
                    grad,
                    hess_diag,
                    dt,
                    grad_dt,
                }
            }
        }
    }
}

impl<const N: usize> BumpEval<N> {
    fn constant(value: f64) -> Self {
        Self {
            value,
            grad: SVector::zeros(),
            hess_diag: SVector::zeros(),
            dt: 0.0,
            grad_dt: SVector::zeros(),
        }
    }
}

/// A circular obstacle whose centre follows a path.
#[derive(Debug, Clone)]
pub struct ObstacleSpec<const N: usize> {
    pub shape: BumpShape,
    pub center: Path<N>,
}

impl<const N: usize> ObstacleSpec<N> {
    pub fn new(shape: BumpShape, center: Path<N>) -> Self {
        Self { shape, center }
    }

    pub fn displacement(&self, t: f64, x: &SVector<f64, N>) -> SVector<f64, N> {
        x - self.center.position(t)
    }

    pub fn zone(&self, t: f64, x: &SVector<f64, N>) -> Zone {
        self.shape.zone(&self.displacement(t, x))
    }

    /// Signed distance from `x` to the boundary of the unsafe disc.
    pub fn clearance(&self, t: f64, x: &SVector<f64, N>) -> f64 {
        self.displacement(t, x).norm() - self.shape.r
    }

    pub fn bump_value(&self, t: f64, x: &SVector<f64, N>) -> f64 {
        self.shape.value(&self.displacement(t, x))
    }

    pub fn eval(&self, t: f64, x: &SVector<f64, N>) -> BumpEval<N> {
        let d = self.displacement(t, x);
        if self.shape.zone(&d) != Zone::Band {
            return self.shape.eval(&d, &SVector::zeros());
        }
        self.shape.eval(&d, &self.center.velocity(t))
    }

    pub fn bump_grad(&self, t: f64, x: &SVector<f64, N>) -> SVector<f64, N> {
        self.eval(t, x).grad
    }

    pub fn bump_hess_diag(&self, t: f64, x: &SVector<f64, N>) -> SVector<f64, N> {
        self.eval(t, x).hess_diag
    }

    pub fn bump_dt(&self, t: f64, x: &SVector<f64, N>) -> f64 {
        self.eval(t, x).dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;
    use proptest::prelude::*;

    fn moving() -> ObstacleSpec<2> {
        ObstacleSpec::new(
            BumpShape::new(0.1, 0.75, 1.5).unwrap(),
            Path::Sinusoid {
                origin: Vector2::new(6.0, -6.0),
                velocity: Vector2::new(0.0, 0.15),
                amplitude: Vector2::new(0.1, 0.0),
                frequency: 1.0,
                phase: 0.0,
            },
        )
    }

    #[test]
    fn elementary_f_branches() {
        assert_eq!(elementary_f(-1.0), 0.0);
        assert_eq!(elementary_f(0.0), 0.0);
        assert!((elementary_f(1.0) - 0.367_879_441_171_442_3).abs() < 1e-15);
    }

    #[test]
    fn elementary_f_small_argument_matches_extended_precision() {
        // exp(-100) = 3.720075976020835962959695803863e-44 (40-digit reference)
        let reference = 3.720_075_976_020_836e-44;
        let v = elementary_f(0.01);
        assert!(((v - reference) / reference).abs() < 1e-14, "{v:e}");
        // below the cutoff the value is flushed to zero
        assert_eq!(elementary_f(0.004), 0.0);
        assert_eq!(elementary_f_derivs(0.004), (0.0, 0.0, 0.0));
    }

    #[test]
    fn smooth_step_reference_points() {
        assert_eq!(smooth_step(0.0, 0.1), 0.1);
        assert_eq!(smooth_step(1.0, 0.1), 1.0);
        assert!((smooth_step(0.5, 0.1) - 0.55).abs() < 1e-15);
        assert_eq!(smooth_step(-3.0, 0.2), 0.2);
        assert_eq!(smooth_step(7.0, 0.2), 1.0);
    }

    #[test]
    fn smooth_step_derivatives_match_differences() {
        let h = 1e-5;
        for i in 1..40 {
            let tau = i as f64 / 40.0;
            let (_, d1, d2) = smooth_step_derivs(tau, 0.05);
            let fd1 = (smooth_step(tau + h, 0.05) - smooth_step(tau - h, 0.05)) / (2.0 * h);
            let fd2 = (smooth_step_derivs(tau + h, 0.05).1 - smooth_step_derivs(tau - h, 0.05).1)
                / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-7 * (1.0 + d1.abs()), "tau {tau}");
            assert!((d2 - fd2).abs() < 1e-6 * (1.0 + d2.abs()), "tau {tau}");
        }
    }

    #[test]
    fn shape_validation() {
        assert_eq!(BumpShape::new(1.0, 1.0, 2.0), Err(ShapeError::Theta(1.0)));
        assert_eq!(BumpShape::new(0.0, 1.0, 2.0), Err(ShapeError::Theta(0.0)));
        assert!(matches!(
            BumpShape::new(0.1, 2.0, 2.0),
            Err(ShapeError::Radii { .. })
        ));
        assert!(matches!(
            BumpShape::new(0.1, -1.0, 2.0),
            Err(ShapeError::Radii { .. })
        ));
    }

    #[test]
    fn bump_reference_points() {
        let shape = BumpShape::new(0.1, 1.0, 2.0).unwrap();
        let o = ObstacleSpec::new(shape, Path::fixed(Vector2::new(3.0, -1.0)));
        let c = Vector2::new(3.0, -1.0);
        assert_eq!(o.bump_value(0.0, &(c + Vector2::new(1.0, 0.0))), 0.1);
        assert_eq!(o.bump_value(0.0, &(c + Vector2::new(0.0, 2.0))), 1.0);
        let mid = ((1.0f64 + 4.0) / 2.0).sqrt();
        let v = o.bump_value(0.0, &(c + Vector2::new(mid, 0.0)));
        assert!((v - 0.55).abs() < 1e-12);
    }

    #[test]
    fn derivatives_vanish_off_band() {
        let o = moving();
        for &t in &[0.0, 4.0, 11.0] {
            let c = o.center.position(t);
            for p in [c + Vector2::new(1.6, 0.3), c + Vector2::new(0.2, -0.3), c] {
                let e = o.eval(t, &p);
                assert_eq!(e.grad, Vector2::zeros());
                assert_eq!(e.hess_diag, Vector2::zeros());
                assert_eq!(e.dt, 0.0);
                assert_eq!(e.grad_dt, Vector2::zeros());
            }
        }
    }

    #[test]
    fn band_derivatives_match_finite_differences() {
        let o = moving();
        let h = 1e-6;
        let t = 2.3;
        let c = o.center.position(t);
        for k in 0..24 {
            let ang = k as f64 * 0.37;
            let rad = 0.8 + 0.65 * (k as f64 / 24.0);
            let x = c + Vector2::new(ang.cos(), ang.sin()) * rad;
            let e = o.eval(t, &x);
            for j in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                let fd = (o.bump_value(t, &xp) - o.bump_value(t, &xm)) / (2.0 * h);
                let rel = (e.grad[j] - fd).abs() / e.grad[j].abs().max(1e-3);
                assert!(rel < 1e-5, "grad {j}: {} vs {fd}", e.grad[j]);
                let fd2 = (o.bump_grad(t, &xp)[j] - o.bump_grad(t, &xm)[j]) / (2.0 * h);
                assert!((e.hess_diag[j] - fd2).abs() < 1e-5 * (1.0 + fd2.abs()));
            }
            let fdt = (o.bump_value(t + h, &x) - o.bump_value(t - h, &x)) / (2.0 * h);
            assert!((e.dt - fdt).abs() < 1e-6 * (1.0 + fdt.abs()));
            let fdgt = (o.bump_grad(t + h, &x) - o.bump_grad(t - h, &x)) / (2.0 * h);
            assert!((e.grad_dt - fdgt).norm() < 1e-5 * (1.0 + fdgt.norm()));
        }
    }

    #[test]
    fn seams_are_flat() {
        // one-sided difference quotients at r and s shrink with h
        let o = ObstacleSpec::new(
            BumpShape::new(0.1, 1.0, 2.0).unwrap(),
            Path::fixed(Vector2::zeros()),
        );
        for &edge in &[1.0, 2.0] {
            let at = Vector2::new(edge, 0.0);
            let mut last = f64::INFINITY;
            for &h in &[1e-1, 5e-2, 2e-2] {
                let out = Vector2::new(edge + h, 0.0);
                let inn = Vector2::new(edge - h, 0.0);
                let slope = ((o.bump_value(0.0, &out) - o.bump_value(0.0, &at)) / h)
                    .abs()
                    .max(((o.bump_value(0.0, &at) - o.bump_value(0.0, &inn)) / h).abs());
                assert!(slope <= last);
                last = slope;
            }
            assert!(last < 1e-4, "edge {edge}: {last}");
        }
    }

    proptest! {
        #[test]
        fn value_in_range_and_radially_monotone(
            theta in 0.01f64..0.9, r in 0.1f64..2.0, extra in 0.05f64..2.0,
            ang in 0.0f64..6.3, a in 0.0f64..5.0, b in 0.0f64..5.0,
        ) {
            let shape = BumpShape::new(theta, r, r + extra).unwrap();
            let dir = Vector2::new(ang.cos(), ang.sin());
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let vlo = shape.value(&(dir * lo));
            let vhi = shape.value(&(dir * hi));
            prop_assert!(vlo >= theta && vlo <= 1.0);
            prop_assert!(vhi >= theta && vhi <= 1.0);
            prop_assert!(vlo <= vhi + 1e-15);
        }

        #[test]
        fn translation_covariant(
            dx in -10.0f64..10.0, dy in -10.0f64..10.0, px in -3.0f64..3.0, py in -3.0f64..3.0,
        ) {
            let shape = BumpShape::new(0.05, 0.75, 1.5).unwrap();
            let c = Vector2::new(1.0, -2.0);
            let shift = Vector2::new(dx, dy);
            let x = Vector2::new(px, py);
            let a = ObstacleSpec::new(shape, Path::fixed(c)).bump_value(0.0, &x);
            let b = ObstacleSpec::new(shape, Path::fixed(c + shift)).bump_value(0.0, &(x + shift));
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
