//! Classical fourth-order Runge–Kutta with a fixed step.

use nalgebra::SVector;

/// States the integrator can combine: `self + a * k`.
pub trait OdeState: Clone {
    fn axpy(&self, a: f64, k: &Self) -> Self;
}

impl<const D: usize> OdeState for SVector<f64, D> {
    fn axpy(&self, a: f64, k: &Self) -> Self {
        self + k * a
    }
}

impl<const D: usize> OdeState for Vec<SVector<f64, D>> {
    fn axpy(&self, a: f64, k: &Self) -> Self {
        self.iter().zip(k).map(|(x, d)| x + d * a).collect()
    }
}

/// One RK4 step of `x' = f(t, x)`.
pub fn rk4_step<S, F>(f: &mut F, t: f64, x: &S, dt: f64) -> S
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
{
    let h = 0.5 * dt;
    let k1 = f(t, x);
    let k2 = f(t + h, &x.axpy(h, &k1));
    let k3 = f(t + h, &x.axpy(h, &k2));
    let k4 = f(t + dt, &x.axpy(dt, &k3));
    x.axpy(dt / 6.0, &k1)
        .axpy(dt / 3.0, &k2)
        .axpy(dt / 3.0, &k3)
        .axpy(dt / 6.0, &k4)
}

/// Integrate over `steps` steps and return the final state.
pub fn integrate<S, F>(mut f: F, t0: f64, x0: S, dt: f64, steps: usize) -> S
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
{
    let mut x = x0;
    for i in 0..steps {
        x = rk4_step(&mut f, t0 + i as f64 * dt, &x, dt);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Vector1, Vector2};

    #[test]
    fn exponential_decay_is_fourth_order() {
        let err = |dt: f64| {
            let n = (1.0 / dt).round() as usize;
            let x = integrate(|_, x: &Vector1<f64>| -x, 0.0, Vector1::new(1.0), dt, n);
            (x[0] - (-1.0f64).exp()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!(ratio > 14.0 && ratio < 18.0, "ratio {ratio}");
    }

    #[test]
    fn harmonic_oscillator_phase() {
        let x = integrate(
            |_, x: &Vector2<f64>| Vector2::new(x[1], -x[0]),
            0.0,
            Vector2::new(1.0, 0.0),
            1e-3,
            1000,
        );
        assert!((x[0] - 1f64.cos()).abs() < 1e-12);
        assert!((x[1] + 1f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn vec_state_matches_stacked_state() {
        let f = |_t: f64, xs: &Vec<Vector1<f64>>| xs.iter().map(|x| -x * 2.0).collect::<Vec<_>>();
        let a = integrate(f, 0.0, vec![Vector1::new(1.0), Vector1::new(3.0)], 0.01, 50);
        let b = integrate(
            |_, x: &Vector2<f64>| -x * 2.0,
            0.0,
            Vector2::new(1.0, 3.0),
            0.01,
            50,
        );
        assert_eq!(a[0][0], b[0]);
        assert_eq!(a[1][0], b[1]);
    }
}
