//! Time-parameterised curves used for obstacle centres and moving targets.

use std::fmt;
use std::sync::Arc;

use nalgebra::SVector;

/// Step used for the central difference when a custom path has no velocity.
pub const CUSTOM_VELOCITY_STEP: f64 = 1e-4;

type PathFn<const N: usize> = Arc<dyn Fn(f64) -> SVector<f64, N> + Send + Sync>;

/// A curve `c(t)` with its velocity `c'(t)`.
///
/// The built-in families carry analytic velocities. `Custom` paths may
/// supply their own velocity; otherwise it is estimated by a central
/// difference with step [`CUSTOM_VELOCITY_STEP`].
#[derive(Clone)]
pub enum Path<const N: usize> {
    Static(SVector<f64, N>),
    /// `origin + velocity * t`
    Linear {
        origin: SVector<f64, N>,
        velocity: SVector<f64, N>,
    },
    /// `origin + velocity * t + amplitude * sin(frequency * t + phase)`
    Sinusoid {
        origin: SVector<f64, N>,
        velocity: SVector<f64, N>,
        amplitude: SVector<f64, N>,
        frequency: f64,
        phase: f64,
    },
    /// Uniform motion on a circle in the first two coordinates:
    /// `center + radius * (cos(rate * t + phase), sin(rate * t + phase))`.
    Circle {
        center: SVector<f64, N>,
        radius: f64,
        rate: f64,
        phase: f64,
    },
    Custom {
        position: PathFn<N>,
        velocity: Option<PathFn<N>>,
    },
}

impl<const N: usize> fmt::Debug for Path<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Path::Static(p) => f.debug_tuple("Static").field(&p.as_slice()).finish(),
            Path::Linear { origin, velocity } => f
                .debug_struct("Linear")
                .field("origin", &origin.as_slice())
                .field("velocity", &velocity.as_slice())
                .finish(),
            Path::Sinusoid {
                origin,
                velocity,
                amplitude,
                frequency,
                phase,
            } => f
                .debug_struct("Sinusoid")
                .field("origin", &origin.as_slice())
                .field("velocity", &velocity.as_slice())
                .field("amplitude", &amplitude.as_slice())
                .field("frequency", frequency)
                .field("phase", phase)
                .finish(),
            Path::Circle {
                center,
                radius,
                rate,
                phase,
            } => f
                .debug_struct("Circle")
                .field("center", &center.as_slice())
                .field("radius", radius)
                .field("rate", rate)
                .field("phase", phase)
                .finish(),
            Path::Custom { velocity, .. } => f
                .debug_struct("Custom")
                .field("analytic_velocity", &velocity.is_some())
                .finish(),
        }
    }
}

impl<const N: usize> Path<N> {
    pub fn fixed(p: SVector<f64, N>) -> Self {
        Path::Static(p)
    }

    pub fn custom<F>(position: F) -> Self
    where
        F: Fn(f64) -> SVector<f64, N> + Send + Sync + 'static,
    {
        Path::Custom {
            position: Arc::new(position),
            velocity: None,
        }
    }

    pub fn custom_with_velocity<F, G>(position: F, velocity: G) -> Self
    where
        F: Fn(f64) -> SVector<f64, N> + Send + Sync + 'static,
        G: Fn(f64) -> SVector<f64, N> + Send + Sync + 'static,
    {
        Path::Custom {
            position: Arc::new(position),
            velocity: Some(Arc::new(velocity)),
        }
    }

    pub fn is_static(&self) -> bool {
        match self {
            Path::Static(_) => true,
            Path::Linear { velocity, .. } => velocity.iter().all(|v| *v == 0.0),
            Path::Sinusoid {
                velocity,
                amplitude,
                ..
            } => velocity.iter().all(|v| *v == 0.0) && amplitude.iter().all(|a| *a == 0.0),
            Path::Circle { radius, rate, .. } => *radius == 0.0 || *rate == 0.0,
            Path::Custom { .. } => false,
        }
    }

    pub fn position(&self, t: f64) -> SVector<f64, N> {
        match self {
            Path::Static(p) => *p,
            Path::Linear { origin, velocity } => origin + velocity * t,
            Path::Sinusoid {
                origin,
                velocity,
                amplitude,
                frequency,
                phase,
            } => origin + velocity * t + amplitude * (frequency * t + phase).sin(),
            Path::Circle {
                center,
                radius,
                rate,
                phase,
            } => {
                let mut p = *center;
                let a = rate * t + phase;
                p[0] += radius * a.cos();
                if N > 1 {
                    p[1] += radius * a.sin();
                }
                p
            }
            Path::Custom { position, .. } => position(t),
        }
    }

    pub fn velocity(&self, t: f64) -> SVector<f64, N> {
        match self {
            Path::Static(_) => SVector::zeros(),
            Path::Linear { velocity, .. } => *velocity,
            Path::Sinusoid {
                velocity,
                amplitude,
                frequency,
                phase,
                ..
            } => velocity + amplitude * (frequency * (frequency * t + phase).cos()),
            Path::Circle {
                radius,
                rate,
                phase,
                ..
            } => {
                let mut v = SVector::zeros();
                let a = rate * t + phase;
                v[0] = -radius * rate * a.sin();
                if N > 1 {
                    v[1] = radius * rate * a.cos();
                }
                v
            }
            Path::Custom {
                velocity: Some(vel),
                ..
            } => vel(t),
            Path::Custom {
                position,
                velocity: None,
            } => {
                let h = CUSTOM_VELOCITY_STEP;
                (position(t + h) - position(t - h)) / (2.0 * h)
            }
        }
    }

    /// Same curve shifted by a constant offset.
    pub fn translated(&self, offset: SVector<f64, N>) -> Self {
        match self {
            Path::Static(p) => Path::Static(p + offset),
            Path::Linear { origin, velocity } => Path::Linear {
                origin: origin + offset,
                velocity: *velocity,
            },
            Path::Sinusoid {
                origin,
                velocity,
                amplitude,
                frequency,
                phase,
            } => Path::Sinusoid {
                origin: origin + offset,
                velocity: *velocity,
                amplitude: *amplitude,
                frequency: *frequency,
                phase: *phase,
            },
            Path::Circle {
                center,
                radius,
                rate,
                phase,
            } => Path::Circle {
                center: center + offset,
                radius: *radius,
                rate: *rate,
                phase: *phase,
            },
            Path::Custom { position, velocity } => {
                let position = position.clone();
                let shifted: PathFn<N> = Arc::new(move |t| position(t) + offset);
                Path::Custom {
                    position: shifted,
                    velocity: velocity.clone(),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;

    fn fd<const N: usize>(p: &Path<N>, t: f64) -> SVector<f64, N> {
        let h = 1e-6;
        (p.position(t + h) - p.position(t - h)) / (2.0 * h)
    }

    #[test]
    fn analytic_velocities_match_difference_quotients() {
        let paths = [
            Path::Linear {
                origin: Vector2::new(2.0, 0.0),
                velocity: Vector2::new(0.0, 0.25),
            },
            Path::Sinusoid {
                origin: Vector2::new(6.0, -6.0),
                velocity: Vector2::new(0.0, 0.15),
                amplitude: Vector2::new(0.1, 0.0),
                frequency: 1.0,
                phase: 0.0,
            },
            Path::Circle {
                center: Vector2::new(0.5, -0.6),
                radius: 1.0,
                rate: 1.0,
                phase: -std::f64::consts::FRAC_PI_2,
            },
        ];
        for p in &paths {
            for &t in &[0.0, 0.7, 3.3, 17.0] {
                assert!((p.velocity(t) - fd(p, t)).norm() < 1e-7, "{p:?} at {t}");
            }
        }
    }

    #[test]
    fn circle_with_phase_reproduces_arm_target() {
        let p = Path::Circle {
            center: Vector2::new(0.5, -0.6),
            radius: 1.0,
            rate: 1.0,
            phase: -std::f64::consts::FRAC_PI_2,
        };
        for &t in &[0.0, 1.0, 2.5] {
            let expect = Vector2::new(0.5 + f64::sin(t), -0.6 - f64::cos(t));
            assert!((p.position(t) - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn custom_path_falls_back_to_central_difference() {
        let p: Path<2> = Path::custom(|t| Vector2::new(t * t, 3.0 * t));
        let v = p.velocity(2.0);
        assert!((v - Vector2::new(4.0, 3.0)).norm() < 1e-6);
        assert!(!p.is_static());
    }

    #[test]
    fn translation_shifts_positions_only() {
        let p = Path::Linear {
            origin: Vector2::new(1.0, 1.0),
            velocity: Vector2::new(0.5, 0.0),
        };
        let d = Vector2::new(-3.0, 2.0);
        let q = p.translated(d);
        assert_eq!(q.position(4.0), p.position(4.0) + d);
        assert_eq!(q.velocity(4.0), p.velocity(4.0));
    }
}
