//! Navigation densities `rho = Psi / (V + kappa)^alpha`.
//!
//! `Psi` is the product of the obstacle bumps and `V` a distance to the
//! target. Every evaluator here is analytic; the product over obstacles is
//! differentiated in logarithmic form, which is valid because each bump is
//! bounded below by its floor `theta > 0`.

use nalgebra::SVector;
use thiserror::Error;

use crate::path::Path;
use crate::smoothfn::{BumpShape, ObstacleSpec, ShapeError, Zone};

/// Default regulariser added to the distance function.
pub const DEFAULT_KAPPA: f64 = 1.0;
/// Default radius of the ball around the target excluded from certification.
pub const DEFAULT_DELTA: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("mode mismatch: {0}")]
    ModeMismatch(String),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(
        "point lies {distance:e} from the target, inside the excluded ball of radius {delta:e}"
    )]
    InsideTargetBall { distance: f64, delta: f64 },
    #[error("operation not defined in {0:?} mode")]
    UnsupportedMode(Mode),
}

/// How the target enters the distance function.
#[derive(Debug, Clone)]
pub enum DistanceKind<const N: usize> {
    /// `|x - x_T|^2`
    QuadraticPoint(SVector<f64, N>),
    /// `|x - x_T(t)|^2`
    QuadraticPath(Path<N>),
    /// `sum_i (1 - cos(q_i - q_T,i(t)))^2` on a torus of joint angles.
    JointCosine(Path<N>),
    /// `1 / |x - x_T|^2`, kept only for comparison runs; it makes the
    /// density vanish at the target.
    ReciprocalPoint(SVector<f64, N>),
}

#[derive(Debug, Clone)]
pub struct DistanceFn<const N: usize> {
    pub kind: DistanceKind<N>,
    pub kappa: f64,
}

/// Distance value with the derivatives the field needs.
#[derive(Debug, Clone, Copy)]
pub struct DistanceEval<const N: usize> {
    pub value: f64,
    pub grad: SVector<f64, N>,
    pub hess_diag: SVector<f64, N>,
    pub dt: f64,
    pub grad_dt: SVector<f64, N>,
}

/// Wrap an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w += 2.0 * PI;
    }
    w
}

impl<const N: usize> DistanceFn<N> {
    pub fn quadratic(target: SVector<f64, N>) -> Self {
        Self {
            kind: DistanceKind::QuadraticPoint(target),
            kappa: DEFAULT_KAPPA,
        }
    }

    pub fn quadratic_path(target: Path<N>) -> Self {
        Self {
            kind: DistanceKind::QuadraticPath(target),
            kappa: DEFAULT_KAPPA,
        }
    }

    pub fn joint_cosine(target: Path<N>) -> Self {
        Self {
            kind: DistanceKind::JointCosine(target),
            kappa: DEFAULT_KAPPA,
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn is_time_invariant(&self) -> bool {
        match &self.kind {
            DistanceKind::QuadraticPoint(_) | DistanceKind::ReciprocalPoint(_) => true,
            DistanceKind::QuadraticPath(p) | DistanceKind::JointCosine(p) => p.is_static(),
        }
    }

    pub fn target(&self, t: f64) -> SVector<f64, N> {
        match &self.kind {
            DistanceKind::QuadraticPoint(p) | DistanceKind::ReciprocalPoint(p) => *p,
            DistanceKind::QuadraticPath(p) | DistanceKind::JointCosine(p) => p.position(t),
        }
    }

    pub fn target_velocity(&self, t: f64) -> SVector<f64, N> {
        match &self.kind {
            DistanceKind::QuadraticPoint(_) | DistanceKind::ReciprocalPoint(_) => SVector::zeros(),
            DistanceKind::QuadraticPath(p) | DistanceKind::JointCosine(p) => p.velocity(t),
        }
    }

    /// Displacement from the target, wrapped for joint-angle distances.
    pub fn offset(&self, t: f64, x: &SVector<f64, N>) -> SVector<f64, N> {
        let d = x - self.target(t);
        match self.kind {
            DistanceKind::JointCosine(_) => d.map(wrap_angle),
            _ => d,
        }
    }

    pub fn eval(&self, t: f64, x: &SVector<f64, N>) -> DistanceEval<N> {
        match &self.kind {
            DistanceKind::QuadraticPoint(p) => {
                let d = x - p;
                DistanceEval {
                    value: d.norm_squared(),
                    grad: d * 2.0,
                    hess_diag: SVector::repeat(2.0),
                    dt: 0.0,
                    grad_dt: SVector::zeros(),
                }
            }
            DistanceKind::QuadraticPath(p) => {
                let d = x - p.position(t);
                let v = p.velocity(t);
                DistanceEval {
                    value: d.norm_squared(),
                    grad: d * 2.0,
                    hess_diag: SVector::repeat(2.0),
                    dt: -2.0 * d.dot(&v),
                    grad_dt: -v * 2.0,
                }
            }
            DistanceKind::JointCosine(p) => {
                let qbar = x - p.position(t);
                let qdot = p.velocity(t);
                let mut e = DistanceEval {
                    value: 0.0,
                    grad: SVector::zeros(),
                    hess_diag: SVector::zeros(),
                    dt: 0.0,
                    grad_dt: SVector::zeros(),
                };
                for i in 0..N {
                    let (s, c) = qbar[i].sin_cos();
                    let one_c = 1.0 - c;
                    e.value += one_c * one_c;
                    e.grad[i] = 2.0 * one_c * s;
                    e.hess_diag[i] = 2.0 * (s * s + one_c * c);
                    e.dt -= e.grad[i] * qdot[i];
                    e.grad_dt[i] = -e.hess_diag[i] * qdot[i];
                }
                e
            }
            DistanceKind::ReciprocalPoint(p) => {
                let d = x - p;
                let d2 = d.norm_squared().max(1e-12);
                let inv = 1.0 / d2;
                DistanceEval {
                    value: inv,
                    grad: d * (-2.0 * inv * inv),
                    hess_diag: d.map(|dj| -2.0 * inv * inv + 8.0 * dj * dj * inv * inv * inv),
                    dt: 0.0,
                    grad_dt: SVector::zeros(),
                }
            }
        }
    }
}

/// Which parts of the environment move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Moving obstacles, fixed target.
    DynamicObstacle,
    /// Fixed obstacles, moving target; the controller adds the target velocity.
    DynamicTarget,
    Static,
}

/// Everything the evaluators produce at one `(t, x)`.
#[derive(Debug, Clone, Copy)]
pub struct FieldEval<const N: usize> {
    pub rho: f64,
    pub grad: SVector<f64, N>,
    /// `d^2 rho / dx_j^2` for each coordinate.
    pub lap_diag: SVector<f64, N>,
    pub dt: f64,
    /// `d/dt` of the spatial gradient.
    pub grad_dt: SVector<f64, N>,
    pub psi: f64,
    pub psi_grad: SVector<f64, N>,
    pub psi_hess_diag: SVector<f64, N>,
    pub psi_dt: f64,
    pub distance: DistanceEval<N>,
    /// `V + kappa`
    pub v1: f64,
}

impl<const N: usize> FieldEval<N> {
    pub fn laplacian(&self) -> f64 {
        self.lap_diag.sum()
    }
}

/// The grouped terms of `div(beta grad(rho) rho)`:
/// `prefactor * sum_j (q1 + q2 + q3 + q4)` with `prefactor = alpha beta / V1^(2 alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceTerms {
    pub prefactor: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
}

impl DivergenceTerms {
    pub fn total(&self) -> f64 {
        self.prefactor * (self.q1 + self.q2 + self.q3 + self.q4)
    }
}

/// A composed navigation density.
#[derive(Debug, Clone)]
pub struct DensityField<const N: usize> {
    obstacles: Vec<ObstacleSpec<N>>,
    distance: DistanceFn<N>,
    alpha: f64,
    beta: f64,
    mode: Mode,
    periodic: bool,
}

impl<const N: usize> DensityField<N> {
    pub fn new(
        obstacles: Vec<ObstacleSpec<N>>,
        distance: DistanceFn<N>,
        alpha: f64,
        beta: f64,
        mode: Mode,
    ) -> Result<Self, FieldError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(FieldError::InvalidParameter(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(FieldError::InvalidParameter(format!(
                "beta must be non-negative, got {beta}"
            )));
        }
        if !(distance.kappa > 0.0 && distance.kappa.is_finite()) {
            return Err(FieldError::InvalidParameter(format!(
                "kappa must be positive, got {}",
                distance.kappa
            )));
        }
        let moving_obstacles = obstacles.iter().any(|o| !o.center.is_static());
        let moving_target = !distance.is_time_invariant();
        match mode {
            Mode::DynamicObstacle if moving_target => {
                return Err(FieldError::ModeMismatch(
                    "dynamic-obstacle mode requires a fixed target".into(),
                ))
            }
            Mode::DynamicTarget if moving_obstacles => {
                return Err(FieldError::ModeMismatch(
                    "dynamic-target mode requires fixed obstacles".into(),
                ))
            }
            Mode::Static if moving_obstacles || moving_target => {
                return Err(FieldError::ModeMismatch(
                    "static mode requires fixed obstacles and target".into(),
                ))
            }
            _ => {}
        }
        Ok(Self {
            obstacles,
            distance,
            alpha,
            beta,
            mode,
            periodic: false,
        })
    }

    /// Treat coordinates as angles: obstacle displacements are wrapped to `(-pi, pi]`.
    pub fn periodic(mut self) -> Self {
        self.periodic = true;
        self
    }

    pub fn obstacles(&self) -> &[ObstacleSpec<N>] {
        &self.obstacles
    }

    pub fn distance(&self) -> &DistanceFn<N> {
        &self.distance
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn kappa(&self) -> f64 {
        self.distance.kappa
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self, FieldError> {
        Self::new(
            self.obstacles.clone(),
            self.distance.clone(),
            alpha,
            self.beta,
            self.mode,
        )
        .map(|f| Self {
            periodic: self.periodic,
            ..f
        })
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self, FieldError> {
        Self::new(
            self.obstacles.clone(),
            self.distance.clone(),
            self.alpha,
            beta,
            self.mode,
        )
        .map(|f| Self {
            periodic: self.periodic,
            ..f
        })
    }

    fn displacement(
        &self,
        obstacle: &ObstacleSpec<N>,
        t: f64,
        x: &SVector<f64, N>,
    ) -> SVector<f64, N> {
        let d = obstacle.displacement(t, x);
        if self.periodic {
            d.map(wrap_angle)
        } else {
            d
        }
    }

    pub fn zone(&self, k: usize, t: f64, x: &SVector<f64, N>) -> Zone {
        let o = &self.obstacles[k];
        o.shape.zone(&self.displacement(o, t, x))
    }

    /// True when `x` lies in the sensing band of at least one obstacle.
    pub fn in_any_band(&self, t: f64, x: &SVector<f64, N>) -> bool {
        (0..self.obstacles.len()).any(|k| self.zone(k, t, x) == Zone::Band)
    }

    /// Signed distance to each unsafe disc boundary.
    pub fn clearances(&self, t: f64, x: &SVector<f64, N>) -> Vec<f64> {
        self.obstacles
            .iter()
            .map(|o| self.displacement(o, t, x).norm() - o.shape.radius())
            .collect()
    }

    pub fn psi(&self, t: f64, x: &SVector<f64, N>) -> f64 {
        self.obstacles
            .iter()
            .map(|o| o.shape.value(&self.displacement(o, t, x)))
            .product()
    }

    pub fn eval(&self, t: f64, x: &SVector<f64, N>) -> FieldEval<N> {
        let mut psi = 1.0;
        let mut sum_a = SVector::<f64, N>::zeros();
        let mut sum_a2 = SVector::<f64, N>::zeros();
        let mut sum_h = SVector::<f64, N>::zeros();
        let mut sum_t = 0.0;
        let mut sum_bgrad = SVector::<f64, N>::zeros();
        for o in &self.obstacles {
            let d = self.displacement(o, t, x);
            let e = match o.shape.zone(&d) {
                Zone::Band => o.shape.eval(&d, &o.center.velocity(t)),
                _ => o.shape.eval(&d, &SVector::zeros()),
            };
            psi *= e.value;
            let inv = 1.0 / e.value;
            let a = e.grad * inv;
            let b = e.dt * inv;
            sum_a += a;
            sum_a2 += a.component_mul(&a);
            sum_h += e.hess_diag * inv;
            sum_t += b;
            sum_bgrad += e.grad_dt * inv - a * b;
        }
        let psi_grad = sum_a * psi;
        let psi_hess_diag = (sum_a.component_mul(&sum_a) - sum_a2 + sum_h) * psi;
        let psi_dt = psi * sum_t;
        let psi_grad_dt = psi_grad * sum_t + sum_bgrad * psi;

        let alpha = self.alpha;
        let dist = self.distance.eval(t, x);
        let v1 = dist.value + self.distance.kappa;
        let w = v1.powf(-alpha);
        let w1 = alpha * w / v1; // alpha V1^(-alpha-1)
        let w2 = (alpha + 1.0) * w1 / v1; // alpha (alpha+1) V1^(-alpha-2)
        let w_grad = -dist.grad * w1;
        let w_hess = dist.grad.component_mul(&dist.grad) * w2 - dist.hess_diag * w1;
        let w_dt = -w1 * dist.dt;
        let w_grad_dt = dist.grad * (w2 * dist.dt) - dist.grad_dt * w1;

        FieldEval {
            rho: psi * w,
            grad: psi_grad * w + w_grad * psi,
            lap_diag: psi_hess_diag * w + psi_grad.component_mul(&w_grad) * 2.0 + w_hess * psi,
            dt: psi_dt * w + psi * w_dt,
            grad_dt: psi_grad_dt * w + psi_grad * w_dt + w_grad * psi_dt + w_grad_dt * psi,
            psi,
            psi_grad,
            psi_hess_diag,
            psi_dt,
            distance: dist,
            v1,
        }
    }

    pub fn rho(&self, t: f64, x: &SVector<f64, N>) -> f64 {
        self.eval(t, x).rho
    }

    pub fn rho_grad(&self, t: f64, x: &SVector<f64, N>) -> SVector<f64, N> {
        self.eval(t, x).grad
    }

    pub fn rho_dt(&self, t: f64, x: &SVector<f64, N>) -> f64 {
        self.eval(t, x).dt
    }

    pub fn rho_grad_dt(&self, t: f64, x: &SVector<f64, N>) -> SVector<f64, N> {
        self.eval(t, x).grad_dt
    }

    /// Grouped expansion of `div(beta grad(rho) rho)`.
    pub fn divergence_terms(&self, t: f64, x: &SVector<f64, N>) -> DivergenceTerms {
        self.terms_from_eval(&self.eval(t, x))
    }

    fn terms_from_eval(&self, e: &FieldEval<N>) -> DivergenceTerms {
        let alpha = self.alpha;
        let v1 = e.v1;
        let psi = e.psi;
        let vg = &e.distance.grad;
        let mut q = [0.0; 4];
        for j in 0..N {
            let (dv, dpsi) = (vg[j], e.psi_grad[j]);
            q[0] += (2.0 * alpha + 1.0) * psi * psi * dv * dv / (v1 * v1);
            q[1] -= 4.0 * psi * dv * dpsi / v1;
            q[2] -= psi * psi * e.distance.hess_diag[j] / v1;
            q[3] += (psi * e.psi_hess_diag[j] + dpsi * dpsi) / alpha;
        }
        DivergenceTerms {
            prefactor: alpha * self.beta * v1.powf(-2.0 * alpha),
            q1: q[0],
            q2: q[1],
            q3: q[2],
            q4: q[3],
        }
    }

    /// `div(k rho)` for the gradient law `k = beta grad(rho)`, evaluated on
    /// the domain with a ball of radius `delta` around the target removed.
    pub fn divergence_k_rho(
        &self,
        t: f64,
        x: &SVector<f64, N>,
        delta: f64,
    ) -> Result<f64, FieldError> {
        if self.mode == Mode::DynamicTarget {
            return Err(FieldError::UnsupportedMode(self.mode));
        }
        let distance = self.distance.offset(t, x).norm();
        if distance < delta {
            return Err(FieldError::InsideTargetBall { distance, delta });
        }
        Ok(self.divergence_terms(t, x).total())
    }

    /// Closed-loop vector field of the gradient law at `(t, x)`.
    pub fn velocity(&self, t: f64, x: &SVector<f64, N>) -> SVector<f64, N> {
        let g = self.rho_grad(t, x) * self.beta;
        match self.mode {
            Mode::DynamicTarget => g + self.distance.target_velocity(t),
            _ => g,
        }
    }

    /// `d rho/dt + div(k rho)` together with `div k` for the gradient law,
    /// in any mode.
    pub fn transport_terms(&self, t: f64, x: &SVector<f64, N>) -> (f64, f64) {
        let e = self.eval(t, x);
        let mut source = e.dt + self.beta * (e.grad.norm_squared() + e.rho * e.laplacian());
        if self.mode == Mode::DynamicTarget {
            source += self.distance.target_velocity(t).dot(&e.grad);
        }
        (source, self.beta * e.laplacian())
    }
}

/// One agent of a multi-agent density construction.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec<const N: usize> {
    pub radius: f64,
    pub sensing_radius: f64,
    pub theta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
    pub target: SVector<f64, N>,
    /// Use `V = 1 / |x - x_T|^2` instead of the quadratic distance.
    pub reciprocal_distance: bool,
}

/// Position and velocity of an agent at the current instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState<const N: usize> {
    pub position: SVector<f64, N>,
    pub velocity: SVector<f64, N>,
}

impl<const N: usize> AgentSpec<N> {
    /// Bump used by agent `self` for a neighbour `other`: the unsafe disc
    /// is the Minkowski sum of both bodies and the sensing disc is the
    /// neighbour's sensing region grown by this agent's radius.
    pub fn neighbour_shape(&self, other: &AgentSpec<N>) -> Result<BumpShape, ShapeError> {
        BumpShape::new(
            other.theta,
            self.radius + other.radius,
            other.sensing_radius + self.radius,
        )
    }
}

/// Indices of the agents whose sensing region currently contains agent `j`.
pub fn neighbours<const N: usize>(
    agents: &[AgentSpec<N>],
    states: &[AgentState<N>],
    j: usize,
) -> Vec<usize> {
    (0..agents.len())
        .filter(|&k| k != j)
        .filter(|&k| {
            let reach = agents[k].sensing_radius + agents[j].radius;
            (states[j].position - states[k].position).norm() < reach
        })
        .collect()
}

/// Density of agent `j`, built only from the neighbours that can see it.
///
/// Neighbours become obstacles moving with their current velocity, so the
/// time derivatives of the field are those of the instantaneous snapshot.
pub fn agent_field<const N: usize>(
    agents: &[AgentSpec<N>],
    states: &[AgentState<N>],
    j: usize,
    t: f64,
) -> Result<DensityField<N>, FieldError> {
    let me = &agents[j];
    let obstacles = neighbours(agents, states, j)
        .into_iter()
        .map(|k| {
            let shape = me.neighbour_shape(&agents[k])?;
            let s = &states[k];
            Ok(ObstacleSpec::new(
                shape,
                Path::Linear {
                    origin: s.position - s.velocity * t,
                    velocity: s.velocity,
                },
            ))
        })
        .collect::<Result<Vec<_>, FieldError>>()?;
    let kind = if me.reciprocal_distance {
        DistanceKind::ReciprocalPoint(me.target)
    } else {
        DistanceKind::QuadraticPoint(me.target)
    };
    DensityField::new(
        obstacles,
        DistanceFn {
            kind,
            kappa: me.kappa,
        },
        me.alpha,
        me.beta,
        Mode::DynamicObstacle,
    )
}

/// Value and gradient of agent `j`'s density at `x`.
pub fn multiagent_rho<const N: usize>(
    agents: &[AgentSpec<N>],
    states: &[AgentState<N>],
    j: usize,
    t: f64,
    x: &SVector<f64, N>,
) -> Result<(f64, SVector<f64, N>), FieldError> {
    let e = agent_field(agents, states, j, t)?.eval(t, x);
    Ok((e.rho, e.grad))
}
