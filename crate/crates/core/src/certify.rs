//! Sampled checks of the convergence conditions and the closed-form
//! parameter ranges.
//!
//! All margins here are sampled on grids, not rigorous bounds.

use log::warn;
use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::{DensityField, DistanceKind, FieldError, Mode, DEFAULT_DELTA};
use crate::sim::Bounds;

/// Safety factor applied to every sampled bound.
pub const INFLATION: f64 = 1.05;
/// Rays used for the tail-decay fit.
pub const TAIL_RAYS: usize = 16;
/// Radii of the tail-decay fit, as multiples of the grid diameter.
const TAIL_RADII: (f64, f64) = (1e2, 1e5);
/// `|p2|` below this (relative to `p1 + p3`) is reported as zero.
const P2_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CertifyError {
    #[error("degenerate constants: {0}")]
    Degenerate(String),
    #[error("L1 = {0} is not positive; alpha is below the admissible range")]
    AlphaTooSmall(f64),
    #[error("sample {sample} left the workspace at t = {time:.3}")]
    Escaped { sample: usize, time: f64 },
    #[error("invalid setting: {0}")]
    Invalid(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Space-time sampling grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyGrid {
    pub bounds: Bounds,
    pub nx: usize,
    pub ny: usize,
    pub nt: usize,
    pub t0: f64,
    pub t1: f64,
    /// Radius of the ball around the target that is left out.
    pub delta: f64,
}

impl CertifyGrid {
    pub fn new(bounds: Bounds, t1: f64) -> Self {
        Self {
            bounds,
            nx: 200,
            ny: 200,
            nt: 50,
            t0: 0.0,
            t1,
            delta: DEFAULT_DELTA,
        }
    }

    fn validate(&self) -> Result<(), CertifyError> {
        if self.nx < 2
            || self.ny < 2
            || self.nt == 0
            || !(self.t1 >= self.t0)
            || !(self.delta > 0.0)
        {
            return Err(CertifyError::Invalid(format!("bad grid {self:?}")));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        if self.nt == 1 {
            return vec![self.t0];
        }
        (0..self.nt)
            .map(|k| self.t0 + (self.t1 - self.t0) * k as f64 / (self.nt - 1) as f64)
            .collect()
    }

    pub fn points(&self) -> Vec<Vector2<f64>> {
        let (lo, hi) = (self.bounds.lo, self.bounds.hi);
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push(Vector2::new(
                    lo[0] + (hi[0] - lo[0]) * i as f64 / (self.nx - 1) as f64,
                    lo[1] + (hi[1] - lo[1]) * j as f64 / (self.ny - 1) as f64,
                ));
            }
        }
        out
    }
}

/// Uniform bounds on the bump product and the distance function.
///
/// Norms are of the offset from the target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionConstants {
    pub c_psi_t: f64,
    pub cbar_psi_x: f64,
    pub cbar_psi_xx: f64,
    #[serde(rename = "dbar_V")]
    pub dbar_v: f64,
    #[serde(rename = "dunder_V")]
    pub dunder_v: f64,
    #[serde(rename = "dbar_Vx")]
    pub dbar_vx: f64,
    /// Root-mean-square lower bound: `sum_j (dV/dx_j)^2 >= n dunder_Vx^2 |x|^2`.
    #[serde(rename = "dunder_Vx")]
    pub dunder_vx: f64,
    #[serde(rename = "dbar_Vxx")]
    pub dbar_vxx: f64,
    /// Norm bounds over the sensing bands, or over the grid without obstacles.
    pub cbar_x: f64,
    pub cunder_x: f64,
    pub delta: f64,
    pub theta: f64,
    pub kappa: f64,
    pub n: usize,
}

impl AssumptionConstants {
    fn validate(&self) -> Result<(), CertifyError> {
        let pos = [
            self.dbar_v,
            self.dunder_v,
            self.dbar_vx,
            self.dunder_vx,
            self.cbar_x,
            self.cunder_x,
        ];
        if pos.iter().any(|v| !(*v > 0.0) || !v.is_finite())
            || !(self.kappa > 0.0)
            || !(self.delta > 0.0)
        {
            return Err(CertifyError::Degenerate(format!("{self:?}")));
        }
        Ok(())
    }

    /// Smallest value of `(|x| dunder_Vx theta)^2 / (dbar_V |x|^2 + kappa)^2`
    /// over `|x|` in `[cunder_x, cbar_x]`.
    fn q1_floor(&self) -> f64 {
        [self.cunder_x, self.cbar_x]
            .iter()
            .map(|r| {
                (r * self.dunder_vx * self.theta).powi(2)
                    / (self.dbar_v * r * r + self.kappa).powi(2)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Bracket of the in-band lower bound on `div(k rho)`.
    pub fn bracket(&self, alpha: f64) -> f64 {
        let q = self.q1_floor();
        (2.0 * alpha + 1.0) * q
            - 4.0 * self.dbar_vx * self.cbar_psi_x / (self.dunder_v * self.cunder_x)
            - self.dbar_vxx / self.kappa
            - self.cbar_psi_xx / alpha
    }

    pub fn quadratic_coefficients(&self) -> (f64, f64, f64) {
        let q = self.q1_floor();
        let p2 = q
            - 4.0 * self.dbar_vx * self.cbar_psi_x / (self.dunder_v * self.cunder_x)
            - self.dbar_vxx / self.kappa;
        (2.0 * q, p2, self.cbar_psi_xx)
    }

    /// `dbar_V + kappa / delta^2`, so that `V + kappa <= dbar_V1 |x|^2` off the delta ball.
    pub fn dbar_v1(&self) -> f64 {
        self.dbar_v + self.kappa / (self.delta * self.delta)
    }
}

/// Positive root of `p1 a^2 + p2 a - p3 = 0`.
pub fn quadratic_root(p1: f64, p2: f64, p3: f64) -> Result<f64, CertifyError> {
    if !(p1 > 0.0) {
        return Err(CertifyError::Degenerate(format!(
            "p1 = {p1} must be positive"
        )));
    }
    if p2 == 0.0 {
        return Ok((p3 / p1).sqrt());
    }
    let disc = (p2 * p2 + 4.0 * p1 * p3).sqrt();
    // avoid cancellation when p2 dominates
    Ok(if p2 > 0.0 {
        2.0 * p3 / (p2 + disc)
    } else {
        (disc - p2) / (2.0 * p1)
    })
}

/// Lower bound on alpha: the larger of the in-band quadratic root and the
/// outside-band condition.
pub fn alpha_range(c: &AssumptionConstants) -> Result<f64, CertifyError> {
    c.validate()?;
    let (p1, p2, p3) = c.quadratic_coefficients();
    let root = quadratic_root(p1, p2, p3)?;
    let outside = (c.dbar_vxx / c.dunder_v)
        / (2.0 * c.dbar_v1().powi(-2) * (c.dunder_vx * c.theta).powi(2))
        - 0.5;
    Ok(root.max(outside))
}

/// `L1 = alpha n B(alpha) / (dbar_V cbar_x^2 + kappa)^alpha`.
pub fn l1(c: &AssumptionConstants, alpha: f64) -> f64 {
    alpha * c.n as f64 * c.bracket(alpha) / (c.dbar_v * c.cbar_x * c.cbar_x + c.kappa).powf(alpha)
}

/// `beta_min = c_psi_t / L1`.
pub fn beta_range(c: &AssumptionConstants, alpha: f64) -> Result<f64, CertifyError> {
    c.validate()?;
    if c.c_psi_t == 0.0 {
        return Ok(0.0);
    }
    let l = l1(c, alpha);
    if !(l > 0.0) {
        return Err(CertifyError::AlphaTooSmall(l));
    }
    Ok(c.c_psi_t / l)
}

/// Pointwise lower bound on `div(k rho)` from the constants, valid in the sensing bands.
pub fn divergence_lower_bound(
    c: &AssumptionConstants,
    field: &DensityField<2>,
    t: f64,
    x: &Vector2<f64>,
) -> f64 {
    let v1 = field.eval(t, x).v1;
    field.alpha() * field.beta() * c.n as f64 * c.bracket(field.alpha())
        / v1.powf(2.0 * field.alpha())
}

fn quadratic_distance(field: &DensityField<2>) -> bool {
    matches!(
        field.distance().kind,
        DistanceKind::QuadraticPoint(_) | DistanceKind::QuadraticPath(_)
    )
}

/// Sample the assumption constants on the grid, inflating each bound by 5%.
pub fn estimate_constants(
    field: &DensityField<2>,
    grid: &CertifyGrid,
) -> Result<AssumptionConstants, CertifyError> {
    grid.validate()?;
    let times = grid.times();
    let points = grid.points();
    let n = 2;

    #[derive(Clone, Copy)]
    struct Acc {
        psi_t: f64,
        psi_x: f64,
        psi_xx: f64,
        band_lo: f64,
        band_hi: f64,
        all_lo: f64,
        all_hi: f64,
        v_lo: f64,
        v_hi: f64,
        vx_lo: f64,
        vx_hi: f64,
        vxx: f64,
    }
    let init = Acc {
        psi_t: 0.0,
        psi_x: 0.0,
        psi_xx: 0.0,
        band_lo: f64::INFINITY,
        band_hi: 0.0,
        all_lo: f64::INFINITY,
        all_hi: 0.0,
        v_lo: f64::INFINITY,
        v_hi: 0.0,
        vx_lo: f64::INFINITY,
        vx_hi: 0.0,
        vxx: f64::NEG_INFINITY,
    };
    let merge = |a: Acc, b: Acc| Acc {
        psi_t: a.psi_t.max(b.psi_t),
        psi_x: a.psi_x.max(b.psi_x),
        psi_xx: a.psi_xx.max(b.psi_xx),
        band_lo: a.band_lo.min(b.band_lo),
        band_hi: a.band_hi.max(b.band_hi),
        all_lo: a.all_lo.min(b.all_lo),
        all_hi: a.all_hi.max(b.all_hi),
        v_lo: a.v_lo.min(b.v_lo),
        v_hi: a.v_hi.max(b.v_hi),
        vx_lo: a.vx_lo.min(b.vx_lo),
        vx_hi: a.vx_hi.max(b.vx_hi),
        vxx: a.vxx.max(b.vxx),
    };
    let acc = times
        .par_iter()
        .map(|&t| {
            let mut a = init;
            for x in &points {
                let r = field.distance().offset(t, x).norm();
                if r < grid.delta {
                    continue;
                }
                a.all_lo = a.all_lo.min(r);
                a.all_hi = a.all_hi.max(r);
                let e = field.eval(t, x);
                let d = &e.distance;
                a.v_lo = a.v_lo.min(d.value / (r * r));
                a.v_hi = a.v_hi.max(d.value / (r * r));
                a.vx_lo = a.vx_lo.min((d.grad.norm_squared() / n as f64).sqrt() / r);
                a.vx_hi = a.vx_hi.max(d.grad.amax() / r);
                a.vxx = a.vxx.max(d.hess_diag.max());
                if field.in_any_band(t, x) {
                    a.band_lo = a.band_lo.min(r);
                    a.band_hi = a.band_hi.max(r);
                    a.psi_t = a.psi_t.max(e.psi_dt.abs());
                    a.psi_x = a.psi_x.max(e.psi_grad.amax());
                    a.psi_xx = a.psi_xx.max(e.psi_hess_diag.amax());
                }
            }
            a
        })
        .reduce(|| init, merge);

    if acc.all_hi == 0.0 {
        return Err(CertifyError::Degenerate(
            "grid lies inside the target ball".into(),
        ));
    }
    let (lo, hi) = if acc.band_hi > 0.0 {
        (acc.band_lo, acc.band_hi)
    } else {
        (acc.all_lo, acc.all_hi)
    };
    let (dbar_v, dunder_v, dbar_vx, dunder_vx, dbar_vxx) = if quadratic_distance(field) {
        (1.0, 1.0, 2.0, 2.0 / (n as f64).sqrt(), 2.0)
    } else {
        (
            acc.v_hi * INFLATION,
            acc.v_lo / INFLATION,
            acc.vx_hi * INFLATION,
            acc.vx_lo / INFLATION,
            acc.vxx.max(0.0) * INFLATION,
        )
    };
    let theta = field
        .obstacles()
        .iter()
        .map(|o| o.shape.theta())
        .fold(1.0, f64::min);
    Ok(AssumptionConstants {
        c_psi_t: acc.psi_t * INFLATION,
        cbar_psi_x: acc.psi_x * INFLATION,
        cbar_psi_xx: acc.psi_xx * INFLATION,
        dbar_v,
        dunder_v,
        dbar_vx,
        dunder_vx,
        dbar_vxx,
        cbar_x: hi * INFLATION,
        cunder_x: (lo / INFLATION).max(grid.delta),
        delta: grid.delta,
        theta,
        kappa: field.kappa(),
        n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Check {
    /// Minimum of `d rho/dt + div(k rho)` over the grid.
    pub margin: f64,
    /// `[t, x, y]` of the minimum.
    pub location: [f64; 3],
    /// Grid points dropped for lying inside the delta ball.
    pub excluded: usize,
    /// Smallest fitted decay exponent of `(1 + |k|) rho / (1 + |x|)` along rays.
    pub tail_exponent: f64,
    pub integral_finite: bool,
    /// Smallest beta for which every sampled value with a positive
    /// divergence part is positive.
    pub sampled_beta_min: f64,
    /// Largest such beta where the divergence part is negative; `None` when
    /// it is never negative.
    pub sampled_beta_max: Option<f64>,
}

/// Sampled minimum of `drho/dt + div(k rho)` plus the tail-decay check.
pub fn check_lemma1(
    field: &DensityField<2>,
    grid: &CertifyGrid,
) -> Result<Lemma1Check, CertifyError> {
    grid.validate()?;
    if field.mode() == Mode::DynamicTarget {
        return Err(FieldError::UnsupportedMode(field.mode()).into());
    }
    let times = grid.times();
    let points = grid.points();
    let beta = field.beta();

    #[derive(Clone, Copy)]
    struct Acc {
        margin: f64,
        at: [f64; 3],
        excluded: usize,
        beta_min: f64,
        beta_max: f64,
    }
    let init = Acc {
        margin: f64::INFINITY,
        at: [f64::NAN; 3],
        excluded: 0,
        beta_min: 0.0,
        beta_max: f64::INFINITY,
    };
    let acc = times
        .par_iter()
        .map(|&t| {
            let mut a = init;
            for x in &points {
                if field.distance().offset(t, x).norm() < grid.delta {
                    a.excluded += 1;
                    continue;
                }
                let e = field.eval(t, x);
                // div(grad(rho) rho), so that the margin is rho_t + beta * d
                let d = e.grad.norm_squared() + e.rho * e.laplacian();
                let m = e.dt + beta * d;
                if m < a.margin {
                    a.margin = m;
                    a.at = [t, x[0], x[1]];
                }
                if d > 0.0 {
                    a.beta_min = a.beta_min.max(-e.dt / d);
                } else if d < 0.0 {
                    a.beta_max = a.beta_max.min(e.dt / -d);
                }
            }
            a
        })
        .reduce(
            || init,
            |a, b| Acc {
                margin: a.margin.min(b.margin),
                at: if a.margin <= b.margin { a.at } else { b.at },
                excluded: a.excluded + b.excluded,
                beta_min: a.beta_min.max(b.beta_min),
                beta_max: a.beta_max.min(b.beta_max),
            },
        );
    if acc.excluded > 0 {
        warn!(
            "{} grid points inside the target ball were skipped",
            acc.excluded
        );
    }
    let tail = tail_exponent(field, grid);
    Ok(Lemma1Check {
        margin: acc.margin,
        location: acc.at,
        excluded: acc.excluded,
        tail_exponent: tail,
        integral_finite: tail > 1.0,
        sampled_beta_min: acc.beta_min,
        sampled_beta_max: acc.beta_max.is_finite().then_some(acc.beta_max),
    })
}

/// Smallest decay exponent of `(1 + |k|) rho / (1 + |x|)` along `TAIL_RAYS`
/// rays from the target, measured far outside the grid.
pub fn tail_exponent(field: &DensityField<2>, grid: &CertifyGrid) -> f64 {
    let b = grid.bounds;
    let scale = ((b.hi[0] - b.lo[0]).powi(2) + (b.hi[1] - b.lo[1]).powi(2)).sqrt();
    let (r0, r1) = (TAIL_RADII.0 * scale, TAIL_RADII.1 * scale);
    let t = grid.t0;
    let origin = field.distance().target(t);
    let integrand = |x: &Vector2<f64>| {
        let k = field.velocity(t, x).norm();
        (1.0 + k) * field.rho(t, x) / (1.0 + x.norm())
    };
    (0..TAIL_RAYS)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / TAIL_RAYS as f64;
            let dir = Vector2::new(a.cos(), a.sin());
            let (f0, f1) = (
                integrand(&(origin + dir * r0)),
                integrand(&(origin + dir * r1)),
            );
            -(f1.ln() - f0.ln()) / (r1.ln() - r0.ln())
        })
        .fold(f64::INFINITY, f64::min)
}

/// Monte-Carlo setup for the transport identity over a disc of initial conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleSettings {
    pub center: [f64; 2],
    pub radius: f64,
    pub samples: usize,
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub seed: u64,
    /// Samples leaving this box are an error.
    pub bounds: Option<Bounds>,
}

/// Relative residual of
/// `int_{s_t1(Z)} rho(t1) - int_Z rho(t0) = int_t0^t1 int_{s_t(Z)} (rho_t + div(k rho)) dx dt`.
///
/// Each sample carries its flow-map log-Jacobian, advanced with `div k`.
/// Both sides use the same samples, so the Monte-Carlo error is shared and
/// the residual measures time discretisation.
pub fn liouville_residual(
    field: &DensityField<2>,
    s: &LiouvilleSettings,
) -> Result<f64, CertifyError> {
    if s.samples == 0 || !(s.radius > 0.0) || !(s.dt > 0.0) || !(s.t1 > s.t0) {
        return Err(CertifyError::Invalid(format!(
            "bad Liouville settings {s:?}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let center = Vector2::new(s.center[0], s.center[1]);
    let starts: Vec<Vector2<f64>> = (0..s.samples)
        .map(|_| {
            let r = s.radius * rng.random::<f64>().sqrt();
            let a = rng.random_range(0.0..2.0 * std::f64::consts::PI);
            center + Vector2::new(r * a.cos(), r * a.sin())
        })
        .collect();
    let steps = ((s.t1 - s.t0) / s.dt).round() as usize;
    let dt = (s.t1 - s.t0) / steps as f64;
    let beta = field.beta();
    let target_moves = field.mode() == Mode::DynamicTarget;

    // velocity, div k and the transport source at one point
    let local = |t: f64, x: &Vector2<f64>| {
        let e = field.eval(t, x);
        let mut v = e.grad * beta;
        let mut source = e.dt + beta * (e.grad.norm_squared() + e.rho * e.laplacian());
        if target_moves {
            let vt = field.distance().target_velocity(t);
            v += vt;
            source += vt.dot(&e.grad);
        }
        (v, beta * e.laplacian(), source, e.rho)
    };

    let sums = starts
        .par_iter()
        .enumerate()
        .map(|(idx, x0)| {
            let mut x = *x0;
            let mut log_j = 0.0f64;
            let mut t = s.t0;
            let rho0 = field.rho(t, &x);
            let mut rhs = 0.0;
            let (mut v, mut div, mut src, _) = local(t, &x);
            for _ in 0..steps {
                let h = 0.5 * dt;
                let (k1x, k1j) = (v, div);
                let (v2, d2, _, _) = local(t + h, &(x + k1x * h));
                let (v3, d3, _, _) = local(t + h, &(x + v2 * h));
                let (v4, d4, _, _) = local(t + dt, &(x + v3 * dt));
                let prev = src * log_j.exp();
                x += (k1x + v2 * 2.0 + v3 * 2.0 + v4) * (dt / 6.0);
                log_j += (k1j + 2.0 * d2 + 2.0 * d3 + d4) * (dt / 6.0);
                t += dt;
                if let Some(b) = s.bounds {
                    if !b.contains(&x) {
                        return Err(CertifyError::Escaped {
                            sample: idx,
                            time: t,
                        });
                    }
                }
                (v, div, src, _) = local(t, &x);
                rhs += 0.5 * dt * (prev + src * log_j.exp());
            }
            let lhs = field.rho(t, &x) * log_j.exp() - rho0;
            Ok((lhs, rhs))
        })
        .collect::<Result<Vec<_>, CertifyError>>()?;
    let w = std::f64::consts::PI * s.radius * s.radius / s.samples as f64;
    let lhs: f64 = sums.iter().map(|p| p.0).sum::<f64>() * w;
    let rhs: f64 = sums.iter().map(|p| p.1).sum::<f64>() * w;
    Ok((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(f64::EPSILON))
}

/// Everything `certify` reports, serialised as the certificate JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub alpha: f64,
    pub beta: f64,
    pub constants: AssumptionConstants,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    #[serde(rename = "L1")]
    pub l1: f64,
    pub alpha_min: Option<f64>,
    pub beta_min: Option<f64>,
    pub lemma1_margin: f64,
    pub lemma1_margin_location: [f64; 3],
    pub lemma1_integral_finite: bool,
    pub tail_exponent: f64,
    pub sampled_beta_min: f64,
    pub sampled_beta_max: Option<f64>,
    pub liouville_residual: Option<f64>,
    pub excluded_points: usize,
    /// Conditions that failed; empty when the certificate passes.
    pub violations: Vec<String>,
    pub notes: Vec<String>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Run every check and assemble the report.
///
/// The pass condition uses the sampled quantities: a positive sampled
/// divergence margin and beta inside the sampled admissible interval. The closed-form
/// ranges are reported alongside.
pub fn certify(
    field: &DensityField<2>,
    grid: &CertifyGrid,
    liouville: Option<&LiouvilleSettings>,
) -> Result<CertificateReport, CertifyError> {
    let c = estimate_constants(field, grid)?;
    let (alpha, beta) = (field.alpha(), field.beta());
    let (p1, p2, p3) = c.quadratic_coefficients();
    let l = l1(&c, alpha);
    let alpha_min = alpha_range(&c).ok();
    let beta_min = beta_range(&c, alpha).ok();
    let check = check_lemma1(field, grid)?;
    let residual = liouville
        .map(|s| liouville_residual(field, s))
        .transpose()?;

    let mut notes = Vec::new();
    let mut violations = Vec::new();
    if check.margin <= 0.0 {
        violations.push(format!(
            "lemma1_margin: {:.6e} at t = {:.3}, x = ({:.3}, {:.3})",
            check.margin, check.location[0], check.location[1], check.location[2]
        ));
    }
    if beta < check.sampled_beta_min {
        violations.push(format!(
            "beta_min: beta = {beta} is below the sampled bound {:.6e}",
            check.sampled_beta_min
        ));
    }
    if let Some(m) = check.sampled_beta_max {
        if beta > m {
            violations.push(format!(
                "beta_max: beta = {beta} is above the sampled bound {m:.6e}"
            ));
        }
    }
    if !check.integral_finite {
        violations.push(format!(
            "lemma1_integral_finite: tail exponent {:.3} <= 1",
            check.tail_exponent
        ));
    }
    match alpha_min {
        Some(a) if alpha < a => notes.push(format!(
            "alpha = {alpha} is below the closed-form alpha_min = {a:.6e}"
        )),
        None => notes.push("closed-form alpha_min unavailable for these constants".into()),
        _ => {}
    }
    if beta_min.is_none() {
        notes.push(format!(
            "closed-form beta_min undefined: L1 = {l:.6e} is not positive at this alpha"
        ));
    }
    if p2.abs() <= P2_ZERO * (p1 + p3) {
        notes.push(format!(
            "p2 is zero: alpha_min uses the root sqrt(p3/p1) = {:.6e}, not p3",
            (p3 / p1).sqrt()
        ));
    }
    if check.excluded > 0 {
        notes.push(format!(
            "{} grid points inside the target ball were excluded",
            check.excluded
        ));
    }
    Ok(CertificateReport {
        alpha,
        beta,
        constants: c,
        p1,
        p2,
        p3,
        l1: l,
        alpha_min,
        beta_min,
        lemma1_margin: check.margin,
        lemma1_margin_location: check.location,
        lemma1_integral_finite: check.integral_finite,
        tail_exponent: check.tail_exponent,
        sampled_beta_min: check.sampled_beta_min,
        sampled_beta_max: check.sampled_beta_max,
        liouville_residual: residual,
        excluded_points: check.excluded,
        violations,
        notes,
    })
}
