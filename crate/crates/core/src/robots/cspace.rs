//! Mapping task-space discs to circles in the arm's joint space.

use std::collections::VecDeque;
use std::f64::consts::PI;

use nalgebra::Vector2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::arm::TwoLinkArm;
use crate::density::wrap_angle;

/// Growth applied to each enclosing circle.
pub const INFLATION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CspaceError {
    #[error("grid resolution must be at least 8, got {0}")]
    Resolution(usize),
    #[error("a colliding region wraps around the joint torus; the workspace is infeasible")]
    WrapsTorus,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TaskCircle {
    pub center: Vector2<f64>,
    pub radius: f64,
}

/// Disc in joint space; centres are angles, not necessarily wrapped.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct JointCircle {
    pub center: Vector2<f64>,
    pub radius: f64,
}

impl JointCircle {
    pub fn contains(&self, q: &Vector2<f64>) -> bool {
        (q - self.center).map(wrap_angle).norm() <= self.radius
    }
}

fn segment_distance(a: &Vector2<f64>, b: &Vector2<f64>, p: &Vector2<f64>) -> f64 {
    let ab = b - a;
    let s = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (a + ab * s - p).norm()
}

/// True when either link touches one of the discs.
pub fn arm_collides(model: &TwoLinkArm, q: &Vector2<f64>, obstacles: &[TaskCircle]) -> bool {
    obstacles.iter().any(|o| link_clearance(model, q, o) <= 0.0)
}

/// Distance from the nearer link segment to the disc boundary; negative on contact.
pub fn link_clearance(model: &TwoLinkArm, q: &Vector2<f64>, obstacle: &TaskCircle) -> f64 {
    let pose = model.fk(q);
    let base = Vector2::zeros();
    segment_distance(&base, &pose.elbow, &obstacle.center).min(segment_distance(
        &pose.elbow,
        &pose.end_effector,
        &obstacle.center,
    )) - obstacle.radius
}

fn cell_angle(i: usize, res: usize) -> f64 {
    -PI + (i as f64 + 0.5) * 2.0 * PI / res as f64
}

/// Collision flags on a `res x res` grid over `[-pi, pi)^2`, row-major in `q1`.
pub fn collision_grid(model: &TwoLinkArm, obstacles: &[TaskCircle], res: usize) -> Vec<bool> {
    (0..res)
        .into_par_iter()
        .flat_map_iter(|i| {
            (0..res).map(move |j| {
                arm_collides(
                    model,
                    &Vector2::new(cell_angle(i, res), cell_angle(j, res)),
                    obstacles,
                )
            })
        })
        .collect()
}

/// Welzl's smallest enclosing circle, iterative form on a shuffled copy.
pub fn min_enclosing_circle(points: &[Vector2<f64>]) -> (Vector2<f64>, f64) {
    let mut p = points.to_vec();
    p.shuffle(&mut ChaCha8Rng::seed_from_u64(0));
    let eps = 1e-12;
    let inside = |c: &Vector2<f64>, r: f64, q: &Vector2<f64>| (q - c).norm() <= r + eps;
    let mut c = match p.first() {
        Some(q) => *q,
        None => return (Vector2::zeros(), 0.0),
    };
    let mut r = 0.0;
    for i in 1..p.len() {
        if inside(&c, r, &p[i]) {
            continue;
        }
        c = p[i];
        r = 0.0;
        for j in 0..i {
            if inside(&c, r, &p[j]) {
                continue;
            }
            c = (p[i] + p[j]) * 0.5;
            r = (p[i] - c).norm();
            for k in 0..j {
                if inside(&c, r, &p[k]) {
                    continue;
                }
                (c, r) = circumcircle(&p[i], &p[j], &p[k]);
            }
        }
    }
    (c, r)
}

fn circumcircle(a: &Vector2<f64>, b: &Vector2<f64>, c: &Vector2<f64>) -> (Vector2<f64>, f64) {
    let (bx, by) = (b[0] - a[0], b[1] - a[1]);
    let (cx, cy) = (c[0] - a[0], c[1] - a[1]);
    let d = 2.0 * (bx * cy - by * cx);
    if d.abs() < 1e-300 {
        // collinear: the farthest pair spans the circle
        let pairs = [(a, b), (a, c), (b, c)];
        let (p, q) = pairs
            .iter()
            .max_by(|x, y| (x.0 - x.1).norm().total_cmp(&(y.0 - y.1).norm()))
            .unwrap();
        let center = (*p + *q) * 0.5;
        return (center, (*p - center).norm());
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    let center = Vector2::new(a[0] + ux, a[1] + uy);
    (center, (ux * ux + uy * uy).sqrt())
}

/// Colliding grid cells grouped into connected components on the torus.
///
/// Cells are returned with unwrapped integer coordinates so that each
/// component is contiguous in the plane.
fn components(grid: &[bool], res: usize) -> Result<Vec<Vec<(i64, i64)>>, CspaceError> {
    let n = res as i64;
    let mut seen: Vec<Option<(i64, i64)>> = vec![None; grid.len()];
    let mut out = Vec::new();
    for start in 0..grid.len() {
        if !grid[start] || seen[start].is_some() {
            continue;
        }
        let s = ((start / res) as i64, (start % res) as i64);
        seen[start] = Some(s);
        let mut queue = VecDeque::from([s]);
        let mut cells = Vec::new();
        while let Some((i, j)) = queue.pop_front() {
            cells.push((i, j));
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (ui, uj) = (i + di, j + dj);
                let idx = (ui.rem_euclid(n) * n + uj.rem_euclid(n)) as usize;
                if !grid[idx] {
                    continue;
                }
                match seen[idx] {
                    Some(prev) if prev != (ui, uj) => return Err(CspaceError::WrapsTorus),
                    Some(_) => {}
                    None => {
                        seen[idx] = Some((ui, uj));
                        queue.push_back((ui, uj));
                    }
                }
            }
        }
        out.push(cells);
    }
    Ok(out)
}

/// Joint-space circles covering every configuration in which an arm link
/// touches one of the task-space discs.
pub fn workspace_to_joint_obstacles(
    model: &TwoLinkArm,
    obstacles: &[TaskCircle],
    res: usize,
) -> Result<Vec<JointCircle>, CspaceError> {
    if res < 8 {
        return Err(CspaceError::Resolution(res));
    }
    let grid = collision_grid(model, obstacles, res);
    let h = 2.0 * PI / res as f64;
    components(&grid, res).map(|comps| {
        comps
            .into_iter()
            .map(|cells| {
                let pts: Vec<_> = cells
                    .iter()
                    .map(|&(i, j)| {
                        Vector2::new(-PI + (i as f64 + 0.5) * h, -PI + (j as f64 + 0.5) * h)
                    })
                    .collect();
                let (center, r) = min_enclosing_circle(&pts);
                JointCircle {
                    center,
                    radius: (1.0 + INFLATION) * (r + h * std::f64::consts::FRAC_1_SQRT_2),
                }
            })
            .collect()
    })
}

/// Fraction of grid-colliding configurations covered by `circles`.
pub fn coverage(
    model: &TwoLinkArm,
    obstacles: &[TaskCircle],
    circles: &[JointCircle],
    res: usize,
) -> f64 {
    let grid = collision_grid(model, obstacles, res);
    let mut hit = 0usize;
    let mut covered = 0usize;
    for (idx, &c) in grid.iter().enumerate() {
        if !c {
            continue;
        }
        hit += 1;
        let q = Vector2::new(cell_angle(idx / res, res), cell_angle(idx % res, res));
        if circles.iter().any(|k| k.contains(&q)) {
            covered += 1;
        }
    }
    if hit == 0 {
        1.0
    } else {
        covered as f64 / hit as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unreachable_obstacle_maps_to_nothing() {
        let arm = TwoLinkArm::default();
        let obs = [TaskCircle {
            center: Vector2::new(10.0, 10.0),
            radius: 0.2,
        }];
        assert!(workspace_to_joint_obstacles(&arm, &obs, 64)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn obstacle_at_stretched_end_effector_contains_zero_configuration() {
        let arm = TwoLinkArm::default();
        let obs = [TaskCircle {
            center: Vector2::new(2.0, 0.0),
            radius: 0.2,
        }];
        let circles = workspace_to_joint_obstacles(&arm, &obs, 128).unwrap();
        assert!(circles.iter().any(|c| c.contains(&Vector2::zeros())));
    }

    #[test]
    fn circles_cover_colliding_grid() {
        let arm = TwoLinkArm::default();
        let obs = [TaskCircle {
            center: Vector2::new(1.35, 0.05),
            radius: 0.2,
        }];
        let circles = workspace_to_joint_obstacles(&arm, &obs, 128).unwrap();
        assert!(!circles.is_empty());
        assert!(coverage(&arm, &obs, &circles, 128) >= 0.99);
        assert!(coverage(&arm, &obs, &circles, 300) >= 0.99);
    }

    #[test]
    fn obstacle_over_the_base_wraps_the_torus() {
        let arm = TwoLinkArm::default();
        let obs = [TaskCircle {
            center: Vector2::new(0.0, 0.0),
            radius: 0.3,
        }];
        assert_eq!(
            workspace_to_joint_obstacles(&arm, &obs, 32),
            Err(CspaceError::WrapsTorus)
        );
        assert_eq!(
            workspace_to_joint_obstacles(&arm, &obs, 4),
            Err(CspaceError::Resolution(4))
        );
    }

    #[test]
    fn enclosing_circle_of_square() {
        let pts = [
            Vector2::new(0.0, 0.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(0.0, 1.0),
            Vector2::new(1.0, 1.0),
            Vector2::new(0.5, 0.5),
        ];
        let (c, r) = min_enclosing_circle(&pts);
        assert!((c - Vector2::new(0.5, 0.5)).norm() < 1e-12);
        assert!((r - 0.5f64.sqrt()).abs() < 1e-12);
    }
}
