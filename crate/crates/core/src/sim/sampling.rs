//! Monte-Carlo occupancy estimates and almost-everywhere convergence sampling.

use std::io::Write;

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{simulate_from, Bounds, SimError, SingleScenario};

/// Rejection sampling gives up after this many draws per requested sample.
const MAX_DRAWS_PER_SAMPLE: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum InitialSet {
    Point { at: [f64; 2] },
    Box { bounds: Bounds },
}

impl InitialSet {
    /// Lebesgue measure, taken as 1 for a single point.
    pub fn volume(&self) -> f64 {
        match self {
            InitialSet::Point { .. } => 1.0,
            InitialSet::Box { bounds } => bounds.area(),
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Vector2<f64> {
        match self {
            InitialSet::Point { at } => Vector2::new(at[0], at[1]),
            InitialSet::Box { bounds } => Vector2::new(
                rng.random_range(bounds.lo[0]..=bounds.hi[0]),
                rng.random_range(bounds.lo[1]..=bounds.hi[1]),
            ),
        }
    }
}

/// Set whose occupancy is measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Region {
    /// Union of the obstacles' unsafe discs.
    UnsafeSet,
    Ball {
        center: [f64; 2],
        radius: f64,
    },
    Box {
        bounds: Bounds,
    },
    Everywhere,
}

impl Region {
    fn contains(&self, sc: &SingleScenario, t: f64, x: &Vector2<f64>) -> bool {
        match self {
            Region::UnsafeSet => in_unsafe(sc, t, x),
            Region::Ball { center, radius } => {
                (x - Vector2::new(center[0], center[1])).norm() <= *radius
            }
            Region::Box { bounds } => bounds.contains(x),
            Region::Everywhere => true,
        }
    }
}

fn in_unsafe(sc: &SingleScenario, t: f64, x: &Vector2<f64>) -> bool {
    sc.field.clearances(t, x).iter().any(|c| *c <= 0.0)
}

/// Time spent per cell, averaged over samples and scaled by the initial volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    pub bounds: Bounds,
    pub nx: usize,
    pub ny: usize,
    /// Row-major with `y` rows from `lo[1]` upwards.
    pub cells: Vec<f64>,
}

impl OccupancyGrid {
    pub fn new(bounds: Bounds, nx: usize, ny: usize) -> Self {
        Self {
            bounds,
            nx,
            ny,
            cells: vec![0.0; nx * ny],
        }
    }

    fn index(&self, x: &Vector2<f64>) -> Option<usize> {
        if !self.bounds.contains(x) {
            return None;
        }
        let fx = (x[0] - self.bounds.lo[0]) / (self.bounds.hi[0] - self.bounds.lo[0]);
        let fy = (x[1] - self.bounds.lo[1]) / (self.bounds.hi[1] - self.bounds.lo[1]);
        let i = ((fx * self.nx as f64) as usize).min(self.nx - 1);
        let j = ((fy * self.ny as f64) as usize).min(self.ny - 1);
        Some(j * self.nx + i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cells[j * self.nx + i]
    }

    /// One CSV line per `y` row, no header.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for row in self.cells.chunks(self.nx) {
            out.write_record(row.iter().map(f64::to_string))?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OccupancyEstimate {
    pub samples: usize,
    /// Estimated occupancy of the requested region.
    pub total: f64,
    /// Standard error of `total`; `None` for a single sample.
    pub std_error: Option<f64>,
    /// Occupancy of the unsafe set, from the same trajectories.
    pub unsafe_occupancy: f64,
    /// Integration steps that ended inside an unsafe set.
    pub unsafe_steps: usize,
    pub grid: Option<OccupancyGrid>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AeReport {
    pub samples: usize,
    pub converged: usize,
    pub fraction: f64,
    /// Initial conditions that did not converge.
    pub failures: Vec<[f64; 2]>,
}

/// Initial conditions drawn from `initial`, rejecting points inside an unsafe set.
pub fn sample_initial(
    sc: &SingleScenario,
    initial: &InitialSet,
    n: usize,
    seed: u64,
) -> Result<Vec<Vector2<f64>>, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut draws = 0;
    while out.len() < n {
        if draws >= MAX_DRAWS_PER_SAMPLE * n {
            return Err(SimError::Invalid(
                "initial set lies almost entirely inside unsafe sets".into(),
            ));
        }
        draws += 1;
        let x = initial.draw(&mut rng);
        if !in_unsafe(sc, 0.0, &x) {
            out.push(x);
        }
    }
    Ok(out)
}

struct Tally {
    region: f64,
    unsafe_time: f64,
    unsafe_steps: usize,
    cells: Vec<f64>,
}

/// Monte-Carlo estimate of the occupancy of `region`: mean over sampled
/// initial conditions of the time spent in it, times the volume of the
/// initial set. Each integration step before the last contributes `dt`.
pub fn estimate_occupancy(
    sc: &SingleScenario,
    initial: &InitialSet,
    region: &Region,
    n: usize,
    seed: u64,
    grid: Option<OccupancyGrid>,
) -> Result<OccupancyEstimate, SimError> {
    if n == 0 {
        return Err(SimError::Invalid("need at least one sample".into()));
    }
    sc.integration.validate()?;
    let starts = sample_initial(sc, initial, n, seed)?;
    let dt = sc.integration.dt;
    let tallies = starts
        .par_iter()
        .map(|x0| {
            let mut tally = Tally {
                region: 0.0,
                unsafe_time: 0.0,
                unsafe_steps: 0,
                cells: grid
                    .as_ref()
                    .map_or_else(Vec::new, |g| vec![0.0; g.cells.len()]),
            };
            // weights are applied one step late so the final state adds nothing
            let mut pending: Option<(bool, bool, Option<usize>)> = None;
            simulate_from(sc, *x0, |t, x| {
                if let Some((r, u, c)) = pending.take() {
                    tally.region += if r { dt } else { 0.0 };
                    tally.unsafe_time += if u { dt } else { 0.0 };
                    if let Some(c) = c {
                        tally.cells[c] += dt;
                    }
                }
                let u = in_unsafe(sc, t, x);
                tally.unsafe_steps += usize::from(u);
                pending = Some((
                    region.contains(sc, t, x),
                    u,
                    grid.as_ref().and_then(|g| g.index(x)),
                ));
            })?;
            Ok(tally)
        })
        .collect::<Result<Vec<_>, SimError>>()?;

    let vol = initial.volume();
    let values: Vec<f64> = tallies.iter().map(|t| t.region * vol).collect();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std_error = (n > 1).then(|| {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    });
    let grid = grid.map(|mut g| {
        for t in &tallies {
            for (c, v) in g.cells.iter_mut().zip(&t.cells) {
                *c += v * vol / n as f64;
            }
        }
        g
    });
    Ok(OccupancyEstimate {
        samples: n,
        total: mean,
        std_error,
        unsafe_occupancy: tallies.iter().map(|t| t.unsafe_time).sum::<f64>() * vol / n as f64,
        unsafe_steps: tallies.iter().map(|t| t.unsafe_steps).sum(),
        grid,
    })
}

/// Fraction of sampled initial conditions whose runs converge.
pub fn ae_convergence_sample(
    sc: &SingleScenario,
    initial: &InitialSet,
    n: usize,
    seed: u64,
) -> Result<AeReport, SimError> {
    if n == 0 {
        return Err(SimError::Invalid("need at least one sample".into()));
    }
    sc.integration.validate()?;
    let starts = sample_initial(sc, initial, n, seed)?;
    let results = starts
        .par_iter()
        .map(|x0| simulate_from(sc, *x0, |_, _| {}).map(|l| (*x0, l.summary.converged)))
        .collect::<Result<Vec<_>, SimError>>()?;
    let failures: Vec<[f64; 2]> = results
        .iter()
        .filter(|r| !r.1)
        .map(|r| [r.0[0], r.0[1]])
        .collect();
    let converged = n - failures.len();
    Ok(AeReport {
        samples: n,
        converged,
        fraction: converged as f64 / n as f64,
        failures,
    })
}
