//! Trajectory logs, run summaries and their CSV / JSON exports.

use std::io::Write;

use serde::Serialize;

/// One logged step.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub state: Vec<f64>,
    pub control: Vec<f64>,
    pub rho: f64,
    pub psi: f64,
    /// Distance to each unsafe-set boundary; negative inside.
    pub clearances: Vec<f64>,
    pub saturated: bool,
    pub in_workspace: bool,
    pub extra: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub converged: bool,
    /// Start of the stretch inside the convergence ball that satisfied the hold time.
    pub time_to_converge: Option<f64>,
    /// Minimum clearance over every integration step; `None` without obstacles.
    pub min_clearance: Option<f64>,
    pub safety_violation: bool,
    pub left_workspace: bool,
    /// Sum of `|u_k - u_(k-1)|` over integration steps.
    pub control_total_variation: f64,
    /// Accumulated absolute heading change while moving, before first arrival.
    pub heading_total_variation: Option<f64>,
    pub max_abs_control: f64,
    pub min_rho: f64,
    pub min_psi: f64,
    pub final_time: f64,
    pub final_state: Vec<f64>,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub state_labels: Vec<String>,
    pub control_labels: Vec<String>,
    pub clearance_labels: Vec<String>,
    pub extra_labels: Vec<String>,
    pub rows: Vec<LogRow>,
    pub summary: Summary,
}

impl TrajectoryLog {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend(self.state_labels.iter().cloned());
        h.extend(self.control_labels.iter().cloned());
        h.push("rho".into());
        h.push("psi".into());
        h.extend(self.clearance_labels.iter().cloned());
        h.push("saturated".into());
        h.push("in_workspace".into());
        h.extend(self.extra_labels.iter().cloned());
        h
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.header())?;
        for r in &self.rows {
            let mut rec = vec![r.t.to_string()];
            rec.extend(r.state.iter().map(f64::to_string));
            rec.extend(r.control.iter().map(f64::to_string));
            rec.push(r.rho.to_string());
            rec.push(r.psi.to_string());
            rec.extend(r.clearances.iter().map(f64::to_string));
            rec.push(u8::from(r.saturated).to_string());
            rec.push(u8::from(r.in_workspace).to_string());
            rec.extend(r.extra.iter().map(f64::to_string));
            out.write_record(rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn min_logged_clearance(&self) -> Option<f64> {
        self.rows
            .iter()
            .flat_map(|r| r.clearances.iter().copied())
            .min_by(f64::total_cmp)
    }
}

/// Accumulates the summary while a run advances.
#[derive(Debug, Clone)]
pub(crate) struct Monitor {
    radius: f64,
    hold: f64,
    entered: Option<f64>,
    arrived_once: bool,
    pub converged_at: Option<f64>,
    min_clearance: Option<f64>,
    left_workspace: bool,
    control_tv: f64,
    last_control: Option<Vec<f64>>,
    heading_tv: Option<f64>,
    last_heading: Option<f64>,
    max_abs_control: f64,
    min_rho: f64,
    min_psi: f64,
    steps: usize,
}

/// Speeds below this do not define a heading.
pub const HEADING_SPEED_FLOOR: f64 = 1e-3;

impl Monitor {
    pub fn new(radius: f64, hold: f64, track_heading: bool) -> Self {
        Self {
            radius,
            hold,
            entered: None,
            arrived_once: false,
            converged_at: None,
            min_clearance: None,
            left_workspace: false,
            control_tv: 0.0,
            last_control: None,
            heading_tv: track_heading.then_some(0.0),
            last_heading: None,
            max_abs_control: 0.0,
            min_rho: f64::INFINITY,
            min_psi: f64::INFINITY,
            steps: 0,
        }
    }

    /// Record one integration step.
    #[allow(clippy::too_many_arguments)]
    pub fn observe(
        &mut self,
        t: f64,
        distance_to_target: f64,
        clearances: &[f64],
        control: &[f64],
        heading: Option<(f64, f64)>,
        rho: f64,
        psi: f64,
        in_workspace: bool,
    ) {
        self.steps += 1;
        for &c in clearances {
            self.min_clearance = Some(self.min_clearance.map_or(c, |m: f64| m.min(c)));
        }
        self.left_workspace |= !in_workspace;
        if let Some(prev) = &self.last_control {
            self.control_tv += prev
                .iter()
                .zip(control)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
        }
        self.last_control = Some(control.to_vec());
        self.max_abs_control = control
            .iter()
            .fold(self.max_abs_control, |m, v| m.max(v.abs()));
        self.min_rho = self.min_rho.min(rho);
        self.min_psi = self.min_psi.min(psi);

        let inside = distance_to_target <= self.radius;
        if inside {
            self.arrived_once = true;
        }
        if let (Some(tv), Some((angle, speed))) = (self.heading_tv.as_mut(), heading) {
            if !self.arrived_once && speed > HEADING_SPEED_FLOOR {
                if let Some(prev) = self.last_heading {
                    *tv += crate::density::wrap_angle(angle - prev).abs();
                }
                self.last_heading = Some(angle);
            }
        }
        if self.converged_at.is_none() {
            if inside {
                let start = *self.entered.get_or_insert(t);
                if t - start >= self.hold - 1e-9 {
                    self.converged_at = Some(start);
                }
            } else {
                self.entered = None;
            }
        }
    }

    pub fn converged(&self) -> bool {
        self.converged_at.is_some()
    }

    pub fn finish(self, final_time: f64, final_state: Vec<f64>) -> Summary {
        Summary {
            converged: self.converged_at.is_some(),
            time_to_converge: self.converged_at,
            min_clearance: self.min_clearance,
            safety_violation: self.min_clearance.is_some_and(|c| c <= 0.0),
            left_workspace: self.left_workspace,
            control_total_variation: self.control_tv,
            heading_total_variation: self.heading_tv,
            max_abs_control: self.max_abs_control,
            min_rho: self.min_rho,
            min_psi: self.min_psi,
            final_time,
            final_state,
            steps: self.steps,
        }
    }
}
