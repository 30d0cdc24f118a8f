//! Synchronous multi-agent simulation.
//!
//! Every agent state is packed into a `Vector4`: `(x, y, 0, 0)` for single
//! integrators, `(x, y, delta, 0)` for unicycles and `(x, y, vx, vy)` for
//! double integrators.

use nalgebra::{Vector2, Vector4};
use serde::{Deserialize, Serialize};

use super::log::Monitor;
use super::{Bounds, Integration, LogRow, Monitors, SimError, TrajectoryLog};
use crate::control::{
    backstepping_control, gradient_control, saturate, sfm_control, ControlCommand, DiscAgent,
    HeadingTracker, SfmParams,
};
use crate::density::{agent_field, AgentSpec, AgentState, FieldError};
use crate::ode::rk4_step;
use crate::robots::{double_integrator, unicycle};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "law")]
pub enum SecondOrderLaw {
    Backstepping { gain: f64 },
    Sfm(SfmParams),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum AgentModel {
    SingleIntegrator,
    Unicycle { heading_gain: f64 },
    DoubleIntegrator { law: SecondOrderLaw },
}

impl AgentModel {
    fn state_labels(&self) -> Vec<String> {
        let l: &[&str] = match self {
            AgentModel::SingleIntegrator => &["x", "y"],
            AgentModel::Unicycle { .. } => &["x", "y", "delta"],
            AgentModel::DoubleIntegrator { .. } => &["x", "y", "vx", "vy"],
        };
        l.iter().map(|s| s.to_string()).collect()
    }

    fn control_labels(&self) -> Vec<String> {
        let l: &[&str] = match self {
            AgentModel::SingleIntegrator => &["ux", "uy"],
            AgentModel::Unicycle { .. } => &["v", "omega"],
            AgentModel::DoubleIntegrator { .. } => &["ax", "ay"],
        };
        l.iter().map(|s| s.to_string()).collect()
    }

    fn state_dim(&self) -> usize {
        self.state_labels().len()
    }
}

#[derive(Debug, Clone)]
pub struct MultiAgentScenario {
    pub agents: Vec<AgentSpec<2>>,
    pub initial: Vec<Vector2<f64>>,
    /// Initial unicycle headings; defaults to facing each agent's target.
    pub initial_headings: Option<Vec<f64>>,
    pub model: AgentModel,
    pub u_max: Option<f64>,
    pub integration: Integration,
    pub monitors: Monitors,
    pub bounds: Option<Bounds>,
}

impl MultiAgentScenario {
    pub fn validate(&self) -> Result<(), SimError> {
        self.integration.validate()?;
        let n = self.agents.len();
        if n == 0 || self.initial.len() != n {
            return Err(SimError::Invalid(format!(
                "{} agents but {} initial positions",
                n,
                self.initial.len()
            )));
        }
        if let Some(h) = &self.initial_headings {
            if h.len() != n {
                return Err(SimError::Invalid(format!(
                    "{} agents but {} initial headings",
                    n,
                    h.len()
                )));
            }
        }
        if let Some(u) = self.u_max {
            if !(u > 0.0) {
                return Err(SimError::Invalid(format!(
                    "u_max must be positive, got {u}"
                )));
            }
        }
        for (j, a) in self.agents.iter().enumerate() {
            if !(a.radius > 0.0 && a.sensing_radius > a.radius && a.theta > 0.0 && a.theta < 1.0) {
                return Err(SimError::Invalid(format!(
                    "agent {j}: need 0 < r < s and 0 < theta < 1, got r = {}, s = {}, theta = {}",
                    a.radius, a.sensing_radius, a.theta
                )));
            }
        }
        for i in 0..n {
            for k in i + 1..n {
                let gap = (self.initial[i] - self.initial[k]).norm()
                    - self.agents[i].radius
                    - self.agents[k].radius;
                if gap <= 0.0 {
                    return Err(SimError::Invalid(format!(
                        "agents {i} and {k} start in collision"
                    )));
                }
            }
        }
        match self.model {
            AgentModel::Unicycle { heading_gain } if !(heading_gain > 0.0) => {
                Err(SimError::Invalid("heading gain must be positive".into()))
            }
            AgentModel::DoubleIntegrator {
                law: SecondOrderLaw::Backstepping { gain },
            } if !(gain > 0.0) => Err(SimError::Invalid(
                "backstepping gain must be positive".into(),
            )),
            AgentModel::DoubleIntegrator {
                law: SecondOrderLaw::Sfm(p),
            } => p.validate().map_err(SimError::Invalid),
            _ => Ok(()),
        }
    }
}

/// Per-agent logs plus joint metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiAgentLog {
    pub agents: Vec<TrajectoryLog>,
    /// Minimum over steps and pairs of centre distance minus both radii.
    pub min_pairwise_clearance: f64,
    pub all_converged: bool,
    /// Time at which the last agent's convergence was confirmed.
    pub time_all_converged: Option<f64>,
}

impl MultiAgentLog {
    pub fn safety_violation(&self) -> bool {
        self.min_pairwise_clearance <= 0.0
    }
}

/// Planar command of every agent, computed from one snapshot.
///
/// First-order models return a velocity and double integrators an
/// acceleration. Density-based laws only see neighbours whose sensing
/// region contains the agent.
pub fn multiagent_step(
    agents: &[AgentSpec<2>],
    states: &[AgentState<2>],
    t: f64,
    model: &AgentModel,
    u_max: Option<f64>,
) -> Result<Vec<ControlCommand<2>>, FieldError> {
    (0..agents.len())
        .map(|j| {
            let x = &states[j].position;
            let cmd = match model {
                AgentModel::SingleIntegrator | AgentModel::Unicycle { .. } => {
                    gradient_control(&agent_field(agents, states, j, t)?, t, x)
                }
                AgentModel::DoubleIntegrator {
                    law: SecondOrderLaw::Backstepping { gain },
                } => backstepping_control(
                    &agent_field(agents, states, j, t)?,
                    t,
                    x,
                    &states[j].velocity,
                    *gain,
                ),
                AgentModel::DoubleIntegrator {
                    law: SecondOrderLaw::Sfm(p),
                } => {
                    let disc = |k: usize| DiscAgent {
                        position: states[k].position,
                        velocity: states[k].velocity,
                        radius: agents[k].radius,
                    };
                    let others: Vec<_> = (0..agents.len()).filter(|&k| k != j).map(disc).collect();
                    sfm_control(&disc(j), &others, p, &agents[j].target)
                }
            };
            Ok(match u_max {
                Some(m) => saturate(cmd, m),
                None => cmd,
            })
        })
        .collect()
}

fn snapshot(model: &AgentModel, x: &[Vector4<f64>], planar: &[Vector2<f64>]) -> Vec<AgentState<2>> {
    x.iter()
        .zip(planar)
        .map(|(s, p)| AgentState {
            position: Vector2::new(s[0], s[1]),
            velocity: match model {
                AgentModel::DoubleIntegrator { .. } => Vector2::new(s[2], s[3]),
                _ => *p,
            },
        })
        .collect()
}

pub fn simulate_multi(sc: &MultiAgentScenario) -> Result<MultiAgentLog, SimError> {
    sc.validate()?;
    let n = sc.agents.len();
    let dt = sc.integration.dt;
    let steps = sc.integration.steps();
    let model = sc.model;
    let dim = model.state_dim();

    let mut x: Vec<Vector4<f64>> = (0..n)
        .map(|j| {
            let p = sc.initial[j];
            let extra = match model {
                AgentModel::Unicycle { .. } => {
                    let to = sc.agents[j].target - p;
                    sc.initial_headings
                        .as_ref()
                        .map_or(to[1].atan2(to[0]), |h| h[j])
                }
                _ => 0.0,
            };
            Vector4::new(p[0], p[1], extra, 0.0)
        })
        .collect();
    // planar velocity of first-order agents, as seen by their neighbours
    let mut planar = vec![Vector2::zeros(); n];
    let mut trackers = vec![HeadingTracker::new(); n];
    let mut monitors: Vec<_> = (0..n)
        .map(|_| {
            Monitor::new(
                sc.monitors.convergence_radius,
                sc.monitors.convergence_hold,
                true,
            )
        })
        .collect();
    let mut rows: Vec<Vec<LogRow>> = vec![Vec::new(); n];
    let mut min_pair = f64::INFINITY;
    let mut t = 0.0;
    let hold = sc.u_max.is_some() || matches!(model, AgentModel::Unicycle { .. });

    for i in 0..=steps {
        t = i as f64 * dt;
        if let Some(j) = x.iter().position(|s| !s.iter().all(|v| v.is_finite())) {
            return Err(SimError::NonFinite { step: i, agent: j });
        }
        let states = snapshot(&model, &x, &planar);
        let cmds = multiagent_step(&sc.agents, &states, t, &model, sc.u_max)?;
        let applied: Vec<Vector2<f64>> = match model {
            AgentModel::Unicycle { heading_gain } => (0..n)
                .map(|j| {
                    let st = crate::control::UnicycleState::new(x[j][0], x[j][1], x[j][2]);
                    let (v, w) = trackers[j].command(&st, &cmds[j].u, heading_gain, dt);
                    Vector2::new(v, w)
                })
                .collect(),
            _ => cmds.iter().map(|c| c.u).collect(),
        };

        for j in 0..n {
            let field = agent_field(&sc.agents, &states, j, t)?;
            let e = field.eval(t, &states[j].position);
            let clear: Vec<f64> = (0..n)
                .filter(|&k| k != j)
                .map(|k| {
                    (states[j].position - states[k].position).norm()
                        - sc.agents[j].radius
                        - sc.agents[k].radius
                })
                .collect();
            min_pair = clear.iter().fold(min_pair, |m, c| m.min(*c));
            let heading = match model {
                AgentModel::Unicycle { .. } => (x[j][2], applied[j][0].abs()),
                AgentModel::DoubleIntegrator { .. } => (
                    x[j][3].atan2(x[j][2]),
                    Vector2::new(x[j][2], x[j][3]).norm(),
                ),
                AgentModel::SingleIntegrator => {
                    (applied[j][1].atan2(applied[j][0]), applied[j].norm())
                }
            };
            let inside = sc.bounds.is_none_or(|b| b.contains(&states[j].position));
            monitors[j].observe(
                t,
                (states[j].position - sc.agents[j].target).norm(),
                &clear,
                applied[j].as_slice(),
                Some(heading),
                e.rho,
                e.psi,
                inside,
            );
            rows[j].push(LogRow {
                t,
                state: x[j].iter().take(dim).copied().collect(),
                control: applied[j].iter().copied().collect(),
                rho: e.rho,
                psi: e.psi,
                clearances: clear,
                saturated: cmds[j].saturated,
                in_workspace: inside,
                extra: vec![],
            });
        }
        let all = monitors.iter().all(Monitor::converged);
        let stop = i == steps || (sc.monitors.stop_on_convergence && all);
        let keep = i % sc.integration.log_every == 0 || stop;
        if !keep {
            for r in rows.iter_mut() {
                r.pop();
            }
        }
        if stop {
            break;
        }

        for j in 0..n {
            planar[j] = match model {
                AgentModel::Unicycle { .. } => {
                    Vector2::new(x[j][2].cos(), x[j][2].sin()) * applied[j][0]
                }
                _ => cmds[j].u,
            };
        }
        x = if hold {
            let held = applied.clone();
            rk4_step(
                &mut |_, y: &Vec<Vector4<f64>>| {
                    y.iter()
                        .zip(&held)
                        .map(|(s, u)| derivative(&model, s, u))
                        .collect()
                },
                t,
                &x,
                dt,
            )
        } else {
            let planar_now = planar.clone();
            let mut failure = None;
            let next = rk4_step(
                &mut |s, y: &Vec<Vector4<f64>>| {
                    let st = snapshot(&model, y, &planar_now);
                    match multiagent_step(&sc.agents, &st, s, &model, None) {
                        Ok(c) => y
                            .iter()
                            .zip(&c)
                            .map(|(yj, cj)| derivative(&model, yj, &cj.u))
                            .collect(),
                        Err(e) => {
                            failure.get_or_insert(e);
                            vec![Vector4::zeros(); y.len()]
                        }
                    }
                },
                t,
                &x,
                dt,
            );
            if let Some(e) = failure {
                return Err(e.into());
            }
            next
        };
        if matches!(model, AgentModel::Unicycle { .. }) {
            for s in x.iter_mut() {
                s[2] = crate::density::wrap_angle(s[2]);
            }
        }
    }

    let time_all_converged = monitors
        .iter()
        .map(|m| m.converged_at)
        .try_fold(0.0f64, |acc, c| c.map(|c| acc.max(c)));
    let agents = monitors
        .into_iter()
        .zip(rows)
        .enumerate()
        .map(|(j, (m, rows))| TrajectoryLog {
            state_labels: model.state_labels(),
            control_labels: model.control_labels(),
            clearance_labels: (0..n)
                .filter(|&k| k != j)
                .map(|k| format!("d_{}", k + 1))
                .collect(),
            extra_labels: vec![],
            rows,
            summary: m.finish(t, x[j].iter().take(dim).copied().collect()),
        })
        .collect::<Vec<_>>();
    Ok(MultiAgentLog {
        all_converged: agents.iter().all(|a| a.summary.converged),
        agents,
        min_pairwise_clearance: min_pair,
        time_all_converged,
    })
}

fn derivative(model: &AgentModel, s: &Vector4<f64>, u: &Vector2<f64>) -> Vector4<f64> {
    match model {
        AgentModel::SingleIntegrator => {
            let v = crate::robots::single_integrator(u);
            Vector4::new(v[0], v[1], 0.0, 0.0)
        }
        AgentModel::Unicycle { .. } => {
            let d = unicycle(&s.xyz(), u[0], u[1]);
            Vector4::new(d[0], d[1], d[2], 0.0)
        }
        AgentModel::DoubleIntegrator { .. } => double_integrator(s, u),
    }
}
