//! TOML scenario files and the bundled case-study configurations.

use std::path::Path as FsPath;

use log::warn;
use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::certify::{CertifyGrid, LiouvilleSettings};
use crate::control::SfmParams;
use crate::density::{AgentSpec, DensityField, DistanceFn, Mode, DEFAULT_DELTA, DEFAULT_KAPPA};
use crate::path::Path;
use crate::robots::{TaskCircle, TwoLinkArm};
use crate::sim::{
    AgentModel, ArmScenario, Bounds, InitialSet, Integration, Monitors, MultiAgentScenario,
    OccupancyGrid, Region, SecondOrderLaw, SingleScenario,
};
use crate::smoothfn::{BumpShape, ObstacleSpec};

/// Prefix selecting a bundled configuration instead of a file.
pub const BUNDLED_PREFIX: &str = "bundled:";

/// Name and TOML text of every bundled scenario.
pub const BUNDLED: &[(&str, &str)] = &[
    (
        "dynamic_obstacles",
        include_str!("../configs/dynamic_obstacles.toml"),
    ),
    (
        "static_example",
        include_str!("../configs/static_example.toml"),
    ),
    (
        "static_example_wide",
        include_str!("../configs/static_example_wide.toml"),
    ),
    (
        "intersection6",
        include_str!("../configs/intersection6.toml"),
    ),
    (
        "intersection6_large",
        include_str!("../configs/intersection6_large.toml"),
    ),
    ("sfm_swap", include_str!("../configs/sfm_swap.toml")),
    ("arm_tracking", include_str!("../configs/arm_tracking.toml")),
    (
        "fig1_occupancy",
        include_str!("../configs/fig1_occupancy.toml"),
    ),
    (
        "obstacle_free",
        include_str!("../configs/obstacle_free.toml"),
    ),
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("unknown bundled config `{0}`")]
    UnknownBundled(String),
    #[error("{0}")]
    Parse(String),
    #[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid {
        line: Option<usize>,
        message: String,
    },
}

fn default_alpha() -> f64 {
    0.2
}
fn default_beta() -> f64 {
    10.0
}
fn default_theta() -> f64 {
    0.05
}
fn default_kappa() -> f64 {
    DEFAULT_KAPPA
}
fn default_delta() -> f64 {
    DEFAULT_DELTA
}
fn default_samples() -> usize {
    100
}
fn default_grid() -> usize {
    200
}
fn default_times() -> usize {
    50
}
fn default_true() -> bool {
    true
}

/// Planar curve in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum PathConfig {
    Static {
        at: [f64; 2],
    },
    Linear {
        origin: [f64; 2],
        velocity: [f64; 2],
    },
    Sinusoid {
        origin: [f64; 2],
        #[serde(default)]
        velocity: [f64; 2],
        amplitude: [f64; 2],
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    Circle {
        center: [f64; 2],
        radius: f64,
        rate: f64,
        #[serde(default)]
        phase: f64,
    },
}

fn v2(a: [f64; 2]) -> Vector2<f64> {
    Vector2::new(a[0], a[1])
}

impl PathConfig {
    pub fn to_path(&self) -> Path<2> {
        match *self {
            PathConfig::Static { at } => Path::fixed(v2(at)),
            PathConfig::Linear { origin, velocity } => Path::Linear {
                origin: v2(origin),
                velocity: v2(velocity),
            },
            PathConfig::Sinusoid {
                origin,
                velocity,
                amplitude,
                frequency,
                phase,
            } => Path::Sinusoid {
                origin: v2(origin),
                velocity: v2(velocity),
                amplitude: v2(amplitude),
                frequency,
                phase,
            },
            PathConfig::Circle {
                center,
                radius,
                rate,
                phase,
            } => Path::Circle {
                center: v2(center),
                radius,
                rate,
                phase,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleConfig {
    pub center: PathConfig,
    pub radius: f64,
    pub sensing_radius: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleConfig {
    pub start: [f64; 2],
    pub target: PathConfig,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
    #[serde(default)]
    pub obstacles: Vec<ObstacleConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub start: [f64; 2],
    pub target: [f64; 2],
    pub radius: f64,
    pub sensing_radius: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading: Option<f64>,
}

/// Parameters of the second run in `compare-sfm`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub gain: f64,
    #[serde(default)]
    pub sfm: SfmParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiConfig {
    pub model: AgentModel,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,
    #[serde(default)]
    pub reciprocal_distance: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Bounds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareConfig>,
    pub agents: Vec<AgentConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmConfig {
    #[serde(default)]
    pub model: TwoLinkArm,
    pub target: PathConfig,
    #[serde(default = "default_theta")]
    pub theta: f64,
    pub sensing_margin: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_true")]
    pub feedforward: bool,
    pub kp: [f64; 2],
    pub kv: [f64; 2],
    #[serde(default = "default_grid")]
    pub grid_resolution: usize,
    #[serde(default)]
    pub window_padding: f64,
    #[serde(default)]
    pub obstacles: Vec<TaskCircle>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub bounds: Bounds,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccupancyConfig {
    pub initial: InitialSet,
    #[serde(default = "unsafe_region")]
    pub region: Region,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
}

fn unsafe_region() -> Region {
    Region::UnsafeSet
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub bounds: Bounds,
    #[serde(default = "default_grid")]
    pub nx: usize,
    #[serde(default = "default_grid")]
    pub ny: usize,
    #[serde(default = "default_times")]
    pub nt: usize,
    #[serde(default)]
    pub t0: f64,
    /// Defaults to the integration horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub liouville: Option<LiouvilleSettings>,
}

/// A complete scenario file. Exactly one of `single`, `multi` and `arm`
/// must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub integration: Integration,
    #[serde(default)]
    pub monitors: Monitors,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub single: Option<SingleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multi: Option<MultiConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arm: Option<ArmConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupancy: Option<OccupancyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certify: Option<CertifyConfig>,
}

/// One failed check: the offending key, its value and the message.
struct Issue {
    key: &'static str,
    value: Option<f64>,
    message: String,
}

/// Line (1-based) of `key = value`, falling back to the first `key =` line.
fn locate(src: &str, key: &str, value: Option<f64>) -> Option<usize> {
    let assigns = |line: &str| {
        line.match_indices(key).any(|(i, _)| {
            let before = line[..i].chars().next_back();
            let boundary = before.is_none_or(|c| !(c.is_alphanumeric() || c == '_'));
            boundary && line[i + key.len()..].trim_start().starts_with('=')
        })
    };
    let lines: Vec<&str> = src.lines().collect();
    let with_value = value.and_then(|v| {
        lines.iter().position(|l| {
            assigns(l)
                && l.split(|c: char| !(c.is_ascii_digit() || "+-.eE".contains(c)))
                    .filter_map(|tok| tok.parse::<f64>().ok())
                    .any(|x| x == v)
        })
    });
    with_value
        .or_else(|| lines.iter().position(|l| assigns(l)))
        .map(|i| i + 1)
}

fn check_theta(out: &mut Vec<Issue>, theta: f64) {
    if !(theta > 0.0 && theta < 1.0) {
        out.push(Issue {
            key: "theta",
            value: Some(theta),
            message: format!("theta must lie in (0, 1), got {theta}"),
        });
    } else if !(0.01..=0.1).contains(&theta) {
        warn!("theta = {theta} is outside the usual range [0.01, 0.1]");
    }
}

fn check_gains(out: &mut Vec<Issue>, alpha: f64, beta: f64, kappa: f64) {
    if !(alpha > 0.0 && alpha.is_finite()) {
        out.push(Issue {
            key: "alpha",
            value: Some(alpha),
            message: format!("alpha must be positive, got {alpha}"),
        });
    } else if !(0.1..=1.0).contains(&alpha) {
        warn!("alpha = {alpha} is outside the usual range [0.1, 1]");
    }
    if !(beta >= 0.0 && beta.is_finite()) {
        out.push(Issue {
            key: "beta",
            value: Some(beta),
            message: format!("beta must be non-negative, got {beta}"),
        });
    } else if !(1.0..=10.0).contains(&beta) {
        warn!("beta = {beta} is outside the usual range [1, 10]");
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        out.push(Issue {
            key: "kappa",
            value: Some(kappa),
            message: format!("kappa must be positive, got {kappa}"),
        });
    }
}

fn check_radii(out: &mut Vec<Issue>, r: f64, s: f64) {
    if !(r > 0.0) {
        out.push(Issue {
            key: "radius",
            value: Some(r),
            message: format!("radius must be positive, got {r}"),
        });
    }
    if !(s > r) {
        out.push(Issue {
            key: "sensing_radius",
            value: Some(s),
            message: format!("sensing_radius {s} must exceed radius {r}"),
        });
    }
}

fn check_u_max(out: &mut Vec<Issue>, u: Option<f64>) {
    if let Some(u) = u.filter(|u| !(*u > 0.0)) {
        out.push(Issue {
            key: "u_max",
            value: Some(u),
            message: format!("u_max must be positive, got {u}"),
        });
    }
}

impl ScenarioConfig {
    /// Parse and validate; validation messages point at the offending line.
    pub fn from_toml(src: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(src).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate_with_source(Some(src))?;
        Ok(cfg)
    }

    /// Read a file, or a bundled config named `bundled:<name>`.
    pub fn load(spec: &str) -> Result<Self, ConfigError> {
        if let Some(name) = spec.strip_prefix(BUNDLED_PREFIX) {
            return Self::from_toml(
                bundled(name).ok_or_else(|| ConfigError::UnknownBundled(name.into()))?,
            );
        }
        let src = std::fs::read_to_string(FsPath::new(spec)).map_err(|e| ConfigError::Io {
            path: spec.into(),
            message: e.to_string(),
        })?;
        Self::from_toml(&src)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.validate_with_source(None)
    }

    fn validate_with_source(&self, src: Option<&str>) -> Result<(), ConfigError> {
        let mut issues = Vec::new();
        let sections = [
            self.single.is_some(),
            self.multi.is_some(),
            self.arm.is_some(),
        ];
        if sections.iter().filter(|s| **s).count() != 1 {
            issues.push(Issue {
                key: "name",
                value: None,
                message: "exactly one of [single], [multi] and [arm] must be given".into(),
            });
        }
        if let Err(e) = self.integration.validate() {
            issues.push(Issue {
                key: "dt",
                value: Some(self.integration.dt),
                message: e.to_string(),
            });
        }
        if !(self.monitors.convergence_radius > 0.0 && self.monitors.convergence_hold >= 0.0) {
            issues.push(Issue {
                key: "convergence_radius",
                value: Some(self.monitors.convergence_radius),
                message: "convergence radius must be positive and hold time non-negative".into(),
            });
        }
        if let Some(s) = &self.single {
            check_gains(&mut issues, s.alpha, s.beta, s.kappa);
            check_u_max(&mut issues, s.u_max);
            for o in &s.obstacles {
                check_theta(&mut issues, o.theta);
                check_radii(&mut issues, o.radius, o.sensing_radius);
            }
        }
        if let Some(m) = &self.multi {
            check_gains(&mut issues, m.alpha, m.beta, m.kappa);
            check_u_max(&mut issues, m.u_max);
            for a in &m.agents {
                check_theta(&mut issues, a.theta);
                check_radii(&mut issues, a.radius, a.sensing_radius);
            }
            let given = m.agents.iter().filter(|a| a.heading.is_some()).count();
            if given != 0 && given != m.agents.len() {
                issues.push(Issue {
                    key: "heading",
                    value: None,
                    message: "give a heading for every agent or for none".into(),
                });
            }
        }
        if let Some(a) = &self.arm {
            check_gains(&mut issues, a.alpha, a.beta, a.kappa);
            check_theta(&mut issues, a.theta);
        }
        if let Some(o) = &self.occupancy {
            if o.samples == 0 {
                issues.push(Issue {
                    key: "samples",
                    value: Some(0.0),
                    message: "occupancy needs at least one sample".into(),
                });
            }
        }
        if let Some(issue) = issues.into_iter().next() {
            return Err(ConfigError::Invalid {
                line: src.and_then(|s| locate(s, issue.key, issue.value)),
                message: issue.message,
            });
        }
        // domain-level checks (start positions, reachability, ...)
        let domain = if self.single.is_some() {
            self.single_scenario()
                .and_then(|s| s.validate().map_err(invalid))
        } else if self.multi.is_some() {
            self.multi_scenario()
                .and_then(|s| s.validate().map_err(invalid))
        } else {
            self.arm_scenario()
                .and_then(|s| s.validate().map_err(invalid))
        };
        domain.map_err(|e| match e {
            ConfigError::Invalid {
                line: None,
                message,
            } => ConfigError::Invalid {
                line: src.and_then(|s| locate(s, "start", None)),
                message,
            },
            e => e,
        })
    }

    pub fn single_scenario(&self) -> Result<SingleScenario, ConfigError> {
        let s = self.single.as_ref().ok_or_else(|| missing("single"))?;
        let obstacles = s
            .obstacles
            .iter()
            .map(|o| {
                BumpShape::new(o.theta, o.radius, o.sensing_radius)
                    .map(|shape| ObstacleSpec::new(shape, o.center.to_path()))
                    .map_err(invalid)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let target = s.target.to_path();
        let moving_target = !target.is_static();
        let distance = if moving_target {
            DistanceFn::quadratic_path(target)
        } else {
            DistanceFn::quadratic(target.position(0.0))
        }
        .with_kappa(s.kappa);
        let mode = if moving_target {
            Mode::DynamicTarget
        } else if obstacles.iter().any(|o| !o.center.is_static()) {
            Mode::DynamicObstacle
        } else {
            Mode::Static
        };
        let field =
            DensityField::new(obstacles, distance, s.alpha, s.beta, mode).map_err(invalid)?;
        Ok(SingleScenario {
            field,
            x0: v2(s.start),
            u_max: s.u_max,
            integration: self.integration,
            monitors: self.monitors,
            bounds: s.bounds,
        })
    }

    pub fn multi_scenario(&self) -> Result<MultiAgentScenario, ConfigError> {
        let m = self.multi.as_ref().ok_or_else(|| missing("multi"))?;
        let agents = m
            .agents
            .iter()
            .map(|a| AgentSpec {
                radius: a.radius,
                sensing_radius: a.sensing_radius,
                theta: a.theta,
                alpha: m.alpha,
                beta: m.beta,
                kappa: m.kappa,
                target: v2(a.target),
                reciprocal_distance: m.reciprocal_distance,
            })
            .collect();
        let headings: Option<Vec<f64>> = m.agents.iter().map(|a| a.heading).collect();
        Ok(MultiAgentScenario {
            agents,
            initial: m.agents.iter().map(|a| v2(a.start)).collect(),
            initial_headings: headings,
            model: m.model,
            u_max: m.u_max,
            integration: self.integration,
            monitors: self.monitors,
            bounds: m.bounds,
        })
    }

    /// The two double-integrator runs of the controller comparison:
    /// density backstepping first, social force second.
    pub fn comparison_scenarios(
        &self,
    ) -> Result<(MultiAgentScenario, MultiAgentScenario), ConfigError> {
        let base = self.multi_scenario()?;
        let c = self
            .multi
            .as_ref()
            .and_then(|m| m.compare)
            .ok_or_else(|| missing("multi.compare"))?;
        let with = |law| MultiAgentScenario {
            model: AgentModel::DoubleIntegrator { law },
            ..base.clone()
        };
        Ok((
            with(SecondOrderLaw::Backstepping { gain: c.gain }),
            with(SecondOrderLaw::Sfm(c.sfm)),
        ))
    }

    pub fn arm_scenario(&self) -> Result<ArmScenario, ConfigError> {
        let a = self.arm.as_ref().ok_or_else(|| missing("arm"))?;
        Ok(ArmScenario {
            model: a.model,
            task_obstacles: a.obstacles.clone(),
            grid_resolution: a.grid_resolution,
            target: a.target.to_path(),
            theta: a.theta,
            sensing_margin: a.sensing_margin,
            alpha: a.alpha,
            beta: a.beta,
            kappa: a.kappa,
            feedforward: a.feedforward,
            kp: v2(a.kp),
            kv: v2(a.kv),
            integration: self.integration,
            window_padding: a.window_padding,
        })
    }

    pub fn certify_grid(&self) -> Result<CertifyGrid, ConfigError> {
        let c = self.certify.as_ref().ok_or_else(|| missing("certify"))?;
        Ok(CertifyGrid {
            bounds: c.bounds,
            nx: c.nx,
            ny: c.ny,
            nt: c.nt,
            t0: c.t0,
            t1: c.t1.unwrap_or(self.integration.horizon),
            delta: c.delta,
        })
    }

    pub fn occupancy_grid(&self) -> Option<OccupancyGrid> {
        self.occupancy
            .and_then(|o| o.grid)
            .map(|g| OccupancyGrid::new(g.bounds, g.nx, g.ny))
    }
}

fn missing(section: &str) -> ConfigError {
    ConfigError::Invalid {
        line: None,
        message: format!("config has no [{section}] section"),
    }
}

fn invalid(e: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        line: None,
        message: e.to_string(),
    }
}

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_config_validates() {
        for (name, src) in BUNDLED {
            let cfg = ScenarioConfig::from_toml(src).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(cfg.name, *name);
        }
    }

    #[test]
    fn bundled_configs_round_trip() {
        for (name, src) in BUNDLED {
            let cfg = ScenarioConfig::from_toml(src).unwrap();
            let again = ScenarioConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
            assert_eq!(cfg, again, "{name}");
        }
    }

    #[test]
    fn bad_theta_points_at_its_line() {
        let src = bundled("static_example").unwrap();
        let line = src.lines().position(|l| l.contains("theta")).unwrap();
        let mut lines: Vec<String> = src.lines().map(String::from).collect();
        lines[line] = lines[line].replace("0.05", "1.5");
        let err = ScenarioConfig::from_toml(&lines.join("\n")).unwrap_err();
        match err {
            ConfigError::Invalid { line: l, message } => {
                assert_eq!(l, Some(line + 1));
                assert!(message.contains("theta"));
            }
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let err = ScenarioConfig::from_toml("name = \"x\"\n[single\nstart = [0, 0]").unwrap_err();
        assert!(
            matches!(&err, ConfigError::Parse(m) if m.contains("line 2")),
            "{err}"
        );
    }

    #[test]
    fn two_sections_are_rejected() {
        let mut cfg = ScenarioConfig::from_toml(bundled("static_example").unwrap()).unwrap();
        cfg.arm = ScenarioConfig::from_toml(bundled("arm_tracking").unwrap())
            .unwrap()
            .arm;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn start_inside_an_obstacle_is_rejected() {
        let mut cfg = ScenarioConfig::from_toml(bundled("static_example").unwrap()).unwrap();
        let c = cfg.single.as_ref().unwrap().obstacles[0].center;
        let PathConfig::Static { at } = c else {
            panic!()
        };
        cfg.single.as_mut().unwrap().start = at;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn locate_matches_whole_keys() {
        let src = "alpha_x = 3\nalpha = 2\nobs = { theta = 0.5, r = 1 }\n";
        assert_eq!(locate(src, "alpha", None), Some(2));
        assert_eq!(locate(src, "theta", Some(0.5)), Some(3));
        assert_eq!(locate(src, "beta", None), None);
    }

    #[test]
    fn mode_follows_the_moving_parts() {
        let cfg = ScenarioConfig::from_toml(bundled("dynamic_obstacles").unwrap()).unwrap();
        assert_eq!(
            cfg.single_scenario().unwrap().field.mode(),
            Mode::DynamicObstacle
        );
        let cfg = ScenarioConfig::from_toml(bundled("static_example").unwrap()).unwrap();
        assert_eq!(cfg.single_scenario().unwrap().field.mode(), Mode::Static);
    }
}
