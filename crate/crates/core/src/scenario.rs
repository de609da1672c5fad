//! Scenario description: floor plan, anchors, trajectory, noise and filter settings.
//!
//! Scenarios are JSON documents. Every field except `walls`, `pas` and
//! `trajectory` has a default.

use crate::engine::{AgentState, FilterModel, HyperParams, KnownWall};
use crate::geometry::{GeometryError, Point2, Surface};
use crate::measurement::{ClutterModel, NoiseProfile};
use crate::raytrace::{Environment, WallSegment};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("unknown built-in scenario {0:?}")]
    UnknownBuiltin(String),
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallSpec {
    pub a: Point2,
    pub b: Point2,
    #[serde(default = "yes")]
    pub reflective: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub a: Point2,
    pub b: Point2,
}

/// One piece of a generated track: constant speed and turn rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSegment {
    pub steps: usize,
    /// Total heading change over the segment, degrees (positive is counter-clockwise).
    #[serde(default)]
    pub turn_deg: f64,
    /// Speed override for this segment, m/s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrajectorySpec {
    /// Explicit positions, one per time step.
    Waypoints { points: Vec<Point2> },
    /// Track built from constant-speed, constant-turn-rate segments.
    Track {
        start: Point2,
        heading_deg: f64,
        speed: f64,
        segments: Vec<TrackSegment>,
    },
}

/// Whether double-bounce paths exist, both in the data and in the filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setup {
    #[default]
    Full,
    SingleOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub walls: Vec<WallSpec>,
    #[serde(default)]
    pub blockers: Vec<SegmentSpec>,
    pub pas: Vec<Point2>,
    pub trajectory: TrajectorySpec,
    #[serde(default)]
    pub noise: NoiseProfile,
    #[serde(default)]
    pub clutter: ClutterModel,
    #[serde(default)]
    pub params: HyperParams,
    #[serde(default)]
    pub setup: Setup,
}

fn default_name() -> String {
    "scenario".into()
}

/// Parses and validates a JSON scenario.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: ScenarioConfig =
        serde_path_to_error::deserialize(de).map_err(|e| ScenarioError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    cfg.validate()?;
    Ok(cfg)
}

pub const BUILTIN: [(&str, &str); 3] = [
    (
        "exp1_rect_room",
        include_str!("../scenarios/exp1_rect_room.json"),
    ),
    ("exp3_olos", include_str!("../scenarios/exp3_olos.json")),
    ("nonrect", include_str!("../scenarios/nonrect.json")),
];

/// One of the bundled scenarios.
pub fn builtin(name: &str) -> Result<ScenarioConfig, ScenarioError> {
    let (_, text) = BUILTIN
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| ScenarioError::UnknownBuiltin(name.into()))?;
    parse_scenario(text)
}

/// Ground truth derived from a scenario.
#[derive(Debug, Clone)]
pub struct World {
    pub surfaces: Vec<Surface>,
    pub env: Environment,
    pub pas: Vec<Point2>,
    /// True agent states; index 0 is the start, index n the state at step n.
    pub trajectory: Vec<AgentState>,
}

impl ScenarioConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.pas.is_empty() {
            return Err(invalid("pas", "at least one physical anchor is required"));
        }
        if let Some(i) = self.pas.iter().position(|p| !p.is_finite()) {
            return Err(invalid(format!("pas[{i}]"), "coordinates must be finite"));
        }
        for (i, w) in self.walls.iter().enumerate() {
            if w.a.distance(w.b) <= 1e-6 {
                return Err(invalid(format!("walls[{i}]"), "endpoints coincide"));
            }
            if w.reflective && Surface::through(w.a, w.b) == Err(GeometryError::DegenerateSurface) {
                return Err(invalid(
                    format!("walls[{i}]"),
                    "reflective wall line passes through the origin",
                ));
            }
        }
        for (i, b) in self.blockers.iter().enumerate() {
            if b.a.distance(b.b) <= 1e-6 {
                return Err(invalid(format!("blockers[{i}]"), "endpoints coincide"));
            }
        }
        match &self.trajectory {
            TrajectorySpec::Waypoints { points } if points.len() < 2 => {
                return Err(invalid(
                    "trajectory.points",
                    "at least two positions are required",
                ))
            }
            TrajectorySpec::Track {
                segments, speed, ..
            } => {
                if segments.iter().map(|s| s.steps).sum::<usize>() < 1 {
                    return Err(invalid(
                        "trajectory.segments",
                        "the track needs at least one step",
                    ));
                }
                if *speed < 0.0 || segments.iter().any(|s| s.speed.is_some_and(|v| v < 0.0)) {
                    return Err(invalid("trajectory.speed", "speeds must be >= 0"));
                }
            }
            _ => {}
        }
        if !self.noise.is_valid() {
            return Err(invalid(
                "noise",
                "standard deviations must be > 0 and angles below 45 degrees",
            ));
        }
        if !self.clutter.is_valid() {
            return Err(invalid("clutter", "mu_fp must be >= 0 and d_max > 0"));
        }
        self.params.validate().map_err(|m| invalid("params", m))?;
        Ok(())
    }

    /// Applies the setup flag to the filter parameters.
    pub fn doubles(&self) -> bool {
        self.setup == Setup::Full
    }

    pub fn trajectory(&self) -> Vec<AgentState> {
        let dt = self.params.dt;
        match &self.trajectory {
            TrajectorySpec::Waypoints { points } => {
                let n = points.len();
                (0..n)
                    .map(|k| {
                        let (a, b) = (points[k.saturating_sub(1)], points[(k + 1).min(n - 1)]);
                        let span = ((k + 1).min(n - 1) - k.saturating_sub(1)) as f64 * dt;
                        AgentState::new(points[k], (1.0 / span) * (b - a))
                    })
                    .collect()
            }
            TrajectorySpec::Track {
                start,
                heading_deg,
                speed,
                segments,
            } => {
                let mut heading = heading_deg.to_radians();
                let mut pos = *start;
                let mut out = vec![AgentState::new(pos, Point2::from_polar(*speed, heading))];
                for seg in segments {
                    let v = seg.speed.unwrap_or(*speed);
                    let turn = seg.turn_deg.to_radians() / seg.steps.max(1) as f64;
                    for _ in 0..seg.steps {
                        // Midpoint heading keeps arcs symmetric.
                        let mid = heading + 0.5 * turn;
                        pos = pos + Point2::from_polar(v * dt, mid);
                        heading += turn;
                        out.push(AgentState::new(pos, Point2::from_polar(v, heading)));
                    }
                }
                out
            }
        }
    }

    pub fn world(&self) -> World {
        let mut surfaces = Vec::new();
        let mut walls = Vec::new();
        for w in &self.walls {
            let index = if w.reflective {
                surfaces.push(Surface::through(w.a, w.b).expect("validated"));
                Some(surfaces.len() - 1)
            } else {
                None
            };
            walls.push(WallSegment::new(w.a, w.b, index));
        }
        let blockers = self
            .blockers
            .iter()
            .map(|b| WallSegment::opaque(b.a, b.b))
            .collect();
        World {
            surfaces,
            env: Environment { walls, blockers },
            pas: self.pas.clone(),
            trajectory: self.trajectory(),
        }
    }

    /// Filter model matching the scenario, with truth extents available for
    /// clipping estimated reflectors.
    pub fn filter_model(&self) -> FilterModel {
        let world = self.world();
        let mut params = self.params.clone();
        params.doubles = params.doubles && self.doubles();
        let known_walls = world
            .env
            .walls
            .iter()
            .filter_map(|w| {
                w.surface_index.map(|s| KnownWall {
                    mva: world.surfaces[s].mva(),
                    a: w.a,
                    b: w.b,
                })
            })
            .collect();
        let blockers = world
            .env
            .walls
            .iter()
            .filter(|w| w.surface_index.is_none())
            .chain(&world.env.blockers)
            .copied()
            .collect();
        FilterModel {
            params,
            noise: self.noise,
            clutter: self.clutter,
            pas: self.pas.clone(),
            blockers,
            known_walls,
        }
    }
}
