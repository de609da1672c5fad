//! Backward ray tracing for LOS, single-bounce and double-bounce paths.
//!
//! A path is traced from the agent towards its virtual anchor. Each hop has
//! to hit the expected reflector segment and must not cross any obstacle on
//! the way. Reflectors are only exempt from blocking on the hops that start or
//! end on them.

use crate::geometry::{GeometryError, Point2, Surface, EPS_GEO};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Half-length used for reflectors of unknown extent.
pub const INFINITE_HALF_LENGTH: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallSegment {
    pub a: Point2,
    pub b: Point2,
    /// Index into the scenario's surface list for reflective walls.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface_index: Option<usize>,
}

impl WallSegment {
    pub fn new(a: Point2, b: Point2, surface_index: Option<usize>) -> Self {
        Self {
            a,
            b,
            surface_index,
        }
    }

    pub fn opaque(a: Point2, b: Point2) -> Self {
        Self::new(a, b, None)
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }
}

/// Path classes. `Double { last, first }` leaves the anchor towards surface
/// `first` and reaches the agent after bouncing off surface `last`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathClass {
    Los,
    Single(usize),
    Double { last: usize, first: usize },
}

impl PathClass {
    /// LOS, every single bounce, then every ordered pair of distinct surfaces.
    pub fn enumerate(num_surfaces: usize, doubles: bool) -> Vec<PathClass> {
        let mut out = vec![PathClass::Los];
        out.extend((0..num_surfaces).map(PathClass::Single));
        if doubles {
            for last in 0..num_surfaces {
                for first in 0..num_surfaces {
                    if last != first {
                        out.push(PathClass::Double { last, first });
                    }
                }
            }
        }
        out
    }

    /// Virtual anchor of this path.
    pub fn virtual_anchor(
        &self,
        pa: Point2,
        mva: impl Fn(usize) -> Point2,
    ) -> Result<Point2, GeometryError> {
        use crate::geometry::{double_bounce_va, mva_to_va};
        match *self {
            PathClass::Los => Ok(pa),
            PathClass::Single(s) => mva_to_va(mva(s), pa),
            PathClass::Double { last, first } => double_bounce_va(mva(last), mva(first), pa),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EnvironmentError {
    #[error("wall {index} has coincident endpoints")]
    DegenerateWall { index: usize },
    #[error("wall {index} refers to unknown surface {surface}")]
    UnknownSurface { index: usize, surface: usize },
    #[error("wall {index} does not lie on the line of surface {surface}")]
    OffSurface { index: usize, surface: usize },
    #[error("surface {surface} has more than one reflector segment")]
    DuplicateReflector { surface: usize },
}

/// Ground-truth obstacles: reflective walls tied to surfaces and opaque blockers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub walls: Vec<WallSegment>,
    pub blockers: Vec<WallSegment>,
}

impl Environment {
    /// Checks every reflector against the surface it claims to lie on.
    pub fn validate(&self, surfaces: &[Surface]) -> Result<(), EnvironmentError> {
        let mut seen = vec![false; surfaces.len()];
        for (index, w) in self.walls.iter().chain(&self.blockers).enumerate() {
            if w.length() <= EPS_GEO {
                return Err(EnvironmentError::DegenerateWall { index });
            }
        }
        for (index, w) in self.walls.iter().enumerate() {
            let Some(surface) = w.surface_index else {
                continue;
            };
            let s = surfaces
                .get(surface)
                .ok_or(EnvironmentError::UnknownSurface { index, surface })?;
            let tol = 1e3 * EPS_GEO;
            if s.signed_distance(w.a).abs() > tol || s.signed_distance(w.b).abs() > tol {
                return Err(EnvironmentError::OffSurface { index, surface });
            }
            if std::mem::replace(&mut seen[surface], true) {
                return Err(EnvironmentError::DuplicateReflector { surface });
            }
        }
        Ok(())
    }

    pub fn reflector(&self, surface: usize) -> Option<&WallSegment> {
        self.walls.iter().find(|w| w.surface_index == Some(surface))
    }

    /// True when the closed segment `from`-`to` crosses an obstacle other than
    /// the walls of the `exempt` surfaces.
    pub fn blocked(&self, from: Point2, to: Point2, exempt: [Option<usize>; 2]) -> bool {
        self.walls
            .iter()
            .filter(|w| w.surface_index.is_none() || !exempt.contains(&w.surface_index))
            .chain(&self.blockers)
            .any(|w| segment_intersection(from, to, w.a, w.b).is_some())
    }
}

/// Intersection of the closed segments `a1`-`a2` and `b1`-`b2`.
///
/// Touching within [`EPS_GEO`] of an endpoint counts as a hit. Collinear
/// overlaps return the overlap point nearest to `a1`.
pub fn segment_intersection(a1: Point2, a2: Point2, b1: Point2, b2: Point2) -> Option<Point2> {
    let da = a2 - a1;
    let db = b2 - b1;
    let (la, lb) = (da.norm(), db.norm());
    if la <= 0.0 || lb <= 0.0 {
        return None;
    }
    let denom = da.cross(db);
    let off = b1 - a1;
    if denom.abs() <= 1e-12 * la * lb {
        // Parallel: only collinear segments can touch.
        if (off.cross(da) / la).abs() > EPS_GEO {
            return None;
        }
        let t1 = off.dot(da) / (la * la);
        let t2 = (b2 - a1).dot(da) / (la * la);
        let (lo, hi) = (t1.min(t2).max(0.0), t1.max(t2).min(1.0));
        let tol = EPS_GEO / la;
        return (lo <= hi + tol).then(|| a1 + lo.min(1.0) * da);
    }
    let t = off.cross(db) / denom;
    let u = off.cross(da) / denom;
    let (ta, tb) = (EPS_GEO / la, EPS_GEO / lb);
    if t < -ta || t > 1.0 + ta || u < -tb || u > 1.0 + tb {
        return None;
    }
    Some(a1 + t.clamp(0.0, 1.0) * da)
}

/// One reflection of a traced path: the surface line and its reflective extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounce {
    pub surface: Surface,
    pub a: Point2,
    pub b: Point2,
    pub id: usize,
}

impl Bounce {
    /// Reflector covering the whole line of `surface`.
    pub fn unbounded(surface: Surface, id: usize) -> Self {
        let c = surface.anchor_point();
        let t = INFINITE_HALF_LENGTH * surface.tangent();
        Self {
            surface,
            a: c - t,
            b: c + t,
            id,
        }
    }
}

/// Traces a path backwards from `agent`. `bounces` lists reflections in the
/// order they are met from the agent side. `blocked(from, to, exempt)`
/// reports obstruction of a hop.
pub fn trace_backward<F>(agent: Point2, pa: Point2, bounces: &[Bounce], blocked: F) -> bool
where
    F: Fn(Point2, Point2, [Option<usize>; 2]) -> bool,
{
    debug_assert!(bounces.len() <= 2);
    let mut images = [pa; 3];
    for k in (0..bounces.len()).rev() {
        images[k] = bounces[k].surface.mirror(images[k + 1]);
    }
    let mut from = agent;
    let mut prev = None;
    for (k, bounce) in bounces.iter().enumerate() {
        if from.distance(images[k]) <= EPS_GEO {
            return false;
        }
        let Some(w) = segment_intersection(from, images[k], bounce.a, bounce.b) else {
            return false;
        };
        if blocked(from, w, [prev, Some(bounce.id)]) {
            return false;
        }
        prev = Some(bounce.id);
        from = w;
    }
    from.distance(pa) > EPS_GEO && !blocked(from, pa, [prev, None])
}

/// Ground-truth availability of `path` between `agent` and `pa`.
pub fn path_available(
    agent: Point2,
    pa: Point2,
    path: PathClass,
    surfaces: &[Surface],
    env: &Environment,
) -> bool {
    let bounce = |s: usize| -> Option<Bounce> {
        let w = env.reflector(s)?;
        Some(Bounce {
            surface: *surfaces.get(s)?,
            a: w.a,
            b: w.b,
            id: s,
        })
    };
    let blocked = |f: Point2, t: Point2, ex: [Option<usize>; 2]| env.blocked(f, t, ex);
    match path {
        PathClass::Los => trace_backward(agent, pa, &[], blocked),
        PathClass::Single(s) => match bounce(s) {
            Some(b) => trace_backward(agent, pa, &[b], blocked),
            None => false,
        },
        PathClass::Double { last, first } => match (bounce(last), bounce(first)) {
            (Some(l), Some(f)) if last != first => trace_backward(agent, pa, &[l, f], blocked),
            _ => false,
        },
    }
}

/// Detection probability of a path: `base` when available, zero otherwise.
pub fn detection_probability(available: bool, base: f64) -> f64 {
    if available {
        base
    } else {
        0.0
    }
}
