//! Planar transforms between surfaces, physical anchors, virtual anchors and
//! master virtual anchors.
//!
//! A reflective surface is stored as its master virtual anchor (MVA): the
//! mirror image of the coordinate origin across the surface line. Every
//! virtual anchor of that surface follows from the MVA and the physical anchor.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

/// Tolerance for degeneracy checks, in meters.
pub const EPS_GEO: f64 = 1e-6;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum GeometryError {
    #[error("surface line passes through the origin (|mva| <= {EPS_GEO})")]
    DegenerateSurface,
    #[error("virtual anchor coincides with the physical anchor")]
    DegeneratePair,
    #[error("agent position coincides with the anchor")]
    CoincidentPoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the planar cross product.
    #[inline]
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    #[inline]
    pub fn distance(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise rotation by 90 degrees.
    #[inline]
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    #[inline]
    pub fn from_polar(r: f64, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        Point2::new(r * c, r * s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    #[inline]
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    #[inline]
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<Point2> for f64 {
    type Output = Point2;
    #[inline]
    fn mul(self, p: Point2) -> Point2 {
        Point2::new(self * p.x, self * p.y)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    #[inline]
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into `[-pi, pi)`.
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    if (-PI..PI).contains(&a) {
        return a;
    }
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2*pi for tiny negative inputs.
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// A reflective surface line, identified by its MVA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Point2", into = "Point2")]
pub struct Surface {
    mva: Point2,
}

impl TryFrom<Point2> for Surface {
    type Error = GeometryError;
    fn try_from(mva: Point2) -> Result<Self, Self::Error> {
        Surface::new(mva)
    }
}

impl From<Surface> for Point2 {
    fn from(s: Surface) -> Point2 {
        s.mva
    }
}

impl Surface {
    pub fn new(mva: Point2) -> Result<Self, GeometryError> {
        if !mva.is_finite() || mva.norm() <= EPS_GEO {
            return Err(GeometryError::DegenerateSurface);
        }
        Ok(Self { mva })
    }

    /// Surface through `a` and `b`.
    pub fn through(a: Point2, b: Point2) -> Result<Self, GeometryError> {
        let dir = b - a;
        if dir.norm() <= EPS_GEO {
            return Err(GeometryError::DegenerateSurface);
        }
        let n = (1.0 / dir.norm()) * dir.perp();
        // Foot of the perpendicular from the origin, doubled.
        Surface::new(2.0 * n.dot(a) * n)
    }

    #[inline]
    pub fn mva(&self) -> Point2 {
        self.mva
    }

    /// Unit normal pointing from the origin towards the line.
    #[inline]
    pub fn normal(&self) -> Point2 {
        (1.0 / self.mva.norm()) * self.mva
    }

    /// A point on the line.
    #[inline]
    pub fn anchor_point(&self) -> Point2 {
        0.5 * self.mva
    }

    /// Unit tangent of the line.
    #[inline]
    pub fn tangent(&self) -> Point2 {
        self.normal().perp()
    }

    /// Signed distance of `p` from the line, positive on the side away from the origin.
    #[inline]
    pub fn signed_distance(&self, p: Point2) -> f64 {
        let u = self.normal();
        u.dot(p) - u.dot(self.anchor_point())
    }

    pub fn mirror(&self, p: Point2) -> Point2 {
        let u = self.normal();
        p + (2.0 * (u.dot(self.anchor_point()) - u.dot(p))) * u
    }
}

/// Reflects `p` across the line of surface `s`.
pub fn mirror_point(p: Point2, s: &Surface) -> Point2 {
    s.mirror(p)
}

/// Virtual anchor of `pa` for the surface whose MVA is `mva`.
#[inline]
pub fn mva_to_va(mva: Point2, pa: Point2) -> Result<Point2, GeometryError> {
    let m2 = mva.norm_sq();
    if !(m2.sqrt() > EPS_GEO) {
        return Err(GeometryError::DegenerateSurface);
    }
    Ok(pa - (2.0 * mva.dot(pa) / m2 - 1.0) * mva)
}

/// Virtual anchor of the path PA -> surface `mva_first` -> surface `mva_last` -> agent.
#[inline]
pub fn double_bounce_va(
    mva_last: Point2,
    mva_first: Point2,
    pa: Point2,
) -> Result<Point2, GeometryError> {
    mva_to_va(mva_last, mva_to_va(mva_first, pa)?)
}

/// Recovers the MVA of the surface that maps `pa` onto `va`.
#[inline]
pub fn va_to_mva(va: Point2, pa: Point2) -> Result<Point2, GeometryError> {
    let w = pa - va;
    let w2 = w.norm_sq();
    if !(w2.sqrt() > EPS_GEO) {
        return Err(GeometryError::DegeneratePair);
    }
    let mva = ((pa.norm_sq() - va.norm_sq()) / w2) * w;
    if !(mva.norm() > EPS_GEO) {
        return Err(GeometryError::DegeneratePair);
    }
    Ok(mva)
}

/// Absolute determinant of the Jacobian of [`va_to_mva`] with respect to the VA.
pub fn va_to_mva_jacobian_det(va: Point2, pa: Point2) -> f64 {
    let w = pa - va;
    let w2 = w.norm_sq();
    let g = (pa.norm_sq() - va.norm_sq()) / w2;
    // The map is g(v) * w(v); its Jacobian is -g I + w (grad g)^T, a rank-one update.
    (-g * g + 2.0 * g * va.dot(w) / w2).abs()
}

/// Path length and angle of arrival seen from `agent` for a signal emitted at `va`.
///
/// The angle is measured relative to `heading` and wrapped to `[-pi, pi)`.
#[inline]
pub fn path_distance_angle(
    agent: Point2,
    heading: f64,
    va: Point2,
) -> Result<(f64, f64), GeometryError> {
    let diff = agent - va;
    let d = diff.norm();
    if !(d > EPS_GEO) {
        return Err(GeometryError::CoincidentPoints);
    }
    Ok((d, wrap_angle(diff.y.atan2(diff.x) - heading)))
}
