//! Multipath-based SLAM with master virtual anchors.
//!
//! A particle-based sum-product filter jointly tracks a mobile agent and a map
//! of reflective surfaces from distance and angle-of-arrival measurements of
//! line-of-sight, single-bounce and double-bounce propagation paths.

pub mod association;
pub mod engine;
pub mod eval;
pub mod geometry;
pub mod measurement;
pub mod raytrace;
pub mod scenario;

pub use geometry::{Point2, Surface};
