use crate::geometry::Point2;
use crate::measurement::DetectionProfile;
use serde::{Deserialize, Serialize};

/// Square region on which new surfaces are born uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BirthRegion {
    pub center: Point2,
    pub half_width: f64,
}

impl Default for BirthRegion {
    fn default() -> Self {
        Self {
            center: Point2::ORIGIN,
            half_width: 15.0,
        }
    }
}

impl BirthRegion {
    #[inline]
    pub fn density(&self, p: Point2) -> f64 {
        let d = p - self.center;
        if d.x.abs() <= self.half_width && d.y.abs() <= self.half_width {
            1.0 / (4.0 * self.half_width * self.half_width)
        } else {
            0.0
        }
    }
}

/// Extent given to estimated reflectors when tracing paths during inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReflectorExtent {
    /// Clip to the nearest known wall's extent when one is close enough.
    #[default]
    Truth,
    /// Treat every estimated surface as an unbounded line.
    Infinite,
}

/// Filter configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    pub survival: f64,
    pub detection: DetectionProfile,
    /// Mean number of newly detected surfaces per anchor and step.
    pub mu_new: f64,
    pub birth: BirthRegion,
    pub p_confirm: f64,
    pub p_prune: f64,
    pub max_pmvas: usize,
    /// Regularization noise on surface particles, meters.
    pub sigma_mva: f64,
    /// Acceleration noise of the motion model, m/s^2.
    pub sigma_accel: f64,
    pub dt: f64,
    pub particles: usize,
    pub assoc_iters: usize,
    pub assoc_tol: f64,
    /// Half-widths of the uniform initial agent prior.
    pub init_pos_spread: f64,
    pub init_vel_spread: f64,
    /// Speed below which the previous heading is kept, m/s.
    pub heading_eps: f64,
    /// Gate detection probabilities by ray tracing on the estimated map.
    pub visibility: bool,
    /// Model double-bounce paths.
    pub doubles: bool,
    pub reflector_extent: ReflectorExtent,
    /// Distance within which an estimated surface is matched to a known wall.
    pub extent_gate: f64,
    /// Likelihoods beyond this many standard deviations are treated as zero.
    pub likelihood_gate: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            survival: 0.999,
            detection: DetectionProfile::default(),
            mu_new: 0.05,
            birth: BirthRegion::default(),
            p_confirm: 0.5,
            p_prune: 1e-3,
            max_pmvas: 30,
            sigma_mva: 0.03,
            sigma_accel: 9e-3,
            dt: 1.0,
            particles: 5000,
            assoc_iters: crate::association::DEFAULT_MAX_ITERS,
            assoc_tol: crate::association::DEFAULT_TOL,
            init_pos_spread: 0.5,
            init_vel_spread: 0.1,
            heading_eps: 1e-3,
            visibility: true,
            doubles: true,
            reflector_extent: ReflectorExtent::Truth,
            extent_gate: 1.0,
            likelihood_gate: 8.0,
        }
    }
}

impl HyperParams {
    /// Returns the first violated constraint, named by field.
    pub fn validate(&self) -> Result<(), String> {
        let prob = |v: f64| (0.0..=1.0).contains(&v);
        let checks: [(bool, &str); 14] = [
            (prob(self.survival), "survival must be in [0, 1]"),
            (
                self.detection.is_valid(),
                "detection probabilities must be in [0, 1]",
            ),
            (self.mu_new >= 0.0, "mu_new must be >= 0"),
            (self.birth.half_width > 0.0, "birth.half_width must be > 0"),
            (
                prob(self.p_confirm) && prob(self.p_prune),
                "p_confirm and p_prune must be in [0, 1]",
            ),
            (
                self.p_prune < self.p_confirm,
                "p_prune must be below p_confirm",
            ),
            (self.max_pmvas > 0, "max_pmvas must be > 0"),
            (
                self.sigma_mva >= 0.0 && self.sigma_accel >= 0.0,
                "noise scales must be >= 0",
            ),
            (self.dt > 0.0, "dt must be > 0"),
            (self.particles > 0, "particles must be > 0"),
            (
                self.assoc_iters > 0 && self.assoc_tol > 0.0,
                "assoc_iters and assoc_tol must be > 0",
            ),
            (
                self.init_pos_spread >= 0.0 && self.init_vel_spread >= 0.0,
                "initial spreads must be >= 0",
            ),
            (self.extent_gate >= 0.0, "extent_gate must be >= 0"),
            (self.likelihood_gate > 0.0, "likelihood_gate must be > 0"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(msg.to_string()),
            None => Ok(()),
        }
    }
}
