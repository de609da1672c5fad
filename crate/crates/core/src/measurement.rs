//! Distance/angle measurements: synthetic generation and likelihoods.

use crate::geometry::{path_distance_angle, wrap_angle, GeometryError, Point2, Surface};
use crate::raytrace::{path_available, Environment, PathClass};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};
use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum MeasurementError {
    #[error("distance {z_d} outside the clutter support [0, {d_max}]")]
    OutOfSupport { z_d: f64, d_max: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Standard deviations of one measurement. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseStd {
    pub sigma_d: f64,
    #[serde(rename = "sigma_phi_deg", with = "degrees")]
    pub sigma_phi: f64,
}

impl NoiseStd {
    pub fn new(sigma_d: f64, sigma_phi_deg: f64) -> Self {
        Self {
            sigma_d,
            sigma_phi: sigma_phi_deg.to_radians(),
        }
    }

    pub fn is_valid(&self) -> bool {
        self.sigma_d > 0.0 && self.sigma_phi > 0.0 && self.sigma_phi < FRAC_PI_4
    }
}

mod degrees {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(rad: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(rad.to_degrees())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        f64::deserialize(d).map(f64::to_radians)
    }
}

/// One distance and angle-of-arrival pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub z_d: f64,
    pub z_phi: f64,
    /// Per-measurement noise, overriding the class constants when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseStd>,
}

impl Measurement {
    pub fn new(z_d: f64, z_phi: f64) -> Self {
        Self {
            z_d,
            z_phi: wrap_angle(z_phi),
            noise: None,
        }
    }
}

/// Optional range dependence of the noise: every standard deviation is scaled
/// by `d / d_ref`, clamped to `[min_scale, max_scale]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeScaling {
    pub d_ref: f64,
    #[serde(default = "RangeScaling::default_min")]
    pub min_scale: f64,
    #[serde(default = "RangeScaling::default_max")]
    pub max_scale: f64,
}

impl RangeScaling {
    fn default_min() -> f64 {
        0.25
    }
    fn default_max() -> f64 {
        4.0
    }

    pub fn apply(&self, base: NoiseStd, d: f64) -> NoiseStd {
        let k = (d / self.d_ref).clamp(self.min_scale, self.max_scale);
        NoiseStd {
            sigma_d: base.sigma_d * k,
            sigma_phi: (base.sigma_phi * k).min(0.99 * FRAC_PI_4),
        }
    }
}

/// Noise standard deviations per path class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    pub los: NoiseStd,
    pub single: NoiseStd,
    pub double: NoiseStd,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_scaling: Option<RangeScaling>,
}

impl Default for NoiseProfile {
    fn default() -> Self {
        Self {
            los: NoiseStd::new(0.05, 10.0),
            single: NoiseStd::new(0.10, 15.0),
            double: NoiseStd::new(0.15, 25.0),
            range_scaling: None,
        }
    }
}

impl NoiseProfile {
    pub fn class(&self, path: PathClass) -> NoiseStd {
        match path {
            PathClass::Los => self.los,
            PathClass::Single(_) => self.single,
            PathClass::Double { .. } => self.double,
        }
    }

    /// Noise of a measurement generated on `path` with true length `d`.
    pub fn for_path(&self, path: PathClass, d: f64) -> Option<NoiseStd> {
        self.range_scaling.map(|r| r.apply(self.class(path), d))
    }

    pub fn is_valid(&self) -> bool {
        [self.los, self.single, self.double]
            .iter()
            .all(NoiseStd::is_valid)
            && self.range_scaling.map_or(true, |r| {
                r.d_ref > 0.0 && r.min_scale > 0.0 && r.min_scale <= r.max_scale
            })
    }
}

/// Detection probabilities per path class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionProfile {
    pub los: f64,
    pub single: f64,
    pub double: f64,
}

impl Default for DetectionProfile {
    fn default() -> Self {
        Self::uniform(0.95)
    }
}

impl DetectionProfile {
    pub fn uniform(p: f64) -> Self {
        Self {
            los: p,
            single: p,
            double: p,
        }
    }

    pub fn class(&self, path: PathClass) -> f64 {
        match path {
            PathClass::Los => self.los,
            PathClass::Single(_) => self.single,
            PathClass::Double { .. } => self.double,
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.los, self.single, self.double]
            .iter()
            .all(|p| (0.0..=1.0).contains(p))
    }
}

/// Poisson clutter, uniform over distance and angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClutterModel {
    pub mu_fp: f64,
    pub d_max: f64,
}

impl Default for ClutterModel {
    fn default() -> Self {
        Self {
            mu_fp: 1.0,
            d_max: 30.0,
        }
    }
}

impl ClutterModel {
    /// Clutter density, constant over the support.
    #[inline]
    pub fn density(&self) -> f64 {
        1.0 / (2.0 * PI * self.d_max)
    }

    pub fn is_valid(&self) -> bool {
        self.mu_fp >= 0.0 && self.d_max > 0.0
    }
}

pub fn fp_density(z: &Measurement, clutter: &ClutterModel) -> Result<f64, MeasurementError> {
    if !(0.0..=clutter.d_max).contains(&z.z_d) {
        return Err(MeasurementError::OutOfSupport {
            z_d: z.z_d,
            d_max: clutter.d_max,
        });
    }
    Ok(clutter.density())
}

/// Gaussian density of `z` around the predicted distance and angle.
#[inline]
pub fn gaussian_likelihood(z: &Measurement, d: f64, phi: f64, noise: NoiseStd) -> f64 {
    let ed = (z.z_d - d) / noise.sigma_d;
    let ep = wrap_angle(z.z_phi - phi) / noise.sigma_phi;
    (-0.5 * (ed * ed + ep * ep)).exp() / (2.0 * PI * noise.sigma_d * noise.sigma_phi)
}

/// Likelihood of `z` for `path` given the agent pose and the MVAs the path uses.
pub fn likelihood(
    z: &Measurement,
    agent: Point2,
    heading: f64,
    pa: Point2,
    path: PathClass,
    mva: impl Fn(usize) -> Point2,
    profile: &NoiseProfile,
) -> Result<f64, MeasurementError> {
    let va = path.virtual_anchor(pa, mva)?;
    let (d, phi) = path_distance_angle(agent, heading, va)?;
    let noise = z.noise.unwrap_or_else(|| profile.class(path));
    Ok(gaussian_likelihood(z, d, phi, noise))
}

/// Ground truth the generator needs.
#[derive(Debug, Clone, Copy)]
pub struct World<'a> {
    pub surfaces: &'a [Surface],
    pub env: &'a Environment,
    /// Whether double-bounce paths exist in the data.
    pub doubles: bool,
}

/// Origin of a generated measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Path(PathClass),
    Clutter,
}

#[derive(Debug, Clone, Default)]
pub struct MeasurementBatch {
    pub measurements: Vec<Measurement>,
    pub origins: Vec<Origin>,
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws one measurement batch for an agent at `agent` with orientation `heading`.
///
/// Every available path is detected with its class probability and perturbed
/// by Gaussian noise; Poisson clutter is appended and the batch is shuffled.
#[allow(clippy::too_many_arguments)]
pub fn generate_batch<R: Rng + ?Sized>(
    agent: Point2,
    heading: f64,
    pa: Point2,
    world: World<'_>,
    profile: &NoiseProfile,
    detection: &DetectionProfile,
    clutter: &ClutterModel,
    rng: &mut R,
) -> MeasurementBatch {
    let mut batch = MeasurementBatch::default();
    for path in PathClass::enumerate(world.surfaces.len(), world.doubles) {
        if !path_available(agent, pa, path, world.surfaces, world.env) {
            continue;
        }
        if !rng.gen_bool(detection.class(path).clamp(0.0, 1.0)) {
            continue;
        }
        let Ok(va) = path.virtual_anchor(pa, |s| world.surfaces[s].mva()) else {
            continue;
        };
        let Ok((d, phi)) = path_distance_angle(agent, heading, va) else {
            continue;
        };
        let noise = profile.for_path(path, d);
        let std = noise.unwrap_or_else(|| profile.class(path));
        batch.measurements.push(Measurement {
            z_d: d + std.sigma_d * normal(rng),
            z_phi: wrap_angle(phi + std.sigma_phi * normal(rng)),
            noise,
        });
        batch.origins.push(Origin::Path(path));
    }
    let n_fp = if clutter.mu_fp > 0.0 {
        Poisson::new(clutter.mu_fp).map_or(0, |p| p.sample(rng) as usize)
    } else {
        0
    };
    for _ in 0..n_fp {
        let z_d = rng.gen_range(0.0..clutter.d_max);
        let z_phi = rng.gen_range(-PI..PI);
        let noise = profile.for_path(PathClass::Single(0), z_d);
        batch.measurements.push(Measurement { z_d, z_phi, noise });
        batch.origins.push(Origin::Clutter);
    }
    let mut order: Vec<usize> = (0..batch.measurements.len()).collect();
    order.shuffle(rng);
    MeasurementBatch {
        measurements: order.iter().map(|&i| batch.measurements[i]).collect(),
        origins: order.iter().map(|&i| batch.origins[i]).collect(),
    }
}
