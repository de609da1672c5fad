//! Particle-based sum-product filter for joint agent tracking and surface mapping.
//!
//! Each time step predicts the agent and the known surfaces, then absorbs the
//! measurements of one physical anchor at a time. Surfaces detected for the
//! first time at one anchor join the legacy set before the next anchor is
//! processed. After the last anchor the agent belief is formed from the
//! accumulated weights and resampled.

mod params;
pub mod resample;
mod update;

pub use params::{BirthRegion, HyperParams, ReflectorExtent};
pub use update::{draw_new_pmva, process_pa, NewProposal, PaContext, PaReport};

use crate::association::AssociationError;
use crate::geometry::Point2;
use crate::measurement::{ClutterModel, Measurement, NoiseProfile};
use crate::raytrace::{Bounce, WallSegment};
use crate::Surface;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("all agent weights vanished at step {step}")]
    DegenerateWeights { step: usize },
    #[error("expected {expected} measurement batches (one per anchor), got {got}")]
    BatchCount { expected: usize, got: usize },
    #[error("invalid filter parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Association(#[from] AssociationError),
}

/// Position and velocity of the agent.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AgentState {
    pub pos: Point2,
    pub vel: Point2,
}

impl AgentState {
    pub fn new(pos: Point2, vel: Point2) -> Self {
        Self { pos, vel }
    }

    /// Direction of motion, or `fallback` when nearly at rest.
    #[inline]
    pub fn heading_or(&self, fallback: f64, eps: f64) -> f64 {
        if self.vel.norm() > eps {
            self.vel.y.atan2(self.vel.x)
        } else {
            fallback
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentBelief {
    pub particles: Vec<AgentState>,
    pub weights: Vec<f64>,
    pub last_heading: f64,
}

impl AgentBelief {
    /// Uniform prior around `start` with zero mean velocity.
    pub fn uniform_prior<R: Rng + ?Sized>(
        start: Point2,
        params: &HyperParams,
        rng: &mut R,
    ) -> Self {
        let n = params.particles;
        let mut u = |w: f64| if w > 0.0 { rng.gen_range(-w..=w) } else { 0.0 };
        let particles = (0..n)
            .map(|_| {
                let pos = start + Point2::new(u(params.init_pos_spread), u(params.init_pos_spread));
                let vel = Point2::new(u(params.init_vel_spread), u(params.init_vel_spread));
                AgentState { pos, vel }
            })
            .collect();
        Self {
            particles,
            weights: vec![1.0 / n as f64; n],
            last_heading: 0.0,
        }
    }

    /// Weighted mean state.
    pub fn mean(&self) -> AgentState {
        let (mut p, mut v) = (Point2::ORIGIN, Point2::ORIGIN);
        for (x, &w) in self.particles.iter().zip(&self.weights) {
            p = p + w * x.pos;
            v = v + w * x.vel;
        }
        let total: f64 = self.weights.iter().sum();
        AgentState {
            pos: (1.0 / total) * p,
            vel: (1.0 / total) * v,
        }
    }
}

/// A potential surface: particles over its MVA and an existence probability.
#[derive(Debug, Clone, PartialEq)]
pub struct PmvaBelief {
    pub id: u64,
    pub particles: Vec<Point2>,
    pub existence: f64,
}

impl PmvaBelief {
    pub fn mean(&self) -> Point2 {
        let s = self
            .particles
            .iter()
            .fold(Point2::ORIGIN, |acc, &p| acc + p);
        (1.0 / self.particles.len() as f64) * s
    }
}

#[inline]
fn gaussian2<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> Point2 {
    let x: f64 = StandardNormal.sample(rng);
    let y: f64 = StandardNormal.sample(rng);
    Point2::new(sigma * x, sigma * y)
}

/// Near-constant-velocity prediction of every agent particle.
pub fn predict_agent<R: Rng + ?Sized>(belief: &mut AgentBelief, params: &HyperParams, rng: &mut R) {
    let dt = params.dt;
    for x in &mut belief.particles {
        let w = gaussian2(rng, params.sigma_accel);
        x.pos = x.pos + dt * x.vel + (0.5 * dt * dt) * w;
        x.vel = x.vel + dt * w;
    }
}

/// Survival thinning and regularization jitter of legacy surfaces.
pub fn predict_legacy<R: Rng + ?Sized>(
    pmvas: &mut [PmvaBelief],
    params: &HyperParams,
    rng: &mut R,
) {
    for s in pmvas {
        s.existence *= params.survival;
        if params.sigma_mva > 0.0 {
            for p in &mut s.particles {
                *p = *p + gaussian2(rng, params.sigma_mva);
            }
        }
    }
}

/// A wall whose extent may be borrowed by nearby surface estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnownWall {
    pub mva: Point2,
    pub a: Point2,
    pub b: Point2,
}

/// Everything the filter assumes about the world.
#[derive(Debug, Clone)]
pub struct FilterModel {
    pub params: HyperParams,
    pub noise: NoiseProfile,
    pub clutter: ClutterModel,
    pub pas: Vec<Point2>,
    pub blockers: Vec<WallSegment>,
    pub known_walls: Vec<KnownWall>,
}

impl FilterModel {
    /// Reflector used for ray tracing a surface estimate with MVA `mva`.
    pub fn reflector(&self, mva: Point2, id: usize) -> Option<Bounce> {
        let surface = Surface::new(mva).ok()?;
        if self.params.reflector_extent == ReflectorExtent::Infinite {
            return Some(Bounce::unbounded(surface, id));
        }
        let gate2 = self.params.extent_gate * self.params.extent_gate;
        let nearest = self
            .known_walls
            .iter()
            .map(|w| ((w.mva - mva).norm_sq(), w))
            .filter(|(d2, _)| *d2 <= gate2)
            .min_by(|a, b| a.0.total_cmp(&b.0));
        match nearest {
            Some((_, w)) => {
                let c = surface.anchor_point();
                let t = surface.tangent();
                let (ta, tb) = (t.dot(w.a - c), t.dot(w.b - c));
                Some(Bounce {
                    surface,
                    a: c + ta * t,
                    b: c + tb * t,
                    id,
                })
            }
            None => Some(Bounce::unbounded(surface, id)),
        }
    }

    /// Clutter intensity at any measurement, floored to keep ratios finite.
    pub fn clutter_intensity(&self) -> f64 {
        self.clutter.mu_fp.max(1e-9) * self.clutter.density()
    }
}

/// Confirmed surface estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureEstimate {
    pub id: u64,
    pub mva: Point2,
    pub existence: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepEstimate {
    pub agent: AgentState,
    pub heading: f64,
    pub features: Vec<FeatureEstimate>,
    /// Surfaces carried into the next step.
    pub pmva_count: usize,
    pub reports: Vec<PaReport>,
}

/// The complete filter state for one run.
#[derive(Debug, Clone)]
pub struct SlamFilter {
    model: FilterModel,
    agent: AgentBelief,
    pmvas: Vec<PmvaBelief>,
    next_id: u64,
    step: usize,
    rng: ChaCha8Rng,
}

impl SlamFilter {
    pub fn new(model: FilterModel, start: Point2, seed: u64) -> Result<Self, FilterError> {
        model
            .params
            .validate()
            .map_err(FilterError::InvalidParams)?;
        if !model.noise.is_valid() || !model.clutter.is_valid() {
            return Err(FilterError::InvalidParams(
                "noise or clutter model out of range".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let agent = AgentBelief::uniform_prior(start, &model.params, &mut rng);
        Ok(Self {
            model,
            agent,
            pmvas: Vec::new(),
            next_id: 0,
            step: 0,
            rng,
        })
    }

    pub fn model(&self) -> &FilterModel {
        &self.model
    }

    pub fn agent(&self) -> &AgentBelief {
        &self.agent
    }

    pub fn pmvas(&self) -> &[PmvaBelief] {
        &self.pmvas
    }

    /// Processes one time step with one measurement batch per anchor.
    pub fn step(&mut self, batches: &[Vec<Measurement>]) -> Result<StepEstimate, FilterError> {
        let pas = &self.model.pas;
        if batches.len() != pas.len() {
            return Err(FilterError::BatchCount {
                expected: pas.len(),
                got: batches.len(),
            });
        }
        self.step += 1;
        let params = &self.model.params;
        predict_agent(&mut self.agent, params, &mut self.rng);
        predict_legacy(&mut self.pmvas, params, &mut self.rng);

        let positions: Vec<Point2> = self.agent.particles.iter().map(|x| x.pos).collect();
        let headings: Vec<f64> = self
            .agent
            .particles
            .iter()
            .map(|x| x.heading_or(self.agent.last_heading, params.heading_eps))
            .collect();
        let mut log_w: Vec<f64> = self.agent.weights.iter().map(|w| w.ln()).collect();
        let mut fresh: Vec<PmvaBelief> = Vec::new();
        let mut reports = Vec::with_capacity(pas.len());
        for (&pa, batch) in pas.iter().zip(batches) {
            let ctx = PaContext {
                model: &self.model,
                positions: &positions,
                headings: &headings,
                pa,
            };
            let (new, report) = process_pa(
                &ctx,
                &mut log_w,
                &mut self.pmvas,
                std::mem::take(&mut fresh),
                batch,
                &mut self.next_id,
                &mut self.rng,
            )?;
            fresh = new;
            reports.push(report);
        }
        self.pmvas.append(&mut fresh);
        self.finalize(log_w, reports)
    }

    fn finalize(
        &mut self,
        log_w: Vec<f64>,
        reports: Vec<PaReport>,
    ) -> Result<StepEstimate, FilterError> {
        let params = &self.model.params;
        let w = resample::exp_normalized(&log_w);
        let total: f64 = w.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(FilterError::DegenerateWeights { step: self.step });
        }
        self.agent.weights = w.iter().map(|v| v / total).collect();
        let estimate = self.agent.mean();
        let heading = estimate.heading_or(self.agent.last_heading, params.heading_eps);
        self.agent.last_heading = heading;

        let n = self.agent.particles.len();
        let idx = resample::systematic(&self.agent.weights, n, &mut self.rng)
            .ok_or(FilterError::DegenerateWeights { step: self.step })?;
        self.agent.particles = idx.iter().map(|&i| self.agent.particles[i]).collect();
        self.agent.weights = vec![1.0 / n as f64; n];

        let features = self
            .pmvas
            .iter()
            .filter(|s| s.existence > params.p_confirm)
            .map(|s| FeatureEstimate {
                id: s.id,
                mva: s.mean(),
                existence: s.existence,
            })
            .collect();
        Ok(StepEstimate {
            agent: estimate,
            heading,
            features,
            pmva_count: self.pmvas.len(),
            reports,
        })
    }
}
