//! Metrics and Monte-Carlo experiments.

mod ospa;

pub use ospa::{min_cost_assignment, ospa, OspaParams};

use crate::engine::{FilterError, SlamFilter};
use crate::geometry::{GeometryError, Point2};
use crate::measurement::{generate_batch, World as MeasWorld};
use crate::raytrace::{path_available, PathClass};
use crate::scenario::{ScenarioConfig, Setup, World};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io;
use std::path::Path;
use std::time::Instant;
use thiserror::Error;

/// A run counts as converged while its position error stays below this, meters.
pub const CONVERGENCE_LIMIT: f64 = 5.0;

/// Surfaces whose normals are within this angle of perpendicular produce one
/// double-bounce anchor for both bounce orders, radians.
pub const PERPENDICULAR_TOL: f64 = 10.0 * std::f64::consts::PI / 180.0;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// `splitmix64` output number `index` of the stream seeded with `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Surfaces and virtual anchors that can be observed somewhere along the track.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthSets {
    pub mvas: Vec<Point2>,
    /// Per anchor, excluding the anchor itself.
    pub vas: Vec<Vec<Point2>>,
}

impl TruthSets {
    pub fn from_world(world: &World, doubles: bool) -> Self {
        let paths = PathClass::enumerate(world.surfaces.len(), doubles);
        let seen = |pa: Point2, path: PathClass| {
            world.trajectory[1..]
                .iter()
                .any(|x| path_available(x.pos, pa, path, &world.surfaces, &world.env))
        };
        let mut mappable = vec![false; world.surfaces.len()];
        let mut vas = Vec::with_capacity(world.pas.len());
        for &pa in &world.pas {
            let mut set: Vec<Point2> = Vec::new();
            for &path in &paths[1..] {
                if !seen(pa, path) {
                    continue;
                }
                if let PathClass::Single(s) = path {
                    mappable[s] = true;
                }
                let va = path
                    .virtual_anchor(pa, |s| world.surfaces[s].mva())
                    .expect("valid surfaces");
                if set.iter().all(|v| v.distance(va) > 1e-6) {
                    set.push(va);
                }
            }
            vas.push(set);
        }
        let mvas = world
            .surfaces
            .iter()
            .zip(&mappable)
            .filter(|(_, &m)| m)
            .map(|(s, _)| s.mva())
            .collect();
        Self { mvas, vas }
    }
}

/// Virtual anchors of `pa` implied by a set of surface estimates.
pub fn estimated_vas(
    mvas: &[Point2],
    pa: Point2,
    doubles: bool,
) -> Result<Vec<Point2>, GeometryError> {
    let mut out = Vec::new();
    for path in &PathClass::enumerate(mvas.len(), doubles)[1..] {
        if let PathClass::Double { last, first } = *path {
            let cos = mvas[last].dot(mvas[first]) / (mvas[last].norm() * mvas[first].norm());
            if last < first && cos.abs() < PERPENDICULAR_TOL.sin() {
                continue;
            }
        }
        out.push(path.virtual_anchor(pa, |s| mvas[s])?);
    }
    Ok(out)
}

/// OSPA between the anchors implied by estimated surfaces and the true anchors.
pub fn va_ospa(
    confirmed: &[Point2],
    truth_vas: &[Point2],
    pa: Point2,
    doubles: bool,
    params: OspaParams,
) -> Result<f64, GeometryError> {
    Ok(ospa(
        &estimated_vas(confirmed, pa, doubles)?,
        truth_vas,
        params,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub n: usize,
    pub err_pos: f64,
    pub err_heading: f64,
    pub mospa_mva: f64,
    pub ospa_va: Vec<f64>,
    pub s_hat: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    /// The filter lost all weight before the end of the track.
    pub degenerate: bool,
    pub converged: bool,
    pub elapsed_s: f64,
}

/// Simulates one run of a scenario.
pub fn run_single(cfg: &ScenarioConfig, run: usize, seed: u64) -> Result<RunRecord, EvalError> {
    let start = Instant::now();
    let world = cfg.world();
    let model = cfg.filter_model();
    let doubles = cfg.doubles();
    let truth = TruthSets::from_world(&world, doubles);
    let ospa_params = OspaParams::default();
    let mut data_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let mut filter = SlamFilter::new(model, world.trajectory[0].pos, derive_seed(seed, 1))?;
    let meas_world = MeasWorld {
        surfaces: &world.surfaces,
        env: &world.env,
        doubles,
    };
    let eps = cfg.params.heading_eps;
    let mut heading = world.trajectory[0].heading_or(0.0, eps);
    let mut steps = Vec::with_capacity(world.trajectory.len());
    let mut degenerate = false;
    for (n, state) in world.trajectory.iter().enumerate().skip(1) {
        heading = state.heading_or(heading, eps);
        let batches: Vec<_> = world
            .pas
            .iter()
            .map(|&pa| {
                generate_batch(
                    state.pos,
                    heading,
                    pa,
                    meas_world,
                    &cfg.noise,
                    &cfg.params.detection,
                    &cfg.clutter,
                    &mut data_rng,
                )
                .measurements
            })
            .collect();
        let est = match filter.step(&batches) {
            Ok(est) => est,
            Err(FilterError::DegenerateWeights { .. }) => {
                degenerate = true;
                break;
            }
            Err(e) => return Err(e.into()),
        };
        let mvas: Vec<Point2> = est.features.iter().map(|f| f.mva).collect();
        let ospa_va = world
            .pas
            .iter()
            .zip(&truth.vas)
            .map(|(&pa, tv)| {
                va_ospa(&mvas, tv, pa, doubles, ospa_params).unwrap_or(ospa_params.cutoff)
            })
            .collect();
        steps.push(StepRecord {
            n,
            err_pos: est.agent.pos.distance(state.pos),
            err_heading: crate::geometry::wrap_angle(est.heading - heading).abs(),
            mospa_mva: ospa(&mvas, &truth.mvas, ospa_params),
            ospa_va,
            s_hat: est.features.len(),
        });
    }
    let converged = !degenerate && steps.iter().all(|s| s.err_pos < CONVERGENCE_LIMIT);
    Ok(RunRecord {
        run,
        seed,
        steps,
        degenerate,
        converged,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

/// Command-line style overrides applied on top of a scenario.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub particles: Option<usize>,
    pub setup: Option<Setup>,
    pub visibility: Option<bool>,
}

impl Overrides {
    pub fn apply(&self, cfg: &ScenarioConfig) -> ScenarioConfig {
        let mut cfg = cfg.clone();
        if let Some(i) = self.particles {
            cfg.params.particles = i;
        }
        if let Some(s) = self.setup {
            cfg.setup = s;
        }
        if let Some(v) = self.visibility {
            cfg.params.visibility = v;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub p50: f64,
    pub p90: f64,
    pub p95: f64,
    pub p99: f64,
    pub max: f64,
}

/// Deterministic aggregate of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub scenario: String,
    pub runs: usize,
    pub particles: usize,
    pub base_seed: u64,
    pub steps: usize,
    pub converged_runs: usize,
    pub diverged_runs: usize,
    pub mean_rmse: f64,
    pub mean_mospa_mva: f64,
    pub final_rmse: f64,
    pub final_mospa_mva: f64,
    /// Fraction of runs confirming exactly the true number of surfaces at the last step.
    pub final_full_map_fraction: f64,
    pub rmse_per_step: Vec<f64>,
    pub heading_rmse_per_step: Vec<f64>,
    pub mospa_mva_per_step: Vec<f64>,
    pub mospa_va_per_step: Vec<Vec<f64>>,
    /// Quantiles of every position error, diverged runs included.
    pub error_quantiles: Quantiles,
    /// Fraction of position errors not exceeding each threshold (meters).
    pub error_cdf: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub threads: usize,
    pub total_s: f64,
    pub mean_run_s: f64,
    pub mean_step_ms: f64,
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ScenarioConfig,
    pub records: Vec<RunRecord>,
    pub summary: Summary,
    pub timing: Timing,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

pub fn summarize(cfg: &ScenarioConfig, records: &[RunRecord], base_seed: u64) -> Summary {
    let steps = cfg.trajectory().len() - 1;
    let ok: Vec<&RunRecord> = records.iter().filter(|r| r.converged).collect();
    let per_step = |f: &dyn Fn(&StepRecord) -> f64| -> Vec<f64> {
        (0..steps)
            .map(|n| mean(ok.iter().map(|r| f(&r.steps[n]))))
            .collect()
    };
    let rmse_per_step: Vec<f64> = per_step(&|s| s.err_pos * s.err_pos)
        .into_iter()
        .map(f64::sqrt)
        .collect();
    let heading_rmse_per_step = per_step(&|s| s.err_heading * s.err_heading)
        .into_iter()
        .map(f64::sqrt)
        .collect();
    let mospa_mva_per_step = per_step(&|s| s.mospa_mva);
    let num_pas = cfg.pas.len();
    let mospa_va_per_step = (0..num_pas).map(|j| per_step(&|s| s.ospa_va[j])).collect();
    let mut errors: Vec<f64> = records
        .iter()
        .flat_map(|r| r.steps.iter().map(|s| s.err_pos))
        .collect();
    errors.sort_by(f64::total_cmp);
    let error_quantiles = Quantiles {
        p50: quantile(&errors, 0.5),
        p90: quantile(&errors, 0.9),
        p95: quantile(&errors, 0.95),
        p99: quantile(&errors, 0.99),
        max: errors.last().copied().unwrap_or(f64::NAN),
    };
    let error_cdf = [0.05, 0.1, 0.2, 0.3, 0.5, 1.0, 2.0, 5.0]
        .iter()
        .map(|&t| {
            (
                t,
                errors.partition_point(|&e| e <= t) as f64 / errors.len().max(1) as f64,
            )
        })
        .collect();
    let n_truth = TruthSets::from_world(&cfg.world(), cfg.doubles())
        .mvas
        .len();
    let full_map = records
        .iter()
        .filter(|r| r.steps.len() == steps && r.steps.last().is_some_and(|s| s.s_hat == n_truth))
        .count();
    Summary {
        scenario: cfg.name.clone(),
        runs: records.len(),
        particles: cfg.params.particles,
        base_seed,
        steps,
        converged_runs: ok.len(),
        diverged_runs: records.len() - ok.len(),
        mean_rmse: mean(rmse_per_step.iter().copied()),
        mean_mospa_mva: mean(mospa_mva_per_step.iter().copied()),
        final_rmse: rmse_per_step.last().copied().unwrap_or(f64::NAN),
        final_mospa_mva: mospa_mva_per_step.last().copied().unwrap_or(f64::NAN),
        final_full_map_fraction: full_map as f64 / records.len().max(1) as f64,
        rmse_per_step,
        heading_rmse_per_step,
        mospa_mva_per_step,
        mospa_va_per_step,
        error_quantiles,
        error_cdf,
    }
}

/// Runs `runs` independent simulations on a pool of `threads` workers.
///
/// Run `i` uses seed `derive_seed(base_seed, i)`, so results do not depend on
/// the number of runs or workers.
pub fn run_experiment(
    cfg: &ScenarioConfig,
    runs: usize,
    base_seed: u64,
    threads: usize,
) -> Result<Experiment, EvalError> {
    if runs == 0 {
        return Err(EvalError::Invalid("runs must be at least 1".into()));
    }
    cfg.validate()
        .map_err(|e| EvalError::Invalid(e.to_string()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| EvalError::Invalid(e.to_string()))?;
    let start = Instant::now();
    let records = pool.install(|| {
        (0..runs)
            .into_par_iter()
            .map(|i| run_single(cfg, i, derive_seed(base_seed, i as u64)))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let total_s = start.elapsed().as_secs_f64();
    let summary = summarize(cfg, &records, base_seed);
    let step_count: usize = records.iter().map(|r| r.steps.len()).sum();
    let run_s: f64 = records.iter().map(|r| r.elapsed_s).sum();
    let timing = Timing {
        threads: threads.max(1),
        total_s,
        mean_run_s: run_s / runs as f64,
        mean_step_ms: 1e3 * run_s / step_count.max(1) as f64,
    };
    Ok(Experiment {
        config: cfg.clone(),
        records,
        summary,
        timing,
    })
}

/// Per-step CSV rows for every run.
pub fn write_csv<W: io::Write>(records: &[RunRecord], out: W) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n",
        "run",
        "err_pos",
        "mospa_mva",
        "mospa_va_pa1",
        "mospa_va_pa2",
        "S_hat",
    ])?;
    for r in records {
        for s in &r.steps {
            let va = |j: usize| s.ospa_va.get(j).map_or(String::new(), |v| v.to_string());
            w.write_record([
                s.n.to_string(),
                r.run.to_string(),
                s.err_pos.to_string(),
                s.mospa_mva.to_string(),
                va(0),
                va(1),
                s.s_hat.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `runs.csv`, `summary.json` and `timing.json` into `dir`.
///
/// The first two depend only on the scenario, seed, run count and particle
/// count. Wall-clock figures live in `timing.json`.
pub fn write_outputs(exp: &Experiment, dir: &Path) -> Result<(), EvalError> {
    std::fs::create_dir_all(dir)?;
    write_csv(&exp.records, std::fs::File::create(dir.join("runs.csv"))?)?;
    let json = |v: &dyn erased::Json| v.to_pretty();
    std::fs::write(dir.join("summary.json"), json(&exp.summary) + "\n")?;
    std::fs::write(dir.join("timing.json"), json(&exp.timing) + "\n")?;
    Ok(())
}

mod erased {
    pub trait Json {
        fn to_pretty(&self) -> String;
    }

    impl<T: serde::Serialize> Json for T {
        fn to_pretty(&self) -> String {
            serde_json::to_string_pretty(self).expect("plain data serializes")
        }
    }
}
