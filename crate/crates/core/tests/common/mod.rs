//! Independent reference implementations shared by the integration tests and
//! the acceptance harness.

#![allow(dead_code)]

use mvaslam::association::{feature_marginals, run_association, AssociationInput, Table};
use mvaslam::engine::{process_pa, PaContext, PmvaBelief, SlamFilter};
use mvaslam::measurement::{generate_batch, DetectionProfile, Measurement, World};
use mvaslam::raytrace::{Environment, PathClass, WallSegment};
use mvaslam::scenario::{builtin, ScenarioConfig, TrajectorySpec};
use mvaslam::Point2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Outcome of one acceptance check.
#[derive(Debug, Clone)]
pub struct Check {
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

// ---------------------------------------------------------------------------
// Ray tracing: forward ray walk with dense sampling.

/// Sampling step along walls and hops.
pub const STEP: f64 = 1e-3;
/// Cases closer than this to a segment endpoint or a grazing contact are not scored.
pub const MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Open,
    Closed,
    Unclear,
}

fn unit(v: Point2) -> Point2 {
    (1.0 / v.norm_sq().sqrt()) * v
}

/// Mirror image of a direction about a line with unit tangent `tangent`.
fn reflect_dir(v: Point2, tangent: Point2) -> Point2 {
    2.0 * v.dot(tangent) * tangent - v
}

fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.dot(ab)).clamp(0.0, 1.0);
    (a + t * ab - p).norm_sq().sqrt()
}

/// Part of the segment `from`-`to` inside the padded bounding box of `w`, as
/// a parameter range, via slab clipping.
fn clip_to_box(from: Point2, to: Point2, w: &WallSegment, pad: f64) -> Option<(f64, f64)> {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let d = to - from;
    for (start, delta, min, max) in [
        (from.x, d.x, w.a.x.min(w.b.x) - pad, w.a.x.max(w.b.x) + pad),
        (from.y, d.y, w.a.y.min(w.b.y) - pad, w.a.y.max(w.b.y) + pad),
    ] {
        if delta.abs() < 1e-15 {
            if start < min || start > max {
                return None;
            }
            continue;
        }
        let (t0, t1) = ((min - start) / delta, (max - start) / delta);
        lo = lo.max(t0.min(t1));
        hi = hi.min(t0.max(t1));
        if lo > hi {
            return None;
        }
    }
    Some((lo, hi))
}

/// Whether the hop crosses `w`, judged by sampling the hop densely near `w`.
fn hop_meets(from: Point2, to: Point2, w: &WallSegment) -> Verdict {
    let touching = [w.a, w.b]
        .iter()
        .any(|&e| point_segment_distance(e, from, to) < MARGIN)
        || [from, to]
            .iter()
            .any(|&e| point_segment_distance(e, w.a, w.b) < MARGIN);
    if touching {
        return Verdict::Unclear;
    }
    let Some((lo, hi)) = clip_to_box(from, to, w, MARGIN) else {
        return Verdict::Open;
    };
    let len = from.distance(to) * (hi - lo);
    let n = (len / STEP).ceil() as usize + 1;
    let hit = (0..=n).any(|i| {
        let t = lo + (hi - lo) * i as f64 / n as f64;
        let p = from + t * (to - from);
        point_segment_distance(p, w.a, w.b) < 0.5 * STEP
    });
    if hit {
        Verdict::Closed
    } else {
        Verdict::Open
    }
}

/// Combines the hop verdicts of all obstacles: a clean block decides.
fn hop_verdict(env: &Environment, from: Point2, to: Point2, exempt: &[usize]) -> Verdict {
    let mut unclear = false;
    let obstacles = env
        .walls
        .iter()
        .filter(|w| w.surface_index.map_or(true, |s| !exempt.contains(&s)))
        .chain(&env.blockers);
    for w in obstacles {
        match hop_meets(from, to, w) {
            Verdict::Closed => return Verdict::Closed,
            Verdict::Unclear => unclear = true,
            Verdict::Open => {}
        }
    }
    if unclear {
        Verdict::Unclear
    } else {
        Verdict::Open
    }
}

fn all_hops(env: &Environment, hops: &[(Point2, Point2, Vec<usize>)]) -> Verdict {
    let mut unclear = false;
    for (from, to, exempt) in hops {
        match hop_verdict(env, *from, *to, exempt) {
            Verdict::Closed => return Verdict::Closed,
            Verdict::Unclear => unclear = true,
            Verdict::Open => {}
        }
    }
    if unclear {
        Verdict::Unclear
    } else {
        Verdict::Open
    }
}

fn reflector(env: &Environment, surface: usize) -> WallSegment {
    *env.walls
        .iter()
        .find(|w| w.surface_index == Some(surface))
        .expect("reflector segment")
}

/// State of a ray launched from the anchor towards the wall point at `t`.
struct Ray {
    /// Reflection points along the way; only the first `bounces` are used.
    hits: [Point2; 2],
    bounces: usize,
    /// Where the last leg starts and its direction.
    origin: Point2,
    dir: Point2,
    /// Position of the second hit along its wall; outside [0, len] misses it.
    along: f64,
}

/// A wall as start point, unit tangent and length.
#[derive(Clone, Copy)]
struct Line {
    start: Point2,
    tangent: Point2,
    len: f64,
}

impl Line {
    fn of(w: &WallSegment) -> Self {
        Self {
            start: w.a,
            tangent: unit(w.b - w.a),
            len: w.length(),
        }
    }
}

/// Launches a ray from `pa` to the point at arc length `t` on `first` and,
/// when `second` is given, follows it to the line of `second`. Directions
/// are left unnormalized since only signs are used.
fn launch(pa: Point2, first: Line, t: f64, second: Option<Line>) -> Option<Ray> {
    let q1 = first.start + t * first.tangent;
    let dir = reflect_dir(q1 - pa, first.tangent);
    let Some(w) = second else {
        return Some(Ray {
            hits: [q1, q1],
            bounces: 1,
            origin: q1,
            dir,
            along: 0.0,
        });
    };
    // q1 + u dir = w.start + v tangent
    let den = dir.cross(w.tangent);
    if den.abs() < 1e-12 * dir.norm_sq().sqrt() {
        return None;
    }
    let rel = w.start - q1;
    let u = rel.cross(w.tangent) / den;
    let v = rel.cross(dir) / den;
    if u <= 0.0 {
        return None;
    }
    let q2 = q1 + u * dir;
    Some(Ray {
        hits: [q1, q2],
        bounces: 2,
        origin: q2,
        dir: reflect_dir(dir, w.tangent),
        along: v,
    })
}

/// Signed offset of `agent` from the last leg, if it lies ahead of the ray.
fn miss(ray: &Ray, agent: Point2) -> Option<f64> {
    let rel = agent - ray.origin;
    (rel.dot(ray.dir) > 0.0).then(|| ray.dir.cross(rel))
}

/// Availability of a reflected path found by sweeping the launch point along `first`.
fn reflected(env: &Environment, agent: Point2, pa: Point2, first: usize, second: Option<usize>) -> Verdict {
    let wf = Line::of(&reflector(env, first));
    let ws = second.map(|s| Line::of(&reflector(env, s)));
    let len = wf.len;
    let n = (len / STEP).ceil() as usize;
    // End samples sit just inside the wall so rays leaving a corner still meet
    // the adjacent wall.
    let at = |i: usize| (len * i as f64 / n as f64).clamp(1e-6, len - 1e-6);
    let eval = |t: f64| launch(pa, wf, t, ws).and_then(|r| miss(&r, agent).map(|h| (r, h)));
    let mut roots = Vec::new();
    let mut prev = eval(at(0)).map(|(_, h)| h);
    for i in 1..=n {
        let cur = eval(at(i)).map(|(_, h)| h);
        if let (Some(a), Some(b)) = (prev, cur) {
            if a == 0.0 || a.signum() != b.signum() {
                roots.push(i);
            }
        }
        prev = cur;
    }
    if roots.is_empty() {
        return Verdict::Closed;
    }
    if roots.len() > 1 || roots.iter().any(|&i| i == 1 || i == n) {
        return Verdict::Unclear;
    }
    let (mut lo, mut hi) = (at(roots[0] - 1), at(roots[0]));
    let sign_lo = eval(lo).map(|(_, h)| h.signum());
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        match eval(mid) {
            Some((_, h)) if Some(h.signum()) == sign_lo => lo = mid,
            Some(_) => hi = mid,
            None => return Verdict::Unclear,
        }
    }
    let Some((ray, _)) = eval(0.5 * (lo + hi)) else {
        return Verdict::Unclear;
    };
    if let Some(w) = &ws {
        let l2 = w.len;
        if ray.along < -MARGIN || ray.along > l2 + MARGIN {
            return Verdict::Closed;
        }
        if ray.along < MARGIN || ray.along > l2 - MARGIN {
            return Verdict::Unclear;
        }
    }
    let mut hops = Vec::new();
    let mut from = pa;
    let ids: Vec<usize> = std::iter::once(first).chain(second).collect();
    for (k, &q) in ray.hits[..ray.bounces].iter().enumerate() {
        let exempt = ids[k.saturating_sub(1)..=k].to_vec();
        hops.push((from, q, exempt));
        from = q;
    }
    hops.push((from, agent, vec![*ids.last().unwrap()]));
    all_hops(env, &hops)
}

/// Reference availability of `path` by brute-force forward ray walking.
pub fn oracle_available(env: &Environment, agent: Point2, pa: Point2, path: PathClass) -> Verdict {
    match path {
        PathClass::Los => all_hops(env, &[(pa, agent, vec![])]),
        PathClass::Single(s) => reflected(env, agent, pa, s, None),
        PathClass::Double { last, first } => reflected(env, agent, pa, first, Some(last)),
    }
}

/// Uniform agent positions inside `[x0, x1] x [y0, y1]` at least 1 cm away from every segment.
pub fn agent_positions(env: &Environment, bounds: [f64; 4], count: usize, seed: u64) -> Vec<Point2> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = Point2::new(r.gen_range(bounds[0]..bounds[1]), r.gen_range(bounds[2]..bounds[3]));
        let clear = env
            .walls
            .iter()
            .chain(&env.blockers)
            .all(|w| point_segment_distance(p, w.a, w.b) > 1e-2);
        if clear {
            out.push(p);
        }
    }
    out
}

#[derive(Debug, Default, Clone, Copy)]
pub struct RayTally {
    pub scored: usize,
    pub agree: usize,
    pub skipped: usize,
}

/// Compares the tracer with the oracle over all paths and anchors of a scenario.
pub fn compare_raytrace(name: &str, bounds: [f64; 4], count: usize, seed: u64) -> RayTally {
    let cfg = builtin(name).expect("bundled scenario");
    let world = cfg.world();
    let paths = PathClass::enumerate(world.surfaces.len(), true);
    let mut tally = RayTally::default();
    for agent in agent_positions(&world.env, bounds, count, seed) {
        for &pa in &world.pas {
            for &path in &paths {
                let expected = match oracle_available(&world.env, agent, pa, path) {
                    Verdict::Open => true,
                    Verdict::Closed => false,
                    Verdict::Unclear => {
                        tally.skipped += 1;
                        continue;
                    }
                };
                let got = mvaslam::raytrace::path_available(agent, pa, path, &world.surfaces, &world.env);
                tally.scored += 1;
                if got == expected {
                    tally.agree += 1;
                } else if std::env::var_os("ORACLE_VERBOSE").is_some() {
                    eprintln!("{name}: agent {agent:?} pa {pa:?} {path:?}: tracer {got}, oracle {expected}");
                }
            }
        }
    }
    tally
}

pub const RECT_BOUNDS: [f64; 4] = [-5.0, 5.0, -3.5, 3.5];
pub const NONRECT_BOUNDS: [f64; 4] = [-1.5, 6.0, -1.5, 7.5];

// ---------------------------------------------------------------------------
// Association: exact marginals by enumerating every consistent event.

pub struct ExactMarginals {
    /// K x (M + 1)
    pub features: Vec<Vec<f64>>,
    /// M x (K + 1)
    pub measurements: Vec<Vec<f64>>,
}

pub fn enumerate_marginals(beta: &[Vec<f64>], xi: &[Vec<f64>]) -> ExactMarginals {
    let (k_n, m_n) = (beta.len(), xi.len());
    let mut features = vec![vec![0.0; m_n + 1]; k_n];
    let mut measurements = vec![vec![0.0; k_n + 1]; m_n];
    let mut choice = vec![0usize; k_n];
    let mut total = 0.0;
    fn walk(k: usize, choice: &mut Vec<usize>, m_n: usize, acc: &mut dyn FnMut(&[usize])) {
        if k == choice.len() {
            acc(choice);
            return;
        }
        for a in 0..=m_n {
            if a > 0 && choice[..k].contains(&a) {
                continue;
            }
            choice[k] = a;
            walk(k + 1, choice, m_n, acc);
        }
    }
    walk(0, &mut choice, m_n, &mut |c: &[usize]| {
        let mut owner = vec![0usize; m_n];
        let mut w: f64 = c.iter().enumerate().map(|(k, &a)| beta[k][a]).product();
        for (k, &a) in c.iter().enumerate() {
            if a > 0 {
                owner[a - 1] = k + 1;
            }
        }
        w *= owner.iter().enumerate().map(|(m, &o)| xi[m][o]).product::<f64>();
        total += w;
        for (k, &a) in c.iter().enumerate() {
            features[k][a] += w;
        }
        for (m, &o) in owner.iter().enumerate() {
            measurements[m][o] += w;
        }
    });
    for row in features.iter_mut().chain(measurements.iter_mut()) {
        row.iter_mut().for_each(|v| *v /= total);
    }
    ExactMarginals {
        features,
        measurements,
    }
}

/// Marginals implied by the BP messages.
pub fn bp_marginals(beta: &[Vec<f64>], xi: &[Vec<f64>], max_iters: usize, tol: f64) -> (ExactMarginals, usize, bool) {
    let (k_n, m_n) = (beta.len(), xi.len());
    let input = AssociationInput::new(
        Table::from_rows(beta, m_n + 1).unwrap(),
        Table::from_rows(xi, k_n + 1).unwrap(),
    )
    .unwrap();
    let out = run_association(&input, max_iters, tol).unwrap();
    let features = feature_marginals(&input, &out).to_rows();
    let measurements = (0..m_n)
        .map(|m| {
            let mut row: Vec<f64> = (0..=k_n).map(|k| xi[m][k] * out.sigma_out.get(m, k)).collect();
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
            row
        })
        .collect();
    (
        ExactMarginals {
            features,
            measurements,
        },
        out.iterations_used,
        out.converged,
    )
}

pub fn random_instance<R: Rng>(r: &mut R, k_n: usize, m_n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut entry = |zero_ok: bool| {
        if zero_ok && r.gen_bool(0.2) {
            0.0
        } else {
            r.gen_range(0.05..2.0)
        }
    };
    let beta = (0..k_n)
        .map(|_| (0..=m_n).map(|a| entry(a > 0)).collect())
        .collect();
    let xi = (0..m_n)
        .map(|_| (0..=k_n).map(|a| entry(a > 0)).collect())
        .collect();
    (beta, xi)
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn max_abs_diff(a: &ExactMarginals, b: &ExactMarginals) -> f64 {
    a.features
        .iter()
        .chain(&a.measurements)
        .zip(b.features.iter().chain(&b.measurements))
        .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Assignment by permutation search.

pub fn brute_force_assignment(cost: &[Vec<f64>]) -> f64 {
    fn go(row: usize, used: &mut Vec<bool>, cost: &[Vec<f64>], acc: f64, best: &mut f64) {
        if row == cost.len() {
            *best = best.min(acc);
            return;
        }
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                go(row + 1, used, cost, acc + cost[row][c], best);
                used[c] = false;
            }
        }
    }
    let cols = cost.first().map_or(0, Vec::len);
    let mut best = f64::INFINITY;
    go(0, &mut vec![false; cols], cost, 0.0, &mut best);
    if cost.is_empty() {
        0.0
    } else {
        best
    }
}

pub fn random_points<R: Rng>(r: &mut R, n: usize, half: f64) -> Vec<Point2> {
    (0..n)
        .map(|_| Point2::new(r.gen_range(-half..half), r.gen_range(-half..half)))
        .collect()
}

// ---------------------------------------------------------------------------
// Filter invariants.

/// The rectangular room with a short trajectory and few particles.
pub fn small_config(steps: usize, particles: usize) -> ScenarioConfig {
    let mut cfg = builtin("exp1_rect_room").unwrap();
    let points = cfg.trajectory().iter().take(steps).map(|s| s.pos).collect();
    cfg.trajectory = TrajectorySpec::Waypoints { points };
    cfg.params.particles = particles;
    cfg
}

/// Measurement batches of one trajectory step for every anchor.
pub fn batches_at<R: Rng>(cfg: &ScenarioConfig, step: usize, r: &mut R) -> Vec<Vec<Measurement>> {
    let world = cfg.world();
    let truth = &world.trajectory[step];
    let heading = truth.heading_or(0.0, 1e-9);
    let view = World {
        surfaces: &world.surfaces,
        env: &world.env,
        doubles: cfg.doubles(),
    };
    world
        .pas
        .iter()
        .map(|&pa| {
            generate_batch(
                truth.pos,
                heading,
                pa,
                view,
                &cfg.noise,
                &cfg.params.detection,
                &cfg.clutter,
                r,
            )
            .measurements
        })
        .collect()
}

/// With zero detection probability the agent weights only change by a common
/// constant, so the posterior equals the prediction.
pub fn check_pure_prediction(trials: usize) -> Check {
    let mut cfg = small_config(5, 200);
    cfg.params.detection = DetectionProfile::uniform(0.0);
    let model = cfg.filter_model();
    let mut r = rng(11);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = 200;
        let positions = random_points(&mut r, n, 3.0);
        let headings: Vec<f64> = (0..n).map(|_| r.gen_range(-PI..PI)).collect();
        let ctx = PaContext {
            model: &model,
            positions: &positions,
            headings: &headings,
            pa: model.pas[0],
        };
        let mut legacy: Vec<PmvaBelief> = (0..3)
            .map(|id| PmvaBelief {
                id,
                particles: (0..n).map(|_| Point2::new(r.gen_range(4.0..6.0), r.gen_range(-1.0..1.0))).collect(),
                existence: r.gen_range(0.1..1.0),
            })
            .collect();
        let before: Vec<f64> = legacy.iter().map(|p| p.existence).collect();
        let meas: Vec<Measurement> = (0..4)
            .map(|_| Measurement::new(r.gen_range(1.0..10.0), r.gen_range(-PI..PI)))
            .collect();
        let mut log_w = vec![0.0; n];
        let mut next_id = 100;
        if process_pa(&ctx, &mut log_w, &mut legacy, Vec::new(), &meas, &mut next_id, &mut r).is_err() {
            return Check::new(false, "update failed");
        }
        let spread = log_w.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
            - log_w.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        worst = worst.max(spread);
        let drift = legacy
            .iter()
            .zip(&before)
            .map(|(p, e)| (p.existence - e).abs())
            .fold(0.0, f64::max);
        worst = worst.max(drift);
    }
    Check::new(worst < 1e-12, format!("max log-weight spread / existence drift {worst:.2e}"))
}

/// Weights stay normalized and existences stay in [0, 1] without NaN over
/// random steps with random measurement batches.
pub fn check_weights_and_existence(steps: usize) -> Check {
    let cfg = small_config(5, 100);
    let mut r = rng(12);
    let start = cfg.world().trajectory[0].pos;
    let mut filter = SlamFilter::new(cfg.filter_model(), start, 3).unwrap();
    let mut worst_sum: f64 = 0.0;
    for step in 0..steps {
        let batches: Vec<Vec<Measurement>> = (0..cfg.pas.len())
            .map(|_| {
                let m = r.gen_range(0..6);
                (0..m)
                    .map(|_| Measurement::new(r.gen_range(0.0..30.0), r.gen_range(-PI..PI)))
                    .collect()
            })
            .collect();
        let est = match filter.step(&batches) {
            Ok(e) => e,
            Err(e) => return Check::new(false, format!("step {step}: {e}")),
        };
        let sum: f64 = filter.agent().weights.iter().sum();
        worst_sum = worst_sum.max((sum - 1.0).abs());
        let bad_existence = filter
            .pmvas()
            .iter()
            .any(|p| !(0.0..=1.0).contains(&p.existence));
        let finite = est.agent.pos.is_finite() && est.heading.is_finite();
        if bad_existence || !finite || worst_sum > 1e-12 {
            return Check::new(false, format!("step {step}: weight sum error {worst_sum:.2e}, existence ok {}, finite {finite}", !bad_existence));
        }
    }
    Check::new(true, format!("{steps} steps, max weight-sum error {worst_sum:.2e}"))
}

/// Without pruning the number of surfaces grows by exactly the number of measurements.
pub fn check_bookkeeping(steps: usize) -> Check {
    let mut cfg = small_config(steps + 1, 100);
    cfg.params.p_prune = 0.0;
    cfg.params.max_pmvas = 1_000_000;
    let mut r = rng(13);
    let mut filter = SlamFilter::new(cfg.filter_model(), cfg.world().trajectory[0].pos, 5).unwrap();
    let mut count = 0;
    for step in 1..=steps {
        let batches = batches_at(&cfg, step, &mut r);
        let m: usize = batches.iter().map(Vec::len).sum();
        let est = match filter.step(&batches) {
            Ok(e) => e,
            Err(e) => return Check::new(false, format!("step {step}: {e}")),
        };
        if est.pmva_count != count + m || filter.pmvas().len() != count + m {
            return Check::new(false, format!("step {step}: {} surfaces, expected {}", est.pmva_count, count + m));
        }
        count += m;
    }
    Check::new(true, format!("{steps} steps, {count} surfaces"))
}

/// Experiment outputs do not depend on the worker count.
pub fn check_thread_determinism() -> Check {
    use mvaslam::eval::{run_experiment, write_csv};
    let cfg = small_config(15, 150);
    let mut outputs = Vec::new();
    for threads in [1, 4, 8] {
        let exp = match run_experiment(&cfg, 6, 77, threads) {
            Ok(e) => e,
            Err(e) => return Check::new(false, e.to_string()),
        };
        let mut csv = Vec::new();
        write_csv(&exp.records, &mut csv).unwrap();
        let summary = serde_json::to_string(&exp.summary).unwrap();
        outputs.push((csv, summary));
    }
    let same = outputs.windows(2).all(|w| w[0] == w[1]);
    Check::new(same, "1, 4 and 8 workers")
}

// ---------------------------------------------------------------------------
// Geometry.

/// A random surface, given by its MVA, at 0.5 to 15 m from the origin.
pub fn random_mva<R: Rng>(r: &mut R) -> Point2 {
    Point2::from_polar(r.gen_range(1.0..30.0), r.gen_range(-PI..PI))
}

/// Signed distance of `p` from the surface with MVA `mva`, positive on the origin side.
pub fn side(p: Point2, mva: Point2) -> f64 {
    let len = mva.norm_sq().sqrt();
    0.5 * len - p.dot(mva) / len
}

/// A point in the 20 m box at least 0.1 m from the surface.
pub fn point_off<R: Rng>(r: &mut R, mva: Point2) -> Point2 {
    loop {
        let p = Point2::new(r.gen_range(-10.0..10.0), r.gen_range(-10.0..10.0));
        if side(p, mva).abs() > 0.1 {
            return p;
        }
    }
}

/// Largest error of the MVA -> VA -> MVA round trip.
pub fn round_trip_error(count: usize, seed: u64) -> f64 {
    use mvaslam::geometry::{mva_to_va, va_to_mva};
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let mva = random_mva(&mut r);
            let pa = point_off(&mut r, mva);
            let back = va_to_mva(mva_to_va(mva, pa).unwrap(), pa).unwrap();
            back.distance(mva)
        })
        .fold(0.0, f64::max)
}

/// Largest difference between the two bounce orders on perpendicular surfaces.
pub fn perpendicular_order_error(count: usize, seed: u64) -> f64 {
    use mvaslam::geometry::double_bounce_va;
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let angle = r.gen_range(-PI..PI);
            let first = Point2::from_polar(r.gen_range(1.0..30.0), angle);
            let turn = if r.gen_bool(0.5) { 0.5 * PI } else { -0.5 * PI };
            let second = Point2::from_polar(r.gen_range(1.0..30.0), angle + turn);
            let pa = point_off(&mut r, first);
            let a = double_bounce_va(first, second, pa).unwrap();
            let b = double_bounce_va(second, first, pa).unwrap();
            a.distance(b)
        })
        .fold(0.0, f64::max)
}

/// Largest mismatch between the VA distance and the length of the reflected path.
pub fn reflected_length_error(count: usize, seed: u64) -> f64 {
    use mvaslam::geometry::mva_to_va;
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < count {
        let mva = random_mva(&mut r);
        let pa = point_off(&mut r, mva);
        let agent = point_off(&mut r, mva);
        if side(pa, mva).signum() != side(agent, mva).signum() {
            continue;
        }
        let va = mva_to_va(mva, pa).unwrap();
        let (sa, sv) = (side(agent, mva), side(va, mva));
        let hit = agent + (sa / (sa - sv)) * (va - agent);
        let bounced = pa.distance(hit) + hit.distance(agent);
        worst = worst.max((bounced - agent.distance(va)).abs());
        done += 1;
    }
    worst
}
