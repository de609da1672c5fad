//! Message passing for the measurements of one physical anchor.

use super::resample::{exp_normalized, log_mean_exp, systematic};
use super::{FilterError, FilterModel, PmvaBelief};
use crate::association::{run_association, AssociationInput, Table};
use crate::geometry::{va_to_mva, wrap_angle, Point2, EPS_GEO};
use crate::measurement::{Measurement, NoiseStd};
use crate::raytrace::{segment_intersection, trace_backward, Bounce, PathClass};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

/// Existence probabilities stay below one so that a surface that is
/// certainly detectable but not detected lowers weights instead of zeroing them.
pub const MAX_EXISTENCE: f64 = 1.0 - 1e-12;

/// Agent particles seen by every anchor of the current step.
#[derive(Debug, Clone, Copy)]
pub struct PaContext<'a> {
    pub model: &'a FilterModel,
    pub positions: &'a [Point2],
    pub headings: &'a [f64],
    pub pa: Point2,
}

/// Bookkeeping of one anchor update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PaReport {
    /// Legacy surfaces entering the update, including those born at the previous anchor.
    pub legacy_before: usize,
    pub measurements: usize,
    /// Surfaces kept after pruning.
    pub kept: usize,
    pub assoc_iterations: usize,
    pub assoc_converged: bool,
}

/// Proposal particles for a surface first seen in one measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct NewProposal {
    pub particles: Vec<Point2>,
    /// Importance weights: the birth density at each particle.
    pub weights: Vec<f64>,
}

impl NewProposal {
    pub fn mean_weight(&self) -> f64 {
        self.weights.iter().sum::<f64>() / self.weights.len().max(1) as f64
    }
}

#[inline]
fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws surface particles explaining `z` as a single-bounce path.
///
/// For every agent particle the measurement is perturbed by its noise, turned
/// into a virtual anchor by inverting the distance/angle map and then into an
/// MVA. Draws that land on a degenerate pair are replaced by a zero-weight
/// sample of the birth density.
pub fn draw_new_pmva<R: Rng + ?Sized>(
    z: &Measurement,
    noise: NoiseStd,
    ctx: &PaContext<'_>,
    rng: &mut R,
) -> NewProposal {
    let birth = &ctx.model.params.birth;
    let n = ctx.positions.len();
    let mut particles = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (&p, &heading) in ctx.positions.iter().zip(ctx.headings) {
        let d = z.z_d - noise.sigma_d * normal(rng);
        let phi = z.z_phi - noise.sigma_phi * normal(rng);
        let va = p - Point2::from_polar(d, phi + heading);
        match va_to_mva(va, ctx.pa) {
            Ok(mva) if d > 0.0 => {
                particles.push(mva);
                weights.push(birth.density(mva));
            }
            _ => {
                let h = birth.half_width;
                let mva = birth.center + Point2::new(rng.gen_range(-h..h), rng.gen_range(-h..h));
                particles.push(mva);
                weights.push(0.0);
            }
        }
    }
    NewProposal { particles, weights }
}

/// Noise constants of every measurement for each path class.
struct MeasTable {
    /// Measurement indices sorted by distance.
    order: Vec<usize>,
    sorted_d: Vec<f64>,
    /// Per class: likelihood prefactor, inverse sigmas.
    coef: [Vec<f64>; 3],
    inv_sd: [Vec<f64>; 3],
    inv_sp: [Vec<f64>; 3],
    max_sd: [f64; 3],
}

fn class_index(path: PathClass) -> usize {
    match path {
        PathClass::Los => 0,
        PathClass::Single(_) => 1,
        PathClass::Double { .. } => 2,
    }
}

impl MeasTable {
    fn new(zs: &[Measurement], model: &FilterModel) -> Self {
        let mut order: Vec<usize> = (0..zs.len()).collect();
        order.sort_by(|&a, &b| zs[a].z_d.total_cmp(&zs[b].z_d));
        let sorted_d = order.iter().map(|&m| zs[m].z_d).collect();
        let intensity = model.clutter_intensity();
        let classes = [
            PathClass::Los,
            PathClass::Single(0),
            PathClass::Double { last: 0, first: 1 },
        ];
        let mut t = MeasTable {
            order,
            sorted_d,
            coef: Default::default(),
            inv_sd: Default::default(),
            inv_sp: Default::default(),
            max_sd: [0.0; 3],
        };
        for (c, &class) in classes.iter().enumerate() {
            let pd = model.params.detection.class(class);
            for z in zs {
                let n = z.noise.unwrap_or_else(|| model.noise.class(class));
                t.coef[c].push(pd / (2.0 * PI * n.sigma_d * n.sigma_phi * intensity));
                t.inv_sd[c].push(1.0 / n.sigma_d);
                t.inv_sp[c].push(1.0 / n.sigma_phi);
                t.max_sd[c] = t.max_sd[c].max(n.sigma_d);
            }
        }
        t
    }
}

/// Evaluation of one path hypothesis over all agent particles.
struct Row {
    path: PathClass,
    /// Probability that every surface of the path exists.
    exist: f64,
    pd: f64,
    avail: Vec<bool>,
    /// (particle, measurement, scaled likelihood), sorted by particle.
    entries: Vec<(u32, u32, f64)>,
    miss_sum: f64,
    hit_sum: Vec<f64>,
}

impl Row {
    fn beta(&self, m: usize, n: f64) -> f64 {
        self.exist * self.hit_sum[m] / n
    }

    fn beta_none(&self, n: f64) -> f64 {
        self.exist * self.miss_sum / n + (1.0 - self.exist)
    }
}

#[allow(clippy::too_many_arguments)]
fn evaluate_row(
    path: PathClass,
    exist: f64,
    ctx: &PaContext<'_>,
    zs: &[Measurement],
    table: &MeasTable,
    bounces: &[Vec<Option<Bounce>>],
    single_va: &[Vec<Option<Point2>>],
) -> Row {
    let model = ctx.model;
    let params = &model.params;
    let n = ctx.positions.len();
    let c = class_index(path);
    let pd = params.detection.class(path);
    let gate = params.likelihood_gate;
    let window = gate * table.max_sd[c];
    let blocked = |f: Point2, t: Point2, _: [Option<usize>; 2]| {
        model
            .blockers
            .iter()
            .any(|w| segment_intersection(f, t, w.a, w.b).is_some())
    };
    let mut row = Row {
        path,
        exist,
        pd,
        avail: vec![false; n],
        entries: Vec::new(),
        miss_sum: 0.0,
        hit_sum: vec![0.0; zs.len()],
    };
    for i in 0..n {
        let agent = ctx.positions[i];
        let va = match path {
            PathClass::Los => Some(ctx.pa),
            PathClass::Single(s) => single_va[s][i],
            PathClass::Double { last, first } => match (bounces[last][i], single_va[first][i]) {
                (Some(b), Some(v)) => Some(b.surface.mirror(v)),
                _ => None,
            },
        };
        let Some(va) = va else {
            row.miss_sum += 1.0;
            continue;
        };
        let diff = agent - va;
        let d = diff.norm();
        let visible = d > EPS_GEO
            && pd > 0.0
            && (!params.visibility
                || match path {
                    PathClass::Los => trace_backward(agent, ctx.pa, &[], blocked),
                    PathClass::Single(s) => trace_backward(
                        agent,
                        ctx.pa,
                        &[bounces[s][i].expect("va implies bounce")],
                        blocked,
                    ),
                    PathClass::Double { last, first } => trace_backward(
                        agent,
                        ctx.pa,
                        &[
                            bounces[last][i].expect("va implies bounce"),
                            bounces[first][i].expect("va implies bounce"),
                        ],
                        blocked,
                    ),
                });
        if !visible {
            row.miss_sum += 1.0;
            continue;
        }
        row.avail[i] = true;
        row.miss_sum += 1.0 - pd;
        let lo = table.sorted_d.partition_point(|&zd| zd < d - window);
        if table.sorted_d.get(lo).map_or(true, |&zd| zd > d + window) {
            continue;
        }
        let phi = wrap_angle(diff.y.atan2(diff.x) - ctx.headings[i]);
        for k in lo..table.sorted_d.len() {
            if table.sorted_d[k] > d + window {
                break;
            }
            let m = table.order[k];
            let ed = (zs[m].z_d - d) * table.inv_sd[c][m];
            if ed.abs() > gate {
                continue;
            }
            let ep = wrap_angle(zs[m].z_phi - phi) * table.inv_sp[c][m];
            if ep.abs() > gate {
                continue;
            }
            let l = table.coef[c][m] * (-0.5 * (ed * ed + ep * ep)).exp();
            if l > 0.0 {
                row.entries.push((i as u32, m as u32, l));
                row.hit_sum[m] += l;
            }
        }
    }
    row
}

/// Per-particle log message factors of a row for given "surface exists" weights.
///
/// Computes `ln(e * h_i + 1 - e)` where `h_i` is the message conditioned on
/// existence, for every particle, and adds it to `acc`.
fn accumulate_log(row: &Row, r: &Table, k: usize, e: f64, acc: &mut [f64]) {
    let base_avail = (e * (1.0 - row.pd) + 1.0 - e).ln();
    let mut it = row.entries.iter().peekable();
    for (i, a) in acc.iter_mut().enumerate() {
        if !row.avail[i] {
            continue;
        }
        let mut h = 1.0 - row.pd;
        let mut touched = false;
        while let Some(&&(pi, m, l)) = it.peek() {
            if pi as usize != i {
                break;
            }
            h += r.get(k, m as usize) * l;
            touched = true;
            it.next();
        }
        *a += if touched {
            (e * h + 1.0 - e).ln()
        } else {
            base_avail
        };
    }
}

/// Updates the agent log-weights, the legacy surfaces and returns the surfaces
/// newly detected in `measurements`.
///
/// `fresh` holds the surfaces born at the previous anchor of this step; they
/// join the legacy set first.
pub fn process_pa<R: Rng + ?Sized>(
    ctx: &PaContext<'_>,
    log_w: &mut [f64],
    legacy: &mut Vec<PmvaBelief>,
    fresh: Vec<PmvaBelief>,
    measurements: &[Measurement],
    next_id: &mut u64,
    rng: &mut R,
) -> Result<(Vec<PmvaBelief>, PaReport), FilterError> {
    let model = ctx.model;
    let params = &model.params;
    let n = ctx.positions.len();
    let nf = n as f64;
    legacy.extend(fresh);
    let s_n = legacy.len();
    let m_n = measurements.len();

    // Proposals for surfaces first seen now.
    let proposals: Vec<NewProposal> = measurements
        .iter()
        .map(|z| draw_new_pmva(z, z.noise.unwrap_or(model.noise.single), ctx, rng))
        .collect();
    let intensity = model.clutter_intensity();
    let birth_mass: Vec<f64> = proposals
        .iter()
        .map(|p| params.mu_new * p.mean_weight() / intensity)
        .collect();

    // Geometry of every legacy particle.
    let bounces: Vec<Vec<Option<Bounce>>> = legacy
        .iter()
        .enumerate()
        .map(|(s, b)| b.particles.iter().map(|&m| model.reflector(m, s)).collect())
        .collect();
    let single_va: Vec<Vec<Option<Point2>>> = bounces
        .iter()
        .map(|row| {
            row.iter()
                .map(|b| b.map(|b| b.surface.mirror(ctx.pa)))
                .collect()
        })
        .collect();

    let table = MeasTable::new(measurements, model);
    let exist = |path: PathClass| match path {
        PathClass::Los => 1.0,
        PathClass::Single(s) => legacy[s].existence,
        PathClass::Double { last, first } => legacy[last].existence * legacy[first].existence,
    };
    let rows: Vec<Row> = PathClass::enumerate(s_n, params.doubles)
        .into_iter()
        .map(|path| {
            evaluate_row(
                path,
                exist(path),
                ctx,
                measurements,
                &table,
                &bounces,
                &single_va,
            )
        })
        .collect();

    // Data association.
    let mut beta = Table::filled(rows.len(), m_n + 1, 0.0);
    for (k, row) in rows.iter().enumerate() {
        let b = beta.row_mut(k);
        for m in 0..m_n {
            b[m + 1] = row.beta(m, nf);
        }
        // A path detected with certainty has no miss mass; keep it positive
        // so the association stays well posed.
        let peak = b[1..].iter().fold(0.0f64, |a, &v| a.max(v));
        b[0] = row.beta_none(nf).max(1e-12 * peak).max(f64::MIN_POSITIVE);
    }
    let mut xi = Table::filled(m_n, rows.len() + 1, 1.0);
    for (m, c) in birth_mass.iter().enumerate() {
        xi.set(m, 0, 1.0 + c);
    }
    let input = AssociationInput::new(beta, xi)?;
    let out = run_association(&input, params.assoc_iters, params.assoc_tol)?;
    let r = &out.meas_to_feature;
    let q = &out.feature_to_meas;

    // Agent and legacy messages.
    let mut log_a = vec![vec![0.0; n]; s_n];
    for (k, row) in rows.iter().enumerate() {
        accumulate_log(row, r, k, row.exist, log_w);
        match row.path {
            PathClass::Los => {}
            PathClass::Single(s) => accumulate_log(row, r, k, 1.0, &mut log_a[s]),
            PathClass::Double { last, first } => {
                let (e_last, e_first) = (legacy[last].existence, legacy[first].existence);
                accumulate_log(row, r, k, e_first, &mut log_a[last]);
                accumulate_log(row, r, k, e_last, &mut log_a[first]);
            }
        }
    }
    for (s, pm) in legacy.iter_mut().enumerate() {
        let lme = log_mean_exp(&log_a[s]);
        let e = pm.existence;
        pm.existence = if e <= 0.0 || lme == f64::NEG_INFINITY {
            0.0
        } else {
            let odds = (e.ln() + lme) - (1.0 - e).ln();
            (1.0 / (1.0 + (-odds).exp())).min(MAX_EXISTENCE)
        };
        let w = exp_normalized(&log_a[s]);
        if let Some(idx) = systematic(&w, n, rng) {
            pm.particles = idx.iter().map(|&i| pm.particles[i]).collect();
        }
    }

    // Newly detected surfaces.
    let mut born = Vec::with_capacity(m_n);
    for (m, prop) in proposals.into_iter().enumerate() {
        let c = birth_mass[m];
        let claimed: f64 = (0..rows.len()).map(|k| q.get(k, m)).sum();
        let existence = if c > 0.0 {
            (c / (c + 1.0 + claimed)).min(MAX_EXISTENCE)
        } else {
            0.0
        };
        let particles = match systematic(&prop.weights, n, rng) {
            Some(idx) => idx.iter().map(|&i| prop.particles[i]).collect(),
            None => prop.particles,
        };
        born.push(PmvaBelief {
            id: *next_id,
            particles,
            existence,
        });
        *next_id += 1;
    }

    let report_before = s_n;
    prune(legacy, &mut born, params.p_prune, params.max_pmvas);
    let report = PaReport {
        legacy_before: report_before,
        measurements: m_n,
        kept: legacy.len() + born.len(),
        assoc_iterations: out.iterations_used,
        assoc_converged: out.converged,
    };
    Ok((born, report))
}

/// Drops unlikely surfaces and caps the total count, preferring higher
/// existence and then older ids.
fn prune(legacy: &mut Vec<PmvaBelief>, born: &mut Vec<PmvaBelief>, p_prune: f64, max: usize) {
    legacy.retain(|s| s.existence >= p_prune);
    born.retain(|s| s.existence >= p_prune);
    if legacy.len() + born.len() <= max {
        return;
    }
    let mut all: Vec<(f64, u64)> = legacy
        .iter()
        .chain(born.iter())
        .map(|s| (s.existence, s.id))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let keep: std::collections::HashSet<u64> = all.iter().take(max).map(|x| x.1).collect();
    legacy.retain(|s| keep.contains(&s.id));
    born.retain(|s| keep.contains(&s.id));
}
