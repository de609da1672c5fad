//! Loopy belief propagation for probabilistic data association.
//!
//! Features (propagation paths) and measurements are linked by consistency
//! checks: a measurement is claimed by at most one feature and vice versa.
//! Each message is binary ("claims this partner" versus "does not"), so it is
//! carried as a single ratio and a sweep costs O(K * M).

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_MAX_ITERS: usize = 20;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssociationError {
    #[error("non-finite value in association messages")]
    NonFinite,
    #[error("table shape mismatch: {0}")]
    Shape(&'static str),
    #[error("invalid input entry: {0}")]
    InvalidEntry(&'static str),
}

/// Dense row-major table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Table {
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>], cols: usize) -> Result<Self, AssociationError> {
        if rows.iter().any(|r| r.len() != cols) {
            return Err(AssociationError::Shape("ragged rows"));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data
            .chunks(self.cols.max(1))
            .take(self.rows)
            .map(<[f64]>::to_vec)
            .collect()
    }
}

/// `beta` is K x (M + 1): column 0 is "no measurement", column m + 1 is
/// measurement m. `xi` is M x (K + 1): column 0 is "new feature or clutter",
/// column k + 1 is feature k.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationInput {
    pub beta: Table,
    pub xi: Table,
}

impl AssociationInput {
    pub fn new(beta: Table, xi: Table) -> Result<Self, AssociationError> {
        let (k, m) = (beta.rows(), xi.rows());
        if beta.cols() != m + 1 || xi.cols() != k + 1 {
            return Err(AssociationError::Shape(
                "beta must be K x (M+1) and xi M x (K+1)",
            ));
        }
        if beta
            .data
            .iter()
            .chain(&xi.data)
            .any(|v| !v.is_finite() || *v < 0.0)
        {
            return Err(AssociationError::InvalidEntry(
                "entries must be finite and >= 0",
            ));
        }
        if (0..k).any(|r| beta.get(r, 0) <= 0.0) || (0..m).any(|r| xi.get(r, 0) <= 0.0) {
            return Err(AssociationError::InvalidEntry(
                "the 'none' entries must be positive",
            ));
        }
        Ok(Self { beta, xi })
    }

    pub fn num_features(&self) -> usize {
        self.beta.rows()
    }

    pub fn num_measurements(&self) -> usize {
        self.xi.rows()
    }
}

/// Normalized messages plus the raw ratios used by the filter.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationOutput {
    /// K x (M + 1), each row sums to one.
    pub eta: Table,
    /// M x (K + 1), each row sums to one.
    pub sigma_out: Table,
    /// Measurement-to-feature ratios, stored K x M.
    pub meas_to_feature: Table,
    /// Feature-to-measurement ratios, stored K x M.
    pub feature_to_meas: Table,
    pub iterations_used: usize,
    pub converged: bool,
}

/// `out[i] = sum of values except values[i]`, without cancellation.
fn exclusive_sums(values: &[f64], out: &mut [f64]) {
    let mut acc = 0.0;
    for (o, v) in out.iter_mut().zip(values) {
        *o = acc;
        acc += v;
    }
    acc = 0.0;
    for (o, v) in out.iter_mut().zip(values).rev() {
        *o += acc;
        acc += v;
    }
}

fn check(v: f64) -> Result<f64, AssociationError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(AssociationError::NonFinite)
    }
}

/// Runs loopy BP until the largest relative message change falls below `tol`
/// or `max_iters` sweeps have been done.
pub fn run_association(
    input: &AssociationInput,
    max_iters: usize,
    tol: f64,
) -> Result<AssociationOutput, AssociationError> {
    let (k_n, m_n) = (input.num_features(), input.num_measurements());
    let beta = &input.beta;
    let xi = &input.xi;
    let mut q = Table::filled(k_n, m_n, 0.0);
    let mut r = Table::filled(k_n, m_n, 0.0);
    let mut scratch = vec![0.0; k_n.max(m_n)];
    let mut terms = vec![0.0; k_n.max(m_n)];

    // Initialization: each feature's hit versus all its other options.
    for k in 0..k_n {
        let row = beta.row(k);
        let mut ex = vec![0.0; m_n + 1];
        exclusive_sums(row, &mut ex);
        for m in 0..m_n {
            q.set(k, m, check(row[m + 1] / ex[m + 1])?);
        }
    }

    let update_r = |q: &Table, r: &mut Table, scratch: &mut [f64], terms: &mut [f64]| {
        for m in 0..m_n {
            let xrow = xi.row(m);
            for k in 0..k_n {
                terms[k] = xrow[k + 1] * q.get(k, m);
            }
            exclusive_sums(&terms[..k_n], &mut scratch[..k_n]);
            for k in 0..k_n {
                r.set(k, m, check(xrow[k + 1] / (xrow[0] + scratch[k]))?);
            }
        }
        Ok::<(), AssociationError>(())
    };

    let mut iterations_used = 0;
    let mut converged = m_n == 0 || k_n == 0;
    while !converged && iterations_used < max_iters {
        iterations_used += 1;
        update_r(&q, &mut r, &mut scratch, &mut terms)?;
        let mut max_change: f64 = 0.0;
        for k in 0..k_n {
            let brow = beta.row(k);
            for m in 0..m_n {
                terms[m] = brow[m + 1] * r.get(k, m);
            }
            exclusive_sums(&terms[..m_n], &mut scratch[..m_n]);
            for m in 0..m_n {
                let new = check(brow[m + 1] / (brow[0] + scratch[m]))?;
                let old = q.get(k, m);
                let scale = new.abs().max(old.abs());
                if scale > 0.0 {
                    max_change = max_change.max((new - old).abs() / scale);
                }
                q.set(k, m, new);
            }
        }
        converged = max_change < tol;
    }
    update_r(&q, &mut r, &mut scratch, &mut terms)?;

    let mut eta = Table::filled(k_n, m_n + 1, 0.0);
    for k in 0..k_n {
        let total = 1.0 + r.row(k).iter().sum::<f64>();
        let row = eta.row_mut(k);
        row[0] = 1.0 / total;
        for m in 0..m_n {
            row[m + 1] = r.get(k, m) / total;
        }
    }
    let mut sigma_out = Table::filled(m_n, k_n + 1, 0.0);
    for m in 0..m_n {
        let total = check(1.0 + (0..k_n).map(|k| q.get(k, m)).sum::<f64>())?;
        let row = sigma_out.row_mut(m);
        row[0] = 1.0 / total;
        for k in 0..k_n {
            row[k + 1] = q.get(k, m) / total;
        }
    }
    Ok(AssociationOutput {
        eta,
        sigma_out,
        meas_to_feature: r,
        feature_to_meas: q,
        iterations_used,
        converged,
    })
}

/// Approximate marginal association probabilities of each feature,
/// proportional to `beta * eta`.
pub fn feature_marginals(input: &AssociationInput, out: &AssociationOutput) -> Table {
    let (k_n, cols) = (input.num_features(), input.beta.cols());
    let mut t = Table::filled(k_n, cols, 0.0);
    for k in 0..k_n {
        let row = t.row_mut(k);
        for a in 0..cols {
            row[a] = input.beta.get(k, a) * out.eta.get(k, a);
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    t
}
