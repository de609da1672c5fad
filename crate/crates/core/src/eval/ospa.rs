use crate::geometry::Point2;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OspaParams {
    pub cutoff: f64,
    pub order: f64,
}

impl Default for OspaParams {
    fn default() -> Self {
        Self {
            cutoff: 5.0,
            order: 1.0,
        }
    }
}

/// Minimum-cost assignment of every row to a distinct column (rows <= cols).
///
/// Shortest augmenting path variant of the Hungarian method, O(n^2 m).
/// Returns the column of each row and the total cost.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = cost.len();
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    let m = cost[0].len();
    assert!(n <= m, "assignment needs rows <= columns");
    // 1-based potentials; column 0 is a virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for row in 1..=n {
        owner[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=m {
        if owner[j] > 0 {
            assign[owner[j] - 1] = j - 1;
        }
    }
    let total = assign.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    (assign, total)
}

/// Optimal sub-pattern assignment distance between two point sets.
pub fn ospa(est: &[Point2], truth: &[Point2], params: OspaParams) -> f64 {
    let (small, large) = if est.len() <= truth.len() {
        (est, truth)
    } else {
        (truth, est)
    };
    let n = large.len();
    if n == 0 {
        return 0.0;
    }
    let c = params.cutoff;
    let p = params.order;
    let cost: Vec<Vec<f64>> = small
        .iter()
        .map(|a| {
            large
                .iter()
                .map(|b| a.distance(*b).min(c).powf(p))
                .collect()
        })
        .collect();
    let (_, matched) = min_cost_assignment(&cost);
    let missing = (n - small.len()) as f64 * c.powf(p);
    ((matched + missing) / n as f64).powf(1.0 / p)
}
