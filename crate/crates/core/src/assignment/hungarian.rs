//! Rectangular Hungarian algorithm (shortest augmenting paths with potentials).
//!
//! Every cost column is matched to a distinct row; surplus rows stay
//! unassigned. Sentinel entries are replaced internally by a penalty larger
//! than any possible spread of finite totals, so the solver first maximizes the
//! number of finite matches and then minimizes their cost, without ever doing
//! arithmetic on 1e18.

use serde::{Deserialize, Serialize};

use super::{CostMatrix, SENTINEL};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub row: usize,
    pub column: usize,
    pub instance: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// Matched pairs ordered by column.
    pub pairs: Vec<Pair>,
    /// Sum of the matched entries (sentinels excluded).
    pub total_cost: f64,
    pub k: usize,
    pub t: usize,
    /// Instances that received fewer than `k` rows.
    pub unmatched: Vec<usize>,
}

impl Assignment {
    pub fn is_complete(&self) -> bool {
        self.unmatched.is_empty()
    }

    /// Rows assigned to `instance`, ascending.
    pub fn rows_for(&self, instance: usize) -> Vec<usize> {
        let mut rows: Vec<usize> = self
            .pairs
            .iter()
            .filter(|p| p.instance == instance)
            .map(|p| p.row)
            .collect();
        rows.sort_unstable();
        rows
    }

    fn from_matches(cost: &CostMatrix, matches: Vec<Option<usize>>) -> Self {
        let mut pairs = Vec::new();
        let mut total_cost = 0.0;
        let mut per_instance = vec![0usize; cost.t];
        for (column, row) in matches.into_iter().enumerate() {
            let Some(row) = row else { continue };
            let v = cost.get(row, column);
            if CostMatrix::is_sentinel(v) {
                continue;
            }
            let instance = cost.instance_of(column);
            per_instance[instance] += 1;
            total_cost += v;
            pairs.push(Pair {
                row,
                column,
                instance,
            });
        }
        let unmatched = (0..cost.t).filter(|&j| per_instance[j] < cost.k).collect();
        Assignment {
            pairs,
            total_cost,
            k: cost.k,
            t: cost.t,
            unmatched,
        }
    }
}

/// Minimum-cost matching of every column to a distinct row.
pub fn hungarian(cost: &CostMatrix) -> Result<Assignment> {
    let cols = cost.cols();
    // Candidate rows: those with at least one finite entry.
    let candidates: Vec<usize> = (0..cost.rows)
        .filter(|&i| (0..cols).any(|c| !CostMatrix::is_sentinel(cost.get(i, c))))
        .collect();
    if candidates.is_empty() {
        return Ok(Assignment::from_matches(cost, vec![None; cols]));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &i in &candidates {
        for c in 0..cols {
            let v = cost.get(i, c);
            if !CostMatrix::is_sentinel(v) {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    let penalty = hi + (cols as f64 + 1.0) * (hi - lo + 1.0);
    let workers = candidates.len().max(cols);
    let entry = |task: usize, worker: usize| -> f64 {
        match candidates.get(worker) {
            Some(&row) => {
                let v = cost.get(row, task);
                if v >= SENTINEL {
                    penalty
                } else {
                    v
                }
            }
            None => penalty,
        }
    };

    let worker_of_task = solve(cols, workers, entry);
    let matches = worker_of_task
        .into_iter()
        .map(|w| candidates.get(w).copied())
        .collect();
    Ok(Assignment::from_matches(cost, matches))
}

/// Assigns each of `n` tasks a distinct worker out of `m ≥ n`, minimizing the
/// total of `a(task, worker)`. Returns the worker of each task.
fn solve(n: usize, m: usize, a: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    debug_assert!(n <= m);
    // 1-based arrays; index 0 is the virtual root.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = a(i0 - 1, j - 1) - u[i0] - v[j];
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
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

/// Column-by-column greedy matching (cheapest unused row, lowest index on ties).
/// Its total is never below the Hungarian optimum.
pub fn greedy_assign(cost: &CostMatrix) -> Assignment {
    let mut used = vec![false; cost.rows];
    let matches = (0..cost.cols())
        .map(|c| {
            let best = (0..cost.rows)
                .filter(|&i| !used[i] && !CostMatrix::is_sentinel(cost.get(i, c)))
                .min_by(|&a, &b| cost.get(a, c).total_cmp(&cost.get(b, c)).then(a.cmp(&b)));
            if let Some(i) = best {
                used[i] = true;
            }
            best
        })
        .collect();
    Assignment::from_matches(cost, matches)
}
