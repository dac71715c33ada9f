//! Sparse positive sampling as bipartite matching.
//!
//! Every grid cell `i` carries a classification score `b_i` and a predicted
//! contour. The cost of matching cell `i` to ground-truth instance `j` is
//! `FL′(b_i) + λ·Σₙ ‖p̃_i⁽ⁿ⁾ − p_j⁽ⁿ⁾‖` for cells inside the text region and a
//! finite sentinel otherwise. Each instance column is replicated `K` times so
//! that an optimal matching hands every instance `K` distinct positive cells.

mod hungarian;
mod simulator;

pub use hungarian::{greedy_assign, hungarian, Assignment, Pair};
pub use simulator::{simulate_grid, Scenario, ScenarioGrid, Simulation};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LraError, Result};
use crate::geometry::Contour;

/// Stand-in for an infinite cost; entries at or above it are never assigned.
pub const SENTINEL: f64 = 1e18;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FocalParams {
    pub alpha: f64,
    pub gamma: f64,
    /// Scores are clamped to `[clamp, 1 − clamp]`.
    pub clamp: f64,
}

impl Default for FocalParams {
    fn default() -> Self {
        FocalParams {
            alpha: 0.25,
            gamma: 2.0,
            clamp: 1e-7,
        }
    }
}

/// Focal-loss-derived classification cost
/// `−α(1−b)^γ·ln b + (1−α)·b^γ·ln(1−b)`; strictly decreasing in `b`.
pub fn focal_cost(b: f64, p: &FocalParams) -> Result<f64> {
    if b.is_nan() {
        return Err(LraError::InvalidParameter("score is NaN".into()));
    }
    let b = b.clamp(p.clamp, 1.0 - p.clamp);
    Ok(-p.alpha * (1.0 - b).powf(p.gamma) * b.ln()
        + (1.0 - p.alpha) * b.powf(p.gamma) * (1.0 - b).ln())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionNorm {
    /// Sum over vertices of the Euclidean vertex distance.
    #[default]
    PerVertexL2,
    /// Sum of absolute coordinate differences.
    PerCoordinateL1,
}

impl RegressionNorm {
    pub fn distance(self, a: &Contour, b: &Contour) -> f64 {
        a.points()
            .iter()
            .zip(b.points())
            .map(|(p, q)| match self {
                RegressionNorm::PerVertexL2 => p.distance(q),
                RegressionNorm::PerCoordinateL1 => (p.x - q.x).abs() + (p.y - q.y).abs(),
            })
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchParams {
    pub k: usize,
    pub lambda: f64,
    #[serde(default)]
    pub focal: FocalParams,
    #[serde(default)]
    pub norm: RegressionNorm,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            k: 3,
            lambda: 2.0,
            focal: FocalParams::default(),
            norm: RegressionNorm::default(),
        }
    }
}

/// Per-cell predictions over an `h × w` grid, row-major (`i = y·w + x`).
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionGrid {
    h: usize,
    w: usize,
    scores: Vec<f64>,
    contours: Vec<Contour>,
    text_region: Vec<bool>,
}

impl PredictionGrid {
    pub fn new(
        h: usize,
        w: usize,
        scores: Vec<f64>,
        contours: Vec<Contour>,
        text_region: Vec<bool>,
    ) -> Result<Self> {
        let cells = h * w;
        if cells == 0 {
            return Err(LraError::InvalidParameter(
                "grid must have at least one cell".into(),
            ));
        }
        if scores.len() != cells || contours.len() != cells || text_region.len() != cells {
            return Err(LraError::ShapeMismatch(format!(
                "{h}x{w} grid needs {cells} cells, got {} scores, {} contours, {} mask entries",
                scores.len(),
                contours.len(),
                text_region.len()
            )));
        }
        if let Some(i) = scores.iter().position(|s| !(0.0..=1.0).contains(s)) {
            return Err(LraError::InvalidParameter(format!(
                "score of cell {i} is {} (must be in [0, 1])",
                scores[i]
            )));
        }
        let n = contours[0].n();
        if let Some(i) = contours.iter().position(|c| c.n() != n) {
            return Err(LraError::ShapeMismatch(format!(
                "cell {i} contour has {} vertices, expected {n}",
                contours[i].n()
            )));
        }
        Ok(PredictionGrid {
            h,
            w,
            scores,
            contours,
            text_region,
        })
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn cells(&self) -> usize {
        self.h * self.w
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn contours(&self) -> &[Contour] {
        &self.contours
    }

    pub fn text_region(&self) -> &[bool] {
        &self.text_region
    }

    pub fn n_vertices(&self) -> usize {
        self.contours[0].n()
    }

    /// The grid with every contour scaled about the origin.
    pub fn scaled(&self, factor: f64) -> PredictionGrid {
        PredictionGrid {
            contours: self
                .contours
                .iter()
                .map(|c| c.map(|p| crate::geometry::Point::new(p.x * factor, p.y * factor)))
                .collect(),
            ..self.clone()
        }
    }
}

/// `rows × (k·t)` matching costs, row-major. Columns `j·k … j·k+k−1` belong to instance `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix {
    pub rows: usize,
    pub k: usize,
    pub t: usize,
    pub entries: Vec<f64>,
}

impl CostMatrix {
    /// Wraps raw costs; `entries.len()` must equal `rows · k · t`.
    pub fn from_entries(rows: usize, k: usize, t: usize, entries: Vec<f64>) -> Result<Self> {
        if k == 0 || t == 0 || rows == 0 {
            return Err(LraError::InvalidParameter(format!(
                "cost matrix needs positive rows, k and t (got {rows}, {k}, {t})"
            )));
        }
        if entries.len() != rows * k * t {
            return Err(LraError::ShapeMismatch(format!(
                "expected {} entries for {rows}x{}, got {}",
                rows * k * t,
                k * t,
                entries.len()
            )));
        }
        if let Some(i) = entries.iter().position(|e| e.is_nan()) {
            return Err(LraError::InvalidParameter(format!("cost entry {i} is NaN")));
        }
        Ok(CostMatrix {
            rows,
            k,
            t,
            entries,
        })
    }

    pub fn cols(&self) -> usize {
        self.k * self.t
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.cols() + col]
    }

    pub fn instance_of(&self, col: usize) -> usize {
        col / self.k
    }

    pub fn is_sentinel(v: f64) -> bool {
        v >= SENTINEL
    }
}

/// Builds the replicated matching-cost matrix for `gts` against `grid`.
pub fn cost_matrix(grid: &PredictionGrid, gts: &[Contour], p: &MatchParams) -> Result<CostMatrix> {
    if gts.is_empty() {
        return Err(LraError::InvalidParameter(
            "no ground-truth instances".into(),
        ));
    }
    if p.k == 0 || !(p.lambda.is_finite() && p.lambda >= 0.0) {
        return Err(LraError::InvalidParameter(format!(
            "need k >= 1 and finite lambda >= 0 (got k = {}, lambda = {})",
            p.k, p.lambda
        )));
    }
    let n = grid.n_vertices();
    if let Some(j) = gts.iter().position(|g| g.n() != n) {
        return Err(LraError::ShapeMismatch(format!(
            "ground truth {j} has {} vertices but grid contours have {n}",
            gts[j].n()
        )));
    }
    let t = gts.len();
    let cols = p.k * t;
    let rows: Vec<Vec<f64>> = (0..grid.cells())
        .into_par_iter()
        .map(|i| {
            if !grid.text_region[i] {
                return Ok(vec![SENTINEL; cols]);
            }
            let cls = focal_cost(grid.scores[i], &p.focal)?;
            let mut row = Vec::with_capacity(cols);
            for gt in gts {
                let s = cls + p.lambda * p.norm.distance(&grid.contours[i], gt);
                row.extend(std::iter::repeat_n(s, p.k));
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    CostMatrix::from_entries(grid.cells(), p.k, t, rows.concat())
}

/// `cost_matrix` followed by `hungarian`.
pub fn sparse_assign(
    grid: &PredictionGrid,
    gts: &[Contour],
    p: &MatchParams,
) -> Result<Assignment> {
    hungarian(&cost_matrix(grid, gts, p)?)
}
