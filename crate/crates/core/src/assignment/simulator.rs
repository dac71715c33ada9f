//! Synthetic prediction grids for exercising sparse assignment without a network.
//!
//! Cell `(x, y)` has center `(x + 0.5, y + 0.5)` in image units and lies in the
//! text region when that center is inside some ground-truth polygon. Its
//! predicted contour is its instance's contour pulled halfway toward the cell
//! center plus Gaussian vertex noise, and its score is the IoU between
//! prediction and instance plus Gaussian noise, clipped to `[0, 1]`. The
//! instance of a cell is the first polygon containing its center, otherwise the
//! instance with the nearest centroid.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{
    cost_matrix, hungarian, Assignment, CostMatrix, FocalParams, MatchParams, PredictionGrid,
    RegressionNorm,
};
use crate::error::{LraError, Result};
use crate::geometry::{
    contains_point, polygon_iou, resample_contour, Contour, Point, RawPolygon, DEFAULT_VERTICES,
};

const SCORE_RESOLUTION: usize = 64;
const ANCHOR_PULL: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioGrid {
    pub h: usize,
    pub w: usize,
}

fn default_k() -> usize {
    3
}

fn default_lambda() -> f64 {
    2.0
}

fn default_vertices() -> usize {
    DEFAULT_VERTICES
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub grid: ScenarioGrid,
    /// Ground-truth polygons in grid units.
    pub gts: Vec<Vec<Point>>,
    #[serde(default)]
    pub score_noise: f64,
    #[serde(default)]
    pub contour_noise: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_vertices")]
    pub n_vertices: usize,
    #[serde(default)]
    pub norm: RegressionNorm,
    #[serde(default)]
    pub focal: FocalParams,
}

impl Scenario {
    pub fn match_params(&self) -> MatchParams {
        MatchParams {
            k: self.k,
            lambda: self.lambda,
            focal: self.focal,
            norm: self.norm,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.grid.h == 0 || self.grid.w == 0 {
            return Err(LraError::InvalidParameter(
                "grid dimensions must be positive".into(),
            ));
        }
        if self.gts.is_empty() {
            return Err(LraError::InvalidParameter(
                "scenario has no ground truths".into(),
            ));
        }
        for (name, v) in [
            ("score_noise", self.score_noise),
            ("contour_noise", self.contour_noise),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(LraError::InvalidParameter(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub grid: PredictionGrid,
    pub gts: Vec<Contour>,
    /// Raw ground-truth polygons used for the text-region test.
    pub regions: Vec<RawPolygon>,
    pub params: MatchParams,
}

impl Simulation {
    pub fn cost_matrix(&self) -> Result<CostMatrix> {
        cost_matrix(&self.grid, &self.gts, &self.params)
    }

    pub fn assign(&self) -> Result<Assignment> {
        hungarian(&self.cost_matrix()?)
    }
}

pub fn simulate_grid(s: &Scenario) -> Result<Simulation> {
    s.validate()?;
    let mut regions = Vec::with_capacity(s.gts.len());
    let mut gts = Vec::with_capacity(s.gts.len());
    for (j, poly) in s.gts.iter().enumerate() {
        let raw = RawPolygon::new(poly.clone())
            .map_err(|e| LraError::InvalidParameter(format!("ground truth {j}: {e}")))?;
        gts.push(resample_contour(&raw, s.n_vertices)?);
        regions.push(raw);
    }
    let centroids: Vec<Point> = gts.iter().map(Contour::centroid).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let vertex_noise =
        Normal::new(0.0, s.contour_noise).map_err(|e| LraError::InvalidParameter(e.to_string()))?;
    let score_noise =
        Normal::new(0.0, s.score_noise).map_err(|e| LraError::InvalidParameter(e.to_string()))?;

    let cells = s.grid.h * s.grid.w;
    let mut scores = Vec::with_capacity(cells);
    let mut contours = Vec::with_capacity(cells);
    let mut mask = Vec::with_capacity(cells);
    for i in 0..cells {
        let center = Point::new((i % s.grid.w) as f64 + 0.5, (i / s.grid.w) as f64 + 0.5);
        let inside = regions
            .iter()
            .position(|r| contains_point(r.vertices(), center));
        let owner = inside.unwrap_or_else(|| {
            (0..gts.len())
                .min_by(|&a, &b| {
                    center
                        .distance(&centroids[a])
                        .total_cmp(&center.distance(&centroids[b]))
                })
                .expect("at least one ground truth")
        });
        let shift = Point::new(
            ANCHOR_PULL * (center.x - centroids[owner].x),
            ANCHOR_PULL * (center.y - centroids[owner].y),
        );
        let pred = Contour::new(
            gts[owner]
                .points()
                .iter()
                .map(|p| {
                    Point::new(
                        p.x + shift.x + vertex_noise.sample(&mut rng),
                        p.y + shift.y + vertex_noise.sample(&mut rng),
                    )
                })
                .collect(),
        )?;
        let score = (polygon_iou(&pred, &gts[owner], SCORE_RESOLUTION)?
            + score_noise.sample(&mut rng))
        .clamp(0.0, 1.0);
        scores.push(score);
        contours.push(pred);
        mask.push(inside.is_some());
    }
    Ok(Simulation {
        grid: PredictionGrid::new(s.grid.h, s.grid.w, scores, contours, mask)?,
        gts,
        regions,
        params: s.match_params(),
    })
}
