//! Seeded synthetic corpora.
//!
//! Ribbons mimic text-line annotations: a cubic Bezier centerline with a
//! tapered width, sampled as `N/2` vertices along one side followed by `N/2`
//! vertices back along the other. Each ribbon is driven by six shape
//! parameters (length, aspect ratio, two bend offsets, rotation, taper) plus a
//! placement offset that canonicalization removes.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{LraError, Result};
use crate::geometry::{is_simple, Contour, Point};

const MAX_RETRIES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RibbonFamily {
    /// Nearly straight lines with mild bends.
    Gentle,
    /// Moderately curved lines, the default corpus.
    Curved,
    /// Strongly arched lines.
    Extreme,
}

impl RibbonFamily {
    fn bend_range(self) -> f64 {
        match self {
            RibbonFamily::Gentle => 0.1,
            RibbonFamily::Curved => 0.35,
            RibbonFamily::Extreme => 0.7,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RibbonFamily::Gentle => "gentle",
            RibbonFamily::Curved => "curved",
            RibbonFamily::Extreme => "extreme",
        }
    }
}

impl std::str::FromStr for RibbonFamily {
    type Err = LraError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gentle" => Ok(RibbonFamily::Gentle),
            "curved" => Ok(RibbonFamily::Curved),
            "extreme" => Ok(RibbonFamily::Extreme),
            other => Err(LraError::InvalidParameter(format!(
                "unknown ribbon family {other:?} (expected gentle, curved or extreme)"
            ))),
        }
    }
}

/// The six shape parameters of one ribbon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RibbonShape {
    pub length: f64,
    pub aspect: f64,
    pub bend: [f64; 2],
    pub rotation: f64,
    pub taper: f64,
}

impl RibbonShape {
    fn sample(family: RibbonFamily, rng: &mut impl Rng) -> Self {
        let b = family.bend_range();
        RibbonShape {
            length: rng.random_range(60.0..240.0),
            aspect: rng.random_range(2.0..12.0),
            bend: [rng.random_range(-b..b), rng.random_range(-b..b)],
            rotation: rng.random_range(-PI / 6.0..PI / 6.0),
            taper: rng.random_range(-0.3..0.3),
        }
    }

    /// Boundary vertices centered near the origin: `n/2` along one side, then back along the other.
    pub fn outline(&self, n: usize) -> Vec<Point> {
        let half = n / 2;
        let l = self.length;
        let ctrl = [
            Point::new(0.0, 0.0),
            Point::new(l / 3.0, self.bend[0] * l),
            Point::new(2.0 * l / 3.0, self.bend[1] * l),
            Point::new(l, 0.0),
        ];
        let width = l / self.aspect;
        let (sin, cos) = self.rotation.sin_cos();
        let place = |p: Point| {
            let (x, y) = (p.x - l / 2.0, p.y);
            Point::new(cos * x - sin * y, sin * x + cos * y)
        };
        let side = |sign: f64| -> Vec<Point> {
            (0..half)
                .map(|k| {
                    let t = k as f64 / (half - 1) as f64;
                    let (c, d) = bezier(&ctrl, t);
                    let norm = d.x.hypot(d.y);
                    let normal = Point::new(-d.y / norm, d.x / norm);
                    let w = 0.5 * width * (1.0 + self.taper * (2.0 * t - 1.0));
                    place(Point::new(
                        c.x + sign * w * normal.x,
                        c.y + sign * w * normal.y,
                    ))
                })
                .collect()
        };
        let mut pts = side(-1.0);
        pts.extend(side(1.0).into_iter().rev());
        pts
    }
}

fn bezier(ctrl: &[Point; 4], t: f64) -> (Point, Point) {
    let s = 1.0 - t;
    let b = [s * s * s, 3.0 * s * s * t, 3.0 * s * t * t, t * t * t];
    let db = [
        -3.0 * s * s,
        3.0 * s * s - 6.0 * s * t,
        6.0 * s * t - 3.0 * t * t,
        3.0 * t * t,
    ];
    let mut p = Point::ORIGIN;
    let mut d = Point::ORIGIN;
    for i in 0..4 {
        p.x += b[i] * ctrl[i].x;
        p.y += b[i] * ctrl[i].y;
        d.x += db[i] * ctrl[i].x;
        d.y += db[i] * ctrl[i].y;
    }
    (p, d)
}

/// Generates `count` simple ribbons with `n` vertices each. `n` must be even and at least 4.
pub fn generate_ribbons(
    family: RibbonFamily,
    count: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<Contour>> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(LraError::InvalidParameter(format!(
            "ribbons need an even vertex count >= 4, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for idx in 0..count {
        let mut attempt = 0;
        let pts = loop {
            let shape = RibbonShape::sample(family, &mut rng);
            let offset = Point::new(
                rng.random_range(100.0..900.0),
                rng.random_range(100.0..900.0),
            );
            let pts: Vec<Point> = shape
                .outline(n)
                .into_iter()
                .map(|p| Point::new(p.x + offset.x, p.y + offset.y))
                .collect();
            if is_simple(&pts) {
                break pts;
            }
            attempt += 1;
            if attempt >= MAX_RETRIES {
                return Err(LraError::Numerical(format!(
                    "could not draw a simple ribbon for item {idx} after {MAX_RETRIES} attempts"
                )));
            }
        };
        out.push(Contour::new(pts)?);
    }
    Ok(out)
}

/// Columns drawn from a random `rank`-dimensional subspace of `ℝ^ambient`
/// with Gaussian perturbation, a fraction of them replaced by outliers.
#[derive(Clone, Debug)]
pub struct LinearEnsemble {
    pub data: DMatrix<f64>,
    /// Orthonormal generator of the inlier subspace.
    pub truth: DMatrix<f64>,
    pub outliers: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearEnsembleSpec {
    pub ambient: usize,
    pub rank: usize,
    pub count: usize,
    pub noise_sigma: f64,
    pub outlier_fraction: f64,
    /// Outlier norm as a multiple of the median inlier norm.
    pub outlier_scale: f64,
}

impl Default for LinearEnsembleSpec {
    fn default() -> Self {
        LinearEnsembleSpec {
            ambient: 28,
            rank: 6,
            count: 500,
            noise_sigma: 0.01,
            outlier_fraction: 0.2,
            outlier_scale: 50.0,
        }
    }
}

pub fn linear_ensemble(spec: &LinearEnsembleSpec, seed: u64) -> Result<LinearEnsemble> {
    if spec.rank == 0 || spec.rank > spec.ambient || spec.count == 0 {
        return Err(LraError::InvalidParameter(format!(
            "invalid ensemble shape: ambient {}, rank {}, count {}",
            spec.ambient, spec.rank, spec.count
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let g = DMatrix::from_fn(spec.ambient, spec.rank, |_, _| normal());
    let truth = g.qr().q();
    let coeffs = DMatrix::from_fn(spec.rank, spec.count, |_, _| normal());
    let noise = DMatrix::from_fn(spec.ambient, spec.count, |_, _| normal() * spec.noise_sigma);
    let mut data = &truth * coeffs + noise;

    let mut norms: Vec<f64> = data.column_iter().map(|c| c.norm()).collect();
    norms.sort_by(f64::total_cmp);
    let median = norms[norms.len() / 2];

    let n_out = (spec.outlier_fraction * spec.count as f64).floor() as usize;
    let mut outliers: Vec<usize> = rand::seq::index::sample(&mut rng, spec.count, n_out).into_vec();
    outliers.sort_unstable();
    for &j in &outliers {
        let dir = DMatrix::<f64>::from_fn(spec.ambient, 1, |_, _| StandardNormal.sample(&mut rng));
        let dir: DMatrix<f64> = &dir / dir.norm();
        data.set_column(j, &(dir.column(0) * (spec.outlier_scale * median)));
    }
    Ok(LinearEnsemble {
        data,
        truth,
        outliers,
    })
}
