//! Contour geometry: polygon ingestion, arc-length resampling on a closed
//! cubic spline, canonicalization frames, and rasterized polygon IoU.
//!
//! A [`Contour`] is a fixed-length ordered list of vertices. When it enters
//! linear algebra it is flattened as `[x1, y1, x2, y2, ..., xN, yN]`.

mod ingest;
mod raster;
mod spline;

pub use ingest::{read_annotations, AnnotationRecord, AnnotationSet, Diagnostic};
pub use raster::{iou_detail, polygon_iou, IouOutcome, DEFAULT_RESOLUTION, MIN_RESOLUTION};
pub use spline::{resample_contour, ClosedSpline};

use serde::{Deserialize, Serialize};

use crate::error::{LraError, Result};

/// Default number of resampled vertices per contour.
pub const DEFAULT_VERTICES: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// An annotated polygon as it arrives from a label file.
///
/// Closed implicitly. Construction removes consecutive duplicate vertices
/// (including a repeated closing vertex) and rejects polygons with fewer than
/// three distinct vertices or non-finite coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct RawPolygon {
    vertices: Vec<Point>,
}

impl RawPolygon {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(LraError::Degenerate(format!(
                "vertex {i} has a non-finite coordinate"
            )));
        }
        let mut cleaned: Vec<Point> = Vec::with_capacity(vertices.len());
        for p in vertices {
            if cleaned.last() != Some(&p) {
                cleaned.push(p);
            }
        }
        while cleaned.len() > 1 && cleaned.first() == cleaned.last() {
            cleaned.pop();
        }
        let mut distinct = cleaned.clone();
        distinct.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        distinct.dedup();
        if distinct.len() < 3 {
            return Err(LraError::Degenerate(format!(
                "polygon has {} distinct vertices, need at least 3",
                distinct.len()
            )));
        }
        let poly = RawPolygon { vertices: cleaned };
        if poly.perimeter() <= 0.0 {
            return Err(LraError::Degenerate("polygon has zero perimeter".into()));
        }
        Ok(poly)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn perimeter(&self) -> f64 {
        closed_perimeter(&self.vertices)
    }
}

/// Exactly `n` ordered vertices describing one closed boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Contour {
    points: Vec<Point>,
}

impl Contour {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.len() < 3 {
            return Err(LraError::Degenerate(format!(
                "contour needs at least 3 vertices, got {}",
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(LraError::Degenerate(format!(
                "contour vertex {i} is not finite"
            )));
        }
        Ok(Contour { points })
    }

    /// Rebuilds a contour from its flattened `[x1, y1, ..., xN, yN]` form.
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if !flat.len().is_multiple_of(2) {
            return Err(LraError::ShapeMismatch(format!(
                "flattened contour has odd length {}",
                flat.len()
            )));
        }
        Contour::new(
            flat.chunks_exact(2)
                .map(|xy| Point::new(xy[0], xy[1]))
                .collect(),
        )
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.points.iter().flat_map(|p| [p.x, p.y]).collect()
    }

    pub fn centroid(&self) -> Point {
        let n = self.points.len() as f64;
        let (sx, sy) = self
            .points
            .iter()
            .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
        Point::new(sx / n, sy / n)
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn bbox(&self) -> (Point, Point) {
        bounding_box(&self.points)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bbox();
        lo.distance(&hi)
    }

    pub fn perimeter(&self) -> f64 {
        closed_perimeter(&self.points)
    }

    pub fn map(&self, f: impl Fn(Point) -> Point) -> Contour {
        Contour {
            points: self.points.iter().copied().map(f).collect(),
        }
    }
}

impl TryFrom<RawPolygon> for Contour {
    type Error = LraError;

    fn try_from(poly: RawPolygon) -> Result<Self> {
        Contour::new(poly.vertices)
    }
}

/// Which nuisance parameters are removed before a contour enters the subspace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Canonicalization {
    pub center: bool,
    pub normalize_scale: bool,
}

impl Default for Canonicalization {
    fn default() -> Self {
        Canonicalization {
            center: true,
            normalize_scale: false,
        }
    }
}

impl Canonicalization {
    pub const IDENTITY: Canonicalization = Canonicalization {
        center: false,
        normalize_scale: false,
    };
}

/// What [`canonicalize`] removed: `original = canonical * scale + translation`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub translation: Point,
    pub scale: f64,
}

impl Default for Frame {
    fn default() -> Self {
        Frame::IDENTITY
    }
}

impl Frame {
    pub const IDENTITY: Frame = Frame {
        translation: Point::ORIGIN,
        scale: 1.0,
    };

    pub fn new(translation: Point, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) || !translation.is_finite() {
            return Err(LraError::InvalidParameter(format!(
                "frame needs a finite translation and positive scale, got {translation:?} / {scale}"
            )));
        }
        Ok(Frame { translation, scale })
    }
}

pub fn canonicalize(c: &Contour, flags: Canonicalization) -> Result<(Contour, Frame)> {
    let translation = if flags.center {
        c.centroid()
    } else {
        Point::ORIGIN
    };
    let centered = if flags.center {
        c.map(|p| Point::new(p.x - translation.x, p.y - translation.y))
    } else {
        c.clone()
    };
    let scale = if flags.normalize_scale {
        let norm = centered
            .points
            .iter()
            .map(|p| p.x * p.x + p.y * p.y)
            .sum::<f64>()
            .sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(LraError::Degenerate(
                "cannot normalize the scale of a zero-norm contour".into(),
            ));
        }
        norm
    } else {
        1.0
    };
    let out = if flags.normalize_scale {
        centered.map(|p| Point::new(p.x / scale, p.y / scale))
    } else {
        centered
    };
    Ok((out, Frame { translation, scale }))
}

pub fn restore(c: &Contour, frame: &Frame) -> Contour {
    let Frame {
        translation: t,
        scale: s,
    } = *frame;
    c.map(|p| Point::new(p.x * s + t.x, p.y * s + t.y))
}

pub(crate) fn closed_perimeter(points: &[Point]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| points[i].distance(&points[(i + 1) % n]))
        .sum()
}

pub(crate) fn bounding_box(points: &[Point]) -> (Point, Point) {
    points.iter().fold(
        (
            Point::new(f64::INFINITY, f64::INFINITY),
            Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        ),
        |(lo, hi), p| {
            (
                Point::new(lo.x.min(p.x), lo.y.min(p.y)),
                Point::new(hi.x.max(p.x), hi.y.max(p.y)),
            )
        },
    )
}

/// True when no two non-adjacent edges of the closed polygon intersect.
pub fn is_simple(points: &[Point]) -> bool {
    let n = points.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        let (a, b) = (points[i], points[(i + 1) % n]);
        for j in (i + 1)..n {
            // adjacent edges share a vertex
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (c, d) = (points[j], points[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Even-odd point-in-polygon test.
pub fn contains_point(points: &[Point], p: Point) -> bool {
    let n = points.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (points[i], points[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}
