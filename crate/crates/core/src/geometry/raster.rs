//! Polygon IoU by even-odd scanline rasterization.
//!
//! Both polygons are sampled at cell centers of a `resolution × resolution`
//! grid covering their joint bounding box plus a 5% margin. Each row is kept
//! as a sorted list of filled cell ranges, so intersection and union are
//! counted without materializing the grid.

use std::ops::Range;

use super::{bounding_box, Contour, Point};
use crate::error::{LraError, Result};

pub const DEFAULT_RESOLUTION: usize = 512;
pub const MIN_RESOLUTION: usize = 64;
const MARGIN: f64 = 0.05;

/// Cell counts behind an IoU value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IouOutcome {
    pub iou: f64,
    pub intersection: u64,
    pub union: u64,
    pub area_a: u64,
    pub area_b: u64,
    /// Set when a polygon rasterizes to zero cells.
    pub degenerate_a: bool,
    pub degenerate_b: bool,
}

struct Grid {
    x0: f64,
    y0: f64,
    dx: f64,
    dy: f64,
    res: usize,
}

impl Grid {
    fn covering(a: &[Point], b: &[Point], res: usize) -> Grid {
        let (la, ha) = bounding_box(a);
        let (lb, hb) = bounding_box(b);
        let lo = Point::new(la.x.min(lb.x), la.y.min(lb.y));
        let hi = Point::new(ha.x.max(hb.x), ha.y.max(hb.y));
        let (w, h) = (hi.x - lo.x, hi.y - lo.y);
        let fallback = if w.max(h) > 0.0 { w.max(h) } else { 1.0 };
        let mx = MARGIN * if w > 0.0 { w } else { fallback };
        let my = MARGIN * if h > 0.0 { h } else { fallback };
        Grid {
            x0: lo.x - mx,
            y0: lo.y - my,
            dx: (w + 2.0 * mx) / res as f64,
            dy: (h + 2.0 * my) / res as f64,
            res,
        }
    }

    fn column_at(&self, x: f64) -> usize {
        // first cell whose center is >= x
        let j = ((x - self.x0) / self.dx - 0.5).ceil();
        j.clamp(0.0, self.res as f64) as usize
    }

    fn spans(
        &self,
        poly: &[Point],
        row: usize,
        crossings: &mut Vec<f64>,
        out: &mut Vec<Range<usize>>,
    ) {
        let y = self.y0 + (row as f64 + 0.5) * self.dy;
        crossings.clear();
        out.clear();
        let n = poly.len();
        for i in 0..n {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            if (p.y > y) != (q.y > y) {
                crossings.push(p.x + (y - p.y) * (q.x - p.x) / (q.y - p.y));
            }
        }
        crossings.sort_by(f64::total_cmp);
        for pair in crossings.chunks_exact(2) {
            let r = self.column_at(pair[0])..self.column_at(pair[1]);
            if !r.is_empty() {
                out.push(r);
            }
        }
    }
}

fn span_total(spans: &[Range<usize>]) -> u64 {
    spans.iter().map(|r| r.len() as u64).sum()
}

fn span_overlap(a: &[Range<usize>], b: &[Range<usize>]) -> u64 {
    let (mut i, mut j, mut total) = (0, 0, 0u64);
    while i < a.len() && j < b.len() {
        let lo = a[i].start.max(b[j].start);
        let hi = a[i].end.min(b[j].end);
        if hi > lo {
            total += (hi - lo) as u64;
        }
        if a[i].end < b[j].end {
            i += 1;
        } else {
            j += 1;
        }
    }
    total
}

/// Rasterized IoU with the underlying cell counts and degeneracy flags.
pub fn iou_detail(a: &Contour, b: &Contour, resolution: usize) -> Result<IouOutcome> {
    if resolution < MIN_RESOLUTION {
        return Err(LraError::InvalidParameter(format!(
            "IoU resolution must be at least {MIN_RESOLUTION}, got {resolution}"
        )));
    }
    let (pa, pb) = (a.points(), b.points());
    let grid = Grid::covering(pa, pb, resolution);
    let (mut ca, mut cb) = (Vec::new(), Vec::new());
    let (mut sa, mut sb) = (Vec::new(), Vec::new());
    let (mut area_a, mut area_b, mut inter) = (0u64, 0u64, 0u64);
    for row in 0..resolution {
        grid.spans(pa, row, &mut ca, &mut sa);
        grid.spans(pb, row, &mut cb, &mut sb);
        area_a += span_total(&sa);
        area_b += span_total(&sb);
        inter += span_overlap(&sa, &sb);
    }
    let union = area_a + area_b - inter;
    let iou = if union == 0 {
        if a.bbox() == b.bbox() {
            1.0
        } else {
            0.0
        }
    } else {
        inter as f64 / union as f64
    };
    Ok(IouOutcome {
        iou,
        intersection: inter,
        union,
        area_a,
        area_b,
        degenerate_a: area_a == 0,
        degenerate_b: area_b == 0,
    })
}

/// Intersection over union of two closed polygons, in `[0, 1]`.
pub fn polygon_iou(a: &Contour, b: &Contour, resolution: usize) -> Result<f64> {
    iou_detail(a, b, resolution).map(|o| o.iou)
}
