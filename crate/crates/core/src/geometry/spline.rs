//! Closed periodic cubic spline through polygon vertices, parameterized by
//! cumulative chord length, and uniform arc-length resampling on it.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use super::{Contour, Point, RawPolygon};
use crate::error::{LraError, Result};

const QUADRATURE_ORDER: usize = 64;
const BISECTION_TOLERANCE: f64 = 1e-9;

/// Nodes and weights of Gauss-Legendre quadrature on [-1, 1].
fn gauss_legendre() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = QUADRATURE_ORDER;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Legendre recurrence for P_n(x) and its derivative
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        (nodes, weights)
    })
}

#[derive(Clone, Copy, Debug)]
struct Segment {
    h: f64,
    // second derivatives at both ends and values at both ends, per coordinate
    m0: Point,
    m1: Point,
    p0: Point,
    p1: Point,
}

impl Segment {
    fn eval(&self, u: f64) -> Point {
        let h = self.h;
        let a = h - u;
        let f = |m0: f64, m1: f64, y0: f64, y1: f64| {
            m0 * a * a * a / (6.0 * h)
                + m1 * u * u * u / (6.0 * h)
                + (y0 / h - m0 * h / 6.0) * a
                + (y1 / h - m1 * h / 6.0) * u
        };
        Point::new(
            f(self.m0.x, self.m1.x, self.p0.x, self.p1.x),
            f(self.m0.y, self.m1.y, self.p0.y, self.p1.y),
        )
    }

    fn speed(&self, u: f64) -> f64 {
        let h = self.h;
        let a = h - u;
        let d = |m0: f64, m1: f64, y0: f64, y1: f64| {
            -m0 * a * a / (2.0 * h) + m1 * u * u / (2.0 * h) + (y1 - y0) / h - (m1 - m0) * h / 6.0
        };
        d(self.m0.x, self.m1.x, self.p0.x, self.p1.x)
            .hypot(d(self.m0.y, self.m1.y, self.p0.y, self.p1.y))
    }

    /// Arc length from the segment start to local parameter `u`.
    fn arc_length(&self, u: f64) -> f64 {
        let (nodes, weights) = gauss_legendre();
        let half = 0.5 * u;
        nodes
            .iter()
            .zip(weights)
            .map(|(x, w)| w * self.speed(half * (x + 1.0)))
            .sum::<f64>()
            * half
    }
}

/// Periodic natural cubic spline interpolating a closed polygon.
#[derive(Clone, Debug)]
pub struct ClosedSpline {
    segments: Vec<Segment>,
    lengths: Vec<f64>,
}

impl ClosedSpline {
    pub fn through(poly: &RawPolygon) -> Result<Self> {
        let pts = poly.vertices();
        let n = pts.len();
        let h: Vec<f64> = (0..n).map(|i| pts[i].distance(&pts[(i + 1) % n])).collect();
        if h.iter().any(|&hi| hi.is_nan() || hi <= 0.0) {
            return Err(LraError::Degenerate(
                "polygon has a zero-length edge".into(),
            ));
        }

        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut rx = DVector::<f64>::zeros(n);
        let mut ry = DVector::<f64>::zeros(n);
        for i in 0..n {
            let prev = (i + n - 1) % n;
            let next = (i + 1) % n;
            a[(i, prev)] += h[prev];
            a[(i, i)] += 2.0 * (h[prev] + h[i]);
            a[(i, next)] += h[i];
            rx[i] = 6.0 * ((pts[next].x - pts[i].x) / h[i] - (pts[i].x - pts[prev].x) / h[prev]);
            ry[i] = 6.0 * ((pts[next].y - pts[i].y) / h[i] - (pts[i].y - pts[prev].y) / h[prev]);
        }
        let lu = a.lu();
        let mx = lu
            .solve(&rx)
            .ok_or_else(|| LraError::Numerical("singular spline system".into()))?;
        let my = lu
            .solve(&ry)
            .ok_or_else(|| LraError::Numerical("singular spline system".into()))?;

        let segments: Vec<Segment> = (0..n)
            .map(|i| {
                let j = (i + 1) % n;
                Segment {
                    h: h[i],
                    m0: Point::new(mx[i], my[i]),
                    m1: Point::new(mx[j], my[j]),
                    p0: pts[i],
                    p1: pts[j],
                }
            })
            .collect();
        let lengths = segments.iter().map(|s| s.arc_length(s.h)).collect();
        Ok(ClosedSpline { segments, lengths })
    }

    pub fn length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// Chord length of segment `i` (its parameter span).
    pub fn segment_span(&self, i: usize) -> f64 {
        self.segments[i].h
    }

    /// Position at local parameter `u ∈ [0, span]` of segment `i`.
    pub fn eval(&self, i: usize, u: f64) -> Point {
        self.segments[i].eval(u)
    }

    /// Position at arc length `s` measured from the first vertex.
    pub fn point_at_arc_length(&self, s: f64) -> Point {
        let mut rem = s;
        let last = self.segments.len() - 1;
        let mut idx = 0;
        while idx < last && rem > self.lengths[idx] {
            rem -= self.lengths[idx];
            idx += 1;
        }
        let seg = &self.segments[idx];
        if rem <= 0.0 {
            return seg.eval(0.0);
        }
        if rem >= self.lengths[idx] {
            return seg.eval(seg.h);
        }
        let (mut lo, mut hi) = (0.0, seg.h);
        while hi - lo > BISECTION_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if seg.arc_length(mid) < rem {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        seg.eval(0.5 * (lo + hi))
    }
}

/// Resamples a polygon to `n` vertices spaced uniformly by arc length along its
/// closed cubic spline, starting at the polygon's first vertex and keeping its
/// traversal direction.
pub fn resample_contour(poly: &RawPolygon, n: usize) -> Result<Contour> {
    if n < 4 {
        return Err(LraError::InvalidParameter(format!(
            "resampling needs n >= 4, got {n}"
        )));
    }
    let spline = ClosedSpline::through(poly)?;
    let total = spline.length();
    if !(total > 0.0 && total.is_finite()) {
        return Err(LraError::Degenerate(format!(
            "spline length {total} is not positive"
        )));
    }
    let step = total / n as f64;
    Contour::new(
        (0..n)
            .map(|k| spline.point_at_arc_length(k as f64 * step))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(pts: &[[f64; 2]]) -> RawPolygon {
        RawPolygon::new(pts.iter().map(|&p| p.into()).collect()).unwrap()
    }

    /// Dense polyline length of the spline, independent of the quadrature path.
    fn dense_length(spline: &ClosedSpline, samples: usize) -> f64 {
        let per_seg = samples / spline.segment_count();
        let mut total = 0.0;
        for i in 0..spline.segment_count() {
            let h = spline.segment_span(i);
            let mut prev = spline.eval(i, 0.0);
            for k in 1..=per_seg {
                let p = spline.eval(i, h * k as f64 / per_seg as f64);
                total += prev.distance(&p);
                prev = p;
            }
        }
        total
    }

    fn ctw_like() -> RawPolygon {
        // curved 14-point annotation: 7 points along the top, 7 back along the bottom
        let mut pts = Vec::new();
        for k in 0..7 {
            let t = k as f64 / 6.0;
            let x = 40.0 + 220.0 * t;
            pts.push([x, 100.0 - 60.0 * (std::f64::consts::PI * t).sin()]);
        }
        for k in (0..7).rev() {
            let t = k as f64 / 6.0;
            let x = 40.0 + 220.0 * t;
            pts.push([x, 130.0 - 60.0 * (std::f64::consts::PI * t).sin()]);
        }
        poly(&pts)
    }

    #[test]
    fn quadrature_integrates_polynomials_exactly() {
        let (nodes, weights) = gauss_legendre();
        let w_sum: f64 = weights.iter().sum();
        assert!((w_sum - 2.0).abs() < 1e-13);
        let x4: f64 = nodes.iter().zip(weights).map(|(x, w)| w * x.powi(4)).sum();
        assert!((x4 - 0.4).abs() < 1e-13);
    }

    #[test]
    fn spline_interpolates_knots() {
        let p = ctw_like();
        let s = ClosedSpline::through(&p).unwrap();
        for (i, v) in p.vertices().iter().enumerate() {
            let e = s.eval(i, 0.0);
            assert!(e.distance(v) < 1e-9);
            let j = (i + p.len() - 1) % p.len();
            let end = s.eval(j, s.segment_span(j));
            assert!(end.distance(v) < 1e-9);
        }
    }

    #[test]
    fn uniformly_spaced_input_is_reproduced() {
        let n = 12;
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                [30.0 + 17.0 * a.cos(), -4.0 + 17.0 * a.sin()]
            })
            .collect();
        let p = poly(&pts);
        let out = resample_contour(&p, n).unwrap();
        for (a, b) in out.points().iter().zip(p.vertices()) {
            assert!(a.distance(b) < 1e-6, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn rectangle_resampling_keeps_order_and_start() {
        let p = poly(&[[0.0, 0.0], [10.0, 0.0], [10.0, 2.0], [0.0, 2.0]]);
        let out = resample_contour(&p, 8).unwrap();
        assert_eq!(out.n(), 8);
        assert!(out.points()[0].distance(&Point::new(0.0, 0.0)) < 1e-12);
        // signed area keeps the input's (counter-clockwise) orientation
        let pts = out.points();
        let area: f64 = (0..8)
            .map(|i| {
                let (a, b) = (pts[i], pts[(i + 1) % 8]);
                a.x * b.y - b.x * a.y
            })
            .sum();
        assert!(area > 0.0);
        // four knots only: the spline bulges about 2.3 px off the long edges
        for q in pts {
            let d = (q.y.min(2.0 - q.y)).abs().min(q.x.min(10.0 - q.x).abs());
            assert!(d < 2.5, "{q:?} too far from the rectangle");
        }
        // and every sample is on the fitted spline
        let s = ClosedSpline::through(&p).unwrap();
        let step = s.length() / 8.0;
        for (k, q) in pts.iter().enumerate() {
            assert!(q.distance(&s.point_at_arc_length(k as f64 * step)) < 1e-12);
        }
    }

    #[test]
    fn curved_annotation_preserves_perimeter() {
        let p = ctw_like();
        let s = ClosedSpline::through(&p).unwrap();
        let dense = dense_length(&s, 10_000);
        assert!((s.length() - dense).abs() / dense < 1e-6);
        let out = resample_contour(&p, 14).unwrap();
        let rel = (out.perimeter() - p.perimeter()).abs() / p.perimeter();
        assert!(rel < 0.02, "perimeter drift {rel}");
    }

    #[test]
    fn samples_are_uniform_in_arc_length() {
        let p = ctw_like();
        let s = ClosedSpline::through(&p).unwrap();
        let out = resample_contour(&p, 20).unwrap();
        let step = s.length() / 20.0;
        for (k, q) in out.points().iter().enumerate() {
            let expected = s.point_at_arc_length(k as f64 * step);
            assert!(q.distance(&expected) < 1e-6);
        }
    }

    #[test]
    fn rejects_small_n() {
        assert!(resample_contour(&ctw_like(), 3).is_err());
    }

    #[test]
    fn translation_and_rotation_equivariance() {
        let p = ctw_like();
        let base = resample_contour(&p, 14).unwrap();
        let (tx, ty) = (123.25, -47.5);
        let shifted = RawPolygon::new(
            p.vertices()
                .iter()
                .map(|v| Point::new(v.x + tx, v.y + ty))
                .collect(),
        )
        .unwrap();
        let out = resample_contour(&shifted, 14).unwrap();
        for (a, b) in base.points().iter().zip(out.points()) {
            assert!((a.x + tx - b.x).abs() < 1e-9 && (a.y + ty - b.y).abs() < 1e-9);
        }

        let (sin, cos) = 0.7f64.sin_cos();
        let rot = |v: &Point| Point::new(cos * v.x - sin * v.y, sin * v.x + cos * v.y);
        let rotated = RawPolygon::new(p.vertices().iter().map(rot).collect()).unwrap();
        let out = resample_contour(&rotated, 14).unwrap();
        for (a, b) in base.points().iter().zip(out.points()) {
            assert!(rot(a).distance(b) < 1e-6);
        }
    }
}
