//! Spike-noise corruption of annotation corpora.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LraError, Result};
use crate::geometry::{Contour, Point};

/// How a corpus is corrupted: a fraction of contours each get between
/// `vertices_min` and `vertices_max` vertices displaced by
/// `uniform(magnitude_min, magnitude_max) × bbox diagonal` in a uniform direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub corrupt_fraction: f64,
    pub vertices_min: usize,
    pub vertices_max: usize,
    pub magnitude_min: f64,
    pub magnitude_max: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            corrupt_fraction: 0.2,
            vertices_min: 1,
            vertices_max: 5,
            magnitude_min: 0.5,
            magnitude_max: 1.0,
            seed: 0,
        }
    }
}

impl NoiseSpec {
    pub fn clean() -> Self {
        NoiseSpec {
            corrupt_fraction: 0.0,
            ..NoiseSpec::default()
        }
    }

    pub fn validate(&self, n_vertices: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.corrupt_fraction) {
            return Err(LraError::InvalidParameter(format!(
                "corrupt_fraction must be in [0, 1], got {}",
                self.corrupt_fraction
            )));
        }
        if self.vertices_min > self.vertices_max || self.vertices_max > n_vertices {
            return Err(LraError::InvalidParameter(format!(
                "need 0 <= vertices_min <= vertices_max <= {n_vertices}, got {}..{}",
                self.vertices_min, self.vertices_max
            )));
        }
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !(ok(self.magnitude_min)
            && ok(self.magnitude_max)
            && self.magnitude_min <= self.magnitude_max)
        {
            return Err(LraError::InvalidParameter(format!(
                "magnitude range must satisfy 0 <= min <= max, got {}..{}",
                self.magnitude_min, self.magnitude_max
            )));
        }
        Ok(())
    }

    /// Number of contours corrupted out of `len`: `floor(fraction·len)`, at least one when the fraction is positive.
    pub fn corrupted_count(&self, len: usize) -> usize {
        if self.corrupt_fraction <= 0.0 || len == 0 {
            return 0;
        }
        ((self.corrupt_fraction * len as f64).floor() as usize).clamp(1, len)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpikeNoise {
    pub contours: Vec<Contour>,
    /// Indices of the corrupted contours, ascending.
    pub corrupted: Vec<usize>,
}

/// Returns a corrupted copy of `contours`; the input is never modified.
pub fn inject_spike_noise(contours: &[Contour], spec: &NoiseSpec) -> Result<SpikeNoise> {
    let n = contours.first().map(Contour::n).unwrap_or(0);
    spec.validate(n)?;
    if let Some(j) = contours.iter().position(|c| c.n() != n) {
        return Err(LraError::ShapeMismatch(format!(
            "contour {j} has {} vertices, expected {n}",
            contours[j].n()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let count = spec.corrupted_count(contours.len());
    let mut corrupted = rand::seq::index::sample(&mut rng, contours.len(), count).into_vec();
    corrupted.sort_unstable();

    let mut out = contours.to_vec();
    for &j in &corrupted {
        let diag = contours[j].bbox_diagonal();
        let k = rng.random_range(spec.vertices_min..=spec.vertices_max);
        let mut points = contours[j].points().to_vec();
        let mut picks = rand::seq::index::sample(&mut rng, n, k).into_vec();
        picks.sort_unstable();
        for v in picks {
            let mag = rng.random_range(spec.magnitude_min..=spec.magnitude_max) * diag;
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let p = points[v];
            points[v] = Point::new(p.x + mag * angle.cos(), p.y + mag * angle.sin());
        }
        out[j] = Contour::new(points)?;
    }
    Ok(SpikeNoise {
        contours: out,
        corrupted,
    })
}
