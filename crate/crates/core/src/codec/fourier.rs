//! Truncated Fourier-descriptor baseline.
//!
//! Vertices are read as complex samples `z_k = x_k + i·y_k`. The code keeps
//! `dims / 2` DFT coefficients chosen in the order `0, +1, −1, +2, −2, …`
//! (each residue modulo `N` once), so `dims` counts real degrees of freedom.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{LraError, Result};
use crate::geometry::{polygon_iou, Contour, Point};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub frequency: i64,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierCode {
    pub terms: Vec<FourierTerm>,
}

impl FourierCode {
    /// Real degrees of freedom carried by the code.
    pub fn dims(&self) -> usize {
        2 * self.terms.len()
    }
}

/// The first `count` frequencies of `0, +1, −1, +2, …`, skipping aliases modulo `n`.
pub fn fourier_frequencies(n: usize, count: usize) -> Vec<i64> {
    let n_i = n as i64;
    let mut taken = vec![false; n];
    let mut out = Vec::with_capacity(count);
    let mut k = 0i64;
    while out.len() < count.min(n) {
        for f in if k == 0 { vec![0] } else { vec![k, -k] } {
            let r = f.rem_euclid(n_i) as usize;
            if !taken[r] && out.len() < count {
                taken[r] = true;
                out.push(f);
            }
        }
        k += 1;
    }
    out
}

pub fn fourier_encode(c: &Contour, dims: usize) -> Result<FourierCode> {
    let n = c.n();
    if !dims.is_multiple_of(2) || dims < 2 || dims > 2 * n {
        return Err(LraError::InvalidParameter(format!(
            "Fourier dims must be even and in 2..={}, got {dims}",
            2 * n
        )));
    }
    let mut buf: Vec<Complex64> = c
        .points()
        .iter()
        .map(|p| Complex64::new(p.x, p.y))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    let terms = fourier_frequencies(n, dims / 2)
        .into_iter()
        .map(|f| {
            let z = buf[f.rem_euclid(n as i64) as usize] * scale;
            FourierTerm {
                frequency: f,
                re: z.re,
                im: z.im,
            }
        })
        .collect();
    Ok(FourierCode { terms })
}

/// Synthesizes `n` vertices from the retained terms (zeros elsewhere).
pub fn fourier_decode(code: &FourierCode, n: usize) -> Result<Contour> {
    if n < 3 {
        return Err(LraError::InvalidParameter(format!(
            "Fourier decode needs n >= 3, got {n}"
        )));
    }
    let points = (0..n)
        .map(|k| {
            let z: Complex64 = code
                .terms
                .iter()
                .map(|t| {
                    let angle = std::f64::consts::TAU * (t.frequency * k as i64) as f64 / n as f64;
                    Complex64::new(t.re, t.im) * Complex64::from_polar(1.0, angle)
                })
                .sum();
            Point::new(z.re, z.im)
        })
        .collect();
    Contour::new(points)
}

pub fn fourier_reconstruction_iou(c: &Contour, dims: usize, resolution: usize) -> Result<f64> {
    let code = fourier_encode(c, dims)?;
    polygon_iou(c, &fourier_decode(&code, c.n())?, resolution)
}
