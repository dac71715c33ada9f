//! Shape codes: projecting contours onto an orthanchor basis and back.
//!
//! A contour is canonicalized under the basis' flags, flattened to `p`, and
//! encoded as `c = Uᵀp`. Decoding computes `p̃ = Uc` and restores the frame.

mod file;
mod fourier;

pub use file::{load_basis, read_basis, save_basis, write_basis, BASIS_FILE_VERSION};
pub use fourier::{
    fourier_decode, fourier_encode, fourier_frequencies, fourier_reconstruction_iou, FourierCode,
    FourierTerm,
};

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{LraError, Result};
use crate::geometry::{canonicalize, polygon_iou, restore, Canonicalization, Contour, Frame};
use crate::subspace::{Basis, FitMethod};

/// Where a basis came from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub corpus_id: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

/// A fitted basis plus the metadata needed to encode and decode against it.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthanchorBasis {
    pub basis: Basis,
    pub provenance: Provenance,
}

impl OrthanchorBasis {
    pub fn new(basis: Basis, provenance: Provenance) -> Self {
        OrthanchorBasis { basis, provenance }
    }

    pub fn n_vertices(&self) -> usize {
        self.basis.n_vertices()
    }

    pub fn m(&self) -> usize {
        self.basis.m()
    }

    pub fn canonicalization(&self) -> Canonicalization {
        self.basis.canonicalization()
    }

    pub fn fit_method(&self) -> FitMethod {
        self.basis.fit_method()
    }

    fn check_vertices(&self, c: &Contour) -> Result<()> {
        if c.n() != self.n_vertices() {
            return Err(LraError::ShapeMismatch(format!(
                "contour has {} vertices but the basis expects {}",
                c.n(),
                self.n_vertices()
            )));
        }
        Ok(())
    }
}

/// Projection coefficients of one contour plus the frame that restores it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeCode {
    pub coefficients: Vec<f64>,
    pub frame: Frame,
}

pub fn encode(b: &OrthanchorBasis, c: &Contour) -> Result<ShapeCode> {
    b.check_vertices(c)?;
    let (canon, frame) = canonicalize(c, b.canonicalization())?;
    let p = DVector::from_vec(canon.to_flat());
    let coeffs = b.basis.matrix().tr_mul(&p);
    Ok(ShapeCode {
        coefficients: coeffs.iter().copied().collect(),
        frame,
    })
}

/// `U·c` in canonical coordinates, flattened.
pub fn decode_canonical(b: &OrthanchorBasis, coefficients: &[f64]) -> Result<Vec<f64>> {
    if coefficients.len() != b.m() {
        return Err(LraError::ShapeMismatch(format!(
            "code has {} coefficients but the basis has {} orthanchors",
            coefficients.len(),
            b.m()
        )));
    }
    if coefficients.iter().any(|v| !v.is_finite()) {
        return Err(LraError::Numerical(
            "code has a non-finite coefficient".into(),
        ));
    }
    let c = DVector::from_column_slice(coefficients);
    Ok((b.basis.matrix() * c).iter().copied().collect())
}

pub fn decode(b: &OrthanchorBasis, s: &ShapeCode) -> Result<Contour> {
    let flat = decode_canonical(b, &s.coefficients)?;
    Ok(restore(&Contour::from_flat(&flat)?, &s.frame))
}

/// `decode(encode(c))`: the contour's best approximation in the orthanchor space.
pub fn reconstruct(b: &OrthanchorBasis, c: &Contour) -> Result<Contour> {
    decode(b, &encode(b, c)?)
}

/// IoU between a contour and its reconstruction, in image coordinates.
pub fn reconstruction_iou(b: &OrthanchorBasis, c: &Contour, resolution: usize) -> Result<f64> {
    polygon_iou(c, &reconstruct(b, c)?, resolution)
}

/// One line of a shape-code export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeRecord {
    pub id: String,
    pub coefficients: Vec<f64>,
    pub frame: Frame,
}

pub fn write_codes(records: &[CodeRecord], mut out: impl Write) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads shape codes from JSONL; any malformed line is an error naming its line number.
pub fn read_codes(reader: impl BufRead) -> Result<Vec<CodeRecord>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| LraError::Parse(format!("codes line {}: {e}", idx + 1)))?;
        out.push(rec);
    }
    Ok(out)
}
