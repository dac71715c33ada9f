//! Versioned JSON basis files.
//!
//! Matrix entries are stored row-major as decimal strings with 17 significant
//! digits, which round-trip every `f64` exactly. The `hash` field is the
//! SHA-256 of the little-endian entry bytes in the same order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{OrthanchorBasis, Provenance};
use crate::error::{LraError, Result};
use crate::geometry::Canonicalization;
use crate::subspace::{Basis, FitMethod};

pub const BASIS_FILE_VERSION: u32 = 1;
const LOAD_ORTHONORMALITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BasisFile {
    version: u32,
    n_vertices: usize,
    m: usize,
    fit_method: FitMethod,
    canonicalization: Canonicalization,
    matrix: Vec<String>,
    provenance: Provenance,
    hash: String,
}

fn matrix_hash(row_major: &[f64]) -> String {
    let mut h = Sha256::new();
    for v in row_major {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

fn row_major(u: &DMatrix<f64>) -> Vec<f64> {
    let (rows, cols) = u.shape();
    (0..rows)
        .flat_map(|i| (0..cols).map(move |k| (i, k)))
        .map(|idx| u[idx])
        .collect()
}

pub fn write_basis(b: &OrthanchorBasis, out: impl Write) -> Result<()> {
    let entries = row_major(b.basis.matrix());
    let file = BasisFile {
        version: BASIS_FILE_VERSION,
        n_vertices: b.n_vertices(),
        m: b.m(),
        fit_method: b.fit_method(),
        canonicalization: b.canonicalization(),
        matrix: entries.iter().map(|v| format!("{v:.16e}")).collect(),
        provenance: b.provenance.clone(),
        hash: matrix_hash(&entries),
    };
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, &file)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn save_basis(b: &OrthanchorBasis, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_basis(b, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Parses and validates a basis file: version, shape, hash, then orthonormality.
pub fn read_basis(mut input: impl Read) -> Result<OrthanchorBasis> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let file: BasisFile =
        serde_json::from_str(&text).map_err(|e| LraError::BasisFile(format!("malformed: {e}")))?;
    if file.version != BASIS_FILE_VERSION {
        return Err(LraError::BasisFile(format!(
            "unsupported version {} (expected {BASIS_FILE_VERSION})",
            file.version
        )));
    }
    let rows = 2 * file.n_vertices;
    if file.n_vertices == 0 || file.m == 0 || file.m > rows {
        return Err(LraError::BasisFile(format!(
            "invalid shape: n_vertices = {}, m = {}",
            file.n_vertices, file.m
        )));
    }
    if file.matrix.len() != rows * file.m {
        return Err(LraError::BasisFile(format!(
            "matrix has {} entries but n_vertices = {} and m = {} require {}",
            file.matrix.len(),
            file.n_vertices,
            file.m,
            rows * file.m
        )));
    }
    let entries = file
        .matrix
        .iter()
        .enumerate()
        .map(|(i, s)| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    LraError::BasisFile(format!("entry {i} is not a finite number: {s:?}"))
                })
        })
        .collect::<Result<Vec<f64>>>()?;
    let hash = matrix_hash(&entries);
    if hash != file.hash {
        return Err(LraError::BasisFile(format!(
            "hash mismatch: file says {}, contents hash to {hash}",
            file.hash
        )));
    }
    let u = DMatrix::from_row_slice(rows, file.m, &entries);
    let basis = Basis::new(
        u,
        file.fit_method,
        file.canonicalization,
        LOAD_ORTHONORMALITY_TOLERANCE,
    )
    .map_err(|e| LraError::BasisFile(e.to_string()))?;
    Ok(OrthanchorBasis::new(basis, file.provenance))
}

pub fn load_basis(path: impl AsRef<Path>) -> Result<OrthanchorBasis> {
    read_basis(BufReader::new(File::open(path)?))
}
