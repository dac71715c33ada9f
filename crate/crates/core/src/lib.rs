//! Low-rank approximation (LRA) of arbitrary-shaped text contours.
//!
//! Contours are resampled to a fixed vertex count, flattened into columns of a
//! contour matrix, and represented by their coefficients against a small
//! orthonormal basis (the *orthanchors*). The basis is fitted either by
//! truncated SVD or by the outlier-robust Fast Median Subspace method.
//!
//! Modules:
//! * [`geometry`]: ingestion, spline resampling, canonical frames, raster IoU.
//! * [`subspace`]: SVD and FMS fitting plus diagnostics.
//! * [`codec`]: encode/decode against a basis, basis files, Fourier baseline.
//! * [`robustness`]: seeded corpora, spike noise, and ablation experiments.
//! * [`assignment`]: matching cost matrix and Hungarian sparse sampling.

pub mod assignment;
pub mod codec;
pub mod error;
pub mod geometry;
pub mod robustness;
pub mod subspace;

pub use error::{LraError, Result};
