//! Low-rank subspaces of a contour matrix.
//!
//! Two fitting routes are provided:
//!
//! * [`svd_subspace`]: the top-`m` left singular vectors (least squares).
//! * [`fms_subspace`]: Fast Median Subspace, which minimizes the sum of
//!   *unsquared* residual norms `Σ_j ‖(I − UUᵀ) p_j‖₂` by iteratively
//!   reweighted least squares. Each iteration weights column `j` by
//!   `1 / max(‖r_j‖, ε)` and solves the weighted problem exactly with an SVD
//!   of the `√w`-scaled matrix, so far-away columns pull on the subspace
//!   linearly rather than quadratically.
//!
//! Every basis leaving this module has orthonormal columns and a fixed sign
//! convention: the largest-magnitude entry of each column is positive.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{LraError, Result};
use crate::geometry::{canonicalize, Canonicalization, Contour, Frame};

/// Tolerance for `‖UᵀU − I‖_max` on freshly fitted bases.
pub const ORTHONORMALITY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    Svd,
    Fms,
}

impl FitMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            FitMethod::Svd => "svd",
            FitMethod::Fms => "fms",
        }
    }
}

impl std::fmt::Display for FitMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for FitMethod {
    type Err = LraError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svd" => Ok(FitMethod::Svd),
            "fms" => Ok(FitMethod::Fms),
            other => Err(LraError::InvalidParameter(format!(
                "unknown fit method {other:?} (expected svd or fms)"
            ))),
        }
    }
}

/// `2N × L` matrix whose columns are flattened canonicalized contours.
#[derive(Clone, Debug, PartialEq)]
pub struct ContourMatrix {
    data: DMatrix<f64>,
    canonicalization: Canonicalization,
    frames: Vec<Frame>,
}

impl ContourMatrix {
    /// Wraps raw column data. Frames default to identity.
    pub fn from_columns(data: DMatrix<f64>, canonicalization: Canonicalization) -> Result<Self> {
        if data.nrows() == 0 || !data.nrows().is_multiple_of(2) {
            return Err(LraError::ShapeMismatch(format!(
                "contour matrix needs an even, non-zero row count, got {}",
                data.nrows()
            )));
        }
        if data.ncols() == 0 {
            return Err(LraError::InvalidParameter(
                "contour matrix needs at least one column".into(),
            ));
        }
        if let Some(idx) = data.iter().position(|v| !v.is_finite()) {
            return Err(LraError::Numerical(format!(
                "contour matrix column {} has a non-finite entry",
                idx / data.nrows()
            )));
        }
        let frames = vec![Frame::IDENTITY; data.ncols()];
        Ok(ContourMatrix {
            data,
            canonicalization,
            frames,
        })
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn n_vertices(&self) -> usize {
        self.data.nrows() / 2
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn canonicalization(&self) -> Canonicalization {
        self.canonicalization
    }

    /// Frames removed from each column during canonicalization.
    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }
}

/// Canonicalizes each contour and stacks the flattened results as columns, in input order.
pub fn build_matrix(contours: &[Contour], flags: Canonicalization) -> Result<ContourMatrix> {
    let first = contours.first().ok_or_else(|| {
        LraError::InvalidParameter("cannot build a matrix from zero contours".into())
    })?;
    let n = first.n();
    let mut data = DMatrix::<f64>::zeros(2 * n, contours.len());
    let mut frames = Vec::with_capacity(contours.len());
    for (j, c) in contours.iter().enumerate() {
        if c.n() != n {
            return Err(LraError::ShapeMismatch(format!(
                "contour {j} has {} vertices, expected {n}",
                c.n()
            )));
        }
        let (canon, frame) = canonicalize(c, flags)?;
        for (i, v) in canon.to_flat().into_iter().enumerate() {
            data[(i, j)] = v;
        }
        frames.push(frame);
    }
    let mut a = ContourMatrix::from_columns(data, flags)?;
    a.frames = frames;
    Ok(a)
}

/// Orthonormal `2N × M` basis (the orthanchors).
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    u: DMatrix<f64>,
    fit_method: FitMethod,
    canonicalization: Canonicalization,
}

impl Basis {
    /// Validates shape and orthonormality (`‖UᵀU − I‖_max ≤ tolerance`).
    pub fn new(
        u: DMatrix<f64>,
        fit_method: FitMethod,
        canonicalization: Canonicalization,
        tolerance: f64,
    ) -> Result<Self> {
        let (rows, m) = u.shape();
        if rows == 0 || !rows.is_multiple_of(2) || m == 0 || m > rows {
            return Err(LraError::ShapeMismatch(format!(
                "basis must be 2N x M with 1 <= M <= 2N, got {rows} x {m}"
            )));
        }
        let err = orthonormality_error(&u);
        if err.is_nan() || err > tolerance {
            return Err(LraError::Numerical(format!(
                "basis columns are not orthonormal: max |UᵀU - I| = {err:e}"
            )));
        }
        Ok(Basis {
            u,
            fit_method,
            canonicalization,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn m(&self) -> usize {
        self.u.ncols()
    }

    pub fn n_vertices(&self) -> usize {
        self.u.nrows() / 2
    }

    pub fn fit_method(&self) -> FitMethod {
        self.fit_method
    }

    pub fn canonicalization(&self) -> Canonicalization {
        self.canonicalization
    }

    /// Projector `UUᵀ`.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.u * self.u.transpose()
    }
}

/// `max |UᵀU − I|` over all entries.
pub fn orthonormality_error(u: &DMatrix<f64>) -> f64 {
    let g = u.transpose() * u;
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            let d = (g[(i, j)] - target).abs();
            if d.is_nan() {
                return f64::NAN;
            }
            worst = worst.max(d);
        }
    }
    worst
}

/// Flips each column so its largest-magnitude entry (lowest index on ties) is positive.
fn apply_sign_convention(u: &mut DMatrix<f64>) {
    for mut col in u.column_iter_mut() {
        let mut best = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

fn check_dimension(a: &ContourMatrix, m: usize) -> Result<()> {
    let max_m = a.data.nrows().min(a.data.ncols());
    if m == 0 || m > max_m {
        return Err(LraError::InvalidParameter(format!(
            "subspace dimension must be in 1..={max_m} (min(2N, L)), got {m}"
        )));
    }
    Ok(())
}

/// Top-`m` left singular vectors, descending by singular value with a stable
/// order for ties, sign-normalized.
fn leading_left_singular_vectors(data: &DMatrix<f64>, m: usize) -> Result<DMatrix<f64>> {
    let svd = data
        .clone()
        .try_svd(true, false, f64::EPSILON, 0)
        .ok_or_else(|| LraError::Numerical("SVD did not converge".into()))?;
    let u = svd
        .u
        .ok_or_else(|| LraError::Numerical("SVD returned no left singular vectors".into()))?;
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[j].total_cmp(&sv[i]));
    let mut out = DMatrix::<f64>::zeros(data.nrows(), m);
    for (k, &src) in order.iter().take(m).enumerate() {
        out.set_column(k, &u.column(src));
    }
    apply_sign_convention(&mut out);
    Ok(out)
}

/// Least-squares subspace: the top-`m` left singular vectors of the contour matrix.
pub fn svd_subspace(a: &ContourMatrix, m: usize) -> Result<Basis> {
    check_dimension(a, m)?;
    let u = leading_left_singular_vectors(&a.data, m)?;
    Basis::new(
        u,
        FitMethod::Svd,
        a.canonicalization,
        ORTHONORMALITY_TOLERANCE,
    )
}

/// Exact minimizer of `Σ_j w_j ‖(I − UUᵀ) p_j‖²` over orthonormal `U`.
pub fn weighted_pca_step(a: &ContourMatrix, weights: &[f64], m: usize) -> Result<Basis> {
    check_dimension(a, m)?;
    weighted_step(a, weights, m, FitMethod::Svd)
}

fn weighted_step(a: &ContourMatrix, weights: &[f64], m: usize, method: FitMethod) -> Result<Basis> {
    if weights.len() != a.n_samples() {
        return Err(LraError::ShapeMismatch(format!(
            "{} weights for {} columns",
            weights.len(),
            a.n_samples()
        )));
    }
    if let Some(j) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(LraError::InvalidParameter(format!(
            "weight {j} must be finite and positive, got {}",
            weights[j]
        )));
    }
    let mut scaled = a.data.clone();
    for (mut col, w) in scaled.column_iter_mut().zip(weights) {
        col *= w.sqrt();
    }
    let u = leading_left_singular_vectors(&scaled, m)?;
    Basis::new(u, method, a.canonicalization, ORTHONORMALITY_TOLERANCE)
}

/// Residual vectors `(I − UUᵀ) A`.
fn residuals(a: &ContourMatrix, u: &Basis) -> Result<DMatrix<f64>> {
    if a.data.nrows() != u.u.nrows() {
        return Err(LraError::ShapeMismatch(format!(
            "matrix has {} rows but basis has {}",
            a.data.nrows(),
            u.u.nrows()
        )));
    }
    let coeffs = u.u.transpose() * &a.data;
    Ok(&a.data - &u.u * coeffs)
}

/// Per-column residual norms `‖(I − UUᵀ) p_j‖₂`.
pub fn residual_norms(a: &ContourMatrix, u: &Basis) -> Result<Vec<f64>> {
    Ok(residuals(a, u)?.column_iter().map(|c| c.norm()).collect())
}

/// Sum of Euclidean residual norms, the FMS objective.
pub fn l12_objective(a: &ContourMatrix, u: &Basis) -> Result<f64> {
    Ok(residual_norms(a, u)?.iter().sum())
}

/// Sum of squared residual norms, the SVD objective.
pub fn squared_reconstruction_error(a: &ContourMatrix, u: &Basis) -> Result<f64> {
    Ok(residual_norms(a, u)?.iter().map(|r| r * r).sum())
}

/// `‖U₁U₁ᵀ − U₂U₂ᵀ‖_F`; zero iff the spans coincide.
pub fn subspace_distance(u1: &Basis, u2: &Basis) -> Result<f64> {
    if u1.u.shape() != u2.u.shape() {
        return Err(LraError::ShapeMismatch(format!(
            "cannot compare bases of shape {:?} and {:?}",
            u1.u.shape(),
            u2.u.shape()
        )));
    }
    Ok((u1.projector() - u2.projector()).norm())
}

/// Sample variance (denominator `L − 1`) of each row of `UᵀA`.
pub fn explained_variance(a: &ContourMatrix, u: &Basis) -> Result<Vec<f64>> {
    let l = a.n_samples();
    if l < 2 {
        return Err(LraError::InvalidParameter(
            "explained variance needs at least two contours".into(),
        ));
    }
    if a.data.nrows() != u.u.nrows() {
        return Err(LraError::ShapeMismatch(format!(
            "matrix has {} rows but basis has {}",
            a.data.nrows(),
            u.u.nrows()
        )));
    }
    let coeffs = u.u.transpose() * &a.data;
    Ok(coeffs
        .row_iter()
        .map(|row| {
            let mean = row.iter().sum::<f64>() / l as f64;
            row.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (l - 1) as f64
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FmsParams {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub weight_floor: f64,
}

impl Default for FmsParams {
    fn default() -> Self {
        FmsParams {
            max_iterations: 100,
            tolerance: 1e-9,
            weight_floor: 1e-10,
        }
    }
}

impl FmsParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(LraError::InvalidParameter(
                "max_iterations must be positive".into(),
            ));
        }
        for (name, v) in [
            ("tolerance", self.tolerance),
            ("weight_floor", self.weight_floor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(LraError::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// One row of the FMS iteration trace. Iteration 0 is the SVD initialization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub step_distance: Option<f64>,
    pub orthonormality_error: f64,
}

#[derive(Clone, Debug)]
pub struct FmsFit {
    pub basis: Basis,
    /// Number of reweighting iterations performed.
    pub iterations: usize,
    /// Whether the step distance dropped below the tolerance.
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

impl FmsFit {
    pub fn objective(&self) -> f64 {
        self.trace.last().map(|r| r.objective).unwrap_or(f64::NAN)
    }
}

/// Robust subspace by Fast Median Subspace (IRLS on the sum of residual norms).
pub fn fms_subspace(a: &ContourMatrix, m: usize, params: &FmsParams) -> Result<FmsFit> {
    params.validate()?;
    check_dimension(a, m)?;

    let init = svd_subspace(a, m)?;
    let mut current = Basis {
        fit_method: FitMethod::Fms,
        ..init
    };
    let mut trace = vec![TraceRow {
        iteration: 0,
        objective: l12_objective(a, &current)?,
        step_distance: None,
        orthonormality_error: orthonormality_error(&current.u),
    }];

    let mut k = 0;
    let mut converged = false;
    while k < params.max_iterations {
        k += 1;
        let weights: Vec<f64> = residual_norms(a, &current)?
            .into_iter()
            .map(|r| 1.0 / r.max(params.weight_floor))
            .collect();
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(LraError::Numerical(format!(
                "non-finite weight at iteration {k}"
            )));
        }
        let next = weighted_step(a, &weights, m, FitMethod::Fms)
            .map_err(|e| LraError::Numerical(format!("iteration {k}: {e}")))?;
        let step = subspace_distance(&next, &current)?;
        let objective = l12_objective(a, &next)?;
        if !(step.is_finite() && objective.is_finite()) {
            return Err(LraError::Numerical(format!(
                "non-finite objective or step at iteration {k}"
            )));
        }
        trace.push(TraceRow {
            iteration: k,
            objective,
            step_distance: Some(step),
            orthonormality_error: orthonormality_error(&next.u),
        });
        current = next;
        if step < params.tolerance {
            converged = true;
            break;
        }
    }

    Ok(FmsFit {
        basis: current,
        iterations: k,
        converged,
        trace,
    })
}

/// Fits with either method; SVD fits report a single-row trace.
pub fn fit_subspace(
    a: &ContourMatrix,
    m: usize,
    method: FitMethod,
    params: &FmsParams,
) -> Result<FmsFit> {
    match method {
        FitMethod::Fms => fms_subspace(a, m, params),
        FitMethod::Svd => {
            let basis = svd_subspace(a, m)?;
            let trace = vec![TraceRow {
                iteration: 0,
                objective: l12_objective(a, &basis)?,
                step_distance: None,
                orthonormality_error: orthonormality_error(&basis.u),
            }];
            Ok(FmsFit {
                basis,
                iterations: 0,
                converged: true,
                trace,
            })
        }
    }
}

/// Writes the iteration trace as CSV (`iteration,objective,step_distance,orthonormality_error`).
pub fn write_trace_csv(trace: &[TraceRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in trace {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
