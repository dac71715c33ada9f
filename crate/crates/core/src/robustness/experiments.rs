use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::corpus::Corpus;
use super::noise::{inject_spike_noise, NoiseSpec};
use super::report::{ContourIou, CorpusInfo, IouStats, Report, ReportRow};
use crate::codec::{fourier_reconstruction_iou, reconstruction_iou, OrthanchorBasis, Provenance};
use crate::error::{LraError, Result};
use crate::geometry::Contour;
use crate::subspace::{
    build_matrix, explained_variance, fit_subspace, l12_objective, squared_reconstruction_error,
    subspace_distance, ContourMatrix, FitMethod, FmsFit, FmsParams,
};

/// Deterministic sub-seed for a named sub-task of a run.
pub fn derive_seed(base: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update(label.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

/// Settings shared by every experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalSettings {
    pub fms: FmsParams,
    pub resolution: usize,
    /// Keep per-contour IoU values in the report.
    pub per_contour: bool,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            fms: FmsParams::default(),
            resolution: crate::geometry::DEFAULT_RESOLUTION,
            per_contour: false,
        }
    }
}

/// Fits a basis on `a` and wraps it with provenance.
pub fn fit_basis(
    a: &ContourMatrix,
    m: usize,
    method: FitMethod,
    params: &FmsParams,
    corpus_id: &str,
) -> Result<(OrthanchorBasis, FmsFit)> {
    let fit = fit_subspace(a, m, method, params)?;
    let mut p = std::collections::BTreeMap::new();
    p.insert("method".into(), method.to_string());
    p.insert("m".into(), m.to_string());
    p.insert("n_samples".into(), a.n_samples().to_string());
    if method == FitMethod::Fms {
        p.insert("max_iterations".into(), params.max_iterations.to_string());
        p.insert("tolerance".into(), format!("{:e}", params.tolerance));
        p.insert("weight_floor".into(), format!("{:e}", params.weight_floor));
    }
    let basis = OrthanchorBasis::new(
        fit.basis.clone(),
        Provenance {
            corpus_id: corpus_id.to_string(),
            params: p,
        },
    );
    Ok((basis, fit))
}

/// Reconstruction IoU of every contour, evaluated in parallel; output order matches input.
pub fn evaluate_iou(
    b: &OrthanchorBasis,
    contours: &[Contour],
    resolution: usize,
) -> Result<Vec<f64>> {
    contours
        .par_iter()
        .map(|c| reconstruction_iou(b, c, resolution))
        .collect()
}

pub fn evaluate_fourier_iou(
    contours: &[Contour],
    dims: usize,
    resolution: usize,
) -> Result<Vec<f64>> {
    contours
        .par_iter()
        .map(|c| fourier_reconstruction_iou(c, dims, resolution))
        .collect()
}

fn stats(values: &[f64]) -> Result<IouStats> {
    IouStats::from_values(values)
        .ok_or_else(|| LraError::InvalidParameter("cannot evaluate an empty corpus".into()))
}

fn corpus_info(role: &str, c: &Corpus) -> CorpusInfo {
    CorpusInfo {
        role: role.to_string(),
        id: c.spec.id(),
        spec_hash: c.hash(),
        size: c.len(),
    }
}

fn base_report(name: &str, corpora: &[(&str, &Corpus)], settings: &EvalSettings) -> Report {
    let mut r = Report::new(name);
    for (role, c) in corpora {
        r.corpora.push(corpus_info(role, c));
        if let Some(seed) = c.spec.seed() {
            r.seeds.insert(format!("{role}_corpus"), seed);
        }
    }
    r.params
        .insert("resolution".into(), settings.resolution.into());
    r.params.insert(
        "fms".into(),
        serde_json::to_value(settings.fms).expect("params serialize"),
    );
    r
}

fn push_per_contour(
    r: &mut Report,
    settings: &EvalSettings,
    condition: &str,
    method: &str,
    dim: usize,
    ids: &[String],
    ious: &[f64],
) {
    if settings.per_contour {
        r.per_contour
            .extend(ids.iter().zip(ious).map(|(id, &iou)| ContourIou {
                condition: condition.into(),
                method: method.into(),
                dim,
                id: id.clone(),
                iou,
            }));
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Fits SVD and FMS on the clean and on the spike-corrupted corpus (one
/// shared corruption draw), evaluates all four bases on the clean contours,
/// and reports per-method IoU drops in IoU points (×100).
pub fn noise_benchmark(
    corpus: &Corpus,
    noise: &NoiseSpec,
    m: usize,
    settings: &EvalSettings,
) -> Result<Report> {
    let flags = corpus.spec.canonicalization;
    let corrupted = inject_spike_noise(&corpus.contours, noise)?;
    let clean_matrix = build_matrix(&corpus.contours, flags)?;
    let noisy_matrix = build_matrix(&corrupted.contours, flags)?;

    let mut r = base_report("noise", &[("eval", corpus)], settings);
    r.seeds.insert("noise".into(), noise.seed);
    r.params.insert(
        "noise".into(),
        serde_json::to_value(noise).expect("noise spec serializes"),
    );
    r.params.insert("m".into(), m.into());
    let seeds = r.seed_label();
    let hash = corpus.hash();

    for method in [FitMethod::Svd, FitMethod::Fms] {
        let (clean_basis, clean_fit) =
            fit_basis(&clean_matrix, m, method, &settings.fms, &corpus.spec.id())?;
        let (noisy_basis, noisy_fit) =
            fit_basis(&noisy_matrix, m, method, &settings.fms, &corpus.spec.id())?;
        let clean_iou = evaluate_iou(&clean_basis, &corpus.contours, settings.resolution)?;
        let noisy_iou = evaluate_iou(&noisy_basis, &corpus.contours, settings.resolution)?;
        let shift = subspace_distance(&clean_basis.basis, &noisy_basis.basis)?;
        let method_name = method.as_str();

        for (condition, fraction, fit, basis, ious, dist) in [
            ("clean", 0.0, &clean_fit, &clean_basis, &clean_iou, 0.0),
            (
                "corrupted",
                noise.corrupt_fraction,
                &noisy_fit,
                &noisy_basis,
                &noisy_iou,
                shift,
            ),
        ] {
            r.rows.push(ReportRow {
                condition: condition.into(),
                method: method_name.into(),
                dim: Some(m),
                noise_fraction: Some(fraction),
                n_contours: Some(ious.len()),
                iou: Some(stats(ious)?),
                mean_sq_error: Some(
                    squared_reconstruction_error(&clean_matrix, &basis.basis)?
                        / corpus.len() as f64,
                ),
                objective: Some(fit.objective()),
                subspace_distance: Some(dist),
                iterations: Some(fit.iterations),
                corpus_hash: hash.clone(),
                seeds: seeds.clone(),
                ..ReportRow::default()
            });
            push_per_contour(
                &mut r,
                settings,
                condition,
                method_name,
                m,
                &corpus.ids,
                ious,
            );
        }
        let (c, n) = (mean(&clean_iou), mean(&noisy_iou));
        r.summary.insert(format!("{method_name}_clean_iou"), c);
        r.summary.insert(format!("{method_name}_corrupted_iou"), n);
        r.summary
            .insert(format!("{method_name}_drop"), 100.0 * (c - n));
    }
    let gap = r.summary["svd_drop"] - r.summary["fms_drop"];
    r.summary.insert("drop_gap".into(), gap);
    r.summary.insert(
        "corrupted_contours".into(),
        corrupted.corrupted.len() as f64,
    );
    Ok(r)
}

/// One row per dimension with mean IoU and mean squared reconstruction error.
/// For SVD the squared error must be non-increasing in the dimension.
pub fn dim_sweep(
    corpus: &Corpus,
    dims: &[usize],
    method: FitMethod,
    settings: &EvalSettings,
) -> Result<Report> {
    let a = build_matrix(&corpus.contours, corpus.spec.canonicalization)?;
    let max = 2 * a.n_vertices();
    if dims.is_empty() {
        return Err(LraError::InvalidParameter("dims list is empty".into()));
    }
    if let Some(&d) = dims.iter().find(|&&d| d == 0 || d > max) {
        return Err(LraError::InvalidParameter(format!(
            "dim {d} outside 1..={max}"
        )));
    }
    let mut r = base_report("sweep", &[("eval", corpus)], settings);
    r.params.insert("method".into(), method.as_str().into());
    r.params.insert("dims".into(), dims.into());
    let seeds = r.seed_label();
    let hash = corpus.hash();

    let mut errors = Vec::with_capacity(dims.len());
    for &d in dims {
        let (basis, fit) = fit_basis(&a, d, method, &settings.fms, &corpus.spec.id())?;
        let ious = evaluate_iou(&basis, &corpus.contours, settings.resolution)?;
        let sq = squared_reconstruction_error(&a, &basis.basis)? / corpus.len() as f64;
        errors.push((d, sq));
        r.rows.push(ReportRow {
            condition: "sweep".into(),
            method: method.as_str().into(),
            dim: Some(d),
            n_contours: Some(ious.len()),
            iou: Some(stats(&ious)?),
            mean_sq_error: Some(sq),
            objective: Some(l12_objective(&a, &basis.basis)?),
            iterations: Some(fit.iterations),
            corpus_hash: hash.clone(),
            seeds: seeds.clone(),
            ..ReportRow::default()
        });
        push_per_contour(
            &mut r,
            settings,
            "sweep",
            method.as_str(),
            d,
            &corpus.ids,
            &ious,
        );
    }
    if method == FitMethod::Svd {
        let mut sorted = errors.clone();
        sorted.sort_by_key(|&(d, _)| d);
        for w in sorted.windows(2) {
            let ((d0, e0), (d1, e1)) = (w[0], w[1]);
            if e1 > e0 + 1e-9 * e0.max(1.0) {
                return Err(LraError::Numerical(format!(
                    "squared error increased from {e0} at dim {d0} to {e1} at dim {d1}"
                )));
            }
        }
        r.summary.insert("monotone".into(), 1.0);
    }
    Ok(r)
}

/// Per-orthanchor explained variance, sorted descending with original indices kept.
pub fn importance_profile(
    corpus: &Corpus,
    basis: &OrthanchorBasis,
    settings: &EvalSettings,
) -> Result<Report> {
    if basis.n_vertices() != corpus.spec.n_vertices {
        return Err(LraError::ShapeMismatch(format!(
            "basis has N = {} but corpus has N = {}",
            basis.n_vertices(),
            corpus.spec.n_vertices
        )));
    }
    let a = build_matrix(&corpus.contours, basis.canonicalization())?;
    let variances = explained_variance(&a, &basis.basis)?;
    let mut r = base_report("importance", &[("eval", corpus)], settings);
    r.params.insert("m".into(), basis.m().into());
    r.params
        .insert("fit_method".into(), basis.fit_method().as_str().into());
    let seeds = r.seed_label();
    let hash = corpus.hash();
    let first = variances[0];

    let mut order: Vec<usize> = (0..variances.len()).collect();
    order.sort_by(|&i, &j| variances[j].total_cmp(&variances[i]).then(i.cmp(&j)));
    for i in order {
        r.rows.push(ReportRow {
            condition: "orthanchor".into(),
            method: basis.fit_method().as_str().into(),
            dim: Some(basis.m()),
            index: Some(i + 1),
            n_contours: Some(corpus.len()),
            value: Some(variances[i]),
            relative: (first > 0.0).then(|| variances[i] / first),
            corpus_hash: hash.clone(),
            seeds: seeds.clone(),
            ..ReportRow::default()
        });
    }
    r.summary
        .insert("total_variance".into(), variances.iter().sum());
    if basis.fit_method() == FitMethod::Svd && variances.len() >= 2 {
        let head = variances[0] >= variances[1];
        r.summary
            .insert("decreasing_head".into(), if head { 1.0 } else { 0.0 });
    }
    Ok(r)
}

/// Fits on `fit` and evaluates on both corpora; `gap` is in-sample minus
/// held-out mean IoU, in IoU points.
pub fn generalization_check(
    fit: &Corpus,
    eval: &Corpus,
    m: usize,
    method: FitMethod,
    settings: &EvalSettings,
) -> Result<Report> {
    if fit.spec.n_vertices != eval.spec.n_vertices
        || fit.spec.canonicalization != eval.spec.canonicalization
    {
        return Err(LraError::ShapeMismatch(format!(
            "fit corpus (N = {}, {:?}) and eval corpus (N = {}, {:?}) differ",
            fit.spec.n_vertices,
            fit.spec.canonicalization,
            eval.spec.n_vertices,
            eval.spec.canonicalization
        )));
    }
    let a = build_matrix(&fit.contours, fit.spec.canonicalization)?;
    let (basis, fit_result) = fit_basis(&a, m, method, &settings.fms, &fit.spec.id())?;
    let mut r = base_report("generalize", &[("fit", fit), ("eval", eval)], settings);
    r.params.insert("m".into(), m.into());
    r.params.insert("method".into(), method.as_str().into());
    let seeds = r.seed_label();

    let mut means = Vec::new();
    for (condition, corpus) in [("in_sample", fit), ("held_out", eval)] {
        let ious = evaluate_iou(&basis, &corpus.contours, settings.resolution)?;
        means.push(mean(&ious));
        r.rows.push(ReportRow {
            condition: condition.into(),
            method: method.as_str().into(),
            dim: Some(m),
            n_contours: Some(ious.len()),
            iou: Some(stats(&ious)?),
            objective: Some(fit_result.objective()),
            iterations: Some(fit_result.iterations),
            corpus_hash: corpus.hash(),
            seeds: seeds.clone(),
            ..ReportRow::default()
        });
        push_per_contour(
            &mut r,
            settings,
            condition,
            method.as_str(),
            m,
            &corpus.ids,
            &ious,
        );
    }
    r.summary.insert("in_sample_iou".into(), means[0]);
    r.summary.insert("held_out_iou".into(), means[1]);
    r.summary
        .insert("gap".into(), 100.0 * (means[0] - means[1]));
    Ok(r)
}

/// Aggregate plus per-contour reconstruction IoU of `corpus` under a fixed basis.
pub fn evaluate_corpus(
    corpus: &Corpus,
    basis: &OrthanchorBasis,
    settings: &EvalSettings,
) -> Result<Report> {
    if basis.n_vertices() != corpus.spec.n_vertices {
        return Err(LraError::ShapeMismatch(format!(
            "basis has N = {} but corpus {} has N = {}",
            basis.n_vertices(),
            corpus.spec.id(),
            corpus.spec.n_vertices
        )));
    }
    let ious = evaluate_iou(basis, &corpus.contours, settings.resolution)?;
    let a = build_matrix(&corpus.contours, basis.canonicalization())?;
    let mut r = base_report("eval", &[("eval", corpus)], settings);
    r.params.insert(
        "basis_corpus".into(),
        basis.provenance.corpus_id.clone().into(),
    );
    let method = basis.fit_method().as_str();
    r.rows.push(ReportRow {
        condition: "aggregate".into(),
        method: method.into(),
        dim: Some(basis.m()),
        n_contours: Some(ious.len()),
        iou: Some(stats(&ious)?),
        mean_sq_error: Some(squared_reconstruction_error(&a, &basis.basis)? / corpus.len() as f64),
        objective: Some(l12_objective(&a, &basis.basis)?),
        corpus_hash: corpus.hash(),
        seeds: r.seed_label(),
        ..ReportRow::default()
    });
    let always = EvalSettings {
        per_contour: true,
        ..*settings
    };
    push_per_contour(
        &mut r,
        &always,
        "aggregate",
        method,
        basis.m(),
        &corpus.ids,
        &ious,
    );
    r.summary.insert("mean_iou".into(), mean(&ious));
    Ok(r)
}

/// LRA at `dim` against the Fourier baseline with the same number of real parameters.
pub fn codec_comparison(
    corpus: &Corpus,
    dim: usize,
    method: FitMethod,
    settings: &EvalSettings,
) -> Result<Report> {
    let a = build_matrix(&corpus.contours, corpus.spec.canonicalization)?;
    let (basis, _) = fit_basis(&a, dim, method, &settings.fms, &corpus.spec.id())?;
    let lra = evaluate_iou(&basis, &corpus.contours, settings.resolution)?;
    let fourier = evaluate_fourier_iou(&corpus.contours, dim, settings.resolution)?;
    let mut r = base_report("codecs", &[("eval", corpus)], settings);
    r.params.insert("dim".into(), dim.into());
    let seeds = r.seed_label();
    for (name, ious) in [(method.as_str(), &lra), ("fourier", &fourier)] {
        r.rows.push(ReportRow {
            condition: "codec".into(),
            method: name.into(),
            dim: Some(dim),
            n_contours: Some(ious.len()),
            iou: Some(stats(ious)?),
            corpus_hash: corpus.hash(),
            seeds: seeds.clone(),
            ..ReportRow::default()
        });
        push_per_contour(&mut r, settings, "codec", name, dim, &corpus.ids, ious);
    }
    r.summary.insert("lra_iou".into(), mean(&lra));
    r.summary.insert("fourier_iou".into(), mean(&fourier));
    Ok(r)
}
