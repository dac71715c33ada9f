//! Experiment reports: one CSV row per condition, plus a JSON document that
//! also carries corpus hashes, seeds, parameters and a summary.
//!
//! CSV columns (fixed order):
//! `experiment,condition,method,dim,index,noise_fraction,n_contours,mean_iou,
//! iou_min,iou_p10,iou_p50,iou_p90,mean_sq_error,objective,subspace_distance,
//! iterations,value,relative,corpus_hash,seeds`.
//! Empty cells mean "not applicable". IoU columns are written with three
//! decimals; the JSON keeps full precision.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const CSV_HEADER: [&str; 20] = [
    "experiment",
    "condition",
    "method",
    "dim",
    "index",
    "noise_fraction",
    "n_contours",
    "mean_iou",
    "iou_min",
    "iou_p10",
    "iou_p50",
    "iou_p90",
    "mean_sq_error",
    "objective",
    "subspace_distance",
    "iterations",
    "value",
    "relative",
    "corpus_hash",
    "seeds",
];

/// Summary statistics of a set of IoU values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IouStats {
    pub mean: f64,
    pub min: f64,
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
}

impl IouStats {
    /// Quantiles use linear interpolation between order statistics.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (sorted.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        };
        Some(IouStats {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min: sorted[0],
            p10: q(0.1),
            p50: q(0.5),
            p90: q(0.9),
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub condition: String,
    pub method: String,
    pub dim: Option<usize>,
    pub index: Option<usize>,
    pub noise_fraction: Option<f64>,
    pub n_contours: Option<usize>,
    pub iou: Option<IouStats>,
    pub mean_sq_error: Option<f64>,
    pub objective: Option<f64>,
    pub subspace_distance: Option<f64>,
    pub iterations: Option<usize>,
    pub value: Option<f64>,
    pub relative: Option<f64>,
    pub corpus_hash: String,
    pub seeds: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusInfo {
    pub role: String,
    pub id: String,
    pub spec_hash: String,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContourIou {
    pub condition: String,
    pub method: String,
    pub dim: usize,
    pub id: String,
    pub iou: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub corpora: Vec<CorpusInfo>,
    pub seeds: BTreeMap<String, u64>,
    pub params: BTreeMap<String, serde_json::Value>,
    pub rows: Vec<ReportRow>,
    pub summary: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_contour: Vec<ContourIou>,
}

impl Report {
    pub fn new(experiment: &str) -> Self {
        Report {
            experiment: experiment.to_string(),
            corpora: Vec::new(),
            seeds: BTreeMap::new(),
            params: BTreeMap::new(),
            rows: Vec::new(),
            summary: BTreeMap::new(),
            per_contour: Vec::new(),
        }
    }

    /// `name=seed` pairs joined by `;`, as stamped on every row.
    pub fn seed_label(&self) -> String {
        self.seeds
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn row(&self, condition: &str, method: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.condition == condition && r.method == method)
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let int = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        let iou = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                self.experiment.clone(),
                r.condition.clone(),
                r.method.clone(),
                int(r.dim),
                int(r.index),
                num(r.noise_fraction),
                int(r.n_contours),
                iou(r.iou.map(|s| s.mean)),
                iou(r.iou.map(|s| s.min)),
                iou(r.iou.map(|s| s.p10)),
                iou(r.iou.map(|s| s.p50)),
                iou(r.iou.map(|s| s.p90)),
                num(r.mean_sq_error),
                num(r.objective),
                num(r.subspace_distance),
                int(r.iterations),
                num(r.value),
                num(r.relative),
                r.corpus_hash.clone(),
                r.seeds.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_per_contour_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["condition", "method", "dim", "id", "iou"])?;
        for c in &self.per_contour {
            w.write_record([
                c.condition.clone(),
                c.method.clone(),
                c.dim.to_string(),
                c.id.clone(),
                c.iou.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Human-readable table for terminals.
    pub fn summary_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.experiment);
        let _ = writeln!(
            s,
            "{:<12} {:<8} {:>4} {:>4} {:>9} {:>9} {:>12} {:>12}",
            "condition", "method", "dim", "idx", "mean_iou", "p10_iou", "mean_sq_err", "value"
        );
        let dash = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<12} {:<8} {:>4} {:>4} {:>9} {:>9} {:>12} {:>12}",
                r.condition,
                r.method,
                dash(r.dim.map(|d| d.to_string())),
                dash(r.index.map(|d| d.to_string())),
                dash(r.iou.map(|i| format!("{:.3}", i.mean))),
                dash(r.iou.map(|i| format!("{:.3}", i.p10))),
                dash(r.mean_sq_error.map(|e| format!("{e:.4e}"))),
                dash(r.value.map(|e| format!("{e:.4e}"))),
            );
        }
        for (k, v) in &self.summary {
            let _ = writeln!(s, "{k} = {v:.3}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let s = IouStats::from_values(&[0.4, 0.1, 0.3, 0.2, 0.5]).unwrap();
        assert!((s.mean - 0.3).abs() < 1e-15);
        assert_eq!(s.min, 0.1);
        assert!((s.p50 - 0.3).abs() < 1e-15);
        assert!((s.p10 - 0.14).abs() < 1e-12);
        assert!((s.p90 - 0.46).abs() < 1e-12);
        assert!(IouStats::from_values(&[]).is_none());
    }

    #[test]
    fn csv_has_fixed_header_and_rounded_iou() {
        let mut r = Report::new("demo");
        r.seeds.insert("corpus".into(), 7);
        r.rows.push(ReportRow {
            condition: "clean".into(),
            method: "svd".into(),
            dim: Some(14),
            iou: IouStats::from_values(&[0.98765]),
            corpus_hash: "abc".into(),
            seeds: r.seed_label(),
            ..ReportRow::default()
        });
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(
            lines.next().unwrap(),
            "demo,clean,svd,14,,,,0.988,0.988,0.988,0.988,0.988,,,,,,,abc,corpus=7"
        );
    }
}
