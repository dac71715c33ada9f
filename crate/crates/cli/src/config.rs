//! Run configuration: a flat TOML file of `key = value` lines, then
//! `--set key=value` overrides. Unknown keys are rejected.

use std::path::Path;

use lra_core::geometry::Canonicalization;
use lra_core::robustness::{
    derive_seed, CorpusSource, CorpusSpec, EvalSettings, NoiseSpec, RibbonFamily,
};
use lra_core::subspace::{FitMethod, FmsParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Base seed; every sub-task derives its own seed from it.
    pub seed: u64,
    pub family: RibbonFamily,
    pub count: usize,
    pub n_vertices: usize,
    pub center: bool,
    pub normalize_scale: bool,
    /// Resample JSONL polygons to `n_vertices`; when false they must already have that many.
    pub resample: bool,

    pub method: FitMethod,
    pub m: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub weight_floor: f64,
    pub resolution: usize,
    pub per_contour: bool,

    pub corrupt_fraction: f64,
    pub vertices_min: usize,
    pub vertices_max: usize,
    pub magnitude_min: f64,
    pub magnitude_max: f64,

    pub dims: Vec<usize>,

    /// Synthetic held-out corpus for `generalize` when no `--eval-corpus` is given.
    pub eval_family: Option<RibbonFamily>,
    pub eval_count: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let fms = FmsParams::default();
        let noise = NoiseSpec::default();
        RunConfig {
            seed: 0,
            family: RibbonFamily::Curved,
            count: 500,
            n_vertices: lra_core::geometry::DEFAULT_VERTICES,
            center: true,
            normalize_scale: false,
            resample: true,
            method: FitMethod::Fms,
            m: 14,
            max_iterations: fms.max_iterations,
            tolerance: fms.tolerance,
            weight_floor: fms.weight_floor,
            resolution: lra_core::geometry::DEFAULT_RESOLUTION,
            per_contour: false,
            corrupt_fraction: noise.corrupt_fraction,
            vertices_min: noise.vertices_min,
            vertices_max: noise.vertices_max,
            magnitude_min: noise.magnitude_min,
            magnitude_max: noise.magnitude_max,
            dims: vec![6, 10, 14, 18, 28],
            eval_family: None,
            eval_count: None,
        }
    }
}

impl RunConfig {
    /// Reads the optional config file and applies `key=value` overrides in order.
    pub fn resolve(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                toml::from_str::<toml::Table>(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("override {o:?} is not key=value")))?;
            let key = key.trim();
            table.insert(key.to_string(), parse_value(raw.trim()));
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.count == 0 {
            return Err(CliError::Config("count must be positive".into()));
        }
        if self.m == 0 || self.m > 2 * self.n_vertices {
            return Err(CliError::Config(format!(
                "m must be in 1..={} for n_vertices = {}",
                2 * self.n_vertices,
                self.n_vertices
            )));
        }
        if self.resolution < lra_core::geometry::MIN_RESOLUTION {
            return Err(CliError::Config(format!(
                "resolution must be at least {}",
                lra_core::geometry::MIN_RESOLUTION
            )));
        }
        self.fms()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.noise()
            .validate(self.n_vertices)
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }

    /// SHA-256 of the resolved config's JSON form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(
            serde_json::to_vec(self).expect("config serializes"),
        ))
    }

    pub fn canonicalization(&self) -> Canonicalization {
        Canonicalization {
            center: self.center,
            normalize_scale: self.normalize_scale,
        }
    }

    pub fn fms(&self) -> FmsParams {
        FmsParams {
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            weight_floor: self.weight_floor,
        }
    }

    pub fn settings(&self) -> EvalSettings {
        EvalSettings {
            fms: self.fms(),
            resolution: self.resolution,
            per_contour: self.per_contour,
        }
    }

    pub fn noise(&self) -> NoiseSpec {
        NoiseSpec {
            corrupt_fraction: self.corrupt_fraction,
            vertices_min: self.vertices_min,
            vertices_max: self.vertices_max,
            magnitude_min: self.magnitude_min,
            magnitude_max: self.magnitude_max,
            seed: derive_seed(self.seed, "noise"),
        }
    }

    /// The corpus named by `path`, or the synthetic corpus described by the config.
    pub fn corpus(&self, path: Option<&Path>) -> CorpusSpec {
        let source = match path {
            Some(p) => CorpusSource::Jsonl {
                path: p.to_path_buf(),
                resample: self.resample,
            },
            None => CorpusSource::Synthetic {
                family: self.family,
                count: self.count,
                seed: derive_seed(self.seed, "corpus"),
            },
        };
        CorpusSpec {
            source,
            n_vertices: self.n_vertices,
            canonicalization: self.canonicalization(),
        }
    }

    /// Held-out corpus: `path` if given, else a disjoint synthetic draw.
    pub fn eval_corpus(&self, path: Option<&Path>) -> CorpusSpec {
        let source = match path {
            Some(p) => CorpusSource::Jsonl {
                path: p.to_path_buf(),
                resample: self.resample,
            },
            None => CorpusSource::Synthetic {
                family: self.eval_family.unwrap_or(self.family),
                count: self.eval_count.unwrap_or(self.count),
                seed: derive_seed(self.seed, "eval_corpus"),
            },
        };
        CorpusSpec {
            source,
            n_vertices: self.n_vertices,
            canonicalization: self.canonicalization(),
        }
    }
}

/// Interprets an override value as TOML, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
