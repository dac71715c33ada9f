use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::synthetic::{generate_ribbons, RibbonFamily};
use crate::error::{LraError, Result};
use crate::geometry::{read_annotations, resample_contour, Canonicalization, Contour, Diagnostic};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CorpusSource {
    Jsonl {
        path: PathBuf,
        /// When false, polygons must already have exactly `n_vertices` vertices and are taken verbatim.
        #[serde(default = "yes")]
        resample: bool,
    },
    Synthetic {
        family: RibbonFamily,
        count: usize,
        seed: u64,
    },
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub source: CorpusSource,
    pub n_vertices: usize,
    pub canonicalization: Canonicalization,
}

impl CorpusSpec {
    pub fn synthetic(family: RibbonFamily, count: usize, seed: u64) -> Self {
        CorpusSpec {
            source: CorpusSource::Synthetic {
                family,
                count,
                seed,
            },
            n_vertices: crate::geometry::DEFAULT_VERTICES,
            canonicalization: Canonicalization::default(),
        }
    }

    /// SHA-256 of the spec's JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("corpus spec serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn id(&self) -> String {
        match &self.source {
            CorpusSource::Jsonl { path, .. } => format!("jsonl:{}", path.display()),
            CorpusSource::Synthetic {
                family,
                count,
                seed,
            } => format!("synthetic:{}:{count}:{seed}", family.as_str()),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self.source {
            CorpusSource::Synthetic { seed, .. } => Some(seed),
            CorpusSource::Jsonl { .. } => None,
        }
    }
}

/// Contours materialized from a [`CorpusSpec`].
#[derive(Clone, Debug)]
pub struct Corpus {
    pub spec: CorpusSpec,
    pub ids: Vec<String>,
    pub contours: Vec<Contour>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Corpus {
    /// Wraps already-built contours (used by tests and in-memory callers).
    pub fn from_contours(spec: CorpusSpec, contours: Vec<Contour>) -> Self {
        let ids = (0..contours.len()).map(|i| i.to_string()).collect();
        Corpus {
            spec,
            ids,
            contours,
            diagnostics: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.contours.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contours.is_empty()
    }

    pub fn hash(&self) -> String {
        self.spec.hash()
    }
}

pub fn load_corpus(spec: &CorpusSpec) -> Result<Corpus> {
    if spec.n_vertices < 4 {
        return Err(LraError::InvalidParameter(format!(
            "n_vertices must be at least 4, got {}",
            spec.n_vertices
        )));
    }
    match &spec.source {
        CorpusSource::Synthetic {
            family,
            count,
            seed,
        } => {
            let contours = generate_ribbons(*family, *count, spec.n_vertices, *seed)?;
            Ok(Corpus::from_contours(spec.clone(), contours))
        }
        CorpusSource::Jsonl { path, resample } => {
            let file = File::open(path).map_err(|e| {
                LraError::Io(std::io::Error::new(
                    e.kind(),
                    format!("{}: {e}", path.display()),
                ))
            })?;
            let set = read_annotations(BufReader::new(file))?;
            let mut diagnostics = set.diagnostics;
            let mut ids = Vec::new();
            let mut contours = Vec::new();
            for rec in &set.records {
                for (k, poly) in rec.polygons.iter().enumerate() {
                    let contour = if *resample {
                        resample_contour(poly, spec.n_vertices)
                    } else if poly.len() == spec.n_vertices {
                        Contour::new(poly.vertices().to_vec())
                    } else {
                        Err(LraError::ShapeMismatch(format!(
                            "polygon has {} vertices, expected {} (resampling disabled)",
                            poly.len(),
                            spec.n_vertices
                        )))
                    };
                    match contour {
                        Ok(c) => {
                            ids.push(format!("{}#{k}", rec.id));
                            contours.push(c);
                        }
                        Err(e) => diagnostics.push(Diagnostic {
                            line: 0,
                            polygon: Some(k),
                            message: format!("record {}: {e}", rec.id),
                        }),
                    }
                }
            }
            if contours.is_empty() {
                return Err(LraError::Parse(format!(
                    "{} yielded no usable polygons",
                    path.display()
                )));
            }
            Ok(Corpus {
                spec: spec.clone(),
                ids,
                contours,
                diagnostics,
            })
        }
    }
}
