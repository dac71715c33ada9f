//! JSON-Lines annotation ingestion: `{"id": "...", "polygons": [[[x, y], ...], ...]}`.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::{Point, RawPolygon};
use crate::error::Result;

#[derive(Debug, Deserialize, Serialize)]
struct RecordLine {
    id: String,
    polygons: Vec<Vec<[f64; 2]>>,
}

#[derive(Clone, Debug)]
pub struct AnnotationRecord {
    pub id: String,
    pub polygons: Vec<RawPolygon>,
}

/// A problem with one input line (1-based) or one polygon on it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub polygon: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.polygon {
            Some(p) => write!(f, "line {} polygon {}: {}", self.line, p, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct AnnotationSet {
    pub records: Vec<AnnotationRecord>,
    pub diagnostics: Vec<Diagnostic>,
    /// Lines that could not be parsed at all.
    pub skipped_lines: usize,
    /// Polygons rejected at ingestion (degenerate geometry).
    pub rejected_polygons: usize,
}

impl AnnotationSet {
    pub fn polygon_count(&self) -> usize {
        self.records.iter().map(|r| r.polygons.len()).sum()
    }
}

/// Reads annotation records, collecting a diagnostic for every malformed line
/// or rejected polygon instead of aborting.
pub fn read_annotations(reader: impl BufRead) -> Result<AnnotationSet> {
    let mut set = AnnotationSet::default();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RecordLine = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                set.skipped_lines += 1;
                set.diagnostics.push(Diagnostic {
                    line: line_no,
                    polygon: None,
                    message: format!("malformed record: {e}"),
                });
                continue;
            }
        };
        let mut polygons = Vec::with_capacity(rec.polygons.len());
        for (pi, verts) in rec.polygons.into_iter().enumerate() {
            match RawPolygon::new(verts.into_iter().map(Point::from).collect()) {
                Ok(p) => polygons.push(p),
                Err(e) => {
                    set.rejected_polygons += 1;
                    set.diagnostics.push(Diagnostic {
                        line: line_no,
                        polygon: Some(pi),
                        message: e.to_string(),
                    });
                }
            }
        }
        set.records.push(AnnotationRecord {
            id: rec.id,
            polygons,
        });
    }
    Ok(set)
}
