//! Measured-spectrum CSV input and per-spectrum map CSV output.
//!
//! Input files have the header `wavenumber,intensity[,spectrum_id]`, one
//! row per sample. Rows of one spectrum must be contiguous with strictly
//! increasing wavenumbers. A `contribution` column is accepted in place of
//! `intensity`, so exported maps can be read back.

use std::path::Path;

use raman_cnn::preprocess::{model_grid, preprocess_with, BaselineMode, RawSpectrum};

use crate::bundle::{csv_reader, record_line, Bundle, BundleMeta};
use crate::error::{Error, LineProblem, Result};
use crate::fsio;

#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub id: String,
    /// Line of the spectrum's first row.
    pub line: u64,
    pub raw: RawSpectrum,
}

pub fn read_spectrum_csv(path: &Path) -> Result<Vec<RawRecord>> {
    let mut reader = csv_reader(path)?;
    let header = reader.headers().map_err(|e| Error::format(path, e.to_string()))?.clone();
    let names: Vec<String> = header.iter().map(str::to_ascii_lowercase).collect();
    let ok_header = names.len() >= 2
        && names.len() <= 3
        && names[0] == "wavenumber"
        && (names[1] == "intensity" || names[1] == "contribution")
        && names.get(2).map_or(true, |n| n == "spectrum_id");
    if !ok_header {
        return Err(Error::format(
            path,
            "header must be `wavenumber,intensity[,spectrum_id]` or `wavenumber,contribution`",
        ));
    }
    let with_id = names.len() == 3;
    let default_id = path.file_stem().map_or_else(|| "spectrum".into(), |s| s.to_string_lossy().into_owned());

    struct Group {
        id: String,
        line: u64,
        x: Vec<f64>,
        y: Vec<f64>,
    }
    let mut groups: Vec<Group> = Vec::new();
    let mut problems = Vec::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                problems.push(LineProblem {
                    line: e.position().map_or(0, |p| p.line()),
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = record_line(&record);
        if record.len() != names.len() {
            problems.push(LineProblem {
                line,
                message: format!("expected {} fields, found {}", names.len(), record.len()),
            });
            continue;
        }
        let parse = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite());
        let (Some(x), Some(y)) = (parse(&record[0]), parse(&record[1])) else {
            problems.push(LineProblem {
                line,
                message: "wavenumber and intensity must be finite numbers".into(),
            });
            continue;
        };
        let id = if with_id { record[2].to_string() } else { default_id.clone() };
        match groups.last_mut() {
            Some(g) if g.id == id => {
                let prev = *g.x.last().expect("groups start non-empty");
                if !(x > prev) {
                    problems.push(LineProblem {
                        line,
                        message: format!("wavenumber {x} is not above the previous {prev}"),
                    });
                    continue;
                }
                g.x.push(x);
                g.y.push(y);
            }
            _ => {
                if groups.iter().any(|g| g.id == id) {
                    problems.push(LineProblem {
                        line,
                        message: format!("rows of spectrum `{id}` are not contiguous"),
                    });
                    continue;
                }
                groups.push(Group {
                    id,
                    line,
                    x: vec![x],
                    y: vec![y],
                });
            }
        }
    }
    let mut records = Vec::with_capacity(groups.len());
    for g in groups {
        match RawSpectrum::new(g.x, g.y) {
            Ok(raw) => records.push(RawRecord {
                id: g.id,
                line: g.line,
                raw,
            }),
            Err(e) => problems.push(LineProblem {
                line: g.line,
                message: format!("spectrum `{}`: {e}", g.id),
            }),
        }
    }
    if !problems.is_empty() {
        problems.sort_by_key(|p| p.line);
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            problems,
        });
    }
    if records.is_empty() {
        return Err(Error::format(path, "no spectra found"));
    }
    Ok(records)
}

/// Preprocesses every record onto the model grid as an unlabeled bundle.
/// Clamped samples and flat spectra are logged as warnings.
pub fn ingest_records(records: &[RawRecord], baseline: BaselineMode) -> Result<Bundle> {
    let mut spectra = Vec::with_capacity(records.len());
    for r in records {
        let p = preprocess_with(&r.raw, baseline)?;
        if p.clamped > 0 {
            log::warn!(
                "spectrum `{}` does not cover the model range; {} grid points clamped to its edge values",
                r.id,
                p.clamped
            );
        }
        if p.degenerate {
            log::warn!("spectrum `{}` has no positive intensity after baseline removal", r.id);
        }
        spectra.push(p.input.intensity);
    }
    Ok(Bundle {
        ids: records.iter().map(|r| r.id.clone()).collect(),
        grid: model_grid(),
        spectra,
        labels: None,
        meta: BundleMeta {
            kind: "ingest".into(),
            recipe: serde_json::json!({ "baseline": baseline }),
            ..BundleMeta::default()
        },
    })
}

/// Two-column `wavenumber,contribution` CSV.
pub fn write_map_csv(path: &Path, grid: &[f64], values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Error::format(path, e.to_string());
    w.write_record(["wavenumber", "contribution"]).map_err(fail)?;
    for (g, v) in grid.iter().zip(values) {
        w.write_record([g.to_string(), v.to_string()]).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::format(path, e.to_string()))?;
    fsio::write_atomic(path, &bytes)
}
