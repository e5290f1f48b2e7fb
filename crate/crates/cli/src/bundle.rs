//! Dataset bundle: a directory with `spectra.csv`, an optional `labels.csv`
//! and `meta.json`.
//!
//! `spectra.csv` has one row per spectrum. Its header is `id` followed by the
//! shared grid (channel index or wavenumber), so the grid survives a round
//! trip. `labels.csv` holds `id,class` rows.

use std::collections::HashMap;
use std::path::Path;

use raman_cnn::specgen::{ItemMeta, LabeledDataset, Spectrum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, LineProblem, Result};
use crate::fsio;

pub const SPECTRA_FILE: &str = "spectra.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BundleMeta {
    /// Generator or source name, e.g. `peaks` or `ingest`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_classes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Generator settings.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub recipe: serde_json::Value,
    /// Per-spectrum provenance, empty or one entry per spectrum.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub items: Vec<ItemMeta>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub ids: Vec<String>,
    pub grid: Vec<f64>,
    pub spectra: Vec<Vec<f64>>,
    pub labels: Option<Vec<usize>>,
    pub meta: BundleMeta,
}

pub fn default_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{i:05}")).collect()
}

impl Bundle {
    pub fn from_dataset(dataset: &LabeledDataset, kind: &str, seed: Option<u64>, recipe: serde_json::Value) -> Result<Self> {
        let grid = dataset.spectra.first().map(|s| s.grid.clone()).unwrap_or_default();
        if dataset.spectra.iter().any(|s| s.grid != grid) {
            return Err(Error::Usage("bundle spectra must share one grid".into()));
        }
        Ok(Self {
            ids: default_ids(dataset.len()),
            grid,
            spectra: dataset.spectra.iter().map(|s| s.intensity.clone()).collect(),
            labels: Some(dataset.labels.clone()),
            meta: BundleMeta {
                kind: kind.into(),
                n_classes: Some(dataset.n_classes),
                seed,
                recipe,
                items: dataset.meta.clone(),
            },
        })
    }

    pub fn len(&self) -> usize {
        self.spectra.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectra.is_empty()
    }

    pub fn spectrum(&self, i: usize) -> Spectrum {
        Spectrum {
            grid: self.grid.clone(),
            intensity: self.spectra[i].clone(),
        }
    }

    /// The bundle as a training dataset; fails when labels are missing.
    pub fn labeled(&self, dir: &Path) -> Result<LabeledDataset> {
        let labels = self
            .labels
            .clone()
            .ok_or_else(|| Error::format(&dir.join(LABELS_FILE), "dataset has no labels"))?;
        let n_classes = self
            .meta
            .n_classes
            .unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1));
        let meta = if self.meta.items.len() == self.len() {
            self.meta.items.clone()
        } else {
            vec![ItemMeta::default(); self.len()]
        };
        let spectra = (0..self.len()).map(|i| self.spectrum(i)).collect();
        Ok(LabeledDataset::new(spectra, labels, n_classes, meta)?)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["id".to_string()];
        header.extend(self.grid.iter().map(|g| g.to_string()));
        write_record(&mut w, &header, dir)?;
        for (id, values) in self.ids.iter().zip(&self.spectra) {
            let mut row = vec![id.clone()];
            row.extend(values.iter().map(|v| v.to_string()));
            write_record(&mut w, &row, dir)?;
        }
        fsio::write_atomic(&dir.join(SPECTRA_FILE), &finish(w, dir)?)?;

        if let Some(labels) = &self.labels {
            let mut w = csv::Writer::from_writer(Vec::new());
            write_record(&mut w, &["id".to_string(), "class".to_string()], dir)?;
            for (id, l) in self.ids.iter().zip(labels) {
                write_record(&mut w, &[id.clone(), l.to_string()], dir)?;
            }
            fsio::write_atomic(&dir.join(LABELS_FILE), &finish(w, dir)?)?;
        }
        fsio::write_json(&dir.join(META_FILE), &self.meta)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let spectra_path = dir.join(SPECTRA_FILE);
        let (grid, ids, spectra) = read_spectra(&spectra_path)?;
        let meta_path = dir.join(META_FILE);
        let meta: BundleMeta = if meta_path.exists() {
            serde_json::from_str(&fsio::read_to_string(&meta_path)?).map_err(|e| Error::format(&meta_path, e.to_string()))?
        } else {
            BundleMeta::default()
        };
        if !meta.items.is_empty() && meta.items.len() != spectra.len() {
            return Err(Error::format(
                &meta_path,
                format!("{} item records for {} spectra", meta.items.len(), spectra.len()),
            ));
        }
        let labels_path = dir.join(LABELS_FILE);
        let labels = if labels_path.exists() {
            Some(read_labels(&labels_path, &ids, meta.n_classes)?)
        } else {
            None
        };
        Ok(Self {
            ids,
            grid,
            spectra,
            labels,
            meta,
        })
    }
}

fn write_record(w: &mut csv::Writer<Vec<u8>>, row: &[String], dir: &Path) -> Result<()> {
    w.write_record(row).map_err(|e| Error::format(dir, e.to_string()))
}

fn finish(w: csv::Writer<Vec<u8>>, dir: &Path) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::format(dir, e.to_string()))
}

pub(crate) fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::format(path, format!("{other:?}")),
        })
}

pub(crate) fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

type SpectraTable = (Vec<f64>, Vec<String>, Vec<Vec<f64>>);

fn read_spectra(path: &Path) -> Result<SpectraTable> {
    let mut reader = csv_reader(path)?;
    let header = reader.headers().map_err(|e| Error::format(path, e.to_string()))?.clone();
    if header.get(0) != Some("id") || header.len() < 2 {
        return Err(Error::format(path, "header must be `id` followed by grid values"));
    }
    let mut problems = Vec::new();
    let grid: Vec<f64> = header
        .iter()
        .skip(1)
        .map(|h| {
            parse_f64(h).unwrap_or_else(|| {
                problems.push(LineProblem {
                    line: 1,
                    message: format!("grid value `{h}` is not a number"),
                });
                f64::NAN
            })
        })
        .collect();
    if problems.is_empty() && grid.windows(2).any(|w| !(w[1] > w[0])) {
        problems.push(LineProblem {
            line: 1,
            message: "grid values must be strictly increasing".into(),
        });
    }
    let (mut ids, mut spectra) = (Vec::new(), Vec::new());
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
        if record.len() != grid.len() + 1 {
            problems.push(LineProblem {
                line,
                message: format!("expected {} fields, found {}", grid.len() + 1, record.len()),
            });
            continue;
        }
        let values: Option<Vec<f64>> = record.iter().skip(1).map(parse_f64).collect();
        match values {
            Some(v) => {
                ids.push(record[0].to_string());
                spectra.push(v);
            }
            None => problems.push(LineProblem {
                line,
                message: "intensity is not a finite number".into(),
            }),
        }
    }
    if !problems.is_empty() {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            problems,
        });
    }
    Ok((grid, ids, spectra))
}

fn read_labels(path: &Path, ids: &[String], n_classes: Option<usize>) -> Result<Vec<usize>> {
    let mut reader = csv_reader(path)?;
    let mut by_id = HashMap::new();
    let mut problems = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::format(path, e.to_string()))?;
        let line = record_line(&record);
        let class = record.get(1).and_then(|c| c.parse::<usize>().ok());
        match (record.get(0), class) {
            (Some(id), Some(c)) if record.len() == 2 => {
                if n_classes.is_some_and(|n| c >= n) {
                    problems.push(LineProblem {
                        line,
                        message: format!("class {c} out of range"),
                    });
                } else if by_id.insert(id.to_string(), c).is_some() {
                    problems.push(LineProblem {
                        line,
                        message: format!("duplicate id `{id}`"),
                    });
                }
            }
            _ => problems.push(LineProblem {
                line,
                message: "expected `id,class`".into(),
            }),
        }
    }
    if !problems.is_empty() {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            problems,
        });
    }
    ids.iter()
        .map(|id| {
            by_id
                .get(id)
                .copied()
                .ok_or_else(|| Error::format(path, format!("no label for spectrum `{id}`")))
        })
        .collect()
}

/// Reads an `id,class` file and orders it by `ids`.
pub fn read_label_file(path: &Path, ids: &[String], n_classes: Option<usize>) -> Result<Vec<usize>> {
    read_labels(path, ids, n_classes)
}
