//! Loads profile collections and ground truth from CSV or JSONL files into
//! the core model. Values are ingested as plain strings; the methods are
//! schema-agnostic and only ever consume tokens.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::{
    ErMode, GroundTruth, GroundTruthError, ModelError, PairError, Profile, ProfileCollection,
    ProfileId,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    Jsonl,
}

impl DataFormat {
    /// Infers the format from a file extension; `.jsonl`/`.ndjson`/`.json`
    /// mean JSONL, everything else CSV.
    pub fn infer(path: &Path) -> DataFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("ndjson") | Some("json") => DataFormat::Jsonl,
            _ => DataFormat::Csv,
        }
    }
}

/// Where a collection comes from: one file for dirty resolution, two files
/// (one per source) for clean-clean.
#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub paths: Vec<PathBuf>,
    pub format: DataFormat,
    /// Column or key holding the external id; absent means the row index is
    /// the external id. The id value never becomes an attribute.
    pub id_column: Option<String>,
}

impl DatasetSpec {
    pub fn dirty(path: impl Into<PathBuf>, format: DataFormat) -> Self {
        Self { paths: vec![path.into()], format, id_column: None }
    }

    pub fn clean_clean(
        source0: impl Into<PathBuf>,
        source1: impl Into<PathBuf>,
        format: DataFormat,
    ) -> Self {
        Self { paths: vec![source0.into(), source1.into()], format, id_column: None }
    }

    pub fn with_id_column(mut self, column: impl Into<String>) -> Self {
        self.id_column = Some(column.into());
        self
    }

    pub fn mode(&self) -> Result<ErMode, IngestError> {
        match self.paths.len() {
            1 => Ok(ErMode::Dirty),
            2 => Ok(ErMode::CleanClean),
            n => Err(IngestError::BadSpec(format!("expected one or two dataset files, got {n}"))),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("bad dataset spec: {0}")]
    BadSpec(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },
    #[error("{path}: duplicate external id '{id}'")]
    DuplicateExternalId { path: PathBuf, id: String },
    #[error("{path}:{line}: unknown external id '{id}'")]
    UnknownId { path: PathBuf, line: u64, id: String },
    #[error("{path}:{line}: {source}")]
    Pair { path: PathBuf, line: u64, source: PairError },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    GroundTruth(#[from] GroundTruthError),
}

/// Per-source translation from external ids to dense ids.
#[derive(Debug, Clone)]
pub struct IdMaps {
    maps: Vec<HashMap<String, ProfileId>>,
}

impl IdMaps {
    pub fn resolve(&self, source: usize, external: &str) -> Option<ProfileId> {
        self.maps.get(source).and_then(|m| m.get(external)).copied()
    }

    pub fn source_count(&self) -> usize {
        self.maps.len()
    }
}

/// Loads the profile files named by the spec, assigning dense ids in file
/// order (all of source 0, then all of source 1). Empty cells are skipped.
pub fn load_profiles(spec: &DatasetSpec) -> Result<(ProfileCollection, IdMaps), IngestError> {
    let mode = spec.mode()?;
    let mut profiles: Vec<Profile> = Vec::new();
    let mut maps: Vec<HashMap<String, ProfileId>> = Vec::new();
    for (source, path) in spec.paths.iter().enumerate() {
        let mut map = HashMap::new();
        match spec.format {
            DataFormat::Csv => {
                load_csv_source(path, source as u8, spec.id_column.as_deref(), &mut profiles, &mut map)?
            }
            DataFormat::Jsonl => {
                load_jsonl_source(path, source as u8, spec.id_column.as_deref(), &mut profiles, &mut map)?
            }
        }
        maps.push(map);
    }
    let collection = ProfileCollection::new(mode, profiles)?;
    Ok((collection, IdMaps { maps }))
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })
}

fn register_external_id(
    map: &mut HashMap<String, ProfileId>,
    external: String,
    id: ProfileId,
    path: &Path,
) -> Result<(), IngestError> {
    if map.insert(external.clone(), id).is_some() {
        return Err(IngestError::DuplicateExternalId { path: path.to_path_buf(), id: external });
    }
    Ok(())
}

fn load_csv_source(
    path: &Path,
    source: u8,
    id_column: Option<&str>,
    profiles: &mut Vec<Profile>,
    map: &mut HashMap<String, ProfileId>,
) -> Result<(), IngestError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(open(path)?);
    let headers = reader
        .headers()
        .map_err(|e| csv_parse_error(path, &e))?
        .clone();
    let id_index = match id_column {
        Some(name) => Some(headers.iter().position(|h| h == name).ok_or_else(|| {
            IngestError::BadSpec(format!("{}: id column '{name}' not found in header", path.display()))
        })?),
        None => None,
    };

    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_parse_error(path, &e))?;
        let id = profiles.len() as ProfileId;
        let external = match id_index {
            Some(idx) => record.get(idx).unwrap_or("").to_string(),
            None => row.to_string(),
        };
        register_external_id(map, external, id, path)?;
        let attributes = headers
            .iter()
            .enumerate()
            .filter(|(idx, _)| Some(*idx) != id_index)
            .filter_map(|(idx, name)| {
                record
                    .get(idx)
                    .filter(|value| !value.is_empty())
                    .map(|value| (name.to_string(), value.to_string()))
            })
            .collect();
        profiles.push(Profile::new(id, source, attributes));
    }
    Ok(())
}

fn csv_parse_error(path: &Path, error: &csv::Error) -> IngestError {
    let line = error
        .position()
        .map(csv::Position::line)
        .unwrap_or_default();
    IngestError::Parse { path: path.to_path_buf(), line, message: error.to_string() }
}

fn load_jsonl_source(
    path: &Path,
    source: u8,
    id_column: Option<&str>,
    profiles: &mut Vec<Profile>,
    map: &mut HashMap<String, ProfileId>,
) -> Result<(), IngestError> {
    let reader = BufReader::new(open(path)?);
    let mut row = 0usize;
    for (line_idx, line) in reader.lines().enumerate() {
        let line_no = line_idx as u64 + 1;
        let line = line.map_err(|source| IngestError::Io { path: path.to_path_buf(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| IngestError::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        let serde_json::Value::Object(object) = value else {
            return Err(IngestError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: "expected a JSON object".to_string(),
            });
        };

        let id = profiles.len() as ProfileId;
        let external = match id_column {
            Some(key) => match object.get(key) {
                Some(serde_json::Value::String(s)) => s.clone(),
                Some(other) => other.to_string(),
                None => {
                    return Err(IngestError::Parse {
                        path: path.to_path_buf(),
                        line: line_no,
                        message: format!("missing id key '{key}'"),
                    });
                }
            },
            None => row.to_string(),
        };
        register_external_id(map, external, id, path)?;

        // One level of flattening: scalars become strings, nested values are
        // stringified, nulls (like empty CSV cells) are skipped.
        let attributes = object
            .iter()
            .filter(|(key, _)| Some(key.as_str()) != id_column)
            .filter_map(|(key, value)| {
                let rendered = match value {
                    serde_json::Value::Null => return None,
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                Some((key.clone(), rendered))
            })
            .collect();
        profiles.push(Profile::new(id, source, attributes));
        row += 1;
    }
    Ok(())
}

/// Loads a two-column CSV of external id pairs and resolves them against the
/// loaded collection. In clean-clean mode the first column is resolved
/// against source 0 first, the second against source 1 first.
pub fn load_ground_truth(
    path: &Path,
    id_maps: &IdMaps,
    collection: &ProfileCollection,
    has_header: bool,
) -> Result<GroundTruth, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .from_reader(open(path)?);
    let mut pairs = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_parse_error(path, &e))?;
        let line = record.position().map(csv::Position::line).unwrap_or_default();
        if record.len() != 2 {
            return Err(IngestError::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected exactly two columns, got {}", record.len()),
            });
        }
        let (left, right) = (&record[0], &record[1]);
        let (i, j) = match collection.mode() {
            ErMode::Dirty => {
                let resolve = |external: &str| {
                    id_maps.resolve(0, external).ok_or_else(|| IngestError::UnknownId {
                        path: path.to_path_buf(),
                        line,
                        id: external.to_string(),
                    })
                };
                (resolve(left)?, resolve(right)?)
            }
            ErMode::CleanClean => {
                let resolve = |preferred: usize, external: &str| {
                    id_maps
                        .resolve(preferred, external)
                        .or_else(|| id_maps.resolve(1 - preferred, external))
                        .ok_or_else(|| IngestError::UnknownId {
                            path: path.to_path_buf(),
                            line,
                            id: external.to_string(),
                        })
                };
                (resolve(0, left)?, resolve(1, right)?)
            }
        };
        collection.canonicalize(i, j).map_err(|source| IngestError::Pair {
            path: path.to_path_buf(),
            line,
            source,
        })?;
        pairs.push((i, j));
    }
    GroundTruth::from_pairs(pairs, collection).map_err(IngestError::from)
}
