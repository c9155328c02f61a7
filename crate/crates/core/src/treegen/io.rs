//! On-disk dataset directory:
//!
//! - `graph.edges`: `u v` per line, `#` comments.
//! - `features.f32`: 24-byte header (`"TBF1"`, version u32 LE, rows u64 LE,
//!   cols u64 LE) followed by row-major little-endian binary32 values.
//! - `meta.json`: name, generator parameters, generator version and the
//!   SHA-256 of `features.f32` (verified on read when present).
//! - `splits.json` (optional): see [`SplitSpec`].

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{Dataset, SplitSpec, TreeParams};
use crate::graph::{Graph, GraphError};

pub const FEATURES_MAGIC: &[u8; 4] = b"TBF1";
pub const FEATURES_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

pub const EDGES_FILE: &str = "graph.edges";
pub const FEATURES_FILE: &str = "features.f32";
pub const META_FILE: &str = "meta.json";
pub const SPLITS_FILE: &str = "splits.json";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic in features file")]
    BadMagic,
    #[error("unsupported features format version {0}")]
    VersionMismatch(u32),
    #[error("features checksum does not match meta.json")]
    ChecksumMismatch,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid json in {file}: {msg}")]
    Json { file: &'static str, msg: String },
    #[error("invalid graph: {0}")]
    Graph(#[from] GraphError),
}

/// Descriptive metadata carried alongside a dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator_version: Option<String>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct MetaFile {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    b: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    l: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generator_version: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    features_sha256: Option<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` to `dir/name` through a temporary file renamed on success.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), FormatError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(&target))?;
    tmp.as_file().sync_all().map_err(io_err(&target))?;
    tmp.persist(&target).map_err(|e| FormatError::Io {
        path: target.clone(),
        source: e.error,
    })?;
    Ok(())
}

pub fn encode_features(x: &Array2<f32>) -> Vec<u8> {
    let (rows, cols) = x.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + rows * cols * 4);
    out.extend_from_slice(FEATURES_MAGIC);
    out.extend_from_slice(&FEATURES_VERSION.to_le_bytes());
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    for v in x.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_features(bytes: &[u8]) -> Result<Array2<f32>, FormatError> {
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::ShapeMismatch(format!("features file is {} bytes, shorter than the header", bytes.len())));
    }
    if &bytes[0..4] != FEATURES_MAGIC {
        return Err(FormatError::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != FEATURES_VERSION {
        return Err(FormatError::VersionMismatch(version));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let cols = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes"));
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(4))
        .and_then(|c| c.checked_add(HEADER_LEN as u64));
    if expected != Some(bytes.len() as u64) {
        return Err(FormatError::ShapeMismatch(format!(
            "header declares {rows}x{cols} but the file holds {} bytes",
            bytes.len()
        )));
    }
    let values: Vec<f32> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Array2::from_shape_vec((rows as usize, cols as usize), values).map_err(|e| FormatError::ShapeMismatch(e.to_string()))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_dataset(ds: &Dataset, dir: &Path) -> Result<(), FormatError> {
    let features = encode_features(&ds.features);
    let mut meta = MetaFile {
        name: ds.meta.name.clone(),
        generator_version: ds.meta.generator_version.clone(),
        features_sha256: Some(sha256_hex(&features)),
        ..MetaFile::default()
    };
    if let Some(p) = ds.params {
        meta.b = Some(p.b);
        meta.l = Some(p.levels);
        meta.gamma = Some(p.gamma);
        meta.delta = Some(p.delta);
        meta.dim = Some(p.dim);
        meta.seed = Some(p.seed);
    }
    let mut meta_json = serde_json::to_string_pretty(&meta).expect("meta serialises");
    meta_json.push('\n');
    write_atomic(dir, EDGES_FILE, ds.graph.to_edge_list().as_bytes())?;
    write_atomic(dir, FEATURES_FILE, &features)?;
    write_atomic(dir, META_FILE, meta_json.as_bytes())
}

pub fn read_dataset(dir: &Path) -> Result<Dataset, FormatError> {
    let edges_path = dir.join(EDGES_FILE);
    let text = fs::read_to_string(&edges_path).map_err(io_err(&edges_path))?;
    let graph = Graph::parse_edge_list(&text)?;

    let feat_path = dir.join(FEATURES_FILE);
    let bytes = fs::read(&feat_path).map_err(io_err(&feat_path))?;
    let features = decode_features(&bytes)?;

    let meta_path = dir.join(META_FILE);
    let meta: MetaFile = match fs::read_to_string(&meta_path) {
        Ok(s) => serde_json::from_str(&s).map_err(|e| FormatError::Json {
            file: META_FILE,
            msg: e.to_string(),
        })?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => MetaFile {
            name: dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            ..MetaFile::default()
        },
        Err(e) => return Err(io_err(&meta_path)(e)),
    };
    if let Some(expected) = &meta.features_sha256 {
        if *expected != sha256_hex(&bytes) {
            return Err(FormatError::ChecksumMismatch);
        }
    }
    if features.nrows() != graph.num_nodes() {
        return Err(FormatError::ShapeMismatch(format!(
            "{} feature rows for {} nodes",
            features.nrows(),
            graph.num_nodes()
        )));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(FormatError::ShapeMismatch("non-finite feature value".into()));
    }
    let params = match (meta.b, meta.l, meta.gamma, meta.delta, meta.dim, meta.seed) {
        (Some(b), Some(levels), Some(gamma), Some(delta), Some(dim), Some(seed)) => {
            if dim != features.ncols() {
                return Err(FormatError::ShapeMismatch(format!(
                    "meta.json dim {dim} but features have {} columns",
                    features.ncols()
                )));
            }
            Some(TreeParams {
                b,
                levels,
                gamma,
                delta,
                dim,
                seed,
            })
        }
        _ => None,
    };
    Ok(Dataset {
        graph,
        features,
        params,
        meta: super::DatasetMeta {
            name: meta.name,
            generator_version: meta.generator_version,
        },
    })
}

pub fn write_splits(dir: &Path, splits: &SplitSpec) -> Result<(), FormatError> {
    let mut json = serde_json::to_string(splits).expect("splits serialise");
    json.push('\n');
    write_atomic(dir, SPLITS_FILE, json.as_bytes())
}

/// `Ok(None)` when the directory has no `splits.json`.
pub fn read_splits(dir: &Path) -> Result<Option<SplitSpec>, FormatError> {
    let path = dir.join(SPLITS_FILE);
    match fs::read_to_string(&path) {
        Ok(s) => serde_json::from_str(&s).map(Some).map_err(|e| FormatError::Json {
            file: SPLITS_FILE,
            msg: e.to_string(),
        }),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(io_err(&path)(e)),
    }
}
