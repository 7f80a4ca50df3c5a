//! On-disk dataset format.
//!
//! A dataset is a directory holding:
//!
//! * `manifest.json` with keys `version` (= 1), `manifold` (`"spd"` or
//!   `"corr"`), `d`, `n`, `labels` (n integers) and `subject_ids` (n strings);
//! * `matrices.f64`, exactly `n·d·d` little-endian 64-bit floats: each matrix
//!   row-major, matrices concatenated in index order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::LabeledDataset;
use crate::geometry::{Manifold, ManifoldMatrix, SymMatrix};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MATRICES_FILE: &str = "matrices.f64";
const FORMAT_VERSION: u32 = 1;
const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    version: u32,
    manifold: Manifold,
    d: usize,
    n: usize,
    labels: Vec<i64>,
    subject_ids: Vec<String>,
}

/// A dataset as stored, before any manifold validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub manifold: Manifold,
    pub dim: usize,
    /// Row-major `d×d` entries per matrix.
    pub matrices: Vec<Vec<f64>>,
    pub labels: Vec<i64>,
    pub subject_ids: Vec<String>,
}

impl RawDataset {
    /// Validates every matrix; failures become `InvalidDataset`.
    pub fn validate(self) -> Result<LabeledDataset> {
        let d = self.dim;
        let mut matrices = Vec::with_capacity(self.matrices.len());
        for (i, entries) in self.matrices.into_iter().enumerate() {
            let scale = entries.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for r in 0..d {
                for c in 0..r {
                    if !((entries[r * d + c] - entries[c * d + r]).abs() <= SYMMETRY_TOL * scale) {
                        return Err(Error::InvalidDataset(format!("matrix {i} is not symmetric")));
                    }
                }
            }
            let sym = SymMatrix::new(d, entries).map_err(|e| Error::InvalidDataset(format!("matrix {i}: {e}")))?;
            let m = ManifoldMatrix::new(self.manifold, sym)
                .map_err(|e| Error::InvalidDataset(format!("matrix {i}: {e}")))?;
            matrices.push(m);
        }
        LabeledDataset::new(self.manifold, d, matrices, self.labels, self.subject_ids)
    }
}

pub fn write_dataset(ds: &LabeledDataset, dir: &Path) -> Result<()> {
    let raw = RawDataset {
        manifold: ds.manifold,
        dim: ds.dim,
        matrices: ds.matrices.iter().map(|m| m.as_sym().as_slice().to_vec()).collect(),
        labels: ds.labels.clone(),
        subject_ids: ds.subject_ids.clone(),
    };
    write_raw_dataset(&raw, dir)
}

/// Writes matrices without checking them, e.g. unprojected baseline output.
pub fn write_raw_dataset(ds: &RawDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = Manifest {
        version: FORMAT_VERSION,
        manifold: ds.manifold,
        d: ds.dim,
        n: ds.matrices.len(),
        labels: ds.labels.clone(),
        subject_ids: ds.subject_ids.clone(),
    };
    let path = dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json).map_err(|e| Error::io(path, e))?;

    let mut bytes = Vec::with_capacity(ds.matrices.len() * ds.dim * ds.dim * 8);
    for m in &ds.matrices {
        for v in m {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let path = dir.join(MATRICES_FILE);
    fs::write(&path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads a dataset and checks every matrix against its manifold.
pub fn read_dataset(dir: &Path) -> Result<LabeledDataset> {
    read_dataset_raw(dir)?.validate()
}

/// Reads a dataset, checking only the format.
pub fn read_dataset_raw(dir: &Path) -> Result<RawDataset> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::FormatError(format!("{}: {e}", path.display())))?;
    if manifest.version != FORMAT_VERSION {
        return Err(Error::FormatError(format!(
            "unsupported dataset version {}",
            manifest.version
        )));
    }
    if manifest.d == 0 {
        return Err(Error::FormatError("matrix dimension must be positive".into()));
    }
    if manifest.labels.len() != manifest.n || manifest.subject_ids.len() != manifest.n {
        return Err(Error::FormatError("labels or subject_ids length differs from n".into()));
    }

    let path = dir.join(MATRICES_FILE);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let per_matrix = manifest.d * manifest.d;
    let expected = manifest.n * per_matrix * 8;
    if bytes.len() != expected {
        return Err(Error::FormatError(format!(
            "{} holds {} bytes, expected {expected}",
            path.display(),
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let matrices = if per_matrix == 0 {
        Vec::new()
    } else {
        values.chunks(per_matrix).map(<[f64]>::to_vec).collect()
    };
    Ok(RawDataset {
        manifold: manifest.manifold,
        dim: manifest.d,
        matrices,
        labels: manifest.labels,
        subject_ids: manifest.subject_ids,
    })
}

/// One matrix per file, comma-separated rows.
pub fn read_matrix_csv(path: &Path, manifold: Manifold) -> Result<ManifoldMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::FormatError(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        rows.push(row);
    }
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(Error::FormatError(format!("{} is not a square matrix", path.display())));
    }
    let raw = RawDataset {
        manifold,
        dim: d,
        matrices: vec![rows.concat()],
        labels: vec![0],
        subject_ids: vec![String::new()],
    };
    let mut ds = raw.validate()?;
    Ok(ds.matrices.remove(0))
}
