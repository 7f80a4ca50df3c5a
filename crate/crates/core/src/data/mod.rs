//! Datasets of labeled matrices: persistence, synthetic generation,
//! subject-grouped splitting and covariance estimation from time series.

mod io;
mod oas;
mod split;
mod synth;

use crate::geometry::{Manifold, ManifoldMatrix};
use crate::{Error, Result};

pub use io::{
    read_dataset, read_dataset_raw, read_matrix_csv, write_dataset, write_raw_dataset, RawDataset, MANIFEST_FILE,
    MATRICES_FILE,
};
pub use oas::{corr_from_timeseries, oas_covariance, oas_shrinkage};
pub use split::grouped_split;
pub use synth::{synth_generate, SyntheticSpec};

/// Labeled matrices on one manifold, with a subject id per matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub manifold: Manifold,
    pub dim: usize,
    pub matrices: Vec<ManifoldMatrix>,
    pub labels: Vec<i64>,
    pub subject_ids: Vec<String>,
}

impl LabeledDataset {
    pub fn new(
        manifold: Manifold,
        dim: usize,
        matrices: Vec<ManifoldMatrix>,
        labels: Vec<i64>,
        subject_ids: Vec<String>,
    ) -> Result<Self> {
        if matrices.len() != labels.len() || matrices.len() != subject_ids.len() {
            return Err(Error::InvalidDataset(
                "matrices, labels and subject ids differ in length".into(),
            ));
        }
        if let Some(i) = matrices.iter().position(|m| m.manifold() != manifold || m.dim() != dim) {
            return Err(Error::InvalidDataset(format!(
                "matrix {i} is not a {dim}x{dim} {manifold} matrix"
            )));
        }
        Ok(LabeledDataset {
            manifold,
            dim,
            matrices,
            labels,
            subject_ids,
        })
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// Sorted distinct labels.
    pub fn classes(&self) -> Vec<i64> {
        let mut c = self.labels.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    /// Subset by index, preserving order.
    pub fn select(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            manifold: self.manifold,
            dim: self.dim,
            matrices: indices.iter().map(|&i| self.matrices[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            subject_ids: indices.iter().map(|&i| self.subject_ids[i].clone()).collect(),
        }
    }

    /// Matrices carrying `label`.
    pub fn class_matrices(&self, label: i64) -> Vec<ManifoldMatrix> {
        self.matrices
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == label)
            .map(|(m, _)| m.clone())
            .collect()
    }
}
