use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geometry::linalg;
use crate::geometry::{EmbeddedVector, Manifold};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceMode {
    /// Full covariance when the class has at least `dim(E)+2` samples, diagonal otherwise.
    #[default]
    Full,
    Diagonal,
}

/// Gaussian fitted to one class: `N(mean, factor·factorᵀ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassGaussian {
    pub label: i64,
    pub mean: Vec<f64>,
    /// Lower-triangular `m×m` factor, row-major.
    pub factor: Vec<f64>,
    pub count: usize,
}

impl ClassGaussian {
    pub fn covariance(&self) -> Vec<f64> {
        let m = self.mean.len();
        linalg::matmul_t(&self.factor, &self.factor, m)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let m = self.mean.len();
        let noise: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let mut out = self.mean.clone();
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.factor[i * m..i * m + i + 1];
            *o += row.iter().zip(&noise).map(|(a, b)| a * b).sum::<f64>();
        }
        out
    }
}

/// Per-class Gaussian source distribution in the embedding space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalGaussianSource {
    pub manifold: Manifold,
    pub dim_matrix: usize,
    pub classes: Vec<ClassGaussian>,
}

impl ConditionalGaussianSource {
    pub fn new(manifold: Manifold, dim_matrix: usize, classes: Vec<ClassGaussian>) -> Result<Self> {
        let m = manifold.embed_dim(dim_matrix);
        for c in &classes {
            if c.mean.len() != m || c.factor.len() != m * m {
                return Err(Error::invalid(format!("class {} has the wrong shape", c.label)));
            }
        }
        let mut labels: Vec<i64> = classes.iter().map(|c| c.label).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != classes.len() {
            return Err(Error::invalid("duplicate class label in source"));
        }
        Ok(ConditionalGaussianSource {
            manifold,
            dim_matrix,
            classes,
        })
    }

    pub fn embed_dim(&self) -> usize {
        self.manifold.embed_dim(self.dim_matrix)
    }

    pub fn labels(&self) -> Vec<i64> {
        self.classes.iter().map(|c| c.label).collect()
    }

    pub fn class(&self, label: i64) -> Result<&ClassGaussian> {
        self.classes
            .iter()
            .find(|c| c.label == label)
            .ok_or(Error::MissingClass(label))
    }
}

/// Fits one Gaussian per class present in `labels`.
pub fn fit_source(
    embeddings: &[EmbeddedVector],
    labels: &[i64],
    ridge: f64,
    mode: CovarianceMode,
) -> Result<ConditionalGaussianSource> {
    let mut classes: Vec<i64> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    fit_source_with_classes(embeddings, labels, &classes, ridge, mode)
}

/// Fits one Gaussian for each entry of `classes`; a class without samples is an error.
///
/// The covariance is the empirical one (divisor `n`) plus `ridge·(tr Σ̂ / m)·I`,
/// or `ridge·I` when the trace vanishes. Classes with fewer than `m + 2`
/// samples, and every class in diagonal mode, keep only the diagonal.
pub fn fit_source_with_classes(
    embeddings: &[EmbeddedVector],
    labels: &[i64],
    classes: &[i64],
    ridge: f64,
    mode: CovarianceMode,
) -> Result<ConditionalGaussianSource> {
    let first = embeddings
        .first()
        .ok_or_else(|| Error::invalid("no embeddings to fit"))?;
    if embeddings.len() != labels.len() {
        return Err(Error::invalid("embeddings and labels differ in length"));
    }
    if !(ridge >= 0.0) {
        return Err(Error::invalid("ridge must be non-negative"));
    }
    let (manifold, dim_matrix, m) = (first.manifold(), first.dim_matrix(), first.len());
    if embeddings.iter().any(|e| e.manifold() != manifold || e.len() != m) {
        return Err(Error::invalid("embeddings differ in space"));
    }

    let mut fitted = Vec::with_capacity(classes.len());
    for &label in classes {
        let members: Vec<&[f64]> = embeddings
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == label)
            .map(|(e, _)| e.values())
            .collect();
        if members.is_empty() {
            return Err(Error::MissingClass(label));
        }
        fitted.push(fit_class(label, &members, m, ridge, mode)?);
    }
    ConditionalGaussianSource::new(manifold, dim_matrix, fitted)
}

fn fit_class(label: i64, members: &[&[f64]], m: usize, ridge: f64, mode: CovarianceMode) -> Result<ClassGaussian> {
    let n = members.len() as f64;
    let mut mean = vec![0.0; m];
    for x in members {
        for (a, b) in mean.iter_mut().zip(x.iter()) {
            *a += b / n;
        }
    }
    let mut cov = vec![0.0; m * m];
    for x in members {
        for i in 0..m {
            let di = x[i] - mean[i];
            for j in 0..=i {
                cov[i * m + j] += di * (x[j] - mean[j]) / n;
            }
        }
    }
    for i in 0..m {
        for j in 0..i {
            cov[j * m + i] = cov[i * m + j];
        }
    }
    let trace: f64 = (0..m).map(|i| cov[i * m + i]).sum();
    let shift = if trace > 0.0 { ridge * trace / m as f64 } else { ridge };

    let full = mode == CovarianceMode::Full && members.len() >= m + 2;
    let factor = if full {
        for i in 0..m {
            cov[i * m + i] += shift;
        }
        linalg::cholesky(&cov, m)?
    } else {
        let mut f = vec![0.0; m * m];
        for i in 0..m {
            f[i * m + i] = (cov[i * m + i] + shift).sqrt();
        }
        f
    };
    Ok(ClassGaussian {
        label,
        mean,
        factor,
        count: members.len(),
    })
}

/// Draws `z₀ ∼ N(μ_y, L_y L_yᵀ)`.
pub fn sample_source<R: Rng + ?Sized>(
    src: &ConditionalGaussianSource,
    label: i64,
    rng: &mut R,
) -> Result<EmbeddedVector> {
    let class = src.class(label)?;
    EmbeddedVector::new(src.manifold, src.dim_matrix, class.sample(rng))
}
