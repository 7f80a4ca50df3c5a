//! Comparison generators: the wrapped Gaussian (sample the fitted source and
//! map through `φ⁻¹`) and TriangCFM (flow matching on raw lower-triangular
//! entries, repaired by SPD projection).

use rayon::prelude::*;

use crate::data::LabeledDataset;
use crate::flow::{train_embedded, ConditionalGaussianSource, Embedding, TrainConfig, TrainOutput, VectorFieldModel};
use crate::geometry::{
    phi_inv, project_to_spd, vecl, vecl_inv_sym, veclt, veclt_inv, CorrMatrix, EmbeddedVector, Manifold,
    ManifoldMatrix, SymMatrix,
};
use crate::rng;
use crate::sampler::{sample_embedded, IntegratorSpec};
use crate::{Error, Result};

/// Wrapped-Gaussian samples: `z ∼ N(μ_y, Σ_y)` pushed through `φ⁻¹`.
pub fn diffeo_gauss_sample(
    source: &ConditionalGaussianSource,
    label: i64,
    n: usize,
    seed: u64,
) -> Result<Vec<ManifoldMatrix>> {
    diffeo_gauss_sample_labels(source, &vec![label; n], seed)
}

/// One wrapped-Gaussian sample per entry of `labels`, sample `i` on RNG stream `i`.
pub fn diffeo_gauss_sample_labels(
    source: &ConditionalGaussianSource,
    labels: &[i64],
    seed: u64,
) -> Result<Vec<ManifoldMatrix>> {
    labels
        .par_iter()
        .enumerate()
        .map(|(i, &label)| {
            let class = source.class(label)?;
            let z = class.sample(&mut rng::sample_stream(seed, i));
            phi_inv(&EmbeddedVector::new(source.manifold, source.dim_matrix, z)?)
        })
        .collect()
}

/// Raw triangular coordinates: `√2`-scaled lower triangle for SPD, strict
/// lower triangle for correlation matrices. No logarithm, no Cholesky.
pub fn triang_embed(m: &ManifoldMatrix) -> Vec<f64> {
    match m.manifold() {
        Manifold::Spd => veclt(m.as_sym()),
        Manifold::Corr => vecl(m.as_sym().as_slice(), m.dim()),
    }
}

/// Symmetric matrix encoded by triangular coordinates, unit diagonal
/// inserted for correlation. Not necessarily positive definite.
pub fn triang_restore_raw(v: &[f64], manifold: Manifold, dim: usize) -> Result<SymMatrix> {
    let m = manifold.embed_dim(dim);
    if v.len() != m {
        return Err(Error::invalid(format!(
            "expected {m} triangular coordinates, got {}",
            v.len()
        )));
    }
    Ok(match manifold {
        Manifold::Spd => veclt_inv(v, dim),
        Manifold::Corr => vecl_inv_sym(v, dim).add_scaled(&SymMatrix::identity(dim), 1.0),
    })
}

/// [`triang_restore_raw`] followed by projection to `λ_min ≥ eps`.
///
/// Correlation matrices keep their exact unit diagonal.
pub fn triang_restore(v: &[f64], manifold: Manifold, dim: usize, eps: f64) -> Result<ManifoldMatrix> {
    let raw = triang_restore_raw(v, manifold, dim)?;
    let spd = project_to_spd(&raw, eps, manifold == Manifold::Corr)?;
    Ok(match manifold {
        Manifold::Spd => ManifoldMatrix::Spd(spd),
        Manifold::Corr => ManifoldMatrix::Corr(CorrMatrix::new(spd)?),
    })
}

/// Trains a conditional flow on triangular coordinates.
pub fn triang_cfm_train(data: &LabeledDataset, cfg: &TrainConfig) -> Result<TrainOutput> {
    if let Some(m) = cfg.manifold {
        if m != data.manifold {
            return Err(Error::invalid(format!(
                "config expects {m} data, dataset holds {}",
                data.manifold
            )));
        }
    }
    let embeddings = data
        .matrices
        .iter()
        .map(|m| EmbeddedVector::new(data.manifold, data.dim, triang_embed(m)))
        .collect::<Result<Vec<_>>>()?;
    train_embedded(&embeddings, &data.labels, Embedding::Triang, cfg)
}

fn check_triang(model: &VectorFieldModel) -> Result<()> {
    if model.embedding != Embedding::Triang {
        return Err(Error::invalid("model was not trained on triangular coordinates"));
    }
    Ok(())
}

/// Integrated TriangCFM outputs restored without projection.
pub fn triang_cfm_sample_raw(
    model: &VectorFieldModel,
    source: &ConditionalGaussianSource,
    labels: &[i64],
    spec: IntegratorSpec,
    seed: u64,
) -> Result<Vec<SymMatrix>> {
    check_triang(model)?;
    sample_embedded(model, source, labels, spec, seed)?
        .iter()
        .map(|z| triang_restore_raw(z.values(), model.manifold, model.dim_matrix))
        .collect()
}

/// TriangCFM samples repaired by SPD projection with floor `eps`.
pub fn triang_cfm_sample(
    model: &VectorFieldModel,
    source: &ConditionalGaussianSource,
    labels: &[i64],
    spec: IntegratorSpec,
    seed: u64,
    eps: f64,
) -> Result<Vec<ManifoldMatrix>> {
    check_triang(model)?;
    sample_embedded(model, source, labels, spec, seed)?
        .par_iter()
        .map(|z| triang_restore(z.values(), model.manifold, model.dim_matrix, eps))
        .collect()
}
