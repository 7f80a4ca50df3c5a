use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::{Embedding, VectorFieldModel};
use super::source::{fit_source, ConditionalGaussianSource, CovarianceMode};
use crate::data::LabeledDataset;
use crate::geometry::{phi, EmbeddedVector, Manifold};
use crate::nn::{adamw_step, AdamWConfig, AdamWState, DEFAULT_HIDDEN};
use crate::rng;
use crate::{Error, Result};

/// Training hyperparameters. Every key is optional in the JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Expected manifold of the data; checked when present.
    pub manifold: Option<Manifold>,
    pub hidden_dims: Vec<usize>,
    pub lr: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub source_ridge: f64,
    pub covariance_mode: CovarianceMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            manifold: None,
            hidden_dims: vec![DEFAULT_HIDDEN],
            lr: 1e-3,
            weight_decay: 0.01,
            batch_size: 64,
            epochs: 200,
            seed: 0,
            source_ridge: 1e-6,
            covariance_mode: CovarianceMode::Full,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::invalid("epochs and batch_size must be positive"));
        }
        if !(self.lr > 0.0) || !(self.weight_decay >= 0.0) || !(self.source_ridge >= 0.0) {
            return Err(Error::invalid(
                "lr must be positive; weight_decay and source_ridge non-negative",
            ));
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::invalid("hidden widths must be positive"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: TrainConfig = serde_json::from_str(text).map_err(|e| Error::FormatError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One regression target: the straight path from `z0` to `z1`, evaluated at `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CfmPair {
    pub z0: Vec<f64>,
    pub z1: Vec<f64>,
    pub label: i64,
    pub t: f64,
}

impl CfmPair {
    pub fn point(&self) -> Vec<f64> {
        self.z0
            .iter()
            .zip(&self.z1)
            .map(|(a, b)| (1.0 - self.t) * a + self.t * b)
            .collect()
    }

    pub fn target(&self) -> Vec<f64> {
        self.z0.iter().zip(&self.z1).map(|(a, b)| b - a).collect()
    }
}

/// Batch mean of `‖u(t, z_t, y) − (z₁ − z₀)‖²` and its parameter gradient.
pub fn cfm_loss_and_grad(model: &VectorFieldModel, pairs: &[CfmPair]) -> Result<(f64, Vec<f64>)> {
    if pairs.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let scale = 1.0 / pairs.len() as f64;
    let mut grads = vec![0.0; model.params.num_params()];
    let mut loss = 0.0;
    for pair in pairs {
        let input = model.input(pair.t, &pair.point(), pair.label)?;
        let target = pair.target();
        let (_, sq) = model.params.forward_backward(&input, &mut grads, |out| {
            let resid: Vec<f64> = out.iter().zip(&target).map(|(u, v)| u - v).collect();
            let sq: f64 = resid.iter().map(|r| r * r).sum();
            (resid.iter().map(|r| 2.0 * r * scale).collect(), sq)
        })?;
        loss += sq * scale;
    }
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    Ok((loss, grads))
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: VectorFieldModel,
    pub source: ConditionalGaussianSource,
    /// Mean batch loss per epoch.
    pub history: Vec<f64>,
}

/// Embeds the dataset with `φ` and trains a conditional field on it.
pub fn train(data: &LabeledDataset, cfg: &TrainConfig) -> Result<TrainOutput> {
    cfg.validate()?;
    if let Some(m) = cfg.manifold {
        if m != data.manifold {
            return Err(Error::invalid(format!(
                "config expects {m} data, dataset holds {}",
                data.manifold
            )));
        }
    }
    let embeddings = data.matrices.iter().map(phi).collect::<Result<Vec<_>>>()?;
    train_embedded(&embeddings, &data.labels, Embedding::Diffeo, cfg)
}

/// Training loop on pre-computed embeddings.
///
/// Each epoch visits the targets in a seeded shuffle, in `⌈n/batch⌉` batches.
/// Every pair draws its own `z₀` from the class-conditional source and its
/// own `t ∼ U[0,1)`.
pub fn train_embedded(
    embeddings: &[EmbeddedVector],
    labels: &[i64],
    embedding: Embedding,
    cfg: &TrainConfig,
) -> Result<TrainOutput> {
    cfg.validate()?;
    let first = embeddings.first().ok_or_else(|| Error::invalid("empty training set"))?;
    let (manifold, dim_matrix) = (first.manifold(), first.dim_matrix());
    let source = fit_source(embeddings, labels, cfg.source_ridge, cfg.covariance_mode)?;
    let mut model = VectorFieldModel::init(
        manifold,
        dim_matrix,
        source.labels(),
        &cfg.hidden_dims,
        embedding,
        cfg.seed,
    )?;
    let mut opt = AdamWState::new(
        &model.params,
        AdamWConfig {
            lr: cfg.lr,
            weight_decay: cfg.weight_decay,
            ..AdamWConfig::default()
        },
    );

    let mut rng = rng::stream(cfg.seed, rng::STREAM_TRAIN);
    let mut order: Vec<usize> = (0..embeddings.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let mut pairs = Vec::with_capacity(chunk.len());
            for &i in chunk {
                let label = labels[i];
                let z0 = source.class(label)?.sample(&mut rng);
                let t: f64 = rng.gen();
                pairs.push(CfmPair {
                    z0,
                    z1: embeddings[i].values().to_vec(),
                    label,
                    t,
                });
            }
            let (loss, grads) = cfm_loss_and_grad(&model, &pairs)?;
            adamw_step(&mut model.params, &grads, &mut opt)?;
            epoch_loss += loss;
            batches += 1;
        }
        history.push(epoch_loss / batches as f64);
    }
    Ok(TrainOutput { model, source, history })
}

/// Loss history as `epoch,mean_loss` CSV, epochs numbered from 1.
pub fn write_loss_csv(path: &Path, history: &[f64]) -> Result<()> {
    let mut out = String::from("epoch,mean_loss\n");
    for (i, l) in history.iter().enumerate() {
        writeln!(out, "{},{}", i + 1, l).expect("writing to a String");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
