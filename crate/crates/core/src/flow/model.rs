use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::source::ConditionalGaussianSource;
use crate::geometry::{EmbeddedVector, Manifold};
use crate::nn::{mlp_init, MlpParams};
use crate::{Error, Result};

pub const MODEL_MANIFEST: &str = "model.txt";
pub const WEIGHTS_FILE: &str = "weights.f64";
pub const SOURCE_FILE: &str = "source.json";
const MODEL_FORMAT_VERSION: u32 = 1;

/// How matrices map into the space the field lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Embedding {
    /// The global diffeomorphism `φ`; samples come back through `φ⁻¹`.
    #[default]
    Diffeo,
    /// Raw lower-triangular entries; samples come back through SPD projection.
    Triang,
}

impl fmt::Display for Embedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Embedding::Diffeo => "diffeo",
            Embedding::Triang => "triang",
        })
    }
}

impl FromStr for Embedding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diffeo" => Ok(Embedding::Diffeo),
            "triang" => Ok(Embedding::Triang),
            other => Err(Error::invalid(format!("unknown embedding `{other}`"))),
        }
    }
}

/// The conditional vector field `u(t, z, y)`: an MLP on `(z, t, one-hot(y))`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldModel {
    pub params: MlpParams,
    pub manifold: Manifold,
    pub dim_matrix: usize,
    /// Sorted class labels; position gives the one-hot slot.
    pub classes: Vec<i64>,
    pub embedding: Embedding,
    pub seed: u64,
}

impl VectorFieldModel {
    pub fn new(
        params: MlpParams,
        manifold: Manifold,
        dim_matrix: usize,
        classes: Vec<i64>,
        embedding: Embedding,
        seed: u64,
    ) -> Result<Self> {
        let m = manifold.embed_dim(dim_matrix);
        if classes.is_empty() {
            return Err(Error::invalid("a model needs at least one class"));
        }
        if classes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("class labels must be sorted and distinct"));
        }
        if params.in_dim() != m + 1 + classes.len() || params.out_dim() != m {
            return Err(Error::invalid(format!(
                "network shape {:?} does not fit embedding dim {m} with {} classes",
                params.dims(),
                classes.len()
            )));
        }
        Ok(VectorFieldModel {
            params,
            manifold,
            dim_matrix,
            classes,
            embedding,
            seed,
        })
    }

    /// Freshly initialized network for the given space and classes.
    pub fn init(
        manifold: Manifold,
        dim_matrix: usize,
        classes: Vec<i64>,
        hidden: &[usize],
        embedding: Embedding,
        seed: u64,
    ) -> Result<Self> {
        let m = manifold.embed_dim(dim_matrix);
        let params = mlp_init(seed, m + 1 + classes.len(), hidden, m)?;
        VectorFieldModel::new(params, manifold, dim_matrix, classes, embedding, seed)
    }

    pub fn embed_dim(&self) -> usize {
        self.manifold.embed_dim(self.dim_matrix)
    }

    pub fn class_index(&self, label: i64) -> Result<usize> {
        self.classes
            .binary_search(&label)
            .map_err(|_| Error::MissingClass(label))
    }

    /// Network input `(z, t, one-hot(y))`.
    pub fn input(&self, t: f64, z: &[f64], label: i64) -> Result<Vec<f64>> {
        let m = self.embed_dim();
        if z.len() != m {
            return Err(Error::invalid(format!("expected {m} coordinates, got {}", z.len())));
        }
        let slot = self.class_index(label)?;
        let mut x = Vec::with_capacity(m + 1 + self.classes.len());
        x.extend_from_slice(z);
        x.push(t);
        x.extend((0..self.classes.len()).map(|k| if k == slot { 1.0 } else { 0.0 }));
        Ok(x)
    }

    pub fn velocity(&self, t: f64, z: &[f64], label: i64) -> Result<Vec<f64>> {
        self.params.forward(&self.input(t, z, label)?)
    }

    pub fn velocity_embedded(&self, t: f64, z: &EmbeddedVector, label: i64) -> Result<EmbeddedVector> {
        z.with_values(self.velocity(t, z.values(), label)?)
    }

    /// Checks that `source` was fitted on the same space and classes.
    pub fn check_source(&self, source: &ConditionalGaussianSource) -> Result<()> {
        if source.manifold != self.manifold || source.dim_matrix != self.dim_matrix {
            return Err(Error::invalid("model and source live on different spaces"));
        }
        if source.labels().iter().any(|l| self.class_index(*l).is_err()) || source.classes.len() != self.classes.len() {
            return Err(Error::invalid("model and source disagree on the class set"));
        }
        Ok(())
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn parse_list<T: FromStr>(s: &str, key: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::FormatError(format!("bad entry `{v}` in `{key}`")))
        })
        .collect()
}

/// Writes `model.txt`, `weights.f64` and `source.json` into `dir`.
pub fn save_model(dir: &Path, model: &VectorFieldModel, source: &ConditionalGaussianSource) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = format!(
        "format_version = {MODEL_FORMAT_VERSION}\n\
         manifold = {}\n\
         dim_matrix = {}\n\
         embed_dim = {}\n\
         layer_dims = {}\n\
         classes = {}\n\
         activation = silu\n\
         embedding = {}\n\
         seed = {}\n",
        model.manifold,
        model.dim_matrix,
        model.embed_dim(),
        join(model.params.dims()),
        join(&model.classes),
        model.embedding,
        model.seed,
    );
    let path = dir.join(MODEL_MANIFEST);
    fs::write(&path, manifest).map_err(|e| Error::io(path, e))?;
    let path = dir.join(WEIGHTS_FILE);
    fs::write(&path, model.params.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    let path = dir.join(SOURCE_FILE);
    let json = serde_json::to_string_pretty(source).expect("source serializes");
    fs::write(&path, json).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_model(dir: &Path) -> Result<(VectorFieldModel, ConditionalGaussianSource)> {
    let path = dir.join(MODEL_MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut kv = BTreeMap::new();
    for line in text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
    {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::FormatError(format!("malformed manifest line `{line}`")))?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |k: &str| {
        kv.get(k)
            .map(String::as_str)
            .ok_or_else(|| Error::FormatError(format!("manifest lacks `{k}`")))
    };
    let version: u32 = get("format_version")?
        .parse()
        .map_err(|_| Error::FormatError("bad format_version".into()))?;
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::FormatError(format!(
            "unsupported model format version {version}"
        )));
    }
    if get("activation")? != "silu" {
        return Err(Error::FormatError("unsupported activation".into()));
    }
    let bad = |k: &str| Error::FormatError(format!("bad value for `{k}`"));
    let manifold: Manifold = get("manifold")?.parse().map_err(|_| bad("manifold"))?;
    let dim_matrix: usize = get("dim_matrix")?.parse().map_err(|_| bad("dim_matrix"))?;
    let dims: Vec<usize> = parse_list(get("layer_dims")?, "layer_dims")?;
    let classes: Vec<i64> = parse_list(get("classes")?, "classes")?;
    let embedding: Embedding = get("embedding")?.parse().map_err(|_| bad("embedding"))?;
    let seed: u64 = get("seed")?.parse().map_err(|_| bad("seed"))?;

    let path = dir.join(WEIGHTS_FILE);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let params = MlpParams::from_le_bytes(&dims, &bytes)?;
    let model = VectorFieldModel::new(params, manifold, dim_matrix, classes, embedding, seed)
        .map_err(|e| Error::FormatError(e.to_string()))?;

    let path = dir.join(SOURCE_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let source: ConditionalGaussianSource =
        serde_json::from_str(&text).map_err(|e| Error::FormatError(format!("{}: {e}", path.display())))?;
    let source = ConditionalGaussianSource::new(source.manifold, source.dim_matrix, source.classes)
        .map_err(|e| Error::FormatError(e.to_string()))?;
    model
        .check_source(&source)
        .map_err(|e| Error::FormatError(e.to_string()))?;
    Ok((model, source))
}
