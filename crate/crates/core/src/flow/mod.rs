//! Class-conditional flow matching in the embedding space.
//!
//! Training embeds every target matrix once, fits a Gaussian per class to
//! the embeddings to serve as the source distribution, and regresses an MLP
//! vector field onto the straight-line velocity `z₁ − z₀` at `z_t = (1−t)z₀ + t z₁`.

mod model;
mod oracle;
mod source;
mod train;

pub use model::{load_model, save_model, Embedding, VectorFieldModel, MODEL_MANIFEST, SOURCE_FILE, WEIGHTS_FILE};
pub use oracle::riemannian_loss_oracle;
pub use source::{
    fit_source, fit_source_with_classes, sample_source, ClassGaussian, ConditionalGaussianSource, CovarianceMode,
};
pub use train::{cfm_loss_and_grad, train, train_embedded, write_loss_csv, CfmPair, TrainConfig, TrainOutput};
