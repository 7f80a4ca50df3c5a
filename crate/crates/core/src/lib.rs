#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Conditional flow matching for SPD and correlation matrices.
//!
//! Matrices are mapped through a global diffeomorphism into a flat vector
//! space (matrix logarithm for SPD matrices, normalized Cholesky factor for
//! full-rank correlation matrices). Training, sampling and evaluation all
//! happen in that space; the inverse map brings samples back, so every
//! generated matrix satisfies the manifold constraints by construction.
//!
//! Module map:
//!
//! - [`geometry`]: symmetric linear algebra, the two diffeomorphisms,
//!   Fréchet means, SPD projection and pullback-geometry oracles.
//! - [`nn`]: a small MLP with reverse-mode gradients and AdamW.
//! - [`flow`]: class-conditional Gaussian sources and the CFM training loop.
//! - [`sampler`]: fixed-step Runge–Kutta integration and the manifold-side
//!   Runge–Kutta oracle.
//! - [`baselines`]: wrapped-Gaussian sampling and the triangular-embedding CFM.
//! - [`metrics`]: α-precision / β-recall, classification accuracy score,
//!   constraint reports.
//! - [`data`]: dataset persistence, synthetic data, grouped splits, OAS.
//! - [`cli`]: the `diffeoflow` command-line tool.

pub mod baselines;
pub mod cli;
pub mod data;
mod error;
pub mod flow;
pub mod geometry;
pub mod metrics;
pub mod nn;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
pub use geometry::{CorrMatrix, EmbeddedVector, Manifold, ManifoldMatrix, SpdMatrix, SymMatrix, TangentSym};
