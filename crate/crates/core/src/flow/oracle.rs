//! Manifold-side evaluation of the flow-matching loss.
//!
//! For each pair the loss is computed on the manifold: the geodesic point
//! `γ(t) = φ⁻¹(z_t)`, its velocity `γ̇(t)` by central differences in `t`, the
//! manifold field `u^M = (Dφ(γ))⁻¹ u^E` obtained by solving against a
//! finite-difference Jacobian, and the squared pullback norm of `u^M − γ̇`.
//! Agreement with [`super::cfm_loss_and_grad`] is the point of the exercise.

use rayon::prelude::*;

use super::model::{Embedding, VectorFieldModel};
use super::train::CfmPair;
use crate::geometry::{diffeo_jvp, phi_inv, tangent_from_embedded, EmbeddedVector, TangentSym};
use crate::{Error, Result};

/// Step for the time derivative of the geodesic.
const TIME_STEP: f64 = 1e-5;

pub fn riemannian_loss_oracle(model: &VectorFieldModel, pairs: &[CfmPair]) -> Result<f64> {
    if model.embedding != Embedding::Diffeo {
        return Err(Error::invalid("the manifold loss needs a diffeomorphic embedding"));
    }
    if pairs.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let terms = pairs
        .par_iter()
        .map(|pair| pair_loss(model, pair))
        .collect::<Result<Vec<f64>>>()?;
    Ok(terms.iter().sum::<f64>() / pairs.len() as f64)
}

fn pair_loss(model: &VectorFieldModel, pair: &CfmPair) -> Result<f64> {
    let embed = |values: Vec<f64>| EmbeddedVector::new(model.manifold, model.dim_matrix, values);
    let z0 = embed(pair.z0.clone())?;
    let z1 = embed(pair.z1.clone())?;
    let at = |t: f64| phi_inv(&z0.scale(1.0 - t).add_scaled(&z1, t));

    let gamma = at(pair.t)?;
    let ahead = at(pair.t + TIME_STEP)?;
    let behind = at(pair.t - TIME_STEP)?;
    let gamma_dot = ahead.as_sym().sub(behind.as_sym()).scale(0.5 / TIME_STEP);
    let gamma_dot = TangentSym::new(gamma.clone(), gamma_dot)?;

    let z_t = embed(pair.point())?;
    let u_e = model.velocity_embedded(pair.t, &z_t, pair.label)?;
    let u_m = tangent_from_embedded(&gamma, &u_e)?;

    let diff = u_m.add_scaled(&gamma_dot, -1.0);
    let image = diffeo_jvp(&gamma, &diff)?;
    Ok(image.norm().powi(2))
}
