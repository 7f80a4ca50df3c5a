//! Symmetric-matrix geometry: eigendecomposition, the SPD and correlation
//! diffeomorphisms, Fréchet means, SPD projection and pullback oracles.

mod diffeo;
pub mod linalg;
mod matrix;
pub mod pullback;
pub mod random;

pub use diffeo::{
    distance, frechet_mean, geodesic, mat_exp, mat_log, nchol, nchol_inv, phi, phi_corr, phi_corr_inv, phi_inv,
    phi_inv_values, phi_spd, phi_spd_inv, phi_sym, project_to_spd, DEFAULT_PROJECTION_EPS,
};
pub use matrix::{
    sym_eig, vecl, vecl_inv_sym, veclt, veclt_inv, CorrMatrix, EmbeddedVector, Manifold, ManifoldMatrix, SpdMatrix,
    SymEig, SymMatrix, TangentSym, UnitLowerTriangular, SPD_REL_FLOOR, UNIT_DIAG_TOL,
};
pub use pullback::{
    diffeo_jvp, pullback_exp, pullback_log, pullback_log_tangent, pullback_norm, pullback_pt, pullback_pt_tangent,
    tangent_from_embedded,
};
