//! The two global diffeomorphisms and the closed forms they induce.
//!
//! * SPD: `φ(Σ) = veclt(log Σ)`, `φ⁻¹(z) = exp(veclt⁻¹(z))`.
//! * Correlation: `φ(C) = vecl(nchol(C))` with `nchol(C) = diag(chol C)⁻¹ · chol C`,
//!   and `φ⁻¹(z) = D^{-1/2} L Lᵀ D^{-1/2}` where `L` is the unit lower-triangular
//!   matrix built from `z` and `D = diag(L Lᵀ)`.
//!
//! Under the pullback metric, geodesics, distances and Fréchet means are the
//! Euclidean ones in embedded coordinates.

use super::linalg;
use super::matrix::{
    vecl, veclt, veclt_inv, CorrMatrix, EmbeddedVector, Manifold, ManifoldMatrix, SpdMatrix, SymMatrix,
    UnitLowerTriangular,
};
use crate::{Error, Result};

/// Default eigenvalue floor for [`project_to_spd`].
pub const DEFAULT_PROJECTION_EPS: f64 = 1e-8;

pub fn mat_log(s: &SpdMatrix) -> Result<SymMatrix> {
    let eig = s.as_sym().eig()?;
    if !eig.is_spd() {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(eig.map(f64::ln))
}

pub fn mat_exp(v: &SymMatrix) -> Result<SpdMatrix> {
    let eig = v.eig()?;
    let out = eig.map(f64::exp);
    if !out.is_finite() || !(eig.min().exp() > 0.0) {
        return Err(Error::invalid("matrix exponential overflows or underflows"));
    }
    Ok(SpdMatrix::new_unchecked(out))
}

pub fn phi_spd(s: &SpdMatrix) -> Result<EmbeddedVector> {
    let log = mat_log(s)?;
    EmbeddedVector::new(Manifold::Spd, s.dim(), veclt(&log))
}

pub fn phi_spd_inv(z: &EmbeddedVector) -> Result<SpdMatrix> {
    if z.manifold() != Manifold::Spd {
        return Err(Error::invalid("expected an spd embedding"));
    }
    mat_exp(&veclt_inv(z.values(), z.dim_matrix()))
}

/// Normalized Cholesky factor: rows of `chol(c)` divided by their diagonal entry.
pub fn nchol(c: &SymMatrix) -> Result<UnitLowerTriangular> {
    let n = c.dim();
    let mut l = linalg::cholesky(c.as_slice(), n)?;
    for i in 0..n {
        let d = l[i * n + i];
        for j in 0..=i {
            l[i * n + j] /= d;
        }
    }
    UnitLowerTriangular::new(n, vecl(&l, n))
}

pub fn nchol_inv(l: &UnitLowerTriangular) -> CorrMatrix {
    let n = l.dim();
    let full = l.to_full();
    let llt = linalg::matmul_t(&full, &full, n);
    // L has unit diagonal, so every diagonal entry of LLᵀ is ≥ 1.
    let normalized = SymMatrix::from_symmetric_unchecked(n, llt)
        .normalize_unit_diag()
        .expect("diagonal of L·Lᵀ is at least one");
    CorrMatrix::new_unchecked(normalized)
}

pub fn phi_corr(c: &CorrMatrix) -> Result<EmbeddedVector> {
    let l = nchol(c.as_sym())?;
    EmbeddedVector::new(Manifold::Corr, c.dim(), l.strict().to_vec())
}

pub fn phi_corr_inv(z: &EmbeddedVector) -> Result<CorrMatrix> {
    if z.manifold() != Manifold::Corr {
        return Err(Error::invalid("expected a corr embedding"));
    }
    let l = UnitLowerTriangular::new(z.dim_matrix(), z.values().to_vec())?;
    Ok(nchol_inv(&l))
}

/// `φ` for whichever manifold `x` lives on.
pub fn phi(x: &ManifoldMatrix) -> Result<EmbeddedVector> {
    match x {
        ManifoldMatrix::Spd(s) => phi_spd(s),
        ManifoldMatrix::Corr(c) => phi_corr(c),
    }
}

/// `φ⁻¹` for the manifold tagged on `z`.
pub fn phi_inv(z: &EmbeddedVector) -> Result<ManifoldMatrix> {
    match z.manifold() {
        Manifold::Spd => phi_spd_inv(z).map(ManifoldMatrix::Spd),
        Manifold::Corr => phi_corr_inv(z).map(ManifoldMatrix::Corr),
    }
}

/// Validates `a` for `manifold` and embeds it.
pub fn phi_sym(manifold: Manifold, a: &SymMatrix) -> Result<EmbeddedVector> {
    phi(&ManifoldMatrix::new(manifold, a.clone())?)
}

/// `φ⁻¹(z)` from raw coordinates.
pub fn phi_inv_values(manifold: Manifold, dim: usize, values: &[f64]) -> Result<ManifoldMatrix> {
    phi_inv(&EmbeddedVector::new(manifold, dim, values.to_vec())?)
}

/// Pullback geodesic `γ(t) = φ⁻¹((1−t)φ(x₀) + tφ(x₁))`.
pub fn geodesic(x0: &ManifoldMatrix, x1: &ManifoldMatrix, t: f64) -> Result<ManifoldMatrix> {
    let z0 = phi(x0)?;
    let z1 = phi(x1)?;
    check_same_space(&z0, &z1)?;
    phi_inv(&z0.scale(1.0 - t).add_scaled(&z1, t))
}

/// Pullback distance `‖φ(x₀) − φ(x₁)‖₂`.
pub fn distance(x0: &ManifoldMatrix, x1: &ManifoldMatrix) -> Result<f64> {
    let z0 = phi(x0)?;
    let z1 = phi(x1)?;
    check_same_space(&z0, &z1)?;
    Ok(z0.sub(&z1).norm())
}

fn check_same_space(a: &EmbeddedVector, b: &EmbeddedVector) -> Result<()> {
    if a.manifold() != b.manifold() || a.dim_matrix() != b.dim_matrix() {
        return Err(Error::invalid("points live on different manifolds"));
    }
    Ok(())
}

/// Closed-form Fréchet mean `φ⁻¹(mean φ(xₙ))`.
pub fn frechet_mean(points: &[ManifoldMatrix], manifold: Manifold) -> Result<ManifoldMatrix> {
    let first = points
        .first()
        .ok_or_else(|| Error::invalid("Fréchet mean of an empty set"))?;
    let d = first.dim();
    let mut acc = EmbeddedVector::zeros(manifold, d);
    for p in points {
        if p.manifold() != manifold || p.dim() != d {
            return Err(Error::invalid("points differ in manifold or dimension"));
        }
        acc = acc.add_scaled(&phi(p)?, 1.0);
    }
    phi_inv(&acc.scale(1.0 / points.len() as f64))
}

/// Shrinks `a` toward the identity so its smallest eigenvalue is at least `eps`.
///
/// If `λ_min < eps`, returns `(1−α)·a + α·I` with `α = (eps − λ_min)/(1 − λ_min)`,
/// whose smallest eigenvalue is exactly `eps`. With `preserve_unit_diag`, a unit
/// diagonal in the input is written back as exact ones.
pub fn project_to_spd(a: &SymMatrix, eps: f64, preserve_unit_diag: bool) -> Result<SpdMatrix> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(format!("projection eps must be in (0, 1], got {eps}")));
    }
    if !a.is_finite() {
        return Err(Error::invalid("non-finite matrix entry"));
    }
    let lambda_min = a.eig()?.min();
    if lambda_min >= eps {
        return Ok(SpdMatrix::new_unchecked(a.clone()));
    }
    let alpha = (eps - lambda_min) / (1.0 - lambda_min);
    let n = a.dim();
    let unit_diag = a.diag().iter().all(|&v| v == 1.0);
    let mut out = a
        .scale(1.0 - alpha)
        .add_scaled(&SymMatrix::identity(n), alpha)
        .into_vec();
    if preserve_unit_diag && unit_diag {
        for i in 0..n {
            out[i * n + i] = 1.0;
        }
    }
    Ok(SpdMatrix::new_unchecked(SymMatrix::from_symmetric_unchecked(n, out)))
}
