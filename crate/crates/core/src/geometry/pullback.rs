//! Pullback-geometry oracles.
//!
//! These routines compute the differential `Dφ(x)` by central finite
//! differences and assemble the exponential map, logarithm and parallel
//! transport of the pullback metric from it. They are oracle-grade: used to
//! check that the flat-space training and sampling procedures agree with
//! their manifold-side counterparts, never on a hot path.
//!
//! Tangent coordinates: a tangent `Ξ` at an SPD point has coordinates
//! `veclt(Ξ)`; at a correlation point, `vecl(Ξ)` (zero diagonal). At the
//! identity, `Dφ_SPD` is the identity in these coordinates.

use super::diffeo::{phi, phi_inv};
use super::linalg;
use super::matrix::{
    vecl, vecl_inv_sym, veclt, veclt_inv, CorrMatrix, EmbeddedVector, Manifold, ManifoldMatrix, SpdMatrix, SymMatrix,
    TangentSym,
};
use crate::{Error, Result};

/// Relative step for the central differences in [`diffeo_jvp`].
pub const JVP_REL_STEP: f64 = 1e-5;

/// Moves from `x` along `t·ξ` and lands back on the manifold.
///
/// SPD points use `x + tξ`. Correlation points use `x + tξ` followed by an
/// exact unit-diagonal renormalization.
pub fn retract(x: &ManifoldMatrix, xi: &SymMatrix, t: f64) -> Result<ManifoldMatrix> {
    let moved = x.as_sym().add_scaled(xi, t);
    match x.manifold() {
        Manifold::Spd => Ok(ManifoldMatrix::Spd(SpdMatrix::new(moved)?)),
        Manifold::Corr => {
            let normalized = moved.normalize_unit_diag()?;
            Ok(ManifoldMatrix::Corr(CorrMatrix::from_sym(normalized)?))
        }
    }
}

/// Directional derivative `Dφ(x)[ξ]` by central finite differences.
///
/// Step `h = 1e-5·(1+‖x‖_F)/(1+‖ξ‖_F)`; if either probe leaves the manifold,
/// the step is shrunk tenfold once before giving up with `StepFailure`.
pub fn diffeo_jvp(x: &ManifoldMatrix, xi: &TangentSym) -> Result<EmbeddedVector> {
    if xi.at().manifold() != x.manifold() || xi.value().dim() != x.dim() {
        return Err(Error::invalid("tangent is not based at the given point"));
    }
    jvp_sym(x, xi.value())
}

fn jvp_sym(x: &ManifoldMatrix, xi: &SymMatrix) -> Result<EmbeddedVector> {
    let xi_norm = xi.frobenius();
    if xi_norm == 0.0 {
        return Ok(EmbeddedVector::zeros(x.manifold(), x.dim()));
    }
    let mut h = JVP_REL_STEP * (1.0 + x.as_sym().frobenius()) / (1.0 + xi_norm);
    for _ in 0..2 {
        let probes = retract(x, xi, h)
            .and_then(|p| phi(&p))
            .and_then(|fp| Ok((fp, phi(&retract(x, xi, -h)?)?)));
        match probes {
            Ok((plus, minus)) => return Ok(plus.sub(&minus).scale(0.5 / h)),
            Err(Error::NotPositiveDefinite | Error::NotCorrelation(_)) => h /= 10.0,
            Err(e) => return Err(e),
        }
    }
    Err(Error::StepFailure)
}

/// Tangent coordinates of `ξ` (see module docs).
pub fn tangent_coords(manifold: Manifold, xi: &SymMatrix) -> Vec<f64> {
    match manifold {
        Manifold::Spd => veclt(xi),
        Manifold::Corr => vecl(xi.as_slice(), xi.dim()),
    }
}

/// Inverse of [`tangent_coords`].
pub fn tangent_from_coords(manifold: Manifold, dim: usize, coords: &[f64]) -> SymMatrix {
    match manifold {
        Manifold::Spd => veclt_inv(coords, dim),
        Manifold::Corr => vecl_inv_sym(coords, dim),
    }
}

/// Matrix of `Dφ(x)` in tangent coordinates, row-major `m×m` with `m = dim(E)`.
pub fn jacobian(x: &ManifoldMatrix) -> Result<Vec<f64>> {
    let manifold = x.manifold();
    let d = x.dim();
    let m = manifold.embed_dim(d);
    let mut jac = vec![0.0; m * m];
    let mut unit = vec![0.0; m];
    for k in 0..m {
        unit.iter_mut().for_each(|u| *u = 0.0);
        unit[k] = 1.0;
        let basis = tangent_from_coords(manifold, d, &unit);
        let col = jvp_sym(x, &basis)?;
        for (row, v) in col.values().iter().enumerate() {
            jac[row * m + k] = *v;
        }
    }
    Ok(jac)
}

/// `(Dφ(x))⁻¹[v]`: the tangent at `x` whose image under `Dφ(x)` is `v`.
pub fn tangent_from_embedded(x: &ManifoldMatrix, v: &EmbeddedVector) -> Result<TangentSym> {
    let manifold = x.manifold();
    let d = x.dim();
    let m = manifold.embed_dim(d);
    if v.manifold() != manifold || v.len() != m {
        return Err(Error::invalid("embedded vector does not match base point"));
    }
    let coords = linalg::solve(&jacobian(x)?, v.values(), m)?;
    TangentSym::new(x.clone(), tangent_from_coords(manifold, d, &coords))
}

/// Pullback norm `‖ξ‖_x = ‖Dφ(x)[ξ]‖₂`.
pub fn pullback_norm(x: &ManifoldMatrix, xi: &TangentSym) -> Result<f64> {
    Ok(diffeo_jvp(x, xi)?.norm())
}

/// `exp_x(ξ) = φ⁻¹(φ(x) + Dφ(x)[ξ])`.
pub fn pullback_exp(x: &ManifoldMatrix, xi: &TangentSym) -> Result<ManifoldMatrix> {
    let z = phi(x)?;
    let dz = diffeo_jvp(x, xi)?;
    phi_inv(&z.add_scaled(&dz, 1.0))
}

/// `Dφ(x)[log_x(y)] = φ(y) − φ(x)`, exact in embedded coordinates.
pub fn pullback_log(x: &ManifoldMatrix, y: &ManifoldMatrix) -> Result<EmbeddedVector> {
    let zx = phi(x)?;
    let zy = phi(y)?;
    if zx.len() != zy.len() || zx.manifold() != zy.manifold() {
        return Err(Error::invalid("points live on different manifolds"));
    }
    Ok(zy.sub(&zx))
}

/// `log_x(y)` as a tangent at `x`.
pub fn pullback_log_tangent(x: &ManifoldMatrix, y: &ManifoldMatrix) -> Result<TangentSym> {
    tangent_from_embedded(x, &pullback_log(x, y)?)
}

/// `Dφ(y)[PT_{x→y}(ξ)] = Dφ(x)[ξ]`: transport is the identity in embedded coordinates.
pub fn pullback_pt(x: &ManifoldMatrix, y: &ManifoldMatrix, xi: &TangentSym) -> Result<EmbeddedVector> {
    if x.manifold() != y.manifold() || x.dim() != y.dim() {
        return Err(Error::invalid("points live on different manifolds"));
    }
    diffeo_jvp(x, xi)
}

/// `PT_{x→y}(ξ) = (Dφ(y))⁻¹ Dφ(x)[ξ]` as a tangent at `y`.
pub fn pullback_pt_tangent(x: &ManifoldMatrix, y: &ManifoldMatrix, xi: &TangentSym) -> Result<TangentSym> {
    tangent_from_embedded(y, &pullback_pt(x, y, xi)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::diffeo::{mat_exp, phi_spd};
    use crate::geometry::random::{random_corr, random_spd, random_sym};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        diff / linalg::frobenius(b).max(1e-300)
    }

    fn sym_tangent(x: &ManifoldMatrix, v: SymMatrix) -> TangentSym {
        TangentSym::new(x.clone(), v).unwrap()
    }

    fn corr_tangent<R: rand::Rng>(rng: &mut R, x: &ManifoldMatrix) -> TangentSym {
        let d = x.dim();
        let coords: Vec<f64> = (0..Manifold::Corr.embed_dim(d))
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        sym_tangent(x, vecl_inv_sym(&coords, d))
    }

    /// Daleckii–Krein: `Dlog(S)[Ξ] = V (Γ ∘ (VᵀΞV)) Vᵀ` with divided differences of `log`.
    fn dlog_closed_form(s: &SpdMatrix, xi: &SymMatrix) -> SymMatrix {
        let eig = s.as_sym().eig().unwrap();
        let n = s.dim();
        let v = &eig.basis;
        let vt = linalg::transpose(v, n);
        let mut inner = linalg::matmul(&linalg::matmul(&vt, xi.as_slice(), n), v, n);
        for i in 0..n {
            for j in 0..n {
                let (li, lj) = (eig.eigenvalues[i], eig.eigenvalues[j]);
                let g = if (li - lj).abs() < 1e-12 * li.max(lj) {
                    1.0 / li
                } else {
                    (li.ln() - lj.ln()) / (li - lj)
                };
                inner[i * n + j] *= g;
            }
        }
        SymMatrix::new(n, linalg::matmul(&linalg::matmul(v, &inner, n), &vt, n)).unwrap()
    }

    #[test]
    fn jvp_at_identity_is_veclt() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = ManifoldMatrix::identity(Manifold::Spd, 3);
        let xi = random_sym(&mut rng, 3, 1.0);
        let jvp = diffeo_jvp(&x, &sym_tangent(&x, xi.clone())).unwrap();
        assert!(rel_err(jvp.values(), &veclt(&xi)) < 1e-8);
    }

    #[test]
    fn jvp_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for manifold in [Manifold::Spd, Manifold::Corr] {
            let x = crate::geometry::random::random_point(&mut rng, manifold, 3);
            let xi = match manifold {
                Manifold::Spd => sym_tangent(&x, random_sym(&mut rng, 3, 1.0)),
                Manifold::Corr => corr_tangent(&mut rng, &x),
            };
            let one = diffeo_jvp(&x, &xi).unwrap();
            let two = diffeo_jvp(&x, &xi.scale(2.0)).unwrap();
            assert!(rel_err(two.values(), one.scale(2.0).values()) < 1e-4);
        }
    }

    #[test]
    fn jvp_matches_daleckii_krein() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let s = random_spd(&mut rng, 3, 20.0);
            let xi = random_sym(&mut rng, 3, 1.0);
            let x = ManifoldMatrix::Spd(s.clone());
            let fd = diffeo_jvp(&x, &sym_tangent(&x, xi.clone())).unwrap();
            let exact = veclt(&dlog_closed_form(&s, &xi));
            assert!(rel_err(fd.values(), &exact) < 1e-5);
        }
    }

    #[test]
    fn jvp_rejects_foreign_tangent() {
        let x = ManifoldMatrix::identity(Manifold::Spd, 3);
        let other = ManifoldMatrix::identity(Manifold::Spd, 2);
        let xi = TangentSym::zero(other);
        assert!(diffeo_jvp(&x, &xi).is_err());
    }

    #[test]
    fn jvp_step_failure_near_boundary() {
        // λ_min = 1e-300 sits far below the step, so both probes leave the cone.
        let x = ManifoldMatrix::Spd(SpdMatrix::new_unchecked(SymMatrix::from_diag(&[1.0, 1e-300])));
        let xi = sym_tangent(&x, SymMatrix::from_diag(&[0.0, 1.0]));
        assert!(matches!(diffeo_jvp(&x, &xi), Err(Error::StepFailure)));
    }

    #[test]
    fn exp_of_zero_is_identity_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for manifold in [Manifold::Spd, Manifold::Corr] {
            let x = crate::geometry::random::random_point(&mut rng, manifold, 3);
            let y = pullback_exp(&x, &TangentSym::zero(x.clone())).unwrap();
            assert!(y.as_sym().dist_frobenius(x.as_sym()) < 1e-12);
        }
    }

    #[test]
    fn exp_at_identity_is_matrix_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = ManifoldMatrix::identity(Manifold::Spd, 3);
        let xi = random_sym(&mut rng, 3, 0.5);
        let y = pullback_exp(&x, &sym_tangent(&x, xi.clone())).unwrap();
        let expected = mat_exp(&xi).unwrap();
        assert!(y.as_sym().dist_frobenius(expected.as_sym()) < 1e-8);
    }

    #[test]
    fn exp_log_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x: ManifoldMatrix = random_spd(&mut rng, 3, 10.0).into();
        let xi = sym_tangent(&x, random_sym(&mut rng, 3, 0.3));
        let y = pullback_exp(&x, &xi).unwrap();
        let back = pullback_log_tangent(&x, &y).unwrap();
        assert!(back.value().dist_frobenius(xi.value()) < 1e-5 * (1.0 + xi.value().frobenius()));

        let x: ManifoldMatrix = random_corr(&mut rng, 3).into();
        let xi = corr_tangent(&mut rng, &x).scale(0.2);
        let y = pullback_exp(&x, &xi).unwrap();
        let back = pullback_log_tangent(&x, &y).unwrap();
        assert!(back.value().dist_frobenius(xi.value()) < 1e-5 * (1.0 + xi.value().frobenius()));
    }

    #[test]
    fn log_is_embedded_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_spd(&mut rng, 3, 10.0);
        let b = random_spd(&mut rng, 3, 10.0);
        let log = pullback_log(&a.clone().into(), &b.clone().into()).unwrap();
        let expected = phi_spd(&b).unwrap().sub(&phi_spd(&a).unwrap());
        assert_eq!(log, expected);
    }

    #[test]
    fn transport_there_and_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for manifold in [Manifold::Spd, Manifold::Corr] {
            let x = crate::geometry::random::random_point(&mut rng, manifold, 3);
            let y = crate::geometry::random::random_point(&mut rng, manifold, 3);
            let xi = match manifold {
                Manifold::Spd => sym_tangent(&x, random_sym(&mut rng, 3, 1.0)),
                Manifold::Corr => corr_tangent(&mut rng, &x),
            };
            // Embedded coordinates: the round trip reproduces Dφ(x)[ξ] exactly.
            let there = pullback_pt_tangent(&x, &y, &xi).unwrap();
            let embedded_there = pullback_pt(&x, &y, &xi).unwrap();
            let embedded_back = diffeo_jvp(&y, &there).unwrap();
            assert!(rel_err(embedded_back.values(), embedded_there.values()) < 1e-7);
            let back = pullback_pt_tangent(&y, &x, &there).unwrap();
            assert!(back.value().dist_frobenius(xi.value()) < 1e-6 * (1.0 + xi.value().frobenius()));
        }
    }

    #[test]
    fn tangent_solve_inverts_jvp() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: ManifoldMatrix = random_corr(&mut rng, 4).into();
        let xi = corr_tangent(&mut rng, &x);
        let v = diffeo_jvp(&x, &xi).unwrap();
        let back = tangent_from_embedded(&x, &v).unwrap();
        assert!(back.value().dist_frobenius(xi.value()) < 1e-7);
        assert!((pullback_norm(&x, &xi).unwrap() - v.norm()).abs() < 1e-12);
    }
}
