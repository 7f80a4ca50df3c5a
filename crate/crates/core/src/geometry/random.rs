//! Random matrix generators for fixtures and tests.

use rand::Rng;
use rand_distr::StandardNormal;

use super::diffeo::phi_corr_inv;
use super::linalg;
use super::matrix::{CorrMatrix, EmbeddedVector, Manifold, ManifoldMatrix, SpdMatrix, SymMatrix};

/// Haar-like random orthogonal matrix (Gram–Schmidt on a Gaussian matrix), row-major.
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let mut cols: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let mut ok = true;
        for j in 0..d {
            for k in 0..j {
                let proj: f64 = cols[j].iter().zip(&cols[k]).map(|(a, b)| a * b).sum();
                let ck = cols[k].clone();
                for (a, b) in cols[j].iter_mut().zip(&ck) {
                    *a -= proj * b;
                }
            }
            let norm = linalg::frobenius(&cols[j]);
            if norm < 1e-8 {
                ok = false;
                break;
            }
            cols[j].iter_mut().for_each(|a| *a /= norm);
        }
        if ok {
            let mut q = vec![0.0; d * d];
            for (j, col) in cols.iter().enumerate() {
                for i in 0..d {
                    q[i * d + j] = col[i];
                }
            }
            return q;
        }
    }
}

pub fn random_sym<R: Rng + ?Sized>(rng: &mut R, d: usize, scale: f64) -> SymMatrix {
    let entries = (0..d * d)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    SymMatrix::new(d, entries).expect("dimension is consistent")
}

/// `Q·diag(λ)·Qᵀ` with log-uniform eigenvalues spanning a condition number of at most `max_cond`.
pub fn random_spd<R: Rng + ?Sized>(rng: &mut R, d: usize, max_cond: f64) -> SpdMatrix {
    let half = 0.5 * max_cond.max(1.0).ln();
    let center: f64 = rng.gen_range(-1.0..1.0);
    let eigenvalues: Vec<f64> = (0..d).map(|_| (center + rng.gen_range(-half..=half)).exp()).collect();
    spd_with_spectrum(rng, &eigenvalues)
}

/// Random rotation of a prescribed spectrum.
pub fn spd_with_spectrum<R: Rng + ?Sized>(rng: &mut R, eigenvalues: &[f64]) -> SpdMatrix {
    let d = eigenvalues.len();
    let q = random_orthogonal(rng, d);
    let a = linalg::spectral_apply(&q, eigenvalues, d, |x| x);
    SpdMatrix::new(SymMatrix::new(d, a).expect("dimension is consistent"))
        .expect("positive spectrum gives an SPD matrix")
}

/// Correlation matrix from Gaussian normalized-Cholesky coordinates of the given scale.
pub fn random_corr<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CorrMatrix {
    random_corr_scaled(rng, d, 0.7)
}

pub fn random_corr_scaled<R: Rng + ?Sized>(rng: &mut R, d: usize, scale: f64) -> CorrMatrix {
    let values = (0..Manifold::Corr.embed_dim(d))
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    phi_corr_inv(&EmbeddedVector::new(Manifold::Corr, d, values).expect("length matches")).expect("tag matches")
}

pub fn random_point<R: Rng + ?Sized>(rng: &mut R, manifold: Manifold, d: usize) -> ManifoldMatrix {
    match manifold {
        Manifold::Spd => random_spd(rng, d, 50.0).into(),
        Manifold::Corr => random_corr(rng, d).into(),
    }
}
