use serde::{Deserialize, Serialize};

use crate::geometry::{sym_eig, Manifold, ManifoldMatrix, SymMatrix};

/// Tolerance for the symmetry and unit-diagonal checks.
pub const CONSTRAINT_TOL: f64 = 1e-8;

/// Fractions of candidate matrices meeting each manifold constraint.
///
/// Unit diagonal is only a constraint for correlation matrices; for SPD data
/// it is reported as 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub n: usize,
    pub frac_symmetric: f64,
    pub frac_pd: f64,
    pub frac_unit_diag: f64,
}

/// Checks raw row-major `dim×dim` candidates. Positive definiteness is
/// judged on the symmetric part: smallest eigenvalue strictly positive.
pub fn constraint_report(samples: &[Vec<f64>], dim: usize, manifold: Manifold) -> ConstraintReport {
    let n = samples.len();
    let (mut sym, mut pd, mut unit) = (0usize, 0usize, 0usize);
    for a in samples {
        if a.len() != dim * dim || a.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let symmetric = (0..dim).all(|i| (0..i).all(|j| (a[i * dim + j] - a[j * dim + i]).abs() <= CONSTRAINT_TOL));
        sym += symmetric as usize;
        let positive = SymMatrix::new(dim, a.clone())
            .ok()
            .and_then(|s| sym_eig(&s).ok())
            .is_some_and(|e| e.min() > 0.0);
        pd += positive as usize;
        let unit_diag = manifold == Manifold::Spd || (0..dim).all(|i| (a[i * dim + i] - 1.0).abs() <= CONSTRAINT_TOL);
        unit += unit_diag as usize;
    }
    let frac = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    ConstraintReport {
        n,
        frac_symmetric: frac(sym),
        frac_pd: frac(pd),
        frac_unit_diag: frac(unit),
    }
}

pub fn constraint_report_matrices(samples: &[ManifoldMatrix], manifold: Manifold) -> ConstraintReport {
    let dim = samples.first().map_or(0, ManifoldMatrix::dim);
    let raw: Vec<Vec<f64>> = samples.iter().map(|m| m.as_sym().as_slice().to_vec()).collect();
    constraint_report(&raw, dim, manifold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_correlation_passes_everything() {
        let r = constraint_report(&[vec![1.0, 0.5, 0.5, 1.0]], 2, Manifold::Corr);
        assert_eq!((r.frac_symmetric, r.frac_pd, r.frac_unit_diag), (1.0, 1.0, 1.0));
    }

    #[test]
    fn violations_are_counted() {
        let asym = vec![1.0, 0.5, 0.2, 1.0];
        let indefinite = vec![1.0, 1.1, 1.1, 1.0];
        let off_diag = vec![2.0, 0.0, 0.0, 1.0];
        let r = constraint_report(std::slice::from_ref(&asym), 2, Manifold::Corr);
        assert_eq!(r.frac_symmetric, 0.0);
        let r = constraint_report(
            &[indefinite, off_diag.clone(), vec![f64::NAN; 4], asym],
            2,
            Manifold::Corr,
        );
        assert_eq!(r.n, 4);
        assert_eq!(r.frac_symmetric, 0.5);
        assert_eq!(r.frac_pd, 0.5);
        assert_eq!(r.frac_unit_diag, 0.5);
        assert_eq!(constraint_report(&[off_diag], 2, Manifold::Spd).frac_unit_diag, 1.0);
    }
}
