//! Dense row-major kernels on `f64` slices.
//!
//! Matrices are stored row-major in flat slices with an explicit dimension.
//! Everything here is allocation-light and free of manifold semantics; the
//! typed wrappers live in [`super::matrix`].

use crate::{Error, Result};

/// Convergence threshold on the off-diagonal Frobenius norm, relative to ‖A‖_F.
pub const JACOBI_TOL: f64 = 1e-14;
pub const JACOBI_MAX_SWEEPS: usize = 100;

pub fn identity(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        out[i * n + i] = 1.0;
    }
    out
}

pub fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            let row_b = &b[k * n..(k + 1) * n];
            let row_o = &mut out[i * n..(i + 1) * n];
            for (o, &bkj) in row_o.iter_mut().zip(row_b) {
                *o += aik * bkj;
            }
        }
    }
    out
}

/// `a · bᵀ`
pub fn matmul_t(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        let row_a = &a[i * n..(i + 1) * n];
        for j in 0..n {
            let row_b = &b[j * n..(j + 1) * n];
            out[i * n + j] = row_a.iter().zip(row_b).map(|(x, y)| x * y).sum();
        }
    }
    out
}

pub fn transpose(a: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j];
        }
    }
    out
}

pub fn frobenius(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `V · diag(f(λ)) · Vᵀ` for an orthonormal basis stored column-wise in `basis`.
pub fn spectral_apply(basis: &[f64], eigenvalues: &[f64], n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let mapped: Vec<f64> = eigenvalues.iter().map(|&l| f(l)).collect();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut acc = 0.0;
            for (k, &m) in mapped.iter().enumerate() {
                acc += basis[i * n + k] * m * basis[j * n + k];
            }
            out[i * n + j] = acc;
            out[j * n + i] = acc;
        }
    }
    out
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as the columns of a row-major `n×n` matrix.
pub fn jacobi_eig(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != n * n {
        return Err(Error::invalid(format!("expected {} entries, got {}", n * n, a.len())));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("non-finite matrix entry"));
    }
    let mut m = a.to_vec();
    let mut v = identity(n);
    let scale = frobenius(a);
    let tol = JACOBI_TOL * scale;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off = off_diagonal_norm(&m, n);
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;

                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let mut basis = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            basis[row * n + col] = v[row * n + src];
        }
    }
    Ok((eigenvalues, basis))
}

fn off_diagonal_norm(m: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += m[i * n + j] * m[i * n + j];
            }
        }
    }
    acc.sqrt()
}

/// Lower Cholesky factor with positive diagonal; `A = L·Lᵀ`.
pub fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= l[j * n + k] * l[j * n + k];
        }
        if !(diag > 0.0) {
            return Err(Error::NotPositiveDefinite);
        }
        let ljj = diag.sqrt();
        l[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut acc = a[i * n + j];
            for k in 0..j {
                acc -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = acc / ljj;
        }
    }
    Ok(l)
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve(a: &[f64], b: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap_or(col);
        if m[pivot * n + col] == 0.0 || !m[pivot * n + col].is_finite() {
            return Err(Error::invalid("singular linear system"));
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            x.swap(col, pivot);
        }
        let inv = 1.0 / m[col * n + col];
        for row in (col + 1)..n {
            let factor = m[row * n + col] * inv;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[row * n + k] -= factor * m[col * n + k];
            }
            x[row] -= factor * x[col];
        }
    }
    for row in (0..n).rev() {
        let mut acc = x[row];
        for k in (row + 1)..n {
            acc -= m[row * n + k] * x[k];
        }
        x[row] = acc / m[row * n + row];
    }
    Ok(x)
}
