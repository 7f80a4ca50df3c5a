use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::linalg;
use crate::{Error, Result};

/// Relative eigenvalue floor: `λ_min > SPD_REL_FLOOR · λ_max` classifies a matrix as SPD.
pub const SPD_REL_FLOOR: f64 = 1e-12;
/// Tolerance on unit diagonals of correlation matrices.
pub const UNIT_DIAG_TOL: f64 = 1e-10;

/// Which matrix manifold a value lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Manifold {
    Spd,
    Corr,
}

impl Manifold {
    /// Dimension of the flat embedding space for `d×d` matrices.
    pub fn embed_dim(self, d: usize) -> usize {
        match self {
            Manifold::Spd => d * (d + 1) / 2,
            Manifold::Corr => d * d.saturating_sub(1) / 2,
        }
    }

    /// Recovers `d` from an embedding length, if the length is admissible.
    pub fn matrix_dim(self, embed_len: usize) -> Option<usize> {
        (1..=4096).find(|&d| self.embed_dim(d) == embed_len)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Manifold::Spd => "spd",
            Manifold::Corr => "corr",
        }
    }
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Manifold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spd" => Ok(Manifold::Spd),
            "corr" => Ok(Manifold::Corr),
            other => Err(Error::invalid(format!("unknown manifold `{other}`"))),
        }
    }
}

/// A real symmetric `d×d` matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl SymMatrix {
    /// Builds a symmetric matrix, averaging `a[i][j]` and `a[j][i]`.
    pub fn new(dim: usize, mut entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("matrix dimension must be positive"));
        }
        if entries.len() != dim * dim {
            return Err(Error::invalid(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        for i in 0..dim {
            for j in 0..i {
                let avg = 0.5 * (entries[i * dim + j] + entries[j * dim + i]);
                entries[i * dim + j] = avg;
                entries[j * dim + i] = avg;
            }
        }
        Ok(SymMatrix { dim, entries })
    }

    /// Copies the lower triangle over the upper one, so rounding asymmetry
    /// never leaks out.
    pub(crate) fn from_symmetric_unchecked(dim: usize, mut entries: Vec<f64>) -> Self {
        debug_assert_eq!(entries.len(), dim * dim);
        for i in 0..dim {
            for j in 0..i {
                entries[j * dim + i] = entries[i * dim + j];
            }
        }
        SymMatrix { dim, entries }
    }

    pub fn identity(dim: usize) -> Self {
        SymMatrix {
            dim,
            entries: linalg::identity(dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            entries: vec![0.0; dim * dim],
        }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut entries = vec![0.0; n * n];
        for (i, &v) in diag.iter().enumerate() {
            entries[i * n + i] = v;
        }
        SymMatrix { dim: n, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.entries
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn frobenius(&self) -> f64 {
        linalg::frobenius(&self.entries)
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|x| x.is_finite())
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            entries: self.entries.iter().map(|x| x * s).collect(),
        }
    }

    /// `self + s·other`
    pub fn add_scaled(&self, other: &SymMatrix, s: f64) -> SymMatrix {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        SymMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + s * b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        self.add_scaled(other, -1.0)
    }

    pub fn dist_frobenius(&self, other: &SymMatrix) -> f64 {
        self.sub(other).frobenius()
    }

    /// `D^{-1/2} · A · D^{-1/2}` with `D = diag(A)`; the diagonal is set to exactly one.
    pub fn normalize_unit_diag(&self) -> Result<SymMatrix> {
        let n = self.dim;
        let d = self.diag();
        if d.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::NotPositiveDefinite);
        }
        let inv_sqrt: Vec<f64> = d.iter().map(|x| 1.0 / x.sqrt()).collect();
        let mut entries = self.entries.clone();
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] = if i == j {
                    1.0
                } else {
                    entries[i * n + j] * (inv_sqrt[i] * inv_sqrt[j])
                };
            }
        }
        Ok(SymMatrix { dim: n, entries })
    }

    pub fn eig(&self) -> Result<SymEig> {
        sym_eig(self)
    }
}

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEig {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, row-major.
    pub basis: Vec<f64>,
    pub dim: usize,
}

impl SymEig {
    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[self.dim - 1]
    }

    /// Applies a scalar function spectrally: `V · diag(f(λ)) · Vᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        SymMatrix::from_symmetric_unchecked(
            self.dim,
            linalg::spectral_apply(&self.basis, &self.eigenvalues, self.dim, f),
        )
    }

    pub fn is_spd(&self) -> bool {
        let floor = SPD_REL_FLOOR * self.max().max(1e-300);
        self.min() > floor
    }
}

/// Symmetric eigendecomposition (cyclic Jacobi), eigenvalues ascending.
pub fn sym_eig(a: &SymMatrix) -> Result<SymEig> {
    let (eigenvalues, basis) = linalg::jacobi_eig(a.as_slice(), a.dim())?;
    Ok(SymEig {
        eigenvalues,
        basis,
        dim: a.dim(),
    })
}

/// A symmetric positive-definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix(SymMatrix);

impl SpdMatrix {
    pub fn new(a: SymMatrix) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::invalid("non-finite matrix entry"));
        }
        if !a.eig()?.is_spd() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(SpdMatrix(a))
    }

    /// Wraps a matrix already known to be positive definite.
    pub(crate) fn new_unchecked(a: SymMatrix) -> Self {
        SpdMatrix(a)
    }

    pub fn identity(dim: usize) -> Self {
        SpdMatrix(SymMatrix::identity(dim))
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.0
    }

    pub fn into_sym(self) -> SymMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// A full-rank correlation matrix: SPD with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrMatrix(SpdMatrix);

impl CorrMatrix {
    pub fn new(a: SpdMatrix) -> Result<Self> {
        check_unit_diag(a.as_sym())?;
        Ok(CorrMatrix(a))
    }

    pub fn from_sym(a: SymMatrix) -> Result<Self> {
        check_unit_diag(&a)?;
        Ok(CorrMatrix(SpdMatrix::new(a)?))
    }

    pub(crate) fn new_unchecked(a: SymMatrix) -> Self {
        CorrMatrix(SpdMatrix(a))
    }

    pub fn identity(dim: usize) -> Self {
        CorrMatrix(SpdMatrix::identity(dim))
    }

    pub fn as_spd(&self) -> &SpdMatrix {
        &self.0
    }

    pub fn as_sym(&self) -> &SymMatrix {
        self.0.as_sym()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

fn check_unit_diag(a: &SymMatrix) -> Result<()> {
    for (i, v) in a.diag().into_iter().enumerate() {
        if !((v - 1.0).abs() <= UNIT_DIAG_TOL) {
            return Err(Error::NotCorrelation(format!("diagonal entry {i} is {v}")));
        }
    }
    Ok(())
}

/// A point on either manifold.
#[derive(Debug, Clone, PartialEq)]
pub enum ManifoldMatrix {
    Spd(SpdMatrix),
    Corr(CorrMatrix),
}

impl ManifoldMatrix {
    /// Validates `a` against the invariants of `manifold`.
    pub fn new(manifold: Manifold, a: SymMatrix) -> Result<Self> {
        match manifold {
            Manifold::Spd => Ok(ManifoldMatrix::Spd(SpdMatrix::new(a)?)),
            Manifold::Corr => Ok(ManifoldMatrix::Corr(CorrMatrix::from_sym(a)?)),
        }
    }

    pub fn identity(manifold: Manifold, dim: usize) -> Self {
        match manifold {
            Manifold::Spd => ManifoldMatrix::Spd(SpdMatrix::identity(dim)),
            Manifold::Corr => ManifoldMatrix::Corr(CorrMatrix::identity(dim)),
        }
    }

    pub fn manifold(&self) -> Manifold {
        match self {
            ManifoldMatrix::Spd(_) => Manifold::Spd,
            ManifoldMatrix::Corr(_) => Manifold::Corr,
        }
    }

    pub fn as_sym(&self) -> &SymMatrix {
        match self {
            ManifoldMatrix::Spd(s) => s.as_sym(),
            ManifoldMatrix::Corr(c) => c.as_sym(),
        }
    }

    pub fn dim(&self) -> usize {
        self.as_sym().dim()
    }
}

impl From<SpdMatrix> for ManifoldMatrix {
    fn from(s: SpdMatrix) -> Self {
        ManifoldMatrix::Spd(s)
    }
}

impl From<CorrMatrix> for ManifoldMatrix {
    fn from(c: CorrMatrix) -> Self {
        ManifoldMatrix::Corr(c)
    }
}

/// A tangent vector at a manifold point, represented as a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentSym {
    at: ManifoldMatrix,
    value: SymMatrix,
}

impl TangentSym {
    pub fn new(at: ManifoldMatrix, value: SymMatrix) -> Result<Self> {
        if at.dim() != value.dim() {
            return Err(Error::invalid("tangent dimension does not match base point"));
        }
        if at.manifold() == Manifold::Corr && value.diag().iter().any(|v| v.abs() > UNIT_DIAG_TOL) {
            return Err(Error::invalid("correlation tangent must have zero diagonal"));
        }
        Ok(TangentSym { at, value })
    }

    pub fn zero(at: ManifoldMatrix) -> Self {
        let value = SymMatrix::zeros(at.dim());
        TangentSym { at, value }
    }

    pub fn at(&self) -> &ManifoldMatrix {
        &self.at
    }

    pub fn value(&self) -> &SymMatrix {
        &self.value
    }

    pub fn scale(&self, s: f64) -> TangentSym {
        TangentSym {
            at: self.at.clone(),
            value: self.value.scale(s),
        }
    }

    /// `self + s·other`; both tangents must share a base point.
    pub fn add_scaled(&self, other: &TangentSym, s: f64) -> TangentSym {
        debug_assert_eq!(self.at, other.at);
        TangentSym {
            at: self.at.clone(),
            value: self.value.add_scaled(&other.value, s),
        }
    }
}

/// A vector in the flat embedding space of a manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedVector {
    manifold: Manifold,
    dim_matrix: usize,
    values: Vec<f64>,
}

impl EmbeddedVector {
    pub fn new(manifold: Manifold, dim_matrix: usize, values: Vec<f64>) -> Result<Self> {
        let expected = manifold.embed_dim(dim_matrix);
        if dim_matrix == 0 || values.len() != expected {
            return Err(Error::invalid(format!(
                "{manifold} embedding of a {dim_matrix}x{dim_matrix} matrix needs {expected} values, got {}",
                values.len()
            )));
        }
        Ok(EmbeddedVector {
            manifold,
            dim_matrix,
            values,
        })
    }

    pub fn zeros(manifold: Manifold, dim_matrix: usize) -> Self {
        EmbeddedVector {
            manifold,
            dim_matrix,
            values: vec![0.0; manifold.embed_dim(dim_matrix)],
        }
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn dim_matrix(&self) -> usize {
        self.dim_matrix
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        linalg::frobenius(&self.values)
    }

    /// Same space, new coordinates.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        EmbeddedVector::new(self.manifold, self.dim_matrix, values)
    }

    pub fn add_scaled(&self, other: &EmbeddedVector, s: f64) -> EmbeddedVector {
        assert_eq!(self.values.len(), other.values.len(), "embedding length mismatch");
        EmbeddedVector {
            manifold: self.manifold,
            dim_matrix: self.dim_matrix,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect(),
        }
    }

    pub fn sub(&self, other: &EmbeddedVector) -> EmbeddedVector {
        self.add_scaled(other, -1.0)
    }

    pub fn scale(&self, s: f64) -> EmbeddedVector {
        EmbeddedVector {
            manifold: self.manifold,
            dim_matrix: self.dim_matrix,
            values: self.values.iter().map(|x| x * s).collect(),
        }
    }
}

/// Lower-triangular matrix with implicit unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitLowerTriangular {
    dim: usize,
    strict: Vec<f64>,
}

impl UnitLowerTriangular {
    /// `strict` lists the strictly-lower entries in column-major order.
    pub fn new(dim: usize, strict: Vec<f64>) -> Result<Self> {
        if strict.len() != dim * dim.saturating_sub(1) / 2 {
            return Err(Error::invalid("wrong number of strictly-lower entries"));
        }
        Ok(UnitLowerTriangular { dim, strict })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn strict(&self) -> &[f64] {
        &self.strict
    }

    /// Dense row-major representation.
    pub fn to_full(&self) -> Vec<f64> {
        let n = self.dim;
        let mut out = linalg::identity(n);
        let mut k = 0;
        for j in 0..n {
            for i in (j + 1)..n {
                out[i * n + j] = self.strict[k];
                k += 1;
            }
        }
        out
    }
}

/// Lower triangle, column-major traversal, off-diagonals scaled by √2.
pub fn veclt(a: &SymMatrix) -> Vec<f64> {
    let n = a.dim();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        out.push(a.get(j, j));
        for i in (j + 1)..n {
            out.push(std::f64::consts::SQRT_2 * a.get(i, j));
        }
    }
    out
}

pub fn veclt_inv(v: &[f64], n: usize) -> SymMatrix {
    debug_assert_eq!(v.len(), n * (n + 1) / 2);
    let mut entries = vec![0.0; n * n];
    let mut k = 0;
    for j in 0..n {
        entries[j * n + j] = v[k];
        k += 1;
        for i in (j + 1)..n {
            let x = v[k] / std::f64::consts::SQRT_2;
            entries[i * n + j] = x;
            entries[j * n + i] = x;
            k += 1;
        }
    }
    SymMatrix::from_symmetric_unchecked(n, entries)
}

/// Strictly-lower entries of a row-major square matrix, column-major traversal, unscaled.
pub fn vecl(a: &[f64], n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for j in 0..n {
        for i in (j + 1)..n {
            out.push(a[i * n + j]);
        }
    }
    out
}

/// Symmetric matrix with the given strictly-lower entries mirrored and zero diagonal.
pub fn vecl_inv_sym(v: &[f64], n: usize) -> SymMatrix {
    let mut entries = vec![0.0; n * n];
    let mut k = 0;
    for j in 0..n {
        for i in (j + 1)..n {
            entries[i * n + j] = v[k];
            entries[j * n + i] = v[k];
            k += 1;
        }
    }
    SymMatrix::from_symmetric_unchecked(n, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_symmetrizes() {
        let a = SymMatrix::new(2, vec![1.0, 2.0, 4.0, 1.0]).unwrap();
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.get(1, 0), 3.0);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(SymMatrix::new(0, vec![]).is_err());
        assert!(SymMatrix::new(2, vec![1.0; 3]).is_err());
        assert!(EmbeddedVector::new(Manifold::Spd, 3, vec![0.0; 5]).is_err());
        assert!(EmbeddedVector::new(Manifold::Corr, 3, vec![0.0; 3]).is_ok());
    }

    #[test]
    fn spd_classification() {
        assert!(SpdMatrix::new(SymMatrix::from_diag(&[1.0, 1e-3])).is_ok());
        assert!(matches!(
            SpdMatrix::new(SymMatrix::from_diag(&[1.0, 1e-13])),
            Err(Error::NotPositiveDefinite)
        ));
        assert!(matches!(
            SpdMatrix::new(SymMatrix::from_diag(&[1.0, -1.0])),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn correlation_requires_unit_diagonal() {
        let a = SymMatrix::new(2, vec![1.0, 0.5, 0.5, 1.0 + 1e-9]).unwrap();
        assert!(matches!(CorrMatrix::from_sym(a), Err(Error::NotCorrelation(_))));
    }

    #[test]
    fn corr_tangent_needs_zero_diagonal() {
        let at = ManifoldMatrix::identity(Manifold::Corr, 2);
        assert!(TangentSym::new(at.clone(), SymMatrix::identity(2)).is_err());
        let off = SymMatrix::new(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(TangentSym::new(at, off).is_ok());
    }

    #[test]
    fn veclt_ordering_and_scaling() {
        let a = SymMatrix::new(2, vec![1.0, 2.0, 2.0, 3.0]).unwrap();
        let v = veclt(&a);
        assert_eq!(v[0], 1.0);
        assert!((v[1] - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(v[2], 3.0);
        assert_eq!(veclt_inv(&v, 2).as_slice(), a.as_slice());
    }

    #[test]
    fn unit_lower_triangular_layout() {
        let l = UnitLowerTriangular::new(3, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(l.to_full(), vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 2.0, 3.0, 1.0]);
        assert_eq!(vecl(&l.to_full(), 3), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn manifold_dims() {
        assert_eq!(Manifold::Spd.embed_dim(4), 10);
        assert_eq!(Manifold::Corr.embed_dim(4), 6);
        assert_eq!(Manifold::Spd.matrix_dim(10), Some(4));
        assert_eq!(Manifold::Corr.matrix_dim(6), Some(4));
        assert_eq!(Manifold::Corr.matrix_dim(5), None);
    }
}
