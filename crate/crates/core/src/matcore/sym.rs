use std::fmt;
use std::ops::{Add, Neg, Sub};

use crate::error::{Error, Result};
use crate::tolerances::TOL_PD;

use super::jacobi;
use super::Matrix;

/// Dense real symmetric matrix. Storage is always exactly symmetric.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

/// Eigenpairs of a [`SymMatrix`], eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns.
    pub vectors: Matrix,
}

impl SymEigen {
    /// `V diag(f(lambda)) V^T`.
    pub fn compose(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let mapped: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let v = self.vectors.as_slice();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let s: f64 = (0..n).map(|k| v[i * n + k] * mapped[k] * v[j * n + k]).sum();
                data[i * n + j] = s;
                data[j * n + i] = s;
            }
        }
        SymMatrix { dim: n, data }
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.compose(|l| l)
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn max_abs(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }

    /// Columns whose eigenvalue satisfies `keep`, as a `dim x k` matrix.
    pub fn basis_where(&self, keep: impl Fn(f64) -> bool) -> Option<Matrix> {
        let n = self.values.len();
        let cols: Vec<usize> = (0..n).filter(|&k| keep(self.values[k])).collect();
        if cols.is_empty() {
            return None;
        }
        let v = self.vectors.as_slice();
        let mut data = Vec::with_capacity(n * cols.len());
        for i in 0..n {
            for &k in &cols {
                data.push(v[i * n + k]);
            }
        }
        Some(Matrix::from_raw(n, cols.len(), data))
    }

    fn check_pd(&self) -> Result<()> {
        let max_abs = self.max_abs();
        let min_eig = self.min();
        if max_abs > 0.0 && min_eig > TOL_PD * max_abs {
            Ok(())
        } else {
            Err(Error::NotPositiveDefinite { min_eig, max_abs })
        }
    }
}

impl SymMatrix {
    /// Builds from row-major storage, symmetrizing via `(A + A^T) / 2`.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMatrix("zero dimension".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries for dimension {dim}, got {}",
                dim * dim,
                data.len()
            )));
        }
        if let Some(x) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidMatrix(format!("non-finite entry {x}")));
        }
        let mut out = data;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (out[i * dim + j] + out[j * dim + i]);
                out[i * dim + j] = avg;
                out[j * dim + i] = avg;
            }
        }
        Ok(Self { dim, data: out })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m = Matrix::from_rows(rows)?;
        m.symmetrize()
    }

    pub fn identity(dim: usize) -> Self {
        Self::diag(&vec![1.0; dim])
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut data = vec![0.0; n * n];
        for (i, v) in values.iter().enumerate() {
            data[i * n + i] = *v;
        }
        Self { dim: n, data }
    }

    pub fn scalar(x: f64) -> Self {
        Self {
            dim: 1,
            data: vec![x],
        }
    }

    pub(crate) fn from_raw_unchecked(dim: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        let mut m = Self { dim, data };
        m.resymmetrize();
        m
    }

    fn resymmetrize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self.data[i * n + j] + self.data[j * n + i]);
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg;
            }
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_raw(self.dim, self.dim, self.data.clone())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius inner product `tr(A B)`.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&self, k: f64) -> SymMatrix {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|x| x * k).collect(),
        }
    }

    /// `self + k * other`.
    pub fn add_scaled(&self, k: f64, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim, "dimension mismatch in add_scaled");
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + k * b)
                .collect(),
        }
    }

    pub fn check_same_dim(&self, other: &SymMatrix) -> Result<()> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(Error::DimMismatch {
                left: (self.dim, self.dim),
                right: (other.dim, other.dim),
            })
        }
    }

    pub fn eig(&self) -> Result<SymEigen> {
        if self.data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        let (values, vectors) = jacobi::eigh(self.dim, &self.data);
        Ok(SymEigen {
            values,
            vectors: Matrix::from_raw(self.dim, self.dim, vectors),
        })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eig().map_or(f64::NAN, |e| e.min())
    }

    /// Natural-log determinant; requires positive definiteness.
    pub fn logdet(&self) -> Result<f64> {
        let e = self.eig()?;
        e.check_pd()?;
        Ok(e.values.iter().map(|l| l.ln()).sum())
    }

    /// Log-determinant and inverse from a single decomposition.
    pub fn logdet_and_inverse(&self) -> Result<(f64, SymMatrix)> {
        let e = self.eig()?;
        e.check_pd()?;
        let ld = e.values.iter().map(|l| l.ln()).sum();
        Ok((ld, e.compose(|l| 1.0 / l)))
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.eig().is_ok_and(|e| e.min() >= -tol)
    }

    /// `self <= other` in the Loewner order, within `tol`.
    pub fn loewner_leq(&self, other: &SymMatrix, tol: f64) -> Result<bool> {
        self.check_same_dim(other)?;
        Ok((other - self).is_psd(tol))
    }

    /// Frobenius-nearest PSD matrix (negative eigenvalues clipped to zero).
    pub fn psd_project(&self) -> SymMatrix {
        match self.eig() {
            Ok(e) if e.min() >= 0.0 => self.clone(),
            Ok(e) => e.compose(|l| l.max(0.0)),
            Err(_) => self.clone(),
        }
    }

    /// Inverse of a positive definite matrix.
    pub fn inverse(&self) -> Result<SymMatrix> {
        let e = self.eig()?;
        e.check_pd()?;
        Ok(e.compose(|l| 1.0 / l))
    }

    /// `H X H^T` for a `r x dim` matrix `H`.
    pub fn congruence(&self, h: &Matrix) -> Result<SymMatrix> {
        if h.cols() != self.dim {
            return Err(Error::DimMismatch {
                left: h.shape(),
                right: (self.dim, self.dim),
            });
        }
        let hx = h.matmul(&self.to_matrix())?;
        let out = hx.matmul(&h.transpose())?;
        Ok(Self::from_raw_unchecked(out.rows(), out.as_slice().to_vec()))
    }

    /// `self * rhs` as a general matrix.
    pub fn matmul(&self, rhs: &Matrix) -> Result<Matrix> {
        self.to_matrix().matmul(rhs)
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks(self.dim)).finish()
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;

    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        self.add_scaled(1.0, rhs)
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;

    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        self.add_scaled(-1.0, rhs)
    }
}

impl Neg for &SymMatrix {
    type Output = SymMatrix;

    fn neg(self) -> SymMatrix {
        self.scale(-1.0)
    }
}
