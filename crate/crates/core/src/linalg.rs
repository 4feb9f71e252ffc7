//! Dense row-major matrices and a cyclic Jacobi eigen-solver for real
//! symmetric matrices.

use std::ops::{Index, IndexMut};

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {gap:e}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },
    #[error("matrix has a non-finite entry")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::Dimension(format!("{} values for a {rows}x{cols} matrix", data.len())));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(LinalgError::Dimension(format!("row {bad} has {} entries, expected {cols}", rows[bad].len())));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn diagonal(values: &[T]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { T::zero() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, &b) in dst.iter_mut().zip(rhs.row(k)) {
                    *d = *d + a * b;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · self`.
    pub fn gram(&self) -> Self {
        let p = self.cols;
        let mut out = Self::zeros(p, p);
        for j in 0..p {
            for k in j..p {
                let mut acc = T::zero();
                for i in 0..self.rows {
                    acc = acc + self[(i, j)] * self[(i, k)];
                }
                out[(j, k)] = acc;
                out[(k, j)] = acc;
            }
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if (self.rows, self.cols) != (rhs.rows, rhs.cols) {
            return Err(LinalgError::Dimension("subtraction of differently shaped matrices".into()));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        })
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + self[(i, i)])
    }

    /// Keep only the first `n` columns.
    pub fn leading_columns(&self, n: usize) -> Self {
        let n = n.min(self.cols);
        Self::from_fn(self.rows, n, |i, j| self[(i, j)])
    }

    /// Check symmetry to `tol · max(1, max|a_ij|)`.
    pub fn check_symmetric(&self, tol: T) -> Result<(), LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare { rows: self.rows, cols: self.cols });
        }
        if self.data.iter().any(|x| !x.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        let bound = tol * self.max_abs().max(T::one());
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                let gap = (self[(i, j)] - self[(j, i)]).abs();
                if gap > bound {
                    return Err(LinalgError::NotSymmetric { i, j, gap: gap.to_f64().unwrap_or(f64::NAN) });
                }
            }
        }
        Ok(())
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenvalues in descending order with matching orthonormal eigenvectors
/// stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: Matrix<T>,
    /// Jacobi sweeps used.
    pub sweeps: usize,
}

impl<T: Real> Spectrum<T> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<T> {
        self.eigenvectors.column(k)
    }

    /// `V Λ Vᵀ`.
    pub fn reconstruct(&self) -> Matrix<T> {
        let v = &self.eigenvectors;
        let n = v.rows();
        Matrix::from_fn(n, n, |i, j| {
            (0..self.len()).fold(T::zero(), |acc, k| acc + v[(i, k)] * self.eigenvalues[k] * v[(j, k)])
        })
    }

    /// `max |VᵀV − I|`.
    pub fn orthonormality_residual(&self) -> T {
        let vtv = self.eigenvectors.gram();
        vtv.sub(&Matrix::identity(vtv.rows())).map(|d| d.max_abs()).unwrap_or(T::infinity())
    }

    /// `max_k ‖A v_k − λ_k v_k‖₂`.
    pub fn eigen_residual(&self, a: &Matrix<T>) -> T {
        let n = a.rows();
        (0..self.len())
            .map(|k| {
                (0..n)
                    .map(|i| {
                        let av = (0..n).fold(T::zero(), |acc, j| acc + a[(i, j)] * self.eigenvectors[(j, k)]);
                        let r = av - self.eigenvalues[k] * self.eigenvectors[(i, k)];
                        r * r
                    })
                    .fold(T::zero(), |acc, x| acc + x)
                    .sqrt()
            })
            .fold(T::zero(), T::max)
    }

    /// Sum of the eigenvalues after the first `m`.
    pub fn trailing_sum(&self, m: usize) -> T {
        self.eigenvalues.iter().skip(m).fold(T::zero(), |acc, &x| acc + x)
    }
}

/// Upper bound on Jacobi sweeps before reporting non-convergence.
pub const MAX_SWEEPS: usize = 100;

/// Convergence target for the off-diagonal Frobenius norm, relative to
/// `‖A‖_F`: `max(1e-12, 4ε)`.
pub fn jacobi_tolerance<T: Real>() -> T {
    T::lit(1e-12).max(T::lit(4.0) * T::epsilon())
}

fn off_diagonal_norm<T: Real>(a: &Matrix<T>) -> T {
    let n = a.rows();
    let mut acc = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc = acc + a[(i, j)] * a[(i, j)];
            }
        }
    }
    acc.sqrt()
}

/// Full eigen-decomposition of a real symmetric matrix by cyclic Jacobi
/// rotations.
///
/// Sweeps run until the off-diagonal Frobenius norm falls below
/// [`jacobi_tolerance`]`·‖A‖_F`, at most [`MAX_SWEEPS`] times. Each
/// eigenvector is sign-normalised so its largest-magnitude component is
/// positive.
pub fn eig_sym<T: Real>(a: &Matrix<T>) -> Result<Spectrum<T>, LinalgError> {
    a.check_symmetric(T::lit(1e-10).max(T::lit(16.0) * T::epsilon()))?;
    let n = a.rows();
    // Symmetrise exactly so rounding asymmetry cannot accumulate.
    let mut m = Matrix::from_fn(n, n, |i, j| (a[(i, j)] + a[(j, i)]) * T::lit(0.5));
    let mut v = Matrix::identity(n);
    let target = jacobi_tolerance::<T>() * m.frobenius_norm();

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&m);
        if off <= target {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(LinalgError::NoConvergence { sweeps, off: off.to_f64().unwrap_or(f64::NAN) });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let (app, aqq) = (m[(p, p)], m[(q, q)]);
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = T::zero();
                m[(q, p)] = T::zero();
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].partial_cmp(&m[(i, i)]).unwrap_or(std::cmp::Ordering::Equal));
    let eigenvalues = order.iter().map(|&i| m[(i, i)]).collect();
    let mut eigenvectors = Matrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    for k in 0..n {
        let mut pivot = 0;
        for i in 0..n {
            if eigenvectors[(i, k)].abs() > eigenvectors[(pivot, k)].abs() {
                pivot = i;
            }
        }
        if eigenvectors[(pivot, k)] < T::zero() {
            for i in 0..n {
                eigenvectors[(i, k)] = -eigenvectors[(i, k)];
            }
        }
    }
    Ok(Spectrum { eigenvalues, eigenvectors, sweeps })
}
