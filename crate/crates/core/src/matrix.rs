//! Column-major dense matrices and the operator abstraction used by the solvers.

use crate::error::{Error, Result};
use crate::scalar::{self, Scalar};

/// A linear map given by its forward and adjoint actions.
pub trait LinearOperator<T: Scalar>: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply(&self, x: &[T]) -> Vec<T>;
    fn adjoint(&self, r: &[T]) -> Vec<T>;

    /// Column `k` (the atom `a_k`).
    fn column(&self, k: usize) -> Vec<T> {
        let mut e = vec![T::zero(); self.cols()];
        e[k] = T::from_real(1.0);
        self.apply(&e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_columns(rows: usize, columns: &[Vec<T>]) -> Result<Self> {
        if let Some(c) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::Shape(format!("column of length {} for {rows} rows", c.len())));
        }
        Ok(Matrix {
            rows,
            cols: columns.len(),
            data: columns.concat(),
        })
    }

    /// Builds from row-major nested rows (convenient in tests).
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        let mut m = Matrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::from_real(1.0));
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    /// Number of stored scalars.
    pub fn stored_len(&self) -> usize {
        self.data.len()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[j * self.rows + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[j * self.rows + i] = v;
    }

    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_norms(&self) -> Vec<f64> {
        (0..self.cols).map(|j| scalar::norm(self.col(j))).collect()
    }

    /// Scales every column to unit norm; zero columns are a domain error.
    pub fn normalize_columns(&mut self) -> Result<()> {
        for j in 0..self.cols {
            let norm = scalar::norm(self.col(j));
            if norm == 0.0 {
                return Err(Error::Domain(format!("column {j} is zero")));
            }
            for v in self.col_mut(j) {
                *v = v.scale(1.0 / norm);
            }
        }
        Ok(())
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        let mut y = vec![T::zero(); self.rows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == T::zero() {
                continue;
            }
            for (yi, &a) in y.iter_mut().zip(self.col(j)) {
                *yi += a * xj;
            }
        }
        y
    }

    /// `A^H r`
    pub fn adjoint_matvec(&self, r: &[T]) -> Vec<T> {
        assert_eq!(r.len(), self.rows, "adjoint dimension mismatch");
        (0..self.cols).map(|j| scalar::inner(self.col(j), r)).collect()
    }
}

impl<T: Scalar> LinearOperator<T> for Matrix<T> {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn apply(&self, x: &[T]) -> Vec<T> {
        self.matvec(x)
    }
    fn adjoint(&self, r: &[T]) -> Vec<T> {
        self.adjoint_matvec(r)
    }
    fn column(&self, k: usize) -> Vec<T> {
        self.col(k).to_vec()
    }
}
