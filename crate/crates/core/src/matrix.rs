//! Dense row-major containers for observations and square matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// An `n × p` matrix of finite observations, rows are samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMatrix<T> {
    n: usize,
    p: usize,
    values: Vec<T>,
}

impl<T: Real> DataMatrix<T> {
    /// Wraps row-major `values`. Requires `n ≥ 2`, `p ≥ 2` and finite entries.
    pub fn new(n: usize, p: usize, values: Vec<T>) -> Result<Self> {
        if n < 2 || p < 2 {
            return Err(Error::InvalidInput(format!(
                "data must have n >= 2 and p >= 2, got n = {n}, p = {p}"
            )));
        }
        if values.len() != n * p {
            return Err(Error::InvalidInput(format!(
                "expected {} values for a {n} x {p} matrix, got {}",
                n * p,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value at row {}, column {}",
                pos / p + 1,
                pos % p + 1
            )));
        }
        Ok(Self { n, p, values })
    }

    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(n * p);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != p {
                return Err(Error::InvalidInput(format!(
                    "row {} has {} entries, expected {p}",
                    i + 1,
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::new(n, p, values)
    }

    /// Number of observations.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Dimension.
    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.p + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.values.chunks_exact(self.p)
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    /// Applies `f` to every row, producing a matrix of the same shape.
    pub fn map_rows<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&[T]) -> Vec<T>,
    {
        let mut values = Vec::with_capacity(self.values.len());
        for row in self.rows() {
            let mapped = f(row);
            if mapped.len() != self.p {
                return Err(Error::InvalidInput(
                    "row map must preserve the dimension".to_string(),
                ));
            }
            values.extend(mapped);
        }
        Self::new(self.n, self.p, values)
    }

    /// Converts to another scalar precision.
    pub fn cast<U: Real>(&self) -> Result<DataMatrix<U>> {
        let values = self
            .values
            .iter()
            .map(|v| U::from_f64(v.as_f64()).unwrap_or_else(U::nan))
            .collect();
        DataMatrix::new(self.n, self.p, values)
    }
}

/// A dense `dim × dim` matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareMatrix<T> {
    dim: usize,
    values: Vec<T>,
}

impl<T: Real> SquareMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            values: vec![T::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn from_row_major(dim: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != dim * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} values for a {dim} x {dim} matrix, got {}",
                dim * dim,
                values.len()
            )));
        }
        Ok(Self { dim, values })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.values[i * self.dim + j] = v;
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Sum of squared entries.
    pub fn frobenius_sq(&self) -> T {
        self.values.iter().map(|&v| v * v).sum()
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            dim: self.dim,
            values: self.values.iter().map(|&v| v * c).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |acc, &v| if v.abs() > acc { v.abs() } else { acc })
    }

    /// Largest absolute asymmetry `|m_ij - m_ji|`.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let d = (self.get(i, j) - self.get(j, i)).abs();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a == T::zero() {
                    continue;
                }
                for j in 0..d {
                    out.values[i * d + j] = out.values[i * d + j] + a * other.get(k, j);
                }
            }
        }
        out
    }

    /// Mirrors the upper triangle into the lower one.
    pub(crate) fn symmetrize_from_upper(&mut self) {
        let d = self.dim;
        for i in 0..d {
            for j in (i + 1)..d {
                self.values[j * d + i] = self.values[i * d + j];
            }
        }
    }
}
