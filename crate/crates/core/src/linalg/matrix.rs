//! Dense square matrices and vectors, row-major, over real or complex scalars.
//!
//! Arithmetic is checked: dimension mismatches are reported through
//! [`Error::DimensionMismatch`] rather than panics, and constructors reject
//! non-finite entries so every value in circulation is finite.

use std::ops::Index;

use num_traits::{Float, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Scalar, ScalarKind};

/// Dense `dim x dim` matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T: Scalar> {
    dim: usize,
    entries: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    /// Build from a row-major entry buffer of length `dim * dim`.
    pub fn new(dim: usize, entries: Vec<T>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                message: "matrix dimension must be positive".into(),
            });
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                context: "matrix entry buffer",
                expected: dim * dim,
                found: entries.len(),
            });
        }
        if entries.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite {
                context: "matrix entries",
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "matrix row",
                    expected: dim,
                    found: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::new(dim, entries)
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        Self {
            dim,
            entries: vec![T::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = T::one();
        }
        m
    }

    pub fn diagonal(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.entries[i * values.len() + i] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scalar_kind(&self) -> ScalarKind {
        T::KIND
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.entries[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.entries[row * self.dim + col] = value;
    }

    fn check_same_dim(&self, other: &Self, context: &'static str) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(())
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        self.check_same_dim(rhs, "matmul")?;
        let n = self.dim;
        let mut out = vec![T::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let aik = self.entries[i * n + k];
                if aik == T::zero() {
                    continue;
                }
                let row = &rhs.entries[k * n..(k + 1) * n];
                let dst = &mut out[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += aik * b;
                }
            }
        }
        Ok(Self {
            dim: n,
            entries: out,
        })
    }

    pub fn matvec(&self, x: &Vector<T>) -> Result<Vector<T>> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "matvec",
                expected: self.dim,
                found: x.dim(),
            });
        }
        let n = self.dim;
        let mut out = vec![T::zero(); n];
        for i in 0..n {
            let mut acc = T::zero();
            let row = &self.entries[i * n..(i + 1) * n];
            for (a, b) in row.iter().zip(x.entries()) {
                acc += *a * *b;
            }
            out[i] = acc;
        }
        Ok(Vector { entries: out })
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_same_dim(rhs, "matrix add")?;
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(&a, &b)| a + b)
            .collect();
        Ok(Self {
            dim: self.dim,
            entries,
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.check_same_dim(rhs, "matrix sub")?;
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(&a, &b)| a - b)
            .collect();
        Ok(Self {
            dim: self.dim,
            entries,
        })
    }

    pub fn scale(&self, factor: T) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&a| a * factor).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.entries[j * n + i] = self.entries[i * n + j];
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.entries[j * n + i] = self.entries[i * n + j].conj();
            }
        }
        out
    }

    /// Integer power by binary exponentiation; `pow(0)` is the identity.
    pub fn pow(&self, exponent: usize) -> Self {
        let mut result = Self::identity(self.dim);
        let mut base = self.clone();
        let mut e = exponent;
        while e > 0 {
            if e & 1 == 1 {
                result = result.matmul(&base).expect("same dim");
            }
            e >>= 1;
            if e > 0 {
                base = base.matmul(&base).expect("same dim");
            }
        }
        result
    }

    pub fn trace(&self) -> T {
        let mut acc = T::zero();
        for i in 0..self.dim {
            acc += self.entries[i * self.dim + i];
        }
        acc
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T::Real {
        self.entries
            .iter()
            .map(|e| e.modulus())
            .fold(T::Real::zero(), |a, b| if b > a { b } else { a })
    }

    pub fn frobenius_norm(&self) -> T::Real {
        self.entries
            .iter()
            .map(|e| e.modulus_sq())
            .fold(T::Real::zero(), |a, b| a + b)
            .sqrt()
    }

    /// Induced l1 norm: maximum column absolute sum.
    pub(crate) fn induced_one_norm(&self) -> T::Real {
        let n = self.dim;
        let mut best = T::Real::zero();
        for j in 0..n {
            let mut col = T::Real::zero();
            for i in 0..n {
                col = col + self.entries[i * n + j].modulus();
            }
            if col > best {
                best = col;
            }
        }
        best
    }

    /// Induced l-infinity norm: maximum row absolute sum.
    pub(crate) fn induced_inf_norm(&self) -> T::Real {
        let n = self.dim;
        let mut best = T::Real::zero();
        for i in 0..n {
            let mut row = T::Real::zero();
            for j in 0..n {
                row = row + self.entries[i * n + j].modulus();
            }
            if row > best {
                best = row;
            }
        }
        best
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|e| e.is_finite())
    }
}

impl<T: Scalar> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (row, col): (usize, usize)) -> &T {
        &self.entries[row * self.dim + col]
    }
}

/// Dense vector over the same scalar set as [`Matrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct Vector<T: Scalar> {
    entries: Vec<T>,
}

impl<T: Scalar> Vector<T> {
    pub fn new(entries: Vec<T>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput {
                context: "vector entries",
            });
        }
        if entries.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite {
                context: "vector entries",
            });
        }
        Ok(Self { entries })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "vector dimension must be positive");
        Self {
            entries: vec![T::zero(); dim],
        }
    }

    /// Standard basis vector `e_index` (zero-based index).
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index out of range");
        let mut v = Self::zeros(dim);
        v.entries[index] = T::one();
        v
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, index: usize) -> T {
        self.entries[index]
    }

    #[inline]
    pub fn set(&mut self, index: usize, value: T) {
        self.entries[index] = value;
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        if self.dim() != rhs.dim() {
            return Err(Error::DimensionMismatch {
                context: "vector add",
                expected: self.dim(),
                found: rhs.dim(),
            });
        }
        Ok(Self {
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(&a, &b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        if self.dim() != rhs.dim() {
            return Err(Error::DimensionMismatch {
                context: "vector sub",
                expected: self.dim(),
                found: rhs.dim(),
            });
        }
        Ok(Self {
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(&a, &b)| a - b)
                .collect(),
        })
    }

    pub fn scale(&self, factor: T) -> Self {
        Self {
            entries: self.entries.iter().map(|&a| a * factor).collect(),
        }
    }

    pub fn max_abs(&self) -> T::Real {
        self.entries
            .iter()
            .map(|e| e.modulus())
            .fold(T::Real::zero(), |a, b| if b > a { b } else { a })
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|e| e.is_finite())
    }
}

impl<T: Scalar> Index<usize> for Vector<T> {
    type Output = T;

    fn index(&self, index: usize) -> &T {
        &self.entries[index]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat2(a: f64, b: f64, c: f64, d: f64) -> Matrix<f64> {
        Matrix::new(2, vec![a, b, c, d]).unwrap()
    }

    #[test]
    fn rejects_wrong_entry_count() {
        let err = Matrix::new(2, vec![1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn rejects_non_finite() {
        let err = Matrix::new(1, vec![f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
        assert!(Vector::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn identity_matvec_is_identity() {
        let id = Matrix::<f64>::identity(3);
        let x = Vector::new(vec![1.0, -2.0, 0.5]).unwrap();
        assert_eq!(id.matvec(&x).unwrap(), x);
    }

    #[test]
    fn self_difference_is_zero() {
        let a = mat2(1.0, 2.0, 3.0, 4.0);
        let z = a.sub(&a).unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn matmul_known_product() {
        let a = mat2(1.0, 2.0, 3.0, 4.0);
        let b = mat2(0.0, 1.0, 1.0, 0.0);
        let c = a.matmul(&b).unwrap();
        assert_eq!(c, mat2(2.0, 1.0, 4.0, 3.0));
    }

    #[test]
    fn dimension_mismatch_errors() {
        let a = mat2(1.0, 0.0, 0.0, 1.0);
        let b = Matrix::<f64>::identity(3);
        assert!(a.matmul(&b).is_err());
        assert!(a.add(&b).is_err());
        let x = Vector::<f64>::zeros(3);
        assert!(a.matvec(&x).is_err());
    }

    #[test]
    fn pow_matches_repeated_multiplication() {
        let a = mat2(0.9, 0.1, -0.2, 1.1);
        let mut expect = Matrix::identity(2);
        for _ in 0..7 {
            expect = expect.matmul(&a).unwrap();
        }
        let got = a.pow(7);
        assert!(got.sub(&expect).unwrap().max_abs() < 1e-14);
        assert_eq!(a.pow(0), Matrix::identity(2));
    }

    #[test]
    fn induced_norm_helpers() {
        let a = mat2(1.0, -3.0, 2.0, 0.5);
        assert_eq!(a.induced_one_norm(), 3.5);
        assert_eq!(a.induced_inf_norm(), 4.0);
    }
}
