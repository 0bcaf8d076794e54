use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Rectangular complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexDense(DMatrix<Complex64>);

impl ComplexDense {
    /// Builds from row-major entries, rejecting NaN/Inf.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        let m = DMatrix::from_row_slice(rows, cols, &entries);
        Self::from_matrix(m)
    }

    pub fn from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let z = m[(r, c)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { row: r, col: c });
                }
            }
        }
        Ok(Self(m))
    }

    /// Real row-major entries, convenient in tests.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::from_row_major(
            rows,
            cols,
            entries.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |r, c| {
            if r == c {
                Complex64::new(values[r], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.0[(r, c)]
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn row_major(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                out.push(self.0[(r, c)]);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// Entrywise complex conjugate; this is `J A J` for the coordinate
    /// conjugation `J` of the standard basis.
    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        if self.rows() == 0 || self.cols() == 0 {
            return 0.0;
        }
        self.0
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .fold(0.0_f64, |a, &b| a.max(b))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `max |M - M*|`, zero exactly for matrices built Hermitian.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols() != other.rows() {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(Self(&self.0 * &other.0))
    }

    /// Kronecker product with the left factor as the major index.
    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl Mul for &ComplexDense {
    type Output = ComplexDense;

    /// Panics on a shape mismatch; use [`ComplexDense::matmul`] for a checked product.
    fn mul(self, rhs: Self) -> ComplexDense {
        ComplexDense(&self.0 * &rhs.0)
    }
}

impl Add for &ComplexDense {
    type Output = ComplexDense;

    fn add(self, rhs: Self) -> ComplexDense {
        ComplexDense(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexDense {
    type Output = ComplexDense;

    fn sub(self, rhs: Self) -> ComplexDense {
        ComplexDense(&self.0 - &rhs.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        let e = ComplexDense::from_real(1, 2, &[1.0, f64::NAN]).unwrap_err();
        assert_eq!(e, Error::NonFinite { row: 0, col: 1 });
    }

    #[test]
    fn rejects_wrong_length() {
        assert!(matches!(
            ComplexDense::from_real(2, 2, &[1.0, 2.0, 3.0]),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn row_major_roundtrip() {
        let m = ComplexDense::from_real(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(m.get(1, 0), Complex64::new(4.0, 0.0));
        assert_eq!(
            m.row_major(),
            [1.0, 2.0, 3.0, 4.0, 5.0, 6.0].map(|x| Complex64::new(x, 0.0))
        );
    }

    #[test]
    fn kron_is_left_major() {
        let a = ComplexDense::from_real(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = ComplexDense::identity(2);
        let k = a.kron(&b);
        assert_eq!(k.get(0, 2), Complex64::new(2.0, 0.0));
        assert_eq!(k.get(1, 3), Complex64::new(2.0, 0.0));
        assert_eq!(k.get(0, 1), Complex64::new(0.0, 0.0));
    }
}
