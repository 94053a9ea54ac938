//! Dense Cholesky factorization for symmetric positive definite matrices.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Lower-triangular Cholesky factor stored row-major.
#[derive(Debug, Clone)]
pub struct Cholesky<T: Real> {
    n: usize,
    l: Vec<T>,
}

impl<T: Real> Cholesky<T> {
    pub fn factor(matrix: &[T], n: usize) -> Result<Self> {
        if matrix.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: matrix.len() });
        }
        let mut l = vec![T::zero(); n * n];
        for j in 0..n {
            let row_j = j * n;
            let mut d = matrix[row_j + j];
            for k in 0..j {
                d -= l[row_j + k] * l[row_j + k];
            }
            if !(d > T::zero()) {
                return Err(Error::Degenerate(format!("matrix not positive definite at pivot {j} ({d})")));
            }
            let d = d.sqrt();
            l[row_j + j] = d;
            for i in (j + 1)..n {
                let row_i = i * n;
                let mut v = matrix[row_i + j];
                for k in 0..j {
                    v -= l[row_i + k] * l[row_j + k];
                }
                l[row_i + j] = v / d;
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `L Lᵀ x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let mut v = b[i];
            for (k, &lik) in row.iter().enumerate() {
                v -= lik * b[k];
            }
            b[i] = v / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut v = b[i];
            for k in (i + 1)..n {
                v -= self.l[k * n + i] * b[k];
            }
            b[i] = v / self.l[i * n + i];
        }
    }
}
