//! Gagliardo quadratic form of the restricted fractional Laplacian on a
//! uniform grid, and principal eigenpairs on masked node sets.

mod assemble;
pub mod cache;
mod eigen;
pub mod linalg;

pub use eigen::{smallest_eigenpair, EigenResult, EIGEN_MAX_ITER, EIGEN_TOL};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::params::FracParams;
use crate::scalar::Real;

/// Assembled form: `uᵀ A u ≈ c ∬ (u(x) - u(y))^2 / |x - y|^{1+2s}` for the
/// piecewise linear interpolant of `u` extended by zero.
#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessForm<T: Real> {
    grid: Grid1D<T>,
    params: FracParams<T>,
    matrix: Vec<T>,
}

/// Assembles the dense form matrix on `grid`.
pub fn assemble_form<T: Real>(grid: &Grid1D<T>, params: &FracParams<T>) -> StiffnessForm<T> {
    StiffnessForm { grid: *grid, params: *params, matrix: assemble::assemble_matrix(grid, params) }
}

impl<T: Real> StiffnessForm<T> {
    pub(crate) fn from_parts(grid: Grid1D<T>, params: FracParams<T>, matrix: Vec<T>) -> Result<Self> {
        let n = grid.len();
        if matrix.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: matrix.len() });
        }
        Ok(Self { grid, params, matrix })
    }

    pub fn grid(&self) -> &Grid1D<T> {
        &self.grid
    }

    pub fn params(&self) -> &FracParams<T> {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    /// Row-major matrix entries.
    pub fn matrix(&self) -> &[T] {
        &self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        self.matrix[i * self.dim() + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        let n = self.dim();
        &self.matrix[i * n..(i + 1) * n]
    }

    /// `A u` without the mass rescaling.
    pub fn multiply(&self, u: &[T]) -> Result<Vec<T>> {
        self.grid.check_len(u)?;
        Ok((0..self.dim()).map(|i| self.row(i).iter().zip(u).map(|(&a, &b)| a * b).sum()).collect())
    }

    /// `A u / h`, the discrete `(-Δ)^s u` up to the kernel normalization.
    pub fn apply(&self, u: &[T]) -> Result<Vec<T>> {
        let h = self.grid.h();
        Ok(self.multiply(u)?.into_iter().map(|v| v / h).collect())
    }

    /// `uᵀ A u`.
    pub fn energy(&self, u: &[T]) -> Result<T> {
        let au = self.multiply(u)?;
        Ok(au.iter().zip(u).map(|(&a, &b)| a * b).sum())
    }

    /// `uᵀ A u / (h uᵀ u)`.
    pub fn rayleigh(&self, u: &[T]) -> Result<T> {
        self.grid.check_len(u)?;
        let uu: T = u.iter().map(|&v| v * v).sum();
        if uu == T::zero() {
            return Err(Error::ZeroVector);
        }
        Ok(self.energy(u)? / (self.grid.h() * uu))
    }

    /// Principal submatrix on the masked rows and columns.
    pub fn restrict(&self, mask: &[bool]) -> Result<(Vec<usize>, Vec<T>)> {
        if mask.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: mask.len() });
        }
        let idx: Vec<usize> = mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect();
        if idx.is_empty() {
            return Err(Error::EmptyMask);
        }
        let m = idx.len();
        let mut sub = Vec::with_capacity(m * m);
        for &i in &idx {
            let row = self.row(i);
            sub.extend(idx.iter().map(|&j| row[j]));
        }
        Ok((idx, sub))
    }
}
