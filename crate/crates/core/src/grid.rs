use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smallest admissible number of interior nodes.
pub const MIN_NODES: usize = 8;

/// Uniform grid of `n` interior nodes on `(x_left, x_right)`.
///
/// Grid functions are vectors of interior nodal values; they vanish at the two
/// end points and identically outside the interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D<T: Real> {
    x_left: T,
    x_right: T,
    n: usize,
}

impl<T: Real> Grid1D<T> {
    pub fn new(x_left: T, x_right: T, n: usize) -> Result<Self> {
        if !(x_left < x_right) || !x_left.is_finite() || !x_right.is_finite() {
            return Err(Error::InvalidParameter(format!("interval ({x_left}, {x_right}) is empty")));
        }
        if n < MIN_NODES {
            return Err(Error::InvalidParameter(format!("need at least {MIN_NODES} interior nodes, got {n}")));
        }
        Ok(Self { x_left, x_right, n })
    }

    pub fn x_left(&self) -> T {
        self.x_left
    }

    pub fn x_right(&self) -> T {
        self.x_right
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> T {
        (self.x_right - self.x_left) / T::from_usize(self.n + 1).unwrap()
    }

    /// Coordinate of interior node `i` (0-based).
    pub fn node(&self, i: usize) -> T {
        self.x_left + T::from_usize(i + 1).unwrap() * self.h()
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    pub fn midpoint(&self) -> T {
        (self.x_left + self.x_right) / T::lit(2.0)
    }

    pub fn contains(&self, x: T) -> bool {
        x > self.x_left && x < self.x_right
    }

    /// Interior node index mirrored about the midpoint.
    pub fn mirror(&self, i: usize) -> usize {
        self.n - 1 - i
    }

    /// Discrete `L^2` inner product `h Σ u_i v_i`.
    pub fn dot(&self, u: &[T], v: &[T]) -> T {
        self.h() * u.iter().zip(v).map(|(&a, &b)| a * b).sum::<T>()
    }

    pub fn norm(&self, u: &[T]) -> T {
        self.dot(u, u).sqrt()
    }

    pub fn check_len(&self, u: &[T]) -> Result<()> {
        if u.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: u.len() });
        }
        Ok(())
    }

    /// Samples `f` at the interior nodes.
    pub fn sample(&self, f: impl Fn(T) -> T) -> Vec<T> {
        (0..self.n).map(|i| f(self.node(i))).collect()
    }

    pub fn to_f64(&self) -> Grid1D<f64> {
        Grid1D { x_left: self.x_left.as_f64(), x_right: self.x_right.as_f64(), n: self.n }
    }
}
