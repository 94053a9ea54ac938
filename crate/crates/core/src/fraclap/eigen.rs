use super::linalg::Cholesky;
use super::StiffnessForm;
use crate::error::Result;
use crate::scalar::Real;

/// Default residual tolerance for the principal eigenpair.
pub const EIGEN_TOL: f64 = 1e-10;
/// Iteration cap of the inverse iteration.
pub const EIGEN_MAX_ITER: usize = 10_000;

/// Principal eigenpair of the form restricted to a mask.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult<T: Real> {
    /// Rayleigh value of `phi`.
    pub lambda: T,
    /// Full-grid eigenfunction, zero off the mask, unit discrete `L^2` norm.
    pub phi: Vec<T>,
    /// `‖A φ / h - λ φ‖` in the discrete `L^2` norm.
    pub residual_norm: T,
    pub iterations: usize,
    /// `false` when the iteration cap was hit; `phi` is then the best iterate.
    pub converged: bool,
}

/// Smallest eigenpair of `A φ = λ h φ` on the masked nodes, by inverse
/// iteration on a Cholesky factorization of the masked block.
pub fn smallest_eigenpair<T: Real>(form: &StiffnessForm<T>, mask: &[bool], tol: T) -> Result<EigenResult<T>> {
    let (idx, sub) = form.restrict(mask)?;
    let m = idx.len();
    let h = form.grid().h();
    let chol = Cholesky::factor(&sub, m)?;

    let norm = |v: &[T]| (h * v.iter().map(|&x| x * x).sum::<T>()).sqrt();
    let mul = |v: &[T]| -> Vec<T> { (0..m).map(|i| sub[i * m..(i + 1) * m].iter().zip(v).map(|(&a, &b)| a * b).sum()).collect() };

    let mut v = vec![T::one(); m];
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut best = (T::infinity(), v.clone(), T::zero());
    let mut iterations = 0;
    let mut converged = false;
    while iterations < EIGEN_MAX_ITER {
        iterations += 1;
        chol.solve_in_place(&mut v);
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);

        let av = mul(&v);
        let lambda = av.iter().zip(&v).map(|(&a, &b)| a * b).sum::<T>();
        let residual: Vec<T> = av.iter().zip(&v).map(|(&a, &b)| a / h - lambda * b).collect();
        let res = norm(&residual);
        if res < best.0 {
            best = (res, v.clone(), lambda);
        }
        if res <= tol {
            converged = true;
            break;
        }
    }

    let (residual_norm, mut local, lambda) = best;
    if local.iter().copied().sum::<T>() < T::zero() {
        local.iter_mut().for_each(|x| *x = -*x);
    }
    let peak = local.iter().fold(T::zero(), |acc, &x| acc.max(x));
    for x in local.iter_mut() {
        if *x < T::zero() && -*x <= T::lit(1e-12) * peak {
            *x = T::zero();
        }
    }
    let mut phi = vec![T::zero(); form.dim()];
    for (k, &i) in idx.iter().enumerate() {
        phi[i] = local[k];
    }
    if !converged {
        log::warn!("principal eigenpair: iteration cap reached with residual {residual_norm}");
    }
    Ok(EigenResult { lambda, phi, residual_norm, iterations, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::fraclap::assemble_form;
    use crate::grid::Grid1D;
    use crate::params::FracParams;

    fn form(s: f64, n: usize) -> StiffnessForm<f64> {
        let grid = Grid1D::new(-1.0, 1.0, n).unwrap();
        assemble_form(&grid, &FracParams::new(s).unwrap())
    }

    #[test]
    fn full_mask_eigenpair_is_consistent() {
        let f = form(0.5, 63);
        let e = smallest_eigenpair(&f, &[true; 63], EIGEN_TOL).unwrap();
        assert!(e.converged);
        assert!(e.residual_norm <= EIGEN_TOL);
        assert!((f.grid().norm(&e.phi) - 1.0).abs() < 1e-12);
        assert!(e.phi.iter().all(|&x| x >= 0.0));
        let r = f.rayleigh(&e.phi).unwrap();
        assert!((r - e.lambda).abs() <= e.residual_norm.max(1e-13 * r));
    }

    #[test]
    fn mirrored_half_masks_have_equal_eigenvalues() {
        let n = 64;
        let f = form(0.4, n);
        let left: Vec<bool> = (0..n).map(|i| i < n / 2).collect();
        let right: Vec<bool> = (0..n).map(|i| i >= n / 2).collect();
        let el = smallest_eigenpair(&f, &left, EIGEN_TOL).unwrap();
        let er = smallest_eigenpair(&f, &right, EIGEN_TOL).unwrap();
        assert!((el.lambda - er.lambda).abs() < 1e-10);
        for i in 0..n {
            assert!((el.phi[i] - er.phi[n - 1 - i]).abs() < 1e-8);
        }
    }

    #[test]
    fn empty_mask_is_rejected() {
        let f = form(0.5, 16);
        assert!(matches!(smallest_eigenpair(&f, &[false; 16], EIGEN_TOL), Err(Error::EmptyMask)));
        assert!(matches!(smallest_eigenpair(&f, &[true; 15], EIGEN_TOL), Err(Error::DimensionMismatch { .. })));
    }
}
