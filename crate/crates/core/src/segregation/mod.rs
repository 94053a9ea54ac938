//! Penalized partition functional `J_β` over `k` unit-norm nonnegative
//! densities, its hard-constrained counterpart `J`, and the continuation
//! `β → ∞` towards segregated profiles.

mod optimize;

pub use optimize::{beta_continuation, minimize_stage, ContinuationSchedule, StageDiagnostics, StageRecord, StageStatus};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fraclap::StiffnessForm;
use crate::grid::Grid1D;
use crate::scalar::Real;

/// Default `‖uᵢuⱼ‖_{L¹}` threshold for `J` feasibility.
pub const SEGREGATION_TOL: f64 = 1e-6;
/// Default unit-norm tolerance for `J_β` feasibility.
pub const CONSTRAINT_TOL: f64 = 1e-9;

/// `k` grid functions on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityVector<T: Real> {
    grid: Grid1D<T>,
    comps: Vec<Vec<T>>,
}

impl<T: Real> DensityVector<T> {
    pub fn new(grid: Grid1D<T>, comps: Vec<Vec<T>>) -> Result<Self> {
        if comps.is_empty() {
            return Err(Error::InvalidParameter("a density vector needs at least one component".into()));
        }
        for c in &comps {
            grid.check_len(c)?;
        }
        Ok(Self { grid, comps })
    }

    pub fn k(&self) -> usize {
        self.comps.len()
    }

    pub fn grid(&self) -> &Grid1D<T> {
        &self.grid
    }

    pub fn component(&self, i: usize) -> &[T] {
        &self.comps[i]
    }

    pub fn components(&self) -> &[Vec<T>] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<Vec<T>> {
        self.comps
    }

    pub fn norms(&self) -> Vec<T> {
        self.comps.iter().map(|c| self.grid.norm(c)).collect()
    }

    /// Nonnegative with all norms within `tol` of one.
    pub fn is_feasible(&self, tol: T) -> bool {
        self.comps.iter().all(|c| c.iter().all(|&x| x >= T::zero())) && self.norms().iter().all(|&n| (n - T::one()).abs() <= tol)
    }

    /// Discrete `L²` distance `(Σᵢ ‖uᵢ - vᵢ‖²)^{1/2}`.
    pub fn distance(&self, other: &Self) -> Result<T> {
        self.check_same_shape(other)?;
        let h = self.grid.h();
        let sum = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<T>())
            .sum::<T>();
        Ok((h * sum).sqrt())
    }

    /// Largest pointwise difference over all components.
    pub fn sup_distance(&self, other: &Self) -> Result<T> {
        self.check_same_shape(other)?;
        Ok(self
            .comps
            .iter()
            .zip(&other.comps)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| (x - y).abs()))
            .fold(T::zero(), T::max))
    }

    /// Each component mirrored about the interval midpoint.
    pub fn reflected(&self) -> Self {
        let comps = self.comps.iter().map(|c| c.iter().rev().copied().collect()).collect();
        Self { grid: self.grid, comps }
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.k() != other.k() {
            return Err(Error::DimensionMismatch { expected: self.k(), found: other.k() });
        }
        if self.grid != other.grid {
            return Err(Error::InvalidParameter("density vectors live on different grids".into()));
        }
        Ok(())
    }
}

/// Penalty data of `J_β`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySpec<T: Real> {
    beta: T,
    coupling: Vec<T>,
    anchor: Option<DensityVector<T>>,
    cubic: Vec<T>,
}

impl<T: Real> PenaltySpec<T> {
    /// All-ones off-diagonal coupling, no anchor, no cubic term.
    pub fn new(k: usize, beta: T) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        check_beta(beta)?;
        let mut coupling = vec![T::one(); k * k];
        for i in 0..k {
            coupling[i * k + i] = T::zero();
        }
        Ok(Self { beta, coupling, anchor: None, cubic: vec![T::zero(); k] })
    }

    pub fn with_beta(&self, beta: T) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self { beta, ..self.clone() })
    }

    /// Row-major `k × k` coupling; must be symmetric, nonnegative, zero on the diagonal.
    pub fn with_coupling(mut self, coupling: Vec<T>) -> Result<Self> {
        let k = self.k();
        if coupling.len() != k * k {
            return Err(Error::DimensionMismatch { expected: k * k, found: coupling.len() });
        }
        for i in 0..k {
            if coupling[i * k + i] != T::zero() {
                return Err(Error::InvalidParameter(format!("coupling a[{i}][{i}] must be 0")));
            }
            for j in 0..k {
                let v = coupling[i * k + j];
                if !(v >= T::zero()) || v != coupling[j * k + i] {
                    return Err(Error::InvalidParameter(format!("coupling must be symmetric and nonnegative (a[{i}][{j}])")));
                }
            }
        }
        self.coupling = coupling;
        Ok(self)
    }

    /// Adds `Σᵢ ∫ e(uᵢ - ūᵢ)` with `e(t) = √(1 + t²)`.
    pub fn with_anchor(mut self, anchor: DensityVector<T>) -> Result<Self> {
        if anchor.k() != self.k() {
            return Err(Error::DimensionMismatch { expected: self.k(), found: anchor.k() });
        }
        self.anchor = Some(anchor);
        Ok(self)
    }

    /// Adds `Σᵢ mᵢ ∫ uᵢ³`.
    pub fn with_cubic(mut self, cubic: Vec<T>) -> Result<Self> {
        if cubic.len() != self.k() {
            return Err(Error::DimensionMismatch { expected: self.k(), found: cubic.len() });
        }
        if cubic.iter().any(|&m| !(m >= T::zero())) {
            return Err(Error::InvalidParameter("cubic weights must be nonnegative".into()));
        }
        self.cubic = cubic;
        Ok(self)
    }

    pub fn k(&self) -> usize {
        self.cubic.len()
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn coupling(&self, i: usize, j: usize) -> T {
        self.coupling[i * self.k() + j]
    }

    pub fn anchor(&self) -> Option<&DensityVector<T>> {
        self.anchor.as_ref()
    }

    pub fn cubic(&self) -> &[T] {
        &self.cubic
    }

    /// `Σ_{i<j} a_ij h Σ uᵢ² uⱼ²`.
    pub fn overlap(&self, u: &DensityVector<T>) -> T {
        weighted_overlap(u, |i, j| self.coupling(i, j))
    }

    fn check(&self, u: &DensityVector<T>, form: &StiffnessForm<T>) -> Result<()> {
        if u.k() != self.k() {
            return Err(Error::DimensionMismatch { expected: self.k(), found: u.k() });
        }
        if u.grid() != form.grid() {
            return Err(Error::InvalidParameter("densities and form live on different grids".into()));
        }
        if let Some(a) = &self.anchor {
            if a.grid() != u.grid() {
                return Err(Error::InvalidParameter("anchor lives on a different grid".into()));
            }
        }
        Ok(())
    }
}

fn check_beta<T: Real>(beta: T) -> Result<()> {
    if beta > T::zero() && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("beta must be positive and finite, got {beta}")))
    }
}

fn weighted_overlap<T: Real>(u: &DensityVector<T>, a: impl Fn(usize, usize) -> T) -> T {
    let h = u.grid().h();
    let mut total = T::zero();
    for i in 0..u.k() {
        for j in i + 1..u.k() {
            let aij = a(i, j);
            if aij == T::zero() {
                continue;
            }
            let s: T = u.comps[i].iter().zip(&u.comps[j]).map(|(&x, &y)| x * x * y * y).sum();
            total += aij * h * s;
        }
    }
    total
}

/// `Σ_{i<j} h Σ uᵢ² uⱼ²` with unit coupling.
pub fn overlap<T: Real>(u: &DensityVector<T>) -> T {
    weighted_overlap(u, |_, _| T::one())
}

fn anchor_e<T: Real>(t: T) -> T {
    (T::one() + t * t).sqrt()
}

/// Value of `J_β`; `+∞` when some `‖uᵢ‖` is off the unit sphere by more than
/// [`CONSTRAINT_TOL`].
pub fn j_beta_value<T: Real>(u: &DensityVector<T>, spec: &PenaltySpec<T>, form: &StiffnessForm<T>) -> Result<T> {
    spec.check(u, form)?;
    if u.norms().iter().any(|&n| (n - T::one()).abs() > T::lit(CONSTRAINT_TOL)) {
        return Ok(T::infinity());
    }
    penalized_energy(u, spec, form)
}

/// `J_β` without the feasibility check.
pub(crate) fn penalized_energy<T: Real>(u: &DensityVector<T>, spec: &PenaltySpec<T>, form: &StiffnessForm<T>) -> Result<T> {
    let h = form.grid().h();
    let mut total = T::zero();
    for (i, c) in u.comps.iter().enumerate() {
        total += form.energy(c)?;
        let m = spec.cubic[i];
        if m != T::zero() {
            total += m * h * c.iter().map(|&x| x * x * x).sum::<T>();
        }
        if let Some(a) = &spec.anchor {
            total += h * c.iter().zip(&a.comps[i]).map(|(&x, &y)| anchor_e(x - y)).sum::<T>();
        }
    }
    Ok(total + spec.beta * spec.overlap(u))
}

/// `Σᵢ [uᵢ]²` when `‖uᵢuⱼ‖_{L¹} = δᵢⱼ` within `tol`, `+∞` otherwise.
pub fn j_value<T: Real>(u: &DensityVector<T>, form: &StiffnessForm<T>, tol: T) -> Result<T> {
    if u.grid() != form.grid() {
        return Err(Error::InvalidParameter("densities and form live on different grids".into()));
    }
    let h = u.grid().h();
    for i in 0..u.k() {
        for j in i..u.k() {
            let l1 = h * u.comps[i].iter().zip(&u.comps[j]).map(|(&x, &y)| (x * y).abs()).sum::<T>();
            let target = if i == j { T::one() } else { T::zero() };
            if (l1 - target).abs() > tol {
                return Ok(T::infinity());
            }
        }
    }
    u.comps.iter().map(|c| form.energy(c)).sum()
}

/// Clamps each component at zero and rescales it to unit discrete norm.
pub fn project_spheres<T: Real>(u: &DensityVector<T>) -> Result<DensityVector<T>> {
    let comps = u
        .comps
        .iter()
        .enumerate()
        .map(|(i, c)| project_one(u.grid(), c).ok_or_else(|| Error::Degenerate(format!("component {i} has no positive part"))))
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityVector { grid: u.grid, comps })
}

fn project_one<T: Real>(grid: &Grid1D<T>, c: &[T]) -> Option<Vec<T>> {
    let clamped: Vec<T> = c.iter().map(|&x| x.max(T::zero())).collect();
    let n = grid.norm(&clamped);
    if !(n > T::zero()) || !n.is_finite() {
        return None;
    }
    Some(clamped.into_iter().map(|x| x / n).collect())
}

/// `L²(h)` gradient of `J_β` per component.
pub fn gradient<T: Real>(u: &DensityVector<T>, spec: &PenaltySpec<T>, form: &StiffnessForm<T>) -> Result<Vec<Vec<T>>> {
    spec.check(u, form)?;
    let h = form.grid().h();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let k = u.k();
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let au = form.multiply(&u.comps[i])?;
        let pot = coupling_potential(u, spec, i);
        let ui = &u.comps[i];
        let m = spec.cubic[i];
        let g = (0..ui.len())
            .map(|p| {
                let mut v = two * au[p] / h + two * spec.beta * pot[p] * ui[p];
                if m != T::zero() {
                    v += three * m * ui[p] * ui[p];
                }
                if let Some(a) = &spec.anchor {
                    let t = ui[p] - a.comps[i][p];
                    v += t / anchor_e(t);
                }
                v
            })
            .collect();
        out.push(g);
    }
    Ok(out)
}

/// `Σ_j a_ij uⱼ²` at every node, summed in index order.
pub(crate) fn coupling_potential<T: Real>(u: &DensityVector<T>, spec: &PenaltySpec<T>, i: usize) -> Vec<T> {
    let n = u.grid().len();
    let mut pot = vec![T::zero(); n];
    for j in 0..u.k() {
        let a = spec.coupling(i, j);
        if j == i || a == T::zero() {
            continue;
        }
        for (p, &x) in u.comps[j].iter().enumerate() {
            pot[p] += a * x * x;
        }
    }
    pot
}

/// Lagrange multipliers `λᵢ = ⟨gᵢ, uᵢ⟩/2` and the half-gradients projected on
/// the tangent space of the sphere, with components that push an already
/// clamped node below zero removed.
pub(crate) fn tangent_residuals<T: Real>(u: &DensityVector<T>, grad: &[Vec<T>]) -> (Vec<T>, Vec<Vec<T>>) {
    let grid = u.grid();
    let half = T::lit(0.5);
    let mut lambdas = Vec::with_capacity(u.k());
    let mut res = Vec::with_capacity(u.k());
    for (c, g) in u.comps.iter().zip(grad) {
        let lambda = half * grid.dot(g, c);
        let r = c
            .iter()
            .zip(g)
            .map(|(&x, &gi)| {
                let v = half * gi - lambda * x;
                if x <= T::zero() && v > T::zero() {
                    T::zero()
                } else {
                    v
                }
            })
            .collect();
        lambdas.push(lambda);
        res.push(r);
    }
    (lambdas, res)
}

/// Sphere-constraint multipliers `λᵢ`; at a critical point `uᵢ` solves
/// `A uᵢ/h + β Σ_j a_ij uⱼ² uᵢ + ... = λᵢ uᵢ`.
pub fn multipliers<T: Real>(u: &DensityVector<T>, spec: &PenaltySpec<T>, form: &StiffnessForm<T>) -> Result<Vec<T>> {
    let g = gradient(u, spec, form)?;
    Ok(tangent_residuals(u, &g).0)
}

/// Per-component Euler–Lagrange residual `‖A uᵢ/h + (penalty gradient)ᵢ/2 - λᵢ uᵢ‖`
/// relative to `‖uᵢ‖`, with active bound nodes excluded.
pub fn euler_lagrange_residuals<T: Real>(u: &DensityVector<T>, spec: &PenaltySpec<T>, form: &StiffnessForm<T>) -> Result<Vec<T>> {
    let g = gradient(u, spec, form)?;
    let (_, res) = tangent_residuals(u, &g);
    let grid = u.grid();
    Ok(res.iter().zip(&u.comps).map(|(r, c)| grid.norm(r) / grid.norm(c)).collect())
}

/// `k` Gaussian bumps with equispaced centres and standard deviation
/// `|Ω|/(3k)`, optionally multiplied by `1 + jitter·U(-1, 1)` from a seeded
/// generator, projected onto the unit spheres.
pub fn initial_bumps<T: Real>(grid: &Grid1D<T>, k: usize, jitter: f64, seed: u64) -> Result<DensityVector<T>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    if !(0.0..1.0).contains(&jitter) {
        return Err(Error::InvalidParameter(format!("jitter must lie in [0, 1), got {jitter}")));
    }
    let (xl, xr) = (grid.x_left().as_f64(), grid.x_right().as_f64());
    let len = xr - xl;
    let sigma = len / (3.0 * k as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comps = (0..k)
        .map(|i| {
            let centre = xl + (i as f64 + 0.5) * len / k as f64;
            (0..grid.len())
                .map(|p| {
                    let x = grid.node(p).as_f64();
                    let mut v = (-0.5 * ((x - centre) / sigma).powi(2)).exp();
                    if jitter > 0.0 {
                        v *= 1.0 + jitter * rng.gen_range(-1.0..1.0);
                    }
                    T::lit(v)
                })
                .collect()
        })
        .collect();
    project_spheres(&DensityVector::new(*grid, comps)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fraclap::assemble_form;
    use crate::params::FracParams;

    fn setup(n: usize) -> (Grid1D<f64>, StiffnessForm<f64>) {
        let grid = Grid1D::new(-1.0, 1.0, n).unwrap();
        let form = assemble_form(&grid, &FracParams::new(0.5).unwrap());
        (grid, form)
    }

    fn disjoint_pair(grid: &Grid1D<f64>) -> DensityVector<f64> {
        let left = grid.sample(|x| if x < -0.1 { (x + 1.0) * (-0.1 - x) } else { 0.0 });
        let right = grid.sample(|x| if x > 0.1 { (x - 0.1) * (1.0 - x) } else { 0.0 });
        project_spheres(&DensityVector::new(*grid, vec![left, right]).unwrap()).unwrap()
    }

    #[test]
    fn disjoint_supports_cost_only_their_energies() {
        let (grid, form) = setup(40);
        let u = disjoint_pair(&grid);
        assert_eq!(overlap(&u), 0.0);
        let spec = PenaltySpec::new(2, 1e3).unwrap();
        let jb = j_beta_value(&u, &spec, &form).unwrap();
        let sum = form.rayleigh(u.component(0)).unwrap() + form.rayleigh(u.component(1)).unwrap();
        assert!((jb - sum).abs() < 1e-12 * sum);
        let j = j_value(&u, &form, SEGREGATION_TOL).unwrap();
        assert!((j - sum).abs() < 1e-12 * sum);
    }

    #[test]
    fn coupling_term_matches_direct_sum() {
        let (grid, form) = setup(32);
        let bump = grid.sample(|x| (1.0 - x * x).powi(2));
        let u = project_spheres(&DensityVector::new(grid, vec![bump.clone(), bump]).unwrap()).unwrap();
        let h = grid.h();
        let direct: f64 = h * u.component(0).iter().map(|x| x.powi(4)).sum::<f64>();
        let spec = PenaltySpec::new(2, 10.0).unwrap();
        let jb = j_beta_value(&u, &spec, &form).unwrap();
        let energies = 2.0 * form.energy(u.component(0)).unwrap();
        assert!((jb - energies - 10.0 * direct).abs() < 1e-12 * jb);
        assert!(overlap(&u) > 0.0);
        assert!(j_value(&u, &form, SEGREGATION_TOL).unwrap().is_infinite());
        let weaker = spec.with_beta(1.0).unwrap();
        assert!(j_beta_value(&u, &weaker, &form).unwrap() <= jb);
    }

    #[test]
    fn infeasible_norm_gives_infinity() {
        let (grid, form) = setup(16);
        let u = DensityVector::new(grid, vec![vec![1.0; 16], vec![0.5; 16]]).unwrap();
        let spec = PenaltySpec::new(2, 1.0).unwrap();
        assert!(j_beta_value(&u, &spec, &form).unwrap().is_infinite());
        let bad = DensityVector::new(grid, vec![vec![1.0; 16]]).unwrap();
        assert!(matches!(j_beta_value(&bad, &spec, &form), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn projection_is_idempotent_and_scale_free() {
        let (grid, _) = setup(24);
        let u = initial_bumps::<f64>(&grid, 3, 0.2, 7).unwrap();
        let again = project_spheres(&u).unwrap();
        assert!(u.sup_distance(&again).unwrap() <= 1e-15);
        let scaled =
            DensityVector::new(grid, u.components().iter().map(|c| c.iter().map(|x| 3.7 * x).collect()).collect()).unwrap();
        assert!(project_spheres(&scaled).unwrap().sup_distance(&u).unwrap() <= 1e-15);
        let dead = DensityVector::new(grid, vec![vec![-1.0; 24]]).unwrap();
        assert!(matches!(project_spheres(&dead), Err(Error::Degenerate(_))));
    }

    #[test]
    fn gradient_matches_difference_quotients() {
        let (grid, form) = setup(20);
        let u = initial_bumps::<f64>(&grid, 2, 0.1, 3).unwrap();
        let anchor = initial_bumps::<f64>(&grid, 2, 0.3, 9).unwrap();
        let spec = PenaltySpec::new(2, 5.0).unwrap().with_cubic(vec![0.5, 1.5]).unwrap().with_anchor(anchor).unwrap();
        let g = gradient(&u, &spec, &form).unwrap();
        let h = grid.h();
        let eps = 1e-6;
        for (i, p) in [(0, 3), (1, 11), (0, 17)] {
            let bump = |d: f64| {
                let mut c = u.components().to_vec();
                c[i][p] += d;
                penalized_energy(&DensityVector::new(grid, c).unwrap(), &spec, &form).unwrap()
            };
            let fd = (bump(eps) - bump(-eps)) / (2.0 * eps) / h;
            assert!((fd - g[i][p]).abs() < 1e-5 * (1.0 + fd.abs()), "{fd} vs {}", g[i][p]);
        }
    }

    #[test]
    fn invalid_penalties_are_rejected() {
        assert!(PenaltySpec::<f64>::new(2, 0.0).is_err());
        let spec = PenaltySpec::<f64>::new(2, 1.0).unwrap();
        assert!(spec.clone().with_coupling(vec![0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(spec.clone().with_coupling(vec![1.0, 1.0, 1.0, 0.0]).is_err());
        assert!(spec.clone().with_cubic(vec![-1.0, 0.0]).is_err());
        assert!(spec.with_coupling(vec![0.0, 2.0, 2.0, 0.0]).is_ok());
    }

    #[test]
    fn bumps_are_symmetric_and_normalized() {
        let (grid, _) = setup(33);
        let u = initial_bumps::<f64>(&grid, 2, 0.0, 0).unwrap();
        assert!(u.is_feasible(1e-14));
        let r = u.reflected();
        assert!((0..33).all(|p| (r.component(0)[p] - u.component(1)[p]).abs() < 1e-15));
    }
}
