use rayon::prelude::*;

use super::{coupling_potential, gradient, overlap, penalized_energy, project_one, tangent_residuals};
use super::{DensityVector, PenaltySpec};
use crate::error::{Error, Result};
use crate::fraclap::linalg::Cholesky;
use crate::fraclap::StiffnessForm;
use crate::scalar::Real;

/// Armijo sufficient-decrease constant.
const ARMIJO_C1: f64 = 1e-4;
/// Smallest trial step before the line search gives up.
const MIN_STEP: f64 = 1e-12;

/// How a stage ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageStatus {
    Converged,
    MaxIterations,
    LineSearchFailed,
}

impl StageStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::MaxIterations => "max_iterations",
            Self::LineSearchFailed => "line_search_failed",
        }
    }
}

/// Per-iteration history of one minimization stage; entry `t` describes the
/// iterate before step `t`, the last entry the returned iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct StageDiagnostics<T: Real> {
    pub beta: T,
    pub status: StageStatus,
    pub iterations: usize,
    pub energies: Vec<T>,
    pub overlaps: Vec<T>,
    pub grad_norms: Vec<T>,
    /// Accepted step lengths (one fewer than `energies`).
    pub steps: Vec<T>,
    /// Sphere multipliers `λᵢ` at the returned iterate.
    pub multipliers: Vec<T>,
}

impl<T: Real> StageDiagnostics<T> {
    pub fn converged(&self) -> bool {
        self.status == StageStatus::Converged
    }

    pub fn final_energy(&self) -> T {
        *self.energies.last().expect("at least one iterate")
    }

    pub fn final_grad_norm(&self) -> T {
        *self.grad_norms.last().expect("at least one iterate")
    }

    /// Largest increase `E_{t+1} - E_t` over the history (negative when strictly decreasing).
    pub fn max_energy_increase(&self) -> T {
        self.energies.windows(2).map(|w| w[1] - w[0]).fold(T::neg_infinity(), T::max)
    }
}

/// Geometric `β` schedule with per-stage stopping rules.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationSchedule<T: Real> {
    betas: Vec<T>,
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> ContinuationSchedule<T> {
    pub const DEFAULT_BETA0: f64 = 1.0;
    pub const DEFAULT_RATIO: f64 = 4.0;
    pub const DEFAULT_STAGES: usize = 10;
    pub const DEFAULT_TOL: f64 = 1e-8;
    pub const DEFAULT_MAX_ITER: usize = 5000;

    pub fn new(betas: Vec<T>, tol: T, max_iter: usize) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::InvalidParameter("empty beta schedule".into()));
        }
        if betas.iter().any(|&b| !(b > T::zero()) || !b.is_finite()) || betas.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("betas must be positive and strictly increasing".into()));
        }
        if !(tol > T::zero()) || max_iter == 0 {
            return Err(Error::InvalidParameter("stage tolerance and iteration cap must be positive".into()));
        }
        Ok(Self { betas, tol, max_iter })
    }

    pub fn geometric(beta0: T, ratio: T, stages: usize, tol: T, max_iter: usize) -> Result<Self> {
        if !(ratio > T::one()) {
            return Err(Error::InvalidParameter(format!("beta ratio must exceed 1, got {ratio}")));
        }
        let betas = (0..stages).map(|j| beta0 * ratio.powi(j as i32)).collect();
        Self::new(betas, tol, max_iter)
    }

    pub fn betas(&self) -> &[T] {
        &self.betas
    }
}

impl<T: Real> Default for ContinuationSchedule<T> {
    fn default() -> Self {
        Self::geometric(
            T::lit(Self::DEFAULT_BETA0),
            T::lit(Self::DEFAULT_RATIO),
            Self::DEFAULT_STAGES,
            T::lit(Self::DEFAULT_TOL),
            Self::DEFAULT_MAX_ITER,
        )
        .expect("default schedule is valid")
    }
}

/// Outcome of one continuation stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord<T: Real> {
    pub beta: T,
    pub densities: DensityVector<T>,
    /// Unit-coupling overlap `Σ_{i<j} h Σ uᵢ² uⱼ²`.
    pub overlap: T,
    pub j_beta: T,
    /// `‖u_β - u_{β_prev}‖` in discrete `L²` (absent for the first stage).
    pub drift: Option<T>,
    pub diagnostics: StageDiagnostics<T>,
}

fn retract<T: Real>(u: &DensityVector<T>, dir: &[Vec<T>], step: T) -> Option<DensityVector<T>> {
    let grid = u.grid();
    let comps = u
        .components()
        .iter()
        .zip(dir)
        .map(|(c, d)| {
            let moved: Vec<T> = c.iter().zip(d).map(|(&x, &dx)| x + step * dx).collect();
            project_one(grid, &moved)
        })
        .collect::<Option<Vec<_>>>()?;
    DensityVector::new(*grid, comps).ok()
}

/// Preconditioned directions `-Mᵢ⁻¹ rᵢ` with `Mᵢ = A/h + β diag(Σⱼ aᵢⱼ uⱼ²)`.
fn preconditioned<T: Real>(
    u: &DensityVector<T>,
    spec: &PenaltySpec<T>,
    form: &StiffnessForm<T>,
    res: &[Vec<T>],
) -> Result<Vec<Vec<T>>> {
    let n = form.dim();
    let h = form.grid().h();
    (0..u.k())
        .into_par_iter()
        .map(|i| {
            let pot = coupling_potential(u, spec, i);
            let mut m: Vec<T> = form.matrix().iter().map(|&a| a / h).collect();
            for p in 0..n {
                m[p * n + p] += spec.beta() * pot[p];
            }
            let chol = Cholesky::factor(&m, n)?;
            let mut d = res[i].clone();
            chol.solve_in_place(&mut d);
            Ok(d.into_iter().map(|x| -x).collect())
        })
        .collect()
}

/// Minimizes `J_β` over nonnegative unit-norm densities from `u0`.
///
/// Each iteration takes the preconditioned tangent residual as search
/// direction (a unit step is one sweep of nonlinear inverse iteration),
/// retracts by clamping at zero and renormalizing, and backtracks until the
/// Armijo condition holds. The stage stops when the projected gradient norm
/// `(Σᵢ ‖∇ᵢJ_β/2 - λᵢ uᵢ‖²)^{1/2}` falls to `tol`.
pub fn minimize_stage<T: Real>(
    u0: &DensityVector<T>,
    spec: &PenaltySpec<T>,
    form: &StiffnessForm<T>,
    tol: T,
    max_iter: usize,
) -> Result<(DensityVector<T>, StageDiagnostics<T>)> {
    spec.check(u0, form)?;
    let h = form.grid().h();
    let mut u = super::project_spheres(u0)?;
    let mut energy = penalized_energy(&u, spec, form)?;
    let mut diag = StageDiagnostics {
        beta: spec.beta(),
        status: StageStatus::MaxIterations,
        iterations: 0,
        energies: Vec::new(),
        overlaps: Vec::new(),
        grad_norms: Vec::new(),
        steps: Vec::new(),
        multipliers: Vec::new(),
    };
    let c1 = T::lit(ARMIJO_C1);
    let roundoff = T::lit(16.0) * T::epsilon();
    loop {
        let g = gradient(&u, spec, form)?;
        let (lambdas, res) = tangent_residuals(&u, &g);
        let gn = res.iter().map(|r| form.grid().dot(r, r)).sum::<T>().sqrt();
        diag.energies.push(energy);
        diag.overlaps.push(spec.overlap(&u));
        diag.grad_norms.push(gn);
        diag.multipliers = lambdas;
        if gn <= tol {
            diag.status = StageStatus::Converged;
            break;
        }
        if diag.iterations >= max_iter {
            break;
        }
        diag.iterations += 1;

        let mut dir = preconditioned(&u, spec, form, &res)?;
        let mut slope = T::lit(2.0) * h * dot_all(&res, &dir);
        if !(slope < T::zero()) {
            dir = res.iter().map(|r| r.iter().map(|&x| -x).collect()).collect();
            slope = T::lit(-2.0) * gn * gn;
        }
        let floor = roundoff * (energy.abs() + T::one());
        let mut accepted = None;
        for attempt in 0..2 {
            let mut step = T::one();
            while step >= T::lit(MIN_STEP) {
                if let Some(trial) = retract(&u, &dir, step) {
                    let e = penalized_energy(&trial, spec, form)?;
                    let armijo = e <= energy + c1 * step * slope;
                    let in_roundoff = (step * slope).abs() <= floor && e <= energy + floor;
                    if armijo || in_roundoff {
                        accepted = Some((trial, e, step));
                        break;
                    }
                }
                step *= T::lit(0.5);
            }
            if accepted.is_some() || attempt == 1 {
                break;
            }
            dir = res.iter().map(|r| r.iter().map(|&x| -x).collect()).collect();
            slope = T::lit(-2.0) * gn * gn;
        }
        match accepted {
            Some((trial, e, step)) => {
                debug_assert!(e <= energy + floor);
                u = trial;
                energy = e;
                diag.steps.push(step);
            }
            None => {
                diag.status = StageStatus::LineSearchFailed;
                log::warn!("beta = {}: line search failed at iteration {}", spec.beta(), diag.iterations);
                break;
            }
        }
    }
    if diag.status == StageStatus::MaxIterations {
        log::warn!("beta = {}: iteration cap {max_iter} reached with gradient norm {}", spec.beta(), diag.final_grad_norm());
    }
    Ok((u, diag))
}

fn dot_all<T: Real>(a: &[Vec<T>], b: &[Vec<T>]) -> T {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(&p, &q)| p * q).sum::<T>()).sum()
}

/// Warm-started minimization over the schedule, one stage per `β`.
/// Stages that stop without converging are kept and flagged in their
/// diagnostics; the continuation carries on from their best iterate.
pub fn beta_continuation<T: Real>(
    schedule: &ContinuationSchedule<T>,
    spec_base: &PenaltySpec<T>,
    form: &StiffnessForm<T>,
    u_init: &DensityVector<T>,
) -> Result<Vec<StageRecord<T>>> {
    let mut records: Vec<StageRecord<T>> = Vec::with_capacity(schedule.betas().len());
    let mut current = u_init.clone();
    for &beta in schedule.betas() {
        let spec = spec_base.with_beta(beta)?;
        let (u, diagnostics) = minimize_stage(&current, &spec, form, schedule.tol, schedule.max_iter)?;
        let drift = match records.last() {
            Some(prev) => Some(u.distance(&prev.densities)?),
            None => None,
        };
        log::info!(
            "beta = {beta}: {} after {} iterations, J = {}, overlap = {}",
            diagnostics.status.as_str(),
            diagnostics.iterations,
            diagnostics.final_energy(),
            overlap(&u)
        );
        records.push(StageRecord {
            beta,
            overlap: overlap(&u),
            j_beta: diagnostics.final_energy(),
            drift,
            densities: u.clone(),
            diagnostics,
        });
        current = u;
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::super::{euler_lagrange_residuals, initial_bumps};
    use super::*;
    use crate::fraclap::{assemble_form, smallest_eigenpair, EIGEN_TOL};
    use crate::grid::Grid1D;
    use crate::params::FracParams;

    fn form(s: f64, n: usize) -> StiffnessForm<f64> {
        assemble_form(&Grid1D::new(-1.0, 1.0, n).unwrap(), &FracParams::new(s).unwrap())
    }

    #[test]
    fn single_density_finds_the_principal_eigenpair() {
        let f = form(0.4, 96);
        let u0 = initial_bumps::<f64>(f.grid(), 1, 0.3, 11).unwrap();
        let spec = PenaltySpec::new(1, 1.0).unwrap();
        let (u, d) = minimize_stage(&u0, &spec, &f, 1e-10, 500).unwrap();
        assert!(d.converged(), "{:?}", d.status);
        let eig = smallest_eigenpair(&f, &[true; 96], EIGEN_TOL).unwrap();
        assert!((d.final_energy() - eig.lambda).abs() < 1e-9 * eig.lambda);
        assert!((d.multipliers[0] - eig.lambda).abs() < 1e-8 * eig.lambda);
        assert!(u.sup_distance(&DensityVector::new(*f.grid(), vec![eig.phi]).unwrap()).unwrap() < 1e-6);
        assert!(d.max_energy_increase() <= 1e-12);
    }

    #[test]
    fn stage_is_monotone_and_satisfies_euler_lagrange() {
        let f = form(0.5, 64);
        let u0 = initial_bumps::<f64>(f.grid(), 2, 0.0, 0).unwrap();
        let spec = PenaltySpec::new(2, 50.0).unwrap();
        let tol = 1e-9;
        let (u, d) = minimize_stage(&u0, &spec, &f, tol, 2000).unwrap();
        assert!(d.converged());
        assert!(d.max_energy_increase() <= 1e-12);
        for n in u.norms() {
            assert!((n - 1.0).abs() <= 1e-12);
        }
        for r in euler_lagrange_residuals(&u, &spec, &f).unwrap() {
            assert!(r <= 10.0 * tol, "{r}");
        }
        let sym = u.reflected();
        let swapped = DensityVector::new(*u.grid(), vec![sym.component(1).to_vec(), sym.component(0).to_vec()]).unwrap();
        assert!(u.sup_distance(&swapped).unwrap() < 1e-6);
    }

    #[test]
    fn continuation_separates_and_raises_the_minimum() {
        let f = form(0.5, 64);
        let u0 = initial_bumps::<f64>(f.grid(), 2, 0.0, 0).unwrap();
        let schedule = ContinuationSchedule::geometric(1.0, 4.0, 5, 1e-8, 3000).unwrap();
        let recs = beta_continuation(&schedule, &PenaltySpec::new(2, 1.0).unwrap(), &f, &u0).unwrap();
        assert_eq!(recs.len(), 5);
        for w in recs.windows(2) {
            assert!(w[1].overlap < w[0].overlap);
            assert!(w[1].j_beta >= w[0].j_beta - 2e-8);
        }
        assert!(recs[0].drift.is_none() && recs[4].drift.is_some());
    }

    #[test]
    fn schedules_validate() {
        assert!(ContinuationSchedule::<f64>::new(vec![1.0, 1.0], 1e-8, 10).is_err());
        assert!(ContinuationSchedule::<f64>::geometric(1.0, 0.5, 3, 1e-8, 10).is_err());
        let d = ContinuationSchedule::<f64>::default();
        assert_eq!(d.betas().len(), 10);
        assert_eq!(d.betas()[9], 4f64.powi(9));
    }

    #[test]
    fn single_precision_stage() {
        let grid = Grid1D::<f32>::new(-1.0, 1.0, 48).unwrap();
        let f = assemble_form(&grid, &FracParams::new(0.5f32).unwrap());
        let u0 = initial_bumps::<f32>(&grid, 2, 0.0, 0).unwrap();
        let (_, d) = minimize_stage(&u0, &PenaltySpec::new(2, 10.0f32).unwrap(), &f, 1e-3, 500).unwrap();
        assert!(d.converged());
    }
}
