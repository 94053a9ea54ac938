use super::{
    analyze_site, extract_free_boundary, segregated_traces, site_radii, supports, FreeBoundary, SiteDiagnostics, GAMMA_EPS,
};
use crate::almgren::{Field, QuadratureSettings, Reaction};
use crate::error::{Error, Result};
use crate::extension::ExtensionEvaluator;
use crate::fraclap::{smallest_eigenpair, StiffnessForm, EIGEN_TOL};
use crate::params::FracParams;
use crate::segregation::DensityVector;

/// Largest accepted `|J - I| / I`.
pub const EQUIVALENCE_TOL: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisSettings {
    pub eps_gamma: f64,
    pub quadrature: QuadratureSettings,
    pub tau: f64,
    pub eigen_tol: f64,
    /// Compute frequency diagnostics at every free-boundary site.
    pub frequency: bool,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            eps_gamma: GAMMA_EPS,
            quadrature: QuadratureSettings::default(),
            tau: crate::almgren::DEFAULT_TAU,
            eigen_tol: EIGEN_TOL,
            frequency: true,
        }
    }
}

/// A segregated configuration read as an optimal partition.
#[derive(Debug, Clone)]
pub struct PartitionResult {
    pub densities: DensityVector<f64>,
    pub supports: Vec<Vec<bool>>,
    /// `λ₁,ₛ(ωᵢ)` recomputed on each support.
    pub set_eigenvalues: Vec<f64>,
    /// `I(ω) = Σ λ₁,ₛ(ωᵢ)`.
    pub i_value: f64,
    /// `Σ` of the Rayleigh quotients of the densities.
    pub j_value: f64,
    /// `|J - I| / I`.
    pub equivalence_error: f64,
    pub free_boundary: FreeBoundary,
    pub sites: Vec<SiteDiagnostics>,
}

impl PartitionResult {
    pub fn equivalent(&self) -> bool {
        self.equivalence_error <= EQUIVALENCE_TOL
    }
}

/// Extensions of the segregated traces of `u`.
pub fn segregated_extensions(u: &DensityVector<f64>, params: &FracParams<f64>) -> Result<Vec<ExtensionEvaluator>> {
    let (knots, traces) = segregated_traces(u);
    traces.into_iter().map(|v| ExtensionEvaluator::new(params, knots.clone(), v)).collect()
}

/// Recomputes the partition eigenvalues on the supports of `u` and, if
/// requested, the frequency diagnostics at each free-boundary site with the
/// reaction `fᵢ(t) = κλᵢt`, `λᵢ` the given multipliers. Frequencies are
/// evaluated on the extensions of the segregated traces (see
/// [`segregated_traces`]), which vanish exactly at two-density crossings.
pub fn partition_result(
    form: &StiffnessForm<f64>,
    u: &DensityVector<f64>,
    multipliers: &[f64],
    settings: &AnalysisSettings,
) -> Result<PartitionResult> {
    if multipliers.len() != u.k() {
        return Err(Error::DimensionMismatch { expected: u.k(), found: multipliers.len() });
    }
    let masks = supports(u, settings.eps_gamma);
    let mut set_eigenvalues = Vec::with_capacity(u.k());
    for mask in &masks {
        let eig = smallest_eigenpair(form, mask, settings.eigen_tol)?;
        if !eig.converged {
            return Err(Error::NotConverged {
                what: "support eigenvalue",
                iterations: eig.iterations,
                residual: eig.residual_norm,
            });
        }
        set_eigenvalues.push(eig.lambda);
    }
    let i_value: f64 = set_eigenvalues.iter().sum();
    let mut j_value = 0.0;
    for c in u.components() {
        j_value += form.rayleigh(c)?;
    }
    let free_boundary = extract_free_boundary(u, settings.eps_gamma)?;

    let mut sites = Vec::new();
    if settings.frequency && !free_boundary.is_empty() {
        let grid = u.grid();
        let params = form.params();
        let evs = segregated_extensions(u, params)?;
        let fields: Vec<&dyn Field> = evs.iter().map(|e| e as &dyn Field).collect();
        let reaction = Reaction::from_multipliers(multipliers, params.extension_scale());
        for site in &free_boundary.sites {
            let radii = site_radii(site.centre(), grid.h(), grid.x_left(), grid.x_right())?;
            sites.push(analyze_site(&fields, &reaction, site, &radii, &settings.quadrature, settings.tau)?);
        }
    }
    Ok(PartitionResult {
        densities: u.clone(),
        supports: masks,
        set_eigenvalues,
        i_value,
        j_value,
        equivalence_error: (j_value - i_value).abs() / i_value,
        free_boundary,
        sites,
    })
}
