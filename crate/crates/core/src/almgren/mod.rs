//! Frequency-type quantities of `L_a`-harmonic fields on half-balls centred on
//! the trace line: energy `E`, height `H`, frequency `N = E/H`, the auxiliary
//! functions `ψ, Ψ` and the corrected monotone quantity, Pohozaev residuals,
//! interior and zero-trace frequencies, Morrey quotients and trace
//! inequalities.
//!
//! Half-ball integrals are computed in polar coordinates `(ρ, θ)` about
//! `(x₀, 0)`. With `q = y^a ∂_y w`, the weighted Dirichlet density splits as
//! `y^a |∇w|² = ρ^a sin^a θ · w_x² + ρ^{-a} sin^{-a} θ · q²`, and each angular
//! integral uses a Gauss–Jacobi rule that absorbs its own power of `sin θ`.
//! Radial integrals use Gauss–Legendre on geometric annuli down to a fraction
//! of the field's resolution.

mod balls;
mod fields;
mod frequency;
mod pohozaev;

pub use balls::{growth_constant, interior_frequency, morrey_quotient, poincare_check, GrowthFit, PoincareRatios};
pub use fields::{AffineField, RadialPower, TransversePower};
pub use frequency::{
    corrected_frequency, default_radii, frequency_profile, min_monotone_c, n_zero_plus, neumann_profile, psi_big_psi,
    radius_grid, zero_trace_profile, FrequencyMode, FrequencyProfile, PsiSamples, C_MAX, DEFAULT_RADII, DEFAULT_TAU,
    EXTRAPOLATION_POINTS, MONOTONE_SLACK,
};
pub use pohozaev::{pohozaev_residual, PohozaevReport};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::extension::{ExtensionEvaluator, FieldSample};
use crate::quadrature::{GaussRule, SineRule};

/// `H` values at or below this are treated as zero.
pub const H_FLOOR: f64 = 1e-14;
/// Smallest admissible radius in units of the field resolution.
pub const MIN_RADIUS_CELLS: f64 = 4.0;

/// An `L_a`-harmonic field on the upper half-plane.
pub trait Field: Sync {
    /// Exponent `a` of the weight.
    fn a(&self) -> f64;
    /// `w`, `∂ₓw` and `y^a ∂_y w` at `(x, y)` with `y > 0`.
    fn sample(&self, x: f64, y: f64) -> FieldSample;
    /// Boundary value at `(x, 0)`.
    fn trace(&self, x: f64) -> f64;
    /// Points where the trace is not smooth.
    fn breakpoints(&self) -> &[f64] {
        &[]
    }
    /// Length scale below which the field is smooth near `x` (if finite).
    fn resolution(&self, _x: f64) -> Option<f64> {
        None
    }
}

impl Field for ExtensionEvaluator {
    fn a(&self) -> f64 {
        ExtensionEvaluator::a(self)
    }

    fn sample(&self, x: f64, y: f64) -> FieldSample {
        self.sample_unchecked(x, y)
    }

    fn trace(&self, x: f64) -> f64 {
        ExtensionEvaluator::trace(self, x)
    }

    fn breakpoints(&self) -> &[f64] {
        self.knots()
    }

    fn resolution(&self, x: f64) -> Option<f64> {
        Some(self.local_width(x))
    }
}

/// Linear boundary reactions `fᵢ(t) = cᵢ t`, `Fᵢ(t) = cᵢ t²/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    coefficients: Vec<f64>,
}

impl Reaction {
    pub fn none(k: usize) -> Self {
        Self { coefficients: vec![0.0; k] }
    }

    pub fn linear(coefficients: Vec<f64>) -> Self {
        Self { coefficients }
    }

    /// `fᵢ(t) = κ λᵢ t` for multipliers of the discrete problem, `κ` the
    /// extension scale of the form normalization.
    pub fn from_multipliers(lambdas: &[f64], extension_scale: f64) -> Self {
        Self::linear(lambdas.iter().map(|l| extension_scale * l).collect())
    }

    pub fn k(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn f(&self, i: usize, t: f64) -> f64 {
        self.coefficients[i] * t
    }

    pub fn big_f(&self, i: usize, t: f64) -> f64 {
        0.5 * self.coefficients[i] * t * t
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|&c| c == 0.0)
    }
}

/// Quadrature orders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    /// Angular nodes on each half of `[0, π]`.
    pub angular_per_half: usize,
    /// Radial Gauss nodes per annulus.
    pub radial: usize,
    /// Gauss nodes per smooth piece of a trace segment.
    pub segment: usize,
    /// Innermost radius is the field resolution divided by this.
    pub core_fraction: f64,
    /// Annuli below the smallest radius for fields without a resolution.
    pub core_depth: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self { angular_per_half: 32, radial: 32, segment: 8, core_fraction: 16.0, core_depth: 80 }
    }
}

impl QuadratureSettings {
    /// Every order multiplied by `factor`.
    pub fn scaled(&self, factor: usize) -> Self {
        Self {
            angular_per_half: self.angular_per_half * factor,
            radial: self.radial * factor,
            segment: self.segment * factor,
            ..*self
        }
    }
}

pub(crate) struct Rules {
    pub a: f64,
    pub sin_a: SineRule,
    pub sin_neg_a: SineRule,
    pub theta: Vec<(f64, f64)>,
    pub radial: GaussRule,
    pub segment: GaussRule,
    pub settings: QuadratureSettings,
}

impl Rules {
    pub fn new(a: f64, settings: &QuadratureSettings) -> Result<Self> {
        let legendre = GaussRule::legendre(2 * settings.angular_per_half)?;
        let theta = legendre.mapped(0.0, std::f64::consts::PI).collect();
        Ok(Self {
            a,
            sin_a: SineRule::new(a, settings.angular_per_half)?,
            sin_neg_a: SineRule::new(-a, settings.angular_per_half)?,
            theta,
            radial: GaussRule::legendre(settings.radial)?,
            segment: GaussRule::legendre(settings.segment)?,
            settings: *settings,
        })
    }
}

pub(crate) fn common_a(fields: &[&dyn Field]) -> Result<f64> {
    let first = fields.first().ok_or_else(|| Error::InvalidParameter("no fields given".into()))?;
    let a = first.a();
    if fields.iter().any(|f| (f.a() - a).abs() > 1e-14) {
        return Err(Error::InvalidParameter("fields use different weights".into()));
    }
    Ok(a)
}

/// Angular integrals on the half-circle of radius `ρ` about `(x₀, 0)`:
/// `∫ sin^a Σ w_x²`, `∫ sin^{-a} Σ q²`, `∫ sin^a Σ w²`.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Ring {
    pub wx2: f64,
    pub q2: f64,
    pub w2: f64,
}

pub(crate) fn ring(fields: &[&dyn Field], x0: f64, rho: f64, rules: &Rules) -> Ring {
    let mut out = Ring::default();
    for (&t, &wt) in rules.sin_a.theta.iter().zip(&rules.sin_a.weights) {
        let (x, y) = (x0 + rho * t.cos(), rho * t.sin());
        for f in fields {
            let s = f.sample(x, y);
            out.wx2 += wt * s.wx * s.wx;
            out.w2 += wt * s.w * s.w;
        }
    }
    for (&t, &wt) in rules.sin_neg_a.theta.iter().zip(&rules.sin_neg_a.weights) {
        let (x, y) = (x0 + rho * t.cos(), rho * t.sin());
        for f in fields {
            let s = f.sample(x, y);
            out.q2 += wt * s.q * s.q;
        }
    }
    out
}

/// Cumulative half-ball integrals `∫_{B_r⁺} y^a |∇u|²` and `∫_{B_r⁺} y^a u²`
/// at each radius of an increasing list.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Bulk {
    pub grad: Vec<f64>,
    pub mass: Vec<f64>,
}

pub(crate) fn bulk(fields: &[&dyn Field], x0: f64, radii: &[f64], rules: &Rules) -> Bulk {
    let a = rules.a;
    let r0 = radii[0];
    let core = match fields.iter().filter_map(|f| f.resolution(x0)).reduce(f64::min) {
        Some(res) => (res / rules.settings.core_fraction).min(0.5 * r0),
        None => r0 * 0.5f64.powi(rules.settings.core_depth as i32),
    };
    let mut edges = vec![0.0, core];
    let mut e = core;
    while 2.0 * e < r0 {
        e *= 2.0;
        edges.push(e);
    }
    let inner_segments = edges.len();
    edges.extend_from_slice(radii);
    let nodes: Vec<(usize, f64, f64)> = edges
        .windows(2)
        .enumerate()
        .flat_map(|(k, w)| rules.radial.mapped(w[0], w[1]).map(move |(rho, wt)| (k, rho, wt)).collect::<Vec<_>>())
        .collect();
    let values: Vec<(usize, f64, f64)> = nodes
        .par_iter()
        .map(|&(k, rho, wt)| {
            let r = ring(fields, x0, rho, rules);
            let grad = wt * (rho.powf(1.0 + a) * r.wx2 + rho.powf(1.0 - a) * r.q2);
            let mass = wt * rho.powf(1.0 + a) * r.w2;
            (k, grad, mass)
        })
        .collect();
    let segments = edges.len() - 1;
    let mut seg_grad = vec![0.0; segments];
    let mut seg_mass = vec![0.0; segments];
    for (k, g, m) in values {
        seg_grad[k] += g;
        seg_mass[k] += m;
    }
    // Segment `inner_segments - 1` ends at radii[0].
    let mut grad = Vec::with_capacity(radii.len());
    let mut mass = Vec::with_capacity(radii.len());
    let (mut g, mut m) = (0.0, 0.0);
    for k in 0..segments {
        g += seg_grad[k];
        m += seg_mass[k];
        if k + 1 >= inner_segments {
            grad.push(g);
            mass.push(m);
        }
    }
    Bulk { grad, mass }
}

/// `∫_{x₀-r}^{x₀+r} g(u₁(x), …, u_k(x)) dx`, split at trace breakpoints.
pub(crate) fn segment_integral(fields: &[&dyn Field], x0: f64, r: f64, rules: &Rules, mut g: impl FnMut(&[f64]) -> f64) -> f64 {
    let (lo, hi) = (x0 - r, x0 + r);
    let mut edges = vec![lo, x0, hi];
    for f in fields {
        edges.extend(f.breakpoints().iter().copied().filter(|&b| b > lo && b < hi));
    }
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let mut vals = vec![0.0; fields.len()];
    let mut total = 0.0;
    for w in edges.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        for (x, wt) in rules.segment.mapped(w[0], w[1]) {
            for (v, f) in vals.iter_mut().zip(fields) {
                *v = f.trace(x);
            }
            total += wt * g(&vals);
        }
    }
    total
}

pub(crate) fn check_radius(fields: &[&dyn Field], x0: f64, r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::OutOfRange(format!("radius {r} must be positive")));
    }
    for f in fields {
        if let Some(res) = f.resolution(x0) {
            if r < MIN_RADIUS_CELLS * res * (1.0 - 1e-12) {
                return Err(Error::OutOfRange(format!("radius {r} is below {MIN_RADIUS_CELLS} cells ({res}) of the trace")));
            }
        }
    }
    Ok(())
}

/// `E(r) = r^{-a} [∫_{B_r⁺} y^a |∇u|² - ∫_{-r}^{r} ⟨u, f(u)⟩]` about `(x₀, 0)`.
pub fn energy_e(fields: &[&dyn Field], reaction: &Reaction, x0: f64, r: f64, settings: &QuadratureSettings) -> Result<f64> {
    check_radius(fields, x0, r)?;
    check_reaction(fields, reaction)?;
    let rules = Rules::new(common_a(fields)?, settings)?;
    let b = bulk(fields, x0, &[r], &rules);
    let react = reaction_integral(fields, reaction, x0, r, &rules);
    Ok(r.powf(-rules.a) * (b.grad[0] - react))
}

/// `H(r) = r^{-1-a} ∫_{∂⁺B_r⁺} y^a u² dσ = ∫_0^π sin^a θ u² dθ`.
pub fn height_h(fields: &[&dyn Field], x0: f64, r: f64, settings: &QuadratureSettings) -> Result<f64> {
    check_radius(fields, x0, r)?;
    let rules = Rules::new(common_a(fields)?, settings)?;
    Ok(ring(fields, x0, r, &rules).w2)
}

/// `E/H`, or `None` when `H ≤` [`H_FLOOR`].
pub fn frequency_n(e: f64, h: f64) -> Option<f64> {
    (h > H_FLOOR).then(|| e / h)
}

pub(crate) fn check_reaction(fields: &[&dyn Field], reaction: &Reaction) -> Result<()> {
    if reaction.k() != fields.len() {
        return Err(Error::DimensionMismatch { expected: fields.len(), found: reaction.k() });
    }
    Ok(())
}

pub(crate) fn reaction_integral(fields: &[&dyn Field], reaction: &Reaction, x0: f64, r: f64, rules: &Rules) -> f64 {
    if reaction.is_zero() {
        return 0.0;
    }
    segment_integral(fields, x0, r, rules, |u| u.iter().enumerate().map(|(i, &v)| v * reaction.f(i, v)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::sine_power_integral;

    #[test]
    fn transverse_power_has_frequency_two_s() {
        for &s in &[0.25, 0.5, 0.75] {
            let a = 1.0 - 2.0 * s;
            let f = TransversePower::new(a);
            let fields: [&dyn Field; 1] = [&f];
            let settings = QuadratureSettings::default();
            for &r in &[1e-3, 0.1, 2.0] {
                let e = energy_e(&fields, &Reaction::none(1), 0.3, r, &settings).unwrap();
                let h = height_h(&fields, 0.3, r, &settings).unwrap();
                let n = frequency_n(e, h).unwrap();
                assert!((n - 2.0 * s).abs() < 1e-9, "s={s} r={r}: {n}");
            }
        }
    }

    #[test]
    fn constant_field_height_is_the_sine_integral() {
        let a = 0.4;
        let f = AffineField::new(a, 1.0, 0.0, 0.0);
        let fields: [&dyn Field; 1] = [&f];
        let settings = QuadratureSettings::default();
        let h = height_h(&fields, 0.0, 0.7, &settings).unwrap();
        assert!((h - sine_power_integral(a)).abs() < 1e-13);
        assert_eq!(height_h(&fields, 0.0, 0.01, &settings).unwrap(), h);
        let e = energy_e(&fields, &Reaction::none(1), 0.0, 0.7, &settings).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn bulk_is_cumulative_over_radii() {
        let f = RadialPower::new(-0.5);
        let fields: [&dyn Field; 1] = [&f];
        let rules = Rules::new(-0.5, &QuadratureSettings::default()).unwrap();
        let radii = [0.1, 0.2, 0.4];
        let b = bulk(&fields, 0.0, &radii, &rules);
        // r^{-a} = r^{1/2}: |∇u|² = r^{-1}/4, ∫ y^a |∇u|² = (1/4) S_a ∫ ρ^{a} dρ = S_a r^{1+a} / (4(1+a)).
        let s_a = sine_power_integral(-0.5);
        for (k, &r) in radii.iter().enumerate() {
            let exact = s_a * r.powf(0.5) / (4.0 * 0.5);
            assert!((b.grad[k] - exact).abs() < 1e-6 * exact, "{} vs {exact}", b.grad[k]);
        }
    }

    #[test]
    fn segment_integral_of_piecewise_linear_trace_is_exact() {
        let p = crate::params::FracParams::new(0.5).unwrap();
        let ev = ExtensionEvaluator::new(&p, vec![-1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]).unwrap();
        let fields: [&dyn Field; 1] = [&ev];
        let rules = Rules::new(0.0, &QuadratureSettings::default()).unwrap();
        let v = segment_integral(&fields, 0.25, 0.5, &rules, |u| u[0] * u[0]);
        let exact = {
            let f = |x: f64| -(1.0 - x).powi(3) / 3.0;
            let g = |x: f64| (1.0 + x).powi(3) / 3.0;
            (g(0.0) - g(-0.25)) + (f(0.75) - f(0.0))
        };
        assert!((v - exact).abs() < 1e-14);
    }

    #[test]
    fn radius_checks() {
        let p = crate::params::FracParams::new(0.5).unwrap();
        let ev = ExtensionEvaluator::new(&p, vec![-1.0, -0.5, 0.0, 0.5, 1.0], vec![0.0, 0.5, 1.0, 0.5, 0.0]).unwrap();
        let fields: [&dyn Field; 1] = [&ev];
        assert!(height_h(&fields, 0.0, 1.0, &QuadratureSettings::default()).is_err());
        assert!(height_h(&fields, 0.0, 2.0, &QuadratureSettings::default()).is_ok());
        assert!(frequency_n(1.0, 0.0).is_none());
    }
}
