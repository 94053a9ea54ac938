use super::{
    bulk, check_radius, check_reaction, common_a, reaction_integral, ring, segment_integral, Field, QuadratureSettings, Reaction,
    Rules,
};
use crate::error::{Error, Result};
use crate::extension::FieldSample;
use crate::io::{fmt_f64, Table};

/// Upper end of the correction constant search.
pub const C_MAX: f64 = 1e3;
/// Relative decrease tolerated between consecutive corrected samples.
pub const MONOTONE_SLACK: f64 = 1e-3;
const BISECTION_TOL: f64 = 1e-3;
/// Default number of radii.
pub const DEFAULT_RADII: usize = 24;
/// Exponent `τ` in `ψ` unless set otherwise.
pub const DEFAULT_TAU: f64 = 1.0;
/// Radii used to extrapolate `N(0⁺)`.
pub const EXTRAPOLATION_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrequencyMode {
    FreeBoundary,
    Interior,
    ZeroTrace,
    NeumannW,
}

impl FrequencyMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            FrequencyMode::FreeBoundary => "free_boundary",
            FrequencyMode::Interior => "interior",
            FrequencyMode::ZeroTrace => "zero_trace",
            FrequencyMode::NeumannW => "neumann_w",
        }
    }
}

/// `m` radii in geometric progression from `r_min` to `r_max`.
pub fn radius_grid(r_min: f64, r_max: f64, m: usize) -> Result<Vec<f64>> {
    if !(r_min > 0.0 && r_max > r_min && m >= 2) {
        return Err(Error::InvalidParameter(format!("radius grid [{r_min}, {r_max}] with {m} radii")));
    }
    let ratio = (r_max / r_min).ln() / (m - 1) as f64;
    let mut radii: Vec<f64> = (0..m).map(|k| r_min * (ratio * k as f64).exp()).collect();
    radii[m - 1] = r_max;
    Ok(radii)
}

/// [`DEFAULT_RADII`] radii spanning `[4h, dist/2]`, `dist` the distance to
/// the edge of the evaluated region.
pub fn default_radii(h: f64, dist: f64) -> Result<Vec<f64>> {
    radius_grid(super::MIN_RADIUS_CELLS * h, 0.5 * dist, DEFAULT_RADII)
        .map_err(|_| Error::OutOfRange(format!("no admissible radii between 4h = {} and {}", 4.0 * h, 0.5 * dist)))
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Debug, Clone)]
pub(crate) struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n);
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let del: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d = vec![del[0]; 2];
        } else {
            for k in 1..n - 1 {
                if del[k - 1] * del[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
                }
            }
            d[0] = end_slope(h[0], h[1], del[0], del[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
        }
        Self { x, y, d }
    }

    pub fn slopes(&self) -> &[f64] {
        &self.d
    }

    /// Coefficients `c₀ + c₁t + c₂t²` of the derivative on piece `k`.
    fn derivative_poly(&self, k: usize) -> [f64; 3] {
        let (x0, h) = (self.x[k], self.x[k + 1] - self.x[k]);
        let del = (self.y[k + 1] - self.y[k]) / h;
        let (d0, d1) = (self.d[k], self.d[k + 1]);
        // p'(x0 + δ) = d0 + b δ + c δ².
        let b = (6.0 * del - 4.0 * d0 - 2.0 * d1) / h;
        let c = (3.0 * d0 + 3.0 * d1 - 6.0 * del) / (h * h);
        [d0 - b * x0 + c * x0 * x0, b - 2.0 * c * x0, c]
    }

    /// `∫_{x_k}^{x_{k+1}} t^{-a} p'(t) dt` for every piece, in closed form.
    pub fn weighted_derivative_integrals(&self, a: f64) -> Vec<f64> {
        (0..self.x.len() - 1)
            .map(|k| {
                let (lo, hi) = (self.x[k], self.x[k + 1]);
                let c = self.derivative_poly(k);
                (0..3)
                    .map(|j| {
                        let e = j as f64 + 1.0 - a;
                        c[j] * (hi.powf(e) - lo.powf(e)) / e
                    })
                    .sum()
            })
            .collect()
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d * del0 <= 0.0 {
        0.0
    } else if del0 * del1 <= 0.0 && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

/// `ψ` and `Ψ` at each radius, with the fitted growth constants.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiSamples {
    pub tau: f64,
    pub psi: Vec<f64>,
    pub big_psi: Vec<f64>,
    /// `ψ` samples were not monotone and were replaced by their running maximum.
    pub flagged: bool,
    /// `max ψ(r)/r`.
    pub psi_constant: f64,
    /// `max Ψ(r)/r^{1-a}`.
    pub big_psi_constant: f64,
}

/// `ψ(r) = r ((1/r) ∫_{-r}^{r} |u|^{2+τ})^{τ/(2+τ)}` and
/// `Ψ(r) = ∫_0^r t^{-a} (1 + ψ'(t)) dt` through a monotone interpolant of `ψ`.
pub fn psi_big_psi(fields: &[&dyn Field], x0: f64, radii: &[f64], tau: f64, settings: &QuadratureSettings) -> Result<PsiSamples> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau = {tau} must be positive")));
    }
    check_increasing(radii)?;
    let a = common_a(fields)?;
    let rules = Rules::new(a, settings)?;
    let p = 2.0 + tau;
    let psi: Vec<f64> = radii
        .iter()
        .map(|&r| {
            let m = segment_integral(fields, x0, r, &rules, |u| u.iter().map(|v| v * v).sum::<f64>().powf(0.5 * p));
            r * (m / r).powf(tau / p)
        })
        .collect();
    let mut envelope = psi.clone();
    let mut flagged = false;
    for k in 1..envelope.len() {
        if envelope[k] < envelope[k - 1] {
            envelope[k] = envelope[k - 1];
            flagged = true;
        }
    }
    if flagged {
        log::warn!("psi is not monotone at x0 = {x0}; using its running maximum");
    }
    let mut xs = vec![0.0];
    xs.extend_from_slice(radii);
    let mut ys = vec![0.0];
    ys.extend_from_slice(&envelope);
    let spline = Pchip::new(xs, ys);
    let pieces = spline.weighted_derivative_integrals(a);
    let mut acc = 0.0;
    let big_psi: Vec<f64> = radii
        .iter()
        .zip(&pieces)
        .map(|(&r, &piece)| {
            acc += piece;
            r.powf(1.0 - a) / (1.0 - a) + acc
        })
        .collect();
    let psi_constant = radii.iter().zip(&psi).map(|(r, p)| p / r).fold(0.0, f64::max);
    let big_psi_constant = radii.iter().zip(&big_psi).map(|(r, p)| p / r.powf(1.0 - a)).fold(0.0, f64::max);
    Ok(PsiSamples { tau, psi, big_psi, flagged, psi_constant, big_psi_constant })
}

fn check_increasing(radii: &[f64]) -> Result<()> {
    if radii.is_empty() || radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("radii must be positive and strictly increasing".into()));
    }
    Ok(())
}

/// Per-radius frequency data about `(x₀, y₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyProfile {
    pub x0: f64,
    pub y0: f64,
    pub a: f64,
    pub mode: FrequencyMode,
    pub radii: Vec<f64>,
    /// `∫_{B_r⁺} y^a |∇u|²`.
    pub dirichlet: Vec<f64>,
    /// `∫_{-r}^{r} ⟨u, f(u)⟩`.
    pub reaction: Vec<f64>,
    pub e: Vec<f64>,
    pub h: Vec<f64>,
    /// `None` where `H ≤` [`H_FLOOR`](super::H_FLOOR).
    pub n: Vec<Option<f64>>,
    pub psi: PsiSamples,
}

impl FrequencyProfile {
    pub fn all_defined(&self) -> bool {
        self.n.iter().all(Option::is_some)
    }

    /// `(r, N(r))` where `N` is defined.
    pub fn defined(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.radii.iter().zip(&self.n).filter_map(|(&r, n)| n.map(|n| (r, n)))
    }

    /// CSV with columns `r, E, H, N, psi, Psi, corrected, mode`.
    pub fn table(&self, c: f64) -> Table {
        let corrected = corrected_frequency(self, c);
        let mut t = Table::new(&["r", "E", "H", "N", "psi", "Psi", "corrected", "mode"]);
        for k in 0..self.radii.len() {
            let n = self.n[k].unwrap_or(f64::NAN);
            let row = [self.radii[k], self.e[k], self.h[k], n, self.psi.psi[k], self.psi.big_psi[k], corrected[k]];
            let mut row: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
            row.push(self.mode.as_str().to_string());
            t.push(row);
        }
        t
    }

    /// `|2E/r - H'| / |H'|` at each radius, `H'` from a monotone interpolant.
    pub fn derivative_identity_errors(&self) -> Vec<f64> {
        let spline = Pchip::new(self.radii.clone(), self.h.clone());
        self.radii
            .iter()
            .zip(&self.e)
            .zip(spline.slopes())
            .map(|((&r, &e), &dh)| (2.0 * e / r - dh).abs() / dh.abs().max(f64::MIN_POSITIVE))
            .collect()
    }
}

fn profile_with(
    fields: &[&dyn Field],
    reaction: &Reaction,
    x0: f64,
    radii: &[f64],
    settings: &QuadratureSettings,
    tau: f64,
    mode: FrequencyMode,
) -> Result<FrequencyProfile> {
    check_increasing(radii)?;
    check_reaction(fields, reaction)?;
    for &r in radii {
        check_radius(fields, x0, r)?;
    }
    let a = common_a(fields)?;
    let rules = Rules::new(a, settings)?;
    let b = bulk(fields, x0, radii, &rules);
    let reaction_terms: Vec<f64> = radii.iter().map(|&r| reaction_integral(fields, reaction, x0, r, &rules)).collect();
    let h: Vec<f64> = radii.iter().map(|&r| ring(fields, x0, r, &rules).w2).collect();
    let e: Vec<f64> = radii.iter().zip(b.grad.iter().zip(&reaction_terms)).map(|(&r, (&d, &q))| r.powf(-a) * (d - q)).collect();
    let n = e.iter().zip(&h).map(|(&e, &h)| super::frequency_n(e, h)).collect();
    let psi = psi_big_psi(fields, x0, radii, tau, settings)?;
    Ok(FrequencyProfile {
        x0,
        y0: 0.0,
        a,
        mode,
        radii: radii.to_vec(),
        dirichlet: b.grad,
        reaction: reaction_terms,
        e,
        h,
        n,
        psi,
    })
}

/// Free-boundary profile about `(x₀, 0)` with reaction `f`.
pub fn frequency_profile(
    fields: &[&dyn Field],
    reaction: &Reaction,
    x0: f64,
    radii: &[f64],
    settings: &QuadratureSettings,
    tau: f64,
) -> Result<FrequencyProfile> {
    profile_with(fields, reaction, x0, radii, settings, tau, FrequencyMode::FreeBoundary)
}

/// Profile without reaction for a field whose trace vanishes on
/// `[x₀ - r_max, x₀ + r_max]`, up to `trace_tol`.
pub fn zero_trace_profile(
    field: &dyn Field,
    x0: f64,
    radii: &[f64],
    settings: &QuadratureSettings,
    trace_tol: f64,
) -> Result<FrequencyProfile> {
    check_increasing(radii)?;
    let r = radii[radii.len() - 1];
    let rules = Rules::new(field.a(), settings)?;
    let mut worst = 0.0f64;
    segment_integral(&[field], x0, r, &rules, |u| {
        worst = worst.max(u[0].abs());
        0.0
    });
    for x in [x0 - r, x0, x0 + r] {
        worst = worst.max(field.trace(x).abs());
    }
    if worst > trace_tol {
        return Err(Error::Precondition(format!("trace reaches {worst:e} on [{}, {}], above {trace_tol:e}", x0 - r, x0 + r)));
    }
    profile_with(&[field], &Reaction::none(1), x0, radii, settings, DEFAULT_TAU, FrequencyMode::ZeroTrace)
}

/// `w = u - u(X₀) + y^{1-a} f(u(X₀))/(1-a)` for a linear reaction `f(t) = c t`.
/// It satisfies `-y^a ∂_y w = c w` on the trace line wherever `-y^a ∂_y u = c u`.
pub(crate) struct NeumannShift<'a> {
    inner: &'a dyn Field,
    u0: f64,
    slope: f64,
}

impl Field for NeumannShift<'_> {
    fn a(&self) -> f64 {
        self.inner.a()
    }

    fn sample(&self, x: f64, y: f64) -> FieldSample {
        let s = self.inner.sample(x, y);
        let a = self.a();
        FieldSample { w: s.w - self.u0 + self.slope * y.powf(1.0 - a) / (1.0 - a), wx: s.wx, q: s.q + self.slope }
    }

    fn trace(&self, x: f64) -> f64 {
        self.inner.trace(x) - self.u0
    }

    fn breakpoints(&self) -> &[f64] {
        self.inner.breakpoints()
    }

    fn resolution(&self, x: f64) -> Option<f64> {
        self.inner.resolution(x)
    }
}

/// Frequency of the shifted field `w` about a point where the trace is
/// positive, with potential `V = c`. The trace must stay above `min_trace`
/// on `[x₀ - r_max, x₀ + r_max]`.
pub fn neumann_profile(
    field: &dyn Field,
    c: f64,
    x0: f64,
    radii: &[f64],
    settings: &QuadratureSettings,
    min_trace: f64,
) -> Result<FrequencyProfile> {
    check_increasing(radii)?;
    let r = radii[radii.len() - 1];
    let rules = Rules::new(field.a(), settings)?;
    let mut lowest = f64::INFINITY;
    segment_integral(&[field], x0, r, &rules, |u| {
        lowest = lowest.min(u[0]);
        0.0
    });
    for x in [x0 - r, x0, x0 + r] {
        lowest = lowest.min(field.trace(x));
    }
    if !(lowest > min_trace) {
        return Err(Error::Precondition(format!("trace drops to {lowest:e} on [{}, {}]", x0 - r, x0 + r)));
    }
    let u0 = field.trace(x0);
    let shifted = NeumannShift { inner: field, u0, slope: c * u0 };
    profile_with(&[&shifted], &Reaction::linear(vec![c]), x0, radii, settings, DEFAULT_TAU, FrequencyMode::NeumannW)
}

/// `e^{CΨ(r)} (N(r) + 1)`; `NaN` where `N` is undefined.
pub fn corrected_frequency(profile: &FrequencyProfile, c: f64) -> Vec<f64> {
    profile.n.iter().zip(&profile.psi.big_psi).map(|(n, &p)| n.map_or(f64::NAN, |n| (c * p).exp() * (n + 1.0))).collect()
}

fn is_monotone(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] >= w[0] - MONOTONE_SLACK * w[0].abs())
}

/// Monotonicity of `e^{CΨ}(N + 1)` up to [`MONOTONE_SLACK`], compared in
/// logarithms when `N + 1 > 0` so that large `CΨ` cannot overflow.
fn corrected_is_monotone(profile: &FrequencyProfile, c: f64) -> bool {
    let n: Vec<f64> = profile.n.iter().map(|n| n.unwrap_or(f64::NAN)).collect();
    if n.iter().all(|&n| n + 1.0 > 0.0) {
        let logs: Vec<f64> = n.iter().zip(&profile.psi.big_psi).map(|(&n, &p)| c * p + (n + 1.0).ln()).collect();
        let tol = (1.0 - MONOTONE_SLACK).ln();
        logs.windows(2).all(|w| w[1] >= w[0] + tol)
    } else {
        is_monotone(&corrected_frequency(profile, c))
    }
}

/// Smallest `C ∈ [0, C_MAX]` (to within `1e-3`) making the corrected
/// frequency nondecreasing up to [`MONOTONE_SLACK`]; `None` if `C_MAX` fails.
pub fn min_monotone_c(profile: &FrequencyProfile) -> Result<Option<f64>> {
    if !profile.all_defined() {
        return Err(Error::Precondition("frequency undefined at some radius".into()));
    }
    let ok = |c: f64| corrected_is_monotone(profile, c);
    if ok(0.0) {
        return Ok(Some(0.0));
    }
    if !ok(C_MAX) {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, C_MAX);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// `N(0⁺)` as the intercept at `r = 0` of the least-squares line through the
/// corrected frequency `e^{CΨ}(N + 1)` at the [`EXTRAPOLATION_POINTS`]
/// smallest radii where `N` is defined, minus one.
pub fn n_zero_plus(profile: &FrequencyProfile, c: f64) -> Option<f64> {
    let corrected = corrected_frequency(profile, c);
    let pts: Vec<(f64, f64)> = profile
        .radii
        .iter()
        .zip(&corrected)
        .filter(|(_, v)| v.is_finite())
        .map(|(&r, &v)| (r, v))
        .take(EXTRAPOLATION_POINTS)
        .collect();
    line_fit(&pts).map(|(intercept, _)| intercept - 1.0)
}

/// Least-squares `(intercept, slope)`; a single point gives a flat line.
pub(crate) fn line_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    match pts.len() {
        0 => None,
        1 => Some((pts[0].1, 0.0)),
        _ => {
            let m = pts.len() as f64;
            let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
            let (mx, my) = (sx / m, sy / m);
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let slope = sxy / sxx;
            Some((my - slope * mx, slope))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{AffineField, TransversePower};
    use super::*;
    use crate::extension::ExtensionEvaluator;
    use crate::params::FracParams;

    #[test]
    fn pchip_reproduces_monotone_data_and_integrates_exactly() {
        let x = vec![0.0, 0.5, 1.2, 2.0];
        let y: Vec<f64> = x.iter().map(|&t: &f64| 3.0 * t).collect();
        let p = Pchip::new(x.clone(), y);
        assert!(p.slopes().iter().all(|&d| (d - 3.0).abs() < 1e-14));
        let a = 0.3;
        let total: f64 = p.weighted_derivative_integrals(a).iter().sum();
        let exact = 3.0 * 2.0f64.powf(1.0 - a) / (1.0 - a);
        assert!((total - exact).abs() < 1e-12);
    }

    #[test]
    fn pchip_keeps_nonnegative_slopes() {
        let x = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let y = vec![0.0, 1.0, 1.0, 1.1, 5.0];
        let p = Pchip::new(x, y);
        assert!(p.slopes().iter().all(|&d| d >= 0.0));
        assert_eq!(p.slopes()[1], 0.0);
    }

    #[test]
    fn zero_trace_gives_explicit_big_psi() {
        let a = -0.4;
        let f = TransversePower::new(a);
        let radii = radius_grid(0.01, 1.0, 8).unwrap();
        let s = psi_big_psi(&[&f], 0.0, &radii, 1.0, &QuadratureSettings::default()).unwrap();
        for (k, &r) in radii.iter().enumerate() {
            assert_eq!(s.psi[k], 0.0);
            assert!((s.big_psi[k] - r.powf(1.0 - a) / (1.0 - a)).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_trace_psi_is_linear() {
        let f = AffineField::new(0.2, 2.0, 0.0, 0.0);
        let radii = radius_grid(0.1, 1.0, 6).unwrap();
        let tau = 1.0;
        let s = psi_big_psi(&[&f], 0.0, &radii, tau, &QuadratureSettings::default()).unwrap();
        // ψ(r) = r (2 · 2^{3})^{1/3}.
        let slope = 16.0f64.powf(1.0 / 3.0);
        for (k, &r) in radii.iter().enumerate() {
            assert!((s.psi[k] - slope * r).abs() < 1e-12);
            let exact = r.powf(0.8) / 0.8 * (1.0 + slope);
            assert!((s.big_psi[k] - exact).abs() < 1e-10 * exact);
        }
        assert!(!s.flagged);
        assert!((s.psi_constant - slope).abs() < 1e-12);
    }

    #[test]
    fn homogeneous_profile_is_monotone_without_correction() {
        let a = 0.5;
        let f = TransversePower::new(a);
        let radii = radius_grid(1e-3, 0.5, 12).unwrap();
        let p = frequency_profile(&[&f], &Reaction::none(1), 0.0, &radii, &QuadratureSettings::default(), 1.0).unwrap();
        assert_eq!(min_monotone_c(&p).unwrap(), Some(0.0));
        assert!((n_zero_plus(&p, 0.0).unwrap() - 0.5).abs() < 1e-9);
        assert!(p.derivative_identity_errors().iter().all(|&e| e < 1e-6));
        let t = p.table(0.0);
        assert_eq!(t.rows.len(), 12);
    }

    #[test]
    fn correction_repairs_a_decreasing_profile() {
        let mut p = {
            let f = TransversePower::new(0.0);
            let radii = radius_grid(0.01, 1.0, 10).unwrap();
            frequency_profile(&[&f], &Reaction::none(1), 0.0, &radii, &QuadratureSettings::default(), 1.0).unwrap()
        };
        for (k, n) in p.n.iter_mut().enumerate() {
            *n = Some(1.0 - 0.05 * k as f64);
        }
        let c = min_monotone_c(&p).unwrap().unwrap();
        assert!(c > 0.0);
        assert!(is_monotone(&corrected_frequency(&p, c)));
        assert!(is_monotone(&corrected_frequency(&p, 2.0 * c)));
        assert!(!is_monotone(&corrected_frequency(&p, c - 2e-3)));
        assert!(corrected_is_monotone(&p, C_MAX));
        assert!(corrected_is_monotone(&p, 1e6));
    }

    #[test]
    fn mode_preconditions() {
        let p = FracParams::new(0.5).unwrap();
        let knots: Vec<f64> = (0..=40).map(|i| -1.0 + 0.05 * i as f64).collect();
        let vals: Vec<f64> = knots.iter().map(|&x| if x > 0.2 { (x - 0.2) * (1.0 - x) } else { 0.0 }).collect();
        let ev = ExtensionEvaluator::new(&p, knots, vals).unwrap();
        let radii = radius_grid(0.2, 0.3, 4).unwrap();
        let settings = QuadratureSettings::default();
        assert!(zero_trace_profile(&ev, -0.3, &radii, &settings, 1e-12).is_ok());
        assert!(matches!(zero_trace_profile(&ev, 0.2, &radii, &settings, 1e-12), Err(Error::Precondition(_))));
        assert!(matches!(neumann_profile(&ev, 1.0, -0.3, &radii, &settings, 0.0), Err(Error::Precondition(_))));
        assert!(neumann_profile(&ev, 1.0, 0.6, &[0.2], &settings, 0.0).is_ok());
    }

    #[test]
    fn default_radii_span_the_window() {
        let r = default_radii(0.01, 1.0).unwrap();
        assert_eq!(r.len(), DEFAULT_RADII);
        assert!((r[0] - 0.04).abs() < 1e-15 && r[DEFAULT_RADII - 1] == 0.5);
        assert!(default_radii(0.1, 0.5).is_err());
    }
}
