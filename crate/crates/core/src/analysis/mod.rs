//! Free boundary extraction, Hölder exponent fits, the self-segregation
//! dichotomy at free-boundary points, and the optimal-partition report.

mod boundary;
mod partition;

pub use boundary::{
    dominant_labels, extract_free_boundary, free_boundary_from_samples, segregated_traces, supports, FreeBoundary, GammaSite,
    GAMMA_EPS,
};
pub use partition::{partition_result, segregated_extensions, AnalysisSettings, PartitionResult, EQUIVALENCE_TOL};

use crate::almgren::{
    frequency_profile, min_monotone_c, n_zero_plus, Field, FrequencyProfile, QuadratureSettings, Reaction, H_FLOOR,
};
use crate::error::{Error, Result};
use crate::extension::ExtensionEvaluator;
use crate::params::FracParams;

/// Smallest number of usable radii for a Hölder fit.
pub const HOLDER_MIN_RADII: usize = 8;
/// Fits with a lower coefficient of determination are flagged.
pub const HOLDER_MIN_R2: f64 = 0.98;
/// Half-width of the acceptance bands around `s` and `2s - 1`.
pub const DICHOTOMY_BAND: f64 = 0.05;

/// `α̂ = slope(log H, log r)/2` with its fit quality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderFit {
    pub alpha: f64,
    pub r_squared: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub points: usize,
    /// `r_squared` below [`HOLDER_MIN_R2`].
    pub flagged: bool,
}

/// Least-squares Hölder exponent from `H` samples; radii with
/// `H ≤` [`H_FLOOR`] are dropped.
pub fn holder_fit(radii: &[f64], h: &[f64]) -> Result<HolderFit> {
    let pts: Vec<(f64, f64, f64)> =
        radii.iter().zip(h).filter(|(_, &h)| h > H_FLOOR).map(|(&r, &h)| (r, r.ln(), h.ln())).collect();
    if pts.len() < HOLDER_MIN_RADII {
        return Err(Error::InvalidParameter(format!(
            "{} usable radii, at least {HOLDER_MIN_RADII} needed for a Hölder fit",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.2).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.1 - mx).powi(2)).sum();
    let syy: f64 = pts.iter().map(|p| (p.2 - my).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.1 - mx) * (p.2 - my)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(HolderFit {
        alpha: 0.5 * slope,
        r_squared,
        r_min: pts[0].0,
        r_max: pts[pts.len() - 1].0,
        points: pts.len(),
        flagged: r_squared < HOLDER_MIN_R2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Different densities on the two sides.
    TwoDensity,
    /// The same density on both sides of a zero.
    SelfSegregated,
    /// No usable frequency limit.
    Undetermined,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::TwoDensity => "two_density",
            Verdict::SelfSegregated => "self_segregated",
            Verdict::Undetermined => "undetermined",
        }
    }
}

/// Verdict from adjacency labels, and whether `N(0⁺)` agrees with it:
/// `N(0⁺) ≥ s - 0.05` for two densities, `s > 1/2` and `|N(0⁺) - (2s-1)| ≤ 0.05`
/// for self-segregation.
pub fn classify(site: &GammaSite, n0: Option<f64>, s: f64) -> (Verdict, bool) {
    let Some(n0) = n0 else {
        return (Verdict::Undetermined, false);
    };
    if site.same_label() {
        let ok = s > 0.5 && (n0 - (2.0 * s - 1.0)).abs() <= DICHOTOMY_BAND;
        (Verdict::SelfSegregated, ok)
    } else {
        (Verdict::TwoDensity, n0 >= s - DICHOTOMY_BAND)
    }
}

/// Frequency diagnostics at one free-boundary site.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteDiagnostics {
    pub site: GammaSite,
    pub profile: FrequencyProfile,
    /// Smallest monotonizing constant, `None` when [`crate::almgren::C_MAX`] fails.
    pub min_c: Option<f64>,
    pub n0: Option<f64>,
    pub holder: Option<HolderFit>,
    pub verdict: Verdict,
    /// `N(0⁺)` lies in the band its verdict predicts.
    pub consistent: bool,
}

/// Frequency profile about the site centre with `min_monotone_c`, `N(0⁺)`
/// extrapolated from the corrected frequency, the Hölder fit over the
/// [`HOLDER_MIN_RADII`] smallest radii and the verdict.
pub fn analyze_site(
    fields: &[&dyn Field],
    reaction: &Reaction,
    site: &GammaSite,
    radii: &[f64],
    settings: &QuadratureSettings,
    tau: f64,
) -> Result<SiteDiagnostics> {
    let s = 0.5 * (1.0 - fields[0].a());
    let profile = frequency_profile(fields, reaction, site.centre(), radii, settings, tau)?;
    let min_c = if profile.all_defined() { min_monotone_c(&profile)? } else { None };
    let n0 = n_zero_plus(&profile, min_c.unwrap_or(0.0));
    let window = HOLDER_MIN_RADII.min(radii.len());
    let holder = holder_fit(&profile.radii[..window], &profile.h[..window]).ok();
    let (verdict, consistent) = classify(site, n0, s);
    Ok(SiteDiagnostics { site: *site, profile, min_c, n0, holder, verdict, consistent })
}

/// Verdicts for sites whose `N(0⁺)` values are already known.
pub fn detect_self_segregation(sites: &[GammaSite], n0: &[Option<f64>], s: f64) -> Vec<(Verdict, bool)> {
    sites.iter().zip(n0).map(|(site, &n)| classify(site, n, s)).collect()
}

/// A single density `|x - x₀|^{2s-1} (1 - (x - x₀)²)²` on `[x₀ - 1, x₀ + 1]`:
/// two bumps of the same label meeting at `x₀`, on a mesh with `cells` cells
/// per side graded towards `x₀` with exponent `grading`.
pub fn two_bump_fixture(params: &FracParams<f64>, x0: f64, cells: usize, grading: f64) -> Result<ExtensionEvaluator> {
    let s = params.s();
    if !(s > 0.5) {
        return Err(Error::InvalidParameter(format!("self-segregated profiles need s > 1/2, got {s}")));
    }
    if cells < 2 || !(grading >= 1.0) {
        return Err(Error::InvalidParameter("fixture mesh needs cells ≥ 2 and grading ≥ 1".into()));
    }
    let side: Vec<f64> = (1..=cells).map(|j| (j as f64 / cells as f64).powf(grading)).collect();
    let mut offsets: Vec<f64> = side.iter().rev().map(|t| -t).collect();
    offsets.push(0.0);
    offsets.extend_from_slice(&side);
    let knots: Vec<f64> = offsets.iter().map(|t| x0 + t).collect();
    let values = offsets.iter().map(|t: &f64| t.abs().powf(2.0 * s - 1.0) * (1.0 - t * t).powi(2)).collect();
    ExtensionEvaluator::new(params, knots, values)
}

/// Default radii about a site: [`crate::almgren::DEFAULT_RADII`] geometric radii from four
/// resolution cells to half the distance to the domain boundary.
pub fn site_radii(centre: f64, resolution: f64, x_left: f64, x_right: f64) -> Result<Vec<f64>> {
    let dist = (centre - x_left).min(x_right - centre);
    crate::almgren::default_radii(resolution, dist)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_gives_its_exponent() {
        let radii: Vec<f64> = (0..12).map(|k| 1e-3 * 1.5f64.powi(k)).collect();
        let h: Vec<f64> = radii.iter().map(|r: &f64| 3.0 * r.powf(0.6)).collect();
        let fit = holder_fit(&radii, &h).unwrap();
        assert!((fit.alpha - 0.3).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12 && !fit.flagged);
        assert!(holder_fit(&radii[..7], &h[..7]).is_err());
    }

    #[test]
    fn noisy_power_law_is_flagged() {
        let radii: Vec<f64> = (0..10).map(|k| 1e-2 * 1.5f64.powi(k)).collect();
        let h: Vec<f64> = radii.iter().enumerate().map(|(k, r)| r.powf(0.5) * if k % 2 == 0 { 1.0 } else { 3.0 }).collect();
        assert!(holder_fit(&radii, &h).unwrap().flagged);
    }

    #[test]
    fn dichotomy_bands() {
        let two = GammaSite { lo: 0.0, hi: 0.0, left: 0, right: 1 };
        let same = GammaSite { lo: 0.0, hi: 0.0, left: 0, right: 0 };
        assert_eq!(classify(&two, Some(0.5), 0.5), (Verdict::TwoDensity, true));
        assert_eq!(classify(&two, Some(0.4), 0.5), (Verdict::TwoDensity, false));
        assert_eq!(classify(&same, Some(0.52), 0.75), (Verdict::SelfSegregated, true));
        assert_eq!(classify(&same, Some(0.0), 0.5), (Verdict::SelfSegregated, false));
        assert_eq!(classify(&two, None, 0.5).0, Verdict::Undetermined);
    }

    #[test]
    fn two_bump_fixture_is_self_segregated() {
        let p = FracParams::new(0.75).unwrap();
        let ev = two_bump_fixture(&p, 0.0, 200, 3.0).unwrap();
        let fb = free_boundary_from_samples(ev.knots(), &[ev.values()], GAMMA_EPS).unwrap();
        assert_eq!(fb.len(), 1);
        let site = fb.sites[0];
        assert!(site.same_label() && site.centre().abs() < 1e-12);
        let radii = crate::almgren::radius_grid(1e-3, 0.1, 12).unwrap();
        let d = analyze_site(&[&ev], &Reaction::none(1), &site, &radii, &QuadratureSettings::default(), 1.0).unwrap();
        assert_eq!(d.verdict, Verdict::SelfSegregated);
        assert!(d.consistent, "N(0+) = {:?}", d.n0);
        assert!(two_bump_fixture(&FracParams::new(0.5).unwrap(), 0.0, 10, 2.0).is_err());
    }
}
