use rayon::prelude::*;

use super::{bulk, check_radius, common_a, ring, segment_integral, Field, QuadratureSettings, Rules};
use crate::error::{Error, Result};
use crate::params::FracParams;
use crate::quadrature::GaussRule;

/// Full-ball integrals about an interior centre, cumulative over radii:
/// `∫_{B_r} y^a |∇u|²`, and the sphere integrals `∫_0^{2π} y^a (u - u(X₀))² dφ`.
fn full_ball(
    fields: &[&dyn Field],
    x0: f64,
    y0: f64,
    radii: &[f64],
    settings: &QuadratureSettings,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let a = common_a(fields)?;
    let m = 4 * settings.angular_per_half;
    let phis: Vec<f64> = (0..m).map(|j| 2.0 * std::f64::consts::PI * j as f64 / m as f64).collect();
    let dphi = 2.0 * std::f64::consts::PI / m as f64;
    let u0: Vec<f64> = fields.iter().map(|f| f.sample(x0, y0).w).collect();
    let circle = |rho: f64| -> (f64, f64) {
        let mut grad = 0.0;
        let mut mass = 0.0;
        for &phi in &phis {
            let (x, y) = (x0 + rho * phi.cos(), y0 + rho * phi.sin());
            let ya = y.powf(a);
            for (f, &c) in fields.iter().zip(&u0) {
                let s = f.sample(x, y);
                grad += ya * s.wx * s.wx + s.q * s.q / ya;
                mass += ya * (s.w - c) * (s.w - c);
            }
        }
        (grad * dphi, mass * dphi)
    };
    let rule = GaussRule::legendre(settings.radial)?;
    let mut edges = vec![0.0];
    edges.extend_from_slice(radii);
    let pieces: Vec<f64> =
        edges.par_windows(2).map(|w| rule.mapped(w[0], w[1]).map(|(rho, wt)| wt * rho * circle(rho).0).sum()).collect();
    let mut acc = 0.0;
    let dirichlet = pieces
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    let spheres = radii.par_iter().map(|&r| circle(r).1).collect();
    Ok((dirichlet, spheres))
}

/// `N(X₀, r) = r ∫_{B_r} y^a |∇u|² / ∫_{∂B_r} y^a (u - u(X₀))² dσ` at each
/// radius, for `X₀ = (x₀, y₀)` with `y₀ > 0` and radii below `y₀/2`.
pub fn interior_frequency(
    fields: &[&dyn Field],
    x0: f64,
    y0: f64,
    radii: &[f64],
    settings: &QuadratureSettings,
) -> Result<Vec<Option<f64>>> {
    if !(y0 > 0.0) {
        return Err(Error::InvalidParameter(format!("interior centre needs y0 > 0, got {y0}")));
    }
    if radii.is_empty() || radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) || radii[radii.len() - 1] >= 0.5 * y0 {
        return Err(Error::OutOfRange(format!("radii must be increasing in (0, y0/2) with y0 = {y0}")));
    }
    let (d, m) = full_ball(fields, x0, y0, radii, settings)?;
    Ok(d.iter().zip(&m).map(|(&d, &m)| (m > super::H_FLOOR).then(|| d / m)).collect())
}

/// `Φ(X₀, r) = (y₀ + r)^{-a} r^{-2α*} ∫_{B_r} |y|^a |∇u|²`. Centres on the
/// trace line use the even reflection; centres above it need `r ≤ y₀`.
pub fn morrey_quotient(
    fields: &[&dyn Field],
    x0: f64,
    y0: f64,
    r: f64,
    alpha_star: f64,
    settings: &QuadratureSettings,
) -> Result<f64> {
    let a = common_a(fields)?;
    let energy = if y0 == 0.0 {
        check_radius(fields, x0, r)?;
        let rules = Rules::new(a, settings)?;
        2.0 * bulk(fields, x0, &[r], &rules).grad[0]
    } else if y0 > 0.0 && r > 0.0 && r < y0 {
        full_ball(fields, x0, y0, &[r], settings)?.0[0]
    } else {
        return Err(Error::OutOfRange(format!("ball of radius {r} about ({x0}, {y0}) leaves the half-plane")));
    };
    Ok((y0 + r).powf(-a) * r.powf(-2.0 * alpha_star) * energy)
}

/// Both trace inequalities at one ball:
/// `((1/r)∫|u|^p)^{2/p} ≲ r^{-a}∫_{B_r⁺} y^a|∇u|² + H(r)` and
/// `H(r) ≲ r^{-a}∫_{B_r⁺} y^a|∇u|² + ((1/r)∫|u|^p)^{2/p}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareRatios {
    pub p: f64,
    pub r: f64,
    pub trace_norm: f64,
    pub gradient: f64,
    pub height: f64,
    /// `trace_norm / (gradient + height)`; `None` when both sides vanish.
    pub trace_ratio: Option<f64>,
    /// `height / (gradient + trace_norm)`; `None` when both sides vanish.
    pub height_ratio: Option<f64>,
}

pub fn poincare_check(fields: &[&dyn Field], x0: f64, r: f64, p: f64, settings: &QuadratureSettings) -> Result<PoincareRatios> {
    let a = common_a(fields)?;
    let s = 0.5 * (1.0 - a);
    let p_star = FracParams::new(s)?.sobolev_exponent();
    if !(2.0..=p_star).contains(&p) {
        return Err(Error::OutOfRange(format!("exponent {p} outside [2, {p_star}]")));
    }
    check_radius(fields, x0, r)?;
    let rules = Rules::new(a, settings)?;
    let lp = segment_integral(fields, x0, r, &rules, |u| u.iter().map(|v| v * v).sum::<f64>().powf(0.5 * p));
    let trace_norm = (lp / r).powf(2.0 / p);
    let gradient = r.powf(-a) * bulk(fields, x0, &[r], &rules).grad[0];
    let height = ring(fields, x0, r, &rules).w2;
    let ratio = |num: f64, den: f64| if den > 0.0 { Some(num / den) } else { None };
    Ok(PoincareRatios {
        p,
        r,
        trace_norm,
        gradient,
        height,
        trace_ratio: ratio(trace_norm, gradient + height),
        height_ratio: ratio(height, gradient + trace_norm),
    })
}

/// Interior-energy growth bound between radii `r < R`:
/// `(1/r)∫_{B_r⁺} y^a|∇u|² ≤ C [(1/R)∫_{B_R⁺} y^a|∇u|² + R^{-2}∫_{∂⁺B_R⁺} y^a u² + R^{2s}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthFit {
    pub outer: f64,
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Largest ratio.
    pub constant: f64,
}

/// Evaluates the growth ratios at `radii` (each below `outer`).
pub fn growth_constant(
    fields: &[&dyn Field],
    x0: f64,
    radii: &[f64],
    outer: f64,
    settings: &QuadratureSettings,
) -> Result<GrowthFit> {
    if radii.is_empty() || radii.windows(2).any(|w| w[1] <= w[0]) || radii[radii.len() - 1] >= outer {
        return Err(Error::InvalidParameter("radii must increase and stay below the outer radius".into()));
    }
    for &r in radii {
        check_radius(fields, x0, r)?;
    }
    let a = common_a(fields)?;
    let s = 0.5 * (1.0 - a);
    let rules = Rules::new(a, settings)?;
    let mut all = radii.to_vec();
    all.push(outer);
    let d = bulk(fields, x0, &all, &rules).grad;
    let sphere = outer.powf(1.0 + a) * ring(fields, x0, outer, &rules).w2;
    let rhs = d[radii.len()] / outer + sphere / (outer * outer) + outer.powf(2.0 * s);
    let ratios: Vec<f64> = radii.iter().zip(&d).map(|(&r, &dr)| dr / r / rhs).collect();
    let constant = ratios.iter().copied().fold(0.0, f64::max);
    Ok(GrowthFit { outer, radii: radii.to_vec(), ratios, constant })
}
