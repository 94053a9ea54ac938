use rayon::prelude::*;

use super::{bulk, check_radius, check_reaction, common_a, Field, QuadratureSettings, Reaction, Rules};
use crate::error::Result;
use crate::io::Table;

/// Terms of the Pohozaev identity on `B_r⁺(x₀, 0)`:
/// `bulk + sphere + flat + corners = radial`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PohozaevReport {
    pub x0: f64,
    pub r: f64,
    /// `(1 - a - n) ∫_{B_r⁺} y^a |∇u|²`.
    pub bulk: f64,
    /// `r ∫_{∂⁺B_r⁺} y^a |∇u|²`.
    pub sphere: f64,
    /// `2n ∫_{-r}^{r} Σ Fᵢ(uᵢ)`.
    pub flat: f64,
    /// `-2r Σ Fᵢ(uᵢ(x₀ ± r))`, summed over both endpoints.
    pub corners: f64,
    /// `2r ∫_{∂⁺B_r⁺} y^a (∂_r u)²`.
    pub radial: f64,
    pub residual: f64,
    pub scale: f64,
    pub normalized: f64,
}

impl PohozaevReport {
    pub const COLUMNS: [&'static str; 8] =
        ["r", "bulk", "sphere", "flat", "corners", "radial", "residual", "normalized_residual"];

    pub fn row(&self) -> [f64; 8] {
        [self.r, self.bulk, self.sphere, self.flat, self.corners, self.radial, self.residual, self.normalized]
    }

    pub fn table(reports: &[PohozaevReport]) -> Table {
        let mut t = Table::new(&Self::COLUMNS);
        for r in reports {
            t.push_floats(&r.row());
        }
        t
    }
}

/// Evaluates every term of the identity and its normalized residual
/// `|LHS - RHS| / Σ|terms|` (zero when every term vanishes).
pub fn pohozaev_residual(
    fields: &[&dyn Field],
    reaction: &Reaction,
    x0: f64,
    r: f64,
    settings: &QuadratureSettings,
) -> Result<PohozaevReport> {
    check_radius(fields, x0, r)?;
    check_reaction(fields, reaction)?;
    let a = common_a(fields)?;
    let rules = Rules::new(a, settings)?;
    let dirichlet = bulk(fields, x0, &[r], &rules).grad[0];

    let angular = |rule: &crate::quadrature::SineRule, g: &(dyn Fn(f64, f64, f64) -> f64 + Sync)| -> f64 {
        rule.theta
            .par_iter()
            .zip(&rule.weights)
            .map(|(&t, &wt)| {
                let (x, y) = (x0 + r * t.cos(), r * t.sin());
                wt * fields.iter().map(|f| f.sample(x, y)).map(|s| g(t, s.wx, s.q)).sum::<f64>()
            })
            .sum()
    };
    let ax = angular(&rules.sin_a, &|_, wx, _| wx * wx);
    let aq = angular(&rules.sin_neg_a, &|_, _, q| q * q);
    let ax_cos = angular(&rules.sin_a, &|t, wx, _| (t.cos() * wx).powi(2));
    let aq_sin = angular(&rules.sin_neg_a, &|t, _, q| (t.sin() * q).powi(2));
    let cross: f64 = rules
        .theta
        .iter()
        .map(|&(t, wt)| {
            let (x, y) = (x0 + r * t.cos(), r * t.sin());
            wt * t.sin() * t.cos() * fields.iter().map(|f| f.sample(x, y)).map(|s| s.wx * s.q).sum::<f64>()
        })
        .sum();

    let bulk_term = -a * dirichlet;
    let sphere = r * r * (r.powf(a) * ax + r.powf(-a) * aq);
    let flat = if reaction.is_zero() {
        0.0
    } else {
        2.0 * super::segment_integral(fields, x0, r, &rules, |u| u.iter().enumerate().map(|(i, &v)| reaction.big_f(i, v)).sum())
    };
    let corners = -2.0
        * r
        * [x0 - r, x0 + r]
            .iter()
            .map(|&x| fields.iter().enumerate().map(|(i, f)| reaction.big_f(i, f.trace(x))).sum::<f64>())
            .sum::<f64>();
    let radial = 2.0 * r * r * (r.powf(a) * ax_cos + 2.0 * cross + r.powf(-a) * aq_sin);

    let residual = (bulk_term + sphere + flat + corners - radial).abs();
    let scale = bulk_term.abs() + sphere.abs() + flat.abs() + corners.abs() + radial.abs();
    let normalized = if scale > 0.0 { residual / scale } else { 0.0 };
    Ok(PohozaevReport { x0, r, bulk: bulk_term, sphere, flat, corners, radial, residual, scale, normalized })
}
