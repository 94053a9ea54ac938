use crate::error::{Error, Result};
use crate::segregation::DensityVector;

/// Default `ε_Γ` relative to the largest density value.
pub const GAMMA_EPS: f64 = 1e-3;

/// A connected piece of `Γ(u)` on the trace line: a single crossing point
/// between two dominant densities, or a dead interval where every density is
/// below `ε_Γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSite {
    pub lo: f64,
    pub hi: f64,
    /// Dominant density just left of the site.
    pub left: usize,
    /// Dominant density just right of the site.
    pub right: usize,
}

impl GammaSite {
    pub fn centre(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn is_interval(&self) -> bool {
        self.hi > self.lo
    }

    pub fn same_label(&self) -> bool {
        self.left == self.right
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreeBoundary {
    pub threshold: f64,
    pub sites: Vec<GammaSite>,
}

impl FreeBoundary {
    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }
}

/// Dominant density at each node, `None` where all are at or below `eps`.
pub fn dominant_labels(comps: &[&[f64]], eps: f64) -> Vec<Option<usize>> {
    let n = comps[0].len();
    (0..n)
        .map(|i| {
            let (j, v) = comps.iter().enumerate().map(|(j, c)| (j, c[i])).fold((0, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
            (v > eps).then_some(j)
        })
        .collect()
}

/// `Γ` from samples `comps[j][i] = u_j(x[i])` at increasing nodes. Crossings
/// between dominant densities are located by linear interpolation of their
/// difference; dead runs of nodes are bounded by the linear `ε_Γ` crossings
/// of their neighbours. Dead runs touching the first or last node belong to
/// the boundary of the domain and are skipped.
pub fn free_boundary_from_samples(x: &[f64], comps: &[&[f64]], eps_rel: f64) -> Result<FreeBoundary> {
    let n = x.len();
    if comps.is_empty() || comps.iter().any(|c| c.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: comps.first().map_or(0, |c| c.len()) });
    }
    let peak = comps.iter().flat_map(|c| c.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Err(Error::ZeroVector);
    }
    let threshold = eps_rel * peak;
    let labels = dominant_labels(comps, threshold);
    let mut sites = Vec::new();
    let mut i = 0;
    while i + 1 < n {
        match (labels[i], labels[i + 1]) {
            (Some(a), Some(b)) if a != b => {
                let g0 = comps[a][i] - comps[b][i];
                let g1 = comps[a][i + 1] - comps[b][i + 1];
                let t = g0 / (g0 - g1);
                let xc = x[i] + t * (x[i + 1] - x[i]);
                sites.push(GammaSite { lo: xc, hi: xc, left: a, right: b });
                i += 1;
            }
            (Some(a), None) => {
                let mut j = i + 1;
                while j < n && labels[j].is_none() {
                    j += 1;
                }
                if j < n {
                    let b = labels[j].expect("alive node");
                    let cross = |k0: usize, k1: usize, c: &[f64]| {
                        let t = (c[k0] - threshold) / (c[k0] - c[k1]);
                        x[k0] + t * (x[k1] - x[k0])
                    };
                    let lo = cross(i, i + 1, comps[a]);
                    let hi = cross(j, j - 1, comps[b]);
                    sites.push(GammaSite { lo, hi, left: a, right: b });
                }
                i = j;
            }
            _ => i += 1,
        }
    }
    if comps.len() >= 2 && sites.is_empty() {
        return Err(Error::Degenerate("no free-boundary point found; segregation failed".into()));
    }
    Ok(FreeBoundary { threshold, sites })
}

/// `Γ(u)` of a grid density vector; the zero boundary values at the interval
/// ends are included as samples.
pub fn extract_free_boundary(u: &DensityVector<f64>, eps_rel: f64) -> Result<FreeBoundary> {
    let grid = u.grid();
    let mut x = vec![grid.x_left()];
    x.extend(grid.nodes());
    x.push(grid.x_right());
    let padded: Vec<Vec<f64>> = u
        .components()
        .iter()
        .map(|c| {
            let mut v = vec![0.0];
            v.extend_from_slice(c);
            v.push(0.0);
            v
        })
        .collect();
    let refs: Vec<&[f64]> = padded.iter().map(Vec::as_slice).collect();
    free_boundary_from_samples(&x, &refs, eps_rel)
}

/// Disjoint supports `ωⱼ`: nodes where density `j` dominates and exceeds
/// `eps_rel · max|u|`.
pub fn supports(u: &DensityVector<f64>, eps_rel: f64) -> Vec<Vec<bool>> {
    let comps: Vec<&[f64]> = u.components().iter().map(Vec::as_slice).collect();
    let peak = comps.iter().flat_map(|c| c.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    let labels = dominant_labels(&comps, eps_rel * peak);
    (0..u.k()).map(|j| labels.iter().map(|&l| l == Some(j)).collect()).collect()
}

/// Exactly segregated traces `(uᵢ - Σ_{j≠i} uⱼ)⁺` of the piecewise-linear
/// interpolants, on the grid nodes (with the zero end values) refined by
/// every sign change of `uᵢ - Σ_{j≠i} uⱼ`. Returns the knots and one value
/// vector per density.
pub fn segregated_traces(u: &DensityVector<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let grid = u.grid();
    let mut x = vec![grid.x_left()];
    x.extend(grid.nodes());
    x.push(grid.x_right());
    let total: Vec<f64> = (0..x.len())
        .map(|k| if k == 0 || k == x.len() - 1 { 0.0 } else { u.components().iter().map(|c| c[k - 1]).sum() })
        .collect();
    let diffs: Vec<Vec<f64>> = u
        .components()
        .iter()
        .map(|c| (0..x.len()).map(|k| if k == 0 || k == x.len() - 1 { 0.0 } else { 2.0 * c[k - 1] - total[k] }).collect())
        .collect();
    let mut knots = x.clone();
    let merge = 1e-9 * grid.h();
    for d in &diffs {
        for k in 0..x.len() - 1 {
            if d[k] * d[k + 1] < 0.0 {
                let xc = x[k] + d[k] / (d[k] - d[k + 1]) * (x[k + 1] - x[k]);
                if xc - x[k] > merge && x[k + 1] - xc > merge {
                    knots.push(xc);
                }
            }
        }
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup_by(|b, a| (*b - *a).abs() <= merge);
    let values = diffs
        .iter()
        .map(|d| {
            let mut k = 0;
            knots
                .iter()
                .map(|&t| {
                    while k + 2 < x.len() && x[k + 1] <= t {
                        k += 1;
                    }
                    let w = (t - x[k]) / (x[k + 1] - x[k]);
                    ((1.0 - w) * d[k] + w * d[k + 1]).max(0.0)
                })
                .collect()
        })
        .collect();
    (knots, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid1D;

    #[test]
    fn crossing_is_interpolated() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let u1 = [0.0, 2.0, 1.0, 0.2, 0.0];
        let u2 = [0.0, 0.1, 0.5, 1.0, 0.0];
        let fb = free_boundary_from_samples(&x, &[&u1, &u2], 1e-3).unwrap();
        assert_eq!(fb.len(), 1);
        let s = fb.sites[0];
        // u1 - u2: 0.5 at x = 2, -0.8 at x = 3.
        assert!((s.lo - (2.0 + 0.5 / 1.3)).abs() < 1e-15);
        assert_eq!((s.left, s.right), (0, 1));
        assert!(!s.is_interval() && !s.same_label());
    }

    #[test]
    fn dead_zone_is_an_interval() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let u1 = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let u2 = [0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        let fb = free_boundary_from_samples(&x, &[&u1, &u2], 0.1).unwrap();
        assert_eq!(fb.len(), 1);
        let s = fb.sites[0];
        assert!((s.lo - 1.9).abs() < 1e-12 && (s.hi - 3.1).abs() < 1e-12);
        assert!((s.centre() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn gap_in_one_density_has_matching_labels() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let u = [0.0, 1.0, 0.0, 1.0, 0.0];
        let fb = free_boundary_from_samples(&x, &[&u], 1e-3).unwrap();
        assert_eq!(fb.len(), 1);
        assert!(fb.sites[0].same_label());
    }

    #[test]
    fn positive_single_density_has_no_free_boundary() {
        let grid = Grid1D::new(-1.0, 1.0, 15).unwrap();
        let u = DensityVector::new(grid, vec![grid.sample(|x| 1.0 - x * x)]).unwrap();
        assert!(extract_free_boundary(&u, GAMMA_EPS).unwrap().is_empty());
        let masks = supports(&u, GAMMA_EPS);
        assert!(masks[0].iter().all(|&m| m));
    }

    #[test]
    fn overlapping_pair_without_gamma_is_an_error() {
        let grid = Grid1D::new(-1.0, 1.0, 15).unwrap();
        let c = grid.sample(|x| 1.0 - x * x);
        let d: Vec<f64> = c.iter().map(|v| 0.5 * v).collect();
        let u = DensityVector::new(grid, vec![c, d]).unwrap();
        assert!(matches!(extract_free_boundary(&u, GAMMA_EPS), Err(Error::Degenerate(_))));
    }

    #[test]
    fn supports_are_disjoint() {
        let grid = Grid1D::new(-1.0, 1.0, 31).unwrap();
        let a = grid.sample(|x| (1.0 - x * x) * (1.0 - x));
        let b = grid.sample(|x| (1.0 - x * x) * (1.0 + x));
        let u = DensityVector::new(grid, vec![a, b]).unwrap();
        let m = supports(&u, GAMMA_EPS);
        assert!(m[0].iter().zip(&m[1]).all(|(p, q)| !(p & q)));
        let fb = extract_free_boundary(&u, GAMMA_EPS).unwrap();
        assert_eq!(fb.len(), 1);
        assert!(fb.sites[0].lo.abs() < 1e-12);
    }

    #[test]
    fn segregated_traces_vanish_at_the_crossing() {
        let grid = Grid1D::new(-0.9, 0.9, 8).unwrap();
        // Nodes -0.7, -0.5, ..., 0.7 with spacing 0.2.
        let a = vec![1.0, 1.0, 1.0, 0.8, 0.2, 0.0, 0.0, 0.0];
        let b = vec![0.0, 0.0, 0.0, 0.1, 0.5, 1.0, 1.0, 1.0];
        let u = DensityVector::new(grid, vec![a, b]).unwrap();
        let (knots, vals) = segregated_traces(&u);
        // a - b = 0.7 at -0.1 and -0.3 at 0.1: zero at 0.04.
        assert_eq!(knots.len(), 11, "{knots:?}");
        let k = knots.iter().position(|&t| (t - 0.04).abs() < 1e-12).unwrap();
        assert!(vals[0][k].abs() < 1e-12 && vals[1][k].abs() < 1e-12);
        assert!((vals[0][4] - 0.7).abs() < 1e-12 && vals[1][4] == 0.0);
        assert!(vals.iter().all(|v| v[0] == 0.0 && v[10] == 0.0));
        for i in 0..knots.len() {
            assert!(vals[0][i] * vals[1][i] == 0.0);
        }
    }
}
