//! Element-pair assembly of the Gagliardo form for continuous piecewise
//! linear functions vanishing outside the grid interval.
//!
//! The double integral over `ℝ × ℝ` splits into element pairs inside the
//! interval plus the exterior term `2 ∫_Ω u(x)^2 κ(x) dx`, where
//! `κ(x) = ∫_{ℝ∖Ω} |x - y|^{-1-2s} dy`. On a uniform grid every local matrix
//! depends only on the gap between the two elements, so each is computed once.

use crate::grid::Grid1D;
use crate::params::FracParams;
use crate::quadrature::GaussRule;
use crate::scalar::Real;

/// Gauss order for a pair of elements separated by `gap` whole elements.
fn far_order(gap: usize) -> usize {
    match gap {
        1 => 8,
        2..=3 => 6,
        4..=8 => 4,
        _ => 3,
    }
}

/// `∫_1^2 w^{e-1} dw`.
fn power_integral_1_2(e: f64) -> f64 {
    if e.abs() < 1e-14 {
        std::f64::consts::LN_2
    } else {
        (2f64.powf(e) - 1.0) / e
    }
}

/// `∫_0^1 v^m (1+v)^{-1-2s} dv` for `m = 0, 1, 2`, via `w = 1 + v`.
fn duffy_moment(m: u32, s: f64) -> f64 {
    let binom = [[1.0, 0.0, 0.0], [-1.0, 1.0, 0.0], [1.0, -2.0, 1.0]];
    (0..=m as usize).map(|j| binom[m as usize][j] * power_integral_1_2(j as f64 - 2.0 * s)).sum()
}

/// Local matrices shared by all element pairs, in `f64`.
struct LocalForms {
    /// Same element, acting on the two end values.
    same: [[f64; 2]; 2],
    /// Adjacent elements, acting on the three nodes of the patch.
    adjacent: [[f64; 3]; 3],
    /// Separated elements, indexed by `gap - 1`, acting on four nodes.
    far: Vec<[[f64; 4]; 4]>,
    /// `∫ φ_a φ_b κ` on element `k`; the last element is the mirror image of the first.
    exterior: Vec<[[f64; 2]; 2]>,
}

impl LocalForms {
    fn new(h: f64, s: f64, elements: usize) -> Self {
        let two_s = 2.0 * s;
        let scale = h.powf(3.0 - two_s);

        // ∬_{T×T} (u(x)-u(y))^2 K = g^2 ∬ |x-y|^{1-2s} with g the element slope.
        let same_integral = 2.0 * scale / ((2.0 - two_s) * (3.0 - two_s));
        let c = same_integral / (h * h);
        let same = [[c, -c], [-c, c]];

        // Adjacent pair: u(x) - u(y) = -(g_l p + g_r q), p, q ∈ [0, h], |x - y| = p + q.
        // Split the square along the diagonal and use p = t, q = t v on each half.
        let radial = 1.0 / (3.0 - two_s);
        let i_pp = radial * (duffy_moment(0, s) + duffy_moment(2, s));
        let i_pq = radial * 2.0 * duffy_moment(1, s);
        let gl = [-1.0 / h, 1.0 / h, 0.0];
        let gr = [0.0, -1.0 / h, 1.0 / h];
        let mut adjacent = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                // both orderings of the pair contribute
                adjacent[i][j] = 2.0 * scale * (i_pp * (gl[i] * gl[j] + gr[i] * gr[j]) + i_pq * (gl[i] * gr[j] + gr[i] * gl[j]));
            }
        }

        let mut rules: Vec<Option<GaussRule>> = vec![None; 9];
        let mut far = Vec::with_capacity(elements);
        for gap in 1..elements {
            let order = far_order(gap);
            let rule = rules[order].get_or_insert_with(|| GaussRule::legendre(order).unwrap());
            let mut m = [[0.0; 4]; 4];
            for (t, wt) in rule.mapped(0.0, 1.0) {
                for (tau, wtau) in rule.mapped(0.0, 1.0) {
                    let dist = h * ((gap + 1) as f64 + tau - t);
                    let k = wt * wtau * h * h * dist.powf(-1.0 - two_s);
                    let v = [1.0 - t, t, -(1.0 - tau), -tau];
                    for i in 0..4 {
                        for j in 0..4 {
                            m[i][j] += 2.0 * k * v[i] * v[j];
                        }
                    }
                }
            }
            far.push(m);
        }

        // κ(x) = ((x - x_l)^{-2s} + (x_r - x)^{-2s}) / 2s.
        let len = elements as f64 * h;
        let gauss = GaussRule::legendre(8).unwrap();
        let smooth_part = |k: usize, near_left: bool| {
            let mut m = [[0.0; 2]; 2];
            for (t, w) in gauss.mapped(0.0, 1.0) {
                let x = (k as f64 + t) * h;
                let mut kappa = (len - x).powf(-two_s);
                if near_left {
                    kappa += x.powf(-two_s);
                }
                let phi = [1.0 - t, t];
                for i in 0..2 {
                    for j in 0..2 {
                        m[i][j] += w * h * kappa / two_s * phi[i] * phi[j];
                    }
                }
            }
            m
        };
        // Left singular part on element 0 in closed form:
        // h^{1-2s} ∫_0^1 τ^{-2s} (1-τ)^2, τ(1-τ), τ^2.
        let p = 1.0 - two_s;
        let edge_scale = h.powf(p) / two_s;
        let e00 = edge_scale * 2.0 / (p * (p + 1.0) * (p + 2.0));
        let e01 = edge_scale / ((p + 1.0) * (p + 2.0));
        let e11 = edge_scale / (p + 2.0);
        let mut exterior_edge = smooth_part(0, false);
        exterior_edge[0][0] += e00;
        exterior_edge[0][1] += e01;
        exterior_edge[1][0] += e01;
        exterior_edge[1][1] += e11;
        let exterior = (0..elements).map(|k| if k == 0 { exterior_edge } else { smooth_part(k, true) }).collect();

        Self { same, adjacent, far, exterior }
    }
}

/// Dense matrix over the interior nodes, row-major.
pub(crate) fn assemble_matrix<T: Real>(grid: &Grid1D<T>, params: &FracParams<T>) -> Vec<T> {
    let n = grid.len();
    let elements = n + 1;
    let h = grid.h().as_f64();
    let s = params.s().as_f64();
    let local = LocalForms::new(h, s, elements);

    // Extended node set 0..=n+1; the two end nodes carry zero values and are dropped.
    let ext = n + 2;
    let mut full = vec![0.0f64; ext * ext];
    let mut add = |i: usize, j: usize, v: f64| full[i * ext + j] += v;

    for k in 0..elements {
        for a in 0..2 {
            for b in 0..2 {
                add(k + a, k + b, local.same[a][b]);
            }
        }
        let ext_local = if k + 1 == elements {
            // mirror of element 0
            let e = &local.exterior[0];
            [[e[1][1], e[1][0]], [e[0][1], e[0][0]]]
        } else {
            local.exterior[k]
        };
        for a in 0..2 {
            for b in 0..2 {
                add(k + a, k + b, 2.0 * ext_local[a][b]);
            }
        }
        if k + 1 < elements {
            for a in 0..3 {
                for b in 0..3 {
                    add(k + a, k + b, local.adjacent[a][b]);
                }
            }
        }
        for l in (k + 2)..elements {
            let m = &local.far[l - k - 2];
            let idx = [k, k + 1, l, l + 1];
            for a in 0..4 {
                for b in 0..4 {
                    add(idx[a], idx[b], m[a][b]);
                }
            }
        }
    }

    let c = params.c_gagliardo().as_f64();
    let mut matrix = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            // symmetrize exactly
            let v = 0.5 * (full[(i + 1) * ext + j + 1] + full[(j + 1) * ext + i + 1]);
            matrix[i * n + j] = T::lit(c * v);
        }
    }
    matrix
}
