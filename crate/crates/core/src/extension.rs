//! Weighted harmonic extension of piecewise-linear traces to the upper
//! half-plane by convolution with the Poisson kernel of `div(y^a ∇·)`.
//!
//! With `P(t, y) = c y^{2s} (t² + y²)^{-(1+2s)/2}` and the conjugate kernel
//! `Ψ(t, y) = c t (t² + y²)^{-(1+2s)/2}` (so that `∂_y Ψ = y^a ∂_t P`), a
//! trace `u` with slopes `u'` and jumps `J_j` at `ξ_j` gives
//!
//! ```text
//! w      = ∫ P(x-ξ, y) u(ξ) dξ
//! ∂ₓw    = ∫ P(x-ξ, y) u'(ξ) dξ + Σ J_j P(x-ξ_j, y)
//! y^a ∂_y w = -∫ Ψ(x-ξ, y) u'(ξ) dξ - Σ J_j Ψ(x-ξ_j, y)
//! ```
//!
//! Cells near the evaluation point are integrated in closed form (the kernel
//! mass is a regularized incomplete beta function, the first moment and the
//! conjugate kernel have elementary antiderivatives); cells at least
//! [`FAR_CELLS`] widths away use a 4-point Gauss rule.

use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::io::{fmt_f64, Table};
use crate::params::FracParams;
use crate::quadrature::GaussRule;

/// Distance, in cell widths, beyond which a cell is integrated by Gauss.
pub const FAR_CELLS: f64 = 8.0;
/// Rungs of the conormal extrapolation ladder.
pub const LADDER_RUNGS: usize = 6;
/// First rung as a fraction of the local cell width.
pub const LADDER_START: f64 = 0.1;
/// Relative tolerance for the ladder residual.
pub const CONORMAL_TOL: f64 = 1e-6;

const FAR_ORDER: usize = 4;
const TAIL_ORDER: usize = 32;

/// The kernel `c(s) y^{2s} / (x² + y²)^{(1+2s)/2}`, normalized to unit mass.
pub fn poisson_kernel(x: f64, y: f64, params: &FracParams<f64>) -> Result<f64> {
    check_height(y)?;
    let s = params.s();
    Ok(params.poisson_constant() * y.powf(2.0 * s) * (x * x + y * y).powf(-0.5 - s))
}

fn check_height(y: f64) -> Result<()> {
    if y > 0.0 && y.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange(format!("extension evaluated at height y = {y}; need y > 0")))
    }
}

/// Extension data at one point: `w`, `∂ₓw` and `q = y^a ∂_y w`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldSample {
    pub w: f64,
    pub wx: f64,
    pub q: f64,
}

impl FieldSample {
    /// `∂_y w = y^{-a} q`.
    pub fn wy(&self, y: f64, a: f64) -> f64 {
        self.q * y.powf(-a)
    }
}

/// Result of the extrapolated conormal derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conormal {
    pub value: f64,
    pub residual: f64,
    pub converged: bool,
}

/// Trace continued as `amplitude (ξ - origin)^power` for `ξ ≥` the last knot.
#[derive(Debug, Clone, PartialEq)]
struct PowerTail {
    amplitude: f64,
    origin: f64,
    power: f64,
    rule: GaussRule,
}

/// Immutable evaluator for the extension of one trace.
#[derive(Debug, Clone)]
pub struct ExtensionEvaluator {
    s: f64,
    a: f64,
    c: f64,
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    tail: Option<PowerTail>,
    far: GaussRule,
}

impl ExtensionEvaluator {
    /// Trace given by nodal values on strictly increasing `knots`, linear in
    /// between and zero outside `[knots[0], knots[last]]`.
    pub fn new(params: &FracParams<f64>, knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidParameter("a trace needs at least two knots".into()));
        }
        if knots.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: knots.len(), found: values.len() });
        }
        if knots.windows(2).any(|p| !(p[1] > p[0])) || knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidParameter("knots must be finite and strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("trace values must be finite".into()));
        }
        let slopes = knots.windows(2).zip(values.windows(2)).map(|(k, v)| (v[1] - v[0]) / (k[1] - k[0])).collect();
        Ok(Self {
            s: params.s(),
            a: params.a(),
            c: params.poisson_constant(),
            knots,
            values,
            slopes,
            tail: None,
            far: GaussRule::legendre(FAR_ORDER)?,
        })
    }

    /// Trace of a grid function: interior nodal values plus zeros at both ends
    /// of the interval.
    pub fn from_grid(params: &FracParams<f64>, grid: &Grid1D<f64>, u: &[f64]) -> Result<Self> {
        grid.check_len(u)?;
        let mut knots = Vec::with_capacity(u.len() + 2);
        let mut values = Vec::with_capacity(u.len() + 2);
        knots.push(grid.x_left());
        values.push(0.0);
        for (i, &v) in u.iter().enumerate() {
            knots.push(grid.node(i));
            values.push(v);
        }
        knots.push(grid.x_right());
        values.push(0.0);
        Self::new(params, knots, values)
    }

    /// Continues the trace beyond the last knot as `amplitude (ξ - origin)^power`.
    /// Needs `power < 2s` for the convolution to converge.
    pub fn with_power_tail(mut self, amplitude: f64, origin: f64, power: f64) -> Result<Self> {
        let last = *self.knots.last().expect("at least two knots");
        if !(power >= 0.0 && power < 2.0 * self.s) || !(origin < last) {
            return Err(Error::InvalidParameter(format!(
                "power tail (ξ - {origin})^{power} from {last} does not decay against the kernel"
            )));
        }
        let rule = GaussRule::jacobi(TAIL_ORDER, 0.0, 2.0 * self.s - 1.0 - power)?;
        self.tail = Some(PowerTail { amplitude, origin, power, rule });
        Ok(self)
    }

    /// The extension of `amplitude · (x - origin)₊^power` with a mesh graded
    /// towards `origin`: `cells` cells of grading exponent `grading` on
    /// `[origin, origin + cutoff]`, exact power tail beyond.
    pub fn half_line_power(
        params: &FracParams<f64>,
        origin: f64,
        power: f64,
        cutoff: f64,
        cells: usize,
        grading: f64,
    ) -> Result<Self> {
        if cells < 2 || !(cutoff > 0.0) || !(grading >= 1.0) {
            return Err(Error::InvalidParameter("half-line mesh needs cells ≥ 2, cutoff > 0, grading ≥ 1".into()));
        }
        let knots: Vec<f64> = (0..=cells).map(|j| origin + cutoff * (j as f64 / cells as f64).powf(grading)).collect();
        let values = knots.iter().map(|&k| (k - origin).max(0.0).powf(power)).collect();
        Self::new(params, knots, values)?.with_power_tail(1.0, origin, power)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Trace value (right-continuous at the end knots).
    pub fn trace(&self, x: f64) -> f64 {
        let last = self.knots.len() - 1;
        if x < self.knots[0] {
            return 0.0;
        }
        if x >= self.knots[last] {
            return match &self.tail {
                Some(t) => t.amplitude * (x - t.origin).powf(t.power),
                None if x == self.knots[last] => self.values[last],
                None => 0.0,
            };
        }
        let k = self.cell_of(x);
        self.values[k] + self.slopes[k] * (x - self.knots[k])
    }

    /// Largest `k` with `knots[k] ≤ x`, clamped to a valid cell index.
    fn cell_of(&self, x: f64) -> usize {
        let k = self.knots.partition_point(|&k| k <= x);
        k.saturating_sub(1).min(self.knots.len() - 2)
    }

    /// Width of the cell containing `x` (or the nearest cell).
    pub fn local_width(&self, x: f64) -> f64 {
        let k = self.cell_of(x);
        self.knots[k + 1] - self.knots[k]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn tail_value(&self) -> f64 {
        match &self.tail {
            Some(t) => t.amplitude * (self.knots[self.knots.len() - 1] - t.origin).powf(t.power),
            None => 0.0,
        }
    }

    /// Jumps of the trace at the end knots.
    fn jumps(&self) -> [(f64, f64); 2] {
        let last = self.knots.len() - 1;
        [(self.knots[0], self.values[0]), (self.knots[last], self.tail_value() - self.values[last])]
    }

    /// `w`, `∂ₓw` and `y^a ∂_y w` at `(x, y)`, `y > 0`.
    pub fn sample(&self, x: f64, y: f64) -> Result<FieldSample> {
        check_height(y)?;
        Ok(self.sample_unchecked(x, y))
    }

    pub(crate) fn sample_unchecked(&self, x: f64, y: f64) -> FieldSample {
        let s = self.s;
        let y2s = y.powf(2.0 * s);
        let kernel = |t: f64| self.c * (t * t + y * y).powf(-0.5 - s);
        let mut out = FieldSample::default();
        for k in 0..self.slopes.len() {
            let (xa, xb) = (self.knots[k], self.knots[k + 1]);
            let (ua, m) = (self.values[k], self.slopes[k]);
            let width = xb - xa;
            let dist = if x < xa {
                xa - x
            } else if x > xb {
                x - xb
            } else {
                0.0
            };
            if dist >= FAR_CELLS * width {
                for (xi, wt) in self.far.mapped(xa, xb) {
                    let t = x - xi;
                    let kv = wt * kernel(t);
                    out.w += kv * y2s * (ua + m * (xi - xa));
                    out.wx += kv * y2s * m;
                    out.q -= kv * t * m;
                }
            } else {
                let (ta, tb) = (x - xa, x - xb);
                let mass = kernel_mass(ta, tb, y, s);
                let d = self.c * moment(ta, tb, y, s);
                out.w += (ua + m * ta) * mass - m * y2s * d;
                out.wx += m * mass;
                out.q -= m * d;
            }
        }
        for (xj, jump) in self.jumps() {
            if jump != 0.0 {
                let t = x - xj;
                let kv = kernel(t);
                out.wx += jump * y2s * kv;
                out.q -= jump * t * kv;
            }
        }
        if let Some(tail) = &self.tail {
            let (w, wx, q) = self.tail_terms(tail, x, Some(y));
            out.w += w;
            out.wx += wx;
            out.q += q;
        }
        out
    }

    /// Tail contributions to `(w, ∂ₓw, q)`; `y = None` gives the `y → 0`
    /// limit of `q` (the other entries are then unused).
    fn tail_terms(&self, tail: &PowerTail, x: f64, y: Option<f64>) -> (f64, f64, f64) {
        let s = self.s;
        let big_m = self.knots[self.knots.len() - 1];
        let beta = 2.0 * s - 1.0 - tail.power;
        let yy = y.unwrap_or(0.0);
        let y2s = yy.powf(2.0 * s);
        let (mut w, mut wx, mut q) = (0.0, 0.0, 0.0);
        for (&z, &wt) in tail.rule.nodes.iter().zip(&tail.rule.weights) {
            // v = (1 + z)/2 ∈ (0, 1), ξ = M / v, dξ = M v^{-2} dv; the rule carries (1+z)^β.
            let v = 0.5 * (1.0 + z);
            let xi = big_m / v;
            let jac = wt * 0.5 * 2f64.powf(-beta) * big_m / (v * v) * v.powf(-beta);
            let r = xi - tail.origin;
            let u = tail.amplitude * r.powf(tail.power);
            let du = tail.amplitude * tail.power * r.powf(tail.power - 1.0);
            let t = x - xi;
            let kv = self.c * (t * t + yy * yy).powf(-0.5 - s);
            w += jac * kv * y2s * u;
            wx += jac * kv * y2s * du;
            q -= jac * kv * t * du;
        }
        (w, wx, q)
    }

    pub fn extend(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.sample(x, y)?.w)
    }

    /// `(∂ₓw, ∂_y w)` at `(x, y)`.
    pub fn extend_gradient(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let f = self.sample(x, y)?;
        Ok((f.wx, f.wy(y, self.a)))
    }

    /// `-lim_{y→0} y^a ∂_y w` by Richardson extrapolation in `y²` over the
    /// ladder `y_j = y₀ 2^{-j}`, `y₀` a tenth of the local cell width.
    pub fn conormal_derivative(&self, x: f64) -> Result<Conormal> {
        let y0 = LADDER_START * self.local_width(x);
        let mut table: Vec<Vec<f64>> = Vec::with_capacity(LADDER_RUNGS);
        for j in 0..LADDER_RUNGS {
            let y = y0 * 0.5f64.powi(j as i32);
            let mut row = vec![-self.sample(x, y)?.q];
            let mut factor = 1.0;
            for l in 1..=j {
                factor *= 4.0;
                let prev = &table[j - 1];
                let v = row[l - 1] + (row[l - 1] - prev[l - 1]) / (factor - 1.0);
                row.push(v);
            }
            table.push(row);
        }
        let last = &table[LADDER_RUNGS - 1];
        let value = last[LADDER_RUNGS - 1];
        let residual = (value - table[LADDER_RUNGS - 2][LADDER_RUNGS - 2]).abs();
        let scale = value.abs() + self.sup_norm() * self.local_width(x).powf(-2.0 * self.s).min(1e300);
        Ok(Conormal { value, residual, converged: residual <= CONORMAL_TOL * scale.max(f64::MIN_POSITIVE) })
    }

    /// The `y = 0` limit of `-y^a ∂_y w` evaluated in closed form; infinite at
    /// slope changes when `s ≥ 1/2`.
    pub fn conormal_limit(&self, x: f64) -> f64 {
        let s = self.s;
        let e = 1.0 - 2.0 * s;
        let r0 = |t: f64| {
            let at = t.abs();
            if e.abs() < 1e-14 {
                at.ln()
            } else {
                at.powf(e) / e
            }
        };
        let psi0 = |t: f64| self.c * t.signum() * t.abs().powf(-2.0 * s);
        let mut total = 0.0;
        let mut kink = 0.0;
        for k in 0..self.slopes.len() {
            let (xa, xb) = (self.knots[k], self.knots[k + 1]);
            let m = self.slopes[k];
            if m == 0.0 {
                continue;
            }
            let width = xb - xa;
            let dist = if x < xa {
                xa - x
            } else if x > xb {
                x - xb
            } else {
                0.0
            };
            if dist >= FAR_CELLS * width {
                for (xi, wt) in self.far.mapped(xa, xb) {
                    total += wt * m * psi0(x - xi);
                }
            } else if x == xa || x == xb {
                // Slope change at a knot under the evaluation point.
                kink += if x == xa { m } else { -m };
                let other = if x == xa { -r0(x - xb) } else { r0(x - xa) };
                total += m * self.c * other;
            } else {
                total += m * self.c * (r0(x - xa) - r0(x - xb));
            }
        }
        if kink != 0.0 && e <= 0.0 {
            return if kink > 0.0 { f64::NEG_INFINITY } else { f64::INFINITY };
        }
        for (xj, jump) in self.jumps() {
            if jump != 0.0 {
                total += jump * psi0(x - xj);
            }
        }
        if let Some(tail) = &self.tail {
            total -= self.tail_terms(tail, x, None).2;
        }
        total
    }

    /// CSV table with columns `x,y,w,wx,wy` at the given points.
    pub fn field_table(&self, points: &[(f64, f64)]) -> Result<Table> {
        let mut table = Table::new(&["x", "y", "w", "wx", "wy"]);
        for &(x, y) in points {
            let f = self.sample(x, y)?;
            table.push(vec![fmt_f64(x), fmt_f64(y), fmt_f64(f.w), fmt_f64(f.wx), fmt_f64(f.wy(y, self.a))]);
        }
        Ok(table)
    }
}

/// `∫_{t_b}^{t_a} P(t, y) dt` for `t_a > t_b`, arranged to avoid cancellation.
fn kernel_mass(ta: f64, tb: f64, y: f64, s: f64) -> f64 {
    let tail = |t: f64| 0.5 * beta_reg(s, 0.5, y * y / (t * t + y * y));
    let signed_half = |t: f64| 0.5 * t.signum() * beta_reg(0.5, s, t * t / (t * t + y * y));
    if tb >= y {
        tail(tb) - tail(ta)
    } else if ta <= -y {
        tail(-ta) - tail(-tb)
    } else {
        signed_half(ta) - signed_half(tb)
    }
}

/// `∫_{t_b}^{t_a} t (t² + y²)^{-(1+2s)/2} dt`.
fn moment(ta: f64, tb: f64, y: f64, s: f64) -> f64 {
    let e = 1.0 - 2.0 * s;
    let big_b = tb * tb + y * y;
    let log_ratio = ((ta - tb) * (ta + tb) / big_b).ln_1p();
    if e.abs() < 1e-14 {
        0.5 * log_ratio
    } else {
        big_b.powf(0.5 * e) * (0.5 * e * log_ratio).exp_m1() / e
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{adaptive, adaptive_to_infinity};

    fn params(s: f64) -> FracParams<f64> {
        FracParams::new(s).unwrap()
    }

    fn hat(s: f64) -> ExtensionEvaluator {
        ExtensionEvaluator::new(&params(s), vec![-1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn kernel_has_unit_mass() {
        for &s in &[0.25, 0.5, 0.75] {
            let p = params(s);
            for &y in &[0.01, 0.1, 1.0] {
                let half = adaptive(|x| poisson_kernel(x, y, &p).unwrap(), 0.0, 1.0, 1e-13)
                    + adaptive_to_infinity(|x| poisson_kernel(x, y, &p).unwrap(), 1.0, 1e-13);
                assert!((2.0 * half - 1.0).abs() < 1e-8, "s={s} y={y}: {}", 2.0 * half);
            }
        }
        assert!(poisson_kernel(0.0, 0.0, &params(0.5)).is_err());
    }

    #[test]
    fn kernel_symmetry_and_homogeneity() {
        let p = params(0.3);
        let k = |x, y| poisson_kernel(x, y, &p).unwrap();
        assert_eq!(k(0.7, 0.2), k(-0.7, 0.2));
        let lam = 3.5;
        assert!((k(lam * 0.7, lam * 0.2) * lam - k(0.7, 0.2)).abs() < 1e-14 * k(0.7, 0.2));
    }

    #[test]
    fn closed_form_cell_integrals_match_quadrature() {
        for &s in &[0.2, 0.5, 0.8] {
            for &(ta, tb, y) in &[(0.3, -0.2, 0.05), (2.0, 1.5, 0.01), (-1.0, -1.2, 0.3), (0.4, 0.1, 1e-3)] {
                let p = params(s);
                let mass = adaptive(|t| poisson_kernel(t, y, &p).unwrap(), tb, ta, 1e-15);
                assert!((kernel_mass(ta, tb, y, s) - mass).abs() < 1e-11, "s={s} mass {ta} {tb} {y}");
                let mom = adaptive(|t| t * (t * t + y * y).powf(-0.5 - s), tb, ta, 1e-14);
                assert!((moment(ta, tb, y, s) - mom).abs() < 1e-9 * (1.0 + mom.abs()), "s={s} moment");
            }
        }
    }

    #[test]
    fn hat_extension_matches_direct_quadrature() {
        for &s in &[0.3, 0.5, 0.7] {
            let ev = hat(s);
            let p = params(s);
            for &(x, y) in &[(0.0, 0.05), (0.3, 0.5), (2.0, 0.1), (-12.0, 0.4)] {
                let f = |xi: f64| poisson_kernel(x - xi, y, &p).unwrap() * ev.trace(xi);
                let direct = adaptive(f, -1.0, 0.0, 1e-14) + adaptive(f, 0.0, 1.0, 1e-14);
                let w = ev.extend(x, y).unwrap();
                assert!((w - direct).abs() < 1e-10 * (1.0 + direct.abs()), "s={s} ({x},{y}): {w} vs {direct}");
            }
            let mut prev = f64::INFINITY;
            for j in 0..12 {
                let w = ev.extend(0.0, 0.01 * 1.5f64.powi(j)).unwrap();
                assert!(w < prev);
                prev = w;
            }
        }
    }

    #[test]
    fn zero_and_odd_traces() {
        let p = params(0.4);
        let zero = ExtensionEvaluator::new(&p, vec![0.0, 1.0, 2.0], vec![0.0; 3]).unwrap();
        assert_eq!(zero.sample(0.5, 0.2).unwrap(), FieldSample::default());
        assert_eq!(zero.conormal_derivative(0.5).unwrap().value, 0.0);
        let odd = ExtensionEvaluator::new(&p, vec![-1.0, -0.5, 0.0, 0.5, 1.0], vec![0.0, -1.0, 0.0, 1.0, 0.0]).unwrap();
        for &y in &[0.01, 0.3, 4.0] {
            assert!(odd.extend(0.0, y).unwrap().abs() < 1e-15);
        }
        let even = hat(0.4);
        assert!(even.extend_gradient(0.0, 0.2).unwrap().0.abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = params(0.35);
        let knots: Vec<f64> = (0..=20).map(|i| -1.0 + 0.1 * i as f64).collect();
        let values: Vec<f64> = knots.iter().map(|&x| (1.0 - x * x) * (1.0 + 0.3 * x)).collect();
        let ev = ExtensionEvaluator::new(&p, knots, values).unwrap();
        let step = 1e-4;
        for &(x, y) in &[(0.03, 0.2), (-0.55, 0.05), (1.4, 0.3), (0.0, 1.0)] {
            let (gx, gy) = ev.extend_gradient(x, y).unwrap();
            let fx = (ev.extend(x + step, y).unwrap() - ev.extend(x - step, y).unwrap()) / (2.0 * step);
            let fy = (ev.extend(x, y + step).unwrap() - ev.extend(x, y - step).unwrap()) / (2.0 * step);
            assert!((gx - fx).abs() <= 1e-4 * (gx.abs() + 1e-3), "x: {gx} {fx}");
            assert!((gy - fy).abs() <= 1e-4 * (gy.abs() + 1e-3), "y: {gy} {fy}");
        }
    }

    #[test]
    fn approximate_identity() {
        let p = params(0.5);
        let ev = ExtensionEvaluator::new(&p, vec![-1.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]).unwrap();
        let err =
            |y: f64| [-0.6, -0.25, 0.4, 0.8].iter().map(|&x| (ev.extend(x, y).unwrap() - ev.trace(x)).abs()).fold(0.0, f64::max);
        assert!(err(1e-3) < err(1e-2));
        assert!(err(1e-3) < 5e-3);
    }

    #[test]
    fn ladder_agrees_with_exact_limit() {
        for &s in &[0.25, 0.5, 0.75] {
            let p = params(s);
            let knots: Vec<f64> = (0..=40).map(|i| -1.0 + 0.05 * i as f64).collect();
            let values: Vec<f64> = knots.iter().map(|&x| (1.0 - x * x).powi(2)).collect();
            let ev = ExtensionEvaluator::new(&p, knots, values).unwrap();
            for &x in &[0.025, -0.325, 0.775] {
                let c = ev.conormal_derivative(x).unwrap();
                let exact = ev.conormal_limit(x);
                assert!(c.converged, "s={s} x={x} residual {}", c.residual);
                assert!((c.value - exact).abs() < 1e-6 * exact.abs().max(1.0), "s={s} x={x}: {} vs {exact}", c.value);
            }
            assert!(ev.conormal_limit(0.025) > 0.0);
        }
    }

    #[test]
    fn power_tail_is_the_continuation_of_the_mesh() {
        let p = params(0.5);
        let ev = ExtensionEvaluator::half_line_power(&p, 0.0, 0.5, 10.0, 200, 3.0).unwrap();
        assert!((ev.trace(40.0) - 40f64.sqrt()).abs() < 1e-12);
        assert!((ev.trace(10.0) - 10f64.sqrt()).abs() < 1e-12);
        // (x)₊^s is s-harmonic on the positive half-line; only interpolation error remains.
        let fine = ExtensionEvaluator::half_line_power(&p, 0.0, 0.5, 10.0, 800, 3.0).unwrap();
        let (coarse_err, fine_err) = (ev.conormal_limit(0.37).abs(), fine.conormal_limit(0.37).abs());
        assert!(coarse_err < 1e-2 && fine_err < 0.3 * coarse_err, "{coarse_err} {fine_err}");
        // The tail alone against an adaptive oracle.
        let direct = adaptive(
            |sigma| {
                let xi = 10.0 * sigma.exp();
                xi * poisson_kernel(0.2 - xi, 0.3, &p).unwrap() * xi.sqrt()
            },
            0.0,
            90.0,
            1e-14,
        );
        let tail = ev.tail.as_ref().unwrap();
        let (w, _, _) = ev.tail_terms(tail, 0.2, Some(0.3));
        assert!((w - direct).abs() < 1e-10, "{w} vs {direct}");
    }

    /// Gauss on pieces refined geometrically towards both endpoints, for
    /// integrable endpoint singularities.
    fn graded(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let rule = GaussRule::legendre(12).unwrap();
        let mid = 0.5 * (a + b);
        let mut total = 0.0;
        for (lo, hi, towards_lo) in [(a, mid, true), (mid, b, false)] {
            let mut edges = vec![lo, hi];
            let len = hi - lo;
            for j in 1..36 {
                let d = len * 0.5f64.powi(j);
                edges.push(if towards_lo { lo + d } else { hi - d });
            }
            edges.sort_by(f64::total_cmp);
            edges.dedup();
            total += edges.windows(2).map(|w| rule.integrate(w[0], w[1], &f)).sum::<f64>();
        }
        total
    }

    #[test]
    fn hat_averaged_conormal_matches_the_discrete_operator() {
        use crate::fraclap::assemble_form;
        for &s in &[0.3, 0.5, 0.7] {
            let p = params(s);
            let g = Grid1D::new(-1.0, 1.0, 99).unwrap();
            let u = g.sample(|x: f64| (1.0 - x * x).powi(2));
            let ev = ExtensionEvaluator::from_grid(&p, &g, &u).unwrap();
            let au = assemble_form(&g, &p).apply(&u).unwrap();
            let h = g.h();
            for i in [30, 49, 70] {
                let xi = g.node(i);
                let avg = (graded(|x| (x - xi + h) / h * ev.conormal_limit(x), xi - h, xi)
                    + graded(|x| (xi + h - x) / h * ev.conormal_limit(x), xi, xi + h))
                    / h;
                let expected = p.extension_scale() * au[i];
                assert!((avg - expected).abs() < 1e-4 * expected.abs(), "s={s} i={i}: {avg} vs {expected}");
            }
        }
    }

    #[test]
    fn grid_traces_vanish_outside() {
        let p = params(0.5);
        let g = Grid1D::new(-1.0, 1.0, 9).unwrap();
        let u = g.sample(|x| 1.0 - x * x);
        let ev = ExtensionEvaluator::from_grid(&p, &g, &u).unwrap();
        assert_eq!(ev.trace(-1.5), 0.0);
        assert_eq!(ev.trace(1.0), 0.0);
        assert!((ev.trace(g.node(3)) - u[3]).abs() < 1e-15);
        assert!(ev.sample(0.0, 0.0).is_err());
        let t = ev.field_table(&[(0.0, 0.5), (0.2, 0.1)]).unwrap();
        assert_eq!(t.rows.len(), 2);
    }
}
