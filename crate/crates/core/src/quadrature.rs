//! Quadrature rules: Gauss-Legendre, Gauss-Jacobi, sine-weighted angular
//! rules and an adaptive Gauss-Kronrod integrator used as an oracle.

use gauss_quad::{GaussJacobi, GaussLegendre};

use crate::error::{Error, Result};

/// Gauss rule on the reference interval `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn legendre(n: usize) -> Result<Self> {
        let rule =
            GaussLegendre::new(n).map_err(|e| Error::InvalidParameter(format!("Gauss-Legendre rule of degree {n}: {e}")))?;
        let (nodes, weights) = rule.into_node_weight_pairs().into_iter().unzip();
        Ok(Self::sorted(nodes, weights))
    }

    /// Rule for the weight `(1 - x)^alpha (1 + x)^beta`.
    pub fn jacobi(n: usize, alpha: f64, beta: f64) -> Result<Self> {
        if alpha.abs() < 1e-15 && beta.abs() < 1e-15 {
            return Self::legendre(n);
        }
        let rule = GaussJacobi::new(n, alpha, beta)
            .map_err(|e| Error::InvalidParameter(format!("Gauss-Jacobi rule ({n}, {alpha}, {beta}): {e}")))?;
        let (nodes, weights) = rule.into_node_weight_pairs().into_iter().unzip();
        Ok(Self::sorted(nodes, weights))
    }

    fn sorted(nodes: Vec<f64>, weights: Vec<f64>) -> Self {
        let mut pairs: Vec<(f64, f64)> = nodes.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped affinely to `[a, b]` (weights include the Jacobian,
    /// not the Jacobi weight).
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Angular rule for `∫_0^π sin(θ)^p f(θ) dθ` with the endpoint behaviour of the
/// weight absorbed by Gauss-Jacobi rules on each quarter-turn half.
#[derive(Debug, Clone, PartialEq)]
pub struct SineRule {
    pub power: f64,
    pub theta: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SineRule {
    /// `per_half` nodes on `[0, π/2]` and the mirrored set on `[π/2, π]`.
    pub fn new(power: f64, per_half: usize) -> Result<Self> {
        if power <= -1.0 {
            return Err(Error::InvalidParameter(format!("sine weight exponent {power} <= -1")));
        }
        let base = GaussRule::jacobi(per_half, 0.0, power)?;
        let quarter = std::f64::consts::FRAC_PI_4;
        let mut half: Vec<(f64, f64)> = base
            .nodes
            .iter()
            .zip(&base.weights)
            .map(|(&x, &w)| {
                let theta = quarter * (1.0 + x);
                // θ^p (sin θ / θ)^p = sin(θ)^p; the θ^p part is the Jacobi weight.
                let ratio = if theta == 0.0 { 1.0 } else { theta.sin() / theta };
                (theta, w * quarter.powf(power + 1.0) * ratio.powf(power))
            })
            .collect();
        half.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut theta = Vec::with_capacity(2 * per_half);
        let mut weights = Vec::with_capacity(2 * per_half);
        for &(t, w) in &half {
            theta.push(t);
            weights.push(w);
        }
        for &(t, w) in half.iter().rev() {
            theta.push(std::f64::consts::PI - t);
            weights.push(w);
        }
        Ok(Self { power, theta, weights })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.theta.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }
}

/// `∫_0^π sin(θ)^p dθ = √π Γ((p+1)/2) / Γ(p/2 + 1)`.
pub fn sine_power_integral(p: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    std::f64::consts::PI.sqrt() * (ln_gamma(0.5 * (p + 1.0)) - ln_gamma(0.5 * p + 1.0)).exp()
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn kronrod15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        k += WGK[j] * pair;
        if j % 2 == 1 {
            g += WG[j / 2] * pair;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) integration to absolute tolerance `tol`.
pub fn adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
        let (value, err) = kronrod15(f, a, b);
        if err <= tol.max(64.0 * f64::EPSILON * value.abs()).max(1e-300) || depth == 0 || (b - a).abs() < 1e-15 * (1.0 + a.abs())
        {
            return value;
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, 0.5 * tol, depth - 1) + recurse(f, m, b, 0.5 * tol, depth - 1)
    }
    recurse(&f, a, b, tol, 60)
}

/// Adaptive integration over `[a, ∞)` through the map `x = a + t/(1-t)`.
pub fn adaptive_to_infinity(f: impl Fn(f64) -> f64, a: f64, tol: f64) -> f64 {
    adaptive(
        |t| {
            if t >= 1.0 {
                return 0.0;
            }
            let one = 1.0 - t;
            f(a + t / one) / (one * one)
        },
        0.0,
        1.0,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_integrates_polynomials() {
        let rule = GaussRule::legendre(8).unwrap();
        let v = rule.integrate(0.0, 2.0, |x| x.powi(15));
        assert_relative_eq!(v, 2f64.powi(16) / 16.0, max_relative = 1e-13);
    }

    #[test]
    fn jacobi_absorbs_endpoint_power() {
        // ∫_{-1}^{1} (1+x)^{-1/2} x^2 dx
        let rule = GaussRule::jacobi(12, 0.0, -0.5).unwrap();
        let v: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x * x).sum();
        let exact = adaptive(|t| (t * t - 1.0).powi(2) * 2.0, 0.0, 2f64.sqrt(), 1e-14);
        assert_relative_eq!(v, exact, max_relative = 1e-12);
    }

    #[test]
    fn sine_rule_matches_closed_form() {
        for &p in &[-0.8, -0.5, 0.0, 0.3, 0.5, 0.9, 2.5] {
            let rule = SineRule::new(p, 24).unwrap();
            assert_relative_eq!(rule.integrate(|_| 1.0), sine_power_integral(p), max_relative = 1e-12);
            let with_cos2 = rule.integrate(|t| t.cos().powi(2));
            // ∫ sin^p cos^2 = ∫ sin^p - ∫ sin^{p+2}
            let exact = sine_power_integral(p) - sine_power_integral(p + 2.0);
            assert_relative_eq!(with_cos2, exact, max_relative = 1e-11);
        }
    }

    #[test]
    fn adaptive_handles_integrable_singularity() {
        let v = adaptive(|x| x.powf(-0.5), 0.0, 1.0, 1e-12);
        assert!((v - 2.0).abs() < 1e-8);
        let tail = adaptive_to_infinity(|x| 1.0 / (1.0 + x * x), 0.0, 1e-12);
        assert_relative_eq!(tail, std::f64::consts::FRAC_PI_2, max_relative = 1e-10);
    }
}
