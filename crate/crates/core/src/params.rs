//! Order of the operator and the constants derived from it.

use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Exponent cap used when the trace embedding has no finite critical exponent.
pub const SOBOLEV_CAP: f64 = 10.0;

/// Fractional order `s` together with the normalization of the Gagliardo form.
///
/// The weight exponent `a = 1 - 2s` and the regularity exponent are always
/// derived from `s`, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracParams<T: Real> {
    s: T,
    c_gagliardo: T,
}

impl<T: Real> FracParams<T> {
    /// Order `s` with unit kernel normalization.
    pub fn new(s: T) -> Result<Self> {
        Self::with_normalization(s, T::one())
    }

    pub fn with_normalization(s: T, c_gagliardo: T) -> Result<Self> {
        if !(s > T::zero() && s < T::one()) {
            return Err(Error::InvalidParameter(format!("order s = {s} must lie in (0, 1)")));
        }
        if !(c_gagliardo > T::zero()) || !c_gagliardo.is_finite() {
            return Err(Error::InvalidParameter(format!("kernel normalization {c_gagliardo} must be positive")));
        }
        Ok(Self { s, c_gagliardo })
    }

    /// Order `s` with the constant of the pointwise singular-integral definition,
    /// so that the form equals `<(-Δ)^s u, u>`.
    pub fn with_standard_normalization(s: T) -> Result<Self> {
        let sf = s.as_f64();
        if !(sf > 0.0 && sf < 1.0) {
            return Err(Error::InvalidParameter(format!("order s = {s} must lie in (0, 1)")));
        }
        Self::with_normalization(s, T::lit(0.5 * singular_integral_constant(sf)))
    }

    pub fn s(&self) -> T {
        self.s
    }

    pub fn c_gagliardo(&self) -> T {
        self.c_gagliardo
    }

    /// Weight exponent `a = 1 - 2s` of the extension operator.
    pub fn a(&self) -> T {
        T::one() - (self.s + self.s)
    }

    /// Baseline Hölder exponent: `s` for `s <= 1/2`, `2s - 1` above.
    pub fn alpha_star(&self) -> T {
        if self.s <= T::lit(0.5) {
            self.s
        } else {
            self.s + self.s - T::one()
        }
    }

    /// Critical trace exponent `2n/(n - 2s)` for `n = 1`, capped at [`SOBOLEV_CAP`].
    pub fn sobolev_exponent(&self) -> f64 {
        let s = self.s.as_f64();
        if s < 0.5 {
            (2.0 / (1.0 - 2.0 * s)).min(SOBOLEV_CAP)
        } else {
            SOBOLEV_CAP
        }
    }

    /// Constant making `c y^{2s} / (x^2 + y^2)^{(1+2s)/2}` a probability density in `x`.
    pub fn poisson_constant(&self) -> f64 {
        let s = self.s.as_f64();
        (ln_gamma(s + 0.5) - ln_gamma(s)).exp() / std::f64::consts::PI.sqrt()
    }

    /// Ratio between the conormal derivative of the extension and the
    /// discrete operator `A u / h`.
    ///
    /// The form `c ∬ (u(x)-u(y))^2 |x-y|^{-1-2s}` has first variation
    /// `2c ∫ (u(x)-u(y)) K`, while `-lim y^a ∂_y w` equals `2 s c_P ∫ (u(x)-u(y)) K`.
    pub fn extension_scale(&self) -> f64 {
        self.s.as_f64() * self.poisson_constant() / self.c_gagliardo.as_f64()
    }

    pub fn to_f64(&self) -> FracParams<f64> {
        FracParams { s: self.s.as_f64(), c_gagliardo: self.c_gagliardo.as_f64() }
    }
}

/// `C(1, s) = s 4^s Γ(1/2 + s) / (√π Γ(1 - s))`.
pub fn singular_integral_constant(s: f64) -> f64 {
    s * 4f64.powf(s) * gamma(0.5 + s) / (std::f64::consts::PI.sqrt() * gamma(1.0 - s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn derived_exponents() {
        for &s in &[0.1, 0.25, 0.5, 0.6, 0.75, 0.99] {
            let p = FracParams::new(s).unwrap();
            assert_eq!(p.a(), 1.0 - 2.0 * s);
            let expected = if s <= 0.5 { s } else { 2.0 * s - 1.0 };
            assert_eq!(p.alpha_star(), expected);
            assert!(p.alpha_star() > 0.0 && p.alpha_star() <= s);
        }
    }

    #[test]
    fn rejects_order_outside_unit_interval() {
        for &s in &[0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(FracParams::new(s).is_err(), "s = {s}");
        }
        assert!(FracParams::with_normalization(0.5, 0.0).is_err());
    }

    #[test]
    fn half_laplacian_constants() {
        let p = FracParams::new(0.5).unwrap();
        assert_relative_eq!(p.poisson_constant(), 1.0 / std::f64::consts::PI, epsilon = 1e-14);
        assert_relative_eq!(singular_integral_constant(0.5), 1.0 / std::f64::consts::PI, epsilon = 1e-14);
    }

    #[test]
    fn single_precision_parameters() {
        let p = FracParams::<f32>::new(0.75).unwrap();
        assert_eq!(p.alpha_star(), 0.5);
        assert_eq!(p.a(), -0.5);
    }
}
