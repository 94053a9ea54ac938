use super::Field;
use crate::extension::FieldSample;

/// `w = y^{1-a}`: `L_a`-harmonic, homogeneous of degree `1 - a` about every
/// trace point, zero trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransversePower {
    a: f64,
    scale: f64,
}

impl TransversePower {
    pub fn new(a: f64) -> Self {
        Self { a, scale: 1.0 }
    }

    pub fn scaled(a: f64, scale: f64) -> Self {
        Self { a, scale }
    }
}

impl Field for TransversePower {
    fn a(&self) -> f64 {
        self.a
    }

    fn sample(&self, _x: f64, y: f64) -> FieldSample {
        FieldSample { w: self.scale * y.powf(1.0 - self.a), wx: 0.0, q: self.scale * (1.0 - self.a) }
    }

    fn trace(&self, _x: f64) -> f64 {
        0.0
    }
}

/// `w = c₀ + cₓ x + c_y y`, `L_a`-harmonic when `c_y = 0` or `a = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineField {
    a: f64,
    c0: f64,
    cx: f64,
    cy: f64,
}

impl AffineField {
    pub fn new(a: f64, c0: f64, cx: f64, cy: f64) -> Self {
        Self { a, c0, cx, cy }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.c0 + self.cx * x + self.cy * y
    }
}

impl Field for AffineField {
    fn a(&self) -> f64 {
        self.a
    }

    fn sample(&self, x: f64, y: f64) -> FieldSample {
        let q = if self.cy == 0.0 { 0.0 } else { self.cy * y.powf(self.a) };
        FieldSample { w: self.value(x, y), wx: self.cx, q }
    }

    fn trace(&self, x: f64) -> f64 {
        self.value(x, 0.0)
    }
}

/// `w = |X - (c, 0)|^{-a}`: `L_a`-harmonic in the open half-plane with zero
/// conormal derivative away from the centre and trace `|x - c|^{-a}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPower {
    a: f64,
    centre: [f64; 1],
}

impl RadialPower {
    pub fn new(a: f64) -> Self {
        Self::centred(a, 0.0)
    }

    pub fn centred(a: f64, centre: f64) -> Self {
        Self { a, centre: [centre] }
    }

    /// Homogeneity degree `-a`.
    pub fn degree(&self) -> f64 {
        -self.a
    }
}

impl Field for RadialPower {
    fn a(&self) -> f64 {
        self.a
    }

    fn sample(&self, x: f64, y: f64) -> FieldSample {
        let dx = x - self.centre[0];
        let r2 = dx * dx + y * y;
        let w = r2.powf(-0.5 * self.a);
        let g = -self.a * w / r2;
        FieldSample { w, wx: g * dx, q: g * y.powf(1.0 + self.a) }
    }

    fn trace(&self, x: f64) -> f64 {
        (x - self.centre[0]).abs().powf(-self.a)
    }

    fn breakpoints(&self) -> &[f64] {
        &self.centre
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `∂ₓ(y^a ∂ₓ w) + ∂_y q` by central differences.
    fn divergence(f: &dyn Field, x: f64, y: f64) -> f64 {
        let d = 1e-4 * y;
        let a = f.a();
        let fx = |x: f64| y.powf(a) * f.sample(x, y).wx;
        let fy = |y: f64| f.sample(x, y).q;
        (fx(x + d) - fx(x - d)) / (2.0 * d) + (fy(y + d) - fy(y - d)) / (2.0 * d)
    }

    #[test]
    fn closed_form_fields_are_weighted_harmonic() {
        for &a in &[-0.5, 0.0, 0.5] {
            let t = TransversePower::new(a);
            let r = RadialPower::centred(a, 0.2);
            for &(x, y) in &[(0.3, 0.4), (-1.0, 0.05), (0.0, 2.0)] {
                assert!(divergence(&t, x, y).abs() < 1e-6);
                let scale = r.sample(x, y).w / (x * x + y * y).max(1e-3);
                assert!(divergence(&r, x, y).abs() < 1e-5 * scale.max(1.0), "a={a} ({x},{y})");
            }
        }
        let f = AffineField::new(0.3, 1.0, 2.0, 0.0);
        assert_eq!(divergence(&f, 0.1, 0.2), 0.0);
    }

    #[test]
    fn samples_match_finite_differences() {
        let r = RadialPower::centred(-0.4, 0.1);
        let (x, y, d) = (0.5, 0.3, 1e-6);
        let s = r.sample(x, y);
        let wx = (r.sample(x + d, y).w - r.sample(x - d, y).w) / (2.0 * d);
        let wy = (r.sample(x, y + d).w - r.sample(x, y - d).w) / (2.0 * d);
        assert!((s.wx - wx).abs() < 1e-8);
        assert!((s.wy(y, -0.4) - wy).abs() < 1e-8);
        assert!((r.sample(x, 1e-12).w - r.trace(x)).abs() < 1e-10);
    }
}
