use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::gauss_legendre_on;

/// Angular factor `b(theta)`, `theta` the angle between `v - v_*` and `omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum AngularFactor {
    /// `b = c`.
    Constant { c: f64 },
    /// `b = c cos^k(theta)`.
    CosPower { c: f64, k: u32 },
}

impl AngularFactor {
    pub fn eval_cos(&self, cos_theta: f64) -> f64 {
        match *self {
            AngularFactor::Constant { c } => c,
            AngularFactor::CosPower { c, k } => c * cos_theta.powi(k as i32),
        }
    }

    /// Closed-form integral over the hemisphere `cos(theta) >= 0`.
    pub fn hemisphere_integral(&self) -> f64 {
        match *self {
            AngularFactor::Constant { c } => 2.0 * PI * c,
            AngularFactor::CosPower { c, k } => 2.0 * PI * c / (k as f64 + 1.0),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        match *self {
            AngularFactor::Constant { c } => AngularFactor::Constant { c: c * s },
            AngularFactor::CosPower { c, k } => AngularFactor::CosPower { c: c * s, k },
        }
    }
}

/// Hard-sphere-type cutoff kernel `B(v - v_*, omega) = |v - v_*|^gamma b(theta)`
/// with hemisphere total `B_gamma` and Knudsen number `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSpec {
    pub gamma: f64,
    pub b: AngularFactor,
    #[serde(rename = "B_gamma")]
    pub b_total: f64,
    pub kappa: f64,
}

impl KernelSpec {
    /// Constant angular factor `b = B_gamma / (2 pi)`.
    pub fn constant(gamma: f64, b_total: f64, kappa: f64) -> Result<Self> {
        Self::new(gamma, AngularFactor::Constant { c: b_total / (2.0 * PI) }, kappa)
    }

    /// `b = c cos^k(theta)` normalised so the hemisphere integral is `b_total`.
    pub fn cos_power(gamma: f64, k: u32, b_total: f64, kappa: f64) -> Result<Self> {
        let c = b_total * (k as f64 + 1.0) / (2.0 * PI);
        Self::new(gamma, AngularFactor::CosPower { c, k }, kappa)
    }

    pub fn new(gamma: f64, b: AngularFactor, kappa: f64) -> Result<Self> {
        let spec = Self {
            gamma,
            b,
            b_total: b.hemisphere_integral(),
            kappa,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > -3.0 && self.gamma <= 1.0) {
            return Err(Error::param("gamma", format!("must lie in (-3, 1], got {}", self.gamma)));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::param("kappa", format!("must be positive, got {}", self.kappa)));
        }
        if !(self.b_total > 0.0 && self.b_total.is_finite()) {
            return Err(Error::param("B_gamma", format!("must be positive and finite, got {}", self.b_total)));
        }
        let quad = hemisphere_quadrature(&self.b);
        let rel = (quad - self.b_total).abs() / self.b_total;
        if rel > 1e-6 {
            return Err(Error::param(
                "B_gamma",
                format!("stored value {} disagrees with quadrature {} (relative {rel:e})", self.b_total, quad),
            ));
        }
        Ok(())
    }

    /// Same kernel with `b` (and hence `B_gamma`) multiplied by `s >= 0`.
    ///
    /// `s = 0` yields the collisionless kernel; it bypasses validation
    /// because `B_gamma = 0` is outside the admissible set.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            b: self.b.scaled(s),
            b_total: self.b_total * s,
            ..*self
        }
    }

    pub fn angular(&self, cos_theta: f64) -> f64 {
        self.b.eval_cos(cos_theta)
    }
}

/// Tensor Gauss-Legendre quadrature of `b` over the hemisphere, independent
/// of the closed forms above.
pub fn hemisphere_quadrature(b: &AngularFactor) -> f64 {
    let rule = gauss_legendre_on(32, 0.0, 1.0);
    // integrand independent of phi
    2.0 * PI
        * rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(c, w)| w * b.eval_cos(*c))
            .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_form_has_exact_total() {
        let k = KernelSpec::constant(0.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(k.angular(0.3), 1.0 / (2.0 * PI), epsilon = 1e-15);
        assert_relative_eq!(hemisphere_quadrature(&k.b), 1.0, epsilon = 1e-13);
    }

    #[test]
    fn cos_power_total_matches_quadrature() {
        for kp in 0..6 {
            let k = KernelSpec::cos_power(-1.0, kp, 2.5, 1.0).unwrap();
            assert_relative_eq!(k.b_total, 2.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn range_gate() {
        assert!(KernelSpec::constant(-3.0, 1.0, 1.0).is_err());
        assert!(KernelSpec::constant(1.5, 1.0, 1.0).is_err());
        assert!(KernelSpec::constant(1.0, 1.0, 0.0).is_err());
        assert!(KernelSpec::constant(-2.9, 1.0, 1.0).is_ok());
    }

    #[test]
    fn stored_total_is_checked() {
        let mut k = KernelSpec::constant(0.0, 1.0, 1.0).unwrap();
        k.b_total = 1.001;
        assert!(k.validate().is_err());
    }
}
