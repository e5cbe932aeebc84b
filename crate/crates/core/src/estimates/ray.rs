use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::record::{BoundCheckRecord, BoundId, Inputs};
use crate::error::{Error, Result};
use crate::numeric::adaptive_gk;
use crate::Vec3;

/// Smallest accepted `|V|`.
pub const MIN_SPEED: f64 = 1e-8;

/// `int_{tau0}^inf exp(-a |x + tau V|^2) dtau` in closed form.
pub fn ray_integral_from(a: f64, x: &Vec3, v: &Vec3, tau0: f64) -> f64 {
    let s2 = v.norm_squared();
    let speed = s2.sqrt();
    let shift = x.dot(v) / s2;
    let perp = (x - shift * v).norm_squared();
    let z = (a.sqrt() * speed) * (tau0 + shift);
    (-a * perp).exp() * PI.sqrt() / (2.0 * a.sqrt() * speed) * erfc(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RayQuadrature {
    pub rel_tol: f64,
    pub max_panels: usize,
    /// Quadrature stops this many Gaussian widths past the minimiser; the
    /// remainder is added in closed form.
    pub widths: f64,
}

impl Default for RayQuadrature {
    fn default() -> Self {
        Self { rel_tol: 1e-10, max_panels: 200, widths: 8.0 }
    }
}

/// Checks `int_0^inf exp(-a |x + tau V|^2) dtau <= sqrt(pi/a) / |V|` with the
/// left side from adaptive Gauss-Kronrod on `[0, T*]` plus the exact tail.
pub fn verify_ray_bound(index: usize, x: &Vec3, v: &Vec3, a: f64, quad: &RayQuadrature) -> Result<BoundCheckRecord> {
    let speed = v.norm();
    if !(speed >= MIN_SPEED) {
        return Err(Error::param("V", format!("|V| = {speed} is below {MIN_SPEED}; the bound degenerates")));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::param("a", format!("rate must be positive, got {a}")));
    }
    let width = 1.0 / (a.sqrt() * speed);
    let centre = (-x.dot(v) / (speed * speed)).max(0.0);
    let end = centre + quad.widths * width;
    let mut cuts = vec![0.0, (centre - quad.widths * width).max(0.0), centre, end];
    cuts.dedup();
    let integrand = |tau: f64| (-a * (x + tau * v).norm_squared()).exp();
    let scale = PI.sqrt() * width;
    let (mut value, mut error) = (0.0, 0.0);
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            let r = adaptive_gk(integrand, w[0], w[1], quad.rel_tol * scale * 1e-3, quad.rel_tol, quad.max_panels);
            value += r.value;
            error += r.error;
        }
    }
    let tail = ray_integral_from(a, x, v, end);
    let lhs = value + tail;
    let rhs = (PI / a).sqrt() / speed;
    let inputs = Inputs::new().vec3("x", x).vec3("V", v).num("a", a);
    Ok(BoundCheckRecord::judge(BoundId::Ray, index, None, inputs, lhs, error, rhs, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn half_gaussian() {
        let r = verify_ray_bound(0, &Vec3::zeros(), &Vec3::new(1.0, 0.0, 0.0), 1.0, &RayQuadrature::default()).unwrap();
        assert_relative_eq!(r.lhs, PI.sqrt() / 2.0, max_relative = 1e-10);
        assert_relative_eq!(r.rhs, PI.sqrt(), max_relative = 1e-15);
        assert!(r.pass);
    }

    #[test]
    fn closed_form_agrees_with_quadrature() {
        let x = Vec3::new(0.3, -1.2, 0.8);
        let v = Vec3::new(-0.7, 0.4, 0.1);
        let r = verify_ray_bound(0, &x, &v, 2.3, &RayQuadrature::default()).unwrap();
        // independent oracle: complete the square by hand
        let s2 = v.norm_squared();
        let d2 = x.norm_squared() - x.dot(&v).powi(2) / s2;
        let oracle = (-2.3 * d2).exp() * (PI / 2.3).sqrt() / (2.0 * s2.sqrt()) * erfc((2.3 * s2).sqrt() * x.dot(&v) / s2);
        assert_relative_eq!(r.lhs, oracle, max_relative = 1e-9);
    }

    #[test]
    fn margin_closes_along_the_ray() {
        let v = Vec3::new(0.0, 2.0, 0.0);
        let mut last = f64::INFINITY;
        for s in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let x = -s * v;
            let r = verify_ray_bound(0, &x, &v, 1.0, &RayQuadrature::default()).unwrap();
            assert!(r.pass && r.margin > -1e-12 && r.margin < last);
            last = r.margin;
        }
        assert!(last.abs() < 1e-12);
    }

    #[test]
    fn large_rate_sweep() {
        let x = Vec3::new(0.1, 0.2, -0.1);
        let v = Vec3::new(1.0, 1.0, 0.5);
        for k in 0..8 {
            let a = 10f64.powi(k);
            let r = verify_ray_bound(0, &x, &v, a, &RayQuadrature::default()).unwrap();
            assert!(r.lhs / r.rhs <= 1.0 && r.pass);
        }
    }

    #[test]
    fn tiny_speed_rejected() {
        assert!(verify_ray_bound(0, &Vec3::zeros(), &Vec3::new(1e-9, 0.0, 0.0), 1.0, &RayQuadrature::default()).is_err());
    }
}
