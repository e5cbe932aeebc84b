use serde::Serialize;

use crate::error::{Error, Result};
use crate::Vec3;

/// Pre- and post-collision velocities for one impact direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollisionPair {
    pub v: Vec3,
    pub v_star: Vec3,
    pub v_prime: Vec3,
    pub v_star_prime: Vec3,
    /// Impact direction, oriented so that `(v - v_star) . omega >= 0`.
    pub omega: Vec3,
    /// True if the supplied `omega` pointed into the wrong hemisphere and was negated.
    pub reflected: bool,
}

const UNIT_TOL: f64 = 1e-12;

/// `v' = v - [(v - v_*) . omega] omega`, `v_*' = v_* + [(v - v_*) . omega] omega`.
pub fn collide_pair(v: Vec3, v_star: Vec3, omega: Vec3) -> Result<CollisionPair> {
    let norm = omega.norm();
    if !((norm - 1.0).abs() <= UNIT_TOL) {
        return Err(Error::NonUnitOmega { norm });
    }
    let g = v - v_star;
    let (omega, reflected) = if g.dot(&omega) < 0.0 { (-omega, true) } else { (omega, false) };
    let k = g.dot(&omega) * omega;
    Ok(CollisionPair {
        v,
        v_star,
        v_prime: v - k,
        v_star_prime: v_star + k,
        omega,
        reflected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn head_on_swap() {
        let c = collide_pair(Vec3::x(), -Vec3::x(), Vec3::x()).unwrap();
        assert_eq!(c.v_prime, -Vec3::x());
        assert_eq!(c.v_star_prime, Vec3::x());
        assert!(!c.reflected);
    }

    #[test]
    fn grazing_is_identity() {
        let c = collide_pair(Vec3::new(1.0, 2.0, 0.0), Vec3::new(-1.0, 2.0, 0.0), Vec3::y()).unwrap();
        assert_eq!(c.v_prime, c.v);
        assert_eq!(c.v_star_prime, c.v_star);
    }

    #[test]
    fn oblique() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = collide_pair(Vec3::x(), Vec3::zeros(), Vec3::new(s, s, 0.0)).unwrap();
        assert_relative_eq!(c.v_prime, Vec3::new(0.5, -0.5, 0.0), epsilon = 1e-15);
        assert_relative_eq!(c.v_star_prime, Vec3::new(0.5, 0.5, 0.0), epsilon = 1e-15);
        assert_relative_eq!(c.v_prime + c.v_star_prime, Vec3::x(), epsilon = 1e-15);
        assert_relative_eq!(c.v_prime.norm_squared() + c.v_star_prime.norm_squared(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn wrong_hemisphere_is_reflected() {
        let c = collide_pair(Vec3::x(), Vec3::zeros(), -Vec3::x()).unwrap();
        assert!(c.reflected);
        assert_eq!(c.omega, Vec3::x());
        assert_eq!(c.v_prime, Vec3::zeros());
    }

    #[test]
    fn non_unit_omega_rejected() {
        let err = collide_pair(Vec3::x(), Vec3::zeros(), Vec3::new(1.0, 1e-5, 0.0)).unwrap_err();
        assert!(matches!(err, Error::NonUnitOmega { .. }));
    }
}
