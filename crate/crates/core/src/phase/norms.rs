use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::phase::{log_maxwellian, DistributionField, Frame, MaxwellianParams, PhaseGrid};

/// Lebesgue exponent `0 < p <= inf`. Serialised as a number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LebesgueExponent {
    Finite(f64),
    Infinity,
}

impl LebesgueExponent {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            return Ok(Self::Infinity);
        }
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::param("p", format!("Lebesgue exponent must be positive, got {p}")));
        }
        Ok(Self::Finite(p))
    }

    pub fn value(&self) -> f64 {
        match self {
            Self::Finite(p) => *p,
            Self::Infinity => f64::INFINITY,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinity)
    }
}

impl fmt::Display for LebesgueExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(p) => write!(f, "{}", ryu::Buffer::new().format(*p)),
            Self::Infinity => f.write_str("inf"),
        }
    }
}

impl Serialize for LebesgueExponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(p) => s.serialize_f64(*p),
            Self::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for LebesgueExponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => LebesgueExponent::new(p).map_err(serde::de::Error::custom),
            Raw::Str(s) if s == "inf" => Ok(LebesgueExponent::Infinity),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected a positive number or \"inf\", got \"{s}\""))),
        }
    }
}

/// `(sum |f|^p dV)^(1/p)` for finite `p` (a quasi-norm when `p < 1`), grid
/// maximum for `p = inf`.
pub fn lp_norm(field: &DistributionField, p: LebesgueExponent, grid: &PhaseGrid) -> Result<f64> {
    field.check_shape(grid)?;
    lp_norm_values(field.values(), p, grid)
}

/// [`lp_norm`] on raw cell values laid out like a field on `grid`.
pub fn lp_norm_values(values: &[f64], p: LebesgueExponent, grid: &PhaseGrid) -> Result<f64> {
    if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        let (x_index, v_index) = grid.describe(i);
        return Err(Error::NonFinite { x_index, v_index, value: v });
    }
    let exec = Execution::default();
    let peak = par::chunked_argmax(exec, values.len(), |i| values[i].abs()).map_or(0.0, |(_, m)| m);
    if peak == 0.0 {
        return Ok(0.0);
    }
    match p {
        LebesgueExponent::Infinity => Ok(peak),
        LebesgueExponent::Finite(p) => {
            // scale by the peak so large p neither overflows nor underflows
            let s = par::chunked_sum(exec, values.len(), |i| (values[i].abs() / peak).powf(p));
            Ok(peak * (s * grid.cell_volume()).powf(1.0 / p))
        }
    }
}

/// Cellwise `f^mu`.
pub fn power_field(field: &DistributionField, mu: f64) -> DistributionField {
    DistributionField::from_parts(field.values().iter().map(|v| v.powf(mu)).collect(), field.frame(), field.time())
}

/// `L^p` norm of `f# / M`, evaluated through `ln f# - ln M` so the large
/// `1/M` at the box corners never materialises.
pub fn weighted_lp_norm(
    field: &DistributionField,
    p: LebesgueExponent,
    params: &MaxwellianParams,
    grid: &PhaseGrid,
) -> Result<f64> {
    field.require_frame(Frame::Sharp)?;
    field.check_shape(grid)?;
    let vals = field.values();
    if let Some((i, &v)) = vals.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        let (x_index, v_index) = grid.describe(i);
        return Err(Error::NonFinite { x_index, v_index, value: v });
    }
    let nv3 = grid.nv3();
    let log_ratio = |i: usize| {
        let v = vals[i];
        if v <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let (xc, vc) = (i / nv3, i % nv3);
        v.ln() - log_maxwellian(&grid.x_of(xc), &grid.v_of(vc), params)
    };
    let exec = Execution::default();
    let top = match par::chunked_argmax(exec, vals.len(), log_ratio) {
        Some((_, m)) if m > f64::NEG_INFINITY => m,
        _ => return Ok(0.0),
    };
    match p {
        LebesgueExponent::Infinity => Ok(top.exp()),
        LebesgueExponent::Finite(p) => {
            let s = par::chunked_sum(exec, vals.len(), |i| (p * (log_ratio(i) - top)).exp());
            Ok((top + (s * grid.cell_volume()).ln() / p).exp())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::maxwellian_eval;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn p(x: f64) -> LebesgueExponent {
        LebesgueExponent::new(x).unwrap()
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let g = PhaseGrid::new(1.0, 1.0, 3, 3).unwrap();
        let f = DistributionField::zeros(&g, Frame::Lab, 0.0);
        for q in [p(0.3), p(1.0), p(2.0), LebesgueExponent::Infinity] {
            assert_eq!(lp_norm(&f, q, &g).unwrap(), 0.0);
        }
    }

    #[test]
    fn unit_volume_indicator() {
        // 2 nodes per axis of spacing h; pick h so that one node cell has volume 1
        let g = PhaseGrid::new(0.5, 0.5, 2, 2).unwrap();
        assert_relative_eq!(g.cell_volume(), 1.0);
        let mut vals = vec![0.0; g.len()];
        vals[5] = 1.0;
        let f = DistributionField::new(&g, vals, Frame::Lab, 0.0).unwrap();
        assert_relative_eq!(lp_norm(&f, p(2.0), &g).unwrap(), 1.0, epsilon = 1e-15);
    }

    /// `||M||_p = [(pi/(p alpha))^(3/2) (pi/(p beta))^(3/2)]^(1/p)`.
    fn gaussian_norm(pp: f64, a: f64, b: f64) -> f64 {
        ((PI / (pp * a)).powf(1.5) * (PI / (pp * b)).powf(1.5)).powf(1.0 / pp)
    }

    #[test]
    fn maxwellian_norm_converges_to_closed_form() {
        let params = MaxwellianParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let exact = gaussian_norm(2.0, 1.0, 1.0);
        assert_relative_eq!(exact, 1.968_701_243_215_302, epsilon = 1e-12);
        let mut last = f64::INFINITY;
        for n in [8, 12, 16] {
            let g = PhaseGrid::truncated(&params, n, n, 1e-12).unwrap();
            let f = params.sample(&g, 1.0, Frame::Lab, 0.0);
            let err = (lp_norm(&f, p(2.0), &g).unwrap() - exact).abs() / exact;
            assert!(err < last, "n={n} err={err} last={last}");
            last = err;
        }
        assert!(last < 1e-3, "err {last}");
    }

    #[test]
    fn non_finite_cell_is_named() {
        let g = PhaseGrid::new(1.0, 1.0, 2, 2).unwrap();
        let mut vals = vec![1.0; g.len()];
        vals[g.index(7, 3)] = f64::INFINITY;
        let f = DistributionField::from_parts(vals, Frame::Lab, 0.0);
        match lp_norm(&f, p(1.0), &g) {
            Err(Error::NonFinite { x_index, v_index, .. }) => {
                assert_eq!(x_index, [1, 1, 1]);
                assert_eq!(v_index, [0, 1, 1]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn weighted_norm_of_scaled_maxwellian() {
        let params = MaxwellianParams::new(1.0, 2.0, 0.5, 1.0).unwrap();
        let g = PhaseGrid::truncated(&params, 4, 4, 1e-12).unwrap();
        let a = 0.7;
        let f = params.sample(&g, a, Frame::Sharp, 0.0);
        for q in [0.5, 1.0, 3.0] {
            let expect = a * g.phase_volume().powf(1.0 / q);
            assert_relative_eq!(weighted_lp_norm(&f, p(q), &params, &g).unwrap(), expect, max_relative = 1e-12);
        }
        assert_relative_eq!(weighted_lp_norm(&f, LebesgueExponent::Infinity, &params, &g).unwrap(), a, max_relative = 1e-12);
        let zero = DistributionField::zeros(&g, Frame::Sharp, 0.0);
        assert_eq!(weighted_lp_norm(&zero, p(2.0), &params, &g).unwrap(), 0.0);
    }

    #[test]
    fn weighted_norm_against_gaussian_product() {
        // f = M_{2 alpha, beta}  =>  f / M_{alpha, beta} = e^{-alpha |x|^2}
        let params = MaxwellianParams::new(1.0, 1.0, 0.5, 1.0).unwrap();
        let heavy = MaxwellianParams { alpha: 2.0, ..params };
        let g = PhaseGrid::truncated(&params, 7, 3, 1e-12).unwrap();
        let f = DistributionField::from_fn(&g, Frame::Sharp, 0.0, |x, v| maxwellian_eval(x, v, &heavy));
        for q in [0.5, 1.0, 2.0] {
            // 1D node sum of e^{-q x^2}, cubed, times the v-box volume
            let hx = g.x.spacing();
            let s1: f64 = (0..g.x.n).map(|i| (-q * g.x.coord(i).powi(2)).exp() * hx).sum();
            let vbox = (g.v.n as f64 * g.v.spacing()).powi(3);
            let expect = (s1.powi(3) * vbox).powf(1.0 / q);
            let got = weighted_lp_norm(&f, p(q), &params, &g).unwrap();
            assert_relative_eq!(got, expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn weighted_norm_needs_sharp_frame() {
        let params = MaxwellianParams::new(1.0, 1.0, 0.5, 1.0).unwrap();
        let g = PhaseGrid::truncated(&params, 3, 3, 1e-12).unwrap();
        let f = params.sample(&g, 1.0, Frame::Lab, 0.0);
        assert!(weighted_lp_norm(&f, p(1.0), &params, &g).is_err());
    }

    #[test]
    fn exponent_parsing() {
        let e: LebesgueExponent = serde_json::from_str("\"inf\"").unwrap();
        assert!(e.is_infinite());
        let e: LebesgueExponent = serde_json::from_str("0.5").unwrap();
        assert_eq!(e, p(0.5));
        assert!(serde_json::from_str::<LebesgueExponent>("-1").is_err());
        assert!(serde_json::from_str::<LebesgueExponent>("\"infinity\"").is_err());
        assert_eq!(LebesgueExponent::Infinity.to_string(), "inf");
    }

    fn random_field(seed: &[f64]) -> (PhaseGrid, DistributionField) {
        let g = PhaseGrid::new(1.0, 1.0, 2, 3).unwrap();
        let vals: Vec<f64> = (0..g.len()).map(|i| seed[i % seed.len()] * (1.0 + (i as f64 * 0.71).sin().abs())).collect();
        let f = DistributionField::new(&g, vals, Frame::Lab, 0.0).unwrap();
        (g, f)
    }

    proptest! {
        #[test]
        fn homogeneity(seed in prop::collection::vec(0.0f64..10.0, 5), c in 0.0f64..50.0, q in 0.1f64..8.0) {
            let (g, f) = random_field(&seed);
            for e in [p(q), LebesgueExponent::Infinity] {
                let lhs = lp_norm(&f.scaled(c), e, &g).unwrap();
                let rhs = c * lp_norm(&f, e, &g).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
            }
        }

        #[test]
        fn monotone(seed in prop::collection::vec(0.0f64..10.0, 5), bump in prop::collection::vec(0.0f64..3.0, 7), q in 0.1f64..8.0) {
            let (g, f) = random_field(&seed);
            let bigger: Vec<f64> = f.values().iter().enumerate().map(|(i, v)| v + bump[i % bump.len()]).collect();
            let h = DistributionField::new(&g, bigger, Frame::Lab, 0.0).unwrap();
            for e in [p(q), LebesgueExponent::Infinity] {
                prop_assert!(lp_norm(&f, e, &g).unwrap() <= lp_norm(&h, e, &g).unwrap() * (1.0 + 1e-14));
            }
        }

        #[test]
        fn power_identity(seed in prop::collection::vec(0.01f64..10.0, 5), mu in 0.05f64..0.95, q in 1.01f64..8.0) {
            let (g, f) = random_field(&seed);
            let lhs = lp_norm(&power_field(&f, mu), p(q), &g).unwrap();
            let rhs = lp_norm(&f, p(mu * q), &g).unwrap().powf(mu);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }
    }
}
