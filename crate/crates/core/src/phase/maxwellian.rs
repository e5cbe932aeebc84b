use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::phase::{DistributionField, Frame, PhaseGrid};
use crate::Vec3;

/// Envelope `M(x, v) = exp(-alpha |x|^2 - beta |v|^2)` and the amplitudes
/// of the sandwich `a_m M <= f# <= a_M M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxwellianParams {
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "a_m")]
    pub a_min: f64,
    #[serde(rename = "a_M")]
    pub a_max: f64,
}

impl MaxwellianParams {
    pub fn new(alpha: f64, beta: f64, a_min: f64, a_max: f64) -> Result<Self> {
        let p = Self { alpha, beta, a_min, a_max };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::param("alpha", format!("must be positive, got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::param("beta", format!("must be positive, got {}", self.beta)));
        }
        if !(self.a_min > 0.0 && self.a_max.is_finite()) {
            return Err(Error::param("a_m", format!("amplitudes must be positive and finite, got a_m={}, a_M={}", self.a_min, self.a_max)));
        }
        if self.a_min > self.a_max {
            return Err(Error::param("a_m", format!("sandwich amplitudes inverted: a_m={} > a_M={}", self.a_min, self.a_max)));
        }
        Ok(())
    }

    /// Samples `c * M` on the grid in the given frame.
    pub fn sample(&self, grid: &PhaseGrid, c: f64, frame: Frame, time: f64) -> DistributionField {
        let p = *self;
        DistributionField::from_fn(grid, frame, time, move |x, v| c * maxwellian_eval(x, v, &p))
    }
}

pub fn maxwellian_eval(x: &Vec3, v: &Vec3, params: &MaxwellianParams) -> f64 {
    log_maxwellian(x, v, params).exp()
}

pub fn log_maxwellian(x: &Vec3, v: &Vec3, params: &MaxwellianParams) -> f64 {
    -params.alpha * x.norm_squared() - params.beta * v.norm_squared()
}

/// Outcome of the nodewise sandwich test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub pass: bool,
    /// `min over cells of min(f - a_m M, a_M M - f)`.
    pub min_margin: f64,
    pub worst_cell: usize,
    pub lower_margin: f64,
    pub upper_margin: f64,
    pub violations: usize,
}

/// Checks `a_m M <= f# <= a_M M` at every node.
pub fn sandwich_check(field: &DistributionField, params: &MaxwellianParams, grid: &PhaseGrid) -> Result<SandwichReport> {
    field.require_frame(Frame::Sharp)?;
    field.check_shape(grid)?;
    let nv3 = grid.nv3();
    let vals = field.values();
    let per_slab = par::map_indexed(Execution::default(), grid.nx3(), |xc| {
        let x = grid.x_of(xc);
        let mut lower = (f64::INFINITY, 0usize);
        let mut upper = (f64::INFINITY, 0usize);
        let mut violations = 0usize;
        for vc in 0..nv3 {
            let i = xc * nv3 + vc;
            let m = maxwellian_eval(&x, &grid.v_of(vc), params);
            let lo = vals[i] - params.a_min * m;
            let hi = params.a_max * m - vals[i];
            if lo < 0.0 || hi < 0.0 {
                violations += 1;
            }
            if lo < lower.0 {
                lower = (lo, i);
            }
            if hi < upper.0 {
                upper = (hi, i);
            }
        }
        (lower, upper, violations)
    });
    let mut lower = (f64::INFINITY, 0usize);
    let mut upper = (f64::INFINITY, 0usize);
    let mut violations = 0;
    for (lo, hi, n) in per_slab {
        if lo.0 < lower.0 {
            lower = lo;
        }
        if hi.0 < upper.0 {
            upper = hi;
        }
        violations += n;
    }
    let (min_margin, worst_cell) = if lower.0 <= upper.0 { lower } else { upper };
    Ok(SandwichReport {
        pass: violations == 0,
        min_margin,
        worst_cell,
        lower_margin: lower.0,
        upper_margin: upper.0,
        violations,
    })
}
