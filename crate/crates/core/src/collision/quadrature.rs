use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{gauss_hermite, gauss_legendre};
use crate::phase::{Axis, PhaseGrid};
use crate::Vec3;

/// Product rule on the full sphere: Gauss-Legendre in `cos(theta)` times
/// `n_phi` equispaced azimuths `(j + 1/2) 2 pi / n_phi`.
///
/// With `n_phi` even the rule is antipodally symmetric, so masking it to any
/// hemisphere keeps exactly half of the weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereRule {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl SphereRule {
    pub fn validate(&self) -> Result<()> {
        if self.n_theta < 1 || self.n_phi < 2 || self.n_phi % 2 != 0 {
            return Err(Error::param(
                "sphere",
                format!("need n_theta >= 1 and even n_phi >= 2, got ({}, {})", self.n_theta, self.n_phi),
            ));
        }
        Ok(())
    }

    /// Unit directions and weights; weights sum to `4 pi`.
    pub fn nodes(&self) -> Vec<(Vec3, f64)> {
        let gl = gauss_legendre(self.n_theta);
        let dphi = 2.0 * PI / self.n_phi as f64;
        let mut out = Vec::with_capacity(self.n_theta * self.n_phi);
        for (c, w) in gl.nodes.iter().zip(&gl.weights) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for j in 0..self.n_phi {
                let phi = (j as f64 + 0.5) * dphi;
                out.push((Vec3::new(s * phi.cos(), s * phi.sin(), *c), w * dphi));
            }
        }
        out
    }
}

/// Rule for the partner-velocity integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityRule {
    /// Grid nodes with the given stride, weight `(stride h_v)^3`.
    GridMidpoint { stride: usize },
    /// Tensor Gauss-Hermite nodes for the weight `exp(-beta |v_*|^2)`.
    GaussHermite { order: usize },
}

/// Velocity interpolation used for off-grid post-collision velocities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interp {
    #[default]
    Trilinear,
    /// Tensor cubic Lagrange, clamped at zero.
    Tricubic,
}

/// One partner-velocity node. `weight` already includes the Gauss-Hermite
/// factor `exp(beta |v_*|^2)`, so integrands are summed as `weight * h(v_*)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityNode {
    pub v: Vec3,
    pub weight: f64,
    /// Grid cell if the node coincides with a grid velocity.
    pub cell: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureScheme {
    pub sphere: SphereRule,
    pub velocity: VelocityRule,
    pub interp: Interp,
    /// Rate of the Gaussian used by Gauss-Hermite nodes and Monte Carlo sampling.
    pub beta: f64,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for QuadratureScheme {
    fn default() -> Self {
        Self {
            sphere: SphereRule { n_theta: 2, n_phi: 4 },
            velocity: VelocityRule::GaussHermite { order: 2 },
            interp: Interp::Trilinear,
            beta: 1.0,
            mc_samples: 4096,
            seed: 0,
        }
    }
}

impl QuadratureScheme {
    pub fn validate(&self) -> Result<()> {
        self.sphere.validate()?;
        match self.velocity {
            VelocityRule::GridMidpoint { stride } if stride == 0 => {
                return Err(Error::param("velocity", "stride must be positive"));
            }
            VelocityRule::GaussHermite { order } if order == 0 => {
                return Err(Error::param("velocity", "Gauss-Hermite order must be positive"));
            }
            _ => {}
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::param("beta", format!("must be positive, got {}", self.beta)));
        }
        Ok(())
    }

    pub fn velocity_nodes(&self, grid: &PhaseGrid) -> Vec<VelocityNode> {
        match self.velocity {
            VelocityRule::GridMidpoint { stride } => {
                let n = grid.v.n;
                let w = (stride as f64 * grid.v.spacing()).powi(3);
                let idx: Vec<usize> = (0..n).step_by(stride).collect();
                let mut out = Vec::with_capacity(idx.len().pow(3));
                for &i in &idx {
                    for &j in &idx {
                        for &k in &idx {
                            let cell = PhaseGrid::flatten(n, [i, j, k]);
                            out.push(VelocityNode { v: grid.v_of(cell), weight: w, cell: Some(cell) });
                        }
                    }
                }
                out
            }
            VelocityRule::GaussHermite { order } => {
                let gh = gauss_hermite(order);
                let s = 1.0 / self.beta.sqrt();
                let mut out = Vec::with_capacity(order.pow(3));
                for (a, wa) in gh.nodes.iter().zip(&gh.weights) {
                    for (b, wb) in gh.nodes.iter().zip(&gh.weights) {
                        for (c, wc) in gh.nodes.iter().zip(&gh.weights) {
                            let u2 = a * a + b * b + c * c;
                            let v = Vec3::new(a * s, b * s, c * s);
                            // exp(u^2) applied in log space to keep far nodes finite
                            let weight = (wa.ln() + wb.ln() + wc.ln() + u2).exp() * s.powi(3);
                            let cell = exact_cell(grid, &v);
                            out.push(VelocityNode { v, weight, cell });
                        }
                    }
                }
                out
            }
        }
    }
}

fn exact_cell(grid: &PhaseGrid, v: &Vec3) -> Option<usize> {
    let c = grid.nearest_v_cell(v);
    (grid.v_of(c) == *v).then_some(c)
}

/// Appends the interpolation stencil of `v` on the velocity axis to `out`.
/// Nothing is appended outside the box.
pub(crate) fn push_stencil(interp: Interp, axis: &Axis, v: &Vec3, out: &mut Vec<(u32, f64)>) {
    match interp {
        Interp::Tricubic if axis.n >= 4 => push_cubic(axis, v, out),
        _ => {
            if let Some((idx, w)) = crate::phase::corner_weights(axis, v) {
                out.extend(idx.iter().zip(&w).filter(|(_, w)| **w != 0.0).map(|(i, w)| (*i as u32, *w)));
            }
        }
    }
}

fn push_cubic(axis: &Axis, v: &Vec3, out: &mut Vec<(u32, f64)>) {
    let n = axis.n;
    let mut start = [0usize; 3];
    let mut w = [[0f64; 4]; 3];
    for d in 0..3 {
        let s = axis.fractional_index(v[d]);
        if !(s >= 0.0 && s <= (n - 1) as f64) {
            return;
        }
        let i0 = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        start[d] = i0;
        let u = s - i0 as f64;
        for (k, wk) in w[d].iter_mut().enumerate() {
            let mut l = 1.0;
            for m in 0..4 {
                if m != k {
                    l *= (u - m as f64) / (k as f64 - m as f64);
                }
            }
            *wk = l;
        }
    }
    for a in 0..4 {
        for b in 0..4 {
            let wab = w[0][a] * w[1][b];
            for c in 0..4 {
                let wt = wab * w[2][c];
                if wt != 0.0 {
                    let idx = PhaseGrid::flatten(n, [start[0] + a, start[1] + b, start[2] + c]);
                    out.push((idx as u32, wt));
                }
            }
        }
    }
}

/// Interpolated velocity profile `f(v)` from one position slab.
pub(crate) fn interp_slab(interp: Interp, axis: &Axis, slab: &[f64], v: &Vec3, scratch: &mut Vec<(u32, f64)>) -> f64 {
    scratch.clear();
    push_stencil(interp, axis, v, scratch);
    let s: f64 = scratch.iter().map(|(i, w)| w * slab[*i as usize]).sum();
    s.max(0.0)
}
