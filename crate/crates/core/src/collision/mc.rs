use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::collision::quadrature::interp_slab;
use crate::collision::QuadratureScheme;
use crate::error::Result;
use crate::numeric::Moments;
use crate::phase::{DistributionField, Frame, KernelSpec, PhaseGrid};
use crate::Vec3;

/// SplitMix64 finaliser, used to derive independent per-cell streams.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Monte Carlo means with their standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub gain: f64,
    pub gain_se: f64,
    pub loss: f64,
    pub loss_se: f64,
    pub full: f64,
    pub full_se: f64,
    pub samples: usize,
}

/// Monte Carlo gain/loss at one cell of a lab-frame field.
///
/// `v_*` is drawn from the density `(beta/pi)^{3/2} exp(-beta |v_*|^2)` and
/// `omega` uniformly on the hemisphere facing `v - v_*`; the stream is seeded
/// from `quad.seed` and the flat cell index.
pub fn mc_cell(field: &DistributionField, grid: &PhaseGrid, x_cell: usize, v_cell: usize, spec: &KernelSpec, quad: &QuadratureScheme) -> Result<McEstimate> {
    field.require_frame(Frame::Lab)?;
    field.check_shape(grid)?;
    quad.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(quad.seed ^ splitmix64(grid.index(x_cell, v_cell) as u64)));
    let slab = field.slab(grid, x_cell);
    let v = grid.v_of(v_cell);
    let fv = slab[v_cell];
    let sd = (0.5 / quad.beta).sqrt();
    let norm = 2.0 * PI * (PI / quad.beta).powf(1.5);
    let mut scratch = Vec::with_capacity(64);
    let (mut gain, mut loss, mut full) = (Moments::default(), Moments::default(), Moments::default());
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    for _ in 0..quad.mc_samples {
        let vs = Vec3::new(normal() * sd, normal() * sd, normal() * sd);
        let mut om = Vec3::new(normal(), normal(), normal());
        om /= om.norm();
        let g = v - vs;
        let d = g.dot(&om);
        if d < 0.0 {
            om = -om;
        }
        let d = d.abs();
        let r = g.norm();
        let (lg, ls) = if r == 0.0 {
            (0.0, 0.0)
        } else {
            let w = norm * (quad.beta * vs.norm_squared()).exp() * r.powf(spec.gamma) * spec.angular(d / r) / spec.kappa;
            let fs = interp_slab(quad.interp, &grid.v, slab, &vs, &mut scratch);
            let k = d * om;
            let fp = interp_slab(quad.interp, &grid.v, slab, &(v - k), &mut scratch);
            let fsp = interp_slab(quad.interp, &grid.v, slab, &(vs + k), &mut scratch);
            (w * fp * fsp, w * fv * fs)
        };
        gain.push(lg);
        loss.push(ls);
        full.push(lg - ls);
    }
    Ok(McEstimate {
        gain: gain.mean,
        gain_se: gain.se(),
        loss: loss.mean,
        loss_se: loss.se(),
        full: full.mean,
        full_se: full.se(),
        samples: quad.mc_samples,
    })
}
