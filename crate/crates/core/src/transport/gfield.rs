use crate::error::Result;
use crate::par::{self, Execution};
use crate::phase::{log_maxwellian, DistributionField, Frame, MaxwellianParams, PhaseGrid};

fn rescale(field: &DistributionField, params: &MaxwellianParams, grid: &PhaseGrid, sign: f64) -> Result<DistributionField> {
    field.require_frame(Frame::Sharp)?;
    field.check_shape(grid)?;
    let nv3 = grid.nv3();
    let vals = field.values();
    let mut out = vec![0.0; vals.len()];
    par::for_each_chunk(Execution::default(), &mut out, nv3, |xc, slab| {
        let x = grid.x_of(xc);
        for (vc, o) in slab.iter_mut().enumerate() {
            let f = vals[xc * nv3 + vc];
            *o = if f > 0.0 { (f.ln() + sign * log_maxwellian(&x, &grid.v_of(vc), params)).exp() } else { 0.0 };
        }
    });
    Ok(DistributionField::from_parts(out, Frame::Sharp, field.time()))
}

/// `g# = f# / M`, divided in log space.
pub fn g_transform(field: &DistributionField, params: &MaxwellianParams, grid: &PhaseGrid) -> Result<DistributionField> {
    rescale(field, params, grid, -1.0)
}

/// `f# = M g#`.
pub fn g_inverse(g: &DistributionField, params: &MaxwellianParams, grid: &PhaseGrid) -> Result<DistributionField> {
    rescale(g, params, grid, 1.0)
}
