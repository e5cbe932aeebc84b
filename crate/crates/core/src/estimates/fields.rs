use std::f64::consts::PI;

use rand::Rng;

use super::sampling::{normal3, stream};
use crate::error::Result;
use crate::phase::{maxwellian_eval, DistributionField, Frame, MaxwellianParams, PhaseGrid};
use crate::Vec3;

const MODES: usize = 4;
/// Fraction of the sandwich gap the perturbation may use.
const FILL: f64 = 0.95;

/// Sharp-frame field `a(x, v) M(x, v)` with a smooth random amplitude
/// strictly inside `[a_m, a_M]`.
///
/// `a = mid + half FILL theta`, where `theta` is a convex combination of
/// `cos(k.x + l.v + phi)` with Gaussian wave vectors.
pub fn sandwiched_field(grid: &PhaseGrid, params: &MaxwellianParams, seed: u64, time: f64) -> Result<DistributionField> {
    params.validate()?;
    let mut rng = stream(seed, 0x5eed);
    let mut modes: Vec<(Vec3, Vec3, f64, f64)> = (0..MODES)
        .map(|_| (normal3(&mut rng), normal3(&mut rng), 2.0 * PI * rng.gen::<f64>(), rng.gen::<f64>() + 1e-3))
        .collect();
    let total: f64 = modes.iter().map(|m| m.3).sum();
    for m in &mut modes {
        m.3 /= total;
    }
    let mid = 0.5 * (params.a_min + params.a_max);
    let half = 0.5 * (params.a_max - params.a_min);
    let p = *params;
    Ok(DistributionField::from_fn(grid, Frame::Sharp, time, move |x, v| {
        let theta: f64 = modes.iter().map(|(k, l, phi, c)| c * (k.dot(x) + l.dot(v) + phi).cos()).sum();
        (mid + half * FILL * theta) * maxwellian_eval(x, v, &p)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::sandwich_check;

    #[test]
    fn stays_inside_the_sandwich() {
        let params = MaxwellianParams::new(1.0, 1.0, 0.5, 1.0).unwrap();
        let grid = PhaseGrid::truncated(&params, 4, 6, 1e-10).unwrap();
        for seed in 0..5 {
            let f = sandwiched_field(&grid, &params, seed, 0.0).unwrap();
            let r = sandwich_check(&f, &params, &grid).unwrap();
            assert!(r.pass && r.violations == 0);
        }
        let a = sandwiched_field(&grid, &params, 1, 0.0).unwrap();
        let b = sandwiched_field(&grid, &params, 2, 0.0).unwrap();
        assert_ne!(a.values(), b.values());
    }
}
