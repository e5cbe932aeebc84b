use serde::Serialize;

use crate::error::Result;
use crate::par::{self, Execution};
use crate::phase::{DistributionField, Frame, PhaseGrid};

/// Diagnostics of one frame change.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformReport {
    pub time: f64,
    /// Mass (sum times cell volume) before and after the shift.
    pub mass_in: f64,
    pub mass_out: f64,
    /// Relative L1 distance of the back-and-forth map from the input, when measured.
    pub round_trip_l1: Option<f64>,
    pub warning: Option<String>,
}

/// One-dimensional linear shift `out[i] = in(i + s)` along a strided axis, zero outside.
fn shift_axis(col: &[f64], out: &mut [f64], n: usize, stride: usize, s: f64) {
    let k = s.floor();
    let th = s - k;
    let k = k as isize;
    let get = |line: &[f64], j: isize| if j >= 0 && (j as usize) < n { line[j as usize] } else { 0.0 };
    let lines = col.len() / n;
    let mut line = vec![0.0; n];
    for l in 0..lines {
        // base index of the l-th line along this axis
        let base = (l / stride) * stride * n + l % stride;
        for (j, x) in line.iter_mut().enumerate() {
            *x = col[base + j * stride];
        }
        for i in 0..n {
            let j = i as isize + k;
            let a = get(&line, j);
            let b = if th == 0.0 { 0.0 } else { get(&line, j + 1) };
            out[base + i * stride] = (1.0 - th) * a + th * b;
        }
    }
}

/// `out(x, v) = in(x + tau v, v)` with trilinear interpolation in `x`.
pub(crate) fn shift_values(exec: Execution, values: &[f64], grid: &PhaseGrid, tau: f64) -> Vec<f64> {
    let nv3 = grid.nv3();
    let nx = grid.x.n;
    let nx3 = grid.nx3();
    let h = grid.x.spacing();
    if tau == 0.0 {
        return values.to_vec();
    }
    let cols = par::map_indexed(exec, nv3, |vc| {
        let v = grid.v_of(vc);
        let mut a: Vec<f64> = (0..nx3).map(|xc| values[xc * nv3 + vc]).collect();
        if v == crate::Vec3::zeros() {
            return a;
        }
        let mut b = vec![0.0; nx3];
        // x_cell = (i nx + j) nx + k: strides nx^2, nx, 1
        for (d, stride) in [(0usize, nx * nx), (1, nx), (2, 1)] {
            let s = tau * v[d] / h;
            if s != 0.0 {
                shift_axis(&a, &mut b, nx, stride, s);
                std::mem::swap(&mut a, &mut b);
            }
        }
        a
    });
    let mut out = vec![0.0; values.len()];
    par::for_each_chunk(exec, &mut out, nv3, |xc, slab| {
        for (vc, o) in slab.iter_mut().enumerate() {
            *o = cols[vc][xc];
        }
    });
    out
}

fn escape_warning(grid: &PhaseGrid, t: f64) -> Option<String> {
    let reach = t.abs() * grid.v.extent;
    (reach > 2.0 * grid.x.extent).then(|| {
        format!(
            "shift t*v_extent = {reach} exceeds twice the position half-width {}: most mass has left the box",
            grid.x.extent
        )
    })
}

fn mass(values: &[f64], grid: &PhaseGrid) -> f64 {
    par::chunked_sum(Execution::default(), values.len(), |i| values[i]) * grid.cell_volume()
}

fn relative_l1(a: &[f64], b: &[f64]) -> f64 {
    let exec = Execution::default();
    let num = par::chunked_sum(exec, a.len(), |i| (a[i] - b[i]).abs());
    let den = par::chunked_sum(exec, a.len(), |i| a[i].abs());
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Lab frame to sharp frame at the field's time.
pub fn sharp_transform(field: &DistributionField, grid: &PhaseGrid) -> Result<(DistributionField, TransformReport)> {
    field.require_frame(Frame::Lab)?;
    field.check_shape(grid)?;
    let t = field.time();
    let out = shift_values(Execution::default(), field.values(), grid, t);
    let report = TransformReport {
        time: t,
        mass_in: field.mass(grid),
        mass_out: mass(&out, grid),
        round_trip_l1: None,
        warning: escape_warning(grid, t),
    };
    Ok((DistributionField::from_parts(out, Frame::Sharp, t), report))
}

/// Sharp frame back to the lab frame; the report carries the relative L1
/// distance of `sharp(unsharp(f#))` from `f#`.
pub fn unsharp_transform(field: &DistributionField, grid: &PhaseGrid) -> Result<(DistributionField, TransformReport)> {
    field.require_frame(Frame::Sharp)?;
    field.check_shape(grid)?;
    let t = field.time();
    let exec = Execution::default();
    let out = shift_values(exec, field.values(), grid, -t);
    let back = shift_values(exec, &out, grid, t);
    let report = TransformReport {
        time: t,
        mass_in: field.mass(grid),
        mass_out: mass(&out, grid),
        round_trip_l1: Some(relative_l1(field.values(), &back)),
        warning: escape_warning(grid, t),
    };
    Ok((DistributionField::from_parts(out, Frame::Lab, t), report))
}

/// Relative L1 distance of `unsharp(sharp(f))` from a lab-frame `f`.
pub fn round_trip_discrepancy(field: &DistributionField, grid: &PhaseGrid) -> Result<f64> {
    let (s, _) = sharp_transform(field, grid)?;
    let (back, _) = unsharp_transform(&s, grid)?;
    Ok(relative_l1(field.values(), back.values()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::{maxwellian_eval, MaxwellianParams};
    use crate::Vec3;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize) -> (PhaseGrid, MaxwellianParams) {
        let params = MaxwellianParams::new(1.0, 1.0, 0.5, 1.0).unwrap();
        (PhaseGrid::truncated(&params, n, 5, 1e-12).unwrap(), params)
    }

    #[test]
    fn zero_time_is_identity() {
        let (g, params) = grid(6);
        let f = params.sample(&g, 0.8, Frame::Lab, 0.0);
        let (s, rep) = sharp_transform(&f, &g).unwrap();
        assert_eq!(s.values(), f.values());
        assert!(rep.warning.is_none());
        let (u, _) = unsharp_transform(&s, &g).unwrap();
        assert_eq!(u.values(), f.values());
    }

    #[test]
    fn zero_velocity_slice_is_fixed() {
        let (g, params) = grid(6);
        let f = DistributionField::from_fn(&g, Frame::Lab, 0.7, |x, v| maxwellian_eval(x, v, &params) * (1.0 + 0.3 * x.x.sin()));
        let (s, _) = sharp_transform(&f, &g).unwrap();
        let v0 = g.nearest_v_cell(&Vec3::zeros());
        for xc in 0..g.nx3() {
            assert_eq!(s.at(&g, xc, v0), f.at(&g, xc, v0));
        }
    }

    #[test]
    fn shift_matches_full_interpolation() {
        let (g, params) = grid(7);
        let f = DistributionField::from_fn(&g, Frame::Lab, 0.3, |x, v| maxwellian_eval(x, v, &params) * (1.0 + 0.2 * (x.y - v.z).cos()));
        let (s, _) = sharp_transform(&f, &g).unwrap();
        for i in (0..g.len()).step_by(53) {
            let (xc, vc) = g.split(i);
            let (x, v) = (g.x_of(xc), g.v_of(vc));
            let expect = f.interpolate(&g, &(x + 0.3 * v), &v);
            assert_relative_eq!(s.values()[i], expect, epsilon = 1e-14);
        }
    }

    #[test]
    fn travelling_maxwellian_becomes_static() {
        let params = MaxwellianParams::new(1.0, 1.0, 0.5, 1.0).unwrap();
        let mut errs = Vec::new();
        for n in [9, 17] {
            let g = PhaseGrid::new(4.5, 3.0, n, 7).unwrap();
            let t = 0.37;
            let f = DistributionField::from_fn(&g, Frame::Lab, t, |x, v| maxwellian_eval(&(x - t * v), v, &params));
            let (s, _) = sharp_transform(&f, &g).unwrap();
            let m = params.sample(&g, 1.0, Frame::Sharp, t);
            let err = s.values().iter().zip(m.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[1] < 0.5 * errs[0] && errs[1] < 0.1, "{errs:?}");
    }

    #[test]
    fn velocity_only_field_round_trips_exactly() {
        let (g, _) = grid(9);
        let t = 0.4;
        let f = DistributionField::from_fn(&g, Frame::Lab, t, |_, v| (-v.norm_squared()).exp());
        let (s, _) = sharp_transform(&f, &g).unwrap();
        let (u, rep) = unsharp_transform(&s, &g).unwrap();
        let h = g.x.spacing();
        let mut checked = 0;
        for i in 0..g.len() {
            let (xc, vc) = g.split(i);
            let (x, v) = (g.x_of(xc), g.v_of(vc));
            // both passes read only cells inside the box
            if (0..3).all(|d| x[d].abs() + t * v[d].abs() + h <= g.x.extent) {
                assert_relative_eq!(u.values()[i], f.values()[i], max_relative = 1e-14);
                checked += 1;
            }
        }
        assert!(checked > 0);
        assert!(rep.round_trip_l1.is_some());
    }

    #[test]
    fn random_round_trip_is_small() {
        let params = MaxwellianParams::new(1.0, 1.0, 0.5, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut prev = f64::INFINITY;
        for n in [9, 17] {
            let g = PhaseGrid::new(4.5, 3.0, n, 7).unwrap();
            let noise: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let f = DistributionField::from_fn(&g, Frame::Lab, 0.63, |x, v| {
                let w = 0.75 + 0.2 * (noise[0] * x.x + noise[1] * v.y).sin() + 0.05 * (noise[2] * x.z * v.x).cos();
                w * maxwellian_eval(&(x - 0.63 * v), v, &params)
            });
            let d = round_trip_discrepancy(&f, &g).unwrap();
            assert!(d < prev && d < 0.5, "n={n} d={d}");
            prev = d;
        }
    }

    #[test]
    fn escaping_mass_warns() {
        let (g, params) = grid(4);
        let f = params.sample(&g, 1.0, Frame::Lab, 3.0);
        let (_, rep) = sharp_transform(&f, &g).unwrap();
        assert!(rep.warning.is_some());
        assert!(rep.mass_out < rep.mass_in);
    }
}
