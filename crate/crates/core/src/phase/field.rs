use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::phase::PhaseGrid;
use crate::Vec3;

/// Which representation a field's values hold: `f(x, v, t)` in the lab
/// frame or `f#(x, v, t) = f(x + t v, v, t)` along characteristics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Lab,
    Sharp,
}

/// Nonnegative samples of a phase-space density on a [`PhaseGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    values: Vec<f64>,
    frame: Frame,
    time: f64,
}

impl DistributionField {
    /// Validates that every value is finite and nonnegative.
    pub fn new(grid: &PhaseGrid, values: Vec<f64>, frame: Frame, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if !(time >= 0.0 && time.is_finite()) {
            return Err(Error::param("time", format!("must be finite and >= 0, got {time}")));
        }
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            let (x_index, v_index) = grid.describe(i);
            return Err(Error::NonFinite { x_index, v_index, value: v });
        }
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| **v < 0.0) {
            let (x_index, v_index) = grid.describe(i);
            return Err(Error::Negative { x_index, v_index, value: v });
        }
        Ok(Self { values, frame, time })
    }

    /// Skips validation; callers keep the invariants themselves.
    pub(crate) fn from_parts(values: Vec<f64>, frame: Frame, time: f64) -> Self {
        Self { values, frame, time }
    }

    pub fn zeros(grid: &PhaseGrid, frame: Frame, time: f64) -> Self {
        Self::from_parts(vec![0.0; grid.len()], frame, time)
    }

    /// Samples `f(x, v)` at every node; negative samples are clamped to zero.
    pub fn from_fn<F>(grid: &PhaseGrid, frame: Frame, time: f64, f: F) -> Self
    where
        F: Fn(&Vec3, &Vec3) -> f64 + Sync + Send,
    {
        Self::from_fn_with(Execution::default(), grid, frame, time, f)
    }

    pub fn from_fn_with<F>(exec: Execution, grid: &PhaseGrid, frame: Frame, time: f64, f: F) -> Self
    where
        F: Fn(&Vec3, &Vec3) -> f64 + Sync + Send,
    {
        let nv3 = grid.nv3();
        let mut values = vec![0.0; grid.len()];
        par::for_each_chunk(exec, &mut values, nv3, |xc, slab| {
            let x = grid.x_of(xc);
            for (vc, out) in slab.iter_mut().enumerate() {
                *out = f(&x, &grid.v_of(vc)).max(0.0);
            }
        });
        Self::from_parts(values, frame, time)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Velocity slab of position cell `x_cell`.
    pub fn slab(&self, grid: &PhaseGrid, x_cell: usize) -> &[f64] {
        let nv3 = grid.nv3();
        &self.values[x_cell * nv3..(x_cell + 1) * nv3]
    }

    pub fn at(&self, grid: &PhaseGrid, x_cell: usize, v_cell: usize) -> f64 {
        self.values[grid.index(x_cell, v_cell)]
    }

    pub fn scaled(&self, c: f64) -> Self {
        assert!(c >= 0.0, "scale factor must be nonnegative");
        Self::from_parts(self.values.iter().map(|v| v * c).collect(), self.frame, self.time)
    }

    pub fn require_frame(&self, expected: Frame) -> Result<()> {
        if self.frame != expected {
            return Err(Error::WrongFrame {
                expected,
                found: self.frame,
            });
        }
        Ok(())
    }

    pub fn check_shape(&self, grid: &PhaseGrid) -> Result<()> {
        if self.values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                found: self.values.len(),
            });
        }
        Ok(())
    }

    /// Total mass `sum f dx^3 dv^3`.
    pub fn mass(&self, grid: &PhaseGrid) -> f64 {
        par::chunked_sum(Execution::default(), self.values.len(), |i| self.values[i]) * grid.cell_volume()
    }

    /// Multilinear interpolation in all six coordinates, zero outside the box.
    pub fn interpolate(&self, grid: &PhaseGrid, x: &Vec3, v: &Vec3) -> f64 {
        let (xs, xw) = match corner_weights(&grid.x, x) {
            Some(c) => c,
            None => return 0.0,
        };
        let (vs, vw) = match corner_weights(&grid.v, v) {
            Some(c) => c,
            None => return 0.0,
        };
        let mut acc = 0.0;
        for (xi, wx) in xs.iter().zip(&xw) {
            if *wx == 0.0 {
                continue;
            }
            let base = xi * grid.nv3();
            for (vi, wv) in vs.iter().zip(&vw) {
                acc += wx * wv * self.values[base + vi];
            }
        }
        acc
    }
}

/// The 8 trilinear corners (flat index, weight) of `p` on a cubic axis grid.
pub(crate) fn corner_weights(axis: &crate::phase::Axis, p: &Vec3) -> Option<([usize; 8], [f64; 8])> {
    let n = axis.n;
    let mut base = [0usize; 3];
    let mut frac = [0f64; 3];
    for d in 0..3 {
        let s = axis.fractional_index(p[d]);
        if !(s >= 0.0 && s <= (n - 1) as f64) {
            return None;
        }
        let i0 = (s.floor() as usize).min(n - 2);
        base[d] = i0;
        frac[d] = s - i0 as f64;
    }
    let mut idx = [0usize; 8];
    let mut w = [0f64; 8];
    for c in 0..8 {
        let (a, b, cc) = ((c >> 2) & 1, (c >> 1) & 1, c & 1);
        idx[c] = PhaseGrid::flatten(n, [base[0] + a, base[1] + b, base[2] + cc]);
        let wa = if a == 1 { frac[0] } else { 1.0 - frac[0] };
        let wb = if b == 1 { frac[1] } else { 1.0 - frac[1] };
        let wc = if cc == 1 { frac[2] } else { 1.0 - frac[2] };
        w[c] = wa * wb * wc;
    }
    Some((idx, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_values() {
        let g = PhaseGrid::new(1.0, 1.0, 2, 2).unwrap();
        let mut vals = vec![1.0; g.len()];
        vals[9] = -0.5;
        let err = DistributionField::new(&g, vals.clone(), Frame::Lab, 0.0).unwrap_err();
        assert!(matches!(err, Error::Negative { .. }));
        vals[9] = f64::NAN;
        let err = DistributionField::new(&g, vals, Frame::Lab, 0.0).unwrap_err();
        assert!(matches!(err, Error::NonFinite { x_index: [0, 0, 1], v_index: [0, 0, 1], .. }));
        assert!(DistributionField::new(&g, vec![0.0; 3], Frame::Lab, 0.0).is_err());
    }

    #[test]
    fn interpolation_reproduces_linear_functions() {
        let g = PhaseGrid::new(1.0, 2.0, 3, 4).unwrap();
        let lin = |x: &Vec3, v: &Vec3| 5.0 + x.x - 0.5 * x.z + 0.25 * v.y + 0.1 * v.z;
        let f = DistributionField::from_fn(&g, Frame::Lab, 0.0, lin);
        let (x, v) = (Vec3::new(0.3, -0.2, 0.7), Vec3::new(-1.1, 0.4, 1.9));
        approx::assert_relative_eq!(f.interpolate(&g, &x, &v), lin(&x, &v), epsilon = 1e-12);
        assert_eq!(f.interpolate(&g, &Vec3::new(1.5, 0.0, 0.0), &v), 0.0);
    }
}
