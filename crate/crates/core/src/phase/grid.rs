use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::MaxwellianParams;
use crate::Vec3;

/// Maxwellian envelope level below which the domain is truncated.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-12;

/// Uniform node-centred axis `-extent, ..., extent` with `n` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub extent: f64,
    pub n: usize,
}

impl Axis {
    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / (self.n - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.extent + i as f64 * self.spacing()
    }

    /// Continuous index of `x`: `(x + extent) / h`.
    pub fn fractional_index(&self, x: f64) -> f64 {
        (x + self.extent) / self.spacing()
    }
}

/// Tensor grid over `[-X, X]^3 x [-V, V]^3`.
///
/// Values are stored velocity-major inside each position cell:
/// `index = x_cell * nv^3 + v_cell`, with `x_cell = (ix * nx + iy) * nx + iz`
/// and likewise for `v_cell`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub x: Axis,
    pub v: Axis,
}

impl PhaseGrid {
    pub fn new(x_extent: f64, v_extent: f64, nx: usize, nv: usize) -> Result<Self> {
        if nx < 2 || nv < 2 {
            return Err(Error::param("nx/nv", format!("need at least 2 points per axis, got nx={nx}, nv={nv}")));
        }
        if !(x_extent > 0.0 && x_extent.is_finite()) {
            return Err(Error::param("x_extent", format!("must be positive and finite, got {x_extent}")));
        }
        if !(v_extent > 0.0 && v_extent.is_finite()) {
            return Err(Error::param("v_extent", format!("must be positive and finite, got {v_extent}")));
        }
        Ok(Self {
            x: Axis { extent: x_extent, n: nx },
            v: Axis { extent: v_extent, n: nv },
        })
    }

    /// Smallest extents for which the Maxwellian envelope drops below `tol`
    /// at the box faces.
    pub fn truncated(params: &MaxwellianParams, nx: usize, nv: usize, tol: f64) -> Result<Self> {
        let (x, v) = Self::truncation_extents(params, tol)?;
        Self::new(x, v, nx, nv)
    }

    pub fn truncation_extents(params: &MaxwellianParams, tol: f64) -> Result<(f64, f64)> {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::param("truncation_tol", format!("must lie in (0, 1), got {tol}")));
        }
        let l = (1.0 / tol).ln();
        // nudge outward so the admissibility inequality is strict
        let pad = 1.0 + 1e-9;
        Ok(((l / params.alpha).sqrt() * pad, (l / params.beta).sqrt() * pad))
    }

    /// Checks `e^{-alpha X^2} < tol` and `e^{-beta V^2} < tol`.
    pub fn check_truncation(&self, params: &MaxwellianParams, tol: f64) -> Result<()> {
        let ex = (-params.alpha * self.x.extent * self.x.extent).exp();
        let ev = (-params.beta * self.v.extent * self.v.extent).exp();
        if ex >= tol {
            return Err(Error::param(
                "x_extent",
                format!("envelope e^(-alpha X^2) = {ex:e} at the box face is not below truncation_tol {tol:e}"),
            ));
        }
        if ev >= tol {
            return Err(Error::param(
                "v_extent",
                format!("envelope e^(-beta V^2) = {ev:e} at the box face is not below truncation_tol {tol:e}"),
            ));
        }
        Ok(())
    }

    pub fn nx3(&self) -> usize {
        self.x.n.pow(3)
    }

    pub fn nv3(&self) -> usize {
        self.v.n.pow(3)
    }

    pub fn len(&self) -> usize {
        self.nx3() * self.nv3()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx3(&self) -> f64 {
        self.x.spacing().powi(3)
    }

    pub fn dv3(&self) -> f64 {
        self.v.spacing().powi(3)
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx3() * self.dv3()
    }

    /// Total volume carried by the node cells, `(nx hx)^3 (nv hv)^3`.
    pub fn phase_volume(&self) -> f64 {
        self.cell_volume() * self.len() as f64
    }

    pub fn index(&self, x_cell: usize, v_cell: usize) -> usize {
        x_cell * self.nv3() + v_cell
    }

    pub fn split(&self, index: usize) -> (usize, usize) {
        (index / self.nv3(), index % self.nv3())
    }

    pub fn unflatten(n: usize, cell: usize) -> [usize; 3] {
        [cell / (n * n), (cell / n) % n, cell % n]
    }

    pub fn flatten(n: usize, idx: [usize; 3]) -> usize {
        (idx[0] * n + idx[1]) * n + idx[2]
    }

    pub fn x_of(&self, x_cell: usize) -> Vec3 {
        let [i, j, k] = Self::unflatten(self.x.n, x_cell);
        Vec3::new(self.x.coord(i), self.x.coord(j), self.x.coord(k))
    }

    pub fn v_of(&self, v_cell: usize) -> Vec3 {
        let [i, j, k] = Self::unflatten(self.v.n, v_cell);
        Vec3::new(self.v.coord(i), self.v.coord(j), self.v.coord(k))
    }

    /// Nearest velocity node to `v` (clamped into the box).
    pub fn nearest_v_cell(&self, v: &Vec3) -> usize {
        let idx = |c: f64| {
            let f = self.v.fractional_index(c).round();
            f.clamp(0.0, (self.v.n - 1) as f64) as usize
        };
        Self::flatten(self.v.n, [idx(v.x), idx(v.y), idx(v.z)])
    }

    pub fn nearest_x_cell(&self, x: &Vec3) -> usize {
        let idx = |c: f64| {
            let f = self.x.fractional_index(c).round();
            f.clamp(0.0, (self.x.n - 1) as f64) as usize
        };
        Self::flatten(self.x.n, [idx(x.x), idx(x.y), idx(x.z)])
    }

    /// Coordinates of both halves of a flat index, for diagnostics.
    pub fn describe(&self, index: usize) -> ([usize; 3], [usize; 3]) {
        let (xc, vc) = self.split(index);
        (Self::unflatten(self.x.n, xc), Self::unflatten(self.v.n, vc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(PhaseGrid::new(1.0, 1.0, 1, 4).is_err());
        assert!(PhaseGrid::new(0.0, 1.0, 4, 4).is_err());
        assert!(PhaseGrid::new(1.0, f64::INFINITY, 4, 4).is_err());
    }

    #[test]
    fn truncated_grid_is_admissible() {
        let p = MaxwellianParams::new(1.3, 0.7, 0.5, 1.0).unwrap();
        let g = PhaseGrid::truncated(&p, 4, 5, 1e-12).unwrap();
        g.check_truncation(&p, 1e-12).unwrap();
        let small = PhaseGrid::new(2.0, 2.0, 4, 4).unwrap();
        assert!(small.check_truncation(&p, 1e-12).is_err());
    }

    #[test]
    fn index_round_trip() {
        let g = PhaseGrid::new(1.0, 2.0, 3, 4).unwrap();
        for idx in [0, 17, g.len() - 1] {
            let (xc, vc) = g.split(idx);
            assert_eq!(g.index(xc, vc), idx);
            let xi = PhaseGrid::unflatten(3, xc);
            assert_eq!(PhaseGrid::flatten(3, xi), xc);
        }
        assert_eq!(g.x_of(0), Vec3::new(-1.0, -1.0, -1.0));
        assert_eq!(g.v_of(g.nv3() - 1), Vec3::new(2.0, 2.0, 2.0));
    }
}
