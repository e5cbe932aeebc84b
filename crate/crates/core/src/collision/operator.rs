use serde::Serialize;

use crate::collision::quadrature::{interp_slab, push_stencil};
use crate::collision::{Interp, QuadratureScheme, VelocityNode, VelocityRule};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::phase::{Axis, DistributionField, Frame, KernelSpec, PhaseGrid};
use crate::Vec3;

/// A single collision integral with the partner-velocity measure that was
/// skipped at the singular diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellIntegral {
    pub value: f64,
    pub excluded_measure: f64,
}

/// Gain and loss magnitudes at one cell, computed on shared nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellTerms {
    pub gain: f64,
    pub loss: f64,
    pub excluded_measure: f64,
}

impl CellTerms {
    pub fn full(&self) -> f64 {
        self.gain - self.loss
    }
}

/// Sphere and partner-velocity nodes resolved against a grid.
#[derive(Debug, Clone)]
pub struct PreparedQuadrature {
    pub scheme: QuadratureScheme,
    pub sphere: Vec<(Vec3, f64)>,
    pub nodes: Vec<VelocityNode>,
}

impl PreparedQuadrature {
    pub fn new(scheme: &QuadratureScheme, grid: &PhaseGrid) -> Result<Self> {
        scheme.validate()?;
        Ok(Self {
            scheme: *scheme,
            sphere: scheme.sphere.nodes(),
            nodes: scheme.velocity_nodes(grid),
        })
    }

    /// Gain and loss at `(x_cell, v_cell)` of a lab-frame field.
    pub fn cell_terms(&self, field: &DistributionField, grid: &PhaseGrid, x_cell: usize, v_cell: usize, spec: &KernelSpec) -> Result<CellTerms> {
        field.require_frame(Frame::Lab)?;
        field.check_shape(grid)?;
        Ok(self.slab_terms(field.slab(grid, x_cell), &grid.v, grid.v_of(v_cell), v_cell, spec))
    }

    pub(crate) fn slab_terms(&self, slab: &[f64], axis: &Axis, v: Vec3, v_cell: usize, spec: &KernelSpec) -> CellTerms {
        let interp = self.scheme.interp;
        let mut scratch = Vec::with_capacity(64);
        let mut f = |p: &Vec3| interp_slab(interp, axis, slab, p, &mut scratch);
        let fv = slab[v_cell];
        let (mut gain, mut loss, mut excluded) = (0.0, 0.0, 0.0);
        for node in &self.nodes {
            let fs = match node.cell {
                Some(c) => slab[c],
                None => f(&node.v),
            };
            let g = v - node.v;
            let r = g.norm();
            if r == 0.0 {
                if spec.gamma < 0.0 {
                    excluded += node.weight;
                } else if spec.gamma == 0.0 {
                    let b = spec.b_total * node.weight * fv * fs;
                    gain += b;
                    loss += b;
                }
                continue;
            }
            let speed = r.powf(spec.gamma);
            for (om, w) in &self.sphere {
                let d = g.dot(om);
                let w = match d {
                    d if d > 0.0 => *w,
                    d if d == 0.0 => 0.5 * w,
                    _ => continue,
                };
                let bw = node.weight * w * speed * spec.angular(d / r);
                if bw == 0.0 {
                    continue;
                }
                loss += bw * fv * fs;
                let k = d * om;
                gain += bw * f(&(v - k)) * f(&(node.v + k));
            }
        }
        CellTerms {
            gain: gain / spec.kappa,
            loss: loss / spec.kappa,
            excluded_measure: excluded,
        }
    }
}

pub fn q_gain(field: &DistributionField, grid: &PhaseGrid, x_cell: usize, v_cell: usize, spec: &KernelSpec, quad: &QuadratureScheme) -> Result<CellIntegral> {
    let t = PreparedQuadrature::new(quad, grid)?.cell_terms(field, grid, x_cell, v_cell, spec)?;
    Ok(CellIntegral { value: t.gain, excluded_measure: t.excluded_measure })
}

/// Loss magnitude `(1/kappa) sum B f f_*` (nonnegative).
pub fn q_loss(field: &DistributionField, grid: &PhaseGrid, x_cell: usize, v_cell: usize, spec: &KernelSpec, quad: &QuadratureScheme) -> Result<CellIntegral> {
    let t = PreparedQuadrature::new(quad, grid)?.cell_terms(field, grid, x_cell, v_cell, spec)?;
    Ok(CellIntegral { value: t.loss, excluded_measure: t.excluded_measure })
}

pub fn q_full(field: &DistributionField, grid: &PhaseGrid, x_cell: usize, v_cell: usize, spec: &KernelSpec, quad: &QuadratureScheme) -> Result<CellIntegral> {
    let t = PreparedQuadrature::new(quad, grid)?.cell_terms(field, grid, x_cell, v_cell, spec)?;
    Ok(CellIntegral { value: t.full(), excluded_measure: t.excluded_measure })
}

#[derive(Debug, Clone, Copy)]
struct Pair {
    weight: f64,
    a: (u32, u32),
    b: (u32, u32),
}

/// Full-grid `Q(f, f)` with the collision geometry precomputed.
///
/// The post-collision velocities depend on `v`, the node and `omega` only, so
/// their interpolation stencils are built once and shared by every position.
#[derive(Debug, Clone)]
pub struct CollisionOperator {
    grid: PhaseGrid,
    kappa: f64,
    n_nodes: usize,
    /// Stencils of off-grid partner nodes, `(offset, len)` per node.
    node_stencil: Vec<(u32, u32)>,
    node_cell: Vec<Option<usize>>,
    /// `sum_omega B w` per `(v_cell, node)`.
    loss_weight: Vec<f64>,
    pair_start: Vec<usize>,
    pairs: Vec<Pair>,
    idx: Vec<u32>,
    wts: Vec<f64>,
    excluded_measure: f64,
}

/// Result of a full-grid evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorOutput {
    pub q: Vec<f64>,
    pub excluded_measure: f64,
}

/// Upper limit on the precomputed stencil tables, in bytes.
pub const OPERATOR_MEMORY_BUDGET: f64 = 2.0 * (1u64 << 30) as f64;

impl CollisionOperator {
    /// Worst-case size of the stencil tables: every `(v, node, omega)` triple
    /// on the forward hemisphere keeps two stencils of `u32` index plus `f64` weight.
    pub fn estimated_bytes(grid: &PhaseGrid, quad: &QuadratureScheme) -> f64 {
        let stencil = match quad.interp {
            Interp::Trilinear => 8.0,
            Interp::Tricubic => 64.0,
        };
        let n_nodes = match quad.velocity {
            VelocityRule::GridMidpoint { stride } => (grid.v.n.div_ceil(stride.max(1)) as f64).powi(3),
            VelocityRule::GaussHermite { order } => (order as f64).powi(3),
        };
        let triples = grid.nv3() as f64 * n_nodes * (quad.sphere.n_theta * quad.sphere.n_phi) as f64 / 2.0;
        triples * (2.0 * stencil * 12.0 + std::mem::size_of::<Pair>() as f64)
    }

    pub fn new(grid: &PhaseGrid, spec: &KernelSpec, quad: &QuadratureScheme) -> Result<Self> {
        let need = Self::estimated_bytes(grid, quad);
        if need > OPERATOR_MEMORY_BUDGET {
            return Err(Error::param(
                "quadrature",
                format!(
                    "precomputed collision operator needs about {:.1} GiB, above the {:.0} GiB budget; use fewer velocity points, nodes or directions, or trilinear interpolation",
                    need / (1u64 << 30) as f64,
                    OPERATOR_MEMORY_BUDGET / (1u64 << 30) as f64
                ),
            ));
        }
        let prep = PreparedQuadrature::new(quad, grid)?;
        let interp = quad.interp;
        let nv3 = grid.nv3();
        let n_nodes = prep.nodes.len();
        let mut idx = Vec::new();
        let mut wts = Vec::new();
        let mut scratch = Vec::with_capacity(64);
        let mut push = |p: &Vec3, idx: &mut Vec<u32>, wts: &mut Vec<f64>| -> (u32, u32) {
            scratch.clear();
            push_stencil(interp, &grid.v, p, &mut scratch);
            let off = idx.len() as u32;
            for (i, w) in &scratch {
                idx.push(*i);
                wts.push(*w);
            }
            (off, scratch.len() as u32)
        };
        let node_stencil: Vec<(u32, u32)> = prep
            .nodes
            .iter()
            .map(|n| match n.cell {
                Some(_) => (0, 0),
                None => push(&n.v, &mut idx, &mut wts),
            })
            .collect();
        let node_cell = prep.nodes.iter().map(|n| n.cell).collect();
        let mut loss_weight = vec![0.0; nv3 * n_nodes];
        let mut pair_start = Vec::with_capacity(nv3 + 1);
        let mut pairs = Vec::new();
        let mut excluded = 0.0;
        let point = |c: usize, idx: &mut Vec<u32>, wts: &mut Vec<f64>| {
            idx.push(c as u32);
            wts.push(1.0);
            (idx.len() as u32 - 1, 1)
        };
        for vc in 0..nv3 {
            pair_start.push(pairs.len());
            let v = grid.v_of(vc);
            for (k, node) in prep.nodes.iter().enumerate() {
                let g = v - node.v;
                let r = g.norm();
                let lw = &mut loss_weight[vc * n_nodes + k];
                if r == 0.0 {
                    if spec.gamma < 0.0 {
                        excluded += node.weight;
                    } else if spec.gamma == 0.0 {
                        let w = spec.b_total * node.weight;
                        *lw += w;
                        let a = point(vc, &mut idx, &mut wts);
                        let b = match node.cell {
                            Some(c) => point(c, &mut idx, &mut wts),
                            None => push(&node.v, &mut idx, &mut wts),
                        };
                        pairs.push(Pair { weight: w, a, b });
                    }
                    continue;
                }
                let speed = r.powf(spec.gamma);
                for (om, w) in &prep.sphere {
                    let d = g.dot(om);
                    let w = match d {
                        d if d > 0.0 => *w,
                        d if d == 0.0 => 0.5 * w,
                        _ => continue,
                    };
                    let bw = node.weight * w * speed * spec.angular(d / r);
                    if bw == 0.0 {
                        continue;
                    }
                    *lw += bw;
                    let kk = d * om;
                    let (mark_i, mark_w) = (idx.len(), wts.len());
                    let a = push(&(v - kk), &mut idx, &mut wts);
                    let b = push(&(node.v + kk), &mut idx, &mut wts);
                    if a.1 == 0 || b.1 == 0 {
                        // one velocity left the box: the gain integrand is zero
                        idx.truncate(mark_i);
                        wts.truncate(mark_w);
                        continue;
                    }
                    pairs.push(Pair { weight: bw, a, b });
                }
            }
        }
        pair_start.push(pairs.len());
        Ok(Self {
            grid: *grid,
            kappa: spec.kappa,
            n_nodes,
            node_stencil,
            node_cell,
            loss_weight,
            pair_start,
            pairs,
            idx,
            wts,
            excluded_measure: excluded,
        })
    }

    /// Partner measure skipped at the diagonal, summed over velocity cells.
    pub fn excluded_measure(&self) -> f64 {
        self.excluded_measure
    }

    /// Number of stored (velocity, node, direction) triples.
    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    fn stencil(&self, slab: &[f64], (off, len): (u32, u32)) -> f64 {
        let r = off as usize..(off + len) as usize;
        self.idx[r.clone()]
            .iter()
            .zip(&self.wts[r])
            .map(|(i, w)| w * slab[*i as usize])
            .sum::<f64>()
            .max(0.0)
    }

    fn apply_slab(&self, slab: &[f64], out: &mut [f64]) {
        let fstar: Vec<f64> = (0..self.n_nodes)
            .map(|k| match self.node_cell[k] {
                Some(c) => slab[c],
                None => self.stencil(slab, self.node_stencil[k]),
            })
            .collect();
        for (vc, o) in out.iter_mut().enumerate() {
            let lw = &self.loss_weight[vc * self.n_nodes..(vc + 1) * self.n_nodes];
            let loss = slab[vc] * lw.iter().zip(&fstar).map(|(w, f)| w * f).sum::<f64>();
            let gain: f64 = self.pairs[self.pair_start[vc]..self.pair_start[vc + 1]]
                .iter()
                .map(|p| p.weight * self.stencil(slab, p.a) * self.stencil(slab, p.b))
                .sum();
            *o = (gain - loss) / self.kappa;
        }
    }

    /// `Q(f, f)` at every cell of a lab-frame field.
    pub fn apply(&self, exec: Execution, field: &DistributionField) -> Result<OperatorOutput> {
        field.require_frame(Frame::Lab)?;
        field.check_shape(&self.grid)?;
        Ok(self.apply_values(exec, field.values()))
    }

    pub(crate) fn apply_values(&self, exec: Execution, values: &[f64]) -> OperatorOutput {
        let nv3 = self.grid.nv3();
        let mut q = vec![0.0; values.len()];
        par::for_each_chunk(exec, &mut q, nv3, |xc, out| {
            self.apply_slab(&values[xc * nv3..(xc + 1) * nv3], out);
        });
        OperatorOutput { q, excluded_measure: self.excluded_measure }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::{Interp, SphereRule, VelocityRule};
    use crate::phase::MaxwellianParams;
    use approx::assert_relative_eq;

    fn setup(nv: usize) -> (PhaseGrid, MaxwellianParams) {
        let params = MaxwellianParams::new(1.0, 1.0, 0.5, 1.0).unwrap();
        let (_, v_extent) = PhaseGrid::truncation_extents(&params, 1e-12).unwrap();
        (PhaseGrid::new(0.5, v_extent, 2, nv).unwrap(), params)
    }

    fn scheme(rule: VelocityRule) -> QuadratureScheme {
        QuadratureScheme { sphere: SphereRule { n_theta: 4, n_phi: 8 }, velocity: rule, ..Default::default() }
    }

    #[test]
    fn zero_field() {
        let (g, _) = setup(6);
        let f = DistributionField::zeros(&g, Frame::Lab, 0.0);
        let spec = KernelSpec::constant(-1.0, 1.0, 1.0).unwrap();
        let quad = scheme(VelocityRule::GaussHermite { order: 3 });
        for q in [q_gain, q_loss, q_full] {
            assert_eq!(q(&f, &g, 0, 17, &spec, &quad).unwrap().value, 0.0);
        }
    }

    #[test]
    fn loss_matches_brute_force_for_maxwell_molecules() {
        let (g, _) = setup(7);
        // uniform on a velocity ball
        let f = DistributionField::from_fn(&g, Frame::Lab, 0.0, |_, v| if v.norm() < 2.5 { 0.8 } else { 0.0 });
        let spec = KernelSpec::constant(0.0, 1.0, 2.0).unwrap();
        let quad = scheme(VelocityRule::GridMidpoint { stride: 1 });
        let vc = g.nearest_v_cell(&Vec3::new(0.5, 0.0, -0.5));
        let slab = f.slab(&g, 3);
        let mass: f64 = slab.iter().sum::<f64>() * g.dv3();
        let expect = slab[vc] * mass / 2.0;
        let got = q_loss(&f, &g, 3, vc, &spec, &quad).unwrap();
        assert_relative_eq!(got.value, expect, max_relative = 1e-12);
        assert_eq!(got.excluded_measure, 0.0);
    }

    #[test]
    fn soft_spike_reports_excluded_diagonal() {
        let (g, _) = setup(5);
        let vc = g.nearest_v_cell(&Vec3::zeros());
        let mut vals = vec![0.0; g.len()];
        vals[g.index(0, vc)] = 1.0;
        let f = DistributionField::new(&g, vals, Frame::Lab, 0.0).unwrap();
        let spec = KernelSpec::constant(-1.5, 1.0, 1.0).unwrap();
        let quad = scheme(VelocityRule::GridMidpoint { stride: 1 });
        let loss = q_loss(&f, &g, 0, vc, &spec, &quad).unwrap();
        assert_eq!(loss.value, 0.0);
        assert_relative_eq!(loss.excluded_measure, g.dv3());
        let gain = q_gain(&f, &g, 0, vc, &spec, &quad).unwrap();
        assert!(gain.value >= 0.0);
    }

    #[test]
    fn bulk_matches_cellwise() {
        let (g, params) = setup(6);
        let f = DistributionField::from_fn(&g, Frame::Lab, 0.0, |x, v| {
            (0.7 + 0.2 * (x.x + 2.0 * v.y).sin()) * crate::phase::maxwellian_eval(x, v, &params)
        });
        for (gamma, rule, interp) in [
            (0.0, VelocityRule::GaussHermite { order: 3 }, Interp::Trilinear),
            (-1.0, VelocityRule::GridMidpoint { stride: 2 }, Interp::Tricubic),
            (0.0, VelocityRule::GridMidpoint { stride: 1 }, Interp::Trilinear),
            (1.0, VelocityRule::GaussHermite { order: 2 }, Interp::Tricubic),
        ] {
            let spec = KernelSpec::constant(gamma, 1.0, 1.0).unwrap();
            let quad = QuadratureScheme { interp, ..scheme(rule) };
            let op = CollisionOperator::new(&g, &spec, &quad).unwrap();
            let a = op.apply(Execution::Sequential, &f).unwrap();
            let b = op.apply(Execution::Parallel, &f).unwrap();
            assert_eq!(a, b);
            let prep = PreparedQuadrature::new(&quad, &g).unwrap();
            for i in (0..g.len()).step_by(37) {
                let (xc, vc) = g.split(i);
                let t = prep.cell_terms(&f, &g, xc, vc, &spec).unwrap();
                assert!((a.q[i] - t.full()).abs() <= 1e-12 * t.loss.max(1e-30), "gamma={gamma} i={i} {} {}", a.q[i], t.full());
            }
        }
    }

    #[test]
    fn oversized_tables_rejected() {
        let (g, _) = setup(12);
        let spec = KernelSpec::constant(0.0, 1.0, 1.0).unwrap();
        let quad = QuadratureScheme { interp: Interp::Tricubic, ..scheme(VelocityRule::GaussHermite { order: 6 }) };
        assert!(CollisionOperator::estimated_bytes(&g, &quad) > OPERATOR_MEMORY_BUDGET);
        let e = CollisionOperator::new(&g, &spec, &quad).unwrap_err().to_string();
        assert!(e.contains("GiB"), "{e}");
        let small = scheme(VelocityRule::GaussHermite { order: 2 });
        let op = CollisionOperator::new(&g, &spec, &small).unwrap();
        assert!(op.pair_count() as f64 <= CollisionOperator::estimated_bytes(&g, &small) / (2.0 * 8.0 * 12.0));
    }

    #[test]
    fn maxwellian_nearly_annihilated() {
        let (g, params) = setup(24);
        let m = params.sample(&g, 1.0, Frame::Lab, 0.0);
        let spec = KernelSpec::constant(0.0, 1.0, 1.0).unwrap();
        let quad = QuadratureScheme { interp: Interp::Tricubic, ..scheme(VelocityRule::GaussHermite { order: 6 }) };
        let prep = PreparedQuadrature::new(&quad, &g).unwrap();
        for v in [Vec3::zeros(), Vec3::new(0.4, -0.4, 0.8)] {
            let t = prep.cell_terms(&m, &g, 0, g.nearest_v_cell(&v), &spec).unwrap();
            assert!(t.full().abs() < 0.05 * t.loss, "{t:?}");
        }
    }

    #[test]
    fn mass_is_nearly_conserved() {
        let spec = KernelSpec::constant(0.0, 1.0, 1.0).unwrap();
        let quad = scheme(VelocityRule::GridMidpoint { stride: 1 });
        let imbalance = |nv| {
            let (g, params) = setup(nv);
            let f = DistributionField::from_fn(&g, Frame::Lab, 0.0, |x, v| {
                (0.75 + 0.25 * (1.3 * v.x - 0.7 * v.z).cos()) * crate::phase::maxwellian_eval(x, v, &params)
            });
            let prep = PreparedQuadrature::new(&quad, &g).unwrap();
            let terms: Vec<CellTerms> = (0..g.nv3()).map(|vc| prep.cell_terms(&f, &g, 0, vc, &spec).unwrap()).collect();
            let net: f64 = terms.iter().map(|t| t.full()).sum();
            let loss: f64 = terms.iter().map(|t| t.loss).sum();
            net.abs() / loss
        };
        let (coarse, fine) = (imbalance(9), imbalance(13));
        assert!(fine < 0.25 * coarse && fine < 2e-2, "{coarse} {fine}");
    }
}
