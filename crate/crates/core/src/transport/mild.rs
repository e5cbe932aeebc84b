use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::collision::{CollisionOperator, QuadratureScheme};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::phase::{
    lp_norm, lp_norm_values, maxwellian_eval, sandwich_check, DistributionField, Frame, KernelSpec, LebesgueExponent, MaxwellianParams,
    PhaseGrid, SandwichReport,
};
use crate::transport::sharp::shift_values;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    ExplicitEuler,
    Heun,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SandwichMode {
    /// Violations are recorded only.
    #[default]
    Monitor,
    /// Values are projected into `[a_m M, a_M M]` after every step.
    Clamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MildIntegratorConfig {
    /// Time step; `None` picks the largest step with `dt L <= 1/2`.
    pub dt: Option<f64>,
    pub t_max: f64,
    pub scheme: Scheme,
    pub sandwich_mode: SandwichMode,
}

impl Default for MildIntegratorConfig {
    fn default() -> Self {
        Self { dt: None, t_max: 1.0, scheme: Scheme::ExplicitEuler, sandwich_mode: SandwichMode::Monitor }
    }
}

/// Upper bound for the Lipschitz constant of `Q` on the sandwich set,
/// `(2/kappa) B_gamma a_M K` with `K >= sup_v int |v - v_*|^gamma e^{-beta |v_*|^2} dv_*`
/// over the velocity box.
pub fn lipschitz_estimate(spec: &KernelSpec, params: &MaxwellianParams, grid: &PhaseGrid) -> f64 {
    let g = spec.gamma;
    let b = params.beta;
    let gauss = (PI / b).powf(1.5);
    let k = if g < 0.0 {
        // unit ball around v plus the Gaussian mass outside it
        4.0 * PI / (g + 3.0) + gauss
    } else if g == 0.0 {
        gauss
    } else {
        // (|v| + |v_*|)^gamma <= |v|^gamma + |v_*|^gamma for gamma <= 1
        let vmax = 3f64.sqrt() * grid.v.extent;
        vmax.powf(g) * gauss + 2.0 * PI * gamma((g + 3.0) / 2.0) * b.powf(-(g + 3.0) / 2.0)
    };
    2.0 / spec.kappa * spec.b_total * params.a_max * k
}

/// Per-step bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepReport {
    pub t_from: f64,
    pub t_to: f64,
    /// Mass removed by zeroing negative values.
    pub clamped_mass: f64,
    /// Mass moved by the sandwich projection (clamp mode only).
    pub projected_mass: f64,
}

/// Sharp-frame mild-form integrator with a precomputed collision operator.
#[derive(Debug, Clone)]
pub struct MildIntegrator {
    pub cfg: MildIntegratorConfig,
    pub spec: KernelSpec,
    pub params: MaxwellianParams,
    pub grid: PhaseGrid,
    pub exec: Execution,
    op: Option<CollisionOperator>,
    dt: f64,
    steps: usize,
    lipschitz: f64,
}

impl MildIntegrator {
    pub fn new(
        cfg: &MildIntegratorConfig,
        spec: &KernelSpec,
        params: &MaxwellianParams,
        quad: &QuadratureScheme,
        grid: &PhaseGrid,
        exec: Execution,
    ) -> Result<Self> {
        if !(cfg.t_max > 0.0 && cfg.t_max.is_finite()) {
            return Err(Error::param("t_max", format!("must be positive, got {}", cfg.t_max)));
        }
        let lip = lipschitz_estimate(spec, params, grid);
        let requested = match cfg.dt {
            Some(dt) if !(dt > 0.0 && dt.is_finite()) => return Err(Error::param("dt", format!("must be positive, got {dt}"))),
            Some(dt) if dt * lip > 0.5 => {
                return Err(Error::param("dt", format!("dt * L = {} exceeds 0.5 (L = {lip})", dt * lip)));
            }
            Some(dt) => dt,
            None if lip > 0.0 => 0.5 / lip,
            // collisionless: the step only paces the output
            None => cfg.t_max / 20.0,
        };
        let steps = ((cfg.t_max / requested) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let op = if spec.b_total > 0.0 { Some(CollisionOperator::new(grid, spec, quad)?) } else { None };
        Ok(Self {
            cfg: *cfg,
            spec: *spec,
            params: *params,
            grid: *grid,
            exec,
            op,
            dt: cfg.t_max / steps as f64,
            steps,
            lipschitz: lip,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// `Q#(f)(t)` from sharp-frame values: unsharp, collide, sharp.
    fn q_sharp(&self, values: &[f64], t: f64) -> Vec<f64> {
        match &self.op {
            None => vec![0.0; values.len()],
            Some(op) => {
                let lab = shift_values(self.exec, values, &self.grid, -t);
                let q = op.apply_values(self.exec, &lab).q;
                shift_values(self.exec, &q, &self.grid, t)
            }
        }
    }

    /// Advances a sharp-frame field by one step.
    pub fn step(&self, field: &DistributionField) -> Result<(DistributionField, StepReport)> {
        field.require_frame(Frame::Sharp)?;
        field.check_shape(&self.grid)?;
        let t = field.time();
        let dt = self.dt;
        let f = field.values();
        let mut next: Vec<f64> = match self.cfg.scheme {
            Scheme::ExplicitEuler => {
                let q = self.q_sharp(f, t);
                f.iter().zip(&q).map(|(a, b)| a + dt * b).collect()
            }
            Scheme::Heun => {
                let k1 = self.q_sharp(f, t);
                let pred: Vec<f64> = f.iter().zip(&k1).map(|(a, b)| (a + dt * b).max(0.0)).collect();
                let k2 = self.q_sharp(&pred, t + dt);
                f.iter().zip(k1.iter().zip(&k2)).map(|(a, (b, c))| a + 0.5 * dt * (b + c)).collect()
            }
        };
        let vol = self.grid.cell_volume();
        let mut clamped = 0.0;
        for (i, x) in next.iter_mut().enumerate() {
            if !x.is_finite() {
                let (x_index, v_index) = self.grid.describe(i);
                return Err(Error::NonFinite { x_index, v_index, value: *x });
            }
            if *x < 0.0 {
                clamped -= *x * vol;
                *x = 0.0;
            }
        }
        let mut projected = 0.0;
        if self.cfg.sandwich_mode == SandwichMode::Clamp {
            let nv3 = self.grid.nv3();
            let (grid, params) = (&self.grid, &self.params);
            let moved = par::map_indexed(self.exec, self.grid.nx3(), |xc| {
                let x = grid.x_of(xc);
                (0..nv3)
                    .map(|vc| {
                        let m = maxwellian_eval(&x, &grid.v_of(vc), params);
                        let v = next[xc * nv3 + vc];
                        let c = v.clamp(params.a_min * m, params.a_max * m);
                        (c, (c - v).abs())
                    })
                    .collect::<Vec<_>>()
            });
            for (xc, slab) in moved.into_iter().enumerate() {
                for (vc, (c, d)) in slab.into_iter().enumerate() {
                    next[xc * nv3 + vc] = c;
                    projected += d * vol;
                }
            }
        }
        let report = StepReport { t_from: t, t_to: t + dt, clamped_mass: clamped, projected_mass: projected };
        Ok((DistributionField::from_parts(next, Frame::Sharp, t + dt), report))
    }

    /// Steps to `t_max`, recording diagnostics at `t = 0`, every
    /// `output_interval` and at the end. `observer` sees each recorded state.
    pub fn evolve<F>(&self, initial: &DistributionField, p_list: &[LebesgueExponent], output_interval: f64, mut observer: F) -> Result<EvolveResult>
    where
        F: FnMut(&DistributionField, &EvolveRecord) -> Result<()>,
    {
        initial.require_frame(Frame::Sharp)?;
        let sw = sandwich_check(initial, &self.params, &self.grid)?;
        if !sw.pass {
            return Err(Error::Hypothesis(format!(
                "initial data violates the sandwich bound (margin {} at cell {})",
                sw.min_margin, sw.worst_cell
            )));
        }
        let every = if output_interval > 0.0 { ((output_interval / self.dt).round() as usize).max(1) } else { self.steps };
        let mut records = Vec::new();
        let mut field = initial.clone();
        let mut clamped = 0.0;
        let mut projected = 0.0;
        let rec = self.record(&field, 0, p_list, clamped, projected, sw)?;
        observer(&field, &rec)?;
        records.push(rec);
        for step in 1..=self.steps {
            let (next, rep) = self.step(&field)?;
            field = next;
            clamped += rep.clamped_mass;
            projected += rep.projected_mass;
            if step % every == 0 || step == self.steps {
                let sw = sandwich_check(&field, &self.params, &self.grid)?;
                let rec = self.record(&field, step, p_list, clamped, projected, sw)?;
                observer(&field, &rec)?;
                records.push(rec);
            }
        }
        Ok(EvolveResult { records, final_field: field, dt: self.dt, steps: self.steps, clamped_mass: clamped, projected_mass: projected })
    }

    fn record(
        &self,
        field: &DistributionField,
        step: usize,
        p_list: &[LebesgueExponent],
        clamped: f64,
        projected: f64,
        sandwich: SandwichReport,
    ) -> Result<EvolveRecord> {
        let lab = shift_values(self.exec, field.values(), &self.grid, -field.time());
        let norms = p_list
            .iter()
            .map(|p| {
                Ok(NormSample {
                    p: *p,
                    value: lp_norm(field, *p, &self.grid)?,
                    lab_value: lp_norm_values(&lab, *p, &self.grid)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EvolveRecord {
            t: field.time(),
            step,
            norms,
            sandwich,
            clamped_mass: clamped,
            projected_mass: projected,
            mass: field.mass(&self.grid),
        })
    }
}

/// One step with a freshly built integrator.
pub fn mild_step(
    field: &DistributionField,
    cfg: &MildIntegratorConfig,
    spec: &KernelSpec,
    params: &MaxwellianParams,
    quad: &QuadratureScheme,
    grid: &PhaseGrid,
) -> Result<(DistributionField, StepReport)> {
    MildIntegrator::new(cfg, spec, params, quad, grid, Execution::from_env())?.step(field)
}

/// `||f(t)||_p` measured on the sharp-frame nodes (`value`) and after
/// interpolating back to the lab frame (`lab_value`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormSample {
    pub p: LebesgueExponent,
    pub value: f64,
    pub lab_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolveRecord {
    pub t: f64,
    pub step: usize,
    pub norms: Vec<NormSample>,
    pub sandwich: SandwichReport,
    /// Cumulative mass removed by the nonnegativity clamp.
    pub clamped_mass: f64,
    pub projected_mass: f64,
    pub mass: f64,
}

#[derive(Debug, Clone)]
pub struct EvolveResult {
    pub records: Vec<EvolveRecord>,
    pub final_field: DistributionField,
    pub dt: f64,
    pub steps: usize,
    pub clamped_mass: f64,
    pub projected_mass: f64,
}
