use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::constants::compute_constants;
use super::plan::ExponentPlan;
use super::ray::ray_integral_from;
use super::record::{BoundCheckRecord, BoundId, Inputs, McConfig};
use super::sampling::{normal3, sample_map};
use crate::collision::SphereRule;
use crate::error::{Error, Result};
use crate::numeric::{gauss_legendre, gauss_legendre_on, Moments};
use crate::par::Execution;
use crate::phase::{lp_norm, power_field, sandwich_check, DistributionField, Frame, KernelSpec, LebesgueExponent, MaxwellianParams, PhaseGrid};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct N2Config {
    /// Outer Monte Carlo over `(x, v)`.
    pub outer: McConfig,
    /// Gauss-Legendre nodes per snapshot interval.
    pub time_nodes: usize,
    /// Gauss-Legendre nodes in `|v - v_*|`.
    pub radial_nodes: usize,
    /// Directions of `v - v_*`.
    pub directions: SphereRule,
    /// Collision directions `omega`.
    pub sphere: SphereRule,
    /// The outer proposal uses rates `widen * p mu (alpha, beta)`.
    pub widen: f64,
}

impl Default for N2Config {
    fn default() -> Self {
        Self {
            outer: McConfig { samples: 1000, seed: 0, rel_error_cap: 0.1 },
            time_nodes: 2,
            radial_nodes: 8,
            directions: SphereRule { n_theta: 2, n_phi: 4 },
            sphere: SphereRule { n_theta: 2, n_phi: 4 },
            widen: 0.5,
        }
    }
}

/// Monte Carlo estimate of `N2` and of the part contributed past the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct N2Estimate {
    pub norm: f64,
    pub norm_se: f64,
    /// `L^p` norm of the closed-form tail bound beyond the last snapshot.
    pub tail_norm: f64,
    pub horizon: f64,
}

struct TimeNode {
    t: f64,
    w: f64,
    k: usize,
    s: f64,
}

/// `N2 = || int_0^inf int A_mu b (f'# f'_*#)^mu domega dv_* dt ||_{L^p(dx dv)}`.
///
/// The snapshots cover `[0, T]` and are interpolated linearly in time.
/// Past `T` the integrand is replaced by its envelope
/// `a_M^{2 mu} (M'# M'_*#)^mu |v - v_*|^gamma b exp(-(1-mu) beta |v_*|^2)`
/// whose time integral is the closed-form ray integral, so the estimate is
/// an upper value.
pub fn estimate_n2(
    trajectory: &[DistributionField],
    grid: &PhaseGrid,
    plan: &ExponentPlan,
    spec: &KernelSpec,
    params: &MaxwellianParams,
    cfg: &N2Config,
    index: usize,
) -> Result<N2Estimate> {
    cfg.sphere.validate()?;
    cfg.directions.validate()?;
    if cfg.radial_nodes == 0 || cfg.time_nodes == 0 {
        return Err(Error::param("n2", "radial and time rules need at least one node"));
    }
    if trajectory.len() < 2 {
        return Err(Error::param("trajectory", "need at least two snapshots"));
    }
    for w in trajectory.windows(2) {
        if !(w[1].time() > w[0].time()) {
            return Err(Error::param("trajectory", "snapshot times must increase"));
        }
    }
    let (mu, p) = (plan.mu, plan.p);
    let (alpha, beta, gamma) = (params.alpha, params.beta, spec.gamma);
    let horizon = trajectory.last().map(|f| f.time()).unwrap_or(0.0);

    let mut times = Vec::new();
    for k in 0..trajectory.len() - 1 {
        let (t0, t1) = (trajectory[k].time(), trajectory[k + 1].time());
        let rule = gauss_legendre_on(cfg.time_nodes, t0, t1);
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            times.push(TimeNode { t: *t, w: *w, k, s: (t - t0) / (t1 - t0) });
        }
    }
    if trajectory[0].time() > 0.0 {
        return Err(Error::param("trajectory", "first snapshot must be at t = 0"));
    }
    // v_* = v - r n: polar rule centred on v so the |v - v_*|^{gamma-1}
    // ray singularity is absorbed by the r^2 Jacobian
    let radial = gauss_legendre(cfg.radial_nodes);
    let dirs = cfg.directions.nodes();
    let sphere = cfg.sphere.nodes();

    let kx = cfg.widen * p * mu * alpha;
    let kv = cfg.widen * p * mu * beta;
    let (sx, sv) = ((0.5 / kx).sqrt(), (0.5 / kv).sqrt());
    let log_q_norm = 1.5 * (kx / PI).ln() + 1.5 * (kv / PI).ln();
    let am2mu = params.a_max.powf(2.0 * mu);

    let at = |t: &TimeNode, y: &Vec3, u: &Vec3| {
        let a = trajectory[t.k].interpolate(grid, y, u);
        let b = trajectory[t.k + 1].interpolate(grid, y, u);
        (1.0 - t.s) * a + t.s * b
    };

    let draws = sample_map(Execution::from_env(), cfg.outer.seed, index as u64, cfg.outer.samples, |rng| {
        let x = sx * normal3(rng);
        let v = sv * normal3(rng);
        let log_q = log_q_norm - kx * x.norm_squared() - kv * v.norm_squared();
        let mut body = 0.0;
        let mut tail = 0.0;
        let reach = v.norm() + 6.0 / beta.sqrt();
        for (u, wu) in radial.nodes.iter().zip(&radial.weights) {
            let r = 0.5 * reach * (u + 1.0);
            let wr = 0.5 * reach * wu * r * r;
            let speed = r.powf(gamma);
            for (n, wn) in &dirs {
                let g = r * n;
                let vs = v - g;
                let wv = wr * wn;
                let mut inner = 0.0;
                for t in &times {
                    let ka = (-(1.0 - mu) * (alpha * (x - t.t * g).norm_squared() + beta * vs.norm_squared())).exp();
                    let mut ang = 0.0;
                    for (om, wo) in &sphere {
                        let d = g.dot(om);
                        if d < 0.0 {
                            continue;
                        }
                        let w = if d == 0.0 { 0.5 * wo } else { *wo };
                        let vp = v - d * om;
                        let wp = vs + d * om;
                        let fp = at(t, &(x + t.t * d * om), &vp);
                        let fsp = at(t, &(x + t.t * (g - d * om)), &wp);
                        if fp > 0.0 && fsp > 0.0 {
                            ang += w * spec.angular(d / r) * (fp * fsp).powf(mu);
                        }
                    }
                    inner += t.w * ka * ang;
                }
                body += wv * speed * inner;
                tail += wv * speed * (-beta * vs.norm_squared()).exp() * ray_integral_from(mu * alpha, &x, &g, horizon);
            }
        }
        tail *= am2mu * spec.b_total * (-mu * (alpha * x.norm_squared() + beta * v.norm_squared())).exp();
        let inv_q = (-log_q).exp();
        ((body + tail).powf(p) * inv_q, tail.powf(p) * inv_q)
    });
    let mut m = Moments::default();
    let mut mt = Moments::default();
    for (a, b) in &draws {
        m.push(*a);
        mt.push(*b);
    }
    let norm = m.mean.powf(1.0 / p);
    // delta method for the p-th root
    let norm_se = if m.mean > 0.0 { norm * m.se() / (p * m.mean) } else { 0.0 };
    Ok(N2Estimate { norm, norm_se, tail_norm: mt.mean.powf(1.0 / p), horizon })
}

/// Checks `N2 <= C_{mu,p} ||(sup_t f#)^mu||_p` with the supremum taken
/// cellwise over the snapshots.
pub fn verify_n2_bound(
    index: usize,
    trajectory: &[DistributionField],
    grid: &PhaseGrid,
    plan: &ExponentPlan,
    spec: &KernelSpec,
    params: &MaxwellianParams,
    cfg: &N2Config,
) -> Result<BoundCheckRecord> {
    let gamma = spec.gamma;
    if !(gamma > -2.0 && gamma <= 1.0) {
        return Err(Error::Hypothesis(format!("N2 bound needs gamma in (-2, 1], got {gamma}")));
    }
    for f in trajectory {
        f.require_frame(Frame::Sharp)?;
        let sw = sandwich_check(f, params, grid)?;
        if sw.upper_margin < 0.0 {
            return Err(Error::Hypothesis(format!("snapshot at t={} exceeds a_M M (margin {})", f.time(), sw.upper_margin)));
        }
    }
    let est = estimate_n2(trajectory, grid, plan, spec, params, cfg, index)?;
    let mut sup = trajectory[0].values().to_vec();
    for f in &trajectory[1..] {
        for (s, v) in sup.iter_mut().zip(f.values()) {
            *s = s.max(*v);
        }
    }
    let sup = DistributionField::new(grid, sup, Frame::Sharp, 0.0)?;
    let sup_norm = lp_norm(&power_field(&sup, plan.mu), LebesgueExponent::Finite(plan.p), grid)?;
    let c = compute_constants(plan, spec, params)?;
    let c_mu_p = c.c_mu_p.ok_or_else(|| Error::Hypothesis("C_mu_p unavailable".into()))?;
    let inputs = Inputs::new()
        .num("gamma", gamma)
        .num("mu", plan.mu)
        .num("p", plan.p)
        .num("horizon", est.horizon)
        .num("snapshots", trajectory.len() as f64)
        .num("tail_norm", est.tail_norm)
        .num("sup_power_norm", sup_norm)
        .num("samples", cfg.outer.samples as f64);
    Ok(BoundCheckRecord::judge(BoundId::N2, index, Some(cfg.outer.seed), inputs, est.norm, est.norm_se, c_mu_p * sup_norm, Some(cfg.outer.rel_error_cap)))
}
