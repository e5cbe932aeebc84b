use std::f64::consts::PI;

use rand::Rng;

use super::gronwall::log_growth_bound;
use super::plan::PlanDefaults;
use super::record::{BoundCheckRecord, BoundId, Inputs, McConfig};
use super::sampling::{normal3, sample_map, unit3};
use crate::error::{Error, Result};
use crate::numeric::Moments;
use crate::par::Execution;
use crate::phase::{sandwich_check, weighted_lp_norm, DistributionField, Frame, KernelSpec, LebesgueExponent, MaxwellianParams, PhaseGrid};
use crate::transport::g_transform;

fn check_pair(f: &DistributionField, fbar: &DistributionField, params: &MaxwellianParams, grid: &PhaseGrid) -> Result<()> {
    f.require_frame(Frame::Sharp)?;
    fbar.require_frame(Frame::Sharp)?;
    if (f.time() - fbar.time()).abs() > 1e-12 * (1.0 + f.time().abs()) {
        return Err(Error::param("trajectory", format!("snapshot times differ: {} vs {}", f.time(), fbar.time())));
    }
    for h in [f, fbar] {
        let sw = sandwich_check(h, params, grid)?;
        if sw.upper_margin < 0.0 {
            return Err(Error::Hypothesis(format!("snapshot at t={} exceeds a_M M (margin {})", h.time(), sw.upper_margin)));
        }
    }
    Ok(())
}

fn weighted_gap(f: &DistributionField, fbar: &DistributionField, p: LebesgueExponent, params: &MaxwellianParams, grid: &PhaseGrid) -> Result<f64> {
    let diff: Vec<f64> = f.values().iter().zip(fbar.values()).map(|(a, b)| (a - b).abs()).collect();
    weighted_lp_norm(&DistributionField::new(grid, diff, Frame::Sharp, f.time())?, p, params, grid)
}

/// Checks `||f - fbar||_{L^p_M}(t) <= G_p ||f_0 - fbar_0||_{L^p_M}` over
/// paired sharp-frame snapshots, one record per exponent. With identical
/// initial data the check becomes `max_t ||f - fbar||_{L^p_M} <= tol`.
pub fn verify_difference_stability(
    f: &[DistributionField],
    fbar: &[DistributionField],
    p_list: &[LebesgueExponent],
    spec: &KernelSpec,
    params: &MaxwellianParams,
    grid: &PhaseGrid,
    defaults: &PlanDefaults,
    tol: f64,
) -> Result<Vec<BoundCheckRecord>> {
    if f.len() != fbar.len() || f.is_empty() {
        return Err(Error::param("trajectory", format!("need equally long nonempty trajectories, got {} and {}", f.len(), fbar.len())));
    }
    for (a, b) in f.iter().zip(fbar) {
        check_pair(a, b, params, grid)?;
    }
    let mut out = Vec::new();
    for (i, p) in p_list.iter().enumerate() {
        let gaps = f.iter().zip(fbar).map(|(a, b)| weighted_gap(a, b, *p, params, grid)).collect::<Result<Vec<_>>>()?;
        let (t_worst, worst) = f.iter().zip(&gaps).fold((0.0, 0.0f64), |acc, (a, g)| if *g > acc.1 { (a.time(), *g) } else { acc });
        let inputs = Inputs::new().text("p", p.to_string()).num("initial_gap", gaps[0]).num("t_worst", t_worst).num("gamma", spec.gamma);
        if gaps[0] == 0.0 {
            out.push(BoundCheckRecord::judge(BoundId::Difference, i, None, inputs, worst, 0.0, tol, None).with_note("identical initial data: absolute check"));
            continue;
        }
        let rec = match log_growth_bound(*p, spec, params, defaults)? {
            Some((d, _, _)) => BoundCheckRecord::judge(BoundId::Difference, i, None, inputs.num("D", d), worst / gaps[0], 0.0, d.exp(), None),
            None => BoundCheckRecord::unavailable(BoundId::Difference, i, inputs, format!("G_p needs gamma in (-2, 0], got {}", spec.gamma)),
        };
        out.push(rec);
    }
    Ok(out)
}

/// Checks the pointwise inequality for `G = |g - gbar|`, `D = g + gbar`:
/// `sgn(g - gbar) d(g - gbar)/dt <= int A (G' D'_* + D' G'_* + G D_* + D G_*) domega dv_*`
/// at `points` seeded nodes, both sides from the same Monte Carlo draws.
pub fn verify_difference_rate(
    f: &DistributionField,
    fbar: &DistributionField,
    spec: &KernelSpec,
    params: &MaxwellianParams,
    grid: &PhaseGrid,
    points: usize,
    mc: &McConfig,
) -> Result<Vec<BoundCheckRecord>> {
    check_pair(f, fbar, params, grid)?;
    let g = g_transform(f, params, grid)?;
    let gb = g_transform(fbar, params, grid)?;
    let t = f.time();
    let (alpha, beta, gamma) = (params.alpha, params.beta, spec.gamma);
    let sd = (0.5 / beta).sqrt();
    let norm = 2.0 * PI * (PI / beta).powf(1.5);
    let mut pick = super::sampling::stream(mc.seed, u64::MAX);
    let mut out = Vec::with_capacity(points);
    for i in 0..points {
        let cell = pick.gen_range(0..grid.len());
        let (xc, vc) = grid.split(cell);
        let (x, v) = (grid.x_of(xc), grid.v_of(vc));
        let (g0, gb0) = (g.values()[cell], gb.values()[cell]);
        let sign = (g0 - gb0).signum() * if g0 == gb0 { 0.0 } else { 1.0 };
        let draws = sample_map(Execution::from_env(), mc.seed, i as u64, mc.samples, |rng| {
            let vs = sd * normal3(rng);
            let mut om = unit3(rng);
            let rel = v - vs;
            let r = rel.norm();
            if r == 0.0 {
                return (0.0, 0.0);
            }
            if rel.dot(&om) < 0.0 {
                om = -om;
            }
            let d = rel.dot(&om);
            let (vp, wp) = (v - d * om, vs + d * om);
            let xp = x + t * (v - vp);
            let xsp = x + t * (v - wp);
            let xs = x + t * rel;
            let (gp, gsp, gs) = (g.interpolate(grid, &xp, &vp), g.interpolate(grid, &xsp, &wp), g.interpolate(grid, &xs, &vs));
            let (bp, bsp, bs) = (gb.interpolate(grid, &xp, &vp), gb.interpolate(grid, &xsp, &wp), gb.interpolate(grid, &xs, &vs));
            let a = r.powf(gamma) * spec.angular(d / r) * (-alpha * (x - t * rel).norm_squared() - beta * vs.norm_squared()).exp();
            let w = norm * (beta * vs.norm_squared()).exp() * a;
            let lhs = sign * ((gp * gsp - g0 * gs) - (bp * bsp - gb0 * bs));
            let (gg, dd) = (|a: f64, b: f64| (a - b).abs(), |a: f64, b: f64| (a + b).abs());
            let rhs = gg(gp, bp) * dd(gsp, bsp) + dd(gp, bp) * gg(gsp, bsp) + gg(g0, gb0) * dd(gs, bs) + dd(g0, gb0) * gg(gs, bs);
            (w * lhs, w * rhs)
        });
        let (mut ml, mut mr, mut md) = (Moments::default(), Moments::default(), Moments::default());
        for (l, r) in draws {
            ml.push(l);
            mr.push(r);
            md.push(r - l);
        }
        let inputs = Inputs::new().vec3("x", &x).vec3("v", &v).num("t", t).num("cell", cell as f64);
        out.push(BoundCheckRecord::judge(BoundId::DifferenceRate, i, Some(mc.seed), inputs, ml.mean, md.se(), mr.mean, None));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::fields::sandwiched_field;
    use approx::assert_relative_eq;

    fn setup() -> (PhaseGrid, MaxwellianParams, KernelSpec) {
        let params = MaxwellianParams::new(1.0, 1.0, 0.5, 1.0).unwrap();
        (PhaseGrid::truncated(&params, 4, 6, 1e-8).unwrap(), params, KernelSpec::constant(0.0, 1.0, 1.0).unwrap())
    }

    #[test]
    fn identical_solutions() {
        let (grid, params, spec) = setup();
        let f = vec![sandwiched_field(&grid, &params, 1, 0.0).unwrap(), sandwiched_field(&grid, &params, 1, 0.5).unwrap()];
        let ps = [LebesgueExponent::Finite(1.0), LebesgueExponent::Finite(2.0)];
        let r = verify_difference_stability(&f, &f, &ps, &spec, &params, &grid, &PlanDefaults::default(), 1e-12).unwrap();
        assert!(r.iter().all(|r| r.pass && r.lhs == 0.0));
        let rate = verify_difference_rate(&f[1], &f[1], &spec, &params, &grid, 3, &McConfig { samples: 500, seed: 1, rel_error_cap: 0.1 }).unwrap();
        for r in rate {
            assert_eq!(r.lhs, 0.0);
            assert!(r.rhs >= 0.0 && r.pass);
        }
    }

    #[test]
    fn ratio_is_scale_invariant() {
        let (grid, params, spec) = setup();
        let mk = |seed: u64, c: f64| -> Vec<DistributionField> {
            (0..3u64).map(|k| sandwiched_field(&grid, &params, seed + k, 0.25 * k as f64).unwrap().scaled(c)).collect()
        };
        let ps = [LebesgueExponent::Finite(1.0), LebesgueExponent::Finite(2.0)];
        let a = verify_difference_stability(&mk(1, 1.0), &mk(7, 1.0), &ps, &spec, &params, &grid, &PlanDefaults::default(), 0.0).unwrap();
        let b = verify_difference_stability(&mk(1, 0.6), &mk(7, 0.6), &ps, &spec, &params, &grid, &PlanDefaults::default(), 0.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_relative_eq!(x.lhs, y.lhs, max_relative = 1e-12);
            assert!(x.pass);
        }
    }

    #[test]
    fn rate_inequality_holds_samplewise() {
        let (grid, params, spec) = setup();
        let f = sandwiched_field(&grid, &params, 2, 0.4).unwrap();
        let fbar = params.sample(&grid, 0.75, Frame::Sharp, 0.4);
        let r = verify_difference_rate(&f, &fbar, &spec, &params, &grid, 5, &McConfig { samples: 2000, seed: 4, rel_error_cap: 0.1 }).unwrap();
        for rec in r {
            assert!(rec.pass && rec.margin >= 0.0, "{rec:?}");
        }
    }
}
