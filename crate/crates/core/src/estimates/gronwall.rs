use super::constants::{compute_constants, fixed_point_plan, g_infinity};
use super::plan::{exponent_plan, PlanDefaults};
use super::record::{BoundCheckRecord, BoundId, Inputs};
use crate::error::{Error, Result};
use crate::phase::{KernelSpec, LebesgueExponent, MaxwellianParams};

/// `e^D` for a target exponent, `D` from the exponent plan (`P < inf`) or
/// the `G_inf` extrapolation. Returns `(D, D_holder, extrapolation residual)`;
/// `None` when the soft-potential hypotheses fail.
pub fn log_growth_bound(target: LebesgueExponent, spec: &KernelSpec, params: &MaxwellianParams, defaults: &PlanDefaults) -> Result<Option<(f64, f64, f64)>> {
    if !(spec.gamma > -2.0 && spec.gamma <= 0.0) {
        return Ok(None);
    }
    Ok(Some(match target {
        LebesgueExponent::Finite(big_p) => {
            let c = compute_constants(&exponent_plan(big_p, defaults)?, spec, params)?;
            (c.d_mu_p, c.d_mu_p_holder, 0.0)
        }
        LebesgueExponent::Infinity => {
            let gi = g_infinity(defaults.mu0, spec, params)?;
            (gi.d_limit, f64::NAN, gi.residual)
        }
    }))
}

/// Checks a norm history `(t_i, ||f(t_i)||_P)` against the Gronwall bound
/// `max_i ||f(t_i)||_P <= e^{D_{mu,p}} ||f_0||_P` and, for finite `P`, the
/// fixed-point bound `(1 - barC)^{-1/mu}` on the same ratio.
///
/// Comparisons are made on the ratio; `e^D` overflowing to `inf` passes.
pub fn verify_gronwall(
    index: usize,
    history: &[(f64, f64)],
    target: LebesgueExponent,
    spec: &KernelSpec,
    params: &MaxwellianParams,
    defaults: &PlanDefaults,
) -> Result<Vec<BoundCheckRecord>> {
    let Some(&(_, n0)) = history.first() else {
        return Err(Error::param("history", "empty norm history"));
    };
    let (t_worst, worst) = history.iter().fold((0.0, f64::NEG_INFINITY), |acc, &(t, n)| if n > acc.1 { (t, n) } else { acc });
    let inputs = Inputs::new().text("P", target.to_string()).num("gamma", spec.gamma).num("t_worst", t_worst).num("initial_norm", n0);
    if !(n0 > 0.0) {
        let why = "initial norm is zero";
        return Ok(vec![
            BoundCheckRecord::unavailable(BoundId::Gronwall, index, inputs.clone(), why),
            BoundCheckRecord::unavailable(BoundId::FixedPoint, index, inputs, why),
        ]);
    }
    let ratio = worst / n0;
    let mut out = Vec::with_capacity(2);

    out.push(match log_growth_bound(target, spec, params, defaults)? {
        None => BoundCheckRecord::unavailable(BoundId::Gronwall, index, inputs.clone(), format!("needs gamma in (-2, 0], got {}", spec.gamma)),
        Some((d, d_alt, residual)) => {
            let rec = BoundCheckRecord::judge(
                BoundId::Gronwall,
                index,
                None,
                inputs.clone().num("D", d).num("ln_ratio", ratio.ln()).num("extrapolation_residual", residual),
                ratio,
                0.0,
                d.exp(),
                None,
            );
            if d_alt.is_finite() {
                rec.with_alt_rhs(d_alt.exp())
            } else {
                rec
            }
        }
    });

    out.push(match target {
        LebesgueExponent::Infinity => BoundCheckRecord::unavailable(BoundId::FixedPoint, index, inputs, "fixed-point route needs finite P"),
        LebesgueExponent::Finite(big_p) => match fixed_point_plan(big_p, defaults, spec, params)? {
            None => BoundCheckRecord::unavailable(BoundId::FixedPoint, index, inputs, "no mu >= 1e-4 gives barC < 1 (or gamma <= -2)"),
            Some(fp) => BoundCheckRecord::judge(
                BoundId::FixedPoint,
                index,
                None,
                inputs.num("mu", fp.plan.mu).num("barC_mu_p", fp.bar_c).num("halvings", fp.halvings as f64),
                ratio,
                0.0,
                fp.ratio_bound,
                None,
            ),
        },
    });
    Ok(out)
}
