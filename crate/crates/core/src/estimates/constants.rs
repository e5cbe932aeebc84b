use std::f64::consts::PI;

use serde::Serialize;

use super::plan::{ExponentPlan, PlanDefaults};
use crate::error::Result;
use crate::floatfmt::{serialize_f64, serialize_opt_f64};
use crate::phase::{KernelSpec, MaxwellianParams};

/// Explicit constants of the decay, `N1`, Gronwall and `N2` estimates for
/// one `(mu, p)` split.
///
/// `C_N1` follows the displayed recombination exponent `p/(p-1)` on `C_N1A`;
/// `C_N1_holder` uses the Hölder weight `(p-1)/p`. `D_mu_p` and `G_p` are
/// built from `C_N1`, their `_holder` twins from `C_N1_holder`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaConstants {
    pub gamma: f64,
    pub mu: f64,
    pub p: f64,
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "B_gamma")]
    pub b_total: f64,
    pub a_m: f64,
    #[serde(rename = "a_M")]
    pub a_max: f64,
    #[serde(rename = "C_gamma_alpha_beta")]
    pub c_gamma_alpha_beta: f64,
    #[serde(rename = "C_N1A")]
    pub c_n1a: f64,
    #[serde(rename = "C_N1B")]
    pub c_n1b: f64,
    #[serde(rename = "C_N1")]
    pub c_n1: f64,
    #[serde(rename = "C_N1_holder")]
    pub c_n1_holder: f64,
    #[serde(rename = "D_mu_p")]
    pub d_mu_p: f64,
    #[serde(rename = "D_mu_p_holder")]
    pub d_mu_p_holder: f64,
    #[serde(rename = "G_p", serialize_with = "serialize_f64")]
    pub g_p: f64,
    #[serde(rename = "G_p_holder", serialize_with = "serialize_f64")]
    pub g_p_holder: f64,
    #[serde(rename = "C_N2A", serialize_with = "serialize_opt_f64")]
    pub c_n2a: Option<f64>,
    #[serde(rename = "C_mu_p", serialize_with = "serialize_opt_f64")]
    pub c_mu_p: Option<f64>,
    #[serde(rename = "barC_mu_p", serialize_with = "serialize_opt_f64")]
    pub bar_c_mu_p: Option<f64>,
    /// Hypotheses not met by these parameters, one entry per affected family.
    pub unavailable: Vec<String>,
}

impl LemmaConstants {
    /// Whether the soft-potential (Gronwall) route applies.
    pub fn gronwall_available(&self) -> bool {
        self.gamma > -2.0 && self.gamma <= 0.0
    }
}

/// `C(gamma, alpha, beta) = B_gamma [2 pi/(gamma+3) + (pi/alpha)^{3/2} + (pi/beta)^{3/2}]`.
pub fn c_gamma_alpha_beta(gamma: f64, alpha: f64, beta: f64, b_total: f64) -> f64 {
    b_total * (2.0 * PI / (gamma + 3.0) + (PI / alpha).powf(1.5) + (PI / beta).powf(1.5))
}

/// `(a_M^2 / a_m)^{1 - mu}`.
fn sandwich_prefactor(params: &MaxwellianParams, mu: f64) -> f64 {
    (params.a_max * params.a_max / params.a_min).powf(1.0 - mu)
}

pub fn compute_constants(plan: &ExponentPlan, spec: &KernelSpec, params: &MaxwellianParams) -> Result<LemmaConstants> {
    spec.validate()?;
    params.validate()?;
    let (g, a, b, bg) = (spec.gamma, params.alpha, params.beta, spec.b_total);
    let (mu, p) = (plan.mu, plan.p);
    let am = params.a_max;
    let ram = am.powf(mu);
    let pref = sandwich_prefactor(params, mu);

    let c_gab = c_gamma_alpha_beta(g, a, b, bg);
    let head = 2.0 * PI / (g + 3.0);
    let c_n1a = head + (PI * (p - 1.0) / (a * (1.0 - mu) * p)).powf(1.5) + (PI * (p - 1.0) / (b * (1.0 - mu) * p)).powf(1.5);
    let c_n1b = head + (PI / (a * p * mu)).powf(1.5) + (PI / (b * p * mu)).powf(1.5);
    let c_n1 = ram * c_n1a.powf(p / (p - 1.0)) * c_n1b.powf(1.0 / p) * bg;
    let c_n1_holder = ram * c_n1a.powf((p - 1.0) / p) * c_n1b.powf(1.0 / p) * bg;
    let d = ram * c_n1 * bg * pref;
    let d_holder = ram * c_n1_holder * bg * pref;

    let mut unavailable = Vec::new();
    if !(g > -2.0 && g <= 0.0) {
        unavailable.push(format!("C_N1, D_mu_p, G_p: soft-potential route needs gamma in (-2, 0], got {g}"));
    }
    let (c_n2a, c_mu_p, bar_c) = if g > -2.0 {
        let c_n2a = (PI * (p - 1.0) / (a * p * (1.0 - mu))).sqrt() * (2.0 * PI / (g + 2.0) + ((p - 1.0) / (b * p * (1.0 - mu))).powf(1.5));
        let bracket = (PI / (a * mu * p)).sqrt() * (2.0 * PI / (g + 2.0) + (1.0 / (b * p * mu)).powf(1.5));
        let c_mu_p = ram * c_n2a.powf((p - 1.0) / p) * bracket.powf(1.0 / p);
        let bar_c = mu * ram * c_n2a.powf((p - 1.0) / p) * pref * bracket.powf(1.0 / p);
        (Some(c_n2a), Some(c_mu_p), Some(bar_c))
    } else {
        unavailable.push(format!("C_N2A, C_mu_p, barC_mu_p: need gamma > -2, got {g}"));
        (None, None, None)
    };

    Ok(LemmaConstants {
        gamma: g,
        mu,
        p,
        alpha: a,
        beta: b,
        b_total: bg,
        a_m: params.a_min,
        a_max: am,
        c_gamma_alpha_beta: c_gab,
        c_n1a,
        c_n1b,
        c_n1,
        c_n1_holder,
        d_mu_p: d,
        d_mu_p_holder: d_holder,
        g_p: d.exp(),
        g_p_holder: d_holder.exp(),
        c_n2a,
        c_mu_p,
        bar_c_mu_p: bar_c,
        unavailable,
    })
}

/// `D_{mu, inf}` from `D_{mu, P/mu}` at `P = 1e2, 1e3, 1e4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GInfinity {
    pub mu: f64,
    /// `D` at the three sample exponents.
    pub samples: [f64; 3],
    /// Richardson limit assuming an `O(1/P)` approach.
    pub d_limit: f64,
    /// Gap to the same extrapolation from the two smaller exponents.
    pub residual: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub g_inf: f64,
    #[serde(serialize_with = "serialize_f64")]
    pub g_inf_upper: f64,
}

pub const G_INFINITY_EXPONENTS: [f64; 3] = [1e2, 1e3, 1e4];

pub fn g_infinity(mu: f64, spec: &KernelSpec, params: &MaxwellianParams) -> Result<GInfinity> {
    let mut samples = [0.0; 3];
    for (s, big_p) in samples.iter_mut().zip(G_INFINITY_EXPONENTS) {
        let plan = ExponentPlan::with_mu(big_p, mu)?;
        *s = compute_constants(&plan, spec, params)?.d_mu_p;
    }
    let d_limit = (10.0 * samples[2] - samples[1]) / 9.0;
    let coarse = (10.0 * samples[1] - samples[0]) / 9.0;
    let residual = (d_limit - coarse).abs();
    Ok(GInfinity {
        mu,
        samples,
        d_limit,
        residual,
        g_inf: d_limit.exp(),
        g_inf_upper: (d_limit + residual).exp(),
    })
}

/// Split used by the fixed-point route: `mu` starts at `min(1/2, P/p0)` and
/// halves until `barC < 1` or `mu < 1e-4`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointPlan {
    pub plan: ExponentPlan,
    #[serde(rename = "barC_mu_p")]
    pub bar_c: f64,
    pub halvings: usize,
    /// `(1 - barC)^{-1/mu}`, the bound on `||f(t)||_P / ||f_0||_P`.
    #[serde(serialize_with = "serialize_f64")]
    pub ratio_bound: f64,
}

pub const MU_FLOOR: f64 = 1e-4;

/// `Ok(None)` when no `mu` above the floor gives `barC < 1` or when
/// `gamma <= -2`.
pub fn fixed_point_plan(target: f64, defaults: &PlanDefaults, spec: &KernelSpec, params: &MaxwellianParams) -> Result<Option<FixedPointPlan>> {
    defaults.validate()?;
    let mut mu = 0.5f64.min(target / defaults.p0);
    let mut halvings = 0;
    while mu >= MU_FLOOR {
        let plan = ExponentPlan::with_mu(target, mu)?;
        let c = compute_constants(&plan, spec, params)?;
        let Some(bar_c) = c.bar_c_mu_p else { return Ok(None) };
        if bar_c < 1.0 {
            let ratio_bound = (-(1.0 - bar_c).ln() / mu).exp();
            return Ok(Some(FixedPointPlan { plan, bar_c, halvings, ratio_bound }));
        }
        mu *= 0.5;
        halvings += 1;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::plan::exponent_plan;
    use approx::assert_relative_eq;

    fn setup(gamma: f64, alpha: f64, beta: f64, am: f64, a_max: f64) -> (KernelSpec, MaxwellianParams) {
        (KernelSpec::constant(gamma, 1.0, 1.0).unwrap(), MaxwellianParams::new(alpha, beta, am, a_max).unwrap())
    }

    #[test]
    fn unit_rate_examples() {
        let (spec, params) = setup(0.0, PI, PI, 1.0, 1.0);
        let plan = ExponentPlan::from_pair(0.5, 2.0).unwrap();
        let c = compute_constants(&plan, &spec, &params).unwrap();
        let expect = 2.0 * PI / 3.0 + 2.0;
        assert_relative_eq!(c.c_gamma_alpha_beta, expect, max_relative = 1e-15);
        assert_relative_eq!(c.c_gamma_alpha_beta, 4.0944, epsilon = 1e-4);
        assert_relative_eq!(c.c_n1a, expect, max_relative = 1e-15);
        // unit amplitudes: D = C_N1 B_gamma
        assert_relative_eq!(c.d_mu_p, c.c_n1, max_relative = 1e-15);
        assert!(c.unavailable.is_empty());
    }

    #[test]
    fn equal_amplitude_prefactor() {
        let a = 1.7;
        let (spec, params) = setup(-0.5, 1.0, 1.0, a, a);
        let plan = ExponentPlan::from_pair(0.3, 3.0).unwrap();
        let c = compute_constants(&plan, &spec, &params).unwrap();
        // D = a^mu C_N1 B (a^2/a)^{1-mu} = a C_N1 B
        assert_relative_eq!(c.d_mu_p, a * c.c_n1, max_relative = 1e-14);
    }

    #[test]
    fn decay_constant_decreases_in_rates() {
        let mut last = f64::INFINITY;
        for k in 1..20 {
            let r = 0.1 * k as f64;
            let c = c_gamma_alpha_beta(-1.0, r, r, 1.0);
            assert!(c < last);
            last = c;
            assert!(c_gamma_alpha_beta(-1.0, r, 2.0 * r, 1.0) < c_gamma_alpha_beta(-1.0, r, r, 1.0));
        }
    }

    #[test]
    fn strongly_soft_kernels_lack_the_time_integrated_constants() {
        let (spec, params) = setup(-2.5, 1.0, 1.0, 0.5, 1.0);
        let plan = exponent_plan(2.0, &PlanDefaults::default()).unwrap();
        let c = compute_constants(&plan, &spec, &params).unwrap();
        assert!(c.c_n2a.is_none() && c.bar_c_mu_p.is_none());
        assert_eq!(c.unavailable.len(), 2);
        assert!(c.unavailable[1].contains("gamma > -2"));
    }

    #[test]
    fn n2_constant_grows_towards_minus_two() {
        let (_, params) = setup(0.0, 1.0, 1.0, 0.5, 1.0);
        let plan = ExponentPlan::from_pair(0.5, 2.0).unwrap();
        let mut last = 0.0;
        for g in [-1.0, -1.5, -1.9, -1.99, -1.999] {
            let spec = KernelSpec::constant(g, 1.0, 1.0).unwrap();
            let c = compute_constants(&plan, &spec, &params).unwrap().c_n2a.unwrap();
            assert!(c > last);
            last = c;
        }
    }

    #[test]
    fn g_infinity_converges() {
        let (spec, params) = setup(0.0, 1.0, 1.0, 0.5, 1.0);
        let gi = g_infinity(0.5, &spec, &params).unwrap();
        assert!(gi.d_limit.is_finite() && gi.d_limit > 0.0);
        assert!(gi.residual < 1e-2 * gi.d_limit, "{gi:?}");
        assert!(gi.g_inf_upper >= gi.g_inf);
    }

    #[test]
    fn fixed_point_shrinks_mu() {
        let (spec, params) = setup(1.0, 1.0, 1.0, 0.5, 1.0);
        let fp = fixed_point_plan(2.0, &PlanDefaults::default(), &spec, &params).unwrap().unwrap();
        assert!(fp.bar_c < 1.0);
        assert!(fp.plan.product() == num_rational::BigRational::from_float(2.0).unwrap());
        assert!(fp.ratio_bound >= 1.0);
        let spec = KernelSpec::constant(-2.5, 1.0, 1.0).unwrap();
        assert!(fixed_point_plan(2.0, &PlanDefaults::default(), &spec, &params).unwrap().is_none());
    }
}
