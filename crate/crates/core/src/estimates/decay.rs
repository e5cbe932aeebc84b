use std::f64::consts::PI;

use super::constants::c_gamma_alpha_beta;
use super::record::{BoundCheckRecord, BoundId, Inputs, McConfig};
use super::sampling::{normal3, stream, SingularBall};
use crate::error::{Error, Result};
use crate::numeric::Moments;
use crate::phase::{KernelSpec, MaxwellianParams};
use crate::Vec3;
use rand::Rng;

/// Weight of the singular component of the importance mixture for `gamma < 0`.
const BALL_SHARE: f64 = 0.3;

/// Checks
/// `int B(v - v_*, omega) M(x + t(v - v_*), v_*) domega dv_* <= C(gamma, alpha, beta) / (t+1)^{gamma+3}`.
///
/// The hemisphere integral of `b` equals `B_gamma` for every relative
/// velocity, so only the `v_*` integral is sampled. Completing the square,
/// `M(x + t(v - v_*), v_*) = K exp(-lambda |v_* - c|^2)` with
/// `lambda = alpha t^2 + beta`; `v_*` is drawn from that Gaussian, mixed with
/// a `|v - v_*|^gamma` ball sampler when the kernel is singular.
pub fn verify_decay_bound(
    index: usize,
    x: &Vec3,
    v: &Vec3,
    t: f64,
    spec: &KernelSpec,
    params: &MaxwellianParams,
    mc: &McConfig,
) -> Result<BoundCheckRecord> {
    let gamma = spec.gamma;
    if gamma > 0.0 {
        return Err(Error::Hypothesis(format!("decay bound needs gamma <= 0, got {gamma}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::param("t", format!("must be nonnegative, got {t}")));
    }
    let (alpha, beta) = (params.alpha, params.beta);
    let lambda = alpha * t * t + beta;
    let y = x + t * v;
    let centre = (alpha * t / lambda) * y;
    let log_k = -alpha * beta * y.norm_squared() / lambda;
    let sd = (0.5 / lambda).sqrt();
    let gauss_norm = (lambda / PI).powf(1.5);
    let share = if gamma < 0.0 { BALL_SHARE } else { 0.0 };
    let ball = SingularBall { radius: lambda.sqrt().recip(), gamma };

    let mut rng = stream(mc.seed, index as u64);
    let mut m = Moments::default();
    for _ in 0..mc.samples {
        let vs = if share > 0.0 && rng.gen::<f64>() < share { v + ball.sample(&mut rng) } else { centre + sd * normal3(&mut rng) };
        let e = (-lambda * (vs - centre).norm_squared()).exp();
        let g = v - vs;
        let speed = if gamma == 0.0 { 1.0 } else { g.norm().powf(gamma) };
        let q = (1.0 - share) * gauss_norm * e + share * ball.density(&(vs - v));
        m.push(if q > 0.0 { speed * e / q } else { 0.0 });
    }
    let scale = spec.b_total * log_k.exp();
    let lhs = scale * m.mean;
    let err = scale * m.se();
    let rhs = c_gamma_alpha_beta(gamma, alpha, beta, spec.b_total) / (t + 1.0).powf(gamma + 3.0);
    let inputs = Inputs::new().vec3("x", x).vec3("v", v).num("t", t).num("gamma", gamma).num("alpha", alpha).num("beta", beta);
    Ok(BoundCheckRecord::judge(BoundId::Decay, index, Some(mc.seed), inputs, lhs, err, rhs, Some(mc.rel_error_cap)))
}
