use serde::Serialize;

use crate::error::{Error, Result};
use crate::phase::{KernelSpec, MaxwellianParams};
use crate::Vec3;

/// `B(v_rel, omega) = |v_rel|^gamma b(theta)`.
///
/// At `v_rel = 0` the angle is undefined: `gamma < 0` is an error, `gamma > 0`
/// gives 0, and `gamma = 0` takes `cos(theta) = 1`.
pub fn kernel_eval(v_rel: &Vec3, omega: &Vec3, spec: &KernelSpec) -> Result<f64> {
    let g = v_rel.norm();
    if g == 0.0 {
        return match spec.gamma {
            x if x < 0.0 => Err(Error::Singular { gamma: x }),
            x if x > 0.0 => Ok(0.0),
            _ => Ok(spec.angular(1.0)),
        };
    }
    let cos = v_rel.dot(omega) / (g * omega.norm());
    Ok(g.powf(spec.gamma) * spec.angular(cos))
}

/// Parameters of `A_mu(v, v_*; x, t) = |v - v_*|^gamma exp(-(1-mu)(alpha |x - t(v - v_*)|^2 + beta |v_*|^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularizedKernelParams {
    pub mu: f64,
    pub maxwellian: MaxwellianParams,
    pub kernel: KernelSpec,
}

impl RegularizedKernelParams {
    pub fn new(mu: f64, maxwellian: MaxwellianParams, kernel: KernelSpec) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::param("mu", format!("must lie in (0, 1), got {mu}")));
        }
        Ok(Self { mu, maxwellian, kernel })
    }
}

/// `ln A_mu`; `-inf` where the kernel vanishes.
pub fn log_regularized_kernel(v: &Vec3, v_star: &Vec3, x: &Vec3, t: f64, params: &RegularizedKernelParams) -> Result<f64> {
    let g = v - v_star;
    let r = g.norm();
    let gamma = params.kernel.gamma;
    let log_speed = if r == 0.0 {
        match gamma {
            y if y < 0.0 => return Err(Error::Singular { gamma: y }),
            y if y > 0.0 => f64::NEG_INFINITY,
            _ => 0.0,
        }
    } else {
        gamma * r.ln()
    };
    let m = params.maxwellian;
    let arg = m.alpha * (x - t * g).norm_squared() + m.beta * v_star.norm_squared();
    Ok(log_speed - (1.0 - params.mu) * arg)
}

pub fn regularized_kernel_eval(v: &Vec3, v_star: &Vec3, x: &Vec3, t: f64, params: &RegularizedKernelParams) -> Result<f64> {
    log_regularized_kernel(v, v_star, x, t, params).map(f64::exp)
}
