//! Explicit constants and numerical checks of the decay lemmas, the `N1`
//! and `N2` estimates, the Gronwall and fixed-point growth bounds and the
//! weighted difference stability.

mod constants;
mod decay;
mod difference;
mod fields;
mod gronwall;
mod n1;
mod n2;
mod plan;
mod ray;
mod record;
mod sampling;

pub use constants::{c_gamma_alpha_beta, compute_constants, fixed_point_plan, g_infinity, FixedPointPlan, GInfinity, LemmaConstants, G_INFINITY_EXPONENTS, MU_FLOOR};
pub use decay::verify_decay_bound;
pub use difference::{verify_difference_rate, verify_difference_stability};
pub use fields::sandwiched_field;
pub use gronwall::{log_growth_bound, verify_gronwall};
pub use n1::verify_n1_bound;
pub use n2::{estimate_n2, verify_n2_bound, N2Config, N2Estimate};
pub use plan::{exponent_plan, ExponentPlan, PlanCase, PlanDefaults};
pub use ray::{ray_integral_from, verify_ray_bound, RayQuadrature, MIN_SPEED};
pub use record::{BoundCheckRecord, BoundId, CheckStatus, Inputs, McConfig};
