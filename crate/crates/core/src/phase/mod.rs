//! Phase-space discretisation and the quantities measured on it.

mod field;
mod grid;
mod kernel;
mod maxwellian;
mod norms;

pub use field::{DistributionField, Frame};
pub(crate) use field::corner_weights;
pub use grid::{Axis, PhaseGrid, DEFAULT_TRUNCATION_TOL};
pub use kernel::{AngularFactor, KernelSpec};
pub use maxwellian::{log_maxwellian, maxwellian_eval, sandwich_check, MaxwellianParams, SandwichReport};
pub use norms::{lp_norm, lp_norm_values, power_field, weighted_lp_norm, LebesgueExponent};
