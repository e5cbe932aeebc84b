//! Binary collisions: the post-collision map, cutoff kernels, and the gain,
//! loss and full operators by deterministic quadrature or Monte Carlo.

mod kernel;
mod mc;
mod operator;
mod quadrature;
mod transform;

pub use kernel::{kernel_eval, log_regularized_kernel, regularized_kernel_eval, RegularizedKernelParams};
pub use mc::{mc_cell, splitmix64, McEstimate};
pub use operator::{q_full, q_gain, q_loss, CellIntegral, CellTerms, CollisionOperator, OperatorOutput, PreparedQuadrature, OPERATOR_MEMORY_BUDGET};
pub use quadrature::{Interp, QuadratureScheme, SphereRule, VelocityNode, VelocityRule};
pub use transform::{collide_pair, CollisionPair};
