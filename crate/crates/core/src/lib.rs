//! Numerical laboratory for the cutoff Boltzmann equation near a travelling
//! local Maxwellian.
//!
//! The crate evolves phase-space distribution functions in mild (sharp-frame)
//! form, computes `L^p` diagnostics for every exponent `0 < p <= inf`, and
//! checks the a-priori stability bounds (decay lemmas, Gronwall constants,
//! difference stability) numerically.
//!
//! Module map:
//! - [`phase`]: grids, distribution fields, Maxwellian envelopes, kernels, norms.
//! - [`collision`]: collision transform, kernels, gain/loss quadrature and Monte Carlo.
//! - [`transport`]: sharp conjugation, mild-form time stepping, `g = f/M` fields.
//! - [`estimates`]: explicit constants and bound verifiers.
//! - [`harness`]: JSON configuration, run orchestration, report emission.

pub mod collision;
pub mod error;
pub mod estimates;
pub mod floatfmt;
pub mod harness;
pub mod numeric;
pub mod par;
pub mod phase;
pub mod transport;

pub use error::{Error, Result};

/// Three-vector used for positions, velocities and directions.
pub type Vec3 = nalgebra::Vector3<f64>;
