//! Free streaming, the sharp conjugation `f#(x, v, t) = f(x + t v, v, t)`,
//! mild-form time stepping and the weighted variable `g = f# / M`.

mod gfield;
mod mild;
mod sharp;

pub use gfield::{g_inverse, g_transform};
pub use mild::{
    lipschitz_estimate, mild_step, EvolveRecord, EvolveResult, MildIntegrator, MildIntegratorConfig, NormSample, SandwichMode, Scheme,
    StepReport,
};
pub use sharp::{round_trip_discrepancy, sharp_transform, unsharp_transform, TransformReport};
