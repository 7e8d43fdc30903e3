//! SDF-based volume rendering along pixel rays.

mod composite;
mod intrinsics;
pub mod pipeline;
mod sampling;

pub use composite::{
    composite, density, density_derivatives, weights_backward, weights_from_densities,
    RayEstimate, RenderError,
};
pub use intrinsics::{DepthConvention, Intrinsics};
pub use sampling::{sample_ray, RaySample, SampleConfig, SampleKind, MIN_RAY_T};
