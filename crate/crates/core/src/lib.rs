//! Dense RGB-D SLAM on low-rank factorized scene fields.
//!
//! The map stores a truncated signed distance field and an appearance field as
//! factorized tensors (tri-plane, CP, or six-axis variants), decoded by small
//! MLP heads and rendered with SDF-based volume compositing. Tracking and
//! mapping jointly optimize camera poses and all map parameters against
//! photometric, depth, free-space, and SDF losses. Everything runs on the CPU
//! with hand-written gradients; batches parallelize over rays.

pub mod decoder;
pub mod checkpoint;
pub mod config;
pub mod eval;
pub mod field;
pub mod io;
pub mod loss;
pub mod map;
pub mod render;
pub mod sim;
pub mod slam;

pub use field::{
    Axis, AxisFactor, Branch, FactorizedField, FeaturePlane, FieldError, FieldGrads,
    FieldScratch, PlaneId, SceneBounds, ScenePyramid, VariantKind,
};
