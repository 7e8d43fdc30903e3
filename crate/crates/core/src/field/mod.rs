//! Factorized 3D feature fields.
//!
//! A scene is stored as a function from 3D points to C-dimensional feature
//! vectors. Three storage variants are supported: three axis-aligned feature
//! planes summed after projection, a CP (rank-one outer product) factorization
//! into three axis vectors, and a six-axis factorization where each plane of
//! the tri-plane layout is itself a rank-k product of two axis vectors. All
//! variants interpolate linearly and expose exact gradients with respect to
//! both the stored factors and the query point.

mod bounds;
mod factor;
mod grad;
mod pyramid;
mod variant;

pub use bounds::SceneBounds;
pub use factor::{Axis, AxisFactor, FeaturePlane, PlaneId};
pub use grad::FieldGrads;
pub use pyramid::{Branch, PyramidGrads, PyramidScratch, ScenePyramid};
pub use variant::{
    param_count, query_cp, query_sixaxis, query_triplane, CpField, FactorizedField, FieldScratch,
    SixAxisField, TriPlaneField, VariantKind,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("expected a {expected} field, got {actual}")]
    VariantMismatch {
        expected: &'static str,
        actual: &'static str,
    },
    #[error("axis resolution must be at least 2, got {0}")]
    ResolutionTooSmall(usize),
    #[error("factor shape mismatch: expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("bounds must satisfy max > min componentwise")]
    InvalidBounds,
}

/// Linear interpolation setup on `len` knots spanning [0, 1].
///
/// Returns the lower knot index and the fractional weight of the upper knot.
/// Out-of-range coordinates clamp to the boundary knot.
#[inline]
pub(crate) fn lerp_setup(u: f64, len: usize) -> (usize, f64) {
    debug_assert!(len >= 2);
    let s = u.clamp(0.0, 1.0) * (len - 1) as f64;
    let mut i0 = s as usize;
    if i0 > len - 2 {
        i0 = len - 2;
    }
    (i0, s - i0 as f64)
}

/// Scale factor mapping d/du of a lerped value to knot differences.
///
/// Zero once the coordinate leaves [0, 1] (queries are constant there); on the
/// boundary itself the one-sided interior derivative applies.
#[inline]
pub(crate) fn lerp_point_scale(u: f64, len: usize) -> f64 {
    if (0.0..=1.0).contains(&u) {
        (len - 1) as f64
    } else {
        0.0
    }
}
