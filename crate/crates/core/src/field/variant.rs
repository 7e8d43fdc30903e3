use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::factor::{Axis, AxisFactor, FeaturePlane, PlaneId};
use super::grad::FieldGrads;
use super::FieldError;

/// Which factorization a field uses. Used by configuration and checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantKind {
    TriPlane,
    Cp,
    SixAxis,
}

impl VariantKind {
    pub fn name(self) -> &'static str {
        match self {
            VariantKind::TriPlane => "tri-plane",
            VariantKind::Cp => "cp",
            VariantKind::SixAxis => "six-axis",
        }
    }
}

/// Three dense feature planes summed after projecting the query point.
#[derive(Debug, Clone, PartialEq)]
pub struct TriPlaneField {
    pub planes: [FeaturePlane; 3],
    channels: usize,
}

/// Rank-k sum of outer products of three axis vectors; the feature at a point
/// is the componentwise product of the three lerped factors, summed over
/// components.
#[derive(Debug, Clone, PartialEq)]
pub struct CpField {
    pub axes: [AxisFactor; 3],
    rank: usize,
    channels: usize,
}

/// Each tri-plane plane replaced by a rank-k product of two axis factors,
/// giving six axis factors total. Factor order: (x_y, y_x), (y_z, z_y),
/// (z_x, x_z), matching the plane order XY, YZ, ZX.
#[derive(Debug, Clone, PartialEq)]
pub struct SixAxisField {
    pub factors: [AxisFactor; 6],
    rank: usize,
    channels: usize,
}

/// World-axis index pairs addressed by the three six-axis factor pairs.
pub(crate) const SIX_AXIS_COORDS: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

#[derive(Debug, Clone, PartialEq)]
pub enum FactorizedField {
    TriPlane(TriPlaneField),
    Cp(CpField),
    SixAxis(SixAxisField),
}

/// Reusable interpolation buffers for field queries and backward passes.
#[derive(Debug, Clone, Default)]
pub struct FieldScratch {
    pub(crate) a: Vec<f64>,
    pub(crate) b: Vec<f64>,
    pub(crate) c: Vec<f64>,
    pub(crate) lane: Vec<f64>,
}

impl FieldScratch {
    fn ensure(&mut self, lane_len: usize) {
        if self.a.len() < lane_len {
            self.a.resize(lane_len, 0.0);
            self.b.resize(lane_len, 0.0);
            self.c.resize(lane_len, 0.0);
            self.lane.resize(lane_len, 0.0);
        }
    }
}

impl FactorizedField {
    pub fn kind(&self) -> VariantKind {
        match self {
            FactorizedField::TriPlane(_) => VariantKind::TriPlane,
            FactorizedField::Cp(_) => VariantKind::Cp,
            FactorizedField::SixAxis(_) => VariantKind::SixAxis,
        }
    }

    pub fn channels(&self) -> usize {
        match self {
            FactorizedField::TriPlane(f) => f.channels,
            FactorizedField::Cp(f) => f.channels,
            FactorizedField::SixAxis(f) => f.channels,
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            FactorizedField::TriPlane(_) => 1,
            FactorizedField::Cp(f) => f.rank,
            FactorizedField::SixAxis(f) => f.rank,
        }
    }

    /// Knot counts along (x, y, z).
    pub fn resolutions(&self) -> [usize; 3] {
        match self {
            FactorizedField::TriPlane(f) => {
                let (lx, ly, _) = f.planes[0].shape();
                let (_, lz, _) = f.planes[1].shape();
                [lx, ly, lz]
            }
            FactorizedField::Cp(f) => [f.axes[0].len(), f.axes[1].len(), f.axes[2].len()],
            FactorizedField::SixAxis(f) => {
                [f.factors[0].len(), f.factors[1].len(), f.factors[3].len()]
            }
        }
    }

    /// Build a field of the given variant over per-axis resolutions, with
    /// factors initialized to zero-mean uniform noise.
    pub fn init<R: Rng>(
        kind: VariantKind,
        res: [usize; 3],
        rank: usize,
        channels: usize,
        amplitude: f64,
        rng: &mut R,
    ) -> Result<Self, FieldError> {
        let [lx, ly, lz] = res;
        Ok(match kind {
            VariantKind::TriPlane => FactorizedField::TriPlane(TriPlaneField {
                planes: [
                    FeaturePlane::init_uniform(PlaneId::Xy, lx, ly, channels, amplitude, rng)?,
                    FeaturePlane::init_uniform(PlaneId::Yz, ly, lz, channels, amplitude, rng)?,
                    FeaturePlane::init_uniform(PlaneId::Zx, lz, lx, channels, amplitude, rng)?,
                ],
                channels,
            }),
            VariantKind::Cp => FactorizedField::Cp(CpField {
                axes: [
                    AxisFactor::init_uniform(Axis::X, lx, rank, channels, amplitude, rng)?,
                    AxisFactor::init_uniform(Axis::Y, ly, rank, channels, amplitude, rng)?,
                    AxisFactor::init_uniform(Axis::Z, lz, rank, channels, amplitude, rng)?,
                ],
                rank,
                channels,
            }),
            VariantKind::SixAxis => FactorizedField::SixAxis(SixAxisField {
                factors: [
                    AxisFactor::init_uniform(Axis::X, lx, rank, channels, amplitude, rng)?,
                    AxisFactor::init_uniform(Axis::Y, ly, rank, channels, amplitude, rng)?,
                    AxisFactor::init_uniform(Axis::Y, ly, rank, channels, amplitude, rng)?,
                    AxisFactor::init_uniform(Axis::Z, lz, rank, channels, amplitude, rng)?,
                    AxisFactor::init_uniform(Axis::Z, lz, rank, channels, amplitude, rng)?,
                    AxisFactor::init_uniform(Axis::X, lx, rank, channels, amplitude, rng)?,
                ],
                rank,
                channels,
            }),
        })
    }

    pub fn triplane(planes: [FeaturePlane; 3], channels: usize) -> Result<Self, FieldError> {
        for p in &planes {
            if p.shape().2 != channels {
                return Err(FieldError::ShapeMismatch {
                    expected: channels,
                    actual: p.shape().2,
                });
            }
        }
        Ok(FactorizedField::TriPlane(TriPlaneField { planes, channels }))
    }

    pub fn cp(axes: [AxisFactor; 3], rank: usize, channels: usize) -> Result<Self, FieldError> {
        for a in &axes {
            if a.rank() != rank || a.channels() != channels {
                return Err(FieldError::ShapeMismatch {
                    expected: rank * channels,
                    actual: a.lane_len(),
                });
            }
        }
        Ok(FactorizedField::Cp(CpField {
            axes,
            rank,
            channels,
        }))
    }

    pub fn sixaxis(
        factors: [AxisFactor; 6],
        rank: usize,
        channels: usize,
    ) -> Result<Self, FieldError> {
        for f in &factors {
            if f.rank() != rank || f.channels() != channels {
                return Err(FieldError::ShapeMismatch {
                    expected: rank * channels,
                    actual: f.lane_len(),
                });
            }
        }
        Ok(FactorizedField::SixAxis(SixAxisField {
            factors,
            rank,
            channels,
        }))
    }

    /// Number of stored factor values.
    pub fn param_count(&self) -> usize {
        self.factor_lens().iter().sum()
    }

    pub(crate) fn factor_lens(&self) -> Vec<usize> {
        match self {
            FactorizedField::TriPlane(f) => f.planes.iter().map(|p| p.values().len()).collect(),
            FactorizedField::Cp(f) => f.axes.iter().map(|a| a.values().len()).collect(),
            FactorizedField::SixAxis(f) => f.factors.iter().map(|a| a.values().len()).collect(),
        }
    }

    pub fn for_each_factor(&self, mut visit: impl FnMut(&[f64])) {
        match self {
            FactorizedField::TriPlane(f) => f.planes.iter().for_each(|p| visit(p.values())),
            FactorizedField::Cp(f) => f.axes.iter().for_each(|a| visit(a.values())),
            FactorizedField::SixAxis(f) => f.factors.iter().for_each(|a| visit(a.values())),
        }
    }

    pub fn for_each_factor_mut(&mut self, mut visit: impl FnMut(&mut [f64])) {
        match self {
            FactorizedField::TriPlane(f) => {
                f.planes.iter_mut().for_each(|p| visit(p.values_mut()))
            }
            FactorizedField::Cp(f) => f.axes.iter_mut().for_each(|a| visit(a.values_mut())),
            FactorizedField::SixAxis(f) => {
                f.factors.iter_mut().for_each(|a| visit(a.values_mut()))
            }
        }
    }

    /// Evaluate the field at a normalized point, accumulating into `out`
    /// (length `channels`).
    pub fn query_accumulate(&self, p: Vector3<f64>, out: &mut [f64], scratch: &mut FieldScratch) {
        debug_assert_eq!(out.len(), self.channels());
        match self {
            FactorizedField::TriPlane(f) => {
                for plane in &f.planes {
                    let (ia, ib) = plane.plane.axes();
                    plane.bilinear_accumulate(p[ia], p[ib], out);
                }
            }
            FactorizedField::Cp(f) => {
                let lane = f.rank * f.channels;
                scratch.ensure(lane);
                f.axes[0].interpolate_into(p.x, &mut scratch.a[..lane]);
                f.axes[1].interpolate_into(p.y, &mut scratch.b[..lane]);
                f.axes[2].interpolate_into(p.z, &mut scratch.c[..lane]);
                for i in 0..f.rank {
                    let o = i * f.channels;
                    for ch in 0..f.channels {
                        out[ch] +=
                            scratch.a[o + ch] * scratch.b[o + ch] * scratch.c[o + ch];
                    }
                }
            }
            FactorizedField::SixAxis(f) => {
                let lane = f.rank * f.channels;
                scratch.ensure(lane);
                for (pair, &(ca, cb)) in SIX_AXIS_COORDS.iter().enumerate() {
                    f.factors[2 * pair].interpolate_into(p[ca], &mut scratch.a[..lane]);
                    f.factors[2 * pair + 1].interpolate_into(p[cb], &mut scratch.b[..lane]);
                    for i in 0..f.rank {
                        let o = i * f.channels;
                        for ch in 0..f.channels {
                            out[ch] += scratch.a[o + ch] * scratch.b[o + ch];
                        }
                    }
                }
            }
        }
    }

    /// Convenience allocating query.
    pub fn query(&self, p: Vector3<f64>) -> Vec<f64> {
        let mut out = vec![0.0; self.channels()];
        let mut scratch = FieldScratch::default();
        self.query_accumulate(p, &mut out, &mut scratch);
        out
    }

    /// Exact gradients of `upstream · query(p)` with respect to every stored
    /// factor value (accumulated into `grads`) and the normalized query point
    /// (accumulated into `point_grad`).
    pub fn backward(
        &self,
        p: Vector3<f64>,
        upstream: &[f64],
        grads: &mut FieldGrads,
        point_grad: &mut Vector3<f64>,
        scratch: &mut FieldScratch,
    ) {
        debug_assert_eq!(upstream.len(), self.channels());
        match self {
            FactorizedField::TriPlane(f) => {
                for (idx, plane) in f.planes.iter().enumerate() {
                    let (ia, ib) = plane.plane.axes();
                    let mut pg = [0.0; 2];
                    plane.bilinear_backward(
                        p[ia],
                        p[ib],
                        upstream,
                        grads.factor_mut(idx),
                        &mut pg,
                    );
                    point_grad[ia] += pg[0];
                    point_grad[ib] += pg[1];
                }
            }
            FactorizedField::Cp(f) => {
                let lane = f.rank * f.channels;
                scratch.ensure(lane);
                let FieldScratch { a, b, c, lane: work } = scratch;
                f.axes[0].interpolate_into(p.x, &mut a[..lane]);
                f.axes[1].interpolate_into(p.y, &mut b[..lane]);
                f.axes[2].interpolate_into(p.z, &mut c[..lane]);
                // Factor gradients: d(out[ch])/d(a_i[ch]) = b_i[ch] * c_i[ch], etc.
                for axis_idx in 0..3 {
                    let (o0, o1): (&[f64], &[f64]) = match axis_idx {
                        0 => (b, c),
                        1 => (a, c),
                        _ => (a, b),
                    };
                    for i in 0..f.rank {
                        let o = i * f.channels;
                        for ch in 0..f.channels {
                            work[o + ch] = upstream[ch] * o0[o + ch] * o1[o + ch];
                        }
                    }
                    let u = p[axis_idx];
                    f.axes[axis_idx].scatter_grad(u, &work[..lane], grads.factor_mut(axis_idx));
                    // Point gradient along this axis: derivative of the lerped
                    // factor times the other two lerped factors.
                    f.axes[axis_idx].point_derivative_into(u, &mut work[..lane]);
                    let mut acc = 0.0;
                    for i in 0..f.rank {
                        let off = i * f.channels;
                        for ch in 0..f.channels {
                            acc += upstream[ch] * work[off + ch] * o0[off + ch] * o1[off + ch];
                        }
                    }
                    point_grad[axis_idx] += acc;
                }
            }
            FactorizedField::SixAxis(f) => {
                let lane = f.rank * f.channels;
                scratch.ensure(lane);
                for (pair, &(ca, cb)) in SIX_AXIS_COORDS.iter().enumerate() {
                    let fa = &f.factors[2 * pair];
                    let fb = &f.factors[2 * pair + 1];
                    fa.interpolate_into(p[ca], &mut scratch.a[..lane]);
                    fb.interpolate_into(p[cb], &mut scratch.b[..lane]);
                    // grad wrt first factor of the pair
                    for i in 0..f.rank {
                        let o = i * f.channels;
                        for ch in 0..f.channels {
                            scratch.lane[o + ch] = upstream[ch] * scratch.b[o + ch];
                        }
                    }
                    fa.scatter_grad(p[ca], &scratch.lane[..lane], grads.factor_mut(2 * pair));
                    // grad wrt second factor
                    for i in 0..f.rank {
                        let o = i * f.channels;
                        for ch in 0..f.channels {
                            scratch.lane[o + ch] = upstream[ch] * scratch.a[o + ch];
                        }
                    }
                    fb.scatter_grad(
                        p[cb],
                        &scratch.lane[..lane],
                        grads.factor_mut(2 * pair + 1),
                    );
                    // point gradients
                    let deriv = &mut scratch.c[..lane];
                    fa.point_derivative_into(p[ca], deriv);
                    let mut acc = 0.0;
                    for i in 0..f.rank {
                        let o = i * f.channels;
                        for ch in 0..f.channels {
                            acc += upstream[ch] * deriv[o + ch] * scratch.b[o + ch];
                        }
                    }
                    point_grad[ca] += acc;
                    fb.point_derivative_into(p[cb], deriv);
                    let mut acc = 0.0;
                    for i in 0..f.rank {
                        let o = i * f.channels;
                        for ch in 0..f.channels {
                            acc += upstream[ch] * deriv[o + ch] * scratch.a[o + ch];
                        }
                    }
                    point_grad[cb] += acc;
                }
            }
        }
    }
}

impl FactorizedField {
    /// Gradient of `upstream . query(p)` w.r.t. the normalized point only.
    /// Cheaper than [`FactorizedField::backward`] when factor gradients are
    /// not needed (pose-only optimization).
    pub fn backward_point_only(
        &self,
        p: Vector3<f64>,
        upstream: &[f64],
        point_grad: &mut Vector3<f64>,
        scratch: &mut FieldScratch,
    ) {
        match self {
            FactorizedField::TriPlane(f) => {
                for plane in &f.planes {
                    let (ia, ib) = plane.plane.axes();
                    let mut pg = [0.0; 2];
                    plane.bilinear_point_grad(p[ia], p[ib], upstream, &mut pg);
                    point_grad[ia] += pg[0];
                    point_grad[ib] += pg[1];
                }
            }
            FactorizedField::Cp(f) => {
                let lane = f.rank * f.channels;
                scratch.ensure(lane);
                let FieldScratch { a, b, c, lane: work } = scratch;
                f.axes[0].interpolate_into(p.x, &mut a[..lane]);
                f.axes[1].interpolate_into(p.y, &mut b[..lane]);
                f.axes[2].interpolate_into(p.z, &mut c[..lane]);
                for axis_idx in 0..3 {
                    let (o0, o1): (&[f64], &[f64]) = match axis_idx {
                        0 => (b, c),
                        1 => (a, c),
                        _ => (a, b),
                    };
                    f.axes[axis_idx].point_derivative_into(p[axis_idx], &mut work[..lane]);
                    let mut acc = 0.0;
                    for i in 0..f.rank {
                        let off = i * f.channels;
                        for ch in 0..f.channels {
                            acc += upstream[ch] * work[off + ch] * o0[off + ch] * o1[off + ch];
                        }
                    }
                    point_grad[axis_idx] += acc;
                }
            }
            FactorizedField::SixAxis(f) => {
                let lane = f.rank * f.channels;
                scratch.ensure(lane);
                for (pair, &(ca, cb)) in SIX_AXIS_COORDS.iter().enumerate() {
                    let fa = &f.factors[2 * pair];
                    let fb = &f.factors[2 * pair + 1];
                    fa.interpolate_into(p[ca], &mut scratch.a[..lane]);
                    fb.interpolate_into(p[cb], &mut scratch.b[..lane]);
                    let deriv = &mut scratch.c[..lane];
                    fa.point_derivative_into(p[ca], deriv);
                    let mut acc = 0.0;
                    for i in 0..f.rank {
                        let o = i * f.channels;
                        for ch in 0..f.channels {
                            acc += upstream[ch] * deriv[o + ch] * scratch.b[o + ch];
                        }
                    }
                    point_grad[ca] += acc;
                    fb.point_derivative_into(p[cb], deriv);
                    let mut acc = 0.0;
                    for i in 0..f.rank {
                        let o = i * f.channels;
                        for ch in 0..f.channels {
                            acc += upstream[ch] * deriv[o + ch] * scratch.a[o + ch];
                        }
                    }
                    point_grad[cb] += acc;
                }
            }
        }
    }
}

/// Query a tri-plane field; errors on any other variant.
pub fn query_triplane(field: &FactorizedField, p: Vector3<f64>) -> Result<Vec<f64>, FieldError> {
    match field {
        FactorizedField::TriPlane(_) => Ok(field.query(p)),
        other => Err(FieldError::VariantMismatch {
            expected: "tri-plane",
            actual: other.kind().name(),
        }),
    }
}

/// Query a CP field; errors on any other variant.
pub fn query_cp(field: &FactorizedField, p: Vector3<f64>) -> Result<Vec<f64>, FieldError> {
    match field {
        FactorizedField::Cp(_) => Ok(field.query(p)),
        other => Err(FieldError::VariantMismatch {
            expected: "cp",
            actual: other.kind().name(),
        }),
    }
}

/// Query a six-axis field; errors on any other variant.
pub fn query_sixaxis(field: &FactorizedField, p: Vector3<f64>) -> Result<Vec<f64>, FieldError> {
    match field {
        FactorizedField::SixAxis(_) => Ok(field.query(p)),
        other => Err(FieldError::VariantMismatch {
            expected: "six-axis",
            actual: other.kind().name(),
        }),
    }
}

/// Stored parameter count of a field.
pub fn param_count(field: &FactorizedField) -> usize {
    field.param_count()
}
