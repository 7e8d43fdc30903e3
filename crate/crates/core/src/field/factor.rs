use rand::Rng;

use super::{lerp_point_scale, lerp_setup, FieldError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    #[inline]
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }
}

/// One axis-aligned factor: a grid of `len` knots, each holding `rank`
/// components of `channels` values. Storage is rank-major per knot so the
/// interpolation at one coordinate gathers a contiguous `rank * channels`
/// block per neighbor.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisFactor {
    pub axis: Axis,
    len: usize,
    rank: usize,
    channels: usize,
    values: Vec<f64>,
}

impl AxisFactor {
    pub fn zeros(axis: Axis, len: usize, rank: usize, channels: usize) -> Result<Self, FieldError> {
        if len < 2 {
            return Err(FieldError::ResolutionTooSmall(len));
        }
        Ok(Self {
            axis,
            len,
            rank,
            channels,
            values: vec![0.0; len * rank * channels],
        })
    }

    pub fn from_values(
        axis: Axis,
        len: usize,
        rank: usize,
        channels: usize,
        values: Vec<f64>,
    ) -> Result<Self, FieldError> {
        if len < 2 {
            return Err(FieldError::ResolutionTooSmall(len));
        }
        let expected = len * rank * channels;
        if values.len() != expected {
            return Err(FieldError::ShapeMismatch {
                expected,
                actual: values.len(),
            });
        }
        Ok(Self {
            axis,
            len,
            rank,
            channels,
            values,
        })
    }

    /// Zero-mean uniform noise of the given amplitude. Symmetric products of
    /// all-zero factors would stay zero under gradient descent.
    pub fn init_uniform<R: Rng>(
        axis: Axis,
        len: usize,
        rank: usize,
        channels: usize,
        amplitude: f64,
        rng: &mut R,
    ) -> Result<Self, FieldError> {
        let mut f = Self::zeros(axis, len, rank, channels)?;
        if amplitude > 0.0 {
            for v in f.values.iter_mut() {
                *v = rng.random_range(-amplitude..amplitude);
            }
        }
        Ok(f)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.rank
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn lane_len(&self) -> usize {
        self.rank * self.channels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn value(&self, knot: usize, component: usize, channel: usize) -> f64 {
        self.values[(knot * self.rank + component) * self.channels + channel]
    }

    /// Lerp all rank·channel lanes at normalized coordinate `u` into `out`.
    #[inline]
    pub fn interpolate_into(&self, u: f64, out: &mut [f64]) {
        let lane = self.lane_len();
        debug_assert_eq!(out.len(), lane);
        let (i0, f) = lerp_setup(u, self.len);
        let lo = &self.values[i0 * lane..(i0 + 1) * lane];
        let hi = &self.values[(i0 + 1) * lane..(i0 + 2) * lane];
        for ((o, a), b) in out.iter_mut().zip(lo).zip(hi) {
            *o = a + f * (b - a);
        }
    }

    /// d(lerp)/du for all lanes, already scaled by the knot spacing.
    #[inline]
    pub fn point_derivative_into(&self, u: f64, out: &mut [f64]) {
        let lane = self.lane_len();
        debug_assert_eq!(out.len(), lane);
        let (i0, _) = lerp_setup(u, self.len);
        let scale = lerp_point_scale(u, self.len);
        let lo = &self.values[i0 * lane..(i0 + 1) * lane];
        let hi = &self.values[(i0 + 1) * lane..(i0 + 2) * lane];
        for ((o, a), b) in out.iter_mut().zip(lo).zip(hi) {
            *o = (b - a) * scale;
        }
    }

    /// Scatter `lane_grad` (one value per rank·channel lane) onto the two
    /// knots adjacent to `u` with lerp weights.
    #[inline]
    pub fn scatter_grad(&self, u: f64, lane_grad: &[f64], grad_values: &mut [f64]) {
        let lane = self.lane_len();
        debug_assert_eq!(lane_grad.len(), lane);
        debug_assert_eq!(grad_values.len(), self.values.len());
        let (i0, f) = lerp_setup(u, self.len);
        let w0 = 1.0 - f;
        let lo = &mut grad_values[i0 * lane..(i0 + 1) * lane];
        for (g, d) in lo.iter_mut().zip(lane_grad) {
            *g += w0 * d;
        }
        let hi = &mut grad_values[(i0 + 1) * lane..(i0 + 2) * lane];
        for (g, d) in hi.iter_mut().zip(lane_grad) {
            *g += f * d;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaneId {
    Xy,
    Yz,
    Zx,
}

impl PlaneId {
    /// World-axis indices of the plane's (a, b) grid coordinates.
    #[inline]
    pub fn axes(self) -> (usize, usize) {
        match self {
            PlaneId::Xy => (0, 1),
            PlaneId::Yz => (1, 2),
            PlaneId::Zx => (2, 0),
        }
    }
}

/// One dense 2D feature plane, bilinearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePlane {
    pub plane: PlaneId,
    len_a: usize,
    len_b: usize,
    channels: usize,
    values: Vec<f64>,
}

impl FeaturePlane {
    pub fn zeros(
        plane: PlaneId,
        len_a: usize,
        len_b: usize,
        channels: usize,
    ) -> Result<Self, FieldError> {
        if len_a < 2 {
            return Err(FieldError::ResolutionTooSmall(len_a));
        }
        if len_b < 2 {
            return Err(FieldError::ResolutionTooSmall(len_b));
        }
        Ok(Self {
            plane,
            len_a,
            len_b,
            channels,
            values: vec![0.0; len_a * len_b * channels],
        })
    }

    pub fn from_values(
        plane: PlaneId,
        len_a: usize,
        len_b: usize,
        channels: usize,
        values: Vec<f64>,
    ) -> Result<Self, FieldError> {
        let mut p = Self::zeros(plane, len_a, len_b, channels)?;
        if values.len() != p.values.len() {
            return Err(FieldError::ShapeMismatch {
                expected: p.values.len(),
                actual: values.len(),
            });
        }
        p.values = values;
        Ok(p)
    }

    pub fn init_uniform<R: Rng>(
        plane: PlaneId,
        len_a: usize,
        len_b: usize,
        channels: usize,
        amplitude: f64,
        rng: &mut R,
    ) -> Result<Self, FieldError> {
        let mut p = Self::zeros(plane, len_a, len_b, channels)?;
        if amplitude > 0.0 {
            for v in p.values.iter_mut() {
                *v = rng.random_range(-amplitude..amplitude);
            }
        }
        Ok(p)
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.len_a, self.len_b, self.channels)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    fn base(&self, a: usize, b: usize) -> usize {
        (a * self.len_b + b) * self.channels
    }

    #[inline]
    pub fn value(&self, a: usize, b: usize, channel: usize) -> f64 {
        self.values[self.base(a, b) + channel]
    }

    /// Accumulate the bilinear sample at plane coordinates (ua, ub) into `out`.
    #[inline]
    pub fn bilinear_accumulate(&self, ua: f64, ub: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.channels);
        let (a0, fa) = lerp_setup(ua, self.len_a);
        let (b0, fb) = lerp_setup(ub, self.len_b);
        let w00 = (1.0 - fa) * (1.0 - fb);
        let w01 = (1.0 - fa) * fb;
        let w10 = fa * (1.0 - fb);
        let w11 = fa * fb;
        let c00 = self.base(a0, b0);
        let c01 = self.base(a0, b0 + 1);
        let c10 = self.base(a0 + 1, b0);
        let c11 = self.base(a0 + 1, b0 + 1);
        for ch in 0..self.channels {
            out[ch] += w00 * self.values[c00 + ch]
                + w01 * self.values[c01 + ch]
                + w10 * self.values[c10 + ch]
                + w11 * self.values[c11 + ch];
        }
    }

    /// d/d(ua, ub) of `upstream . bilinear(ua, ub)` without touching value
    /// gradients.
    pub fn bilinear_point_grad(&self, ua: f64, ub: f64, upstream: &[f64], point_grad: &mut [f64; 2]) {
        let (a0, fa) = lerp_setup(ua, self.len_a);
        let (b0, fb) = lerp_setup(ub, self.len_b);
        let sa = lerp_point_scale(ua, self.len_a);
        let sb = lerp_point_scale(ub, self.len_b);
        let c00 = self.base(a0, b0);
        let c01 = self.base(a0, b0 + 1);
        let c10 = self.base(a0 + 1, b0);
        let c11 = self.base(a0 + 1, b0 + 1);
        for (ch, &u) in upstream.iter().enumerate() {
            let v00 = self.values[c00 + ch];
            let v01 = self.values[c01 + ch];
            let v10 = self.values[c10 + ch];
            let v11 = self.values[c11 + ch];
            point_grad[0] += u * sa * ((1.0 - fb) * (v10 - v00) + fb * (v11 - v01));
            point_grad[1] += u * sb * ((1.0 - fa) * (v01 - v00) + fa * (v11 - v10));
        }
    }

    /// Backward pass of `bilinear_accumulate`: scatter `upstream` onto the four
    /// corners and accumulate d/d(ua, ub) into `point_grad`.
    pub fn bilinear_backward(
        &self,
        ua: f64,
        ub: f64,
        upstream: &[f64],
        grad_values: &mut [f64],
        point_grad: &mut [f64; 2],
    ) {
        debug_assert_eq!(upstream.len(), self.channels);
        debug_assert_eq!(grad_values.len(), self.values.len());
        let (a0, fa) = lerp_setup(ua, self.len_a);
        let (b0, fb) = lerp_setup(ub, self.len_b);
        let sa = lerp_point_scale(ua, self.len_a);
        let sb = lerp_point_scale(ub, self.len_b);
        let c00 = self.base(a0, b0);
        let c01 = self.base(a0, b0 + 1);
        let c10 = self.base(a0 + 1, b0);
        let c11 = self.base(a0 + 1, b0 + 1);
        for (ch, &u) in upstream.iter().enumerate() {
            grad_values[c00 + ch] += u * (1.0 - fa) * (1.0 - fb);
            grad_values[c01 + ch] += u * (1.0 - fa) * fb;
            grad_values[c10 + ch] += u * fa * (1.0 - fb);
            grad_values[c11 + ch] += u * fa * fb;

            let v00 = self.values[c00 + ch];
            let v01 = self.values[c01 + ch];
            let v10 = self.values[c10 + ch];
            let v11 = self.values[c11 + ch];
            // d/d ua of the bilinear form, with fb fixed (and vice versa).
            point_grad[0] += u * sa * ((1.0 - fb) * (v10 - v00) + fb * (v11 - v01));
            point_grad[1] += u * sb * ((1.0 - fa) * (v01 - v00) + fa * (v11 - v10));
        }
    }
}
