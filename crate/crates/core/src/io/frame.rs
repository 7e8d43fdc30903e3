use crate::render::Intrinsics;
use crate::slam::Pose;

/// One RGB-D observation. Depth is stored in meters in the sensor's own
/// convention ([`Intrinsics::depth_convention`]); use [`Frame::measured_range`]
/// to get the range along a pixel ray, which is what the engine consumes.
#[derive(Debug, Clone)]
pub struct Frame {
    pub timestamp: f64,
    /// H x W x 3, row-major.
    pub rgb: Vec<u8>,
    /// H x W, meters; 0 or non-finite marks a missing measurement.
    pub depth: Vec<f32>,
    pub intrinsics: Intrinsics,
    pub gt_pose: Option<Pose>,
}

impl Frame {
    pub fn width(&self) -> usize {
        self.intrinsics.width as usize
    }

    pub fn height(&self) -> usize {
        self.intrinsics.height as usize
    }

    #[inline]
    pub fn color_at(&self, u: usize, v: usize) -> [f64; 3] {
        let base = (v * self.width() + u) * 3;
        [
            self.rgb[base] as f64 / 255.0,
            self.rgb[base + 1] as f64 / 255.0,
            self.rgb[base + 2] as f64 / 255.0,
        ]
    }

    /// Raw stored depth in meters.
    #[inline]
    pub fn depth_at(&self, u: usize, v: usize) -> f64 {
        self.depth[v * self.width() + u] as f64
    }

    /// Measured range along the pixel ray in meters; invalid values pass
    /// through unchanged.
    #[inline]
    pub fn measured_range(&self, u: usize, v: usize) -> f64 {
        self.intrinsics
            .measured_range(u as f64, v as f64, self.depth_at(u, v))
    }

    pub fn valid_depth_count(&self) -> usize {
        self.depth
            .iter()
            .filter(|d| d.is_finite() && **d > 0.0)
            .count()
    }
}
