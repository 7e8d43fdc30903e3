use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// How a frame's depth raster parameterizes distance.
///
/// The engine works in range along the (unit) pixel ray; TUM-style sensors
/// store the z coordinate in the camera frame instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthConvention {
    /// Distance along the normalized pixel ray.
    Range,
    /// Camera-frame z; converted to range per pixel before sampling.
    ZDepth,
}

/// Pinhole camera intrinsics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// Raw depth units per meter (e.g. 5000 for TUM 16-bit rasters, 1 for
    /// float rasters already in meters).
    pub depth_scale: f64,
    pub depth_convention: DepthConvention,
}

impl Intrinsics {
    /// Unit ray direction in the camera frame (x right, y down, z forward)
    /// through pixel center (u, v).
    #[inline]
    pub fn ray_direction(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0).normalize()
    }

    /// Factor converting camera-frame z to range along the pixel ray.
    #[inline]
    pub fn z_to_range(&self, u: f64, v: f64) -> f64 {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0).norm()
    }

    /// Measured depth at a pixel expressed as range along the ray, honoring
    /// the sensor's convention. Non-positive and non-finite values mean "no
    /// measurement" and pass through unchanged.
    #[inline]
    pub fn measured_range(&self, u: f64, v: f64, depth: f64) -> f64 {
        if !(depth.is_finite() && depth > 0.0) {
            return depth;
        }
        match self.depth_convention {
            DepthConvention::Range => depth,
            DepthConvention::ZDepth => depth * self.z_to_range(u, v),
        }
    }

    pub fn scaled(&self, factor: f64) -> Intrinsics {
        Intrinsics {
            fx: self.fx * factor,
            fy: self.fy * factor,
            cx: (self.cx + 0.5) * factor - 0.5,
            cy: (self.cy + 0.5) * factor - 0.5,
            width: ((self.width as f64) * factor).round() as u32,
            height: ((self.height as f64) * factor).round() as u32,
            depth_scale: self.depth_scale,
            depth_convention: self.depth_convention,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn intr() -> Intrinsics {
        Intrinsics {
            fx: 240.0,
            fy: 240.0,
            cx: 159.5,
            cy: 119.5,
            width: 320,
            height: 240,
            depth_scale: 1.0,
            depth_convention: DepthConvention::Range,
        }
    }

    #[test]
    fn principal_ray_points_forward() {
        let k = intr();
        let d = k.ray_direction(k.cx, k.cy);
        assert!((d - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-15);
        assert!((k.z_to_range(k.cx, k.cy) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn z_depth_conversion_grows_off_axis() {
        let mut k = intr();
        k.depth_convention = DepthConvention::ZDepth;
        let r = k.measured_range(0.0, 0.0, 2.0);
        assert!(r > 2.0);
        // invalid depths pass through
        assert_eq!(k.measured_range(0.0, 0.0, 0.0), 0.0);
    }
}
