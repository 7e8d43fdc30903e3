use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::FieldError;

/// Axis-aligned scene extent in meters.
///
/// All field queries address the unit cube; world points are mapped through
/// `(p - min) / (max - min)` before interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneBounds {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl SceneBounds {
    pub fn new(min: Vector3<f64>, max: Vector3<f64>) -> Result<Self, FieldError> {
        if min.x < max.x && min.y < max.y && min.z < max.z {
            Ok(Self { min, max })
        } else {
            Err(FieldError::InvalidBounds)
        }
    }

    pub fn extent(&self) -> Vector3<f64> {
        self.max - self.min
    }

    /// Map a world point into normalized coordinates. Not clamped; the fields
    /// clamp per axis so that queries are constant outside the bounds.
    #[inline]
    pub fn normalize(&self, p: Vector3<f64>) -> Vector3<f64> {
        let e = self.extent();
        Vector3::new(
            (p.x - self.min.x) / e.x,
            (p.y - self.min.y) / e.y,
            (p.z - self.min.z) / e.z,
        )
    }

    pub fn contains(&self, p: Vector3<f64>) -> bool {
        p.x >= self.min.x
            && p.y >= self.min.y
            && p.z >= self.min.z
            && p.x <= self.max.x
            && p.y <= self.max.y
            && p.z <= self.max.z
    }

    /// Knot counts per axis for a grid with the given metric cell size:
    /// `ceil(extent / cell) + 1`.
    pub fn axis_resolutions(&self, cell: f64) -> [usize; 3] {
        let e = self.extent();
        let res = |len: f64| ((len / cell).ceil() as usize + 1).max(2);
        [res(e.x), res(e.y), res(e.z)]
    }

    /// Entry/exit distances of a ray against the bounds (slab test).
    /// Returns None when the ray misses.
    pub fn ray_intersection(
        &self,
        origin: Vector3<f64>,
        direction: Vector3<f64>,
    ) -> Option<(f64, f64)> {
        let mut t_enter = f64::NEG_INFINITY;
        let mut t_exit = f64::INFINITY;
        for a in 0..3 {
            let o = origin[a];
            let d = direction[a];
            if d.abs() < 1e-12 {
                if o < self.min[a] || o > self.max[a] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / d;
            let (t0, t1) = {
                let ta = (self.min[a] - o) * inv;
                let tb = (self.max[a] - o) * inv;
                if ta < tb {
                    (ta, tb)
                } else {
                    (tb, ta)
                }
            };
            t_enter = t_enter.max(t0);
            t_exit = t_exit.min(t1);
            if t_enter > t_exit {
                return None;
            }
        }
        if t_exit <= 0.0 {
            return None;
        }
        Some((t_enter, t_exit))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_maps_corners_to_unit_cube() {
        let b = SceneBounds::new(Vector3::new(-1.0, 0.0, 2.0), Vector3::new(1.0, 4.0, 3.0))
            .unwrap();
        assert_eq!(b.normalize(b.min), Vector3::zeros());
        assert_eq!(b.normalize(b.max), Vector3::new(1.0, 1.0, 1.0));
    }

    #[test]
    fn degenerate_bounds_rejected() {
        let r = SceneBounds::new(Vector3::zeros(), Vector3::new(1.0, 0.0, 1.0));
        assert!(r.is_err());
    }

    #[test]
    fn resolutions_round_up_and_add_one() {
        let b = SceneBounds::new(Vector3::zeros(), Vector3::new(6.0, 6.0, 3.0)).unwrap();
        assert_eq!(b.axis_resolutions(0.24), [26, 26, 14]);
        assert_eq!(b.axis_resolutions(0.06), [101, 101, 51]);
    }

    #[test]
    fn ray_hits_box_from_inside_and_outside() {
        let b = SceneBounds::new(Vector3::zeros(), Vector3::new(1.0, 1.0, 1.0)).unwrap();
        let (t0, t1) = b
            .ray_intersection(Vector3::new(0.5, 0.5, 0.5), Vector3::new(0.0, 0.0, 1.0))
            .unwrap();
        assert!(t0 < 0.0 && (t1 - 0.5).abs() < 1e-12);

        let (t0, t1) = b
            .ray_intersection(Vector3::new(0.5, 0.5, -1.0), Vector3::new(0.0, 0.0, 1.0))
            .unwrap();
        assert!((t0 - 1.0).abs() < 1e-12 && (t1 - 2.0).abs() < 1e-12);

        assert!(b
            .ray_intersection(Vector3::new(2.0, 2.0, 2.0), Vector3::new(0.0, 0.0, 1.0))
            .is_none());
    }
}
