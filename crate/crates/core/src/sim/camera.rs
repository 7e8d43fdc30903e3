use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::slam::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryKind {
    Circle,
    Line,
    Lissajous,
}

/// Parametric camera path. All kinds aim the camera at `look_at`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub kind: TrajectoryKind,
    pub center: Vector3<f64>,
    pub radius: f64,
    pub frames: usize,
    pub look_at: Vector3<f64>,
    /// Parameter span swept over the sequence, radians. Controls inter-frame
    /// motion: desk-scale captures move centimeters per frame.
    pub arc: f64,
}

/// Camera-to-world pose looking from `eye` toward `target`, z forward,
/// y down (world up is +z).
pub fn look_at_pose(eye: Vector3<f64>, target: Vector3<f64>) -> Pose {
    let forward = (target - eye).normalize();
    let up = Vector3::z();
    let mut right = forward.cross(&up);
    if right.norm() < 1e-9 {
        right = Vector3::x();
    }
    let right = right.normalize();
    let down = forward.cross(&right).normalize();
    let rot = Matrix3::from_columns(&[right, down, forward]);
    Pose::new(
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(rot)),
        eye,
    )
}

/// Camera positions and orientations along the path, one per frame.
pub fn trajectory_poses(spec: &TrajectorySpec) -> Vec<Pose> {
    assert!(spec.frames > 0);
    (0..spec.frames)
        .map(|i| {
            let s = i as f64 / spec.frames as f64;
            let eye = match spec.kind {
                TrajectoryKind::Circle => {
                    let th = s * spec.arc;
                    spec.center + Vector3::new(spec.radius * th.cos(), spec.radius * th.sin(), 0.0)
                }
                TrajectoryKind::Line => {
                    let dir = Vector3::new(1.0, 0.3, 0.0).normalize();
                    spec.center + dir * spec.radius * (2.0 * s - 1.0)
                }
                TrajectoryKind::Lissajous => {
                    let th = s * spec.arc;
                    spec.center
                        + Vector3::new(
                            spec.radius * th.cos(),
                            spec.radius * (2.0 * th).sin() * 0.6,
                            0.3 * (3.0 * th).sin(),
                        )
                }
            };
            look_at_pose(eye, spec.look_at)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn look_at_points_camera_z_at_target() {
        let eye = Vector3::new(1.5, 0.0, 1.5);
        let target = Vector3::new(0.0, 0.0, 0.6);
        let pose = look_at_pose(eye, target);
        let fwd_world = pose.rotate(Vector3::z());
        let expect = (target - eye).normalize();
        assert!((fwd_world - expect).norm() < 1e-12);
        // y axis has no upward component (camera never rolls)
        let down_world = pose.rotate(Vector3::y());
        assert!(down_world.z < 0.0);
        // proper rotation
        let det = pose.rotation.to_rotation_matrix().matrix().determinant();
        assert!((det - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circle_poses_stay_on_circle() {
        let spec = TrajectorySpec {
            kind: TrajectoryKind::Circle,
            center: Vector3::new(0.0, 0.0, 1.5),
            radius: 1.5,
            frames: 50,
            look_at: Vector3::new(0.0, 0.0, 0.6),
            arc: std::f64::consts::TAU,
        };
        let poses = trajectory_poses(&spec);
        assert_eq!(poses.len(), 50);
        for p in &poses {
            let r = (p.translation - spec.center).norm();
            assert!((r - 1.5).abs() < 1e-12);
        }
        // distinct orientations along the way
        assert!(poses[0].rotation.angle_to(&poses[25].rotation) > 1.0);
    }
}
