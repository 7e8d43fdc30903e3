//! Deterministic synthetic RGB-D sequences with exact ground truth, used as
//! desk-scale stand-ins for real capture: analytic signed-distance scenes,
//! sphere-traced rendering, parametric camera trajectories, and seeded depth
//! noise.

mod camera;
mod noise;
mod render;
mod scene;

pub use camera::{look_at_pose, trajectory_poses, TrajectoryKind, TrajectorySpec};
pub use noise::add_depth_noise;
pub use render::render_frame;
pub use scene::{AnalyticScene, Primitive, SceneSample};

use nalgebra::Vector3;

use crate::field::SceneBounds;
use crate::io::Frame;
use crate::render::{DepthConvention, Intrinsics};

/// The default desk-scale acceptance scene: a 6 x 6 x 3 m room containing two
/// spheres and a box with saturated albedos.
pub fn default_scene() -> AnalyticScene {
    AnalyticScene::new(vec![
        Primitive::room(
            Vector3::new(-3.0, -3.0, 0.0),
            Vector3::new(3.0, 3.0, 3.0),
            [0.75, 0.72, 0.65],
        ),
        Primitive::sphere(Vector3::new(1.0, 0.6, 0.5), 0.5, [0.85, 0.12, 0.10]),
        Primitive::sphere(Vector3::new(-0.8, -0.9, 0.3), 0.3, [0.10, 0.75, 0.15]),
        Primitive::cuboid(
            Vector3::new(-0.1, 1.2, 0.5),
            Vector3::new(0.4, 0.3, 0.5),
            [0.12, 0.20, 0.85],
        ),
    ])
}

/// Scene bounds for the default scene, with margin so rays can exit cleanly.
pub fn default_bounds() -> SceneBounds {
    SceneBounds::new(Vector3::new(-3.2, -3.2, -0.2), Vector3::new(3.2, 3.2, 3.2)).unwrap()
}

/// Default acceptance trajectory: an arc of the 1.5 m circle giving a few
/// centimeters of camera motion per frame at 50 frames, comparable to
/// handheld capture.
pub fn default_trajectory(frames: usize) -> TrajectorySpec {
    TrajectorySpec {
        kind: TrajectoryKind::Circle,
        center: Vector3::new(0.0, 0.0, 1.5),
        radius: 1.5,
        frames,
        look_at: Vector3::new(0.1, 0.0, 0.6),
        arc: 1.2,
    }
}

pub fn default_intrinsics() -> Intrinsics {
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

/// Render a full sequence along a trajectory at the given frame rate.
///
/// Every pose is validated to keep at least 0.2 m of free space around the
/// camera.
pub fn generate_sequence(
    scene: &AnalyticScene,
    spec: &TrajectorySpec,
    intrinsics: &Intrinsics,
    fps: f64,
) -> Vec<Frame> {
    let poses = trajectory_poses(spec);
    poses
        .iter()
        .enumerate()
        .map(|(i, pose)| {
            let clearance = scene.sdf(pose.translation);
            assert!(
                clearance >= 0.2,
                "camera pose {i} too close to geometry ({clearance:.3} m)"
            );
            let mut frame = render_frame(scene, pose, intrinsics);
            frame.timestamp = i as f64 / fps;
            frame
        })
        .collect()
}
