use nalgebra::Vector3;
use rayon::prelude::*;

use crate::io::Frame;
use crate::render::Intrinsics;
use crate::slam::Pose;

use super::scene::AnalyticScene;

const HIT_EPSILON: f64 = 1e-4;
const MAX_STEPS: usize = 256;
const MAX_RANGE: f64 = 50.0;

/// Fixed directional light (pointing from surfaces toward the light).
const LIGHT: [f64; 3] = [-0.35, -0.25, 0.9];
const AMBIENT: f64 = 0.35;

/// Sphere-trace one ray; returns range along the ray and the hit primitive.
fn trace(scene: &AnalyticScene, origin: Vector3<f64>, dir: Vector3<f64>) -> Option<(f64, usize)> {
    let mut t = 0.0;
    for _ in 0..MAX_STEPS {
        let sample = scene.sample(origin + dir * t);
        if sample.distance.abs() < HIT_EPSILON {
            return Some((t, sample.primitive));
        }
        t += sample.distance;
        if t > MAX_RANGE || t < 0.0 {
            return None;
        }
    }
    None
}

/// Render an RGB-D frame by sphere tracing the analytic scene. Depth is the
/// hit range along each (unit) pixel ray; misses store 0.
pub fn render_frame(scene: &AnalyticScene, pose: &Pose, intrinsics: &Intrinsics) -> Frame {
    let w = intrinsics.width as usize;
    let h = intrinsics.height as usize;
    let origin = pose.translation;
    let light = Vector3::new(LIGHT[0], LIGHT[1], LIGHT[2]).normalize();

    let rows: Vec<(Vec<u8>, Vec<f32>)> = (0..h)
        .into_par_iter()
        .map(|v| {
            let mut rgb_row = vec![0u8; w * 3];
            let mut depth_row = vec![0f32; w];
            for u in 0..w {
                let dir = pose.rotate(intrinsics.ray_direction(u as f64, v as f64));
                if let Some((t, prim)) = trace(scene, origin, dir) {
                    depth_row[u] = t as f32;
                    let p = origin + dir * t;
                    let n = scene.normal(p);
                    let albedo = scene.primitives()[prim].albedo;
                    let shade = AMBIENT + (1.0 - AMBIENT) * n.dot(&light).max(0.0);
                    for c in 0..3 {
                        rgb_row[u * 3 + c] =
                            ((albedo[c] * shade).clamp(0.0, 1.0) * 255.0).round() as u8;
                    }
                }
            }
            (rgb_row, depth_row)
        })
        .collect();

    let mut rgb = Vec::with_capacity(w * h * 3);
    let mut depth = Vec::with_capacity(w * h);
    for (r, d) in rows {
        rgb.extend_from_slice(&r);
        depth.extend_from_slice(&d);
    }
    Frame {
        timestamp: 0.0,
        rgb,
        depth,
        intrinsics: *intrinsics,
        gt_pose: Some(*pose),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{default_intrinsics, default_scene};
    use crate::sim::{camera::look_at_pose, Primitive};

    #[test]
    fn flat_wall_principal_ray_depth() {
        // camera 2 m in front of the +x wall of the room, looking straight at it
        let scene = default_scene();
        let eye = Vector3::new(1.0, 0.0, 1.5);
        let pose = look_at_pose(eye, Vector3::new(3.0, 0.0, 1.5));
        let k = default_intrinsics();
        let frame = render_frame(&scene, &pose, &k);
        let d = frame.depth_at(k.cx.round() as usize, k.cy.round() as usize);
        assert!((d - 2.0).abs() < 1e-3, "principal depth {d}");
    }

    #[test]
    fn escaping_rays_store_zero() {
        // single sphere, no room: most rays miss
        let scene = crate::sim::AnalyticScene::new(vec![Primitive::sphere(
            Vector3::new(0.0, 0.0, 2.0),
            0.3,
            [1.0, 0.0, 0.0],
        )]);
        let pose = look_at_pose(Vector3::new(0.0, 0.0, 0.0), Vector3::new(0.0, 0.0, 2.0));
        let k = default_intrinsics();
        let frame = render_frame(&scene, &pose, &k);
        assert_eq!(frame.depth_at(0, 0), 0.0);
        let center = frame.depth_at(k.cx.round() as usize, k.cy.round() as usize);
        assert!((center - 1.7).abs() < 1e-3);
    }

    #[test]
    fn sphere_depth_matches_closed_form_intersection() {
        let center = Vector3::new(0.3, -0.2, 2.5);
        let radius = 0.4;
        let scene = crate::sim::AnalyticScene::new(vec![Primitive::sphere(
            center,
            radius,
            [0.9, 0.9, 0.9],
        )]);
        let eye = Vector3::new(0.0, 0.0, 0.0);
        let pose = look_at_pose(eye, center);
        let k = default_intrinsics();
        let frame = render_frame(&scene, &pose, &k);

        let mut max_err: f64 = 0.0;
        let mut hits = 0;
        for v in (0..k.height as usize).step_by(7) {
            for u in (0..k.width as usize).step_by(7) {
                let d = frame.depth_at(u, v);
                let dir = pose.rotate(k.ray_direction(u as f64, v as f64));
                // |o + t d - c| = r with |d| = 1
                let oc = eye - center;
                let b = oc.dot(&dir);
                let disc = b * b - (oc.norm_squared() - radius * radius);
                if disc <= 1e-6 {
                    continue; // grazing rays: sphere tracing may legitimately stop early
                }
                let t_true = -b - disc.sqrt();
                if d > 0.0 {
                    max_err = max_err.max((d - t_true).abs());
                    hits += 1;
                }
            }
        }
        assert!(hits > 50);
        assert!(max_err < 1e-3, "max ray-sphere error {max_err}");
    }

    #[test]
    fn backprojected_depth_lies_on_surface() {
        let scene = default_scene();
        let k = default_intrinsics();
        let pose = look_at_pose(Vector3::new(1.5, 0.0, 1.5), Vector3::new(0.1, 0.0, 0.6));
        let frame = render_frame(&scene, &pose, &k);
        for v in (0..k.height as usize).step_by(11) {
            for u in (0..k.width as usize).step_by(13) {
                let d = frame.depth_at(u, v);
                if d <= 0.0 {
                    continue;
                }
                let p = pose.translation + pose.rotate(k.ray_direction(u as f64, v as f64)) * d;
                assert!(
                    scene.sdf(p).abs() < 2e-3,
                    "backprojection off surface at ({u},{v}): {}",
                    scene.sdf(p)
                );
            }
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let scene = default_scene();
        let k = default_intrinsics();
        let pose = look_at_pose(Vector3::new(1.5, 0.0, 1.5), Vector3::new(0.1, 0.0, 0.6));
        let a = render_frame(&scene, &pose, &k);
        let b = render_frame(&scene, &pose, &k);
        assert_eq!(a.rgb, b.rgb);
        assert_eq!(a.depth, b.depth);
    }
}
