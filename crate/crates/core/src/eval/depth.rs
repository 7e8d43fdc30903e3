//! Depth-map L1 between the reconstructed surface and a reference renderer
//! over a set of sampled camera poses.
//!
//! The reconstruction's depth maps come from raycasting the decoded SDF to
//! its zero crossing (the reconstructed surface), matching the convention of
//! evaluating mesh-rendered depth rather than the volume-rendering estimate.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::map::SceneMap;
use crate::render::Intrinsics;
use crate::sim::AnalyticScene;
use crate::slam::Pose;

/// Depth image as a flat row-major raster; 0 marks invalid.
pub type DepthImage = Vec<f64>;

/// Mean absolute difference over valid pixels, averaged across poses, in cm.
/// Pixels are valid when the reference has a measurement and the estimate
/// found a surface.
pub fn depth_l1_images<E, R>(poses: &[Pose], render_est: E, render_ref: R) -> f64
where
    E: Fn(&Pose) -> DepthImage + Sync,
    R: Fn(&Pose) -> DepthImage + Sync,
{
    let (sum, count) = poses
        .par_iter()
        .map(|pose| {
            let est = render_est(pose);
            let reference = render_ref(pose);
            let mut s = 0.0;
            let mut c = 0usize;
            for (e, r) in est.iter().zip(&reference) {
                if *r > 0.0 && *e > 0.0 {
                    s += (e - r).abs();
                    c += 1;
                }
            }
            (s, c)
        })
        .reduce(|| (0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64 * 100.0
    }
}

/// March the decoded SDF along a ray to its first zero crossing; bisection
/// refines the hit. Step size should be at or below half the truncation so
/// crossings are not skipped.
pub fn raycast_sdf_depth(
    map: &SceneMap,
    origin: Vector3<f64>,
    dir: Vector3<f64>,
    step: f64,
    max_range: f64,
) -> Option<f64> {
    let bounds = map.bounds();
    let (enter, exit) = bounds.ray_intersection(origin, dir)?;
    let near = enter.max(1e-3);
    let far = exit.min(max_range);
    if far <= near {
        return None;
    }
    let mut t_prev = near;
    let mut v_prev = map.sdf_at(origin + dir * t_prev);
    if v_prev < 0.0 {
        return None; // starts inside geometry
    }
    let mut t = near + step;
    while t <= far {
        let v = map.sdf_at(origin + dir * t);
        if v < 0.0 {
            // bisect the bracket [t_prev, t]
            let (mut lo, mut hi) = (t_prev, t);
            let mut v_lo = v_prev;
            for _ in 0..12 {
                let mid = 0.5 * (lo + hi);
                let vm = map.sdf_at(origin + dir * mid);
                if (vm < 0.0) == (v_lo < 0.0) {
                    lo = mid;
                    v_lo = vm;
                } else {
                    hi = mid;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        t_prev = t;
        v_prev = v;
        t += step;
    }
    None
}

/// Render the map's surface depth for a full image.
pub fn render_map_depth(
    map: &SceneMap,
    pose: &Pose,
    intrinsics: &Intrinsics,
    step: f64,
    max_range: f64,
) -> DepthImage {
    let w = intrinsics.width as usize;
    let h = intrinsics.height as usize;
    (0..h)
        .into_par_iter()
        .flat_map_iter(|v| {
            let mut row = vec![0.0; w];
            for (u, out) in row.iter_mut().enumerate() {
                let dir = pose.rotate(intrinsics.ray_direction(u as f64, v as f64));
                if let Some(t) =
                    raycast_sdf_depth(map, pose.translation, dir, step, max_range)
                {
                    *out = t;
                }
            }
            row
        })
        .collect()
}

/// Sample evaluation poses: positions jittered around a reference trajectory
/// with at least `clearance` of free space, aimed near the scene's look
/// target.
pub fn sample_eval_poses(
    scene: &AnalyticScene,
    reference: &[Pose],
    count: usize,
    clearance: f64,
    seed: u64,
) -> Vec<Pose> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut guard = 0;
    while out.len() < count && guard < count * 100 {
        guard += 1;
        let base = reference[rng.random_range(0..reference.len())];
        let eye = base.translation
            + Vector3::new(
                rng.random_range(-0.3..0.3),
                rng.random_range(-0.3..0.3),
                rng.random_range(-0.3..0.3),
            );
        if scene.sdf(eye) < clearance {
            continue;
        }
        let target = eye
            + base.rotate(Vector3::z()) * 2.0
            + Vector3::new(
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.3..0.3),
            );
        out.push(crate::sim::look_at_pose(eye, target));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slam::Pose;

    #[test]
    fn equal_renders_give_zero() {
        let poses = vec![Pose::identity(); 3];
        let img = |_: &Pose| vec![1.0, 2.0, 0.0, 3.0];
        let l1 = depth_l1_images(&poses, img, img);
        assert_eq!(l1, 0.0);
    }

    #[test]
    fn uniform_bias_reports_exactly() {
        let poses = vec![Pose::identity(); 2];
        let reference = |_: &Pose| vec![1.0, 2.0, 0.0, 3.0];
        let est = |_: &Pose| vec![1.01, 2.01, 0.0, 3.01];
        let l1 = depth_l1_images(&poses, est, reference);
        assert!((l1 - 1.0).abs() < 1e-9, "{l1}");
    }

    #[test]
    fn invalid_pixels_are_excluded() {
        let poses = vec![Pose::identity()];
        let reference = |_: &Pose| vec![0.0, 2.0];
        let est = |_: &Pose| vec![5.0, 0.0];
        // first: reference invalid; second: estimate invalid -> no valid pixels
        assert_eq!(depth_l1_images(&poses, est, reference), 0.0);
    }

    #[test]
    fn matches_direct_recomputation() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 64;
        let refs: Vec<DepthImage> = (0..3)
            .map(|_| (0..n).map(|_| rng.random_range(0.0..4.0)).collect())
            .collect();
        let ests: Vec<DepthImage> = refs
            .iter()
            .map(|r| {
                r.iter()
                    .map(|v| (v + rng.random_range(-0.1..0.1)).max(0.0))
                    .collect()
            })
            .collect();

        let poses = vec![Pose::identity(); 3];
        let counter = std::sync::atomic::AtomicUsize::new(0);
        let _ = &counter;
        let idx = |p: &Pose| -> usize {
            // identify pose by address offset in the slice
            (p as *const Pose as usize - poses.as_ptr() as usize) / std::mem::size_of::<Pose>()
        };
        let l1 = depth_l1_images(&poses, |p| ests[idx(p)].clone(), |p| refs[idx(p)].clone());

        let mut sum = 0.0;
        let mut count = 0;
        for (e_img, r_img) in ests.iter().zip(&refs) {
            for (e, r) in e_img.iter().zip(r_img) {
                if *r > 0.0 && *e > 0.0 {
                    sum += (e - r).abs();
                    count += 1;
                }
            }
        }
        let want = sum / count as f64 * 100.0;
        assert!((l1 - want).abs() < 1e-9);
    }
}
