use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::io::Frame;
use crate::loss::LossConfig;
use crate::map::SceneMap;
use crate::render::pipeline::{evaluate_batch, mix_seed, GradMode, RaySpec};
use crate::render::SampleConfig;

use super::adam::{OptimConfig, PoseOptimState};
use super::pose::Pose;
use super::runner::SlamError;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrackingConfig {
    pub iterations: usize,
    pub rays_per_iteration: usize,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        Self {
            iterations: 20,
            rays_per_iteration: 1500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrackingReport {
    pub initial_loss: f64,
    pub final_loss: f64,
    pub iterations: usize,
    pub color_only: bool,
}

/// Draw random supervised pixel rays from a frame.
pub(crate) fn sample_pixel_rays<R: Rng>(
    frame: &Frame,
    pose_index: usize,
    count: usize,
    rng: &mut R,
) -> Vec<RaySpec> {
    let w = frame.width();
    let h = frame.height();
    (0..count)
        .map(|_| {
            let u = rng.random_range(0..w);
            let v = rng.random_range(0..h);
            RaySpec {
                pose_index,
                dir_cam: frame.intrinsics.ray_direction(u as f64, v as f64),
                color: frame.color_at(u, v),
                depth: frame.measured_range(u, v),
            }
        })
        .collect()
}

/// Optimize the camera pose of one frame against a frozen map.
///
/// The map is untouched; only a 6-DoF tangent increment is optimized, re-
/// anchored at the current pose estimate every iteration with Adam moments
/// carried in the tangent space.
pub fn track_frame(
    map: &SceneMap,
    frame: &Frame,
    init: Pose,
    loss_cfg: &LossConfig,
    optim_cfg: &OptimConfig,
    cfg: &TrackingConfig,
    sample_cfg: &SampleConfig,
    seed: u64,
) -> Result<(Pose, TrackingReport), SlamError> {
    // A frame without any depth cannot feed the depth/SDF terms.
    let mut loss_cfg = *loss_cfg;
    let color_only = frame.valid_depth_count() == 0;
    if color_only && loss_cfg.depth_weight > 0.0 {
        warn!(
            "frame at t={:.3} has no valid depth; tracking with color only",
            frame.timestamp
        );
        loss_cfg.depth_weight = 0.0;
        loss_cfg.freespace_weight = 0.0;
        loss_cfg.sdf_center_weight = 0.0;
        loss_cfg.sdf_tail_weight = 0.0;
    }

    let mut pose = init;
    let mut opt = PoseOptimState::new(1);
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xA11CE));
    let mut initial_loss = 0.0;
    let mut final_loss = 0.0;
    for it in 0..cfg.iterations {
        let rays = sample_pixel_rays(frame, 0, cfg.rays_per_iteration, &mut rng);
        let (eval, grads) = evaluate_batch(
            map,
            std::slice::from_ref(&pose),
            &rays,
            &loss_cfg,
            sample_cfg,
            mix_seed(seed, it as u64),
            GradMode::PoseOnly,
        )?;
        if !eval.total.is_finite() {
            return Err(SlamError::NonFiniteLoss {
                stage: "tracking",
                iteration: it,
            });
        }
        if it == 0 {
            initial_loss = eval.total;
        }
        final_loss = eval.total;
        let grads = grads.expect("gradients requested");
        let deltas = opt.step(&grads.poses, optim_cfg.tracking_pose_lr);
        pose = pose.apply_delta(&deltas[0]);
    }

    Ok((
        pose,
        TrackingReport {
            initial_loss,
            final_loss,
            iterations: cfg.iterations,
            color_only,
        },
    ))
}
