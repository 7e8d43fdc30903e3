use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::io::Frame;
use crate::loss::LossConfig;
use crate::map::SceneMap;
use crate::render::pipeline::{evaluate_batch, mix_seed, GradMode};
use crate::render::SampleConfig;

use super::adam::{MapOptimState, OptimConfig, PoseOptimState};
use super::keyframe::KeyframeStore;
use super::runner::SlamError;
use super::tracker::sample_pixel_rays;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MappingConfig {
    /// Run a map step every this many frames.
    pub every: usize,
    pub iterations: usize,
    pub rays_per_iteration: usize,
    /// Number of additional keyframes sampled per step.
    pub window: usize,
    /// Iterations for the bootstrap step on the first frame.
    pub first_frame_iterations: usize,
}

impl Default for MappingConfig {
    fn default() -> Self {
        Self {
            every: 4,
            iterations: 15,
            rays_per_iteration: 4000,
            window: 4,
            first_frame_iterations: 150,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MapStepReport {
    /// Total loss per iteration, in order.
    pub losses: Vec<f64>,
    /// Keyframe store indices that were optimized.
    pub optimized_keyframes: Vec<usize>,
}

/// One joint optimization of fields, decoders, sharpness, and the selected
/// keyframe poses. The newest keyframe always participates; `window` others
/// are drawn at random. The first keyframe of the run is the gauge anchor and
/// never moves.
#[allow(clippy::too_many_arguments)]
pub fn map_step(
    map: &mut SceneMap,
    opt_state: &mut MapOptimState,
    keyframes: &mut KeyframeStore,
    frames: &[Frame],
    iterations: usize,
    loss_cfg: &LossConfig,
    optim_cfg: &OptimConfig,
    cfg: &MappingConfig,
    sample_cfg: &SampleConfig,
    seed: u64,
) -> Result<MapStepReport, SlamError> {
    assert!(!keyframes.is_empty(), "map_step requires a keyframe");
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x5E1EC7));

    // Selection: newest keyframe plus up to `window` random older ones.
    let newest = keyframes.len() - 1;
    let mut selected: Vec<usize> = vec![newest];
    if keyframes.len() > 1 {
        let mut others: Vec<usize> = (0..newest).collect();
        others.shuffle(&mut rng);
        selected.extend(others.into_iter().take(cfg.window));
        selected.sort_unstable();
    }

    let mut poses: Vec<_> = selected.iter().map(|&k| keyframes.get(k).pose).collect();
    let mut pose_opt = PoseOptimState::new(selected.len());
    let rays_per_frame = (cfg.rays_per_iteration / selected.len()).max(1);

    let mut losses = Vec::with_capacity(iterations);
    for it in 0..iterations {
        let mut rays = Vec::with_capacity(rays_per_frame * selected.len());
        for (slot, &k) in selected.iter().enumerate() {
            let frame = &frames[keyframes.get(k).frame_index];
            rays.extend(sample_pixel_rays(frame, slot, rays_per_frame, &mut rng));
        }
        let (eval, grads) = evaluate_batch(
            map,
            &poses,
            &rays,
            loss_cfg,
            sample_cfg,
            mix_seed(seed, 0xB000 + it as u64),
            GradMode::Full,
        )?;
        if !eval.total.is_finite() {
            return Err(SlamError::NonFiniteLoss {
                stage: "mapping",
                iteration: it,
            });
        }
        losses.push(eval.total);

        let mut grads = grads.expect("gradients requested");
        // Gauge anchor: the run's first keyframe stays pinned.
        for (slot, &k) in selected.iter().enumerate() {
            if keyframes.get(k).frame_index == 0 {
                grads.poses[slot] = [0.0; 6];
            }
        }
        opt_state.update(map, grads.map.as_ref().expect("full gradients"), optim_cfg);
        let deltas = pose_opt.step(&grads.poses, optim_cfg.mapping_pose_lr);
        for (slot, delta) in deltas.iter().enumerate() {
            poses[slot] = poses[slot].apply_delta(delta);
        }
    }

    for (slot, &k) in selected.iter().enumerate() {
        *keyframes.pose_mut(k) = poses[slot];
    }

    Ok(MapStepReport {
        losses,
        optimized_keyframes: selected,
    })
}
