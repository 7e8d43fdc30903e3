use std::time::Instant;

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldError, SceneBounds};
use crate::io::Frame;
use crate::loss::LossConfig;
use crate::map::{MapConfig, SceneMap};
use crate::render::pipeline::mix_seed;
use crate::render::{RenderError, SampleConfig};

use super::adam::{MapOptimState, OptimConfig};
use super::keyframe::KeyframeStore;
use super::mapper::{map_step, MappingConfig};
use super::pose::{extrapolate, Pose};
use super::tracker::{track_frame, TrackingConfig};

#[derive(Debug, Error)]
pub enum SlamError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("non-finite loss during {stage} at iteration {iteration}")]
    NonFiniteLoss {
        stage: &'static str,
        iteration: usize,
    },
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Everything the SLAM loop needs besides the map sizing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlamConfig {
    pub bounds: SceneBounds,
    pub tracking: TrackingConfig,
    pub mapping: MappingConfig,
    pub loss: LossConfig,
    pub optim: OptimConfig,
    pub sample: SampleConfig,
    pub seed: u64,
}

/// Wall-clock per-frame costs in milliseconds.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FrameTiming {
    pub frame_id: usize,
    pub track_ms: f64,
    pub map_ms: f64,
    pub total_ms: f64,
}

pub struct SlamOutput {
    /// One (timestamp, camera-to-world pose) per input frame, in order.
    pub trajectory: Vec<(f64, Pose)>,
    pub map: SceneMap,
    pub timings: Vec<FrameTiming>,
    /// Mapping losses: (frame id, per-iteration totals).
    pub mapping_losses: Vec<(usize, Vec<f64>)>,
    pub keyframes: Vec<usize>,
}

/// Run tracking and mapping over an ordered frame sequence.
///
/// Frame 0 is pinned to its ground-truth pose when available (identity
/// otherwise), inserted as the first keyframe, and the map is bootstrapped on
/// it. Every `mapping.every` frames a keyframe is inserted and a joint map
/// step runs.
pub fn run_slam(
    frames: &[Frame],
    map_cfg: &MapConfig,
    cfg: &SlamConfig,
) -> Result<SlamOutput, SlamError> {
    if frames.is_empty() {
        return Err(SlamError::EmptyDataset);
    }
    let mut init_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 0x1417));
    let mut map = SceneMap::init(cfg.bounds, map_cfg, &mut init_rng)?;
    let mut opt_state = MapOptimState::new();
    let mut keyframes = KeyframeStore::new();

    let mut trajectory: Vec<(f64, Pose)> = Vec::with_capacity(frames.len());
    let mut timings = Vec::with_capacity(frames.len());
    let mut mapping_losses = Vec::new();

    // frame 0: fixed pose, bootstrap mapping
    let pose0 = frames[0].gt_pose.unwrap_or_default();
    keyframes.insert(0, pose0);
    let t0 = Instant::now();
    let report = map_step(
        &mut map,
        &mut opt_state,
        &mut keyframes,
        frames,
        cfg.mapping.first_frame_iterations,
        &cfg.loss,
        &cfg.optim,
        &cfg.mapping,
        &cfg.sample,
        mix_seed(cfg.seed, 0xF0),
    )?;
    let map_ms = t0.elapsed().as_secs_f64() * 1e3;
    info!(
        "bootstrap: {} iterations, loss {:.5} -> {:.5}",
        report.losses.len(),
        report.losses.first().copied().unwrap_or(0.0),
        report.losses.last().copied().unwrap_or(0.0)
    );
    mapping_losses.push((0, report.losses));
    trajectory.push((frames[0].timestamp, pose0));
    timings.push(FrameTiming {
        frame_id: 0,
        track_ms: 0.0,
        map_ms,
        total_ms: map_ms,
    });

    for (i, frame) in frames.iter().enumerate().skip(1) {
        let init = if i >= 2 {
            extrapolate(&trajectory[i - 2].1, &trajectory[i - 1].1)
        } else {
            trajectory[i - 1].1
        };

        let t_track = Instant::now();
        let (pose, track_report) = track_frame(
            &map,
            frame,
            init,
            &cfg.loss,
            &cfg.optim,
            &cfg.tracking,
            &cfg.sample,
            mix_seed(cfg.seed, 0x7_0000 + i as u64),
        )?;
        let track_ms = t_track.elapsed().as_secs_f64() * 1e3;
        trajectory.push((frame.timestamp, pose));

        let mut map_ms = 0.0;
        if i % cfg.mapping.every == 0 {
            keyframes.insert(i, pose);
            let t_map = Instant::now();
            let report = map_step(
                &mut map,
                &mut opt_state,
                &mut keyframes,
                frames,
                cfg.mapping.iterations,
                &cfg.loss,
                &cfg.optim,
                &cfg.mapping,
                &cfg.sample,
                mix_seed(cfg.seed, 0x9_0000 + i as u64),
            )?;
            map_ms = t_map.elapsed().as_secs_f64() * 1e3;
            // mapping may refine the keyframe pose inserted just above
            trajectory[i].1 = keyframes.last().unwrap().pose;
            mapping_losses.push((i, report.losses));
        }

        info!(
            "frame {i}: track {:.1} ms (loss {:.5} -> {:.5}), map {:.1} ms",
            track_ms, track_report.initial_loss, track_report.final_loss, map_ms
        );
        timings.push(FrameTiming {
            frame_id: i,
            track_ms,
            map_ms,
            total_ms: track_ms + map_ms,
        });
    }

    Ok(SlamOutput {
        trajectory,
        map,
        timings,
        mapping_losses,
        keyframes: keyframes.iter().map(|k| k.frame_index).collect(),
    })
}
