//! Layout of a run directory and dataset loading shared by the subcommands.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use weft_core::config::{DatasetFormat, RunConfig};
use weft_core::io::{generic, tum, Frame};
use weft_core::sim::AnalyticScene;

pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn new(root: PathBuf) -> Self {
        Self { root }
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.toml")
    }
    pub fn trajectory(&self) -> PathBuf {
        self.root.join("trajectory.txt")
    }
    pub fn timing(&self) -> PathBuf {
        self.root.join("timing.csv")
    }
    pub fn checkpoint(&self) -> PathBuf {
        self.root.join("checkpoint.bin")
    }
    pub fn losses(&self) -> PathBuf {
        self.root.join("losses.csv")
    }
    pub fn report_json(&self) -> PathBuf {
        self.root.join("report.json")
    }
    pub fn report_text(&self) -> PathBuf {
        self.root.join("report.txt")
    }

    pub fn load_config(&self) -> Result<RunConfig> {
        RunConfig::load(&self.config())
            .with_context(|| format!("reading {}", self.config().display()))
    }
}

/// Load frames according to the config, with optional extra depth noise.
pub fn load_dataset(cfg: &RunConfig, noise_sigma: f64) -> Result<Vec<Frame>> {
    let mut frames = match cfg.dataset.format {
        DatasetFormat::Generic => generic::load_generic(&cfg.dataset.path)
            .with_context(|| format!("loading {}", cfg.dataset.path.display()))?,
        DatasetFormat::Tum => {
            let (frames, report) = tum::load_tum(&cfg.dataset.path, cfg.dataset.max_dt, None)
                .with_context(|| format!("loading {}", cfg.dataset.path.display()))?;
            log::info!(
                "tum association: {} matched, {} rgb dropped, {} depth dropped, {} with gt",
                report.matched,
                report.dropped_rgb,
                report.dropped_depth,
                report.with_groundtruth
            );
            frames
        }
    };
    if frames.is_empty() {
        bail!("dataset {} is empty", cfg.dataset.path.display());
    }
    if noise_sigma > 0.0 {
        frames = frames
            .iter()
            .enumerate()
            .map(|(i, f)| weft_core::sim::add_depth_noise(f, noise_sigma, cfg.seed ^ i as u64))
            .collect();
    }
    Ok(frames)
}

/// The analytic scene description written next to synthetic datasets; used by
/// evaluation to render reference depth and the ground-truth mesh.
pub fn load_scene_file(dataset_dir: &Path) -> Option<AnalyticScene> {
    let path = dataset_dir.join("scene.toml");
    let text = std::fs::read_to_string(path).ok()?;
    toml::from_str(&text).ok()
}

pub fn gt_trajectory(frames: &[Frame]) -> Vec<(f64, weft_core::slam::Pose)> {
    frames
        .iter()
        .filter_map(|f| f.gt_pose.map(|p| (f.timestamp, p)))
        .collect()
}
