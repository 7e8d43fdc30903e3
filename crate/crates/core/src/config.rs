//! Run configuration: TOML file with flag overrides, echoed into every run
//! directory for provenance.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldError, SceneBounds, VariantKind};
use crate::loss::LossConfig;
use crate::map::MapConfig;
use crate::render::SampleConfig;
use crate::slam::{MappingConfig, OptimConfig, SlamConfig, TrackingConfig};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Bounds(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Generic,
    Tum,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    pub path: PathBuf,
    pub format: DatasetFormat,
    /// Association window for TUM sequences, seconds.
    pub max_dt: f64,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            path: PathBuf::from("data/synth"),
            format: DatasetFormat::Generic,
            max_dt: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsSection {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Default for BoundsSection {
    fn default() -> Self {
        // default synthetic room with margin
        Self {
            min: [-3.2, -3.2, -0.2],
            max: [3.2, 3.2, 3.2],
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapSection {
    pub geometry: VariantKind,
    pub appearance: VariantKind,
    pub geometry_rank: usize,
    pub appearance_rank: usize,
    pub channels: usize,
    pub coarse_cell: f64,
    pub fine_geometry_cell: f64,
    pub fine_appearance_cell: f64,
}

impl Default for MapSection {
    fn default() -> Self {
        Self {
            geometry: VariantKind::Cp,
            appearance: VariantKind::SixAxis,
            geometry_rank: 2,
            appearance_rank: 16,
            channels: 32,
            coarse_cell: 0.24,
            fine_geometry_cell: 0.06,
            fine_appearance_cell: 0.03,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSection {
    /// Stratified samples per ray; `None` resolves per dataset format (32 for
    /// generic/synthetic, 48 for TUM).
    pub stratified: Option<usize>,
    pub importance: usize,
}

impl Default for SamplingSection {
    fn default() -> Self {
        Self {
            stratified: None,
            importance: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackingSection {
    pub iterations: usize,
    pub rays: usize,
}

impl Default for TrackingSection {
    fn default() -> Self {
        Self {
            iterations: 20,
            rays: 1200,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MappingSection {
    pub every: usize,
    pub iterations: usize,
    pub rays: usize,
    pub window: usize,
    pub first_frame_iterations: usize,
}

impl Default for MappingSection {
    fn default() -> Self {
        Self {
            every: 4,
            iterations: 15,
            rays: 2400,
            window: 4,
            first_frame_iterations: 150,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    /// Marching-cubes cell for mesh export and metrics, meters.
    pub mesh_cell: f64,
    /// Camera poses sampled for depth L1.
    pub depth_poses: usize,
    /// Downscale factor for depth-map rendering during evaluation.
    pub depth_render_scale: u32,
    /// Completion-ratio distance threshold, meters.
    pub completion_threshold: f64,
    pub mesh_samples: usize,
    pub memory_budget_mb: usize,
    /// Far limit for frustum culling and depth rendering, meters.
    pub max_range: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            mesh_cell: 0.02,
            depth_poses: 100,
            depth_render_scale: 4,
            completion_threshold: 0.05,
            mesh_samples: 200_000,
            memory_budget_mb: 768,
            max_range: 12.0,
        }
    }
}

/// The complete run configuration.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; 0 means all logical cores (or `WEFT_THREADS`).
    pub threads: usize,
    pub output: Option<PathBuf>,
    pub dataset: DatasetSection,
    pub bounds: BoundsSection,
    pub map: MapSection,
    pub sampling: SamplingSection,
    pub loss: LossConfig,
    pub optimizer: OptimConfig,
    pub tracking: TrackingSection,
    pub mapping: MappingSection,
    pub eval: EvalSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            source: e,
        })?;
        Ok(toml::from_str(&text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn scene_bounds(&self) -> Result<SceneBounds, ConfigError> {
        Ok(SceneBounds::new(
            Vector3::from(self.bounds.min),
            Vector3::from(self.bounds.max),
        )?)
    }

    pub fn resolved_stratified(&self) -> usize {
        self.sampling.stratified.unwrap_or(match self.dataset.format {
            DatasetFormat::Generic => 32,
            DatasetFormat::Tum => 48,
        })
    }

    pub fn map_config(&self) -> MapConfig {
        MapConfig {
            geometry: self.map.geometry,
            appearance: self.map.appearance,
            geometry_rank: self.map.geometry_rank,
            appearance_rank: self.map.appearance_rank,
            channels: self.map.channels,
            coarse_cell: self.map.coarse_cell,
            fine_geometry_cell: self.map.fine_geometry_cell,
            fine_appearance_cell: self.map.fine_appearance_cell,
            ..MapConfig::default()
        }
    }

    pub fn sample_config(&self) -> SampleConfig {
        SampleConfig {
            stratified: self.resolved_stratified(),
            importance: self.sampling.importance,
            truncation: self.loss.truncation,
            deterministic: false,
        }
    }

    pub fn slam_config(&self) -> Result<SlamConfig, ConfigError> {
        Ok(SlamConfig {
            bounds: self.scene_bounds()?,
            tracking: TrackingConfig {
                iterations: self.tracking.iterations,
                rays_per_iteration: self.tracking.rays,
            },
            mapping: MappingConfig {
                every: self.mapping.every,
                iterations: self.mapping.iterations,
                rays_per_iteration: self.mapping.rays,
                window: self.mapping.window,
                first_frame_iterations: self.mapping.first_frame_iterations,
            },
            loss: self.loss,
            optim: self.optimizer,
            sample: self.sample_config(),
            seed: self.seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_configuration() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.map.geometry_rank, 2);
        assert_eq!(cfg.map.appearance_rank, 16);
        assert_eq!(cfg.map.channels, 32);
        assert_eq!(cfg.map.coarse_cell, 0.24);
        assert_eq!(cfg.map.fine_geometry_cell, 0.06);
        assert_eq!(cfg.map.fine_appearance_cell, 0.03);
        assert_eq!(cfg.resolved_stratified(), 32);
        let mut tum = cfg.clone();
        tum.dataset.format = DatasetFormat::Tum;
        assert_eq!(tum.resolved_stratified(), 48);
    }

    #[test]
    fn toml_roundtrip() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.map.channels, cfg.map.channels);
        assert_eq!(back.to_toml(), text);
    }

    #[test]
    fn unknown_keys_are_named_in_the_error() {
        let err = toml::from_str::<RunConfig>("[map]\ngeometry = \"cp\"\nnot_a_key = 3\n")
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("not_a_key"), "{msg}");
    }

    #[test]
    fn partial_files_fill_with_defaults() {
        let cfg: RunConfig = toml::from_str("seed = 9\n[map]\ngeometry = \"triplane\"\n").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.map.geometry, VariantKind::TriPlane);
        assert_eq!(cfg.map.appearance, VariantKind::SixAxis);
    }
}
