//! The full optimizable map state: factorized field pyramid, the two decoder
//! heads, and the density sharpness.

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decoder::{BetaParam, MlpGrads, MlpParams, OutputActivation};
use crate::field::{
    FactorizedField, FieldError, PyramidGrads, SceneBounds, ScenePyramid, VariantKind,
};

/// Geometry/appearance representation choice and sizing.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MapConfig {
    pub geometry: VariantKind,
    pub appearance: VariantKind,
    pub geometry_rank: usize,
    pub appearance_rank: usize,
    pub channels: usize,
    /// Metric knot spacing for the coarse level (both branches).
    pub coarse_cell: f64,
    pub fine_geometry_cell: f64,
    pub fine_appearance_cell: f64,
    pub init_amplitude: f64,
    /// Output bias of the geometry head; positive so empty space decodes to a
    /// positive (free) normalized SDF before any training.
    pub sdf_bias: f64,
    pub hidden_width: usize,
}

impl Default for MapConfig {
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
            init_amplitude: 1e-2,
            sdf_bias: 0.7,
            hidden_width: 16,
        }
    }
}

impl MapConfig {
    fn rank_for(&self, kind: VariantKind) -> usize {
        match kind {
            VariantKind::Cp => self.geometry_rank,
            VariantKind::SixAxis => self.appearance_rank,
            VariantKind::TriPlane => 1,
        }
    }
}

/// Everything the optimizer touches.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneMap {
    pub pyramid: ScenePyramid,
    pub geo_decoder: MlpParams,
    pub app_decoder: MlpParams,
    pub beta: BetaParam,
}

impl SceneMap {
    pub fn init<R: Rng>(
        bounds: SceneBounds,
        cfg: &MapConfig,
        rng: &mut R,
    ) -> Result<Self, FieldError> {
        let mk = |kind, cell: f64, rank, rng: &mut R| {
            FactorizedField::init(
                kind,
                bounds.axis_resolutions(cell),
                rank,
                cfg.channels,
                cfg.init_amplitude,
                rng,
            )
        };
        let geom_coarse = mk(cfg.geometry, cfg.coarse_cell, cfg.rank_for(cfg.geometry), rng)?;
        let geom_fine = mk(
            cfg.geometry,
            cfg.fine_geometry_cell,
            cfg.rank_for(cfg.geometry),
            rng,
        )?;
        let app_coarse = mk(
            cfg.appearance,
            cfg.coarse_cell,
            cfg.rank_for(cfg.appearance),
            rng,
        )?;
        let app_fine = mk(
            cfg.appearance,
            cfg.fine_appearance_cell,
            cfg.rank_for(cfg.appearance),
            rng,
        )?;
        let width = 2 * cfg.channels;
        Ok(Self {
            pyramid: ScenePyramid {
                geom_coarse,
                geom_fine,
                app_coarse,
                app_fine,
                bounds,
            },
            geo_decoder: MlpParams::init(
                width,
                cfg.hidden_width,
                1,
                OutputActivation::Tanh,
                cfg.sdf_bias,
                rng,
            ),
            app_decoder: MlpParams::init(
                width,
                cfg.hidden_width,
                3,
                OutputActivation::Logistic,
                0.0,
                rng,
            ),
            beta: BetaParam::default(),
        })
    }

    pub fn bounds(&self) -> &SceneBounds {
        &self.pyramid.bounds
    }

    /// Stored parameter counts (geometry fields, appearance fields, decoders
    /// + sharpness).
    pub fn param_counts(&self) -> MapParamCounts {
        let (geometry, appearance) = self.pyramid.param_counts();
        MapParamCounts {
            geometry,
            appearance,
            decoders: self.geo_decoder.param_count() + self.app_decoder.param_count() + 1,
        }
    }

    /// Decode the normalized TSDF at a world point. Convenience path for mesh
    /// extraction and tests; the renderer uses fused buffers instead.
    pub fn sdf_at(&self, p: Vector3<f64>) -> f64 {
        let f = self.pyramid.query(p, crate::field::Branch::Geometry);
        crate::decoder::decode_sdf(&self.geo_decoder, &f).expect("width matches by construction")
    }

    pub fn color_at(&self, p: Vector3<f64>) -> [f64; 3] {
        let f = self.pyramid.query(p, crate::field::Branch::Appearance);
        crate::decoder::decode_color(&self.app_decoder, &f)
            .expect("width matches by construction")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapParamCounts {
    pub geometry: usize,
    pub appearance: usize,
    pub decoders: usize,
}

impl MapParamCounts {
    pub fn fields_total(&self) -> usize {
        self.geometry + self.appearance
    }
}

/// Gradients for every optimizable map parameter.
#[derive(Debug, Clone)]
pub struct MapGrads {
    pub pyramid: PyramidGrads,
    pub geo_decoder: MlpGrads,
    pub app_decoder: MlpGrads,
    pub log_beta: f64,
}

impl MapGrads {
    pub fn zeros_like(map: &SceneMap) -> Self {
        Self {
            pyramid: PyramidGrads::zeros_like(&map.pyramid),
            geo_decoder: MlpGrads::zeros_like(&map.geo_decoder),
            app_decoder: MlpGrads::zeros_like(&map.app_decoder),
            log_beta: 0.0,
        }
    }

    pub fn clear(&mut self) {
        self.pyramid.clear();
        self.geo_decoder.clear();
        self.app_decoder.clear();
        self.log_beta = 0.0;
    }

    pub fn accumulate(&mut self, other: &MapGrads) {
        self.pyramid.accumulate(&other.pyramid);
        self.geo_decoder.accumulate(&other.geo_decoder);
        self.app_decoder.accumulate(&other.app_decoder);
        self.log_beta += other.log_beta;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn desk_bounds() -> SceneBounds {
        SceneBounds::new(Vector3::new(0.0, 0.0, 0.0), Vector3::new(8.0, 8.0, 3.0)).unwrap()
    }

    #[test]
    fn default_config_replicates_reference_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let map = SceneMap::init(desk_bounds(), &MapConfig::default(), &mut rng).unwrap();
        let counts = map.param_counts();
        // CP geometry: 2 ranks x 32 ch over coarse (35+35+14) + fine (135+135+51)
        assert_eq!(counts.geometry, 2 * 32 * (84 + 321));
        // Six-axis appearance doubles the axis sum
        assert_eq!(counts.appearance, 2 * 16 * 32 * (84 + 637));
        assert_eq!(map.pyramid.feature_width(crate::field::Branch::Geometry), 64);
    }

    #[test]
    fn fresh_map_decodes_near_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let map = SceneMap::init(desk_bounds(), &MapConfig::default(), &mut rng).unwrap();
        let s = map.sdf_at(Vector3::new(4.0, 4.0, 1.5));
        assert!(
            (s - 0.7f64.tanh()).abs() < 0.1,
            "untrained sdf {s} should sit near the bias"
        );
        let c = map.color_at(Vector3::new(4.0, 4.0, 1.5));
        for ch in c {
            assert!(ch > 0.2 && ch < 0.8);
        }
    }
}
