//! Adaptive-moment optimizer over the map's parameter blocks.

use crate::decoder::{MlpGrads, MlpParams};
use crate::field::{FactorizedField, FieldGrads};
use crate::map::{MapGrads, SceneMap};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// First/second moment accumulators for one flat parameter block.
#[derive(Debug, Clone, Default)]
pub struct BlockState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl BlockState {
    fn ensure(&mut self, len: usize) {
        if self.m.len() != len {
            self.m = vec![0.0; len];
            self.v = vec![0.0; len];
            self.step = 0;
        }
    }

    /// One Adam update of `values` given `grads`.
    pub fn update(&mut self, values: &mut [f64], grads: &[f64], lr: f64) {
        debug_assert_eq!(values.len(), grads.len());
        self.ensure(values.len());
        self.step += 1;
        let bc1 = 1.0 - BETA1.powi(self.step as i32);
        let bc2 = 1.0 - BETA2.powi(self.step as i32);
        for i in 0..values.len() {
            let g = grads[i];
            self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * g;
            self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * g * g;
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            values[i] -= lr * mhat / (vhat.sqrt() + EPS);
        }
    }
}

/// Per-factor states for one field.
#[derive(Debug, Clone, Default)]
pub struct FieldState {
    factors: Vec<BlockState>,
}

impl FieldState {
    fn update(&mut self, field: &mut FactorizedField, grads: &FieldGrads, lr: f64) {
        if self.factors.len() != grads.factor_count() {
            self.factors = vec![BlockState::default(); grads.factor_count()];
        }
        let mut idx = 0;
        field.for_each_factor_mut(|values| {
            self.factors[idx].update(values, grads.factor(idx), lr);
            idx += 1;
        });
    }
}

#[derive(Debug, Clone, Default)]
pub struct MlpState {
    w1: BlockState,
    b1: BlockState,
    w2: BlockState,
    b2: BlockState,
}

impl MlpState {
    fn update(&mut self, p: &mut MlpParams, g: &MlpGrads, lr: f64) {
        self.w1.update(&mut p.w1, &g.w1, lr);
        self.b1.update(&mut p.b1, &g.b1, lr);
        self.w2.update(&mut p.w2, &g.w2, lr);
        self.b2.update(&mut p.b2, &g.b2, lr);
    }
}

/// Learning rates per parameter block.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct OptimConfig {
    pub field_lr: f64,
    pub decoder_lr: f64,
    pub beta_lr: f64,
    pub tracking_pose_lr: f64,
    pub mapping_pose_lr: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            field_lr: 1e-2,
            decoder_lr: 1e-3,
            beta_lr: 1e-3,
            tracking_pose_lr: 1e-3,
            mapping_pose_lr: 1e-4,
        }
    }
}

/// Optimizer state over a whole map (fields, decoders, sharpness).
#[derive(Debug, Clone, Default)]
pub struct MapOptimState {
    geom_coarse: FieldState,
    geom_fine: FieldState,
    app_coarse: FieldState,
    app_fine: FieldState,
    geo_decoder: MlpState,
    app_decoder: MlpState,
    log_beta: BlockState,
}

impl MapOptimState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, map: &mut SceneMap, grads: &MapGrads, cfg: &OptimConfig) {
        self.geom_coarse
            .update(&mut map.pyramid.geom_coarse, &grads.pyramid.geom_coarse, cfg.field_lr);
        self.geom_fine
            .update(&mut map.pyramid.geom_fine, &grads.pyramid.geom_fine, cfg.field_lr);
        self.app_coarse
            .update(&mut map.pyramid.app_coarse, &grads.pyramid.app_coarse, cfg.field_lr);
        self.app_fine
            .update(&mut map.pyramid.app_fine, &grads.pyramid.app_fine, cfg.field_lr);
        self.geo_decoder
            .update(&mut map.geo_decoder, &grads.geo_decoder, cfg.decoder_lr);
        self.app_decoder
            .update(&mut map.app_decoder, &grads.app_decoder, cfg.decoder_lr);
        let mut lb = [map.beta.log_beta];
        self.log_beta.update(&mut lb, &[grads.log_beta], cfg.beta_lr);
        map.beta.log_beta = lb[0];
    }
}

/// Optimizer state for a set of pose increments.
#[derive(Debug, Clone, Default)]
pub struct PoseOptimState {
    blocks: Vec<BlockState>,
}

impl PoseOptimState {
    pub fn new(slots: usize) -> Self {
        Self {
            blocks: vec![BlockState::default(); slots],
        }
    }

    /// Adam-step each pose's tangent increment given its gradient; returns the
    /// increments to apply.
    pub fn step(&mut self, grads: &[[f64; 6]], lr: f64) -> Vec<[f64; 6]> {
        debug_assert_eq!(grads.len(), self.blocks.len());
        grads
            .iter()
            .zip(&mut self.blocks)
            .map(|(g, state)| {
                let mut delta = [0.0; 6];
                state.update(&mut delta, g, lr);
                delta
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_descends_a_quadratic() {
        let mut x = vec![5.0, -3.0];
        let mut state = BlockState::default();
        for _ in 0..500 {
            let g: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
            state.update(&mut x, &g, 0.05);
        }
        assert!(x.iter().all(|v| v.abs() < 1e-2), "{x:?}");
    }

    #[test]
    fn zero_grad_moves_nothing_on_fresh_state() {
        let mut x = vec![1.0, 2.0];
        let mut state = BlockState::default();
        state.update(&mut x, &[0.0, 0.0], 0.1);
        assert_eq!(x, vec![1.0, 2.0]);
    }
}
