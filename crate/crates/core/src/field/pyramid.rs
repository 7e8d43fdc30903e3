use nalgebra::Vector3;

use super::bounds::SceneBounds;
use super::grad::FieldGrads;
use super::variant::{FactorizedField, FieldScratch};

/// Which feature branch of the map to address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Geometry,
    Appearance,
}

/// The full factorized map state: a coarse and fine field per branch plus the
/// scene bounds used to normalize queries. Queried features are the
/// concatenation `[coarse ; fine]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenePyramid {
    pub geom_coarse: FactorizedField,
    pub geom_fine: FactorizedField,
    pub app_coarse: FactorizedField,
    pub app_fine: FactorizedField,
    pub bounds: SceneBounds,
}

/// Gradients for all four fields of a pyramid.
#[derive(Debug, Clone, PartialEq)]
pub struct PyramidGrads {
    pub geom_coarse: FieldGrads,
    pub geom_fine: FieldGrads,
    pub app_coarse: FieldGrads,
    pub app_fine: FieldGrads,
}

impl PyramidGrads {
    pub fn zeros_like(pyr: &ScenePyramid) -> Self {
        Self {
            geom_coarse: FieldGrads::zeros_like(&pyr.geom_coarse),
            geom_fine: FieldGrads::zeros_like(&pyr.geom_fine),
            app_coarse: FieldGrads::zeros_like(&pyr.app_coarse),
            app_fine: FieldGrads::zeros_like(&pyr.app_fine),
        }
    }

    pub fn clear(&mut self) {
        self.geom_coarse.clear();
        self.geom_fine.clear();
        self.app_coarse.clear();
        self.app_fine.clear();
    }

    pub fn accumulate(&mut self, other: &PyramidGrads) {
        self.geom_coarse.accumulate(&other.geom_coarse);
        self.geom_fine.accumulate(&other.geom_fine);
        self.app_coarse.accumulate(&other.app_coarse);
        self.app_fine.accumulate(&other.app_fine);
    }
}

#[derive(Debug, Clone, Default)]
pub struct PyramidScratch {
    pub field: FieldScratch,
}

impl ScenePyramid {
    fn fields(&self, branch: Branch) -> (&FactorizedField, &FactorizedField) {
        match branch {
            Branch::Geometry => (&self.geom_coarse, &self.geom_fine),
            Branch::Appearance => (&self.app_coarse, &self.app_fine),
        }
    }

    /// Concatenated feature width of a branch.
    pub fn feature_width(&self, branch: Branch) -> usize {
        let (c, f) = self.fields(branch);
        c.channels() + f.channels()
    }

    /// Query one branch at a world point; writes `[coarse ; fine]` into `out`.
    pub fn query_into(
        &self,
        p_world: Vector3<f64>,
        branch: Branch,
        out: &mut [f64],
        scratch: &mut PyramidScratch,
    ) {
        let (coarse, fine) = self.fields(branch);
        let cc = coarse.channels();
        debug_assert_eq!(out.len(), cc + fine.channels());
        out.fill(0.0);
        let u = self.bounds.normalize(p_world);
        coarse.query_accumulate(u, &mut out[..cc], &mut scratch.field);
        fine.query_accumulate(u, &mut out[cc..], &mut scratch.field);
    }

    pub fn query(&self, p_world: Vector3<f64>, branch: Branch) -> Vec<f64> {
        let mut out = vec![0.0; self.feature_width(branch)];
        let mut scratch = PyramidScratch::default();
        self.query_into(p_world, branch, &mut out, &mut scratch);
        out
    }

    /// Backward through one branch query. `upstream` has the concatenated
    /// width; the world-point gradient accounts for the bounds normalization
    /// (zero outside the bounds, where queries clamp).
    pub fn backward(
        &self,
        p_world: Vector3<f64>,
        branch: Branch,
        upstream: &[f64],
        grads: &mut PyramidGrads,
        point_grad_world: &mut Vector3<f64>,
        scratch: &mut PyramidScratch,
    ) {
        let u = self.bounds.normalize(p_world);
        let mut g_norm = Vector3::zeros();
        let cc;
        match branch {
            Branch::Geometry => {
                cc = self.geom_coarse.channels();
                self.geom_coarse.backward(
                    u,
                    &upstream[..cc],
                    &mut grads.geom_coarse,
                    &mut g_norm,
                    &mut scratch.field,
                );
                self.geom_fine.backward(
                    u,
                    &upstream[cc..],
                    &mut grads.geom_fine,
                    &mut g_norm,
                    &mut scratch.field,
                );
            }
            Branch::Appearance => {
                cc = self.app_coarse.channels();
                self.app_coarse.backward(
                    u,
                    &upstream[..cc],
                    &mut grads.app_coarse,
                    &mut g_norm,
                    &mut scratch.field,
                );
                self.app_fine.backward(
                    u,
                    &upstream[cc..],
                    &mut grads.app_fine,
                    &mut g_norm,
                    &mut scratch.field,
                );
            }
        }
        let e = self.bounds.extent();
        point_grad_world.x += g_norm.x / e.x;
        point_grad_world.y += g_norm.y / e.y;
        point_grad_world.z += g_norm.z / e.z;
    }

    /// Point-only variant of [`ScenePyramid::backward`].
    pub fn backward_point_only(
        &self,
        p_world: Vector3<f64>,
        branch: Branch,
        upstream: &[f64],
        point_grad_world: &mut Vector3<f64>,
        scratch: &mut PyramidScratch,
    ) {
        let u = self.bounds.normalize(p_world);
        let mut g_norm = Vector3::zeros();
        let (coarse, fine) = self.fields(branch);
        let cc = coarse.channels();
        coarse.backward_point_only(u, &upstream[..cc], &mut g_norm, &mut scratch.field);
        fine.backward_point_only(u, &upstream[cc..], &mut g_norm, &mut scratch.field);
        let e = self.bounds.extent();
        point_grad_world.x += g_norm.x / e.x;
        point_grad_world.y += g_norm.y / e.y;
        point_grad_world.z += g_norm.z / e.z;
    }

    /// Stored parameter counts: (geometry, appearance).
    pub fn param_counts(&self) -> (usize, usize) {
        (
            self.geom_coarse.param_count() + self.geom_fine.param_count(),
            self.app_coarse.param_count() + self.app_fine.param_count(),
        )
    }
}
