use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::field::SceneBounds;

/// Ray sampling configuration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SampleConfig {
    /// Stratified sample count over the full [near, far] span.
    pub stratified: usize,
    /// Extra samples concentrated in the truncation band around the measured
    /// depth, when one exists.
    pub importance: usize,
    /// Truncation distance in meters; the importance band is +/- this.
    pub truncation: f64,
    /// Mid-bin placement instead of jitter, for reproducible tests.
    pub deterministic: bool,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            stratified: 32,
            importance: 8,
            truncation: 0.06,
            deterministic: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleKind {
    Stratified,
    Importance,
}

/// One sample along a ray: range `t` in meters and the world point.
#[derive(Debug, Clone, Copy)]
pub struct RaySample {
    pub t: f64,
    pub p_world: Vector3<f64>,
    pub kind: SampleKind,
}

pub const MIN_RAY_T: f64 = 1e-3;

/// Sample ranges along a ray. Returns an empty vector when the ray misses the
/// scene bounds. `measured_depth` is a range along the ray; non-positive or
/// non-finite values mean "no measurement" and suppress importance samples.
pub fn sample_ray<R: Rng>(
    origin: Vector3<f64>,
    direction: Vector3<f64>,
    measured_depth: Option<f64>,
    bounds: &SceneBounds,
    cfg: &SampleConfig,
    rng: &mut R,
) -> Vec<RaySample> {
    let mut ts = sample_ray_ts(origin, direction, measured_depth, bounds, cfg, rng);
    ts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    ts.into_iter()
        .map(|(t, kind)| RaySample {
            t,
            p_world: origin + direction * t,
            kind,
        })
        .collect()
}

fn sample_ray_ts<R: Rng>(
    origin: Vector3<f64>,
    direction: Vector3<f64>,
    measured_depth: Option<f64>,
    bounds: &SceneBounds,
    cfg: &SampleConfig,
    rng: &mut R,
) -> Vec<(f64, SampleKind)> {
    let Some((enter, exit)) = bounds.ray_intersection(origin, direction) else {
        return Vec::new();
    };
    let near = enter.max(MIN_RAY_T);
    let far = exit;
    if far <= near {
        return Vec::new();
    }

    let mut ts = Vec::with_capacity(cfg.stratified + cfg.importance);
    let bin = (far - near) / cfg.stratified as f64;
    for b in 0..cfg.stratified {
        let xi = if cfg.deterministic {
            0.5
        } else {
            rng.random_range(0.0..1.0)
        };
        ts.push((near + (b as f64 + xi) * bin, SampleKind::Stratified));
    }

    let valid_depth = measured_depth.filter(|d| d.is_finite() && *d > 0.0);
    if let Some(d) = valid_depth {
        let lo = d - cfg.truncation;
        let hi = d + cfg.truncation;
        let span = hi - lo;
        for b in 0..cfg.importance {
            let xi = if cfg.deterministic {
                (b as f64 + 0.5) / cfg.importance as f64
            } else {
                rng.random_range(0.0..1.0)
            };
            ts.push(((lo + xi * span).max(MIN_RAY_T), SampleKind::Importance));
        }
    }
    ts
}
