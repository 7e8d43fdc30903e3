//! Training objective: color, depth, free-space, and truncation-band SDF
//! terms with a weighted total.
//!
//! SDF supervision uses normalized targets: +1 for samples well in front of
//! the measured surface and a linear ramp `(D - z) / T` inside the truncation
//! band, split into a center band (tight around the surface) and the
//! remaining tail. Samples more than `T` behind the surface are occluded and
//! receive no supervision.

use serde::{Deserialize, Serialize};

use crate::render::RayEstimate;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LossConfig {
    /// Truncation distance in meters.
    pub truncation: f64,
    pub color_weight: f64,
    pub depth_weight: f64,
    pub freespace_weight: f64,
    pub sdf_center_weight: f64,
    pub sdf_tail_weight: f64,
    /// Fraction of the truncation band treated as the center band.
    pub center_fraction: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            truncation: 0.06,
            color_weight: 1.0,
            depth_weight: 0.1,
            freespace_weight: 5.0,
            sdf_center_weight: 200.0,
            sdf_tail_weight: 10.0,
            center_fraction: 0.4,
        }
    }
}

/// Which supervision band a sample falls into, for a ray with measured depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleBand {
    /// Well in front of the surface: z < D - T.
    FreeSpace,
    /// |D - z| <= center_fraction * T.
    Center,
    /// center_fraction * T < |D - z| <= T.
    Tail,
    /// More than T behind the surface: unsupervised.
    Occluded,
}

/// Classify a sample depth against a measured depth.
#[inline]
pub fn classify_sample(z: f64, measured: f64, cfg: &LossConfig) -> SampleBand {
    let diff = measured - z;
    if diff > cfg.truncation {
        SampleBand::FreeSpace
    } else if diff.abs() <= cfg.center_fraction * cfg.truncation {
        SampleBand::Center
    } else if diff.abs() <= cfg.truncation {
        SampleBand::Tail
    } else {
        SampleBand::Occluded
    }
}

/// Mean over rays of the squared L2 color error (channels summed).
pub fn color_loss(estimates: &[RayEstimate], observed: &[[f64; 3]]) -> f64 {
    assert_eq!(estimates.len(), observed.len());
    if estimates.is_empty() {
        return 0.0;
    }
    let total: f64 = estimates
        .iter()
        .zip(observed)
        .map(|(e, o)| {
            (0..3)
                .map(|c| {
                    let d = e.color[c] - o[c];
                    d * d
                })
                .sum::<f64>()
        })
        .sum();
    total / estimates.len() as f64
}

/// Mean squared depth error over rays with a valid measurement.
/// `valid_rays == 0` signals that no ray contributed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthLoss {
    pub value: f64,
    pub valid_rays: usize,
}

pub fn depth_loss(estimates: &[RayEstimate], observed: &[f64]) -> DepthLoss {
    assert_eq!(estimates.len(), observed.len());
    let mut total = 0.0;
    let mut valid = 0;
    for (e, &d) in estimates.iter().zip(observed) {
        if d.is_finite() && d > 0.0 {
            let r = e.depth - d;
            total += r * r;
            valid += 1;
        }
    }
    DepthLoss {
        value: if valid == 0 { 0.0 } else { total / valid as f64 },
        valid_rays: valid,
    }
}

/// Mean of `(s - 1)^2` over this ray's free-space samples; 0 when none
/// qualify.
pub fn freespace_loss(sdf: &[f64], sample_depths: &[f64], measured: f64, cfg: &LossConfig) -> f64 {
    debug_assert_eq!(sdf.len(), sample_depths.len());
    let mut total = 0.0;
    let mut n = 0;
    for (&s, &z) in sdf.iter().zip(sample_depths) {
        if classify_sample(z, measured, cfg) == SampleBand::FreeSpace {
            let r = s - 1.0;
            total += r * r;
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        total / n as f64
    }
}

/// Squared error against the ramp target `(D - z) / T` inside the truncation
/// band, averaged separately over the center and tail bands.
pub fn tsdf_loss(
    sdf: &[f64],
    sample_depths: &[f64],
    measured: f64,
    cfg: &LossConfig,
) -> (f64, f64) {
    debug_assert_eq!(sdf.len(), sample_depths.len());
    let mut center = (0.0, 0usize);
    let mut tail = (0.0, 0usize);
    for (&s, &z) in sdf.iter().zip(sample_depths) {
        let target = (measured - z) / cfg.truncation;
        match classify_sample(z, measured, cfg) {
            SampleBand::Center => {
                let r = s - target;
                center.0 += r * r;
                center.1 += 1;
            }
            SampleBand::Tail => {
                let r = s - target;
                tail.0 += r * r;
                tail.1 += 1;
            }
            _ => {}
        }
    }
    let avg = |(sum, n): (f64, usize)| if n == 0 { 0.0 } else { sum / n as f64 };
    (avg(center), avg(tail))
}

/// The five scalar loss parts of one batch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub color: f64,
    pub depth: f64,
    pub freespace: f64,
    pub sdf_center: f64,
    pub sdf_tail: f64,
}

/// Weighted sum of the parts.
pub fn total_loss(parts: &LossParts, cfg: &LossConfig) -> f64 {
    cfg.color_weight * parts.color
        + cfg.depth_weight * parts.depth
        + cfg.freespace_weight * parts.freespace
        + cfg.sdf_center_weight * parts.sdf_center
        + cfg.sdf_tail_weight * parts.sdf_tail
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn est(color: [f64; 3], depth: f64) -> RayEstimate {
        RayEstimate {
            color,
            depth,
            weights: vec![],
            sdf: vec![],
            sample_depths: vec![],
        }
    }

    #[test]
    fn color_loss_examples() {
        let e = vec![est([0.2, 0.4, 0.6], 1.0)];
        assert_eq!(color_loss(&e, &[[0.2, 0.4, 0.6]]), 0.0);
        let e = vec![est([0.0, 0.0, 0.0], 1.0)];
        assert_eq!(color_loss(&e, &[[1.0, 1.0, 1.0]]), 3.0);
    }

    #[test]
    fn color_loss_matches_direct_mean_of_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 37;
        let ests: Vec<RayEstimate> = (0..n)
            .map(|_| {
                est(
                    [rng.random(), rng.random(), rng.random()],
                    rng.random_range(0.1..4.0),
                )
            })
            .collect();
        let obs: Vec<[f64; 3]> = (0..n)
            .map(|_| [rng.random(), rng.random(), rng.random()])
            .collect();
        let got = color_loss(&ests, &obs);
        let mut want = 0.0;
        for i in 0..n {
            for c in 0..3 {
                want += (ests[i].color[c] - obs[i][c]).powi(2);
            }
        }
        want /= n as f64;
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn depth_loss_examples() {
        let e = vec![est([0.0; 3], 2.0)];
        assert_eq!(depth_loss(&e, &[2.0]).value, 0.0);
        let e = vec![est([0.0; 3], 1.5)];
        let dl = depth_loss(&e, &[2.0]);
        assert_eq!(dl.value, 0.25);
        assert_eq!(dl.valid_rays, 1);

        // invalid depths are excluded; all-invalid flags zero valid rays
        let e = vec![est([0.0; 3], 1.5), est([0.0; 3], 1.0)];
        let dl = depth_loss(&e, &[0.0, f64::NAN]);
        assert_eq!(dl.value, 0.0);
        assert_eq!(dl.valid_rays, 0);
    }

    #[test]
    fn freespace_examples() {
        let cfg = LossConfig::default();
        // all free-space samples decode to 1 -> 0
        let z = vec![0.5, 1.0, 1.5];
        assert_eq!(freespace_loss(&[1.0, 1.0, 1.0], &z, 2.0, &cfg), 0.0);
        // one qualifying sample with s = 0 -> 1
        assert_eq!(freespace_loss(&[0.0], &[1.0], 2.0, &cfg), 1.0);
    }

    #[test]
    fn masked_means_match_bruteforce() {
        let cfg = LossConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let n = rng.random_range(1..60);
            let measured = rng.random_range(0.5..3.0);
            let z: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.5)).collect();
            let s: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();

            let fs = freespace_loss(&s, &z, measured, &cfg);
            let (center, tail) = tsdf_loss(&s, &z, measured, &cfg);

            let mut acc = [(0.0, 0usize); 3];
            for i in 0..n {
                let diff = measured - z[i];
                let target = diff / cfg.truncation;
                if diff > cfg.truncation {
                    let r = s[i] - 1.0;
                    acc[0].0 += r * r;
                    acc[0].1 += 1;
                } else if diff.abs() <= cfg.center_fraction * cfg.truncation {
                    let r = s[i] - target;
                    acc[1].0 += r * r;
                    acc[1].1 += 1;
                } else if diff.abs() <= cfg.truncation {
                    let r = s[i] - target;
                    acc[2].0 += r * r;
                    acc[2].1 += 1;
                }
            }
            let mean = |(v, c): (f64, usize)| if c == 0 { 0.0 } else { v / c as f64 };
            assert!((fs - mean(acc[0])).abs() < 1e-12);
            assert!((center - mean(acc[1])).abs() < 1e-12);
            assert!((tail - mean(acc[2])).abs() < 1e-12);
        }
    }

    #[test]
    fn tsdf_examples() {
        let cfg = LossConfig::default();
        // exact ramp -> zero both bands
        let z: Vec<f64> = vec![1.95, 1.98, 2.0, 2.03, 2.05];
        let s: Vec<f64> = z.iter().map(|z| (2.0 - z) / cfg.truncation).collect();
        let (c, t) = tsdf_loss(&s, &z, 2.0, &cfg);
        assert!(c.abs() < 1e-12 && t.abs() < 1e-12);
        // sample at z = D with s = 0 -> center 0; with s = 0.5 -> 0.25
        assert_eq!(tsdf_loss(&[0.0], &[2.0], 2.0, &cfg).0, 0.0);
        assert_eq!(tsdf_loss(&[0.5], &[2.0], 2.0, &cfg).0, 0.25);
    }

    #[test]
    fn bands_partition_valid_ray_samples() {
        let cfg = LossConfig::default();
        let measured = 2.0;
        let mut z = -0.5;
        while z < 4.0 {
            let n = [
                SampleBand::FreeSpace,
                SampleBand::Center,
                SampleBand::Tail,
                SampleBand::Occluded,
            ]
            .iter()
            .filter(|b| classify_sample(z, measured, &cfg) == **b)
            .count();
            assert_eq!(n, 1, "z={z} must land in exactly one band");
            z += 0.001;
        }
    }

    #[test]
    fn total_is_weighted_dot() {
        let cfg = LossConfig {
            truncation: 0.06,
            color_weight: 1.0,
            depth_weight: 1.0,
            freespace_weight: 1.0,
            sdf_center_weight: 1.0,
            sdf_tail_weight: 1.0,
            center_fraction: 0.4,
        };
        let parts = LossParts {
            color: 1.0,
            depth: 2.0,
            freespace: 3.0,
            sdf_center: 4.0,
            sdf_tail: 5.0,
        };
        assert_eq!(total_loss(&parts, &cfg), 15.0);
        assert_eq!(total_loss(&LossParts::default(), &cfg), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let cfg = LossConfig {
                truncation: 0.06,
                color_weight: rng.random(),
                depth_weight: rng.random(),
                freespace_weight: rng.random(),
                sdf_center_weight: rng.random(),
                sdf_tail_weight: rng.random(),
                center_fraction: 0.4,
            };
            let parts = LossParts {
                color: rng.random(),
                depth: rng.random(),
                freespace: rng.random(),
                sdf_center: rng.random(),
                sdf_tail: rng.random(),
            };
            let want = cfg.color_weight * parts.color
                + cfg.depth_weight * parts.depth
                + cfg.freespace_weight * parts.freespace
                + cfg.sdf_center_weight * parts.sdf_center
                + cfg.sdf_tail_weight * parts.sdf_tail;
            assert!((total_loss(&parts, &cfg) - want).abs() < 1e-15);
        }
    }
}
