use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::io::Frame;

/// Perturb valid depths with i.i.d. zero-mean Gaussian noise of the given
/// standard deviation (meters). Invalid pixels stay untouched; results clamp
/// to stay positive.
pub fn add_depth_noise(frame: &Frame, sigma: f64, seed: u64) -> Frame {
    assert!(sigma >= 0.0);
    let mut out = frame.clone();
    if sigma == 0.0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma validated");
    for d in out.depth.iter_mut() {
        if d.is_finite() && *d > 0.0 {
            let noisy = *d as f64 + normal.sample(&mut rng);
            *d = noisy.max(1e-3) as f32;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::{DepthConvention, Intrinsics};

    fn toy_frame() -> Frame {
        let k = Intrinsics {
            fx: 100.0,
            fy: 100.0,
            cx: 199.5,
            cy: 149.5,
            width: 400,
            height: 300,
            depth_scale: 1.0,
            depth_convention: DepthConvention::Range,
        };
        Frame {
            timestamp: 0.0,
            rgb: vec![0; 400 * 300 * 3],
            depth: (0..400 * 300)
                .map(|i| if i % 9 == 0 { 0.0 } else { 2.0 })
                .collect(),
            intrinsics: k,
            gt_pose: None,
        }
    }

    #[test]
    fn zero_sigma_is_bit_identical() {
        let f = toy_frame();
        let g = add_depth_noise(&f, 0.0, 7);
        assert_eq!(f.depth, g.depth);
    }

    #[test]
    fn invalid_pixels_untouched() {
        let f = toy_frame();
        let g = add_depth_noise(&f, 0.05, 7);
        for (a, b) in f.depth.iter().zip(&g.depth) {
            if *a == 0.0 {
                assert_eq!(*b, 0.0);
            } else {
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn sample_std_matches_sigma() {
        let f = toy_frame();
        let sigma = 0.05;
        let g = add_depth_noise(&f, sigma, 123);
        let diffs: Vec<f64> = f
            .depth
            .iter()
            .zip(&g.depth)
            .filter(|(a, _)| **a > 0.0)
            .map(|(a, b)| (*b - *a) as f64)
            .collect();
        assert!(diffs.len() > 100_000);
        let mean: f64 = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let var: f64 =
            diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / diffs.len() as f64;
        let std = var.sqrt();
        assert!(
            (std - sigma).abs() / sigma < 0.02,
            "sample std {std} vs sigma {sigma}"
        );
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let f = toy_frame();
        let a = add_depth_noise(&f, 0.05, 99);
        let b = add_depth_noise(&f, 0.05, 99);
        assert_eq!(a.depth, b.depth);
    }
}
