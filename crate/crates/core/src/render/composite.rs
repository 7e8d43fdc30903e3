use thiserror::Error;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("cannot composite an empty sample list")]
    EmptySamples,
    #[error("every ray in the batch missed the scene bounds")]
    EmptyBatch,
    #[error("samples must be sorted ascending in depth")]
    UnsortedSamples,
}

/// Rendered quantities for one ray.
#[derive(Debug, Clone)]
pub struct RayEstimate {
    pub color: [f64; 3],
    pub depth: f64,
    pub weights: Vec<f64>,
    pub sdf: Vec<f64>,
    pub sample_depths: Vec<f64>,
}

/// Map a normalized TSDF value to a volume density: `beta * logistic(-beta * s)`.
///
/// Strictly decreasing in `s`; equals `beta / 2` on the surface.
#[inline]
pub fn density(sdf: f64, beta: f64) -> f64 {
    beta * crate::decoder::logistic(-beta * sdf)
}

/// d(density)/d(sdf) and d(density)/d(log beta) at the same point.
#[inline]
pub fn density_derivatives(sdf: f64, beta: f64) -> (f64, f64) {
    let sig = crate::decoder::logistic(-beta * sdf);
    let dsig = sig * (1.0 - sig);
    let d_s = -beta * beta * dsig;
    // d/d(beta) = sig + beta * dsig * (-s); chain through beta = exp(log_beta)
    let d_logb = beta * (sig - beta * sdf * dsig);
    (d_s, d_logb)
}

/// Per-sample compositing weights: `w_i = exp(-sum_{j<i} sigma_j) * (1 - exp(-sigma_i))`.
///
/// Densities are treated as dimensionless per-sample opacities, with no
/// interval-length scaling.
pub fn weights_from_densities(densities: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.reserve(densities.len());
    let mut transmittance = 1.0;
    for &sigma in densities {
        let absorb = (-sigma).exp();
        out.push(transmittance * (1.0 - absorb));
        transmittance *= absorb;
    }
}

/// Composite sorted samples into a ray estimate.
///
/// `samples` are (depth, density, color) tuples sorted ascending in depth;
/// `sdf` carries the per-sample TSDF values through for the SDF losses.
pub fn composite(
    samples: &[(f64, f64, [f64; 3])],
    sdf: &[f64],
) -> Result<RayEstimate, RenderError> {
    if samples.is_empty() {
        return Err(RenderError::EmptySamples);
    }
    if samples.windows(2).any(|w| w[0].0 > w[1].0) {
        return Err(RenderError::UnsortedSamples);
    }
    let densities: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let mut weights = Vec::new();
    weights_from_densities(&densities, &mut weights);
    let mut color = [0.0; 3];
    let mut depth = 0.0;
    for (w, (t, _, c)) in weights.iter().zip(samples) {
        color[0] += w * c[0];
        color[1] += w * c[1];
        color[2] += w * c[2];
        depth += w * t;
    }
    Ok(RayEstimate {
        color,
        depth,
        weights,
        sdf: sdf.to_vec(),
        sample_depths: samples.iter().map(|s| s.0).collect(),
    })
}

/// Backward of the weight computation: given d(loss)/d(w_i), accumulate
/// d(loss)/d(sigma_i).
///
/// With T_i = exp(-sum_{j<i} sigma_j): dw_i/dsigma_i = T_i exp(-sigma_i), and
/// dw_j/dsigma_i = -w_j for j > i.
pub fn weights_backward(densities: &[f64], weight_grad: &[f64], density_grad: &mut [f64]) {
    let n = densities.len();
    debug_assert_eq!(weight_grad.len(), n);
    debug_assert_eq!(density_grad.len(), n);
    // trans[i] = T_i = exp(-sum_{j<i} sigma_j); weights from the same pass.
    let mut trans = Vec::with_capacity(n + 1);
    trans.push(1.0);
    let mut weights = Vec::with_capacity(n);
    for &sigma in densities {
        let t = *trans.last().unwrap();
        let absorb = (-sigma).exp();
        weights.push(t * (1.0 - absorb));
        trans.push(t * absorb);
    }
    // dw_i/dsigma_i = T_{i+1}; dw_j/dsigma_i = -w_j for j > i, accumulated as
    // a running suffix of g_j * w_j.
    let mut suffix = 0.0;
    for i in (0..n).rev() {
        density_grad[i] += weight_grad[i] * trans[i + 1] - suffix;
        suffix += weight_grad[i] * weights[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_density_renders_nothing() {
        let samples = vec![
            (1.0, 0.0, [1.0, 0.0, 0.0]),
            (2.0, 0.0, [0.0, 1.0, 0.0]),
        ];
        let est = composite(&samples, &[1.0, 1.0]).unwrap();
        assert_eq!(est.color, [0.0, 0.0, 0.0]);
        assert_eq!(est.depth, 0.0);
        assert!(est.weights.iter().all(|&w| w == 0.0));
    }

    #[test]
    fn ln2_densities_give_half_quarter_weights() {
        let s = std::f64::consts::LN_2;
        let samples = vec![(1.0, s, [1.0, 1.0, 1.0]), (2.0, s, [1.0, 1.0, 1.0])];
        let est = composite(&samples, &[0.0, 0.0]).unwrap();
        assert!((est.weights[0] - 0.5).abs() < 1e-15);
        assert!((est.weights[1] - 0.25).abs() < 1e-15);
        assert!((est.depth - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unsorted_and_empty_rejected() {
        assert!(matches!(
            composite(&[], &[]),
            Err(RenderError::EmptySamples)
        ));
        let samples = vec![(2.0, 0.1, [0.0; 3]), (1.0, 0.1, [0.0; 3])];
        assert!(matches!(
            composite(&samples, &[0.0, 0.0]),
            Err(RenderError::UnsortedSamples)
        ));
    }

    #[test]
    fn density_surface_value_and_monotonicity() {
        assert_eq!(density(0.0, 10.0), 5.0);
        assert!((density(0.1, 10.0) - 10.0 * crate::decoder::logistic(-1.0)).abs() < 1e-12);
        let betas = [1.0, 10.0, 50.0];
        for b in betas {
            let mut prev = f64::INFINITY;
            for i in -20..=20 {
                let s = i as f64 / 10.0;
                let d = density(s, b);
                assert!(d >= 0.0 && d <= prev);
                // strictly decreasing away from IEEE saturation
                if (b * s).abs() < 30.0 {
                    assert!(d < prev);
                }
                prev = d;
            }
        }
    }

    #[test]
    fn weight_sum_telescopes() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let n = rng.random_range(1..40);
            let densities: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
            let mut w = Vec::new();
            weights_from_densities(&densities, &mut w);
            let total: f64 = w.iter().sum();
            let sigma_sum: f64 = densities.iter().sum();
            assert!((total - (1.0 - (-sigma_sum).exp())).abs() < 1e-12);
            assert!(w.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn weights_match_literal_formula() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let densities: Vec<f64> = (0..16).map(|_| rng.random_range(0.0..2.0)).collect();
        let mut w = Vec::new();
        weights_from_densities(&densities, &mut w);
        for i in 0..densities.len() {
            let prefix: f64 = densities[..i].iter().sum();
            let literal = (-prefix).exp() * (1.0 - (-densities[i]).exp());
            assert!((w[i] - literal).abs() < 1e-14);
        }
    }

    #[test]
    fn weights_backward_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let n = 12;
        let densities: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..2.0)).collect();
        let gw: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut analytic = vec![0.0; n];
        weights_backward(&densities, &gw, &mut analytic);

        let f = |d: &[f64]| -> f64 {
            let mut w = Vec::new();
            weights_from_densities(d, &mut w);
            w.iter().zip(&gw).map(|(wi, gi)| wi * gi).sum()
        };
        let h = 1e-6;
        for i in 0..n {
            let mut plus = densities.clone();
            plus[i] += h;
            let mut minus = densities.clone();
            minus[i] -= h;
            let fd = (f(&plus) - f(&minus)) / (2.0 * h);
            assert!(
                (fd - analytic[i]).abs() < 1e-6 * fd.abs().max(1.0),
                "i={i}: fd={fd} analytic={}",
                analytic[i]
            );
        }
    }
}
