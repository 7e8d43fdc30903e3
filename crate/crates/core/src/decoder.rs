//! MLP heads decoding concatenated field features, plus the learnable
//! density sharpness.
//!
//! Both decoders are two-layer perceptrons with a ReLU hidden layer. The
//! geometry head emits one tanh-bounded value interpreted as a normalized
//! truncated SDF (multiples of the truncation distance); the appearance head
//! emits three logistic-bounded color channels.

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecoderError {
    #[error("input width mismatch: decoder expects {expected}, got {actual}")]
    WidthMismatch { expected: usize, actual: usize },
}

/// Output nonlinearity of a decoder head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    /// tanh, range (-1, 1); used for the normalized TSDF.
    Tanh,
    /// logistic, range (0, 1) per channel; used for color.
    Logistic,
}

#[inline]
pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Parameters of one two-layer perceptron head.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub input_width: usize,
    pub hidden_width: usize,
    pub output_width: usize,
    pub activation: OutputActivation,
    /// hidden_width x input_width, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// output_width x hidden_width, row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl MlpParams {
    pub fn zeros(
        input_width: usize,
        hidden_width: usize,
        output_width: usize,
        activation: OutputActivation,
    ) -> Self {
        Self {
            input_width,
            hidden_width,
            output_width,
            activation,
            w1: vec![0.0; hidden_width * input_width],
            b1: vec![0.0; hidden_width],
            w2: vec![0.0; output_width * hidden_width],
            b2: vec![0.0; output_width],
        }
    }

    /// Fan-in uniform init. `output_bias` shifts every output unit; the
    /// geometry head uses +0.7 so untrained space decodes to a positive
    /// (empty) SDF.
    pub fn init<R: Rng>(
        input_width: usize,
        hidden_width: usize,
        output_width: usize,
        activation: OutputActivation,
        output_bias: f64,
        rng: &mut R,
    ) -> Self {
        let mut p = Self::zeros(input_width, hidden_width, output_width, activation);
        let a1 = (6.0 / input_width as f64).sqrt();
        for w in p.w1.iter_mut() {
            *w = rng.random_range(-a1..a1);
        }
        let a2 = (6.0 / hidden_width as f64).sqrt();
        for w in p.w2.iter_mut() {
            *w = rng.random_range(-a2..a2);
        }
        for b in p.b2.iter_mut() {
            *b = output_bias;
        }
        p
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    fn check_width(&self, input: &[f64]) -> Result<(), DecoderError> {
        if input.len() != self.input_width {
            Err(DecoderError::WidthMismatch {
                expected: self.input_width,
                actual: input.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Forward pass writing outputs and the post-ReLU hidden activations
    /// (needed by the backward pass) into caller buffers.
    pub fn forward_into(&self, input: &[f64], hidden: &mut [f64], output: &mut [f64]) {
        debug_assert_eq!(input.len(), self.input_width);
        debug_assert_eq!(hidden.len(), self.hidden_width);
        debug_assert_eq!(output.len(), self.output_width);
        for h in 0..self.hidden_width {
            let row = &self.w1[h * self.input_width..(h + 1) * self.input_width];
            let mut acc = self.b1[h];
            for (w, x) in row.iter().zip(input) {
                acc += w * x;
            }
            hidden[h] = acc.max(0.0);
        }
        for o in 0..self.output_width {
            let row = &self.w2[o * self.hidden_width..(o + 1) * self.hidden_width];
            let mut acc = self.b2[o];
            for (w, h) in row.iter().zip(hidden.iter()) {
                acc += w * h;
            }
            output[o] = match self.activation {
                OutputActivation::Tanh => acc.tanh(),
                OutputActivation::Logistic => logistic(acc),
            };
        }
    }

    /// Backward pass. `output` and `hidden` are the cached forward results;
    /// `upstream` is d(loss)/d(output). Gradients accumulate into `grads`;
    /// d(loss)/d(input) accumulates into `input_grad`.
    pub fn backward(
        &self,
        input: &[f64],
        hidden: &[f64],
        output: &[f64],
        upstream: &[f64],
        grads: &mut MlpGrads,
        input_grad: &mut [f64],
    ) {
        debug_assert_eq!(upstream.len(), self.output_width);
        let mut dz2 = [0.0f64; 8];
        debug_assert!(self.output_width <= dz2.len());
        for o in 0..self.output_width {
            let act = output[o];
            let da = match self.activation {
                OutputActivation::Tanh => 1.0 - act * act,
                OutputActivation::Logistic => act * (1.0 - act),
            };
            dz2[o] = upstream[o] * da;
        }
        // second layer and hidden grad
        let mut dh = vec![0.0f64; self.hidden_width];
        for o in 0..self.output_width {
            let d = dz2[o];
            grads.b2[o] += d;
            let row = &self.w2[o * self.hidden_width..(o + 1) * self.hidden_width];
            let grow = &mut grads.w2[o * self.hidden_width..(o + 1) * self.hidden_width];
            for h in 0..self.hidden_width {
                grow[h] += d * hidden[h];
                dh[h] += d * row[h];
            }
        }
        // ReLU gate and first layer
        for h in 0..self.hidden_width {
            if hidden[h] <= 0.0 {
                continue;
            }
            let d = dh[h];
            grads.b1[h] += d;
            let row = &self.w1[h * self.input_width..(h + 1) * self.input_width];
            let grow = &mut grads.w1[h * self.input_width..(h + 1) * self.input_width];
            for (i, x) in input.iter().enumerate() {
                grow[i] += d * x;
                input_grad[i] += d * row[i];
            }
        }
    }
}

impl MlpParams {
    /// Input gradient only, without accumulating parameter gradients.
    pub fn backward_input_only(
        &self,
        hidden: &[f64],
        output: &[f64],
        upstream: &[f64],
        input_grad: &mut [f64],
    ) {
        let mut dz2 = [0.0f64; 8];
        debug_assert!(self.output_width <= dz2.len());
        for o in 0..self.output_width {
            let act = output[o];
            let da = match self.activation {
                OutputActivation::Tanh => 1.0 - act * act,
                OutputActivation::Logistic => act * (1.0 - act),
            };
            dz2[o] = upstream[o] * da;
        }
        for h in 0..self.hidden_width {
            if hidden[h] <= 0.0 {
                continue;
            }
            let mut d = 0.0;
            for o in 0..self.output_width {
                d += dz2[o] * self.w2[o * self.hidden_width + h];
            }
            let row = &self.w1[h * self.input_width..(h + 1) * self.input_width];
            for (g, w) in input_grad.iter_mut().zip(row) {
                *g += d * w;
            }
        }
    }
}

/// Gradient buffers matching [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl MlpGrads {
    pub fn zeros_like(p: &MlpParams) -> Self {
        Self {
            w1: vec![0.0; p.w1.len()],
            b1: vec![0.0; p.b1.len()],
            w2: vec![0.0; p.w2.len()],
            b2: vec![0.0; p.b2.len()],
        }
    }

    pub fn clear(&mut self) {
        self.w1.fill(0.0);
        self.b1.fill(0.0);
        self.w2.fill(0.0);
        self.b2.fill(0.0);
    }

    pub fn accumulate(&mut self, other: &MlpGrads) {
        for (d, s) in self.w1.iter_mut().zip(&other.w1) {
            *d += s;
        }
        for (d, s) in self.b1.iter_mut().zip(&other.b1) {
            *d += s;
        }
        for (d, s) in self.w2.iter_mut().zip(&other.w2) {
            *d += s;
        }
        for (d, s) in self.b2.iter_mut().zip(&other.b2) {
            *d += s;
        }
    }
}

/// Decode a geometry feature into a normalized TSDF value in (-1, 1).
pub fn decode_sdf(params: &MlpParams, features: &[f64]) -> Result<f64, DecoderError> {
    params.check_width(features)?;
    let mut hidden = vec![0.0; params.hidden_width];
    let mut out = [0.0];
    params.forward_into(features, &mut hidden, &mut out);
    Ok(out[0])
}

/// Decode an appearance feature into an RGB color in (0, 1)^3.
pub fn decode_color(params: &MlpParams, features: &[f64]) -> Result<[f64; 3], DecoderError> {
    params.check_width(features)?;
    let mut hidden = vec![0.0; params.hidden_width];
    let mut out = [0.0; 3];
    params.forward_into(features, &mut hidden, &mut out);
    Ok(out)
}

/// Learnable sharpness of the SDF-to-density mapping, stored as a log so the
/// value stays positive without constraints.
///
/// With normalized TSDF inputs the density transition has width ~4T/beta
/// around the surface and a residual free-space floor of beta*logistic(-beta).
/// The default keeps both small enough that rendered depth sits within a few
/// millimeters of the zero crossing while staying smooth across the sample
/// spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParam {
    pub log_beta: f64,
}

impl BetaParam {
    pub fn from_beta(beta: f64) -> Self {
        Self {
            log_beta: beta.ln(),
        }
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.log_beta.exp()
    }
}

impl Default for BetaParam {
    fn default() -> Self {
        Self::from_beta(30.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_params_decode_to_activation_of_zero() {
        let g = MlpParams::zeros(64, 16, 1, OutputActivation::Tanh);
        let a = MlpParams::zeros(64, 16, 3, OutputActivation::Logistic);
        let f = vec![0.3; 64];
        assert_eq!(decode_sdf(&g, &f).unwrap(), 0.0);
        assert_eq!(decode_color(&a, &f).unwrap(), [0.5, 0.5, 0.5]);
    }

    #[test]
    fn bias_only_path() {
        let mut g = MlpParams::zeros(64, 16, 1, OutputActivation::Tanh);
        g.b2[0] = 0.9;
        let s = decode_sdf(&g, &vec![0.0; 64]).unwrap();
        assert!((s - 0.9f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn saturated_color_biases() {
        let mut a = MlpParams::zeros(64, 16, 3, OutputActivation::Logistic);
        a.b2 = vec![40.0, -40.0, 0.0];
        let c = decode_color(&a, &vec![0.0; 64]).unwrap();
        assert!(c[0] > 1.0 - 1e-12 && c[1] < 1e-12 && (c[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn width_mismatch_rejected() {
        let g = MlpParams::zeros(64, 16, 1, OutputActivation::Tanh);
        assert!(decode_sdf(&g, &vec![0.0; 32]).is_err());
    }

    #[test]
    fn outputs_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let g = MlpParams::init(64, 16, 1, OutputActivation::Tanh, 0.7, &mut rng);
            let a = MlpParams::init(64, 16, 3, OutputActivation::Logistic, 0.0, &mut rng);
            let f: Vec<f64> = (0..64).map(|_| rng.random_range(-5.0..5.0)).collect();
            let s = decode_sdf(&g, &f).unwrap();
            assert!(s > -1.0 && s < 1.0);
            for c in decode_color(&a, &f).unwrap() {
                assert!(c > 0.0 && c < 1.0);
            }
        }
    }

    /// Straight-line reference evaluation of the same arithmetic, written out
    /// independently of the implementation's buffer layout.
    fn reference_forward(p: &MlpParams, x: &[f64]) -> Vec<f64> {
        let mut h = vec![0.0; p.hidden_width];
        for i in 0..p.hidden_width {
            let mut z = p.b1[i];
            for j in 0..p.input_width {
                z += p.w1[i * p.input_width + j] * x[j];
            }
            h[i] = if z > 0.0 { z } else { 0.0 };
        }
        (0..p.output_width)
            .map(|o| {
                let mut z = p.b2[o];
                for (i, hv) in h.iter().enumerate() {
                    z += p.w2[o * p.hidden_width + i] * hv;
                }
                match p.activation {
                    OutputActivation::Tanh => z.tanh(),
                    OutputActivation::Logistic => 1.0 / (1.0 + (-z).exp()),
                }
            })
            .collect()
    }

    #[test]
    fn matches_reference_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..20 {
            let act = if trial % 2 == 0 {
                OutputActivation::Tanh
            } else {
                OutputActivation::Logistic
            };
            let outs = if trial % 2 == 0 { 1 } else { 3 };
            let p = MlpParams::init(64, 16, outs, act, 0.1, &mut rng);
            let x: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
            let want = reference_forward(&p, &x);
            let mut hidden = vec![0.0; 16];
            let mut got = vec![0.0; outs];
            p.forward_into(&x, &mut hidden, &mut got);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-15 * w.abs().max(1.0));
            }
        }
    }

    #[test]
    fn determinism_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = MlpParams::init(64, 16, 3, OutputActivation::Logistic, 0.0, &mut rng);
        let x: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = decode_color(&p, &x).unwrap();
        let b = decode_color(&p, &x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_upstream_gives_zero_grads() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = MlpParams::init(64, 16, 1, OutputActivation::Tanh, 0.7, &mut rng);
        let x: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut hidden = vec![0.0; 16];
        let mut out = [0.0];
        p.forward_into(&x, &mut hidden, &mut out);
        let mut grads = MlpGrads::zeros_like(&p);
        let mut xg = vec![0.0; 64];
        p.backward(&x, &hidden, &out, &[0.0], &mut grads, &mut xg);
        assert!(grads.w1.iter().all(|&v| v == 0.0));
        assert!(xg.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn grads_linear_in_upstream() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = MlpParams::init(64, 16, 3, OutputActivation::Logistic, 0.0, &mut rng);
        let x: Vec<f64> = (0..64).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut hidden = vec![0.0; 16];
        let mut out = [0.0; 3];
        p.forward_into(&x, &mut hidden, &mut out);

        let up = [0.3, -1.1, 0.7];
        let mut g1 = MlpGrads::zeros_like(&p);
        let mut xg1 = vec![0.0; 64];
        p.backward(&x, &hidden, &out, &up, &mut g1, &mut xg1);

        let up2: Vec<f64> = up.iter().map(|u| 2.0 * u).collect();
        let mut g2 = MlpGrads::zeros_like(&p);
        let mut xg2 = vec![0.0; 64];
        p.backward(&x, &hidden, &out, &up2, &mut g2, &mut xg2);

        for (a, b) in g1.w1.iter().zip(&g2.w1) {
            assert!((2.0 * a - b).abs() < 1e-12 * b.abs().max(1.0));
        }
        for (a, b) in xg1.iter().zip(&xg2) {
            assert!((2.0 * a - b).abs() < 1e-12 * b.abs().max(1.0));
        }
    }
}
