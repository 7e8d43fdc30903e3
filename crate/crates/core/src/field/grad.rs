use super::variant::FactorizedField;

/// Gradient buffers matching a field's factors, in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrads {
    factors: Vec<Vec<f64>>,
}

impl FieldGrads {
    pub fn zeros_like(field: &FactorizedField) -> Self {
        Self {
            factors: field
                .factor_lens()
                .into_iter()
                .map(|len| vec![0.0; len])
                .collect(),
        }
    }

    pub fn clear(&mut self) {
        for f in &mut self.factors {
            f.fill(0.0);
        }
    }

    #[inline]
    pub fn factor(&self, idx: usize) -> &[f64] {
        &self.factors[idx]
    }

    #[inline]
    pub fn factor_mut(&mut self, idx: usize) -> &mut [f64] {
        &mut self.factors[idx]
    }

    pub fn factor_count(&self) -> usize {
        self.factors.len()
    }

    pub fn accumulate(&mut self, other: &FieldGrads) {
        debug_assert_eq!(self.factors.len(), other.factors.len());
        for (dst, src) in self.factors.iter_mut().zip(&other.factors) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for f in &mut self.factors {
            for v in f.iter_mut() {
                *v *= s;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.factors
            .iter()
            .flat_map(|f| f.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}
