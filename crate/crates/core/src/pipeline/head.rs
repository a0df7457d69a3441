use alloc::vec;
use alloc::vec::Vec;

use crate::scene::CategoricalBelief;

/// Linear classifier over object features followed by a softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierHead {
    pub num_classes: usize,
    pub feature_dim: usize,
    /// Row-major `num_classes x feature_dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ClassifierHead {
    pub fn zeros(num_classes: usize, feature_dim: usize) -> Self {
        Self {
            num_classes,
            feature_dim,
            weights: vec![0.0; num_classes * feature_dim],
            bias: vec![0.0; num_classes],
        }
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        (0..self.num_classes)
            .map(|k| {
                let w = &self.weights[k * self.feature_dim..(k + 1) * self.feature_dim];
                self.bias[k] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    pub fn probs(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    pub fn belief(&self, x: &[f64]) -> CategoricalBelief {
        let p = self.probs(x);
        // a softmax is normalized to rounding error, well inside tolerance
        CategoricalBelief::new(p.clone()).unwrap_or_else(|_| CategoricalBelief::from_raw(p))
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        crate::scene::argmax(&self.logits(x))
    }

    /// `param -= lr * grad`, where `grad_logits[i]` is `dL/dz` for the object
    /// with features `xs[i]`, averaged over `scale` examples.
    pub(crate) fn apply(&mut self, xs: &[&[f64]], grad_logits: &[Vec<f64>], lr: f64, scale: f64) {
        let mut gw = vec![0.0; self.weights.len()];
        let mut gb = vec![0.0; self.bias.len()];
        for (x, dz) in xs.iter().zip(grad_logits) {
            for k in 0..self.num_classes {
                gb[k] += dz[k];
                let row = &mut gw[k * self.feature_dim..(k + 1) * self.feature_dim];
                for (g, xi) in row.iter_mut().zip(x.iter()) {
                    *g += dz[k] * xi;
                }
            }
        }
        let step = lr / scale;
        self.weights
            .iter_mut()
            .zip(&gw)
            .for_each(|(w, g)| *w -= step * g);
        self.bias
            .iter_mut()
            .zip(&gb)
            .for_each(|(b, g)| *b -= step * g);
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let top = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|&v| libm::exp(v - top)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Chains `dL/dp` through the softmax:
/// `dL/dz_j = p_j (dL/dp_j - sum_k dL/dp_k p_k)`.
pub fn softmax_backward(p: &[f64], grad_p: &[f64]) -> Vec<f64> {
    let dot: f64 = p.iter().zip(grad_p).map(|(a, b)| a * b).sum();
    p.iter()
        .zip(grad_p)
        .map(|(pj, gj)| pj * (gj - dot))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_backward_matches_finite_differences() {
        let z = [0.3, -1.2, 0.8];
        let w = [0.5, 2.0, -1.0];
        // L = sum_j w_j p_j, so dL/dp = w
        let loss = |z: &[f64]| softmax(z).iter().zip(&w).map(|(p, w)| p * w).sum::<f64>();
        let analytic = softmax_backward(&softmax(&z), &w);
        let h = 1e-6;
        for j in 0..3 {
            let mut up = z;
            let mut down = z;
            up[j] += h;
            down[j] -= h;
            let fd = (loss(&up) - loss(&down)) / (2.0 * h);
            assert!((fd - analytic[j]).abs() < 1e-8);
        }
    }
}
