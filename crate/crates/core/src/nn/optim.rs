use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

/// Adam (bias-corrected first and second moments) or plain SGD over a flat
/// parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, n_params: usize) -> Self {
        let moments = match kind {
            OptimizerKind::Adam => n_params,
            OptimizerKind::Sgd => 0,
        };
        Optimizer { kind, lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; moments], v: vec![0.0; moments], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= self.lr * g;
                }
            }
            OptimizerKind::Adam => {
                self.t += 1;
                let t = self.t as f64;
                let c1 = 1.0 - math::powf(self.beta1, t);
                let c2 = 1.0 - math::powf(self.beta2, t);
                let step = self.lr * math::sqrt(c2) / c1;
                for k in 0..params.len() {
                    let g = grad[k];
                    self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g;
                    self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g;
                    params[k] -= step * self.m[k] / (math::sqrt(self.v[k]) + self.eps);
                }
            }
        }
    }
}

/// Rescale `grad` so its L2 norm is at most `max_norm`; returns the norm
/// before clipping.
pub fn clip_global_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = math::sqrt(grad.iter().map(|g| g * g).sum::<f64>());
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipping() {
        let mut g = [3.0, 4.0];
        assert_eq!(clip_global_norm(&mut g, 1.0), 5.0);
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
        let mut small = [0.1, 0.1];
        clip_global_norm(&mut small, 1.0);
        assert_eq!(small, [0.1, 0.1]);
    }

    #[test]
    fn adam_minimizes_quadratic() {
        let mut p = [5.0, -3.0];
        let mut opt = Optimizer::new(OptimizerKind::Adam, 0.1, 2);
        for _ in 0..500 {
            let g = [2.0 * p[0], 2.0 * p[1]];
            opt.step(&mut p, &g);
        }
        assert!(p[0].abs() < 1e-2 && p[1].abs() < 1e-2, "{p:?}");
    }

    #[test]
    fn sgd_step() {
        let mut p = [1.0];
        Optimizer::new(OptimizerKind::Sgd, 0.5, 1).step(&mut p, &[2.0]);
        assert_eq!(p, [0.0]);
    }
}
