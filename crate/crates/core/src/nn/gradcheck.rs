//! Central finite-difference check of the analytic gradient.

use alloc::vec::Vec;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::network::{ExampleInput, Network};
use crate::error::Result;
use crate::rng;

/// Relative error below which two derivatives are taken to agree.
pub const DEFAULT_TOLERANCE: f64 = 1e-4;
/// Magnitudes below this are compared absolutely.
pub const MAGNITUDE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheckEntry {
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
    pub max_rel_error: f64,
    pub epsilon: f64,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_error < tol
    }
}

pub fn relative_error(a: f64, n: f64) -> f64 {
    let denom = a.abs().max(n.abs()).max(MAGNITUDE_FLOOR);
    (a - n).abs() / denom
}

/// Standard-normal input of `steps` time steps for every scene.
pub fn random_input<R: RngCore>(channels: usize, steps: usize, demographics: bool, r: &mut R) -> ExampleInput {
    ExampleInput {
        steps,
        channels,
        scenes: core::array::from_fn(|_| (0..steps * channels).map(|_| rng::normal(r)).collect()),
        extra: demographics.then(|| [rng::normal(r), rng::normal(r), rng::normal(r)]),
    }
}

/// Compare analytic and numeric derivatives of the BCE loss with respect to
/// the parameters at `indices` (all parameters when `None`).
pub fn check(net: &Network, input: &ExampleInput, target: f64, epsilon: f64, indices: Option<&[usize]>) -> Result<GradCheckReport> {
    let (_, grad) = net.loss_and_grad(input, target)?;
    let all: Vec<usize>;
    let idx = match indices {
        Some(i) => i,
        None => {
            all = (0..net.num_params()).collect();
            &all
        }
    };
    let mut probe = net.clone();
    let mut entries = Vec::with_capacity(idx.len());
    let mut max_rel_error: f64 = 0.0;
    for &i in idx {
        let orig = probe.params()[i];
        probe.params_mut()[i] = orig + epsilon;
        let up = probe.loss(input, target)?;
        probe.params_mut()[i] = orig - epsilon;
        let down = probe.loss(input, target)?;
        probe.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * epsilon);
        let rel_error = relative_error(grad[i], numeric);
        max_rel_error = max_rel_error.max(rel_error);
        entries.push(GradCheckEntry { index: i, analytic: grad[i], numeric, rel_error });
    }
    Ok(GradCheckReport { entries, max_rel_error, epsilon })
}
