use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::PatientExample;
use crate::error::{Error, Result};
use crate::math;

/// Mean and scale for each (scene, channel) pair plus the three numeric
/// demographic features. Fitted on the training split only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    /// `[scene][channel]` means.
    pub mean: [[f64; 6]; 5],
    /// `[scene][channel]` standard deviations (1 where degenerate).
    pub scale: [[f64; 6]; 5],
    pub demo_mean: [f64; 3],
    pub demo_scale: [f64; 3],
}

impl Standardizer {
    pub fn identity() -> Self {
        Standardizer { mean: [[0.0; 6]; 5], scale: [[1.0; 6]; 5], demo_mean: [0.0; 3], demo_scale: [1.0; 3] }
    }

    pub fn fit<'a>(examples: impl IntoIterator<Item = &'a PatientExample>) -> Result<Self> {
        let mut sum = [[0.0; 6]; 5];
        let mut sq = [[0.0; 6]; 5];
        let mut count = [0usize; 5];
        let mut demo: Vec<[f64; 3]> = Vec::new();
        for ex in examples {
            for (s, cycle) in ex.scenes.iter().enumerate() {
                count[s] += cycle.len();
                for (c, ch) in cycle.channels.iter().enumerate() {
                    for &v in ch {
                        sum[s][c] += v;
                        sq[s][c] += v * v;
                    }
                }
            }
            demo.push(ex.demographics.features());
        }
        if demo.is_empty() {
            return Err(Error::Empty("standardization set"));
        }
        let mut out = Standardizer::identity();
        for s in 0..5 {
            let n = count[s].max(1) as f64;
            for c in 0..6 {
                let mean = sum[s][c] / n;
                let var = (sq[s][c] / n - mean * mean).max(0.0);
                out.mean[s][c] = mean;
                out.scale[s][c] = scale_or_one(math::sqrt(var));
            }
        }
        let n = demo.len() as f64;
        for f in 0..3 {
            let mean = demo.iter().map(|d| d[f]).sum::<f64>() / n;
            let var = demo.iter().map(|d| (d[f] - mean) * (d[f] - mean)).sum::<f64>() / n;
            out.demo_mean[f] = mean;
            out.demo_scale[f] = scale_or_one(math::sqrt(var));
        }
        Ok(out)
    }

    pub fn apply(&self, ex: &PatientExample) -> PatientExample {
        let mut out = ex.clone();
        for (s, cycle) in out.scenes.iter_mut().enumerate() {
            for (c, ch) in cycle.channels.iter_mut().enumerate() {
                let (m, k) = (self.mean[s][c], self.scale[s][c]);
                ch.iter_mut().for_each(|v| *v = (*v - m) / k);
            }
        }
        out
    }

    pub fn demographics(&self, ex: &PatientExample) -> [f64; 3] {
        let f = ex.demographics.features();
        core::array::from_fn(|i| (f[i] - self.demo_mean[i]) / self.demo_scale[i])
    }
}

fn scale_or_one(sd: f64) -> f64 {
    if sd.is_finite() && sd > 1e-12 {
        sd
    } else {
        1.0
    }
}
