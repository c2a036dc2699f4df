use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::math;

/// Brick-wall low-pass settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    cutoff_hz: f64,
    sample_rate_hz: f64,
}

impl FilterSpec {
    pub const DEFAULT_CUTOFF_HZ: f64 = 0.7;

    pub fn new(cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidConfig(format!("sample rate must be positive, got {sample_rate_hz}")));
        }
        if !(cutoff_hz.is_finite() && cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0) {
            return Err(Error::InvalidConfig(format!(
                "cutoff {cutoff_hz} Hz must lie in (0, {}) Hz",
                sample_rate_hz / 2.0
            )));
        }
        Ok(FilterSpec { cutoff_hz, sample_rate_hz })
    }

    pub fn cutoff_hz(&self) -> f64 {
        self.cutoff_hz
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    /// Whether DFT bin `k` of an `n`-point transform survives the filter.
    pub fn passes(&self, k: usize, n: usize) -> bool {
        fft::bin_frequency(k, n, self.sample_rate_hz) <= self.cutoff_hz * (1.0 + 1e-12)
    }
}

/// Zero every DFT bin whose frequency is strictly above the cutoff and
/// transform back. The result has the input's length and is real.
pub fn lowpass_fft(signal: &[f64], spec: &FilterSpec) -> Result<Vec<f64>> {
    if signal.len() < 2 {
        return Err(Error::SignalTooShort { needed: 2, got: signal.len() });
    }
    if signal.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("low-pass input"));
    }
    let n = signal.len();
    let mut spectrum = fft::forward_real(signal);
    for (k, bin) in spectrum.iter_mut().enumerate() {
        if !spec.passes(k, n) {
            *bin = Complex64::new(0.0, 0.0);
        }
    }
    Ok(fft::inverse_real(spectrum))
}

/// Autoregressive order used to extend signals in [`lowpass_extended`].
pub const EXTENSION_ORDER: usize = 16;

/// Low-pass used ahead of peak detection.
///
/// The trimmed window rarely holds a whole number of breaths, so the
/// periodic extension implied by the DFT has a jump at the seam and the
/// brick-wall ringing moves extrema near the edges by several samples. The
/// mean-removed signal is instead continued past both ends by an
/// autoregressive predictor (Burg estimate), the continuation is faded to
/// zero with a raised-cosine ramp, and the padded signal is filtered and
/// cropped back to the original span.
pub fn lowpass_extended(signal: &[f64], spec: &FilterSpec) -> Result<Vec<f64>> {
    let n = signal.len();
    if n < 2 {
        return Err(Error::SignalTooShort { needed: 2, got: n });
    }
    if signal.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("low-pass input"));
    }
    let order = EXTENSION_ORDER.min(n / 4);
    if order == 0 {
        return lowpass_fft(signal, spec);
    }
    let mu = signal.iter().sum::<f64>() / n as f64;
    let xc: Vec<f64> = signal.iter().map(|v| v - mu).collect();
    let a = burg(&xc, order);
    let pad = n - 1;
    let right = extrapolate(&xc, &a, pad);
    let rev: Vec<f64> = xc.iter().rev().copied().collect();
    let left = extrapolate(&rev, &a, pad);

    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend(left.iter().rev());
    ext.extend_from_slice(&xc);
    ext.extend_from_slice(&right);
    // Fade the continuations: 1 next to the data, 0 at the far ends.
    for i in 0..pad {
        let w = 0.5 - 0.5 * math::cos(PI * i as f64 / (pad - 1).max(1) as f64);
        ext[i] *= w;
        let j = ext.len() - 1 - i;
        ext[j] *= w;
    }
    let filtered = lowpass_fft(&ext, spec)?;
    Ok(filtered[pad..pad + n].iter().map(|v| v + mu).collect())
}

/// Burg estimate of the prediction-error filter `a` (with `a[0] = 1`) so
/// that `x[t] ~ -sum_{k>=1} a[k] x[t-k]`. Stops early on a degenerate
/// (for example constant) input.
pub fn burg(x: &[f64], order: usize) -> Vec<f64> {
    let mut a = vec![1.0];
    let mut f = x.to_vec();
    let mut b = x.to_vec();
    for m in 0..order.min(x.len().saturating_sub(1)) {
        let (mut num, mut den) = (0.0, 0.0);
        for t in m + 1..x.len() {
            num += f[t] * b[t - 1];
            den += f[t] * f[t] + b[t - 1] * b[t - 1];
        }
        if den <= f64::MIN_POSITIVE {
            break;
        }
        let k = -2.0 * num / den;
        a.push(0.0);
        let prev = a.clone();
        for i in 0..a.len() {
            a[i] = prev[i] + k * prev[a.len() - 1 - i];
        }
        for t in (m + 1..x.len()).rev() {
            let (ft, bt) = (f[t], b[t - 1]);
            f[t] = ft + k * bt;
            b[t] = bt + k * ft;
        }
    }
    a
}

fn extrapolate(x: &[f64], a: &[f64], len: usize) -> Vec<f64> {
    let p = a.len() - 1;
    let mut hist: Vec<f64> = x.to_vec();
    for _ in 0..len {
        let t = hist.len();
        let next = -(1..=p.min(t)).map(|k| a[k] * hist[t - k]).sum::<f64>();
        hist.push(next);
    }
    hist.split_off(x.len())
}
