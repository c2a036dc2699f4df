use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;

/// Fourier resampling to `target_len` samples.
///
/// The spectrum is truncated (downsampling) or zero-padded (upsampling)
/// symmetrically around DC; an even-length Nyquist bin is folded on
/// truncation and split in half on padding so the result stays real. The
/// amplitude is rescaled by `target_len / n`.
pub fn resample_fft(x: &[f64], target_len: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 2 {
        return Err(Error::SignalTooShort { needed: 2, got: n });
    }
    if target_len == 0 {
        return Err(Error::InvalidConfig("resample target length must be positive".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("resample input"));
    }
    if n == target_len {
        return Ok(x.to_vec());
    }
    let spec = fft::forward_real(x);
    let zero = Complex64::new(0.0, 0.0);
    let mut out = vec![zero; target_len];
    let keep = n.min(target_len);
    let nyq = keep / 2 + 1;
    out[..nyq].copy_from_slice(&spec[..nyq]);
    let neg = keep - nyq;
    if neg > 0 {
        out[target_len - neg..].copy_from_slice(&spec[n - neg..]);
    }
    if keep % 2 == 0 {
        let half = keep / 2;
        if target_len < n {
            // Fold the discarded mirror bin into the new Nyquist bin.
            out[half] += spec[n - half];
        } else {
            let v = out[half] * 0.5;
            out[half] = v;
            out[target_len - half] = v;
        }
    }
    let scale = target_len as f64 / n as f64;
    Ok(fft::inverse_real(out).into_iter().map(|v| v * scale).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn rms(a: &[f64], b: &[f64]) -> f64 {
        (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
    }

    #[test]
    fn constant_is_preserved() {
        for n in [2usize, 3, 150, 299, 301, 640] {
            let y = resample_fft(&vec![-1.25; n], 300).unwrap();
            assert_eq!(y.len(), 300);
            assert!(y.iter().all(|v| (v + 1.25).abs() < 1e-9), "n={n}");
        }
    }

    #[test]
    fn single_period_sine_up_and_down() {
        for n in [200usize, 201, 450, 451] {
            let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).sin()).collect();
            let want: Vec<f64> = (0..300).map(|i| (2.0 * PI * i as f64 / 300.0).sin()).collect();
            let y = resample_fft(&x, 300).unwrap();
            assert!(rms(&y, &want) < 1e-6, "n={n}");
        }
    }

    #[test]
    fn identity_at_target_length() {
        let x: Vec<f64> = (0..300).map(|i| ((i * 37) % 11) as f64 * 0.3).collect();
        assert!(rms(&resample_fft(&x, 300).unwrap(), &x) < 1e-9);
    }

    #[test]
    fn nyquist_tone_round_trip_is_real() {
        // Alternating signal sits exactly on the Nyquist bin.
        let x: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let up = resample_fft(&x, 16).unwrap();
        let back = resample_fft(&up, 8).unwrap();
        assert!(rms(&back, &x) < 1e-12);
    }

    #[test]
    fn too_short() {
        assert!(resample_fft(&[1.0], 300).is_err());
    }
}
