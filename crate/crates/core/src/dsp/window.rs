use alloc::vec::Vec;

use crate::data::{BreathingCycle, RawRecording};
use crate::error::Result;
use crate::math;

use super::peaks::PeakSet;
use super::resample::resample_fft;

/// Cut the raw (trimmed, unfiltered) recording between consecutive maxima
/// and resample each window to `target_len` samples per channel.
///
/// Window `k` spans `[maxima[k], maxima[k + 1])`; a minimum strictly inside
/// it becomes the cycle's inhale/exhale boundary.
pub fn window_cycles(raw: &RawRecording, peaks: &PeakSet, target_len: usize) -> Result<Vec<BreathingCycle>> {
    if peaks.maxima.len() < 2 {
        return Ok(Vec::new());
    }
    let channels: [Vec<f64>; 6] = core::array::from_fn(|c| raw.channel(c));
    let mut cycles = Vec::with_capacity(peaks.maxima.len() - 1);
    for w in peaks.maxima.windows(2) {
        let (start, end) = (w[0], w[1]);
        let len = end - start;
        let mut resampled: [Vec<f64>; 6] = Default::default();
        for (dst, src) in resampled.iter_mut().zip(&channels) {
            *dst = resample_fft(&src[start..end], target_len)?;
        }
        let phase_bound = peaks
            .minima
            .iter()
            .find(|&&m| m > start && m < end)
            .map(|&m| {
                let pos = math::round((m - start) as f64 * target_len as f64 / len as f64) as usize;
                pos.min(target_len - 1)
            });
        cycles.push(BreathingCycle {
            scene: raw.scene(),
            channels: resampled,
            phase_bound,
            source_window: (start, end),
        });
    }
    Ok(cycles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ScenePosition;
    use alloc::vec;

    fn ramp_recording(n: usize) -> RawRecording {
        let gyro = (0..n).map(|i| [i as f64, 1.0, 2.0]).collect();
        let accel = (0..n).map(|i| [0.0, 0.0, 9.81 + i as f64 * 1e-3]).collect();
        RawRecording::new(ScenePosition::T1, 50.0, gyro, accel).unwrap()
    }

    #[test]
    fn windows_between_maxima() {
        let rec = ramp_recording(500);
        let peaks = PeakSet { maxima: vec![50, 250, 450], minima: vec![150, 350] };
        let cycles = window_cycles(&rec, &peaks, 300).unwrap();
        assert_eq!(cycles.len(), 2);
        assert_eq!(cycles[0].source_window, (50, 250));
        assert_eq!(cycles[1].source_window, (250, 450));
        for c in &cycles {
            assert_eq!(c.channels.len(), 6);
            assert!(c.channels.iter().all(|ch| ch.len() == 300));
            assert_eq!(c.phase_bound, Some(150));
            assert!(c.is_finite());
        }
    }

    #[test]
    fn exact_length_window_is_copied() {
        let rec = ramp_recording(400);
        let peaks = PeakSet { maxima: vec![10, 310], minima: vec![] };
        let cycles = window_cycles(&rec, &peaks, 300).unwrap();
        assert_eq!(cycles[0].channels[0], rec.channel(0)[10..310].to_vec());
        assert_eq!(cycles[0].phase_bound, None);
    }

    #[test]
    fn fewer_than_two_maxima() {
        let rec = ramp_recording(100);
        let peaks = PeakSet { maxima: vec![40], minima: vec![] };
        assert!(window_cycles(&rec, &peaks, 300).unwrap().is_empty());
    }
}
