//! Raw recording to breathing cycles: transient trimming, FFT low-pass,
//! gyroscope-y peak detection, windowing of the unfiltered signal and FFT
//! resampling to a fixed length.

mod filter;
mod peaks;
mod resample;
mod standardize;
mod window;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use filter::{burg, lowpass_extended, lowpass_fft, FilterSpec, EXTENSION_ORDER};
pub use peaks::{detect_peaks, local_maxima, prominence, PeakSet};
pub use resample::resample_fft;
pub use standardize::Standardizer;
pub use window::window_cycles;

use crate::data::{BreathingCycle, PatientExample, PatientRecord, RawRecording, ScenePosition};
use crate::error::{Error, Result};
use crate::math;
use crate::stats;

/// Cycle length every window is resampled to.
pub const CYCLE_LEN: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DspConfig {
    pub cutoff_hz: f64,
    pub trim_s: f64,
    pub target_len: usize,
    /// Minimum spacing between maxima, seconds.
    pub min_distance_s: f64,
    /// Minimum peak prominence as a fraction of the filtered signal's
    /// interquartile range.
    pub min_prominence: f64,
}

impl Default for DspConfig {
    fn default() -> Self {
        DspConfig {
            cutoff_hz: FilterSpec::DEFAULT_CUTOFF_HZ,
            trim_s: 5.0,
            target_len: CYCLE_LEN,
            min_distance_s: 1.5,
            min_prominence: 0.1,
        }
    }
}

impl DspConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.trim_s.is_finite()
            && self.trim_s >= 0.0
            && self.target_len >= 2
            && self.min_distance_s.is_finite()
            && self.min_distance_s >= 0.0
            && self.min_prominence.is_finite()
            && self.min_prominence >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("bad preprocessing settings {self:?}")))
        }
    }
}

/// Drop the first `floor(trim_s * sample_rate)` samples of every channel.
pub fn trim_transient(rec: &RawRecording, trim_s: f64) -> Result<RawRecording> {
    if !(trim_s.is_finite() && trim_s >= 0.0) {
        return Err(Error::InvalidConfig(format!("trim must be non-negative, got {trim_s}")));
    }
    if rec.duration_s() <= trim_s {
        return Err(Error::RecordingTooShort { duration_s: rec.duration_s(), trim_s });
    }
    let drop = math::floor(trim_s * rec.sample_rate_hz()) as usize;
    if drop == 0 {
        return Ok(rec.clone());
    }
    rec.slice(drop, rec.len())
}

/// Every intermediate of one scene's segmentation, kept for plotting and
/// scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSegmentation {
    pub trimmed: RawRecording,
    pub filtered_gyro_y: Vec<f64>,
    pub peaks: PeakSet,
    pub cycles: Vec<BreathingCycle>,
    /// Samples removed from the front by trimming.
    pub offset: usize,
}

pub fn segment_scene(rec: &RawRecording, cfg: &DspConfig) -> Result<SceneSegmentation> {
    cfg.validate()?;
    let trimmed = trim_transient(rec, cfg.trim_s)?;
    let offset = rec.len() - trimmed.len();
    let spec = FilterSpec::new(cfg.cutoff_hz, trimmed.sample_rate_hz())?;
    let filtered = lowpass_extended(&trimmed.gyro_y(), &spec)?;
    let iqr = stats::interquartile_range(&filtered).unwrap_or(0.0);
    let min_distance = math::round(cfg.min_distance_s * trimmed.sample_rate_hz()) as usize;
    let peaks = detect_peaks(&filtered, min_distance, cfg.min_prominence * iqr);
    let cycles = window_cycles(&trimmed, &peaks, cfg.target_len)?;
    Ok(SceneSegmentation { trimmed, filtered_gyro_y: filtered, peaks, cycles, offset })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessOutcome {
    pub examples: Vec<PatientExample>,
    /// Cycles found per scene, in [`ScenePosition::ALL`] order.
    pub cycles_per_scene: [usize; 5],
    /// Why the patient produced no examples, if it did not.
    pub flag: Option<String>,
}

impl PreprocessOutcome {
    fn flagged(cycles_per_scene: [usize; 5], reason: String) -> Self {
        PreprocessOutcome { examples: Vec::new(), cycles_per_scene, flag: Some(reason) }
    }
}

/// Segment each scene independently and align the per-scene cycle lists by
/// ordinal. The number of examples is the smallest per-scene cycle count.
///
/// Channels are left in physical units; standardization happens in training
/// with statistics from the training split.
pub fn preprocess_patient(p: &PatientRecord, cfg: &DspConfig) -> PreprocessOutcome {
    let mut counts = [0usize; 5];
    if !p.is_complete() {
        let missing: Vec<&str> = p.missing_scenes().iter().map(|s| s.as_str()).collect();
        return PreprocessOutcome::flagged(counts, format!("missing scenes {}", missing.join(",")));
    }
    let mut per_scene: Vec<Vec<BreathingCycle>> = Vec::with_capacity(5);
    for scene in ScenePosition::ALL {
        let rec = &p.recordings[&scene];
        match segment_scene(rec, cfg) {
            Ok(seg) => {
                counts[scene.index()] = seg.cycles.len();
                per_scene.push(seg.cycles);
            }
            Err(e) => return PreprocessOutcome::flagged(counts, format!("scene {scene}: {e}")),
        }
    }
    let n = counts.iter().copied().min().unwrap_or(0);
    if n == 0 {
        return PreprocessOutcome::flagged(counts, format!("scene without a complete breathing cycle (counts {counts:?})"));
    }
    let mut iters: Vec<_> = per_scene.into_iter().map(|v| v.into_iter()).collect();
    let examples = (0..n)
        .map(|k| PatientExample {
            patient_id: p.patient_id.clone(),
            label: p.label,
            disease_class: p.disease_class,
            demographics: p.demographics,
            cycle_index: k,
            scenes: core::array::from_fn(|s| iters[s].next().expect("count checked")),
        })
        .collect();
    PreprocessOutcome { examples, cycles_per_scene: counts, flag: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeMap;
    use alloc::string::ToString;
    use alloc::vec;
    use core::f64::consts::PI;

    use crate::data::{Demographics, DiseaseClass, Label, Sex};

    fn sine_recording(scene: ScenePosition, n: usize, freq: f64, phase_s: f64) -> RawRecording {
        let gyro: Vec<[f64; 3]> = (0..n)
            .map(|i| {
                let t = i as f64 / 50.0;
                [0.0, (2.0 * PI * freq * (t - phase_s)).cos(), 0.0]
            })
            .collect();
        let accel = vec![[0.0, 0.0, 9.81]; n];
        RawRecording::new(scene, 50.0, gyro, accel).unwrap()
    }

    fn patient_with(recs: Vec<RawRecording>) -> PatientRecord {
        PatientRecord {
            patient_id: "p1".to_string(),
            label: Label::H,
            disease_class: DiseaseClass::None,
            demographics: Demographics { age: 50, sex: Sex::M, height_cm: 175.0, weight_kg: 80.0 },
            recordings: recs.into_iter().map(|r| (r.scene(), r)).collect::<BTreeMap<_, _>>(),
        }
    }

    #[test]
    fn trim_counts() {
        let rec = sine_recording(ScenePosition::M1, 1000, 0.25, 0.0);
        assert_eq!(trim_transient(&rec, 5.0).unwrap().len(), 750);
        assert_eq!(trim_transient(&rec, 0.0).unwrap(), rec);
        let short = sine_recording(ScenePosition::M1, 200, 0.25, 0.0);
        assert!(matches!(trim_transient(&short, 5.0), Err(Error::RecordingTooShort { .. })));
    }

    #[test]
    fn noiseless_patient_yields_three_examples() {
        // Maxima at t = 2, 6, 10, ... s; after the 5 s trim they sit at
        // samples 50, 250, 450, 650 -> three windows per scene.
        let recs = ScenePosition::ALL.iter().map(|&s| sine_recording(s, 1000, 0.25, 2.0)).collect();
        let out = preprocess_patient(&patient_with(recs), &DspConfig::default());
        assert_eq!(out.flag, None);
        assert_eq!(out.cycles_per_scene, [3; 5]);
        assert_eq!(out.examples.len(), 3);
        for (k, ex) in out.examples.iter().enumerate() {
            assert_eq!(ex.cycle_index, k);
            for (s, c) in ex.scenes.iter().enumerate() {
                assert_eq!(c.scene, ScenePosition::ALL[s]);
                assert!(c.channels.iter().all(|ch| ch.len() == CYCLE_LEN));
            }
        }
    }

    #[test]
    fn example_count_is_min_over_scenes() {
        // Faster breathing on one scene gives it more cycles.
        let mut recs: Vec<RawRecording> = ScenePosition::ALL.iter().map(|&s| sine_recording(s, 1000, 0.25, 2.0)).collect();
        recs[3] = sine_recording(ScenePosition::T1, 1000, 0.4, 2.0);
        let out = preprocess_patient(&patient_with(recs), &DspConfig::default());
        assert!(out.cycles_per_scene[3] > 3);
        assert_eq!(out.examples.len(), 3);
    }

    #[test]
    fn flat_scene_flags_patient() {
        let mut recs: Vec<RawRecording> = ScenePosition::ALL.iter().map(|&s| sine_recording(s, 1000, 0.25, 2.0)).collect();
        recs[2] = RawRecording::new(ScenePosition::M1, 50.0, vec![[0.1, 0.2, 0.3]; 1000], vec![[0.0, 0.0, 9.81]; 1000]).unwrap();
        let out = preprocess_patient(&patient_with(recs), &DspConfig::default());
        assert!(out.examples.is_empty());
        assert!(out.flag.is_some());
        assert_eq!(out.cycles_per_scene[2], 0);
    }

    #[test]
    fn incomplete_patient_is_flagged() {
        let recs = ScenePosition::ALL[..4].iter().map(|&s| sine_recording(s, 1000, 0.25, 2.0)).collect();
        let out = preprocess_patient(&patient_with(recs), &DspConfig::default());
        assert!(out.flag.unwrap().contains("L1"));
    }
}
