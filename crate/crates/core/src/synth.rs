//! Parametric multi-scene IMU sessions with known ground truth.
//!
//! Each scene's gyroscope-y channel is a periodic breathing waveform whose
//! maxima fall exactly at cycle starts. A warped phase gives the waveform an
//! asymmetric inhale/exhale split; two harmonics, slow drift and white noise
//! are added on top. The remaining channels carry lagged, scaled copies and
//! the accelerometer channels a gravity offset. The first seconds carry a
//! band-limited motion burst.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Demographics, DiseaseClass, Label, PatientRecord, RawRecording, ScenePosition, Sex};
use crate::error::{Error, Result};
use crate::math;
use crate::rng::{self, SeedRng};

const GRAVITY: f64 = 9.81;
/// Gravity tilt of the phone per scene, radians.
const SCENE_TILT: [f64; 5] = [0.15, -0.15, 0.0, 0.35, -0.3];
/// Amplitude of g_x, g_z, a_x, a_y, a_z relative to g_y.
const CHANNEL_GAIN: [f64; 5] = [0.3, 0.2, 0.12, 0.1, 0.15];
/// Channel lag (fraction of a cycle) at full separation, scene 0.
const MAX_CHANNEL_LAG: f64 = 0.08;

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Range { lo, hi }
    }

    pub const fn fixed(v: f64) -> Self {
        Range { lo: v, hi: v }
    }

    fn sample(&self, rng: &mut SeedRng) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng::uniform(rng, self.lo, self.hi)
        }
    }

    fn is_valid_positive(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo > 0.0 && self.lo <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerClass<T> {
    pub healthy: T,
    pub nonhealthy: T,
}

impl<T: Copy> PerClass<T> {
    pub const fn both(v: T) -> Self {
        PerClass { healthy: v, nonhealthy: v }
    }

    pub fn get(&self, label: Label) -> T {
        match label {
            Label::H => self.healthy,
            Label::NH => self.nonhealthy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortSpec {
    pub n_healthy: usize,
    pub n_nonhealthy: usize,
    pub breath_rate_hz: PerClass<Range>,
    /// Gyro-y peak amplitude (rad/s) per scene, in [`ScenePosition::ALL`]
    /// order.
    pub amplitude: PerClass<[Range; 5]>,
    /// 0 gives identical classes; 1 gives the strongest NH morphology.
    pub class_separation: f64,
    pub transient_duration_s: f64,
    /// Peak amplitude of the initial motion burst, relative to the scene
    /// amplitude.
    pub transient_gain: f64,
    pub noise_std: f64,
    /// Peak amplitude of the slow baseline wander, rad/s.
    pub drift_amplitude: f64,
    /// Relative spread of each scene's rate around the patient's rate.
    pub rate_jitter: f64,
    /// Cycle phase at t = 0 for every scene, in cycles `[0, 1)`. Random when
    /// unset.
    pub initial_phase: Option<f64>,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub seed: u64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec {
            n_healthy: 10,
            n_nonhealthy: 10,
            breath_rate_hz: PerClass::both(Range::new(0.20, 0.30)),
            amplitude: PerClass::both([
                Range::new(0.08, 0.14),
                Range::new(0.08, 0.14),
                Range::new(0.08, 0.14),
                Range::new(0.05, 0.10),
                Range::new(0.05, 0.10),
            ]),
            class_separation: 0.5,
            transient_duration_s: 5.0,
            transient_gain: 4.0,
            noise_std: 0.004,
            drift_amplitude: 0.01,
            rate_jitter: 0.03,
            initial_phase: None,
            duration_s: 20.0,
            sample_rate_hz: 50.0,
            seed: 0,
        }
    }
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(format!("cohort spec: {what}")));
        for label in [Label::H, Label::NH] {
            if !self.breath_rate_hz.get(label).is_valid_positive() {
                return bad("breath rate range must be positive with lo <= hi");
            }
            if !self.amplitude.get(label).iter().all(Range::is_valid_positive) {
                return bad("amplitude ranges must be positive with lo <= hi");
            }
        }
        if !(0.0..=1.0).contains(&self.class_separation) {
            return bad("class_separation outside [0, 1]");
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return bad("sample rate must be positive");
        }
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return bad("duration must be positive");
        }
        if !(self.transient_duration_s >= 0.0 && self.transient_duration_s < self.duration_s) {
            return bad("transient must be shorter than the recording");
        }
        let nonneg = [self.noise_std, self.drift_amplitude, self.transient_gain];
        if !nonneg.iter().all(|v| v.is_finite() && *v >= 0.0) {
            return bad("noise, drift and transient gain must be non-negative");
        }
        if !(0.0..0.5).contains(&self.rate_jitter) {
            return bad("rate_jitter outside [0, 0.5)");
        }
        if let Some(p) = self.initial_phase {
            if !(0.0..1.0).contains(&p) {
                return bad("initial_phase outside [0, 1)");
            }
        }
        Ok(())
    }

    pub fn samples_per_scene(&self) -> usize {
        math::round(self.duration_s * self.sample_rate_hz) as usize
    }
}

/// Waveform shape parameters of one class at a given separation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Morphology {
    /// Fraction of the cycle from maximum to minimum.
    pub inhale_fraction: f64,
    pub second_harmonic: f64,
    pub third_harmonic: f64,
    /// Lag of the secondary channels behind g_y, fraction of a cycle.
    pub channel_lag: f64,
}

impl Morphology {
    pub fn of(label: Label, separation: f64) -> Self {
        let s = match label {
            Label::H => 0.0,
            Label::NH => separation,
        };
        Morphology {
            inhale_fraction: 0.5 + 0.2 * s,
            second_harmonic: 0.08 + 0.22 * s,
            third_harmonic: 0.13 * s,
            channel_lag: MAX_CHANNEL_LAG * s,
        }
    }

    fn warp(&self, u: f64) -> f64 {
        let r = self.inhale_fraction;
        if u < r {
            0.5 * u / r
        } else {
            0.5 + 0.5 * (u - r) / (1.0 - r)
        }
    }

    /// Unit-peak waveform at cycle phase `u` (any real; taken mod 1).
    pub fn shape(&self, u: f64) -> f64 {
        let w = self.warp(u - math::floor(u));
        let (a2, a3) = (self.second_harmonic, self.third_harmonic);
        (math::cos(2.0 * PI * w) + a2 * math::cos(4.0 * PI * w) + a3 * math::cos(6.0 * PI * w)) / (1.0 + a2 + a3)
    }
}

/// What the generator put into one scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneTruth {
    pub scene: ScenePosition,
    pub rate_hz: f64,
    /// Cycle phase at t = 0.
    pub phase: f64,
    pub amplitude: f64,
    pub morphology: Morphology,
    /// Fractional sample positions of every g_y maximum (cycle start)
    /// inside the recording.
    pub cycle_starts: Vec<f64>,
    /// Fractional sample positions of every inhale/exhale boundary.
    pub phase_bounds: Vec<f64>,
}

impl SceneTruth {
    /// Ground-truth cycles `[start, next start)` in samples.
    pub fn cycles(&self) -> Vec<(f64, f64)> {
        self.cycle_starts.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientTruth {
    pub patient_id: String,
    pub label: Label,
    pub scenes: Vec<SceneTruth>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCohort {
    pub dataset: Dataset,
    pub truth: Vec<PatientTruth>,
}

const NH_CLASSES: [DiseaseClass; 4] = [
    DiseaseClass::ValvularInsufficiency,
    DiseaseClass::CoronaryArteryDisease,
    DiseaseClass::AorticAneurysm,
    DiseaseClass::Unspecified,
];

/// Generate `n_healthy` H patients followed by `n_nonhealthy` NH patients.
pub fn generate_cohort(spec: &CohortSpec) -> Result<SynthCohort> {
    spec.validate()?;
    let total = spec.n_healthy + spec.n_nonhealthy;
    let mut patients = Vec::with_capacity(total);
    let mut truth = Vec::with_capacity(total);
    for i in 0..total {
        let (label, disease_class) = if i < spec.n_healthy {
            (Label::H, DiseaseClass::None)
        } else {
            (Label::NH, NH_CLASSES[(i - spec.n_healthy) % NH_CLASSES.len()])
        };
        let (rec, t) = generate_patient(spec, i, label, disease_class)?;
        patients.push(rec);
        truth.push(t);
    }
    Ok(SynthCohort { dataset: Dataset::new(patients), truth })
}

fn generate_patient(
    spec: &CohortSpec,
    index: usize,
    label: Label,
    disease_class: DiseaseClass,
) -> Result<(PatientRecord, PatientTruth)> {
    let patient_id = format!("P{:03}", index + 1);
    let mut prng = rng::stream(spec.seed, &[rng::tag("synth.patient"), index as u64]);
    let demographics = Demographics {
        age: rng::uniform(&mut prng, 45.0, 85.0) as u32,
        sex: if rng::uniform(&mut prng, 0.0, 1.0) < 0.5 { Sex::M } else { Sex::F },
        height_cm: 170.0 + 8.0 * rng::normal(&mut prng).clamp(-3.0, 3.0),
        weight_kg: 78.0 + 12.0 * rng::normal(&mut prng).clamp(-3.0, 3.0),
    };
    let base_rate = spec.breath_rate_hz.get(label).sample(&mut prng);
    let morph = Morphology::of(label, spec.class_separation);
    let mut recordings = BTreeMap::new();
    let mut scenes = Vec::with_capacity(5);
    for scene in ScenePosition::ALL {
        let mut srng = rng::stream(spec.seed, &[rng::tag("synth.scene"), index as u64, scene.index() as u64]);
        let (rec, t) = generate_scene(spec, scene, label, base_rate, morph, &mut srng)?;
        recordings.insert(scene, rec);
        scenes.push(t);
    }
    let record = PatientRecord { patient_id: patient_id.clone(), label, disease_class, demographics, recordings };
    Ok((record, PatientTruth { patient_id, label, scenes }))
}

fn generate_scene(
    spec: &CohortSpec,
    scene: ScenePosition,
    label: Label,
    base_rate: f64,
    morph: Morphology,
    rng: &mut SeedRng,
) -> Result<(RawRecording, SceneTruth)> {
    let fs = spec.sample_rate_hz;
    let n = spec.samples_per_scene();
    let j = scene.index();
    let jitter = if spec.rate_jitter > 0.0 { rng::uniform(rng, -spec.rate_jitter, spec.rate_jitter) } else { 0.0 };
    let rate = base_rate * (1.0 + jitter);
    let random_phase = rng::uniform(rng, 0.0, 1.0);
    let phase = spec.initial_phase.unwrap_or(random_phase);
    let amp = spec.amplitude.get(label)[j].sample(rng);
    let lag = morph.channel_lag * (1.0 + 0.25 * j as f64);
    let lags = [lag, -lag, 0.5 * lag, lag, -0.5 * lag];

    // Per channel: drift frequency (Hz) and phase.
    let drift: [(f64, f64); 6] = core::array::from_fn(|_| (rng::uniform(rng, 0.02, 0.06), rng::uniform(rng, 0.0, 2.0 * PI)));
    // Band-limited burst: a few random sinusoids in 0.5..3 Hz per channel.
    let burst: [[(f64, f64, f64); 6]; 6] = core::array::from_fn(|_| {
        core::array::from_fn(|_| (rng::uniform(rng, 0.5, 3.0), rng::uniform(rng, 0.0, 2.0 * PI), rng::uniform(rng, 0.3, 1.0)))
    });
    let t_burst = spec.transient_duration_s;

    let mut gyro = Vec::with_capacity(n);
    let mut accel = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / fs;
        let u = rate * t + phase;
        let mut ch = [0.0; 6];
        ch[1] = amp * morph.shape(u);
        let secondary = [0usize, 2, 3, 4, 5];
        for (k, &c) in secondary.iter().enumerate() {
            ch[c] = amp * CHANNEL_GAIN[k] * morph.shape(u - lags[k]);
        }
        ch[3] += GRAVITY * math::sin(SCENE_TILT[j]);
        ch[5] += GRAVITY * math::cos(SCENE_TILT[j]);
        for (c, v) in ch.iter_mut().enumerate() {
            let gain = if c == 1 { 1.0 } else { 0.5 };
            let (fd, pd) = drift[c];
            *v += gain * spec.drift_amplitude * math::sin(2.0 * PI * fd * t + pd);
            if t < t_burst {
                let taper = math::cos(0.5 * PI * t / t_burst);
                let taper = taper * taper;
                let mut b = 0.0;
                for &(f, p, a) in &burst[c] {
                    b += a * math::sin(2.0 * PI * f * t + p);
                }
                *v += spec.transient_gain * amp * taper * b / 3.0;
            }
            if spec.noise_std > 0.0 {
                *v += spec.noise_std * rng::normal(rng);
            }
        }
        gyro.push([ch[0], ch[1], ch[2]]);
        accel.push([ch[3], ch[4], ch[5]]);
    }

    // Maxima at u integer, phase boundaries at u = integer + inhale_fraction.
    let to_samples = |cycles: f64| (cycles - phase) / rate * fs;
    let last = (n - 1) as f64;
    let marks = |offset: f64| -> Vec<f64> {
        let k0 = math::floor(phase - offset) as i64;
        (k0..)
            .map(|k| to_samples(k as f64 + offset))
            .skip_while(|s| *s < 0.0)
            .take_while(|s| *s <= last)
            .collect()
    };
    let truth = SceneTruth {
        scene,
        rate_hz: rate,
        phase,
        amplitude: amp,
        morphology: morph,
        cycle_starts: marks(0.0),
        phase_bounds: marks(morph.inhale_fraction),
    };
    Ok((RawRecording::new(scene, fs, gyro, accel)?, truth))
}

/// Intersection over union of two half-open intervals.
pub fn interval_iou(a: (f64, f64), b: (f64, f64)) -> f64 {
    let inter = (a.1.min(b.1) - a.0.max(b.0)).max(0.0);
    let union = (a.1 - a.0) + (b.1 - b.0) - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Best IoU of each detected window (raw-recording sample coordinates)
/// against the ground-truth cycles.
pub fn window_ious(detected: &[(usize, usize)], truth: &SceneTruth) -> Vec<f64> {
    let gt = truth.cycles();
    detected
        .iter()
        .map(|&(s, e)| gt.iter().map(|&g| interval_iou((s as f64, e as f64), g)).fold(0.0, f64::max))
        .collect()
}
