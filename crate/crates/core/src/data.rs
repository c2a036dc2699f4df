//! Domain types: scenes, raw recordings, patients, breathing cycles and the
//! per-cycle model input.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::MeanSd;

/// Phone placement for one recording. Lx1, Rx1 and M1 sit on the chest,
/// T1 and L1 on the abdomen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScenePosition {
    Lx1,
    Rx1,
    M1,
    T1,
    L1,
}

impl ScenePosition {
    /// Fixed order used for embedding concatenation and file layouts.
    pub const ALL: [ScenePosition; 5] = [
        ScenePosition::Lx1,
        ScenePosition::Rx1,
        ScenePosition::M1,
        ScenePosition::T1,
        ScenePosition::L1,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScenePosition::Lx1 => "Lx1",
            ScenePosition::Rx1 => "Rx1",
            ScenePosition::M1 => "M1",
            ScenePosition::T1 => "T1",
            ScenePosition::L1 => "L1",
        }
    }
}

impl fmt::Display for ScenePosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenePosition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ScenePosition::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown scene position {s:?}")))
    }
}

/// Binary screening label. `NH` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    H,
    NH,
}

impl Label {
    pub fn target(self) -> f64 {
        match self {
            Label::H => 0.0,
            Label::NH => 1.0,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::NH
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::H => "H",
            Label::NH => "NH",
        }
    }
}

impl FromStr for Label {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H" => Ok(Label::H),
            "NH" => Ok(Label::NH),
            _ => Err(Error::InvalidConfig(format!("unknown label {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DiseaseClass {
    None,
    ValvularInsufficiency,
    CoronaryArteryDisease,
    AorticAneurysm,
    Unspecified,
}

impl DiseaseClass {
    pub const ALL: [DiseaseClass; 5] = [
        DiseaseClass::None,
        DiseaseClass::ValvularInsufficiency,
        DiseaseClass::CoronaryArteryDisease,
        DiseaseClass::AorticAneurysm,
        DiseaseClass::Unspecified,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DiseaseClass::None => "None",
            DiseaseClass::ValvularInsufficiency => "ValvularInsufficiency",
            DiseaseClass::CoronaryArteryDisease => "CoronaryArteryDisease",
            DiseaseClass::AorticAneurysm => "AorticAneurysm",
            DiseaseClass::Unspecified => "Unspecified",
        }
    }
}

impl FromStr for DiseaseClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        DiseaseClass::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown disease class {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sex {
    M,
    F,
}

impl FromStr for Sex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "M" => Ok(Sex::M),
            "F" => Ok(Sex::F),
            _ => Err(Error::InvalidConfig(format!("unknown sex {s:?}"))),
        }
    }
}

impl Sex {
    pub fn as_str(self) -> &'static str {
        match self {
            Sex::M => "M",
            Sex::F => "F",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Demographics {
    pub age: u32,
    pub sex: Sex,
    pub height_cm: f64,
    pub weight_kg: f64,
}

impl Demographics {
    /// Numeric features optionally appended to the head input.
    pub fn features(&self) -> [f64; 3] {
        [self.age as f64, self.height_cm, self.weight_kg]
    }
}

/// One scene's 6-channel IMU time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecording {
    scene: ScenePosition,
    sample_rate_hz: f64,
    /// Angular velocity (g_x, g_y, g_z) in rad/s.
    gyro: Vec<[f64; 3]>,
    /// Linear acceleration (a_x, a_y, a_z) in m/s^2.
    accel: Vec<[f64; 3]>,
}

impl RawRecording {
    pub fn new(
        scene: ScenePosition,
        sample_rate_hz: f64,
        gyro: Vec<[f64; 3]>,
        accel: Vec<[f64; 3]>,
    ) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidRecording(format!("sample rate must be positive, got {sample_rate_hz}")));
        }
        if gyro.is_empty() || gyro.len() != accel.len() {
            return Err(Error::InvalidRecording(format!(
                "gyro and accel must be non-empty and equally long ({} vs {})",
                gyro.len(),
                accel.len()
            )));
        }
        let finite = gyro.iter().chain(accel.iter()).all(|v| v.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(Error::NonFinite("recording samples"));
        }
        Ok(RawRecording { scene, sample_rate_hz, gyro, accel })
    }

    pub fn scene(&self) -> ScenePosition {
        self.scene
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn gyro(&self) -> &[[f64; 3]] {
        &self.gyro
    }

    pub fn accel(&self) -> &[[f64; 3]] {
        &self.accel
    }

    pub fn len(&self) -> usize {
        self.gyro.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gyro.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate_hz
    }

    /// Channel `c` in the order g_x, g_y, g_z, a_x, a_y, a_z.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        match c {
            0..=2 => self.gyro.iter().map(|v| v[c]).collect(),
            3..=5 => self.accel.iter().map(|v| v[c - 3]).collect(),
            _ => panic!("channel index {c} out of range"),
        }
    }

    pub fn gyro_y(&self) -> Vec<f64> {
        self.channel(1)
    }

    /// Samples `[start, end)` as a new recording.
    pub fn slice(&self, start: usize, end: usize) -> Result<RawRecording> {
        if start >= end || end > self.len() {
            return Err(Error::Shape(format!("slice [{start}, {end}) of {} samples", self.len())));
        }
        Ok(RawRecording {
            scene: self.scene,
            sample_rate_hz: self.sample_rate_hz,
            gyro: self.gyro[start..end].to_vec(),
            accel: self.accel[start..end].to_vec(),
        })
    }
}

/// A patient with labels, demographics and up to five scene recordings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub patient_id: String,
    pub label: Label,
    pub disease_class: DiseaseClass,
    pub demographics: Demographics,
    pub recordings: BTreeMap<ScenePosition, RawRecording>,
}

impl PatientRecord {
    /// Checks the label/disease consistency and demographic ranges.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Error::InvalidPatient { patient_id: self.patient_id.clone(), reason };
        if self.patient_id.is_empty() {
            return Err(fail("empty patient id".to_string()));
        }
        if (self.label == Label::H) != (self.disease_class == DiseaseClass::None) {
            return Err(fail(format!(
                "label {} inconsistent with disease class {}",
                self.label.as_str(),
                self.disease_class.as_str()
            )));
        }
        let d = &self.demographics;
        if !(d.height_cm.is_finite() && d.height_cm > 0.0 && d.weight_kg.is_finite() && d.weight_kg > 0.0) {
            return Err(fail("height and weight must be positive".to_string()));
        }
        for (scene, rec) in &self.recordings {
            if rec.scene() != *scene {
                return Err(fail(format!("recording keyed {scene} claims scene {}", rec.scene())));
            }
        }
        Ok(())
    }

    /// All five scenes present.
    pub fn is_complete(&self) -> bool {
        ScenePosition::ALL.iter().all(|s| self.recordings.contains_key(s))
    }

    pub fn missing_scenes(&self) -> Vec<ScenePosition> {
        ScenePosition::ALL.into_iter().filter(|s| !self.recordings.contains_key(s)).collect()
    }
}

/// A problem found while assembling a dataset. Loading never aborts on
/// per-patient problems; they end up here instead.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub patient_id: String,
    pub message: String,
    /// True when the patient was dropped entirely, false when it was kept
    /// but marked as not trainable.
    pub skipped: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub patients: Vec<PatientRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Dataset {
    pub fn new(patients: Vec<PatientRecord>) -> Self {
        Dataset { patients, diagnostics: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.patients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patients.is_empty()
    }

    pub fn get(&self, patient_id: &str) -> Option<&PatientRecord> {
        self.patients.iter().find(|p| p.patient_id == patient_id)
    }

    /// Patients with every scene present.
    pub fn trainable(&self) -> impl Iterator<Item = &PatientRecord> {
        self.patients.iter().filter(|p| p.is_complete())
    }

    pub fn non_trainable_ids(&self) -> Vec<&str> {
        self.patients.iter().filter(|p| !p.is_complete()).map(|p| p.patient_id.as_str()).collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.patients.iter().filter(|p| p.label == label).count()
    }
}

/// One segmented respiratory act of one scene, resampled to a fixed length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreathingCycle {
    pub scene: ScenePosition,
    /// Six channels (g_x, g_y, g_z, a_x, a_y, a_z), each of the resampled
    /// length.
    pub channels: [Vec<f64>; 6],
    /// Inhale/exhale boundary in resampled coordinates, when the window
    /// encloses a minimum.
    pub phase_bound: Option<usize>,
    /// `[start, end)` into the trimmed raw recording.
    pub source_window: (usize, usize),
}

impl BreathingCycle {
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.channels.iter().all(|c| c.iter().all(|x| x.is_finite()))
    }
}

/// The k-th aligned breathing cycle of all five scenes for one patient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientExample {
    pub patient_id: String,
    pub label: Label,
    pub disease_class: DiseaseClass,
    pub demographics: Demographics,
    pub cycle_index: usize,
    /// Indexed by [`ScenePosition::index`].
    pub scenes: [BreathingCycle; 5],
}

impl PatientExample {
    pub fn scene(&self, scene: ScenePosition) -> &BreathingCycle {
        &self.scenes[scene.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub count: usize,
    pub age: Option<MeanSd>,
    pub height_cm: Option<MeanSd>,
    pub weight_kg: Option<MeanSd>,
}

impl GroupSummary {
    fn of<'a>(patients: impl Iterator<Item = &'a PatientRecord> + Clone) -> Self {
        let col = |f: fn(&Demographics) -> f64| -> Vec<f64> { patients.clone().map(|p| f(&p.demographics)).collect() };
        GroupSummary {
            count: patients.clone().count(),
            age: MeanSd::of(&col(|d| d.age as f64)),
            height_cm: MeanSd::of(&col(|d| d.height_cm)),
            weight_kg: MeanSd::of(&col(|d| d.weight_kg)),
        }
    }
}

/// Per-label and per-disease demographic table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemographicSummary {
    pub healthy: GroupSummary,
    pub non_healthy: GroupSummary,
    pub by_disease: Vec<(DiseaseClass, GroupSummary)>,
    pub total: GroupSummary,
    /// Patients lacking at least one scene.
    pub non_trainable: usize,
    /// Scene recordings actually present, per scene.
    pub recordings_per_scene: Vec<(ScenePosition, usize)>,
}

pub fn dataset_summary(ds: &Dataset) -> DemographicSummary {
    let ps = &ds.patients;
    DemographicSummary {
        healthy: GroupSummary::of(ps.iter().filter(|p| p.label == Label::H)),
        non_healthy: GroupSummary::of(ps.iter().filter(|p| p.label == Label::NH)),
        by_disease: DiseaseClass::ALL
            .into_iter()
            .map(|d| (d, GroupSummary::of(ps.iter().filter(move |p| p.disease_class == d))))
            .collect(),
        total: GroupSummary::of(ps.iter()),
        non_trainable: ps.iter().filter(|p| !p.is_complete()).count(),
        recordings_per_scene: ScenePosition::ALL
            .into_iter()
            .map(|s| (s, ps.iter().filter(|p| p.recordings.contains_key(&s)).count()))
            .collect(),
    }
}
