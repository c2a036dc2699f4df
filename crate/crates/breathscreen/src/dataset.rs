//! On-disk dataset: `manifest.csv` plus one signal file per (patient, scene).
//!
//! The manifest has one row per patient with columns `patient_id, label,
//! disease_class, age, sex, height_cm, weight_kg, Lx1, Rx1, M1, T1, L1`;
//! scene columns hold paths relative to the dataset root and may be empty.
//! Signal files start with the header `t,gx,gy,gz,ax,ay,az`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use breathscreen_core::data::{
    Dataset, Demographics, Diagnostic, DiseaseClass, Label, PatientRecord, RawRecording, ScenePosition, Sex,
};

use crate::error::{fs, Error, Result};

pub const MANIFEST: &str = "manifest.csv";
pub const SIGNAL_HEADER: [&str; 7] = ["t", "gx", "gy", "gz", "ax", "ay", "az"];
pub const NOMINAL_RATE_HZ: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
struct ManifestRow {
    patient_id: String,
    label: String,
    disease_class: String,
    age: String,
    sex: String,
    height_cm: String,
    weight_kg: String,
    Lx1: Option<String>,
    Rx1: Option<String>,
    M1: Option<String>,
    T1: Option<String>,
    L1: Option<String>,
}

impl ManifestRow {
    fn scene_path(&self, scene: ScenePosition) -> Option<&str> {
        let p = match scene {
            ScenePosition::Lx1 => &self.Lx1,
            ScenePosition::Rx1 => &self.Rx1,
            ScenePosition::M1 => &self.M1,
            ScenePosition::T1 => &self.T1,
            ScenePosition::L1 => &self.L1,
        };
        p.as_deref().map(str::trim).filter(|s| !s.is_empty())
    }

    fn header(&self) -> std::result::Result<(Label, DiseaseClass, Demographics), String> {
        fn num<T: std::str::FromStr>(field: &str, v: &str) -> std::result::Result<T, String> {
            v.trim().parse().map_err(|_| format!("bad {field} {v:?}"))
        }
        let label: Label = self.label.trim().parse().map_err(|_| format!("bad label {:?}", self.label))?;
        let disease_class: DiseaseClass =
            self.disease_class.trim().parse().map_err(|_| format!("bad disease_class {:?}", self.disease_class))?;
        let sex: Sex = self.sex.trim().parse().map_err(|_| format!("bad sex {:?}", self.sex))?;
        let demographics = Demographics {
            age: num("age", &self.age)?,
            sex,
            height_cm: num("height_cm", &self.height_cm)?,
            weight_kg: num("weight_kg", &self.weight_kg)?,
        };
        Ok((label, disease_class, demographics))
    }
}

/// Relative path used by [`save_dataset`] for one scene file.
pub fn signal_path(patient_id: &str, scene: ScenePosition) -> PathBuf {
    PathBuf::from("signals").join(format!("{patient_id}_{scene}.csv"))
}

/// Parse a signal file. The sample rate is `(n - 1) / (t_last - t_0)`,
/// snapped to the nearest integer when within 1e-6 relative of it.
pub fn read_signal(path: &Path, scene: ScenePosition) -> Result<RawRecording> {
    let text = fs::read_to_string(path)?;
    parse_signal(&text, scene).map_err(|m| Error::format(path, m))
}

pub fn parse_signal(text: &str, scene: ScenePosition) -> std::result::Result<RawRecording, String> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(SIGNAL_HEADER) {
        return Err(format!("expected header {:?}, found {:?}", SIGNAL_HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")));
    }
    let (mut t, mut gyro, mut accel) = (Vec::new(), Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let row = i + 2;
        let mut v = [0.0f64; 7];
        for (k, field) in rec.iter().enumerate() {
            v[k] = field.parse().map_err(|_| format!("line {row}: column {} is not a number: {field:?}", SIGNAL_HEADER[k]))?;
            if !v[k].is_finite() {
                return Err(format!("line {row}: non-finite {}", SIGNAL_HEADER[k]));
            }
        }
        if let Some(&prev) = t.last() {
            if v[0] <= prev {
                return Err(format!("line {row}: t is not increasing ({} after {prev})", v[0]));
            }
        }
        t.push(v[0]);
        gyro.push([v[1], v[2], v[3]]);
        accel.push([v[4], v[5], v[6]]);
    }
    if t.is_empty() {
        return Err("no samples".into());
    }
    let rate = sample_rate(&t)?;
    RawRecording::new(scene, rate, gyro, accel).map_err(|e| e.to_string())
}

fn sample_rate(t: &[f64]) -> std::result::Result<f64, String> {
    let n = t.len();
    if n < 2 {
        return Ok(NOMINAL_RATE_HZ);
    }
    let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
    if let Some(w) = t.windows(2).position(|w| ((w[1] - w[0]) - dt).abs() > 0.1 * dt) {
        return Err(format!("irregular sampling near t = {} (spacing {} vs mean {dt})", t[w], t[w + 1] - t[w]));
    }
    let rate = 1.0 / dt;
    let snapped = rate.round();
    Ok(if (rate - snapped).abs() <= 1e-6 * snapped { snapped } else { rate })
}

pub fn format_signal(rec: &RawRecording) -> String {
    let mut out = SIGNAL_HEADER.join(",");
    out.push('\n');
    let rate = rec.sample_rate_hz();
    for (i, (g, a)) in rec.gyro().iter().zip(rec.accel()).enumerate() {
        let t = i as f64 / rate;
        let _ = writeln!(out, "{t},{},{},{},{},{},{}", g[0], g[1], g[2], a[0], a[1], a[2]);
    }
    out
}

/// Load every patient listed in `root/manifest.csv`.
///
/// Only a missing or unreadable manifest is fatal. Patients whose row or
/// signal files are malformed are skipped; patients with empty scene
/// columns are kept and flagged as not trainable. Both end up in
/// [`Dataset::diagnostics`].
pub fn load_dataset(root: &Path) -> Result<Dataset> {
    let manifest = root.join(MANIFEST);
    if !manifest.is_file() {
        return Err(Error::ManifestNotFound(root.to_path_buf()));
    }
    let text = fs::read_to_string(&manifest)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut ds = Dataset::default();
    let mut seen = BTreeMap::new();
    for (i, row) in rdr.deserialize::<ManifestRow>().enumerate() {
        let row = row.map_err(|e| Error::format(&manifest, e))?;
        let skip = |ds: &mut Dataset, message: String| {
            ds.diagnostics.push(Diagnostic { patient_id: row.patient_id.clone(), message, skipped: true })
        };
        if let Some(prev) = seen.insert(row.patient_id.clone(), i) {
            skip(&mut ds, format!("duplicate patient id (first listed on row {})", prev + 1));
            continue;
        }
        let (label, disease_class, demographics) = match row.header() {
            Ok(h) => h,
            Err(m) => {
                skip(&mut ds, m);
                continue;
            }
        };
        let mut recordings = BTreeMap::new();
        let mut failure = None;
        for scene in ScenePosition::ALL {
            let Some(rel) = row.scene_path(scene) else { continue };
            match read_signal(&root.join(rel), scene) {
                Ok(rec) => {
                    recordings.insert(scene, rec);
                }
                Err(e) => {
                    failure = Some(format!("scene {scene}: {e}"));
                    break;
                }
            }
        }
        if let Some(m) = failure {
            skip(&mut ds, m);
            continue;
        }
        let p = PatientRecord { patient_id: row.patient_id.clone(), label, disease_class, demographics, recordings };
        if let Err(e) = p.validate() {
            skip(&mut ds, e.to_string());
            continue;
        }
        if !p.is_complete() {
            let missing: Vec<&str> = p.missing_scenes().iter().map(|s| s.as_str()).collect();
            ds.diagnostics.push(Diagnostic {
                patient_id: p.patient_id.clone(),
                message: format!("not trainable: missing scenes {}", missing.join(",")),
                skipped: false,
            });
        }
        ds.patients.push(p);
    }
    Ok(ds)
}

/// Write `ds` in the format read by [`load_dataset`].
pub fn save_dataset(ds: &Dataset, root: &Path) -> Result<()> {
    fs::create_dir_all(root)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for p in &ds.patients {
        let path = |s: ScenePosition| {
            p.recordings.contains_key(&s).then(|| signal_path(&p.patient_id, s).to_string_lossy().replace('\\', "/"))
        };
        let d = &p.demographics;
        let row = ManifestRow {
            patient_id: p.patient_id.clone(),
            label: p.label.as_str().into(),
            disease_class: p.disease_class.as_str().into(),
            age: d.age.to_string(),
            sex: d.sex.as_str().into(),
            height_cm: d.height_cm.to_string(),
            weight_kg: d.weight_kg.to_string(),
            Lx1: path(ScenePosition::Lx1),
            Rx1: path(ScenePosition::Rx1),
            M1: path(ScenePosition::M1),
            T1: path(ScenePosition::T1),
            L1: path(ScenePosition::L1),
        };
        w.serialize(row).map_err(|e| Error::format(root.join(MANIFEST), e))?;
        for (scene, rec) in &p.recordings {
            fs::write(&root.join(signal_path(&p.patient_id, *scene)), format_signal(rec))?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::format(root.join(MANIFEST), e))?;
    fs::write(&root.join(MANIFEST), bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recording(scene: ScenePosition, n: usize) -> RawRecording {
        let gyro = (0..n).map(|i| [0.01 * i as f64, (i as f64 * 0.3).sin(), -1e-7]).collect();
        let accel = (0..n).map(|i| [0.1, 9.81, 1.0 / (i + 3) as f64]).collect();
        RawRecording::new(scene, 50.0, gyro, accel).unwrap()
    }

    fn patient(id: &str, scenes: &[ScenePosition]) -> PatientRecord {
        PatientRecord {
            patient_id: id.into(),
            label: Label::NH,
            disease_class: DiseaseClass::AorticAneurysm,
            demographics: Demographics { age: 61, sex: Sex::M, height_cm: 178.5, weight_kg: 82.25 },
            recordings: scenes.iter().map(|&s| (s, recording(s, 40))).collect(),
        }
    }

    #[test]
    fn signal_text_round_trip() {
        let rec = recording(ScenePosition::T1, 25);
        let text = format_signal(&rec);
        let back = parse_signal(&text, ScenePosition::T1).unwrap();
        assert_eq!(back, rec);
        assert_eq!(format_signal(&back), text);
    }

    #[test]
    fn rate_is_inferred_and_snapped() {
        let text = "t,gx,gy,gz,ax,ay,az\n0,0,0,0,0,0,0\n0.04,0,0,0,0,0,0\n0.08,1,0,0,0,0,0\n";
        assert_eq!(parse_signal(text, ScenePosition::M1).unwrap().sample_rate_hz(), 25.0);
    }

    #[test]
    fn malformed_signals_are_rejected() {
        for bad in [
            "time,gx,gy,gz,ax,ay,az\n0,0,0,0,0,0,0\n",
            "t,gx,gy,gz,ax,ay,az\n",
            "t,gx,gy,gz,ax,ay,az\n0,0,0,0,0,0,0\n0,0,0,0,0,0,0\n",
            "t,gx,gy,gz,ax,ay,az\n0,0,x,0,0,0,0\n",
            "t,gx,gy,gz,ax,ay,az\n0,0,NaN,0,0,0,0\n",
            "t,gx,gy,gz,ax,ay,az\n0,0,0,0,0,0\n",
        ] {
            assert!(parse_signal(bad, ScenePosition::M1).is_err(), "{bad}");
        }
    }

    #[test]
    fn dataset_round_trip_and_flags() {
        let dir = tempfile::tempdir().unwrap();
        let ds = Dataset::new(vec![
            patient("A", &ScenePosition::ALL),
            patient("B", &ScenePosition::ALL[..4]),
        ]);
        save_dataset(&ds, dir.path()).unwrap();
        let back = load_dataset(dir.path()).unwrap();
        assert_eq!(back.patients, ds.patients);
        assert_eq!(back.non_trainable_ids(), vec!["B"]);
        assert_eq!(back.diagnostics.len(), 1);
        assert!(!back.diagnostics[0].skipped);
    }

    #[test]
    fn broken_signal_skips_patient() {
        let dir = tempfile::tempdir().unwrap();
        let ds = Dataset::new(vec![patient("A", &ScenePosition::ALL), patient("B", &ScenePosition::ALL)]);
        save_dataset(&ds, dir.path()).unwrap();
        std::fs::write(dir.path().join(signal_path("B", ScenePosition::M1)), "garbage\n").unwrap();
        let back = load_dataset(dir.path()).unwrap();
        assert_eq!(back.len(), 1);
        assert!(back.diagnostics[0].skipped && back.diagnostics[0].patient_id == "B");
    }

    #[test]
    fn missing_manifest_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(err.to_string().contains("manifest not found"));
    }
}
