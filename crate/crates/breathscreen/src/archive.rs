//! Cycle archive written by `preprocess`: one CSV per patient example
//! (`scene,sample,gx,gy,gz,ax,ay,az`, five scenes stacked) plus
//! `index.csv` describing each example, `windows.csv` with the source
//! window of every cycle and `patients.csv` with per-scene cycle counts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use breathscreen_core::data::{BreathingCycle, Demographics, DiseaseClass, Label, PatientExample, ScenePosition, Sex};
use breathscreen_core::dsp::PreprocessOutcome;

use crate::error::{fs, Error, Result};

pub const INDEX: &str = "index.csv";
pub const WINDOWS: &str = "windows.csv";
pub const PATIENTS: &str = "patients.csv";
pub const CYCLE_HEADER: &str = "scene,sample,gx,gy,gz,ax,ay,az";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct IndexRow {
    file: String,
    patient_id: String,
    label: String,
    disease_class: String,
    age: u32,
    sex: String,
    height_cm: f64,
    weight_kg: f64,
    cycle_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WindowRow {
    patient_id: String,
    cycle_index: usize,
    scene: String,
    start: usize,
    end: usize,
    phase_bound: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRow {
    pub patient_id: String,
    pub examples: usize,
    #[serde(rename = "Lx1")]
    pub lx1: usize,
    #[serde(rename = "Rx1")]
    pub rx1: usize,
    #[serde(rename = "M1")]
    pub m1: usize,
    #[serde(rename = "T1")]
    pub t1: usize,
    #[serde(rename = "L1")]
    pub l1: usize,
    pub flag: String,
}

impl PatientRow {
    pub fn new(patient_id: &str, out: &PreprocessOutcome) -> Self {
        let c = out.cycles_per_scene;
        PatientRow {
            patient_id: patient_id.into(),
            examples: out.examples.len(),
            lx1: c[0],
            rx1: c[1],
            m1: c[2],
            t1: c[3],
            l1: c[4],
            flag: out.flag.clone().unwrap_or_default(),
        }
    }
}

pub fn example_path(ex: &PatientExample) -> PathBuf {
    PathBuf::from("cycles").join(format!("{}_{:03}.csv", ex.patient_id, ex.cycle_index))
}

fn cycle_text(ex: &PatientExample) -> String {
    let mut out = String::from(CYCLE_HEADER);
    out.push('\n');
    for c in &ex.scenes {
        for i in 0..c.len() {
            let ch = &c.channels;
            let _ = writeln!(out, "{},{i},{},{},{},{},{},{}", c.scene, ch[0][i], ch[1][i], ch[2][i], ch[3][i], ch[4][i], ch[5][i]);
        }
    }
    out
}

fn csv_bytes<T: Serialize>(rows: &[T], path: &Path) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::format(path, e))?;
    }
    w.into_inner().map_err(|e| Error::format(path, e))
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path)?;
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::format(path, e))
}

/// Write `examples` and the per-patient summary `patients` under `root`.
pub fn save_archive(examples: &[PatientExample], patients: &[PatientRow], root: &Path) -> Result<()> {
    let mut index = Vec::with_capacity(examples.len());
    let mut windows = Vec::new();
    for ex in examples {
        let file = example_path(ex);
        fs::write(&root.join(&file), cycle_text(ex))?;
        let d = &ex.demographics;
        index.push(IndexRow {
            file: file.to_string_lossy().replace('\\', "/"),
            patient_id: ex.patient_id.clone(),
            label: ex.label.as_str().into(),
            disease_class: ex.disease_class.as_str().into(),
            age: d.age,
            sex: d.sex.as_str().into(),
            height_cm: d.height_cm,
            weight_kg: d.weight_kg,
            cycle_index: ex.cycle_index,
        });
        windows.extend(ex.scenes.iter().map(|c| WindowRow {
            patient_id: ex.patient_id.clone(),
            cycle_index: ex.cycle_index,
            scene: c.scene.as_str().into(),
            start: c.source_window.0,
            end: c.source_window.1,
            phase_bound: c.phase_bound,
        }));
    }
    for (name, bytes) in [
        (INDEX, csv_bytes(&index, &root.join(INDEX))?),
        (WINDOWS, csv_bytes(&windows, &root.join(WINDOWS))?),
        (PATIENTS, csv_bytes(patients, &root.join(PATIENTS))?),
    ] {
        fs::write(&root.join(name), bytes)?;
    }
    Ok(())
}

pub fn is_archive(root: &Path) -> bool {
    root.join(INDEX).is_file()
}

fn parse_cycles(text: &str, path: &Path) -> Result<[Vec<[f64; 6]>; 5]> {
    let bad = |m: String| Error::format(path, m);
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(CYCLE_HEADER) {
        return Err(bad(format!("expected header {CYCLE_HEADER}")));
    }
    let mut scenes: [Vec<[f64; 6]>; 5] = Default::default();
    for (n, line) in lines.enumerate() {
        let mut it = line.split(',');
        let scene: ScenePosition = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(format!("line {}: bad scene", n + 2)))?;
        let sample: usize = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad(format!("line {}: bad sample", n + 2)))?;
        let rows = &mut scenes[scene.index()];
        if sample != rows.len() {
            return Err(bad(format!("line {}: sample {sample} out of order", n + 2)));
        }
        let mut v = [0.0; 6];
        for x in v.iter_mut() {
            *x = it
                .next()
                .and_then(|s| s.parse().ok())
                .filter(|x: &f64| x.is_finite())
                .ok_or_else(|| bad(format!("line {}: bad value", n + 2)))?;
        }
        rows.push(v);
    }
    Ok(scenes)
}

/// Read every example listed in `root/index.csv`, in index order.
pub fn load_archive(root: &Path) -> Result<Vec<PatientExample>> {
    let index: Vec<IndexRow> = read_csv(&root.join(INDEX))?;
    let windows: Vec<WindowRow> = read_csv(&root.join(WINDOWS))?;
    let mut win: BTreeMap<(String, usize, String), (usize, usize, Option<usize>)> = BTreeMap::new();
    for w in windows {
        win.insert((w.patient_id, w.cycle_index, w.scene), (w.start, w.end, w.phase_bound));
    }
    let index_path = root.join(INDEX);
    index
        .into_iter()
        .map(|row| {
            let path = root.join(&row.file);
            let label: Label = row.label.parse().map_err(|e| Error::format(&index_path, e))?;
            let disease_class: DiseaseClass = row.disease_class.parse().map_err(|e| Error::format(&index_path, e))?;
            let sex: Sex = row.sex.parse().map_err(|e| Error::format(&index_path, e))?;
            let data = parse_cycles(&fs::read_to_string(&path)?, &path)?;
            let mut scenes = Vec::with_capacity(5);
            for scene in ScenePosition::ALL {
                let rows = &data[scene.index()];
                if rows.is_empty() {
                    return Err(Error::format(&path, format!("scene {scene} missing")));
                }
                let key = (row.patient_id.clone(), row.cycle_index, scene.as_str().to_string());
                let (start, end, phase_bound) = win.get(&key).copied().unwrap_or((0, 0, None));
                scenes.push(BreathingCycle {
                    scene,
                    channels: std::array::from_fn(|c| rows.iter().map(|r| r[c]).collect()),
                    phase_bound,
                    source_window: (start, end),
                });
            }
            Ok(PatientExample {
                patient_id: row.patient_id,
                label,
                disease_class,
                demographics: Demographics { age: row.age, sex, height_cm: row.height_cm, weight_kg: row.weight_kg },
                cycle_index: row.cycle_index,
                scenes: scenes.try_into().expect("five scenes"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example(id: &str, k: usize) -> PatientExample {
        let cycle = |scene: ScenePosition| BreathingCycle {
            scene,
            channels: std::array::from_fn(|c| (0..7).map(|i| (i * (c + 1)) as f64 * 0.1 + scene.index() as f64).collect()),
            phase_bound: if scene == ScenePosition::M1 { None } else { Some(3) },
            source_window: (10 * k, 10 * k + 9),
        };
        PatientExample {
            patient_id: id.into(),
            label: Label::H,
            disease_class: DiseaseClass::None,
            demographics: Demographics { age: 33, sex: Sex::F, height_cm: 160.0, weight_kg: 55.5 },
            cycle_index: k,
            scenes: ScenePosition::ALL.map(cycle),
        }
    }

    #[test]
    fn archive_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let exs = vec![example("a", 0), example("a", 1), example("b", 0)];
        save_archive(&exs, &[], dir.path()).unwrap();
        assert!(is_archive(dir.path()));
        assert_eq!(load_archive(dir.path()).unwrap(), exs);
    }
}
