//! Report directory written by `loocv`.
//!
//! | file | content |
//! |------|---------|
//! | `confusion_seed_<s>.csv` | 2x2 patient-level matrix per seed |
//! | `metrics.csv` | each metric per seed with mean and sd |
//! | `per_disease.csv` | correct and misclassified counts per disease class and seed |
//! | `holdout.csv` | holdout size, predicted-healthy count and TNR per seed |
//! | `folds.csv` | test prediction and selected configuration per fold |
//! | `trials.csv` | every search trial of every fold |
//! | `heatmap_seed_<s>.csv` / `.svg` | first-k cycle probabilities per test patient |
//! | `summary.json` | metrics only; identical inputs give identical bytes |
//! | `report.json` | the complete report |

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use breathscreen_core::data::Label;
use breathscreen_core::evaluation::{AggregateMetrics, Confusion, DiseaseRow, EvalReport, HeatmapGrid, Metrics, SeedReport};
use breathscreen_core::hpo::TrialStatus;
use breathscreen_core::stats::MeanSd;

use crate::config;
use crate::error::{fs, Result};
use crate::plot;

pub const SUMMARY: &str = "summary.json";
pub const FULL_REPORT: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub confusion: Confusion,
    pub metrics: Metrics,
    pub cycle_metrics: Metrics,
    pub holdout_size: usize,
    pub holdout_tnr: Option<f64>,
    pub per_disease: Vec<DiseaseRow>,
    pub median_cycle_sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub tool_version: String,
    pub seeds: Vec<SeedSummary>,
    pub aggregate: AggregateMetrics,
    pub holdout_tnr: Option<MeanSd>,
    pub identical_holdouts: Vec<(usize, usize)>,
    pub median_cycle_sd: Option<f64>,
    pub dropped_patients: Vec<(String, String)>,
}

impl Summary {
    pub fn of(report: &EvalReport) -> Self {
        Summary {
            tool_version: env!("CARGO_PKG_VERSION").into(),
            seeds: report
                .seeds
                .iter()
                .map(|s| SeedSummary {
                    seed: s.seed,
                    confusion: s.confusion,
                    metrics: s.metrics,
                    cycle_metrics: s.cycle_metrics,
                    holdout_size: s.holdout_ids.len(),
                    holdout_tnr: s.holdout.as_ref().and_then(|h| h.tnr),
                    per_disease: s.per_disease.clone(),
                    median_cycle_sd: s.grid.median_sd(),
                })
                .collect(),
            aggregate: report.aggregate.clone(),
            holdout_tnr: report.holdout_tnr,
            identical_holdouts: report.identical_holdouts.clone(),
            median_cycle_sd: report.median_cycle_sd,
            dropped_patients: report.dropped_patients.clone(),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into())
}

pub fn confusion_csv(c: &Confusion) -> String {
    format!("actual,predicted_H,predicted_NH\nH,{},{}\nNH,{},{}\n", c.tn, c.fp, c.fn_, c.tp)
}

pub fn metrics_csv(report: &EvalReport) -> String {
    let mut out = String::from("metric");
    for s in &report.seeds {
        let _ = write!(out, ",seed_{}", s.seed);
    }
    out.push_str(",mean,sd,absent_seeds\n");
    let a = &report.aggregate;
    let rows: [(&str, fn(&Metrics) -> Option<f64>, Option<MeanSd>); 5] = [
        ("sensitivity", |m| m.sensitivity, a.sensitivity),
        ("specificity", |m| m.specificity, a.specificity),
        ("precision", |m| m.precision, a.precision),
        ("f1", |m| m.f1, a.f1),
        ("accuracy", |m| m.accuracy, a.accuracy),
    ];
    for (name, get, agg) in rows {
        out.push_str(name);
        for s in &report.seeds {
            let _ = write!(out, ",{}", opt(get(&s.metrics)));
        }
        let absent = a.absent.get(name).copied().unwrap_or(0);
        let _ = writeln!(out, ",{},{},{absent}", opt(agg.map(|m| m.mean)), opt(agg.map(|m| m.sd)));
    }
    out
}

pub fn per_disease_csv(report: &EvalReport) -> String {
    let mut out = String::from("seed,disease_class,patients,correct,misclassified\n");
    for s in &report.seeds {
        for r in &s.per_disease {
            let _ = writeln!(out, "{},{},{},{},{}", s.seed, r.disease_class.as_str(), r.patients, r.correct, r.misclassified);
        }
    }
    out
}

pub fn holdout_csv(report: &EvalReport) -> String {
    let mut out = String::from("seed,mode,holdout_size,predicted_healthy,tnr\n");
    for s in &report.seeds {
        match &s.holdout {
            Some(h) => {
                let mode = serde_json::to_value(h.mode).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
                let _ = writeln!(out, "{},{mode},{},{},{}", s.seed, h.n, h.predicted_healthy, opt(h.tnr));
            }
            None => {
                let _ = writeln!(out, "{},,0,0,NA", s.seed);
            }
        }
    }
    out
}

pub fn folds_csv(report: &EvalReport) -> String {
    let mut out = String::from(
        "seed,fold,test_patient_id,actual,predicted,confidence,cycles,cycle_sd,family,hidden,layers,head,learning_rate,best_epoch,train_patients,val_patients\n",
    );
    for s in &report.seeds {
        for f in &s.folds {
            let p = &f.best.point;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                s.seed,
                f.plan.fold,
                f.plan.test_patient_id,
                f.actual.as_str(),
                f.predicted.as_str(),
                f.confidence,
                f.cycle_probs.len(),
                MeanSd::of(&f.cycle_probs).map_or(0.0, |m| m.sd),
                p.family.as_str(),
                p.hidden,
                p.layers,
                p.head.as_str(),
                p.learning_rate,
                f.best_epoch,
                f.plan.train_ids.len(),
                f.plan.val_ids.len()
            );
        }
    }
    out
}

pub fn trials_csv(report: &EvalReport) -> String {
    let mut out = String::from("seed,fold,trial,family,hidden,layers,head,learning_rate,objective,num_params,status,diagnostic\n");
    for s in &report.seeds {
        for f in &s.folds {
            for t in &f.trials {
                let p = &t.point;
                let (status, diag) = match &t.status {
                    TrialStatus::Completed => ("completed", String::new()),
                    TrialStatus::Failed { diagnostic } => ("failed", diagnostic.replace([',', '\n'], ";")),
                };
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{status},{diag}",
                    s.seed,
                    f.plan.fold,
                    t.index,
                    p.family.as_str(),
                    p.hidden,
                    p.layers,
                    p.head.as_str(),
                    p.learning_rate,
                    opt(t.objective),
                    t.num_params
                );
            }
        }
    }
    out
}

/// Rows `cycle_1..cycle_k` then `ground_truth`; one column per patient;
/// missing cycles are `NA`. Ground truth is 1 for NH and 0 for H.
pub fn heatmap_csv(grid: &HeatmapGrid) -> String {
    let mut out = String::from("row");
    for c in &grid.columns {
        let _ = write!(out, ",{}", c.patient_id);
    }
    out.push('\n');
    for k in 0..grid.cycles {
        let _ = write!(out, "cycle_{}", k + 1);
        for c in &grid.columns {
            let _ = write!(out, ",{}", opt(c.probs[k]));
        }
        out.push('\n');
    }
    out.push_str("ground_truth");
    for c in &grid.columns {
        let _ = write!(out, ",{}", u8::from(c.label == Label::NH));
    }
    out.push('\n');
    out
}

fn seed_files(s: &SeedReport, dir: &Path) -> Result<()> {
    fs::write(&dir.join(format!("confusion_seed_{}.csv", s.seed)), confusion_csv(&s.confusion))?;
    fs::write(&dir.join(format!("heatmap_seed_{}.csv", s.seed)), heatmap_csv(&s.grid))?;
    let title = format!("Cycle-level NH probability, seed {}", s.seed);
    fs::write(&dir.join(format!("heatmap_seed_{}.svg", s.seed)), plot::heatmap(&s.grid, &title))
}

pub fn write_report(report: &EvalReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for s in &report.seeds {
        seed_files(s, dir)?;
    }
    fs::write(&dir.join("metrics.csv"), metrics_csv(report))?;
    fs::write(&dir.join("per_disease.csv"), per_disease_csv(report))?;
    fs::write(&dir.join("holdout.csv"), holdout_csv(report))?;
    fs::write(&dir.join("folds.csv"), folds_csv(report))?;
    fs::write(&dir.join("trials.csv"), trials_csv(report))?;
    fs::write(&dir.join(SUMMARY), config::to_json(&Summary::of(report)))?;
    fs::write(&dir.join(FULL_REPORT), config::to_json(report))
}
