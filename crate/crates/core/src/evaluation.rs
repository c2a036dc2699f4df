//! Experimental protocol: seeded undersampling, patient-level
//! leave-one-out cross-validation with an inner train/validation split and
//! model selection, metrics, the skewed-holdout check and the per-cycle
//! prediction grid.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, DiseaseClass, Label, PatientExample, PatientRecord};
use crate::dsp::{self, DspConfig};
use crate::error::{Error, Result};
use crate::hpo::{self, HpoConfig, SearchSpace, Trial};
use crate::rng;
use crate::stats::{self, MeanSd};
use crate::training::{self, Aggregation, SplitAudit, TrainConfig, TrainedModel};

/// Randomly drop majority-class patients until both classes are equally
/// large. Returns `(balanced, holdout)`; both keep the input order.
pub fn undersample(ds: &Dataset, seed: u64) -> Result<(Dataset, Dataset)> {
    let nh = ds.count(Label::NH);
    let h = ds.count(Label::H);
    if h == nh {
        return Ok((ds.clone(), Dataset::default()));
    }
    let majority = if h > nh { Label::H } else { Label::NH };
    let excess = h.abs_diff(nh);
    let mut candidates: Vec<usize> = (0..ds.len()).filter(|&i| ds.patients[i].label == majority).collect();
    let mut r = rng::stream(seed, &[rng::tag("undersample")]);
    candidates.shuffle(&mut r);
    let removed: BTreeSet<usize> = candidates.into_iter().take(excess).collect();
    let (mut keep, mut out) = (Vec::new(), Vec::new());
    for (i, p) in ds.patients.iter().enumerate() {
        if removed.contains(&i) {
            out.push(p.clone());
        } else {
            keep.push(p.clone());
        }
    }
    let balanced = Dataset { patients: keep, diagnostics: ds.diagnostics.clone() };
    Ok((balanced, Dataset::new(out)))
}

/// Index pairs of holdout sets that contain exactly the same patients.
pub fn identical_holdouts(holdouts: &[Vec<String>]) -> Vec<(usize, usize)> {
    let sets: Vec<BTreeSet<&String>> = holdouts.iter().map(|h| h.iter().collect()).collect();
    let mut out = Vec::new();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            if sets[i] == sets[j] {
                out.push((i, j));
            }
        }
    }
    out
}

/// Split `(id, label)` pairs into train and validation ids, stratified by
/// label. Each class contributes `round(n * val_fraction)` patients to
/// validation, at least one and at most `n - 1` when it has two or more.
pub fn stratified_split(patients: &[(String, Label)], val_fraction: f64, seed: u64) -> (Vec<String>, Vec<String>) {
    let mut r = rng::stream(seed, &[rng::tag("split")]);
    let mut val = BTreeSet::new();
    for label in [Label::H, Label::NH] {
        let mut ids: Vec<&String> = patients.iter().filter(|(_, l)| *l == label).map(|(id, _)| id).collect();
        let n = ids.len();
        if n < 2 {
            continue;
        }
        ids.shuffle(&mut r);
        let k = (crate::math::round(n as f64 * val_fraction) as usize).clamp(1, n - 1);
        val.extend(ids.into_iter().take(k).cloned());
    }
    let train = patients.iter().filter(|(id, _)| !val.contains(id)).map(|(id, _)| id.clone()).collect();
    let val = patients.iter().filter(|(id, _)| val.contains(id)).map(|(id, _)| id.clone()).collect();
    (train, val)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub fold: usize,
    pub test_patient_id: String,
    pub train_ids: Vec<String>,
    pub val_ids: Vec<String>,
    pub excluded_holdout_ids: Vec<String>,
}

impl FoldPlan {
    /// Check that train, validation and test partition `cohort` and that the
    /// holdout touches none of them.
    pub fn validate(&self, cohort: &[String]) -> Result<()> {
        let fail = |what: String| Err(Error::InvalidConfig(format!("fold {} of seed {}: {what}", self.fold, self.seed)));
        let tr: BTreeSet<&String> = self.train_ids.iter().collect();
        let vl: BTreeSet<&String> = self.val_ids.iter().collect();
        let test = &self.test_patient_id;
        if tr.len() != self.train_ids.len() || vl.len() != self.val_ids.len() {
            return fail("duplicate ids".into());
        }
        if let Some(id) = tr.intersection(&vl).next() {
            return fail(format!("{id} is in both train and validation"));
        }
        if tr.contains(test) || vl.contains(test) {
            return fail(format!("test patient {test} leaked into train or validation"));
        }
        let union: BTreeSet<&String> = tr.iter().chain(vl.iter()).copied().chain(core::iter::once(test)).collect();
        let all: BTreeSet<&String> = cohort.iter().collect();
        if union != all {
            return fail("train, validation and test do not cover the cohort".into());
        }
        if let Some(id) = self.excluded_holdout_ids.iter().find(|id| all.contains(id)) {
            return fail(format!("holdout patient {id} is part of the cohort"));
        }
        Ok(())
    }
}

/// One plan per cohort patient, in cohort order.
pub fn plan_folds(
    cohort: &[(String, Label)],
    holdout_ids: &[String],
    seed: u64,
    val_fraction: f64,
) -> Result<Vec<FoldPlan>> {
    if cohort.len() < 4 {
        return Err(Error::CohortTooSmall(format!("{} patients; at least 4 are needed to stratify", cohort.len())));
    }
    let ids: Vec<String> = cohort.iter().map(|(id, _)| id.clone()).collect();
    let mut plans = Vec::with_capacity(cohort.len());
    for (fold, (test, _)) in cohort.iter().enumerate() {
        let rest: Vec<(String, Label)> = cohort.iter().filter(|(id, _)| id != test).cloned().collect();
        let (train_ids, val_ids) = stratified_split(&rest, val_fraction, rng::derive_seed(seed, &[fold as u64]));
        let plan = FoldPlan {
            seed,
            fold,
            test_patient_id: test.clone(),
            train_ids,
            val_ids,
            excluded_holdout_ids: holdout_ids.to_vec(),
        };
        plan.validate(&ids)?;
        plans.push(plan);
    }
    Ok(plans)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    /// Count with NH as the positive class.
    pub fn add(&mut self, predicted: Label, actual: Label) {
        match (predicted.is_positive(), actual.is_positive()) {
            (true, true) => self.tp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn metrics(&self) -> Metrics {
        compute_metrics(self.tp, self.tn, self.fp, self.fn_)
    }
}

/// Ratios are `None` where their denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
    pub accuracy: Option<f64>,
    pub tnr: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn compute_metrics(tp: usize, tn: usize, fp: usize, fn_: usize) -> Metrics {
    let sensitivity = ratio(tp, tp + fn_);
    let specificity = ratio(tn, tn + fp);
    let precision = ratio(tp, tp + fp);
    let f1 = match (precision, sensitivity) {
        (Some(p), Some(s)) if p + s > 0.0 => Some(2.0 * p * s / (p + s)),
        (Some(_), Some(_)) => Some(0.0),
        _ => None,
    };
    Metrics {
        tp,
        tn,
        fp,
        fn_,
        sensitivity,
        specificity,
        precision,
        f1,
        accuracy: ratio(tp + tn, tp + tn + fp + fn_),
        tnr: specificity,
    }
}

/// Mean and sd over seeds of each ratio, skipping seeds where it is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub sensitivity: Option<MeanSd>,
    pub specificity: Option<MeanSd>,
    pub precision: Option<MeanSd>,
    pub f1: Option<MeanSd>,
    pub accuracy: Option<MeanSd>,
    /// Metric name to the number of seeds where it was undefined.
    pub absent: BTreeMap<String, usize>,
}

impl AggregateMetrics {
    pub fn of(per_seed: &[Metrics]) -> Self {
        let mut absent = BTreeMap::new();
        let mut agg = |name: &str, f: fn(&Metrics) -> Option<f64>| {
            let vals: Vec<f64> = per_seed.iter().filter_map(f).collect();
            let missing = per_seed.len() - vals.len();
            if missing > 0 {
                absent.insert(name.to_string(), missing);
            }
            MeanSd::of(&vals)
        };
        AggregateMetrics {
            sensitivity: agg("sensitivity", |m| m.sensitivity),
            specificity: agg("specificity", |m| m.specificity),
            precision: agg("precision", |m| m.precision),
            f1: agg("f1", |m| m.f1),
            accuracy: agg("accuracy", |m| m.accuracy),
            absent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HoldoutMode {
    /// Retrain the first fold's selected configuration on that fold's
    /// train and validation patients together.
    #[default]
    FinalRetrain,
    /// Average the patient confidences of every fold's model.
    PerFoldEnsemble,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub seeds: Vec<u64>,
    pub val_fraction: f64,
    pub dsp: DspConfig,
    pub aggregation: Aggregation,
    pub holdout_mode: HoldoutMode,
    /// Cycles per patient in the prediction grid.
    pub heatmap_cycles: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            seeds: vec![1, 2, 3, 4],
            val_fraction: 0.25,
            dsp: DspConfig::default(),
            aggregation: Aggregation::Mean,
            holdout_mode: HoldoutMode::FinalRetrain,
            heatmap_cycles: 4,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one undersampling seed is required".into()));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!("val_fraction {} outside (0, 1)", self.val_fraction)));
        }
        self.dsp.validate()
    }
}

/// The complete, serializable description of an evaluation run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Experiment {
    pub space: SearchSpace,
    pub train: TrainConfig,
    pub hpo: HpoConfig,
    pub eval: EvalConfig,
}

impl Experiment {
    pub fn validate(&self) -> Result<()> {
        self.space.validate()?;
        self.train.validate()?;
        self.hpo.validate()?;
        self.eval.validate()
    }
}

/// Preprocessed examples of every usable patient, keyed by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExampleBank {
    pub examples: BTreeMap<String, Vec<PatientExample>>,
    /// Patients that produced no examples, with the reason.
    pub dropped: Vec<(String, String)>,
}

impl ExampleBank {
    pub fn build(patients: &[PatientRecord], dsp_cfg: &DspConfig) -> Self {
        let mut bank = ExampleBank::default();
        for p in patients.iter().filter(|p| p.is_complete()) {
            let out = dsp::preprocess_patient(p, dsp_cfg);
            if out.examples.is_empty() {
                bank.dropped.push((p.patient_id.clone(), out.flag.unwrap_or_default()));
            } else {
                bank.examples.insert(p.patient_id.clone(), out.examples);
            }
        }
        bank
    }

    /// Bank of already segmented examples, grouped by patient.
    pub fn from_examples(examples: Vec<PatientExample>) -> Self {
        let mut bank = ExampleBank::default();
        for ex in examples {
            bank.examples.entry(ex.patient_id.clone()).or_default().push(ex);
        }
        bank
    }

    pub fn contains(&self, id: &str) -> bool {
        self.examples.contains_key(id)
    }

    /// All examples of `ids`, in the given order, tagged as read from
    /// `split` in `log`.
    fn gather(&self, ids: &[String], split: training::Split, log: &mut AccessLog) -> Vec<PatientExample> {
        ids.iter()
            .flat_map(|id| {
                log.record(id, split);
                self.examples.get(id).into_iter().flatten().cloned()
            })
            .collect()
    }
}

/// Every `(patient, split)` pair a fold read.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AccessLog {
    pub reads: BTreeSet<(String, training::Split)>,
}

impl AccessLog {
    fn record(&mut self, id: &str, split: training::Split) {
        self.reads.insert((id.to_string(), split));
    }

    pub fn ids(&self, split: training::Split) -> BTreeSet<&str> {
        self.reads.iter().filter(|(_, s)| *s == split).map(|(id, _)| id.as_str()).collect()
    }
}

/// Assert that training never read the test patient or the holdout and
/// that no patient was read under two splits.
fn check_leakage(plan: &FoldPlan, log: &AccessLog, audit: &SplitAudit) -> Result<()> {
    use training::Split;
    let fail = |what: String| Err(Error::InvalidConfig(format!("leakage in fold {} of seed {}: {what}", plan.fold, plan.seed)));
    let mut seen: BTreeMap<&str, Split> = BTreeMap::new();
    for (id, split) in &log.reads {
        if let Some(prev) = seen.insert(id.as_str(), *split) {
            if prev != *split {
                return fail(format!("patient {id} read as both {prev:?} and {split:?}"));
            }
        }
    }
    let touched = audit.touched();
    if touched.contains(plan.test_patient_id.as_str()) {
        return fail(format!("training read test patient {}", plan.test_patient_id));
    }
    if let Some(id) = plan.excluded_holdout_ids.iter().find(|id| touched.contains(id.as_str())) {
        return fail(format!("training read holdout patient {id}"));
    }
    let train_ids: BTreeSet<&str> = plan.train_ids.iter().map(String::as_str).collect();
    if !audit.standardization.iter().all(|id| train_ids.contains(id.as_str())) {
        return fail("standardization read outside the training split".into());
    }
    Ok(())
}

/// Result of one leave-one-out iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub plan: FoldPlan,
    pub trials: Vec<Trial>,
    pub best: Trial,
    pub best_epoch: usize,
    pub actual: Label,
    pub disease_class: DiseaseClass,
    pub predicted: Label,
    pub confidence: f64,
    pub cycle_probs: Vec<f64>,
    /// Holdout patient confidences from this fold's model (ensemble mode).
    pub holdout_confidence: Vec<(String, f64)>,
    pub access: AccessLog,
}

/// Shared inputs of every fold of one undersampling seed.
#[derive(Debug, Clone)]
pub struct SeedContext<'a> {
    pub seed: u64,
    pub experiment: &'a Experiment,
    pub bank: &'a ExampleBank,
    pub cohort: Vec<(String, Label, DiseaseClass)>,
    pub holdout_ids: Vec<String>,
    pub plans: Vec<FoldPlan>,
}

impl<'a> SeedContext<'a> {
    /// Undersample `ds` with `seed` and plan every fold. Patients without
    /// examples in `bank` are left out of both the cohort and the holdout.
    pub fn new(ds: &Dataset, seed: u64, experiment: &'a Experiment, bank: &'a ExampleBank) -> Result<Self> {
        let usable: Vec<PatientRecord> = ds.patients.iter().filter(|p| bank.contains(&p.patient_id)).cloned().collect();
        let (balanced, holdout) = undersample(&Dataset::new(usable), seed)?;
        let cohort: Vec<(String, Label, DiseaseClass)> =
            balanced.patients.iter().map(|p| (p.patient_id.clone(), p.label, p.disease_class)).collect();
        let holdout_ids: Vec<String> = holdout.patients.iter().map(|p| p.patient_id.clone()).collect();
        let labels: Vec<(String, Label)> = cohort.iter().map(|(id, l, _)| (id.clone(), *l)).collect();
        let plans = plan_folds(&labels, &holdout_ids, seed, experiment.eval.val_fraction)?;
        Ok(SeedContext { seed, experiment, bank, cohort, holdout_ids, plans })
    }

    fn fold_seeds(&self, fold: usize) -> (u64, u64) {
        let e = self.experiment;
        let tags = [self.seed, fold as u64];
        (rng::derive_seed(e.train.seed, &tags), rng::derive_seed(e.hpo.seed, &tags))
    }

    /// Model selection on the fold's train/validation split, then
    /// prediction of the held-out patient with the selected model.
    pub fn run_fold(&self, fold: usize) -> Result<FoldResult> {
        use training::Split;
        let plan = &self.plans[fold];
        let e = self.experiment;
        let mut log = AccessLog::default();
        let tr = self.bank.gather(&plan.train_ids, Split::Train, &mut log);
        let vl = self.bank.gather(&plan.val_ids, Split::Validation, &mut log);
        let (train_seed, hpo_seed) = self.fold_seeds(fold);
        let train_cfg = TrainConfig { seed: train_seed, ..e.train.clone() };
        let hpo_cfg = HpoConfig { seed: hpo_seed, ..e.hpo.clone() };
        let search = hpo::run_search(&tr, &vl, &e.space, &hpo_cfg, &train_cfg)?;
        check_leakage(plan, &log, &search.history.audit)?;

        let test = self.bank.gather(core::slice::from_ref(&plan.test_patient_id), Split::Test, &mut log);
        let cycle_probs = search.model.predict_examples(&test)?;
        let (predicted, confidence) = training::predict_patient_with(&cycle_probs, e.eval.aggregation)?;
        let holdout_confidence = match e.eval.holdout_mode {
            HoldoutMode::PerFoldEnsemble => self.score_holdout(&search.model, &mut log)?,
            HoldoutMode::FinalRetrain => Vec::new(),
        };
        let (_, actual, disease_class) = self.cohort[fold].clone();
        Ok(FoldResult {
            plan: plan.clone(),
            trials: search.trials,
            best: search.best,
            best_epoch: search.history.best_epoch,
            actual,
            disease_class,
            predicted,
            confidence,
            cycle_probs,
            holdout_confidence,
            access: log,
        })
    }

    fn score_holdout(&self, model: &TrainedModel, log: &mut AccessLog) -> Result<Vec<(String, f64)>> {
        let mut out = Vec::with_capacity(self.holdout_ids.len());
        for id in &self.holdout_ids {
            let ex = self.bank.gather(core::slice::from_ref(id), training::Split::Holdout, log);
            let probs = model.predict_examples(&ex)?;
            let (_, c) = training::predict_patient_with(&probs, self.experiment.eval.aggregation)?;
            out.push((id.clone(), c));
        }
        Ok(out)
    }

    /// Holdout TNR under the configured [`HoldoutMode`].
    pub fn holdout(&self, folds: &[FoldResult]) -> Result<Option<HoldoutResult>> {
        if self.holdout_ids.is_empty() {
            return Ok(None);
        }
        let e = self.experiment;
        let confidences: Vec<(String, f64)> = match e.eval.holdout_mode {
            HoldoutMode::PerFoldEnsemble => self
                .holdout_ids
                .iter()
                .map(|id| {
                    let cs: Vec<f64> = folds
                        .iter()
                        .flat_map(|f| f.holdout_confidence.iter().filter(|(h, _)| h == id).map(|(_, c)| *c))
                        .collect();
                    (id.clone(), stats::mean(&cs).unwrap_or(0.5))
                })
                .collect(),
            HoldoutMode::FinalRetrain => {
                let f0 = folds.first().ok_or(Error::Empty("fold results"))?;
                let model = self.final_retrain(f0)?;
                let mut log = AccessLog::default();
                self.score_holdout(&model, &mut log)?
            }
        };
        Ok(Some(HoldoutResult::from_confidences(e.eval.holdout_mode, confidences)))
    }

    /// Refit `fold`'s selected configuration on its train and validation
    /// patients together for as many epochs as the selected trial needed.
    /// A single-epoch budget is raised to two so the configuration stays
    /// valid.
    pub fn final_retrain(&self, fold: &FoldResult) -> Result<TrainedModel> {
        let e = self.experiment;
        let mut log = AccessLog::default();
        let mut ids = fold.plan.train_ids.clone();
        ids.extend(fold.plan.val_ids.iter().cloned());
        let all = self.bank.gather(&ids, training::Split::Train, &mut log);
        let epochs = (fold.best_epoch + 1).max(2);
        let (train_seed, _) = self.fold_seeds(fold.plan.fold);
        let cfg = TrainConfig {
            seed: train_seed,
            max_epochs: epochs,
            patience: epochs - 1,
            learning_rate: fold.best.point.learning_rate,
            ..e.train.clone()
        };
        let (model, history) = training::fit(&all, &[], &e.space.model_config(&fold.best.point), &cfg)?;
        let merged = FoldPlan { train_ids: ids, val_ids: Vec::new(), ..fold.plan.clone() };
        check_leakage(&merged, &log, &history.audit)?;
        Ok(model)
    }

    /// Combine fold results into the per-seed report.
    pub fn assemble(&self, folds: Vec<FoldResult>, holdout: Option<HoldoutResult>) -> SeedReport {
        let mut confusion = Confusion::default();
        let mut cycle_confusion = Confusion::default();
        for f in &folds {
            confusion.add(f.predicted, f.actual);
            for &p in &f.cycle_probs {
                cycle_confusion.add(if p >= 0.5 { Label::NH } else { Label::H }, f.actual);
            }
        }
        let per_disease = DiseaseRow::table(&folds);
        let grid = HeatmapGrid::from_folds(&folds, self.experiment.eval.heatmap_cycles);
        SeedReport {
            seed: self.seed,
            holdout_ids: self.holdout_ids.clone(),
            metrics: confusion.metrics(),
            confusion,
            cycle_metrics: cycle_confusion.metrics(),
            per_disease,
            holdout,
            grid,
            folds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutResult {
    pub mode: HoldoutMode,
    pub n: usize,
    pub predicted_healthy: usize,
    pub tnr: Option<f64>,
    pub confidences: Vec<(String, f64)>,
}

impl HoldoutResult {
    pub fn from_confidences(mode: HoldoutMode, confidences: Vec<(String, f64)>) -> Self {
        let predicted_healthy = confidences.iter().filter(|(_, c)| *c < 0.5).count();
        HoldoutResult { mode, n: confidences.len(), predicted_healthy, tnr: holdout_tnr(&confidences), confidences }
    }
}

/// Fraction of (all healthy) holdout patients predicted H; `None` when the
/// holdout is empty.
pub fn holdout_tnr(confidences: &[(String, f64)]) -> Option<f64> {
    ratio(confidences.iter().filter(|(_, c)| *c < 0.5).count(), confidences.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiseaseRow {
    pub disease_class: DiseaseClass,
    pub patients: usize,
    pub correct: usize,
    pub misclassified: usize,
}

impl DiseaseRow {
    /// One row per disease class present among `folds`, in
    /// [`DiseaseClass::ALL`] order.
    pub fn table(folds: &[FoldResult]) -> Vec<DiseaseRow> {
        DiseaseClass::ALL
            .into_iter()
            .filter_map(|d| {
                let rows: Vec<&FoldResult> = folds.iter().filter(|f| f.disease_class == d).collect();
                if rows.is_empty() {
                    return None;
                }
                let correct = rows.iter().filter(|f| f.predicted == f.actual).count();
                Some(DiseaseRow { disease_class: d, patients: rows.len(), correct, misclassified: rows.len() - correct })
            })
            .collect()
    }
}

/// First-k cycle probabilities of one patient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapColumn {
    pub patient_id: String,
    pub label: Label,
    /// `None` where the patient has fewer than k cycles.
    pub probs: Vec<Option<f64>>,
    /// Population sd over all the patient's cycle probabilities.
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub cycles: usize,
    pub columns: Vec<HeatmapColumn>,
}

impl HeatmapGrid {
    pub fn from_folds(folds: &[FoldResult], k: usize) -> Self {
        let columns = folds
            .iter()
            .map(|f| HeatmapColumn {
                patient_id: f.plan.test_patient_id.clone(),
                label: f.actual,
                probs: (0..k).map(|i| f.cycle_probs.get(i).copied()).collect(),
                sd: MeanSd::of(&f.cycle_probs).map_or(0.0, |m| m.sd),
            })
            .collect();
        HeatmapGrid { cycles: k, columns }
    }

    pub fn median_sd(&self) -> Option<f64> {
        stats::median(&self.columns.iter().map(|c| c.sd).collect::<Vec<_>>())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub holdout_ids: Vec<String>,
    pub confusion: Confusion,
    pub metrics: Metrics,
    /// Per-cycle counts over all test cycles, as a diagnostic.
    pub cycle_metrics: Metrics,
    pub per_disease: Vec<DiseaseRow>,
    pub holdout: Option<HoldoutResult>,
    pub grid: HeatmapGrid,
    pub folds: Vec<FoldResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seeds: Vec<SeedReport>,
    pub aggregate: AggregateMetrics,
    pub holdout_tnr: Option<MeanSd>,
    /// Seed index pairs whose holdout sets coincide.
    pub identical_holdouts: Vec<(usize, usize)>,
    /// Median over patients and seeds of the per-patient sd of cycle
    /// probabilities.
    pub median_cycle_sd: Option<f64>,
    pub dropped_patients: Vec<(String, String)>,
}

impl EvalReport {
    pub fn from_seeds(seeds: Vec<SeedReport>, bank: &ExampleBank) -> Self {
        let metrics: Vec<Metrics> = seeds.iter().map(|s| s.metrics).collect();
        let tnrs: Vec<f64> = seeds.iter().filter_map(|s| s.holdout.as_ref()?.tnr).collect();
        let holdouts: Vec<Vec<String>> = seeds.iter().map(|s| s.holdout_ids.clone()).collect();
        let sds: Vec<f64> = seeds.iter().flat_map(|s| s.grid.columns.iter().map(|c| c.sd)).collect();
        EvalReport {
            aggregate: AggregateMetrics::of(&metrics),
            holdout_tnr: MeanSd::of(&tnrs),
            identical_holdouts: identical_holdouts(&holdouts),
            median_cycle_sd: stats::median(&sds),
            dropped_patients: bank.dropped.clone(),
            seeds,
        }
    }
}

/// Leave-one-out evaluation of an already balanced cohort with a single
/// seed and no holdout.
pub fn loocv(balanced: &Dataset, experiment: &Experiment, seed: u64) -> Result<SeedReport> {
    experiment.validate()?;
    let bank = ExampleBank::build(&balanced.patients, &experiment.eval.dsp);
    let ctx = SeedContext::new(balanced, seed, experiment, &bank)?;
    if !ctx.holdout_ids.is_empty() {
        return Err(Error::InvalidConfig(format!("cohort is not balanced ({} surplus patients)", ctx.holdout_ids.len())));
    }
    let folds = (0..ctx.plans.len()).map(|i| ctx.run_fold(i)).collect::<Result<Vec<_>>>()?;
    Ok(ctx.assemble(folds, None))
}

/// Full protocol over every seed of `experiment.eval.seeds`. `run_folds`
/// maps fold indices to results and may evaluate them in any order or in
/// parallel; results must come back in index order.
pub fn evaluate_with<F>(ds: &Dataset, experiment: &Experiment, run_folds: F) -> Result<EvalReport>
where
    F: FnMut(&SeedContext<'_>) -> Result<Vec<FoldResult>>,
{
    let bank = ExampleBank::build(&ds.patients, &experiment.eval.dsp);
    evaluate_bank_with(ds, &bank, experiment, run_folds)
}

/// [`evaluate_with`] on examples that were segmented beforehand. `ds`
/// supplies labels; only patients present in `bank` take part.
pub fn evaluate_bank_with<F>(ds: &Dataset, bank: &ExampleBank, experiment: &Experiment, mut run_folds: F) -> Result<EvalReport>
where
    F: FnMut(&SeedContext<'_>) -> Result<Vec<FoldResult>>,
{
    experiment.validate()?;
    let mut seeds = Vec::with_capacity(experiment.eval.seeds.len());
    for &seed in &experiment.eval.seeds {
        let ctx = SeedContext::new(ds, seed, experiment, bank)?;
        let folds = run_folds(&ctx)?;
        let holdout = ctx.holdout(&folds)?;
        seeds.push(ctx.assemble(folds, holdout));
    }
    Ok(EvalReport::from_seeds(seeds, bank))
}

/// [`evaluate_with`] running folds one after another.
pub fn evaluate(ds: &Dataset, experiment: &Experiment) -> Result<EvalReport> {
    evaluate_with(ds, experiment, |ctx| (0..ctx.plans.len()).map(|i| ctx.run_fold(i)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Demographics, Sex};

    fn patient(id: &str, label: Label) -> PatientRecord {
        PatientRecord {
            patient_id: id.into(),
            label,
            disease_class: if label == Label::H { DiseaseClass::None } else { DiseaseClass::Unspecified },
            demographics: Demographics { age: 50, sex: Sex::F, height_cm: 165.0, weight_kg: 60.0 },
            recordings: BTreeMap::new(),
        }
    }

    fn cohort(h: usize, nh: usize) -> Dataset {
        let mut ps: Vec<PatientRecord> = (0..h).map(|i| patient(&format!("H{i}"), Label::H)).collect();
        ps.extend((0..nh).map(|i| patient(&format!("N{i}"), Label::NH)));
        Dataset::new(ps)
    }

    #[test]
    fn undersampling_counts() {
        let (b, h) = undersample(&cohort(77, 45), 1).unwrap();
        assert_eq!((b.len(), b.count(Label::H), b.count(Label::NH)), (90, 45, 45));
        assert_eq!(h.len(), 32);
        assert!(h.patients.iter().all(|p| p.label == Label::H));
        let (b, h) = undersample(&cohort(3, 3), 1).unwrap();
        assert_eq!(b.len(), 6);
        assert!(h.is_empty());
    }

    #[test]
    fn undersampling_is_seeded() {
        let ds = cohort(77, 45);
        let ids = |s| undersample(&ds, s).unwrap().1.patients.iter().map(|p| p.patient_id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(1), ids(1));
        let sets: Vec<Vec<String>> = (1..=4).map(ids).collect();
        assert!(identical_holdouts(&sets).is_empty());
        assert_eq!(identical_holdouts(&[sets[0].clone(), sets[0].clone()]), vec![(0, 1)]);
    }

    #[test]
    fn metrics_hand_case() {
        let m = compute_metrics(8, 9, 1, 2);
        assert_eq!(m.sensitivity, Some(0.8));
        assert_eq!(m.specificity, Some(0.9));
        assert_eq!(m.accuracy, Some(0.85));
        assert!((m.f1.unwrap() - 16.0 / 19.0).abs() < 1e-12);
        let d = compute_metrics(0, 10, 0, 0);
        assert_eq!(d.specificity, Some(1.0));
        assert_eq!(d.sensitivity, None);
        let z = compute_metrics(0, 0, 0, 0);
        assert!(z.accuracy.is_none() && z.f1.is_none() && z.tnr.is_none());
    }

    #[test]
    fn folds_partition_and_stratify() {
        let ds = cohort(8, 8);
        let labels: Vec<(String, Label)> = ds.patients.iter().map(|p| (p.patient_id.clone(), p.label)).collect();
        let plans = plan_folds(&labels, &[String::from("X")], 3, 0.25).unwrap();
        assert_eq!(plans.len(), 16);
        for p in &plans {
            let label_of = |id: &String| labels.iter().find(|(i, _)| i == id).unwrap().1;
            for set in [&p.train_ids, &p.val_ids] {
                let nh = set.iter().filter(|id| label_of(id) == Label::NH).count();
                assert!((2 * nh as i64 - set.len() as i64).abs() <= 2, "{set:?}");
            }
        }
        let mut bad = plans[0].clone();
        bad.val_ids.push(bad.test_patient_id.clone());
        assert!(bad.validate(&labels.iter().map(|(i, _)| i.clone()).collect::<Vec<_>>()).is_err());
        assert!(plan_folds(&labels[..3], &[], 1, 0.25).is_err());
    }

    #[test]
    fn holdout_tnr_degenerate_predictors() {
        let all_h: Vec<(String, f64)> = (0..5).map(|i| (format!("h{i}"), 0.1)).collect();
        let all_nh: Vec<(String, f64)> = (0..5).map(|i| (format!("h{i}"), 0.9)).collect();
        assert_eq!(holdout_tnr(&all_h), Some(1.0));
        assert_eq!(holdout_tnr(&all_nh), Some(0.0));
        assert_eq!(holdout_tnr(&[]), None);
    }
}
