//! Command-line driver. Exit codes: 0 success, 1 runtime or I/O failure
//! (including a failed gradient check), 2 usage error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use breathscreen_core::data::{Dataset, Demographics, Label, PatientExample, PatientRecord, ScenePosition};
use breathscreen_core::dsp::{self, DspConfig, FilterSpec};
use breathscreen_core::evaluation::{self, ExampleBank, Experiment, HoldoutMode};
use breathscreen_core::hpo::{Objective, SearchSpace};
use breathscreen_core::nn::{gradcheck, EncoderConfig, EncoderFamily, HeadConfig, ModelConfig, Network};
use breathscreen_core::rng;
use breathscreen_core::synth::{self, CohortSpec, PatientTruth, Range};
use breathscreen_core::training::{self, TrainConfig};

use crate::archive::{self, PatientRow};
use crate::checkpoint::{self, Checkpoint};
use crate::config;
use crate::dataset;
use crate::error::{fs, Error, Result};
use crate::plot;
use crate::report;

pub const RUN_MANIFEST: &str = "run.json";
pub const TRUTH: &str = "truth.json";

#[derive(Debug, Parser)]
#[command(name = "breathscreen", version, about = "Screening of breathing kinematics from multi-position IMU recordings")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Global {
    /// Root of all randomness.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for fold-level parallelism (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Progress on stderr; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Output path; its meaning depends on the subcommand.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort in the dataset format.
    Synth(SynthArgs),
    /// Segment a dataset into a cycle archive.
    Preprocess(PreprocessArgs),
    /// Fit one model and write a checkpoint.
    Train(TrainArgs),
    /// Undersampling plus leave-one-patient-out evaluation with model search.
    Loocv(LoocvArgs),
    /// Render figures from a dataset and/or a loocv report.
    Report(ReportArgs),
    /// Finite-difference check of the analytic gradients.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    /// Full cohort specification; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub n_healthy: Option<usize>,
    #[arg(long)]
    pub n_nonhealthy: Option<usize>,
    /// 0 gives indistinguishable classes, 1 the strongest difference.
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub duration_s: Option<f64>,
    /// Fixed breathing rate for every patient and scene.
    #[arg(long)]
    pub rate_hz: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DspArgs {
    #[arg(long, default_value_t = 0.7)]
    pub cutoff_hz: f64,
    #[arg(long, default_value_t = 5.0)]
    pub trim_s: f64,
    #[arg(long, default_value_t = 300)]
    pub target_len: usize,
    #[arg(long, default_value_t = 1.5)]
    pub min_distance_s: f64,
    /// Fraction of the filtered signal's interquartile range.
    #[arg(long, default_value_t = 0.1)]
    pub min_prominence: f64,
}

impl DspArgs {
    fn config(&self) -> DspConfig {
        DspConfig {
            cutoff_hz: self.cutoff_hz,
            trim_s: self.trim_s,
            target_len: self.target_len,
            min_distance_s: self.min_distance_s,
            min_prominence: self.min_prominence,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Archive directory (falls back to --out).
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub dsp: DspArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    /// Dataset directory or cycle archive.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub model_config: Option<PathBuf>,
    #[arg(long)]
    pub train_config: Option<PathBuf>,
    /// Fraction of patients per class held out for early stopping.
    #[arg(long, default_value_t = 0.25)]
    pub val_fraction: f64,
    #[command(flatten)]
    pub dsp: DspArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum HoldoutArg {
    FinalRetrain,
    PerFoldEnsemble,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum ObjectiveArg {
    CycleF1,
    PatientF1,
    NegLoss,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LoocvArgs {
    /// Dataset directory or cycle archive.
    #[arg(long)]
    pub data: PathBuf,
    /// Number of undersampling seeds.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Search trials per fold.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub model_space: Option<PathBuf>,
    /// Complete experiment file (search space, training, search and
    /// evaluation settings); other flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long, value_enum)]
    pub holdout_mode: Option<HoldoutArg>,
    #[arg(long, value_enum)]
    pub objective: Option<ObjectiveArg>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ReportArgs {
    /// Report directory written by `loocv`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Dataset to draw segmentation overlays from.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Patient to draw (default: first trainable one).
    #[arg(long)]
    pub patient: Option<String>,
    #[command(flatten)]
    pub dsp: DspArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GradcheckArgs {
    /// Number of independently seeded networks.
    #[arg(long, default_value_t = 5)]
    pub networks: usize,
    #[arg(long, default_value_t = 3)]
    pub hidden: usize,
    #[arg(long, default_value_t = 1)]
    pub layers: usize,
    #[arg(long, default_value_t = 12)]
    pub steps: usize,
    #[arg(long, default_value_t = 4)]
    pub head: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = gradcheck::DEFAULT_TOLERANCE)]
    pub tolerance: f64,
}

/// Exact resolved configuration of a run, written next to its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub resolved: T,
}

fn write_manifest<T: Serialize>(path: &Path, command: &'static str, g: &Global, resolved: T) -> Result<()> {
    let m = RunManifest { tool: env!("CARGO_PKG_NAME"), version: env!("CARGO_PKG_VERSION"), command, seed: g.seed, resolved };
    fs::write(path, config::to_json(&m))
}

/// Progress messages on stderr at verbosity >= 1.
pub struct Log(pub u8);

impl Log {
    pub fn info(&self, msg: impl AsRef<str>) {
        if self.0 > 0 {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn out_path(g: &Global, explicit: Option<&PathBuf>, what: &str) -> Result<PathBuf> {
    explicit.or(g.out.as_ref()).cloned().ok_or_else(|| Error::Usage(format!("--out is required ({what})")))
}

/// Manifest path for a file output: `model.json` gets `model.run.json`.
fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn run(cli: Cli) -> Result<i32> {
    let g = cli.global.clone();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(Error::Usage("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::Usage(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Synth(a) => synth_cmd(&g, &a),
        Command::Preprocess(a) => preprocess_cmd(&g, &a),
        Command::Train(a) => train_cmd(&g, &a),
        Command::Loocv(a) => loocv_cmd(&g, &a),
        Command::Report(a) => report_cmd(&g, &a),
        Command::Gradcheck(a) => gradcheck_cmd(&g, &a),
    })
}

pub fn resolve_cohort(g: &Global, a: &SynthArgs) -> Result<CohortSpec> {
    let mut spec: CohortSpec = match &a.config {
        Some(p) => config::load(p)?,
        None => CohortSpec::default(),
    };
    spec.seed = g.seed;
    if let Some(n) = a.n_healthy {
        spec.n_healthy = n;
    }
    if let Some(n) = a.n_nonhealthy {
        spec.n_nonhealthy = n;
    }
    if let Some(s) = a.separation {
        spec.class_separation = s;
    }
    if let Some(s) = a.noise {
        spec.noise_std = s;
    }
    if let Some(d) = a.duration_s {
        spec.duration_s = d;
    }
    if let Some(r) = a.rate_hz {
        spec.breath_rate_hz.healthy = Range::fixed(r);
        spec.breath_rate_hz.nonhealthy = Range::fixed(r);
    }
    spec.validate()?;
    Ok(spec)
}

fn synth_cmd(g: &Global, a: &SynthArgs) -> Result<i32> {
    let out = out_path(g, None, "dataset directory")?;
    let spec = resolve_cohort(g, a)?;
    let cohort = synth::generate_cohort(&spec)?;
    dataset::save_dataset(&cohort.dataset, &out)?;
    fs::write(&out.join(TRUTH), config::to_json(&cohort.truth))?;
    write_manifest(&out.join(RUN_MANIFEST), "synth", g, &spec)?;
    println!("wrote {} patients to {}", cohort.dataset.len(), out.display());
    Ok(0)
}

fn print_diagnostics(ds: &Dataset) {
    for d in &ds.diagnostics {
        let what = if d.skipped { "skipped" } else { "flagged" };
        eprintln!("{what} {}: {}", d.patient_id, d.message);
    }
}

fn preprocess_cmd(g: &Global, a: &PreprocessArgs) -> Result<i32> {
    let out = out_path(g, a.output.as_ref(), "archive directory")?;
    let cfg = a.dsp.config();
    cfg.validate()?;
    let ds = dataset::load_dataset(&a.input)?;
    print_diagnostics(&ds);
    let outcomes: Vec<_> = ds.patients.par_iter().map(|p| dsp::preprocess_patient(p, &cfg)).collect();
    let rows: Vec<PatientRow> = ds.patients.iter().zip(&outcomes).map(|(p, o)| PatientRow::new(&p.patient_id, o)).collect();
    for r in rows.iter().filter(|r| !r.flag.is_empty()) {
        eprintln!("no examples for {}: {}", r.patient_id, r.flag);
    }
    let examples: Vec<PatientExample> = outcomes.into_iter().flat_map(|o| o.examples).collect();
    archive::save_archive(&examples, &rows, &out)?;
    write_manifest(&out.join(RUN_MANIFEST), "preprocess", g, (a, cfg))?;
    println!("wrote {} examples from {} patients to {}", examples.len(), rows.iter().filter(|r| r.examples > 0).count(), out.display());
    Ok(0)
}

/// Examples and labels from either a dataset directory or a cycle archive.
pub fn load_examples(data: &Path, dsp_cfg: &DspConfig, log: &Log) -> Result<(Dataset, ExampleBank)> {
    if archive::is_archive(data) {
        let examples = archive::load_archive(data)?;
        let mut ds = Dataset::default();
        for ex in &examples {
            if ds.get(&ex.patient_id).is_none() {
                ds.patients.push(label_only(ex.patient_id.clone(), ex.label, ex.disease_class, ex.demographics));
            }
        }
        log.info(format!("archive: {} examples from {} patients", examples.len(), ds.len()));
        Ok((ds, ExampleBank::from_examples(examples)))
    } else {
        let ds = dataset::load_dataset(data)?;
        print_diagnostics(&ds);
        let bank = ExampleBank::build(&ds.patients, dsp_cfg);
        for (id, why) in &bank.dropped {
            eprintln!("no examples for {id}: {why}");
        }
        log.info(format!("dataset: {} patients, {} usable", ds.len(), bank.examples.len()));
        Ok((ds, bank))
    }
}

fn label_only(patient_id: String, label: Label, disease_class: breathscreen_core::data::DiseaseClass, demographics: Demographics) -> PatientRecord {
    PatientRecord { patient_id, label, disease_class, demographics, recordings: Default::default() }
}

fn default_model() -> ModelConfig {
    ModelConfig::new(EncoderConfig::new(EncoderFamily::BiLstm, 32, 2), HeadConfig { hidden_sizes: vec![16], ..Default::default() })
}

fn train_cmd(g: &Global, a: &TrainArgs) -> Result<i32> {
    let log = Log(g.verbose);
    let out = out_path(g, None, "checkpoint file")?;
    let model_cfg: ModelConfig = match &a.model_config {
        Some(p) => config::load(p)?,
        None => default_model(),
    };
    model_cfg.validate()?;
    let mut train_cfg: TrainConfig = match &a.train_config {
        Some(p) => config::load(p)?,
        None => TrainConfig::default(),
    };
    train_cfg.seed = rng::derive_seed(g.seed, &[rng::tag("train")]);
    train_cfg.validate()?;
    if !(a.val_fraction > 0.0 && a.val_fraction < 1.0) {
        return Err(Error::Usage(format!("--val-fraction {} outside (0, 1)", a.val_fraction)));
    }
    let dsp_cfg = a.dsp.config();
    let (ds, bank) = load_examples(&a.data, &dsp_cfg, &log)?;
    let labels: Vec<(String, Label)> =
        ds.patients.iter().filter(|p| bank.contains(&p.patient_id)).map(|p| (p.patient_id.clone(), p.label)).collect();
    let (tr_ids, vl_ids) = evaluation::stratified_split(&labels, a.val_fraction, rng::derive_seed(g.seed, &[rng::tag("split")]));
    let gather = |ids: &[String]| ids.iter().flat_map(|id| bank.examples[id].iter().cloned()).collect::<Vec<_>>();
    let (tr, vl) = (gather(&tr_ids), gather(&vl_ids));
    log.info(format!("training on {} cycles ({} patients), validating on {} cycles ({} patients)", tr.len(), tr_ids.len(), vl.len(), vl_ids.len()));
    let (model, history) = training::fit(&tr, &vl, &model_cfg, &train_cfg)?;
    for w in &history.warnings {
        eprintln!("warning: {w}");
    }
    let best = history.best();
    println!(
        "best epoch {} of {}: train loss {:.4}, val loss {}",
        history.best_epoch,
        history.epochs.len(),
        best.train_loss,
        best.val_loss.map(|v| format!("{v:.4}")).unwrap_or_else(|| "NA".into())
    );
    fs::write(&sidecar(&out, "history.csv"), checkpoint::history_csv(&history))?;
    checkpoint::save(&Checkpoint::new(model, Some(history)), &out)?;
    #[derive(Serialize)]
    struct Resolved<'a> {
        args: &'a TrainArgs,
        model: &'a ModelConfig,
        train: &'a TrainConfig,
        dsp: DspConfig,
        train_ids: &'a [String],
        val_ids: &'a [String],
    }
    let resolved = Resolved { args: a, model: &model_cfg, train: &train_cfg, dsp: dsp_cfg, train_ids: &tr_ids, val_ids: &vl_ids };
    write_manifest(&sidecar(&out, "run.json"), "train", g, resolved)?;
    Ok(0)
}

/// Experiment a `loocv` invocation runs, with every seed derived from
/// `--seed`.
pub fn resolve_experiment(g: &Global, a: &LoocvArgs) -> Result<Experiment> {
    let mut e: Experiment = match &a.config {
        Some(p) => config::load(p)?,
        None => Experiment::default(),
    };
    if let Some(p) = &a.model_space {
        e.space = config::load::<SearchSpace>(p)?;
    }
    if let Some(n) = a.seeds {
        e.eval.seeds = (1..=n as u64).collect();
    }
    if g.seed != 0 {
        e.eval.seeds = e.eval.seeds.iter().map(|&s| rng::derive_seed(g.seed, &[s])).collect();
    }
    e.train.seed = g.seed;
    e.hpo.seed = g.seed;
    if let Some(t) = a.trials {
        e.hpo.budget = t;
    }
    if let Some(m) = a.max_epochs {
        e.train.max_epochs = m;
    }
    if let Some(p) = a.patience {
        e.train.patience = p;
    }
    if let Some(h) = a.holdout_mode {
        e.eval.holdout_mode = match h {
            HoldoutArg::FinalRetrain => HoldoutMode::FinalRetrain,
            HoldoutArg::PerFoldEnsemble => HoldoutMode::PerFoldEnsemble,
        };
    }
    if let Some(o) = a.objective {
        e.hpo.objective = match o {
            ObjectiveArg::CycleF1 => Objective::CycleF1,
            ObjectiveArg::PatientF1 => Objective::PatientF1,
            ObjectiveArg::NegLoss => Objective::NegLoss,
        };
    }
    e.validate()?;
    Ok(e)
}

/// Run the full protocol with folds spread over the current thread pool.
pub fn run_loocv(ds: &Dataset, bank: &ExampleBank, e: &Experiment, verbose: u8) -> Result<evaluation::EvalReport> {
    let report = evaluation::evaluate_bank_with(ds, bank, e, |ctx| {
        let n = ctx.plans.len();
        (0..n)
            .into_par_iter()
            .map(|i| {
                let r = ctx.run_fold(i);
                if verbose > 0 {
                    if let Ok(f) = &r {
                        eprintln!(
                            "seed {} fold {}/{n}: {} is {} predicted {} ({:.3})",
                            ctx.seed,
                            i + 1,
                            f.plan.test_patient_id,
                            f.actual.as_str(),
                            f.predicted.as_str(),
                            f.confidence
                        );
                    }
                }
                r
            })
            .collect()
    })?;
    Ok(report)
}

fn loocv_cmd(g: &Global, a: &LoocvArgs) -> Result<i32> {
    let log = Log(g.verbose);
    let out = out_path(g, None, "report directory")?;
    let e = resolve_experiment(g, a)?;
    let (ds, bank) = load_examples(&a.data, &e.eval.dsp, &log)?;
    let report = run_loocv(&ds, &bank, &e, g.verbose)?;
    report::write_report(&report, &out)?;
    write_manifest(&out.join(RUN_MANIFEST), "loocv", g, (&a.data, &e))?;
    for s in &report.seeds {
        let m = &s.metrics;
        println!(
            "seed {}: accuracy {} sensitivity {} specificity {} holdout TNR {}",
            s.seed,
            fmt_opt(m.accuracy),
            fmt_opt(m.sensitivity),
            fmt_opt(m.specificity),
            fmt_opt(s.holdout.as_ref().and_then(|h| h.tnr))
        );
    }
    if let Some(acc) = report.aggregate.accuracy {
        println!("accuracy {:.3} +/- {:.3} over {} seeds", acc.mean, acc.sd, acc.n);
    }
    for (i, j) in &report.identical_holdouts {
        println!("seeds {} and {} share the same holdout", report.seeds[*i].seed, report.seeds[*j].seed);
    }
    Ok(0)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "NA".into())
}

fn report_cmd(g: &Global, a: &ReportArgs) -> Result<i32> {
    let out = out_path(g, None, "figure directory")?;
    fs::create_dir_all(&out)?;
    let cfg = a.dsp.config();
    cfg.validate()?;
    let spec = FilterSpec::new(cfg.cutoff_hz, dataset::NOMINAL_RATE_HZ)?;
    let n = ((20.0 - cfg.trim_s).max(1.0) * dataset::NOMINAL_RATE_HZ) as usize;
    fs::write(&out.join("filter_response.svg"), plot::filter_response(&spec, n))?;
    let mut written = vec!["filter_response.svg".to_string()];
    if let Some(dir) = &a.input {
        let full: evaluation::EvalReport = config::load(&dir.join(report::FULL_REPORT).with_extension("json"))?;
        for s in &full.seeds {
            let name = format!("heatmap_seed_{}.svg", s.seed);
            fs::write(&out.join(&name), plot::heatmap(&s.grid, &format!("Cycle-level NH probability, seed {}", s.seed)))?;
            written.push(name);
        }
    }
    if let Some(dir) = &a.data {
        let ds = dataset::load_dataset(dir)?;
        let truth: Option<Vec<PatientTruth>> = dir.join(TRUTH).is_file().then(|| config::load(&dir.join(TRUTH))).transpose()?;
        let patient = match &a.patient {
            Some(id) => ds.get(id).ok_or_else(|| Error::Usage(format!("patient {id} not in {}", dir.display())))?,
            None => ds.trainable().next().ok_or_else(|| Error::Usage(format!("no trainable patient in {}", dir.display())))?,
        };
        for scene in ScenePosition::ALL {
            let Some(rec) = patient.recordings.get(&scene) else { continue };
            let seg = dsp::segment_scene(rec, &cfg)?;
            let starts: Vec<f64> = truth
                .iter()
                .flatten()
                .filter(|t| t.patient_id == patient.patient_id)
                .flat_map(|t| t.scenes[scene.index()].cycle_starts.iter().map(|s| s - seg.offset as f64))
                .filter(|&s| s >= 0.0)
                .collect();
            let name = format!("segmentation_{}_{scene}.svg", patient.patient_id);
            let title = format!("{} {scene}: {} cycles", patient.patient_id, seg.cycles.len());
            fs::write(&out.join(&name), plot::segmentation_overlay(&seg, &title, &starts))?;
            written.push(name);
        }
    }
    write_manifest(&out.join(RUN_MANIFEST), "report", g, (a, cfg))?;
    for w in written {
        println!("{}", out.join(w).display());
    }
    Ok(0)
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckResult {
    pub networks: Vec<(u64, usize, f64)>,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Check `a.networks` seeded networks (LSTM and BiLSTM alternating) against
/// central differences over every parameter.
pub fn run_gradcheck(seed: u64, a: &GradcheckArgs) -> Result<GradcheckResult> {
    let mut networks = Vec::with_capacity(a.networks);
    for i in 0..a.networks as u64 {
        let family = if i % 2 == 0 { EncoderFamily::BiLstm } else { EncoderFamily::Lstm };
        let mut enc = EncoderConfig::new(family, a.hidden, a.layers);
        enc.shared_across_scenes = i % 3 != 2;
        let cfg = ModelConfig::new(enc, HeadConfig { hidden_sizes: vec![a.head], ..Default::default() });
        let s = rng::derive_seed(seed, &[rng::tag("gradcheck"), i]);
        let mut r = rng::stream(s, &[]);
        let net = Network::init(&cfg, &mut r)?;
        let input = gradcheck::random_input(cfg.input_channels, a.steps, false, &mut r);
        let target = (i % 2) as f64;
        let rep = gradcheck::check(&net, &input, target, a.epsilon, None)?;
        networks.push((s, net.num_params(), rep.max_rel_error));
    }
    let max_rel_error = networks.iter().map(|n| n.2).fold(0.0, f64::max);
    Ok(GradcheckResult { networks, max_rel_error, tolerance: a.tolerance, passed: max_rel_error < a.tolerance })
}

fn gradcheck_cmd(g: &Global, a: &GradcheckArgs) -> Result<i32> {
    if a.networks == 0 || a.steps == 0 || !(a.epsilon > 0.0) {
        return Err(Error::Usage("gradcheck needs --networks >= 1, --steps >= 1 and --epsilon > 0".into()));
    }
    let res = run_gradcheck(g.seed, a)?;
    for (s, n, e) in &res.networks {
        if g.verbose > 0 {
            eprintln!("network seed {s}: {n} parameters, max relative error {e:.3e}");
        }
    }
    println!("max relative gradient error {:.3e} (tolerance {:.0e})", res.max_rel_error, res.tolerance);
    if let Some(out) = &g.out {
        fs::write(out, config::to_json(&res))?;
    }
    Ok(if res.passed { 0 } else { 1 })
}
