//! Acceptance gate: one PASS/FAIL line per criterion; exits non-zero if any
//! criterion fails.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use breathscreen::cli::run_loocv;
use breathscreen::core::data::Label;
use breathscreen::core::dsp::{lowpass_fft, preprocess_patient, resample_fft, segment_scene, DspConfig, FilterSpec};
use breathscreen::core::evaluation::{compute_metrics, undersample, EvalConfig, EvalReport, ExampleBank, Experiment};
use breathscreen::core::hpo::{HeadPreset, HpoConfig, LearningRate, SearchSpace};
use breathscreen::core::nn::{
    count_parameters, Activation, EncoderConfig, EncoderFamily, HeadConfig, ModelConfig, Network, ParamLayout,
};
use breathscreen::core::rng;
use breathscreen::core::synth::{generate_cohort, window_ious, CohortSpec, PerClass, Range};
use breathscreen::core::training::{Split, TrainConfig};
use breathscreen::core::Result;
use rand::Rng;

struct Gate {
    failed: usize,
}

impl Gate {
    fn report(&mut self, id: u32, name: &str, pass: bool, detail: String, start: Instant) {
        if !pass {
            self.failed += 1;
        }
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("{verdict} [{id:>2}] {name}: {detail} ({:.1} s)", start.elapsed().as_secs_f64());
    }
}

fn rms(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

fn dft_mag(x: &[f64], k: usize) -> f64 {
    let n = x.len() as f64;
    let (re, im) = x.iter().enumerate().fold((0.0, 0.0), |(re, im), (t, v)| {
        let a = -2.0 * PI * k as f64 * t as f64 / n;
        (re + v * a.cos(), im + v * a.sin())
    });
    re.hypot(im)
}

fn tone(f: f64, n: usize, phase: f64) -> Vec<f64> {
    (0..n).map(|i| (2.0 * PI * f * i as f64 / 50.0 + phase).sin()).collect()
}

fn gradient_fidelity() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let eps = 1e-5;
    for seed in 0..5u64 {
        let family = if seed % 2 == 0 { EncoderFamily::BiLstm } else { EncoderFamily::Lstm };
        let cfg = ModelConfig::new(EncoderConfig::new(family, 3, 1), HeadConfig { hidden_sizes: vec![4], activation: Activation::Tanh });
        let mut r = rng::stream(seed, &[rng::tag("acceptance.grad")]);
        let net = Network::init(&cfg, &mut r)?;
        let input = breathscreen::core::nn::gradcheck::random_input(6, 12, false, &mut r);
        let target = (seed % 2) as f64;
        let (_, grad) = net.loss_and_grad(&input, target)?;
        let mut probe = net.clone();
        for i in 0..net.num_params() {
            let x = probe.params()[i];
            probe.params_mut()[i] = x + eps;
            let up = probe.loss(&input, target)?;
            probe.params_mut()[i] = x - eps;
            let down = probe.loss(&input, target)?;
            probe.params_mut()[i] = x;
            let fd = (up - down) / (2.0 * eps);
            let err = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1e-6);
            worst = worst.max(err);
        }
    }
    Ok((worst < 1e-4, format!("max relative error {worst:.2e} < 1e-4 over 5 networks (h=3, m=12, head [4])")))
}

fn filter_correctness() -> Result<(bool, String)> {
    let spec = FilterSpec::new(0.7, 50.0)?;
    let slow = tone(0.25, 1000, 0.3);
    let mix: Vec<f64> = slow.iter().zip(tone(5.0, 1000, 1.1)).map(|(a, b)| a + b).collect();
    let y = lowpass_fft(&mix, &spec)?;
    let rejection = dft_mag(&y, 100) / dft_mag(&mix, 100);
    let pass_rms = rms(&lowpass_fft(&slow, &spec)?, &slow);
    let mut r = rng::stream(11, &[]);
    let a: Vec<f64> = (0..777).map(|_| rng::normal(&mut r)).collect();
    let b: Vec<f64> = (0..777).map(|_| rng::normal(&mut r)).collect();
    let fa = lowpass_fft(&a, &spec)?;
    let fb = lowpass_fft(&b, &spec)?;
    let idem = rms(&lowpass_fft(&fa, &spec)?, &fa);
    let lin_in: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.5 * x - 0.7 * y).collect();
    let lin_out: Vec<f64> = fa.iter().zip(&fb).map(|(x, y)| 2.5 * x - 0.7 * y).collect();
    let lin = rms(&lowpass_fft(&lin_in, &spec)?, &lin_out);
    let ok = rejection < 1e-9 && pass_rms < 1e-9 && idem < 1e-9 && lin < 1e-9;
    Ok((ok, format!("5 Hz residual {rejection:.1e}, 0.25 Hz change {pass_rms:.1e}, idempotence {idem:.1e}, linearity {lin:.1e} (all < 1e-9)")))
}

fn segmentation_accuracy() -> Result<(bool, String)> {
    let cfg = DspConfig::default();
    let noiseless = CohortSpec {
        n_healthy: 10,
        n_nonhealthy: 10,
        breath_rate_hz: PerClass::both(Range::fixed(0.25)),
        class_separation: 0.0,
        noise_std: 0.0,
        drift_amplitude: 0.0,
        rate_jitter: 0.0,
        seed: 31,
        ..CohortSpec::default()
    };
    let c = generate_cohort(&noiseless)?;
    let mut worst: f64 = 0.0;
    let mut missed = 0usize;
    let mut detected = 0usize;
    for (p, truth) in c.dataset.patients.iter().zip(&c.truth) {
        for st in &truth.scenes {
            let seg = segment_scene(&p.recordings[&st.scene], &cfg)?;
            let starts: Vec<f64> = st.cycle_starts.iter().map(|s| s - seg.offset as f64).collect();
            for &m in &seg.peaks.maxima {
                worst = worst.max(starts.iter().map(|s| (m as f64 - s).abs()).fold(f64::MAX, f64::min));
            }
            detected += seg.peaks.maxima.len();
            let end = seg.trimmed.len() as f64 - 1.0;
            let quarter = 0.25 * 50.0 / st.rate_hz;
            missed += starts
                .iter()
                .filter(|s| **s > quarter && **s < end - quarter)
                .filter(|s| !seg.peaks.maxima.iter().any(|&m| (m as f64 - **s).abs() <= 1.0))
                .count();
        }
    }
    let low_noise = CohortSpec { n_healthy: 10, n_nonhealthy: 10, seed: 32, ..CohortSpec::default() };
    let c = generate_cohort(&low_noise)?;
    let mut ious = Vec::new();
    for (p, truth) in c.dataset.patients.iter().zip(&c.truth) {
        for st in &truth.scenes {
            let seg = segment_scene(&p.recordings[&st.scene], &cfg)?;
            let w: Vec<(usize, usize)> = seg.cycles.iter().map(|c| (c.source_window.0 + seg.offset, c.source_window.1 + seg.offset)).collect();
            ious.extend(window_ious(&w, st));
        }
    }
    let frac = ious.iter().filter(|v| **v >= 0.8).count() as f64 / ious.len().max(1) as f64;
    let ok = worst <= 1.0 && missed == 0 && detected > 0 && frac >= 0.9;
    Ok((
        ok,
        format!(
            "{detected} maxima, worst offset {worst:.2} samples (<= 1), {missed} interior maxima missed; {:.1}% of {} windows with IoU >= 0.8 (>= 90%)",
            100.0 * frac,
            ious.len()
        ),
    ))
}

fn resampling() -> Result<(bool, String)> {
    let c = generate_cohort(&CohortSpec { n_healthy: 5, n_nonhealthy: 5, seed: 41, ..CohortSpec::default() })?;
    let mut cycles = 0usize;
    let mut shape_ok = true;
    for p in &c.dataset.patients {
        for ex in preprocess_patient(p, &DspConfig::default()).examples {
            for cyc in &ex.scenes {
                cycles += 1;
                shape_ok &= cyc.channels.len() == 6 && cyc.channels.iter().all(|ch| ch.len() == 300) && cyc.is_finite();
            }
        }
    }
    let mut r = rng::stream(42, &[]);
    let x: Vec<f64> = (0..300).map(|_| rng::normal(&mut r)).collect();
    let ident = rms(&resample_fft(&x, 300)?, &x);
    let mut sine: f64 = 0.0;
    for n in [37usize, 150, 299, 301, 412, 650] {
        let ph = r.gen_range(0.0..2.0 * PI);
        let src: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64 + ph).sin()).collect();
        let want: Vec<f64> = (0..300).map(|i| (2.0 * PI * i as f64 / 300.0 + ph).sin()).collect();
        sine = sine.max(rms(&resample_fft(&src, 300)?, &want));
    }
    let ok = shape_ok && cycles > 0 && ident < 1e-9 && sine < 1e-6;
    Ok((ok, format!("{cycles} cycles all 6 x 300: {shape_ok}; identity {ident:.1e} (< 1e-9); single-period sine {sine:.1e} (< 1e-6)")))
}

fn leakage(reports: &[&EvalReport]) -> (bool, String) {
    let mut folds = 0usize;
    let mut violations = Vec::new();
    for rep in reports {
        for s in &rep.seeds {
            let cohort: BTreeSet<&str> = s.folds.iter().map(|f| f.plan.test_patient_id.as_str()).collect();
            for h in &s.holdout_ids {
                if cohort.contains(h.as_str()) {
                    violations.push(format!("seed {}: holdout {h} in cohort", s.seed));
                }
            }
            for f in &s.folds {
                folds += 1;
                let tr = f.access.ids(Split::Train);
                let vl = f.access.ids(Split::Validation);
                let ts = f.access.ids(Split::Test);
                let mut seen = BTreeSet::new();
                for id in tr.iter().chain(&vl).chain(&ts) {
                    if !seen.insert(*id) {
                        violations.push(format!("seed {} fold {}: {id} in two splits", s.seed, f.plan.fold));
                    }
                }
                if ts.len() != 1 || !ts.contains(f.plan.test_patient_id.as_str()) {
                    violations.push(format!("seed {} fold {}: test reads {:?}", s.seed, f.plan.fold, ts));
                }
                if s.holdout_ids.iter().any(|h| tr.contains(h.as_str()) || vl.contains(h.as_str())) {
                    violations.push(format!("seed {} fold {}: holdout used in training", s.seed, f.plan.fold));
                }
            }
        }
    }
    let detail = match violations.first() {
        None => format!("{folds} folds, no patient in more than one of train/validation/test, holdouts disjoint from cohorts"),
        Some(v) => format!("{} violations, first: {v}", violations.len()),
    };
    (violations.is_empty() && folds > 0, detail)
}

/// Small search space and epoch budget that keep 2 x 4 seeds x 16 folds x 5
/// trials within a few minutes on one core.
fn compact_experiment(seeds: Vec<u64>) -> Experiment {
    Experiment {
        space: SearchSpace {
            hidden: vec![2, 4],
            layers: vec![1],
            family: vec![EncoderFamily::Lstm, EncoderFamily::BiLstm],
            head: vec![HeadPreset::Small],
            learning_rate: LearningRate::Choices { values: vec![3e-3, 1e-2] },
            ..SearchSpace::default()
        },
        train: TrainConfig { max_epochs: 15, patience: 4, ..TrainConfig::default() },
        hpo: HpoConfig { budget: 5, ..HpoConfig::default() },
        eval: EvalConfig { seeds, ..EvalConfig::default() },
    }
}

fn separability_run(separation: f64) -> Result<EvalReport> {
    let spec = CohortSpec { n_healthy: 12, n_nonhealthy: 8, class_separation: separation, seed: 2024, ..CohortSpec::default() };
    let c = generate_cohort(&spec)?;
    let e = compact_experiment(vec![1, 2, 3, 4]);
    let bank = ExampleBank::build(&c.dataset.patients, &e.eval.dsp);
    run_loocv(&c.dataset, &bank, &e, 0).map_err(|err| breathscreen::core::Error::InvalidConfig(err.to_string()))
}

fn metrics_oracle() -> (bool, String) {
    let mut r = rng::stream(71, &[]);
    let mut mismatches = 0usize;
    for _ in 0..1000 {
        let n = r.gen_range(1..50);
        let pairs: Vec<(bool, bool)> = (0..n).map(|_| (r.gen_bool(0.5), r.gen_bool(0.5))).collect();
        let tp = pairs.iter().filter(|p| p.0 && p.1).count();
        let tn = pairs.iter().filter(|p| !p.0 && !p.1).count();
        let fp = pairs.iter().filter(|p| p.0 && !p.1).count();
        let fn_ = pairs.iter().filter(|p| !p.0 && p.1).count();
        let m = compute_metrics(tp, tn, fp, fn_);
        let q = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
        let same = m.sensitivity == q(tp, tp + fn_)
            && m.specificity == q(tn, tn + fp)
            && m.precision == q(tp, tp + fp)
            && m.accuracy == q(tp + tn, n)
            && m.tnr == m.specificity;
        if !same {
            mismatches += 1;
        }
    }
    let h = compute_metrics(8, 9, 1, 2);
    let hand = h.sensitivity == Some(0.8) && h.specificity == Some(0.9) && h.accuracy == Some(0.85);
    (mismatches == 0 && hand, format!("{mismatches} mismatches in 1000 vectors; hand case sensitivity 0.8, specificity 0.9, accuracy 0.85: {hand}"))
}

fn undersampling_arithmetic() -> Result<(bool, String)> {
    let spec = CohortSpec { n_healthy: 77, n_nonhealthy: 45, duration_s: 6.0, transient_duration_s: 1.0, seed: 81, ..CohortSpec::default() };
    let ds = generate_cohort(&spec)?.dataset;
    let (bal, hold) = undersample(&ds, 1)?;
    let ok = bal.len() == 90
        && bal.count(Label::H) == 45
        && hold.len() == 32
        && hold.patients.iter().all(|p| p.label == Label::H);
    Ok((ok, format!("77 H / 45 NH -> balanced {} ({} H), holdout {} all H", bal.len(), bal.count(Label::H), hold.len())))
}

fn parameter_accounting() -> Result<(bool, String)> {
    let mut configs = 0usize;
    let mut mismatches = 0usize;
    for family in [EncoderFamily::Lstm, EncoderFamily::BiLstm] {
        for hidden in [32, 64, 128] {
            for layers in [2, 4, 6] {
                for head in [HeadPreset::Small, HeadPreset::Medium] {
                    for shared in [true, false] {
                        let mut enc = EncoderConfig::new(family, hidden, layers);
                        enc.shared_across_scenes = shared;
                        let cfg = ModelConfig::new(enc, HeadConfig { hidden_sizes: head.hidden_sizes(), activation: Activation::Tanh });
                        let tensors: usize = ParamLayout::new(&cfg).tensors().iter().map(|t| t.len()).sum();
                        configs += 1;
                        if tensors != count_parameters(&cfg) || Network::zeros(&cfg)?.num_params() != tensors {
                            mismatches += 1;
                        }
                    }
                }
            }
        }
    }
    let mut enc = EncoderConfig::new(EncoderFamily::BiLstm, 128, 2);
    enc.shared_across_scenes = false;
    let reference = ModelConfig::new(enc, HeadConfig { hidden_sizes: vec![16, 8], activation: Activation::Tanh });
    let n = count_parameters(&reference);
    Ok((
        mismatches == 0,
        format!("{configs} grid configs, {mismatches} mismatches; BiLSTM(128,2), five unshared encoders, head [16, 8]: {n} (reference 2683041)"),
    ))
}

fn determinism(dir: &Path) -> (bool, String) {
    let bin = env!("CARGO_BIN_EXE_breathscreen");
    let data = dir.join("data");
    let run = |args: &[&str]| Command::new(bin).args(args).output().map(|o| o.status.success()).unwrap_or(false);
    let s = |p: &Path| p.to_str().unwrap().to_string();
    if !run(&["synth", "--seed", "9", "--n-healthy", "4", "--n-nonhealthy", "3", "--out", &s(&data)]) {
        return (false, "synth failed".into());
    }
    let cfg = dir.join("experiment.json");
    let mut e = compact_experiment(vec![1, 2]);
    e.train.max_epochs = 4;
    e.train.patience = 2;
    e.hpo.budget = 2;
    if fs::write(&cfg, serde_json::to_string(&e).unwrap()).is_err() {
        return (false, "could not write config".into());
    }
    let mut outs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.join(name);
        if !run(&["loocv", "--data", &s(&data), "--config", &s(&cfg), "--seed", "3", "--out", &s(&out)]) {
            return (false, format!("loocv run {name} failed"));
        }
        outs.push(fs::read(out.join("summary.json")).unwrap_or_default());
    }
    let same = !outs[0].is_empty() && outs[0] == outs[1];
    (same, format!("two loocv runs: summary.json {} bytes, identical: {same}", outs[0].len()))
}

fn main() -> ExitCode {
    let mut gate = Gate { failed: 0 };
    let total = Instant::now();
    let unwrap = |r: Result<(bool, String)>| r.unwrap_or_else(|e| (false, format!("error: {e}")));

    let t = Instant::now();
    let (ok, d) = unwrap(gradient_fidelity());
    let secs = t.elapsed().as_secs_f64();
    gate.report(1, "gradient fidelity", ok && secs < 10.0, format!("{d}; runtime {secs:.2} s < 10 s"), t);

    let t = Instant::now();
    let (ok, d) = unwrap(filter_correctness());
    let secs = t.elapsed().as_secs_f64();
    gate.report(2, "filter correctness", ok && secs < 1.0, format!("{d}; runtime {secs:.3} s < 1 s"), t);

    let t = Instant::now();
    let (ok, d) = unwrap(segmentation_accuracy());
    let secs = t.elapsed().as_secs_f64();
    gate.report(3, "segmentation accuracy", ok && secs < 30.0, format!("{d}; runtime {secs:.1} s < 30 s"), t);

    let t = Instant::now();
    let (ok, d) = unwrap(resampling());
    gate.report(4, "resampling", ok, d, t);

    let t = Instant::now();
    let sep1 = separability_run(1.0);
    let sep0 = separability_run(0.0);
    let secs = t.elapsed().as_secs_f64();
    let runs_t = t;

    let t = Instant::now();
    match (&sep1, &sep0) {
        (Ok(a), Ok(b)) => {
            let (ok, d) = leakage(&[a, b]);
            gate.report(5, "leakage-free LOOCV", ok, d, t);
        }
        _ => gate.report(5, "leakage-free LOOCV", false, "separability runs failed".into(), t),
    }

    match (&sep1, &sep0) {
        (Ok(a), Ok(b)) => {
            let acc1 = a.aggregate.accuracy.map_or(f64::NAN, |m| m.mean);
            let acc0 = b.aggregate.accuracy.map_or(f64::NAN, |m| m.mean);
            let per = |r: &EvalReport| r.seeds.iter().map(|s| format!("{:.3}", s.metrics.accuracy.unwrap_or(f64::NAN))).collect::<Vec<_>>().join(", ");
            let ok = acc1 >= 0.9 && (0.35..=0.65).contains(&acc0) && secs < 600.0;
            gate.report(
                6,
                "end-to-end separability",
                ok,
                format!(
                    "separation 1.0 accuracy {acc1:.3} >= 0.90 (seeds {}); separation 0.0 accuracy {acc0:.3} in [0.35, 0.65] (seeds {}); runtime {secs:.0} s < 600 s",
                    per(a),
                    per(b)
                ),
                runs_t,
            );
        }
        (a, b) => {
            let err = a.as_ref().err().or(b.as_ref().err()).map(|e| e.to_string()).unwrap_or_default();
            gate.report(6, "end-to-end separability", false, format!("error: {err}"), runs_t);
        }
    }

    let t = Instant::now();
    let (ok, d) = metrics_oracle();
    gate.report(7, "metrics oracle", ok, d, t);

    let t = Instant::now();
    let (ok, d) = unwrap(undersampling_arithmetic());
    gate.report(8, "undersampling arithmetic", ok, d, t);

    let t = Instant::now();
    let (ok, d) = unwrap(parameter_accounting());
    gate.report(9, "parameter accounting", ok, d, t);

    let t = Instant::now();
    match &sep1 {
        Ok(a) => {
            let m = a.median_cycle_sd.unwrap_or(f64::NAN);
            gate.report(10, "prediction stability", m < 0.15, format!("median per-patient sd of cycle probabilities {m:.4} < 0.15"), t);
        }
        Err(e) => gate.report(10, "prediction stability", false, format!("error: {e}"), t),
    }

    let t = Instant::now();
    let (ok, d) = match tempfile::TempDir::new() {
        Ok(dir) => determinism(dir.path()),
        Err(e) => (false, format!("temp dir: {e}")),
    };
    gate.report(11, "determinism", ok, d, t);

    println!("{} of 11 criteria passed in {:.0} s", 11 - gate.failed, total.elapsed().as_secs_f64());
    if gate.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
