use breathscreen_core::data::{Label, PatientExample};
use breathscreen_core::dsp::{preprocess_patient, DspConfig};
use breathscreen_core::nn::{bce_loss, Activation, EncoderConfig, EncoderFamily, HeadConfig, ModelConfig};
use breathscreen_core::synth::{generate_cohort, CohortSpec, SynthCohort};
use breathscreen_core::training::{fit, predict_cycles, TrainConfig, TrainedModel};
use breathscreen_core::Error;

fn cohort(n_h: usize, n_nh: usize, seed: u64) -> SynthCohort {
    generate_cohort(&CohortSpec { n_healthy: n_h, n_nonhealthy: n_nh, class_separation: 1.0, seed, ..CohortSpec::default() }).unwrap()
}

fn examples(c: &SynthCohort) -> Vec<PatientExample> {
    c.dataset.patients.iter().flat_map(|p| preprocess_patient(p, &DspConfig::default()).examples).collect()
}

fn small_model() -> ModelConfig {
    ModelConfig::new(
        EncoderConfig::new(EncoderFamily::BiLstm, 3, 1),
        HeadConfig { hidden_sizes: vec![4], activation: Activation::Tanh },
    )
}

fn quick(max_epochs: usize, patience: usize) -> TrainConfig {
    TrainConfig { max_epochs, patience, learning_rate: 1e-2, seed: 3, ..TrainConfig::default() }
}

#[test]
fn same_seed_gives_bit_identical_parameters() {
    let ex = examples(&cohort(2, 2, 1));
    let (tr, vl): (Vec<_>, Vec<_>) = ex.into_iter().partition(|e| e.patient_id != "P001" && e.patient_id != "P004");
    let a = fit(&tr, &vl, &small_model(), &quick(6, 3)).unwrap();
    let b = fit(&tr, &vl, &small_model(), &quick(6, 3)).unwrap();
    assert_eq!(a.0.params, b.0.params);
    assert_eq!(a.1, b.1);
    let c = fit(&tr, &vl, &small_model(), &TrainConfig { seed: 4, ..quick(6, 3) }).unwrap();
    assert_ne!(a.0.params, c.0.params);
}

#[test]
fn two_patient_toy_set_is_learned() {
    let c = cohort(1, 1, 5);
    let ex = examples(&c);
    assert!(ex.iter().any(|e| e.label == Label::H) && ex.iter().any(|e| e.label == Label::NH));
    let cfg = TrainConfig { max_epochs: 40, patience: 39, learning_rate: 1e-2, seed: 1, ..TrainConfig::default() };
    let (model, hist) = fit(&ex, &[], &small_model(), &cfg).unwrap();
    let losses: Vec<f64> = hist.epochs.iter().map(|e| e.train_loss).collect();
    for w in losses[..5].windows(2) {
        assert!(w[1] < w[0], "{losses:?}");
    }
    assert_eq!(hist.epochs.last().unwrap().train_accuracy, 1.0);
    assert_eq!(hist.epochs.len(), 40);
    assert!(!hist.warnings.is_empty());
    let nh = c.dataset.patients.iter().find(|p| p.label == Label::NH).unwrap();
    let pred = predict_cycles(&model, nh, &DspConfig::default()).unwrap();
    assert!(!pred.probs.is_empty() && pred.probs.iter().all(|p| *p > 0.5), "{:?}", pred.probs);
}

#[test]
fn restored_parameters_reproduce_best_validation_loss() {
    let ex = examples(&cohort(3, 3, 2));
    let val_ids = ["P002", "P005"];
    let (vl, tr): (Vec<_>, Vec<_>) = ex.into_iter().partition(|e| val_ids.contains(&e.patient_id.as_str()));
    let (model, hist) = fit(&tr, &vl, &small_model(), &quick(12, 4)).unwrap();
    let probs = model.predict_examples(&vl).unwrap();
    let loss = probs.iter().zip(&vl).map(|(p, e)| bce_loss(*p, e.label.target())).sum::<f64>() / vl.len() as f64;
    let min = hist.epochs.iter().filter_map(|e| e.val_loss).fold(f64::INFINITY, f64::min);
    assert_eq!(loss, min);
    assert_eq!(hist.best().val_loss, Some(min));
}

#[test]
fn audit_records_each_split() {
    let ex = examples(&cohort(2, 2, 3));
    let (vl, tr): (Vec<_>, Vec<_>) = ex.into_iter().partition(|e| e.patient_id == "P001" || e.patient_id == "P003");
    let (_, hist) = fit(&tr, &vl, &small_model(), &quick(3, 2)).unwrap();
    let ids = |v: &[PatientExample]| v.iter().map(|e| e.patient_id.clone()).collect::<std::collections::BTreeSet<_>>();
    assert_eq!(hist.audit.standardization, ids(&tr));
    assert_eq!(hist.audit.gradient, ids(&tr));
    assert_eq!(hist.audit.early_stopping, ids(&vl));
    assert!(hist.audit.standardization.is_disjoint(&hist.audit.early_stopping));
}

#[test]
fn contract_violations_are_errors() {
    let ex = examples(&cohort(1, 1, 4));
    assert!(matches!(fit(&[], &ex, &small_model(), &quick(3, 2)), Err(Error::Empty(_))));
    assert!(fit(&ex, &ex[..1], &small_model(), &quick(3, 2)).is_err());
    assert!(fit(&ex, &[], &small_model(), &TrainConfig { patience: 0, ..quick(3, 2) }).is_err());
    assert!(fit(&ex, &[], &small_model(), &TrainConfig { batch_size: 0, ..quick(3, 2) }).is_err());
}

#[test]
fn zero_network_scores_one_half_per_cycle() {
    let c = cohort(1, 1, 6);
    let model = TrainedModel::zeros(&small_model()).unwrap();
    for p in &c.dataset.patients {
        let n = preprocess_patient(p, &DspConfig::default()).examples.len();
        let pred = predict_cycles(&model, p, &DspConfig::default()).unwrap();
        assert_eq!(pred.probs.len(), n);
        assert!(pred.probs.iter().all(|v| *v == 0.5));
    }
}
