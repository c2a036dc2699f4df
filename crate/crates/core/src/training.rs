//! Mini-batch training with early stopping and patient-level prediction.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{Label, PatientExample, PatientRecord};
use crate::dsp::{self, DspConfig, Standardizer};
use crate::error::{Error, Result};
use crate::nn::{self, bce_loss, ExampleInput, ModelConfig, Network, OptimizerKind};
use crate::rng;

/// Which partition an example was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Split {
    Train,
    Validation,
    Test,
    Holdout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    /// Weight-initialization seed.
    pub seed: u64,
    /// Epoch shuffling seed; derived from `seed` when unset.
    pub shuffle_seed: Option<u64>,
    pub gradient_clip_norm: f64,
    /// Weight each example's loss by `n / (2 n_class)` so both classes pull
    /// equally on the parameters.
    pub class_weighting: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_epochs: 300,
            patience: 15,
            batch_size: 16,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            seed: 0,
            shuffle_seed: None,
            gradient_clip_norm: 5.0,
            class_weighting: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidConfig(what));
        if self.patience == 0 || self.patience >= self.max_epochs {
            return bad(format!("patience {} must lie in [1, max_epochs = {})", self.patience, self.max_epochs));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if !(self.gradient_clip_norm.is_finite() && self.gradient_clip_norm > 0.0) {
            return bad(format!("gradient clip norm must be positive, got {}", self.gradient_clip_norm));
        }
        Ok(())
    }

    fn shuffle_seed(&self) -> u64 {
        self.shuffle_seed.unwrap_or_else(|| rng::derive_seed(self.seed, &[rng::tag("shuffle")]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

/// Patient ids each stage of `fit` read.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitAudit {
    pub standardization: BTreeSet<String>,
    pub gradient: BTreeSet<String>,
    pub early_stopping: BTreeSet<String>,
}

impl SplitAudit {
    pub fn touched(&self) -> BTreeSet<&str> {
        self.standardization
            .iter()
            .chain(&self.gradient)
            .chain(&self.early_stopping)
            .map(String::as_str)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    /// Index into `epochs` whose parameters were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub warnings: Vec<String>,
    pub train_cycles: usize,
    pub train_patients: usize,
    pub audit: SplitAudit,
}

impl History {
    pub fn best(&self) -> &EpochRecord {
        &self.epochs[self.best_epoch]
    }
}

/// A network together with the standardization fitted on its training
/// split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub model: ModelConfig,
    pub params: Vec<f64>,
    pub standardizer: Standardizer,
}

impl TrainedModel {
    pub fn new(net: &Network, standardizer: Standardizer) -> Self {
        TrainedModel { model: net.config().clone(), params: net.params().to_vec(), standardizer }
    }

    /// Zero parameters and identity standardization.
    pub fn zeros(cfg: &ModelConfig) -> Result<Self> {
        Ok(TrainedModel::new(&Network::zeros(cfg)?, Standardizer::identity()))
    }

    pub fn network(&self) -> Result<Network> {
        Network::from_params(&self.model, self.params.clone())
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn input(&self, ex: &PatientExample) -> ExampleInput {
        ExampleInput::from_example(ex, &self.standardizer, self.model.use_demographics)
    }

    /// P(NH) for each example, in order.
    pub fn predict_examples(&self, examples: &[PatientExample]) -> Result<Vec<f64>> {
        let net = self.network()?;
        examples.iter().map(|ex| net.predict(&self.input(ex))).collect()
    }
}

fn class_weights(examples: &[PatientExample], enabled: bool) -> [f64; 2] {
    let pos = examples.iter().filter(|e| e.label.is_positive()).count();
    let neg = examples.len() - pos;
    if !enabled || pos == 0 || neg == 0 {
        return [1.0, 1.0];
    }
    let n = examples.len() as f64;
    [n / (2.0 * neg as f64), n / (2.0 * pos as f64)]
}

fn evaluate(net: &Network, inputs: &[ExampleInput], targets: &[f64]) -> Result<(f64, f64)> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (x, &y) in inputs.iter().zip(targets) {
        let p = net.predict(x)?;
        loss += bce_loss(p, y);
        if (p >= 0.5) == (y == 1.0) {
            correct += 1;
        }
    }
    let n = inputs.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Train a fresh network on `train`, early-stopping on `val`.
///
/// Standardization is fitted on `train` only. When `val` is empty the full
/// `max_epochs` run and the last parameters are kept.
pub fn fit(
    train: &[PatientExample],
    val: &[PatientExample],
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<(TrainedModel, History)> {
    cfg.validate()?;
    model_cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let train_ids: BTreeSet<String> = train.iter().map(|e| e.patient_id.clone()).collect();
    let val_ids: BTreeSet<String> = val.iter().map(|e| e.patient_id.clone()).collect();
    if let Some(shared) = train_ids.intersection(&val_ids).next() {
        return Err(Error::InvalidConfig(format!("patient {shared} appears in both training and validation sets")));
    }
    let mut warnings = Vec::new();
    if val.is_empty() {
        warnings.push(String::from("validation set is empty; early stopping disabled"));
    }

    let standardizer = Standardizer::fit(train)?;
    let to_input = |e: &PatientExample| ExampleInput::from_example(e, &standardizer, model_cfg.use_demographics);
    let xs: Vec<ExampleInput> = train.iter().map(to_input).collect();
    let ys: Vec<f64> = train.iter().map(|e| e.label.target()).collect();
    let vxs: Vec<ExampleInput> = val.iter().map(to_input).collect();
    let vys: Vec<f64> = val.iter().map(|e| e.label.target()).collect();
    let weights = class_weights(train, cfg.class_weighting);

    let mut init_rng = rng::stream(cfg.seed, &[rng::tag("init")]);
    let mut shuffle_rng = rng::stream(cfg.shuffle_seed(), &[]);
    let mut net = Network::init(model_cfg, &mut init_rng)?;
    let mut opt = nn::Optimizer::new(cfg.optimizer, cfg.learning_rate, net.num_params());
    let mut grad = vec![0.0; net.num_params()];
    let mut order: Vec<usize> = (0..xs.len()).collect();

    let mut epochs = Vec::new();
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut stopped_early = false;
    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let pass = net.forward(&xs[i])?;
                let w = weights[ys[i] as usize];
                loss_sum += net.backward(&pass, ys[i], w * scale, &mut grad) / scale;
                if (pass.prob >= 0.5) == (ys[i] == 1.0) {
                    correct += 1;
                }
            }
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged(format!("non-finite gradient in epoch {epoch}")));
            }
            nn::clip_global_norm(&mut grad, cfg.gradient_clip_norm);
            opt.step(net.params_mut(), &grad);
        }
        let n = xs.len() as f64;
        let mut rec =
            EpochRecord { epoch, train_loss: loss_sum / n, train_accuracy: correct as f64 / n, val_loss: None, val_accuracy: None };
        if !vxs.is_empty() {
            let (vl, va) = evaluate(&net, &vxs, &vys)?;
            if !vl.is_finite() {
                return Err(Error::Diverged(format!("non-finite validation loss in epoch {epoch}")));
            }
            rec.val_loss = Some(vl);
            rec.val_accuracy = Some(va);
            if best.as_ref().map_or(true, |(b, _, _)| vl < *b) {
                best = Some((vl, epoch, net.params().to_vec()));
            }
        }
        epochs.push(rec);
        if let Some((_, b, _)) = &best {
            if epoch - b >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }
    let best_epoch = match best {
        Some((_, e, params)) => {
            net.params_mut().copy_from_slice(&params);
            e
        }
        None => epochs.len() - 1,
    };
    let audit = SplitAudit {
        standardization: train_ids.clone(),
        gradient: train_ids.clone(),
        early_stopping: val_ids,
    };
    let history = History {
        epochs,
        best_epoch,
        stopped_early,
        warnings,
        train_cycles: train.len(),
        train_patients: train_ids.len(),
        audit,
    };
    Ok((TrainedModel::new(&net, standardizer), history))
}

/// Per-cycle probabilities for one patient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CyclePredictions {
    pub patient_id: String,
    pub probs: Vec<f64>,
    /// Why no cycles were produced, if none were.
    pub flag: Option<String>,
}

/// Preprocess a patient and score every aligned cycle tuple in order.
pub fn predict_cycles(model: &TrainedModel, patient: &PatientRecord, dsp_cfg: &DspConfig) -> Result<CyclePredictions> {
    if !patient.is_complete() {
        return Err(Error::MissingScene("patient lacks a scene recording"));
    }
    let outcome = dsp::preprocess_patient(patient, dsp_cfg);
    let probs = model.predict_examples(&outcome.examples)?;
    Ok(CyclePredictions { patient_id: patient.patient_id.clone(), probs, flag: outcome.flag })
}

/// Cycle-to-patient rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Aggregation {
    #[default]
    Mean,
    MajorityVote,
}

/// Mean cycle probability; NH when it is at least 0.5.
pub fn predict_patient(cycle_probs: &[f64]) -> Result<(Label, f64)> {
    predict_patient_with(cycle_probs, Aggregation::Mean)
}

/// With [`Aggregation::MajorityVote`] the confidence is the fraction of
/// cycles at or above 0.5.
pub fn predict_patient_with(cycle_probs: &[f64], rule: Aggregation) -> Result<(Label, f64)> {
    if cycle_probs.is_empty() {
        return Err(Error::Empty("cycle probabilities"));
    }
    let n = cycle_probs.len() as f64;
    let confidence = match rule {
        Aggregation::Mean => cycle_probs.iter().sum::<f64>() / n,
        Aggregation::MajorityVote => cycle_probs.iter().filter(|p| **p >= 0.5).count() as f64 / n,
    };
    let label = if confidence >= 0.5 { Label::NH } else { Label::H };
    Ok((label, confidence))
}
