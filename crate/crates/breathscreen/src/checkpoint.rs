//! Model checkpoints: JSON with the model configuration, every parameter
//! as a 64-bit float and the training-split standardization statistics.
//! Floats round-trip exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use breathscreen_core::training::{History, TrainedModel};

use crate::config;
use crate::error::{fs, Error, Result};

pub const FORMAT: &str = "breathscreen-checkpoint";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub model: TrainedModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history: Option<History>,
}

impl Checkpoint {
    pub fn new(model: TrainedModel, history: Option<History>) -> Self {
        Checkpoint { format: FORMAT.into(), version: FORMAT_VERSION, model, history }
    }
}

pub fn save(ck: &Checkpoint, path: &Path) -> Result<()> {
    fs::write(path, config::to_json(ck))
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    let ck: Checkpoint = serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| Error::format(path, e))?;
    if ck.format != FORMAT || ck.version != FORMAT_VERSION {
        return Err(Error::format(path, format!("unsupported checkpoint {} v{}", ck.format, ck.version)));
    }
    // Rebuilding the network checks tensor shapes against the config.
    ck.model.network().map_err(|e| Error::format(path, e))?;
    Ok(ck)
}

/// Per-epoch history as CSV, absent validation values left empty.
pub fn history_csv(h: &History) -> String {
    let mut out = String::from("epoch,train_loss,train_accuracy,val_loss,val_accuracy\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for e in &h.epochs {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.epoch,
            e.train_loss,
            e.train_accuracy,
            opt(e.val_loss),
            opt(e.val_accuracy)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use breathscreen_core::nn::{EncoderConfig, EncoderFamily, HeadConfig, ModelConfig, Network};
    use breathscreen_core::dsp::Standardizer;
    use breathscreen_core::rng;

    #[test]
    fn parameters_round_trip_bit_exact() {
        let cfg = ModelConfig::new(EncoderConfig::new(EncoderFamily::BiLstm, 3, 2), HeadConfig { hidden_sizes: vec![4], ..Default::default() });
        let net = Network::init(&cfg, &mut rng::stream(3, &[])).unwrap();
        let ck = Checkpoint::new(TrainedModel::new(&net, Standardizer::identity()), None);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        save(&ck, &p).unwrap();
        let back = load(&p).unwrap();
        assert_eq!(back, ck);
        let bits = |c: &Checkpoint| c.model.params.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&ck));
    }

    #[test]
    fn truncated_parameters_are_rejected() {
        let cfg = ModelConfig::new(EncoderConfig::new(EncoderFamily::Lstm, 2, 1), HeadConfig::default());
        let mut ck = Checkpoint::new(TrainedModel::zeros(&cfg).unwrap(), None);
        ck.model.params.pop();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        save(&ck, &p).unwrap();
        assert!(load(&p).is_err());
    }
}
