use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EncoderFamily {
    #[serde(rename = "LSTM")]
    Lstm,
    #[serde(rename = "BiLSTM")]
    BiLstm,
}

impl EncoderFamily {
    pub fn directions(self) -> usize {
        match self {
            EncoderFamily::Lstm => 1,
            EncoderFamily::BiLstm => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EncoderFamily::Lstm => "LSTM",
            EncoderFamily::BiLstm => "BiLSTM",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub family: EncoderFamily,
    pub hidden: usize,
    pub layers: usize,
    /// One encoder applied to all five scenes instead of one per scene.
    pub shared_across_scenes: bool,
}

impl EncoderConfig {
    pub fn new(family: EncoderFamily, hidden: usize, layers: usize) -> Self {
        EncoderConfig { family, hidden, layers, shared_across_scenes: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.layers == 0 {
            return Err(Error::InvalidConfig(format!(
                "encoder needs hidden >= 1 and layers >= 1, got {}x{}",
                self.hidden, self.layers
            )));
        }
        Ok(())
    }

    pub fn stacks(&self) -> usize {
        if self.shared_across_scenes {
            1
        } else {
            5
        }
    }

    /// Width of one scene's embedding.
    pub fn scene_embedding_len(&self) -> usize {
        self.family.directions() * self.hidden
    }

    /// Width of the concatenated five-scene embedding.
    pub fn embedding_len(&self) -> usize {
        5 * self.scene_embedding_len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Activation {
    #[default]
    #[serde(rename = "tanh")]
    Tanh,
    #[serde(rename = "relu")]
    Relu,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HeadConfig {
    pub hidden_sizes: Vec<usize>,
    #[serde(default)]
    pub activation: Activation,
}

impl Default for HeadConfig {
    fn default() -> Self {
        HeadConfig { hidden_sizes: vec![64, 16], activation: Activation::Tanh }
    }
}

impl HeadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_sizes.contains(&0) {
            return Err(Error::InvalidConfig(format!("head layer sizes must be >= 1: {:?}", self.hidden_sizes)));
        }
        Ok(())
    }
}

/// Full classifier layout: scene encoder(s), head and optional demographic
/// inputs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    #[serde(default)]
    pub head: HeadConfig,
    /// Append standardized (age, height, weight) to the head input.
    #[serde(default)]
    pub use_demographics: bool,
    #[serde(default = "default_channels")]
    pub input_channels: usize,
}

fn default_channels() -> usize {
    6
}

impl ModelConfig {
    pub fn new(encoder: EncoderConfig, head: HeadConfig) -> Self {
        ModelConfig { encoder, head, use_demographics: false, input_channels: 6 }
    }

    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        self.head.validate()?;
        if self.input_channels == 0 {
            return Err(Error::InvalidConfig("input_channels must be >= 1".into()));
        }
        Ok(())
    }

    pub fn head_input_len(&self) -> usize {
        self.encoder.embedding_len() + if self.use_demographics { 3 } else { 0 }
    }
}

/// Weights of one LSTM cell direction: `4h(d + h + 1)`.
pub fn cell_parameters(hidden: usize, input: usize) -> usize {
    4 * hidden * (input + hidden + 1)
}

/// Parameters of one encoder stack (all layers and directions).
pub fn encoder_stack_parameters(enc: &EncoderConfig, input: usize) -> usize {
    let dirs = enc.family.directions();
    (0..enc.layers)
        .map(|l| {
            let d = if l == 0 { input } else { dirs * enc.hidden };
            dirs * cell_parameters(enc.hidden, d)
        })
        .sum()
}

/// Dense layers of the head including the sigmoid output unit.
pub fn head_parameters(head: &HeadConfig, input: usize) -> usize {
    let mut total = 0;
    let mut fan_in = input;
    for &size in head.hidden_sizes.iter().chain(core::iter::once(&1)) {
        total += fan_in * size + size;
        fan_in = size;
    }
    total
}

/// Closed-form trainable parameter count.
pub fn count_parameters(cfg: &ModelConfig) -> usize {
    cfg.encoder.stacks() * encoder_stack_parameters(&cfg.encoder, cfg.input_channels)
        + head_parameters(&cfg.head, cfg.head_input_len())
}
