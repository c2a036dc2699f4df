//! Recurrent time encoder and classification head.
//!
//! Each scene's cycle runs through an LSTM or bidirectional LSTM stack. The
//! last forward output and (for bidirectional stacks) the first backward
//! output of the top layer form the scene embedding; the five scene
//! embeddings are concatenated in [`ScenePosition::ALL`] order and passed to
//! a dense head ending in one sigmoid unit.
//!
//! [`ScenePosition::ALL`]: crate::data::ScenePosition::ALL

mod config;
pub mod gradcheck;
mod layout;
mod loss;
mod lstm;
mod network;
mod optim;

pub use config::{
    cell_parameters, count_parameters, encoder_stack_parameters, head_parameters, Activation, EncoderConfig,
    EncoderFamily, HeadConfig, ModelConfig,
};
pub use layout::{ParamGroup, ParamLayout, TensorRole, TensorSpec};
pub use loss::{bce_logit_grad, bce_loss, PROB_EPS};
pub use lstm::{lstm_forward, Direction, LstmCellParams, LstmTrace};
pub use network::{encode_scenes, ExampleInput, ForwardPass, Network};
pub use optim::{clip_global_norm, Optimizer, OptimizerKind};
