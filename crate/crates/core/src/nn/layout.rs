use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::config::ModelConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamGroup {
    Encoder,
    Head,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TensorRole {
    /// Input-to-gate weights, `4h x d`, gate blocks in order i, f, g, o.
    InputWeights,
    /// Hidden-to-gate weights, `4h x h`.
    RecurrentWeights,
    /// Gate biases, `4h`.
    GateBias,
    DenseWeights,
    DenseBias,
}

/// One named block inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub group: ParamGroup,
    pub role: TensorRole,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> core::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Offsets of one LSTM direction's tensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct CellSlots {
    pub w: usize,
    pub u: usize,
    pub b: usize,
    pub hidden: usize,
    pub input: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct DenseSlots {
    pub w: usize,
    pub b: usize,
    pub rows: usize,
    pub cols: usize,
}

/// Where every tensor of a [`ModelConfig`] lives in the flat parameter
/// vector. Tensors are allocated in order: encoder stacks, layers,
/// directions (forward before backward), then head layers.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamLayout {
    tensors: Vec<TensorSpec>,
    /// `[stack][layer][direction]`
    pub(crate) cells: Vec<Vec<Vec<CellSlots>>>,
    pub(crate) dense: Vec<DenseSlots>,
    total: usize,
}

impl ParamLayout {
    pub fn new(cfg: &ModelConfig) -> Self {
        let mut tensors = Vec::new();
        let mut offset = 0;
        let mut push = |tensors: &mut Vec<TensorSpec>, name: String, group, role, rows, cols| {
            let at = offset;
            tensors.push(TensorSpec { name, group, role, rows, cols, offset: at });
            offset += rows * cols;
            at
        };
        let enc = &cfg.encoder;
        let dirs = enc.family.directions();
        let h = enc.hidden;
        let mut cells = Vec::new();
        for s in 0..enc.stacks() {
            let mut layers = Vec::new();
            for l in 0..enc.layers {
                let d = if l == 0 { cfg.input_channels } else { dirs * h };
                let mut dir_slots = Vec::new();
                for dir in 0..dirs {
                    let tag = if dir == 0 { "fwd" } else { "bwd" };
                    let prefix = format!("encoder{s}.layer{l}.{tag}");
                    let w = push(&mut tensors, format!("{prefix}.W"), ParamGroup::Encoder, TensorRole::InputWeights, 4 * h, d);
                    let u = push(&mut tensors, format!("{prefix}.U"), ParamGroup::Encoder, TensorRole::RecurrentWeights, 4 * h, h);
                    let b = push(&mut tensors, format!("{prefix}.b"), ParamGroup::Encoder, TensorRole::GateBias, 4 * h, 1);
                    dir_slots.push(CellSlots { w, u, b, hidden: h, input: d });
                }
                layers.push(dir_slots);
            }
            cells.push(layers);
        }
        let mut dense = Vec::new();
        let mut fan_in = cfg.head_input_len();
        let sizes: Vec<usize> = cfg.head.hidden_sizes.iter().copied().chain(core::iter::once(1)).collect();
        for (k, &size) in sizes.iter().enumerate() {
            let w = push(&mut tensors, format!("head.dense{k}.W"), ParamGroup::Head, TensorRole::DenseWeights, size, fan_in);
            let b = push(&mut tensors, format!("head.dense{k}.b"), ParamGroup::Head, TensorRole::DenseBias, size, 1);
            dense.push(DenseSlots { w, b, rows: size, cols: fan_in });
            fan_in = size;
        }
        ParamLayout { tensors, cells, dense, total: offset }
    }

    pub fn tensors(&self) -> &[TensorSpec] {
        &self.tensors
    }

    /// Total parameters, enumerated from allocated tensors.
    pub fn total(&self) -> usize {
        self.total
    }

    /// Zero the entries of `grad` that belong to any of `frozen`.
    pub fn mask(&self, grad: &mut [f64], frozen: &[ParamGroup]) {
        for t in self.tensors.iter().filter(|t| frozen.contains(&t.group)) {
            grad[t.range()].iter_mut().for_each(|g| *g = 0.0);
        }
    }
}
