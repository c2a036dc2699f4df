use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use crate::data::PatientExample;
use crate::dsp::Standardizer;
use crate::error::{Error, Result};
use crate::math;
use crate::rng;

use super::config::{Activation, ModelConfig};
use super::layout::{CellSlots, ParamLayout, TensorRole};
use super::loss::{bce_logit_grad, bce_loss};
use super::lstm::{self, CellRef, Direction, LstmTrace};

/// Model input for one aligned cycle tuple: five time-major `m x c`
/// matrices plus optional standardized demographics.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleInput {
    pub steps: usize,
    pub channels: usize,
    pub scenes: [Vec<f64>; 5],
    pub extra: Option<[f64; 3]>,
}

impl ExampleInput {
    /// Standardize a [`PatientExample`] and transpose its cycles to
    /// time-major order.
    pub fn from_example(ex: &PatientExample, standardizer: &Standardizer, use_demographics: bool) -> Self {
        let z = standardizer.apply(ex);
        let steps = z.scenes[0].len();
        let scenes = core::array::from_fn(|s| {
            let cyc = &z.scenes[s];
            let mut out = Vec::with_capacity(steps * 6);
            for t in 0..steps {
                for ch in &cyc.channels {
                    out.push(ch[t]);
                }
            }
            out
        });
        let extra = use_demographics.then(|| standardizer.demographics(ex));
        ExampleInput { steps, channels: 6, scenes, extra }
    }
}

/// Cached activations of one scene's encoder stack.
#[derive(Debug, Clone)]
struct SceneTrace {
    /// Input to each layer, time-major.
    layer_inputs: Vec<Vec<f64>>,
    /// `[layer][direction]`
    traces: Vec<Vec<LstmTrace>>,
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    scenes: Vec<SceneTrace>,
    /// Concatenated scene embeddings followed by optional extra features.
    head_input: Vec<f64>,
    /// Post-activation outputs of each hidden head layer.
    head_acts: Vec<Vec<f64>>,
    pub logit: f64,
    pub prob: f64,
}

impl ForwardPass {
    /// The five-scene embedding (without extra features).
    pub fn embedding(&self, len: usize) -> &[f64] {
        &self.head_input[..len]
    }
}

/// Scene encoder(s) plus fully connected head with a sigmoid output, all
/// parameters in one flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    cfg: ModelConfig,
    layout: ParamLayout,
    params: Vec<f64>,
}

impl Network {
    pub fn zeros(cfg: &ModelConfig) -> Result<Self> {
        cfg.validate()?;
        let layout = ParamLayout::new(cfg);
        let params = vec![0.0; layout.total()];
        Ok(Network { cfg: cfg.clone(), layout, params })
    }

    /// Uniform `+-1/sqrt(fan_in)` weights, zero biases except the forget
    /// gate bias which starts at 1.
    pub fn init<R: RngCore>(cfg: &ModelConfig, rng: &mut R) -> Result<Self> {
        let mut net = Network::zeros(cfg)?;
        for t in net.layout.tensors() {
            let range = t.range();
            match t.role {
                TensorRole::InputWeights | TensorRole::RecurrentWeights | TensorRole::DenseWeights => {
                    let bound = 1.0 / math::sqrt(t.cols as f64);
                    for v in &mut net.params[range] {
                        *v = rng::uniform(rng, -bound, bound);
                    }
                }
                TensorRole::GateBias => {
                    let h = t.rows / 4;
                    net.params[range.start + h..range.start + 2 * h].iter_mut().for_each(|v| *v = 1.0);
                }
                TensorRole::DenseBias => {}
            }
        }
        Ok(net)
    }

    pub fn from_params(cfg: &ModelConfig, params: Vec<f64>) -> Result<Self> {
        let mut net = Network::zeros(cfg)?;
        if params.len() != net.params.len() {
            return Err(Error::Shape(format!("expected {} parameters, got {}", net.params.len(), params.len())));
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("network parameters"));
        }
        net.params = params;
        Ok(net)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    fn cell(&self, slots: &CellSlots) -> CellRef<'_> {
        let (h, d) = (slots.hidden, slots.input);
        CellRef {
            w: &self.params[slots.w..slots.w + 4 * h * d],
            u: &self.params[slots.u..slots.u + 4 * h * h],
            b: &self.params[slots.b..slots.b + 4 * h],
            hidden: h,
            input: d,
        }
    }

    fn check_input(&self, input: &ExampleInput) -> Result<()> {
        if input.channels != self.cfg.input_channels || input.steps == 0 {
            return Err(Error::Shape(format!(
                "input has {} channels x {} steps, model expects {} channels",
                input.channels, input.steps, self.cfg.input_channels
            )));
        }
        if input.scenes.iter().any(|s| s.len() != input.steps * input.channels) {
            return Err(Error::Shape("scene matrices differ in size".into()));
        }
        if self.cfg.use_demographics != input.extra.is_some() {
            return Err(Error::Shape("demographic features do not match the model configuration".into()));
        }
        Ok(())
    }

    pub fn forward(&self, input: &ExampleInput) -> Result<ForwardPass> {
        self.check_input(input)?;
        let enc = &self.cfg.encoder;
        let dirs = enc.family.directions();
        let h = enc.hidden;
        let m = input.steps;
        let mut head_input = Vec::with_capacity(self.cfg.head_input_len());
        let mut scenes = Vec::with_capacity(5);
        for (j, x0) in input.scenes.iter().enumerate() {
            let stack = if enc.shared_across_scenes { 0 } else { j };
            let mut layer_inputs = vec![x0.clone()];
            let mut traces: Vec<Vec<LstmTrace>> = Vec::with_capacity(enc.layers);
            for l in 0..enc.layers {
                let x = &layer_inputs[l];
                let layer: Vec<LstmTrace> = (0..dirs)
                    .map(|dir| {
                        let slots = &self.layout.cells[stack][l][dir];
                        let d = if dir == 0 { Direction::Forward } else { Direction::Backward };
                        lstm::forward(self.cell(slots), x, m, d)
                    })
                    .collect();
                if l + 1 < enc.layers {
                    let mut next = Vec::with_capacity(m * dirs * h);
                    for t in 0..m {
                        for tr in &layer {
                            next.extend_from_slice(tr.output(t));
                        }
                    }
                    layer_inputs.push(next);
                }
                traces.push(layer);
            }
            let top = &traces[enc.layers - 1];
            head_input.extend_from_slice(top[0].output(m - 1));
            if dirs == 2 {
                head_input.extend_from_slice(top[1].output(0));
            }
            scenes.push(SceneTrace { layer_inputs, traces });
        }
        if let Some(extra) = input.extra {
            head_input.extend_from_slice(&extra);
        }

        let n_dense = self.layout.dense.len();
        let mut head_acts: Vec<Vec<f64>> = Vec::with_capacity(n_dense - 1);
        let mut logit = 0.0;
        for (k, ds) in self.layout.dense.iter().enumerate() {
            let a: &[f64] = if k == 0 { &head_input } else { &head_acts[k - 1] };
            let w = &self.params[ds.w..ds.w + ds.rows * ds.cols];
            let mut z = self.params[ds.b..ds.b + ds.rows].to_vec();
            for (r, zr) in z.iter_mut().enumerate() {
                let row = &w[r * ds.cols..(r + 1) * ds.cols];
                *zr += row.iter().zip(a).map(|(p, q)| p * q).sum::<f64>();
            }
            if k + 1 == n_dense {
                logit = z[0];
            } else {
                match self.cfg.head.activation {
                    Activation::Tanh => z.iter_mut().for_each(|v| *v = math::tanh(*v)),
                    Activation::Relu => z.iter_mut().for_each(|v| *v = v.max(0.0)),
                }
                head_acts.push(z);
            }
        }
        let prob = math::sigmoid(logit);
        Ok(ForwardPass { scenes, head_input, head_acts, logit, prob })
    }

    /// P(NH | cycles).
    pub fn predict(&self, input: &ExampleInput) -> Result<f64> {
        Ok(self.forward(input)?.prob)
    }

    /// Add `weight * d bce(p, target) / d params` into `grad` and return the
    /// weighted loss.
    pub fn backward(&self, pass: &ForwardPass, target: f64, weight: f64, grad: &mut [f64]) -> f64 {
        assert_eq!(grad.len(), self.params.len(), "gradient buffer size");
        let loss = weight * bce_loss(pass.prob, target);
        let dlogit = weight * bce_logit_grad(pass.prob, target);
        if dlogit == 0.0 {
            return loss;
        }

        // Head, last layer first.
        let n_dense = self.layout.dense.len();
        let mut delta = vec![dlogit];
        for k in (0..n_dense).rev() {
            let ds = self.layout.dense[k];
            let a_prev: &[f64] = if k == 0 { &pass.head_input } else { &pass.head_acts[k - 1] };
            let w = &self.params[ds.w..ds.w + ds.rows * ds.cols];
            let mut d_prev = vec![0.0; ds.cols];
            for r in 0..ds.rows {
                let dz = delta[r];
                grad[ds.b + r] += dz;
                let gw = &mut grad[ds.w + r * ds.cols..ds.w + (r + 1) * ds.cols];
                let row = &w[r * ds.cols..(r + 1) * ds.cols];
                for c in 0..ds.cols {
                    gw[c] += dz * a_prev[c];
                    d_prev[c] += dz * row[c];
                }
            }
            if k > 0 {
                let act = &pass.head_acts[k - 1];
                match self.cfg.head.activation {
                    Activation::Tanh => d_prev.iter_mut().zip(act).for_each(|(d, a)| *d *= 1.0 - a * a),
                    Activation::Relu => d_prev.iter_mut().zip(act).for_each(|(d, a)| {
                        if *a <= 0.0 {
                            *d = 0.0
                        }
                    }),
                }
            }
            delta = d_prev;
        }

        // Encoders.
        let enc = &self.cfg.encoder;
        let dirs = enc.family.directions();
        let h = enc.hidden;
        let span = dirs * h;
        for (j, scene) in pass.scenes.iter().enumerate() {
            let stack = if enc.shared_across_scenes { 0 } else { j };
            let d_emb = &delta[j * span..(j + 1) * span];
            let m = scene.traces[0][0].steps();
            let mut d_out: Vec<Vec<f64>> = vec![vec![0.0; m * h]; dirs];
            d_out[0][(m - 1) * h..m * h].copy_from_slice(&d_emb[..h]);
            if dirs == 2 {
                d_out[1][..h].copy_from_slice(&d_emb[h..2 * h]);
            }
            for l in (0..enc.layers).rev() {
                let x = &scene.layer_inputs[l];
                let d_in = self.layout.cells[stack][l][0].input;
                let mut dx = (l > 0).then(|| vec![0.0; m * d_in]);
                for dir in 0..dirs {
                    let slots = self.layout.cells[stack][l][dir];
                    let (gw, gu, gb) = cell_grads(grad, &slots);
                    lstm::backward(self.cell(&slots), x, &scene.traces[l][dir], &d_out[dir], gw, gu, gb, dx.as_deref_mut());
                }
                if let Some(dx) = dx {
                    for (dir, dst) in d_out.iter_mut().enumerate() {
                        for t in 0..m {
                            dst[t * h..(t + 1) * h].copy_from_slice(&dx[t * d_in + dir * h..t * d_in + (dir + 1) * h]);
                        }
                    }
                }
            }
        }
        loss
    }

    /// Loss and full gradient for a single example.
    pub fn loss_and_grad(&self, input: &ExampleInput, target: f64) -> Result<(f64, Vec<f64>)> {
        let pass = self.forward(input)?;
        let mut grad = vec![0.0; self.params.len()];
        let loss = self.backward(&pass, target, 1.0, &mut grad);
        Ok((loss, grad))
    }

    pub fn loss(&self, input: &ExampleInput, target: f64) -> Result<f64> {
        Ok(bce_loss(self.predict(input)?, target))
    }
}

/// Disjoint gradient slices for a cell's W, U and b (allocated in that
/// order, back to back).
fn cell_grads<'g>(grad: &'g mut [f64], s: &CellSlots) -> (&'g mut [f64], &'g mut [f64], &'g mut [f64]) {
    let (h, d) = (s.hidden, s.input);
    debug_assert!(s.u == s.w + 4 * h * d && s.b == s.u + 4 * h * h);
    let block = &mut grad[s.w..s.b + 4 * h];
    let (gw, rest) = block.split_at_mut(4 * h * d);
    let (gu, gb) = rest.split_at_mut(4 * h * h);
    (gw, gu, gb)
}

/// Probability for a preprocessed example with no standardization applied.
pub fn encode_scenes(net: &Network, ex: &PatientExample) -> Result<f64> {
    let std = Standardizer::identity();
    net.predict(&ExampleInput::from_example(ex, &std, net.config().use_demographics))
}
