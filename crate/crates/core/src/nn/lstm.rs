//! One LSTM direction: forward recurrence with cached gate activations and
//! backpropagation through time.
//!
//! Per time step, with gate blocks ordered i, f, g, o:
//!
//! ```text
//! z_t = W x_t + U h_prev + b
//! i, f, o = sigmoid(z_i), sigmoid(z_f), sigmoid(z_o);  g = tanh(z_g)
//! c_t = f * c_prev + i * g
//! h_t = o * tanh(c_t)
//! ```
//!
//! The backward direction walks t = m-1 .. 0 and takes its predecessor from
//! t + 1. Initial hidden and cell states are zero.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    /// Original time index processed at step `s`.
    #[inline]
    pub fn time(self, s: usize, m: usize) -> usize {
        match self {
            Direction::Forward => s,
            Direction::Backward => m - 1 - s,
        }
    }
}

/// Borrowed weights of one cell.
#[derive(Debug, Clone, Copy)]
pub(crate) struct CellRef<'a> {
    pub w: &'a [f64],
    pub u: &'a [f64],
    pub b: &'a [f64],
    pub hidden: usize,
    pub input: usize,
}

/// Activations cached by the forward pass, all indexed by original time.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmTrace {
    pub(crate) steps: usize,
    pub(crate) hidden: usize,
    pub(crate) direction: Direction,
    /// `m x 4h` activated gates.
    pub(crate) gates: Vec<f64>,
    /// `m x h` cell states.
    pub(crate) cell: Vec<f64>,
    /// `m x h` tanh of the cell states.
    pub(crate) tanh_cell: Vec<f64>,
    /// `m x h` outputs.
    pub(crate) out: Vec<f64>,
}

impl LstmTrace {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn output(&self, t: usize) -> &[f64] {
        &self.out[t * self.hidden..(t + 1) * self.hidden]
    }

    /// `m x h` outputs, row `t` is time `t`.
    pub fn outputs(&self) -> &[f64] {
        &self.out
    }

    /// `(h, c)` after the last processed step.
    pub fn final_state(&self) -> (&[f64], &[f64]) {
        let t = self.direction.time(self.steps - 1, self.steps);
        let r = t * self.hidden..(t + 1) * self.hidden;
        (&self.out[r.clone()], &self.cell[r])
    }
}

pub(crate) fn forward(cell: CellRef<'_>, x: &[f64], steps: usize, direction: Direction) -> LstmTrace {
    let h = cell.hidden;
    let d = cell.input;
    let g4 = 4 * h;
    debug_assert_eq!(x.len(), steps * d);
    // Input projections for every step up front: gates[t] = b + W x_t.
    let mut gates = vec![0.0; steps * g4];
    for (z, xt) in gates.chunks_exact_mut(g4).zip(x.chunks_exact(d)) {
        for ((zr, row), &br) in z.iter_mut().zip(cell.w.chunks_exact(d)).zip(cell.b) {
            *zr = br + row.iter().zip(xt).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    let mut cs = vec![0.0; steps * h];
    let mut tcs = vec![0.0; steps * h];
    let mut out = vec![0.0; steps * h];
    // Previous step's hidden and cell state; zero before the first step.
    let mut hp = vec![0.0; h];
    let mut cp = vec![0.0; h];
    for s in 0..steps {
        let t = direction.time(s, steps);
        let z = &mut gates[t * g4..(t + 1) * g4];
        if s > 0 {
            for (zr, row) in z.iter_mut().zip(cell.u.chunks_exact(h)) {
                *zr += row.iter().zip(&hp).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        let (zi, rest) = z.split_at_mut(h);
        let (zf, rest) = rest.split_at_mut(h);
        let (zg, zo) = rest.split_at_mut(h);
        let ct = &mut cs[t * h..(t + 1) * h];
        let tct = &mut tcs[t * h..(t + 1) * h];
        let ot = &mut out[t * h..(t + 1) * h];
        for k in 0..h {
            let i = math::sigmoid(zi[k]);
            let f = math::sigmoid(zf[k]);
            let g = math::tanh(zg[k]);
            let o = math::sigmoid(zo[k]);
            zi[k] = i;
            zf[k] = f;
            zg[k] = g;
            zo[k] = o;
            let c = f * cp[k] + i * g;
            let tc = math::tanh(c);
            ct[k] = c;
            tct[k] = tc;
            ot[k] = o * tc;
            cp[k] = c;
            hp[k] = o * tc;
        }
    }
    LstmTrace { steps, hidden: h, direction, gates, cell: cs, tanh_cell: tcs, out }
}

/// Accumulate parameter gradients into `gw`, `gu`, `gb` and, when given,
/// input gradients into `dx` (`m x d`). `d_out` is `m x h`: the loss
/// gradient with respect to each output `h_t` from outside the recurrence.
pub(crate) fn backward(
    cell: CellRef<'_>,
    x: &[f64],
    trace: &LstmTrace,
    d_out: &[f64],
    gw: &mut [f64],
    gu: &mut [f64],
    gb: &mut [f64],
    dx: Option<&mut [f64]>,
) {
    let h = cell.hidden;
    let d = cell.input;
    let g4 = 4 * h;
    let m = trace.steps;
    let dir = trace.direction;
    let mut dz = vec![0.0; m * g4];
    let mut dh_rec = vec![0.0; h];
    let mut dc_rec = vec![0.0; h];
    for s in (0..m).rev() {
        let t = dir.time(s, m);
        let prev = (s > 0).then(|| dir.time(s - 1, m));
        let gate = &trace.gates[t * g4..(t + 1) * g4];
        let dzt = &mut dz[t * g4..(t + 1) * g4];
        for k in 0..h {
            let (i, f, g, o) = (gate[k], gate[h + k], gate[2 * h + k], gate[3 * h + k]);
            let tc = trace.tanh_cell[t * h + k];
            let c_prev = prev.map_or(0.0, |p| trace.cell[p * h + k]);
            let dh = d_out[t * h + k] + dh_rec[k];
            let d_o = dh * tc;
            let dc = dh * o * (1.0 - tc * tc) + dc_rec[k];
            dzt[k] = dc * g * i * (1.0 - i);
            dzt[h + k] = dc * c_prev * f * (1.0 - f);
            dzt[2 * h + k] = dc * i * (1.0 - g * g);
            dzt[3 * h + k] = d_o * o * (1.0 - o);
            dc_rec[k] = dc * f;
        }
        // dh_rec = U^T dz_t
        dh_rec.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..g4 {
            let coef = dzt[r];
            if coef != 0.0 {
                let row = &cell.u[r * h..(r + 1) * h];
                for k in 0..h {
                    dh_rec[k] += row[k] * coef;
                }
            }
        }
        if let Some(p) = prev {
            let h_prev = &trace.out[p * h..(p + 1) * h];
            for r in 0..g4 {
                let coef = dzt[r];
                let row = &mut gu[r * h..(r + 1) * h];
                for k in 0..h {
                    row[k] += coef * h_prev[k];
                }
            }
        }
    }
    for t in 0..m {
        let dzt = &dz[t * g4..(t + 1) * g4];
        let xt = &x[t * d..(t + 1) * d];
        for r in 0..g4 {
            let coef = dzt[r];
            gb[r] += coef;
            let row = &mut gw[r * d..(r + 1) * d];
            for c in 0..d {
                row[c] += coef * xt[c];
            }
        }
    }
    if let Some(dx) = dx {
        for t in 0..m {
            let dzt = &dz[t * g4..(t + 1) * g4];
            let out = &mut dx[t * d..(t + 1) * d];
            for r in 0..g4 {
                let coef = dzt[r];
                let row = &cell.w[r * d..(r + 1) * d];
                for c in 0..d {
                    out[c] += coef * row[c];
                }
            }
        }
    }
}

/// Owned weights of a single LSTM direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmCellParams {
    pub hidden: usize,
    pub input: usize,
    /// `4h x d`, gate blocks i, f, g, o.
    pub w: Vec<f64>,
    /// `4h x h`.
    pub u: Vec<f64>,
    /// `4h`.
    pub b: Vec<f64>,
}

impl LstmCellParams {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        LstmCellParams {
            hidden,
            input,
            w: vec![0.0; 4 * hidden * input],
            u: vec![0.0; 4 * hidden * hidden],
            b: vec![0.0; 4 * hidden],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (h, d) = (self.hidden, self.input);
        if h == 0 || d == 0 || self.w.len() != 4 * h * d || self.u.len() != 4 * h * h || self.b.len() != 4 * h {
            return Err(Error::Shape(format!(
                "cell h={h} d={d} with W {} U {} b {}",
                self.w.len(),
                self.u.len(),
                self.b.len()
            )));
        }
        if self.w.iter().chain(&self.u).chain(&self.b).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("LSTM parameters"));
        }
        Ok(())
    }

    pub(crate) fn as_ref(&self) -> CellRef<'_> {
        CellRef { w: &self.w, u: &self.u, b: &self.b, hidden: self.hidden, input: self.input }
    }
}

/// Run one direction over a time-major `m x d` input.
pub fn lstm_forward(input: &[f64], steps: usize, params: &LstmCellParams, direction: Direction) -> Result<LstmTrace> {
    params.validate()?;
    if steps == 0 || input.len() != steps * params.input {
        return Err(Error::Shape(format!(
            "input of {} values is not {steps} steps x {} channels",
            input.len(),
            params.input
        )));
    }
    if input.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("LSTM input"));
    }
    Ok(forward(params.as_ref(), input, steps, direction))
}
