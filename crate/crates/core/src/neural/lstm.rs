//! LSTM cell, a single-direction sequence layer with backpropagation
//! through time, and the bidirectional wrapper.
//!
//! Gate order in every stacked matrix is input, forget, candidate, output.
//! Each gate's weights act on the concatenation `[h_prev, x_t]`.

use crate::error::{Error, Result};

use super::linalg::{gemm, Mat, MatMut};

/// Parameters of one LSTM direction.
///
/// `weight` is `4 * hidden` rows by `hidden + input` columns; the first
/// `hidden` columns multiply `h_prev`, the rest multiply `x_t`. Two bias
/// vectors (input-side and recurrent-side) are kept and summed, which is
/// how the reference architecture counts its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub input: usize,
    pub hidden: usize,
    pub weight: Vec<f64>,
    pub bias_ih: Vec<f64>,
    pub bias_hh: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            input,
            hidden,
            weight: vec![0.0; 4 * hidden * (hidden + input)],
            bias_ih: vec![0.0; 4 * hidden],
            bias_hh: vec![0.0; 4 * hidden],
        }
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias_ih.len() + self.bias_hh.len()
    }

    fn width(&self) -> usize {
        self.hidden + self.input
    }

    fn check(&self) -> Result<()> {
        let h = self.hidden;
        if self.weight.len() != 4 * h * self.width() || self.bias_ih.len() != 4 * h || self.bias_hh.len() != 4 * h {
            return Err(Error::ShapeMismatch("LSTM parameter sizes".into()));
        }
        Ok(())
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Gate activations of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGates {
    pub input: Vec<f64>,
    pub forget: Vec<f64>,
    pub candidate: Vec<f64>,
    pub output: Vec<f64>,
}

/// One LSTM step: returns `(h_t, C_t)` and the gate activations.
///
/// ```text
/// i = sigmoid(W_i [h, x] + b_i)    f = sigmoid(W_f [h, x] + b_f)
/// g = tanh(W_c [h, x] + b_c)       o = sigmoid(W_o [h, x] + b_o)
/// C_t = f * C_prev + i * g         h_t = o * tanh(C_t)
/// ```
pub fn lstm_cell(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    p: &LstmParams,
) -> Result<(Vec<f64>, Vec<f64>, CellGates)> {
    p.check()?;
    let h = p.hidden;
    if x.len() != p.input || h_prev.len() != h || c_prev.len() != h {
        return Err(Error::ShapeMismatch(format!(
            "cell expects x:{} h:{h} c:{h}, got x:{} h:{} c:{}",
            p.input,
            x.len(),
            h_prev.len(),
            c_prev.len()
        )));
    }
    let mut concat = Vec::with_capacity(p.width());
    concat.extend_from_slice(h_prev);
    concat.extend_from_slice(x);
    let mut pre = vec![0.0; 4 * h];
    for (r, z) in pre.iter_mut().enumerate() {
        let row = &p.weight[r * p.width()..(r + 1) * p.width()];
        *z = row.iter().zip(&concat).map(|(w, v)| w * v).sum::<f64>() + p.bias_ih[r] + p.bias_hh[r];
    }
    let gates = CellGates {
        input: pre[..h].iter().map(|&z| sigmoid(z)).collect(),
        forget: pre[h..2 * h].iter().map(|&z| sigmoid(z)).collect(),
        candidate: pre[2 * h..3 * h].iter().map(|&z| z.tanh()).collect(),
        output: pre[3 * h..].iter().map(|&z| sigmoid(z)).collect(),
    };
    let c: Vec<f64> = (0..h)
        .map(|k| gates.forget[k] * c_prev[k] + gates.input[k] * gates.candidate[k])
        .collect();
    let h_t = (0..h).map(|k| gates.output[k] * c[k].tanh()).collect();
    Ok((h_t, c, gates))
}

/// Saved activations of one direction over a batch.
pub(crate) struct LstmCache {
    /// Per step (in processing order): activated gates `[B, 4H]`.
    gates: Vec<Vec<f64>>,
    /// Per step: cell state `[B, H]`.
    cells: Vec<Vec<f64>>,
    /// Per step: `tanh(C_t)`.
    tanh_cells: Vec<Vec<f64>>,
    /// Per step: hidden state.
    hiddens: Vec<Vec<f64>>,
}

fn time_order(len: usize, reverse: bool) -> Box<dyn Iterator<Item = usize>> {
    if reverse {
        Box::new((0..len).rev())
    } else {
        Box::new(0..len)
    }
}

/// Runs one direction over `x` (`batch * len` rows, `input` columns).
/// Returns hidden states in the same row layout.
pub(crate) fn lstm_forward(
    x: &[f64],
    batch: usize,
    len: usize,
    p: &LstmParams,
    reverse: bool,
) -> (Vec<f64>, LstmCache) {
    let (h, w) = (p.hidden, p.width());
    let rows = batch * len;
    // input projections for every timestep at once
    let mut xp = Vec::with_capacity(rows * 4 * h);
    let bias: Vec<f64> = p.bias_ih.iter().zip(&p.bias_hh).map(|(a, b)| a + b).collect();
    for _ in 0..rows {
        xp.extend_from_slice(&bias);
    }
    gemm(
        Mat::new(x, rows, p.input),
        Mat::columns(&p.weight, 4 * h, w, h, p.input).t(),
        1.0,
        MatMut::new(&mut xp, rows, 4 * h),
    );

    let mut out = vec![0.0; rows * h];
    let mut cache = LstmCache {
        gates: Vec::with_capacity(len),
        cells: Vec::with_capacity(len),
        tanh_cells: Vec::with_capacity(len),
        hiddens: Vec::with_capacity(len),
    };
    let mut h_prev = vec![0.0; batch * h];
    let mut c_prev = vec![0.0; batch * h];
    for t in time_order(len, reverse) {
        let mut g = vec![0.0; batch * 4 * h];
        for b in 0..batch {
            let r = b * len + t;
            g[b * 4 * h..(b + 1) * 4 * h].copy_from_slice(&xp[r * 4 * h..(r + 1) * 4 * h]);
        }
        gemm(
            Mat::new(&h_prev, batch, h),
            Mat::columns(&p.weight, 4 * h, w, 0, h).t(),
            1.0,
            MatMut::new(&mut g, batch, 4 * h),
        );
        let mut c = vec![0.0; batch * h];
        let mut tc = vec![0.0; batch * h];
        let mut hn = vec![0.0; batch * h];
        for b in 0..batch {
            let gb = &mut g[b * 4 * h..(b + 1) * 4 * h];
            for k in 0..h {
                gb[k] = sigmoid(gb[k]);
                gb[h + k] = sigmoid(gb[h + k]);
                gb[2 * h + k] = gb[2 * h + k].tanh();
                gb[3 * h + k] = sigmoid(gb[3 * h + k]);
                let idx = b * h + k;
                c[idx] = gb[h + k] * c_prev[idx] + gb[k] * gb[2 * h + k];
                tc[idx] = c[idx].tanh();
                hn[idx] = gb[3 * h + k] * tc[idx];
            }
            let r = b * len + t;
            out[r * h..(r + 1) * h].copy_from_slice(&hn[b * h..(b + 1) * h]);
        }
        h_prev.clone_from(&hn);
        c_prev.clone_from(&c);
        cache.gates.push(g);
        cache.cells.push(c);
        cache.tanh_cells.push(tc);
        cache.hiddens.push(hn);
    }
    (out, cache)
}

/// Backpropagation through time for one direction. `dout` is the gradient
/// of the loss with respect to the hidden-state output. Parameter gradients
/// are accumulated into `grad`; the input gradient is returned.
pub(crate) fn lstm_backward(
    dout: &[f64],
    x: &[f64],
    batch: usize,
    len: usize,
    p: &LstmParams,
    cache: &LstmCache,
    grad: &mut LstmParams,
    reverse: bool,
) -> Vec<f64> {
    let (h, w) = (p.hidden, p.width());
    let rows = batch * len;
    let mut dxp = vec![0.0; rows * 4 * h];
    let mut dh_next = vec![0.0; batch * h];
    let mut dc_next = vec![0.0; batch * h];
    let zeros = vec![0.0; batch * h];
    let steps: Vec<usize> = time_order(len, reverse).collect();
    for s in (0..len).rev() {
        let t = steps[s];
        let g = &cache.gates[s];
        let tc = &cache.tanh_cells[s];
        let c_prev = if s > 0 { &cache.cells[s - 1] } else { &zeros };
        let h_prev = if s > 0 { &cache.hiddens[s - 1] } else { &zeros };
        let mut da = vec![0.0; batch * 4 * h];
        for b in 0..batch {
            let r = b * len + t;
            let gb = &g[b * 4 * h..(b + 1) * 4 * h];
            let dab = &mut da[b * 4 * h..(b + 1) * 4 * h];
            for k in 0..h {
                let idx = b * h + k;
                let (i, f, gg, o) = (gb[k], gb[h + k], gb[2 * h + k], gb[3 * h + k]);
                let dh = dout[r * h + k] + dh_next[idx];
                let dc = dc_next[idx] + dh * o * (1.0 - tc[idx] * tc[idx]);
                dab[k] = dc * gg * i * (1.0 - i);
                dab[h + k] = dc * c_prev[idx] * f * (1.0 - f);
                dab[2 * h + k] = dc * i * (1.0 - gg * gg);
                dab[3 * h + k] = dh * tc[idx] * o * (1.0 - o);
                dc_next[idx] = dc * f;
            }
            dxp[r * 4 * h..(r + 1) * 4 * h].copy_from_slice(dab);
        }
        gemm(
            Mat::new(&da, batch, 4 * h).t(),
            Mat::new(h_prev, batch, h),
            1.0,
            MatMut::columns(&mut grad.weight, 4 * h, w, 0, h),
        );
        gemm(
            Mat::new(&da, batch, 4 * h),
            Mat::columns(&p.weight, 4 * h, w, 0, h),
            0.0,
            MatMut::new(&mut dh_next, batch, h),
        );
    }
    gemm(
        Mat::new(&dxp, rows, 4 * h).t(),
        Mat::new(x, rows, p.input),
        1.0,
        MatMut::columns(&mut grad.weight, 4 * h, w, h, p.input),
    );
    for row in dxp.chunks_exact(4 * h) {
        for k in 0..4 * h {
            grad.bias_ih[k] += row[k];
            grad.bias_hh[k] += row[k];
        }
    }
    let mut dx = vec![0.0; rows * p.input];
    gemm(
        Mat::new(&dxp, rows, 4 * h),
        Mat::columns(&p.weight, 4 * h, w, h, p.input),
        0.0,
        MatMut::new(&mut dx, rows, p.input),
    );
    dx
}

/// Bidirectional LSTM over one sequence (`len x input`, row-major).
/// Output row `t` is `[h_fwd_t, h_bwd_t]`.
pub fn bilstm_forward(x: &[f64], fwd: &LstmParams, bwd: &LstmParams) -> Result<Vec<f64>> {
    fwd.check()?;
    bwd.check()?;
    if fwd.input != bwd.input || fwd.hidden != bwd.hidden {
        return Err(Error::ShapeMismatch("directions disagree on sizes".into()));
    }
    if x.is_empty() || x.len() % fwd.input != 0 {
        return Err(Error::ShapeMismatch(format!(
            "{} values is not a whole number of {}-feature steps",
            x.len(),
            fwd.input
        )));
    }
    let len = x.len() / fwd.input;
    let (hf, _) = lstm_forward(x, 1, len, fwd, false);
    let (hb, _) = lstm_forward(x, 1, len, bwd, true);
    Ok(concat_directions(&hf, &hb, len, fwd.hidden))
}

pub(crate) fn concat_directions(hf: &[f64], hb: &[f64], rows: usize, h: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows * 2 * h);
    for r in 0..rows {
        out.extend_from_slice(&hf[r * h..(r + 1) * h]);
        out.extend_from_slice(&hb[r * h..(r + 1) * h]);
    }
    out
}

pub(crate) fn split_directions(d: &[f64], rows: usize, h: usize) -> (Vec<f64>, Vec<f64>) {
    let mut df = Vec::with_capacity(rows * h);
    let mut db = Vec::with_capacity(rows * h);
    for r in 0..rows {
        df.extend_from_slice(&d[r * 2 * h..r * 2 * h + h]);
        db.extend_from_slice(&d[r * 2 * h + h..(r + 1) * 2 * h]);
    }
    (df, db)
}
