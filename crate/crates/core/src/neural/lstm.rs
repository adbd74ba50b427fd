//! Single-layer LSTM with gate order [input, forget, cell, output].

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    /// 4H × E
    pub w: Array2<f64>,
    /// 4H × H
    pub u: Array2<f64>,
    /// 4H
    pub b: Array1<f64>,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn glorot(rng: &mut impl Rng, rows: usize, cols: usize, fan_in: usize, fan_out: usize, scale: f64) -> Array2<f64> {
    let limit = scale * (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-limit..=limit))
}

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        LstmParams {
            w: Array2::zeros((4 * hidden, input_dim)),
            u: Array2::zeros((4 * hidden, hidden)),
            b: Array1::zeros(4 * hidden),
        }
    }

    /// Glorot-uniform weights scaled by `scale`, zero biases except the
    /// forget gate at 1.
    pub fn init(input_dim: usize, hidden: usize, scale: f64, rng: &mut impl Rng) -> Self {
        let mut b = Array1::zeros(4 * hidden);
        b.slice_mut(s![hidden..2 * hidden]).fill(1.0);
        LstmParams {
            w: glorot(rng, 4 * hidden, input_dim, input_dim, 4 * hidden, scale),
            u: glorot(rng, 4 * hidden, hidden, hidden, 4 * hidden, scale),
            b,
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.u.ncols()
    }

    pub fn input_dim(&self) -> usize {
        self.w.ncols()
    }
}

/// Applies the gate nonlinearities in place to pre-activations `a` (4H).
fn activate(a: &mut [f64], h: usize) {
    for (k, v) in a.iter_mut().enumerate() {
        *v = if (2 * h..3 * h).contains(&k) { v.tanh() } else { sigmoid(*v) };
    }
}

/// One time step: returns `(h_t, c_t)`.
pub fn lstm_step(
    params: &LstmParams,
    x: ArrayView1<'_, f64>,
    h_prev: ArrayView1<'_, f64>,
    c_prev: ArrayView1<'_, f64>,
) -> (Array1<f64>, Array1<f64>) {
    let h = params.hidden_size();
    let mut a = params.w.dot(&x) + params.u.dot(&h_prev) + &params.b;
    activate(a.as_slice_mut().expect("contiguous"), h);
    let (i, f, g, o) = (a.slice(s![..h]), a.slice(s![h..2 * h]), a.slice(s![2 * h..3 * h]), a.slice(s![3 * h..]));
    let c = &f * &c_prev + &i * &g;
    let h_t = &o * &c.mapv(f64::tanh);
    (h_t, c)
}

/// Per-step values kept for backpropagation.
pub(crate) struct Trace {
    /// Input rows in processing order (T × E).
    pub x: Array2<f64>,
    /// Post-activation gates (T × 4H).
    pub gates: Array2<f64>,
    /// Cell states, row 0 is the zero initial state ((T+1) × H).
    pub c: Array2<f64>,
    /// Hidden states, row 0 is the zero initial state ((T+1) × H).
    pub h: Array2<f64>,
}

impl Trace {
    pub fn final_h(&self) -> ArrayView1<'_, f64> {
        self.h.row(self.h.nrows() - 1)
    }
}

/// Runs the cell over `x` (T × E) from zero state.
pub(crate) fn forward(p: &LstmParams, x: Array2<f64>) -> Trace {
    let hs = p.hidden_size();
    let t_len = x.nrows();
    // the product can come back column-major for some shapes
    let mut gates = x.dot(&p.w.t()).as_standard_layout().into_owned();
    gates += &p.b.view().insert_axis(Axis(0));
    let mut c = Array2::zeros((t_len + 1, hs));
    let mut h = Array2::zeros((t_len + 1, hs));
    let u = p.u.as_slice().expect("standard layout");

    for t in 0..t_len {
        {
            let h_prev = h.row(t);
            let h_prev = h_prev.as_slice().expect("row of standard layout");
            let mut a = gates.row_mut(t);
            let a = a.as_slice_mut().expect("row of standard layout");
            for (k, ak) in a.iter_mut().enumerate() {
                let row = &u[k * hs..(k + 1) * hs];
                *ak += row.iter().zip(h_prev).map(|(w, v)| w * v).sum::<f64>();
            }
            activate(a, hs);
        }
        for j in 0..hs {
            let (i, f, g, o): (f64, f64, f64, f64) =
                (gates[[t, j]], gates[[t, hs + j]], gates[[t, 2 * hs + j]], gates[[t, 3 * hs + j]]);
            let ct: f64 = f * c[[t, j]] + i * g;
            c[[t + 1, j]] = ct;
            h[[t + 1, j]] = o * ct.tanh();
        }
    }
    Trace { x, gates, c, h }
}

/// Backpropagates a gradient on the final hidden state, accumulating into
/// `grad`. Inputs are frozen, so no input gradient is produced.
pub(crate) fn backward(p: &LstmParams, trace: &Trace, dh_final: ArrayView1<'_, f64>, grad: &mut LstmParams) {
    let hs = p.hidden_size();
    let t_len = trace.x.nrows();
    if t_len == 0 {
        return;
    }
    let u = p.u.as_slice().expect("standard layout");
    let mut da_all = Array2::<f64>::zeros((t_len, 4 * hs));
    let mut dh = dh_final.to_vec();
    let mut dc = vec![0.0; hs];

    for t in (0..t_len).rev() {
        let mut da = da_all.row_mut(t);
        for j in 0..hs {
            let (i, f, g, o) = (
                trace.gates[[t, j]],
                trace.gates[[t, hs + j]],
                trace.gates[[t, 2 * hs + j]],
                trace.gates[[t, 3 * hs + j]],
            );
            let tc = trace.c[[t + 1, j]].tanh();
            let d_o = dh[j] * tc;
            let dct = dc[j] + dh[j] * o * (1.0 - tc * tc);
            da[j] = dct * g * i * (1.0 - i);
            da[hs + j] = dct * trace.c[[t, j]] * f * (1.0 - f);
            da[2 * hs + j] = dct * i * (1.0 - g * g);
            da[3 * hs + j] = d_o * o * (1.0 - o);
            dc[j] = dct * f;
        }
        let da = da.as_slice().expect("row of standard layout");
        dh.iter_mut().for_each(|v| *v = 0.0);
        for (k, &dak) in da.iter().enumerate() {
            if dak != 0.0 {
                for (dhj, w) in dh.iter_mut().zip(&u[k * hs..(k + 1) * hs]) {
                    *dhj += dak * w;
                }
            }
        }
    }
    general_mat_mul(1.0, &da_all.t(), &trace.x, 1.0, &mut grad.w);
    general_mat_mul(1.0, &da_all.t(), &trace.h.slice(s![..t_len, ..]), 1.0, &mut grad.u);
    grad.b += &da_all.sum_axis(Axis(0));
}
