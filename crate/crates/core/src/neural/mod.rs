//! Five-branch bidirectional LSTM classifier.
//!
//! Each branch encodes one word sequence (the claim and the best evidence
//! texts) with its own bi-LSTM. The five final-state encodings and the
//! similarity block are concatenated, passed through a 60-unit tanh layer and
//! a two-way softmax (index 0 = false, 1 = true). Word vectors are frozen
//! inputs.

mod lstm;
mod train;

use std::path::Path;

use ndarray::{concatenate, s, Array1, Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};
use crate::label::Label;
use crate::text::tokenize;

pub use lstm::{lstm_step, LstmParams};
pub use train::{grad_check, nn_train, Gradients, GradCheckOptions, GradCheckReport, TrainConfig, TrainHistory};

pub const HIDDEN_UNITS: usize = 60;
pub const BRANCH_COUNT: usize = 5;
pub const CHECKPOINT_FORMAT: &str = "veriscope-nn";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Maximum tokens kept per branch; longer inputs are cut from the right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceCaps(pub [usize; BRANCH_COUNT]);

impl Default for SequenceCaps {
    /// Claim 64, snippets 64, page triplets 128, in the rumor branch order.
    fn default() -> Self {
        SequenceCaps([64, 64, 128, 64, 128])
    }
}

/// Word vectors of one text with a validity mask (false = padding).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sequence {
    /// T × E
    pub inputs: Array2<f64>,
    pub mask: Vec<bool>,
}

impl Sequence {
    pub fn empty(dim: usize) -> Self {
        Sequence {
            inputs: Array2::zeros((0, dim)),
            mask: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    /// Appends `n` masked zero rows.
    pub fn padded(&self, n: usize) -> Self {
        let pad = Array2::zeros((n, self.inputs.ncols()));
        let mut mask = self.mask.clone();
        mask.extend(std::iter::repeat_n(false, n));
        Sequence {
            inputs: concatenate![Axis(0), self.inputs, pad],
            mask,
        }
    }

    fn active_rows(&self, reverse: bool) -> Array2<f64> {
        let mut idx: Vec<usize> = (0..self.mask.len()).filter(|&i| self.mask[i]).collect();
        if reverse {
            idx.reverse();
        }
        self.inputs.select(Axis(0), &idx)
    }
}

/// In-vocabulary tokens of `text` as embedding rows. Unknown words are
/// dropped before the cap is applied.
pub fn encode_sequence(text: &str, table: &EmbeddingTable, cap: usize) -> Sequence {
    let rows: Vec<ArrayView1<'_, f64>> = tokenize(text).iter().filter_map(|t| table.get(&t.lower)).take(cap).collect();
    if rows.is_empty() {
        return Sequence::empty(table.dim());
    }
    Sequence {
        inputs: ndarray::stack(Axis(0), &rows).expect("rows share the table dimension"),
        mask: vec![true; rows.len()],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedExample {
    pub branches: Vec<Sequence>,
    pub similarities: Array1<f64>,
    pub label: Option<Label>,
}

/// Absent texts become empty sequences.
pub fn encode_example(
    texts: &[Option<&str>; BRANCH_COUNT],
    similarities: &[f64],
    label: Option<Label>,
    table: &EmbeddingTable,
    caps: &SequenceCaps,
) -> EncodedExample {
    EncodedExample {
        branches: texts
            .iter()
            .zip(caps.0)
            .map(|(t, cap)| t.map_or_else(|| Sequence::empty(table.dim()), |t| encode_sequence(t, table, cap)))
            .collect(),
        similarities: Array1::from(similarities.to_vec()),
        label,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiLstm {
    pub fwd: LstmParams,
    pub bwd: LstmParams,
}

/// `[forward final state | backward final state]`. Masked positions are
/// skipped; a fully masked sequence encodes to zeros.
pub fn bilstm_encode(fwd: &LstmParams, bwd: &LstmParams, sequence: &Sequence) -> Array1<f64> {
    let f = lstm::forward(fwd, sequence.active_rows(false));
    let b = lstm::forward(bwd, sequence.active_rows(true));
    concatenate![Axis(0), f.final_h(), b.final_h()]
}

/// All trainable tensors. Also used for gradients and optimizer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnParams {
    pub branches: Vec<BiLstm>,
    /// (5·2H + S) × 60
    pub dense_w: Array2<f64>,
    pub dense_b: Array1<f64>,
    /// 60 × 2
    pub out_w: Array2<f64>,
    pub out_b: Array1<f64>,
}

/// A named view of one parameter tensor.
pub struct Tensor<'a> {
    pub name: String,
    pub values: &'a [f64],
    pub is_bias: bool,
}

pub struct TensorMut<'a> {
    pub name: String,
    pub values: &'a mut [f64],
    pub is_bias: bool,
}

impl NnParams {
    pub fn zeros(embedding_dim: usize, hidden: usize, similarity_dim: usize) -> Self {
        let lstm = || LstmParams::zeros(embedding_dim, hidden);
        NnParams {
            branches: (0..BRANCH_COUNT).map(|_| BiLstm { fwd: lstm(), bwd: lstm() }).collect(),
            dense_w: Array2::zeros((BRANCH_COUNT * 2 * hidden + similarity_dim, HIDDEN_UNITS)),
            dense_b: Array1::zeros(HIDDEN_UNITS),
            out_w: Array2::zeros((HIDDEN_UNITS, 2)),
            out_b: Array1::zeros(2),
        }
    }

    pub fn init(embedding_dim: usize, hidden: usize, similarity_dim: usize, scale: f64, rng: &mut impl Rng) -> Self {
        let branches = (0..BRANCH_COUNT)
            .map(|_| BiLstm {
                fwd: LstmParams::init(embedding_dim, hidden, scale, rng),
                bwd: LstmParams::init(embedding_dim, hidden, scale, rng),
            })
            .collect();
        let concat = BRANCH_COUNT * 2 * hidden + similarity_dim;
        NnParams {
            branches,
            dense_w: lstm::glorot(rng, concat, HIDDEN_UNITS, concat, HIDDEN_UNITS, scale),
            dense_b: Array1::zeros(HIDDEN_UNITS),
            out_w: lstm::glorot(rng, HIDDEN_UNITS, 2, HIDDEN_UNITS, 2, scale),
            out_b: Array1::zeros(2),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.values.fill(0.0);
        }
        z
    }

    pub fn tensors(&self) -> Vec<Tensor<'_>> {
        let mut out = Vec::new();
        for (k, br) in self.branches.iter().enumerate() {
            for (dir, p) in [("fwd", &br.fwd), ("bwd", &br.bwd)] {
                out.push(Tensor { name: format!("branch{k}.{dir}.w"), values: p.w.as_slice().expect("standard layout"), is_bias: false });
                out.push(Tensor { name: format!("branch{k}.{dir}.u"), values: p.u.as_slice().expect("standard layout"), is_bias: false });
                out.push(Tensor { name: format!("branch{k}.{dir}.b"), values: p.b.as_slice().expect("contiguous"), is_bias: true });
            }
        }
        out.push(Tensor { name: "dense.w".into(), values: self.dense_w.as_slice().expect("standard layout"), is_bias: false });
        out.push(Tensor { name: "dense.b".into(), values: self.dense_b.as_slice().expect("contiguous"), is_bias: true });
        out.push(Tensor { name: "out.w".into(), values: self.out_w.as_slice().expect("standard layout"), is_bias: false });
        out.push(Tensor { name: "out.b".into(), values: self.out_b.as_slice().expect("contiguous"), is_bias: true });
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let mut out = Vec::new();
        for (k, br) in self.branches.iter_mut().enumerate() {
            for (dir, p) in [("fwd", &mut br.fwd), ("bwd", &mut br.bwd)] {
                out.push(TensorMut { name: format!("branch{k}.{dir}.w"), values: p.w.as_slice_mut().expect("standard layout"), is_bias: false });
                out.push(TensorMut { name: format!("branch{k}.{dir}.u"), values: p.u.as_slice_mut().expect("standard layout"), is_bias: false });
                out.push(TensorMut { name: format!("branch{k}.{dir}.b"), values: p.b.as_slice_mut().expect("contiguous"), is_bias: true });
            }
        }
        out.push(TensorMut { name: "dense.w".into(), values: self.dense_w.as_slice_mut().expect("standard layout"), is_bias: false });
        out.push(TensorMut { name: "dense.b".into(), values: self.dense_b.as_slice_mut().expect("contiguous"), is_bias: true });
        out.push(TensorMut { name: "out.w".into(), values: self.out_w.as_slice_mut().expect("standard layout"), is_bias: false });
        out.push(TensorMut { name: "out.b".into(), values: self.out_b.as_slice_mut().expect("contiguous"), is_bias: true });
        out
    }

    /// Σ w² over weight tensors; biases are not regularized.
    pub fn weight_sq_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .filter(|t| !t.is_bias)
            .map(|t| t.values.iter().map(|v| v * v).sum::<f64>())
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnModel {
    pub embedding_dim: usize,
    pub hidden_size: usize,
    pub similarity_dim: usize,
    pub branch_names: Vec<String>,
    pub caps: SequenceCaps,
    pub params: NnParams,
}

/// Output of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub prob_false: f64,
    pub prob_true: f64,
    /// Dense-layer activations (60).
    pub hidden: Array1<f64>,
    /// Bi-LSTM encoding of each branch (2H each), before dropout.
    pub branch_states: Vec<Array1<f64>>,
}

impl Forward {
    pub fn label(&self) -> Label {
        if self.prob_true > self.prob_false {
            Label::True
        } else {
            Label::False
        }
    }
}

/// Intermediate values for backpropagation through one example.
pub(crate) struct Tape {
    traces: Vec<(lstm::Trace, lstm::Trace)>,
    /// Concatenated input to the dense layer after dropout.
    z: Array1<f64>,
    /// Per-position dropout multiplier on the LSTM part (0 or 1/(1−p)).
    keep: Option<Vec<f64>>,
    pub hidden: Array1<f64>,
    pub probs: [f64; 2],
}

pub const DEFAULT_BRANCH_NAMES: [&str; BRANCH_COUNT] =
    ["claim", "google.snippet", "google.triplet", "bing.snippet", "bing.triplet"];

impl NnModel {
    pub fn new(params: NnParams, embedding_dim: usize, hidden_size: usize, similarity_dim: usize) -> Self {
        NnModel {
            embedding_dim,
            hidden_size,
            similarity_dim,
            branch_names: DEFAULT_BRANCH_NAMES.map(String::from).to_vec(),
            caps: SequenceCaps::default(),
            params,
        }
    }

    pub fn zeros(embedding_dim: usize, hidden_size: usize, similarity_dim: usize) -> Self {
        NnModel::new(NnParams::zeros(embedding_dim, hidden_size, similarity_dim), embedding_dim, hidden_size, similarity_dim)
    }

    pub fn random(embedding_dim: usize, hidden_size: usize, similarity_dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        NnModel::new(
            NnParams::init(embedding_dim, hidden_size, similarity_dim, 1.0, &mut rng),
            embedding_dim,
            hidden_size,
            similarity_dim,
        )
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    pub fn check_dims(&self, ex: &EncodedExample) -> Result<()> {
        if ex.branches.len() != BRANCH_COUNT {
            return Err(Error::invalid(format!("expected {BRANCH_COUNT} branches, got {}", ex.branches.len())));
        }
        for (k, b) in ex.branches.iter().enumerate() {
            if b.inputs.ncols() != self.embedding_dim || b.inputs.nrows() != b.mask.len() {
                return Err(Error::invalid(format!(
                    "branch {k}: inputs {:?} and mask {} do not fit embedding dim {}",
                    b.inputs.dim(),
                    b.mask.len(),
                    self.embedding_dim
                )));
            }
        }
        if ex.similarities.len() != self.similarity_dim {
            return Err(Error::invalid(format!(
                "expected {} similarity features, got {}",
                self.similarity_dim,
                ex.similarities.len()
            )));
        }
        Ok(())
    }

    /// `keep` is the dropout multiplier for each LSTM output coordinate.
    pub(crate) fn forward_tape(&self, ex: &EncodedExample, keep: Option<Vec<f64>>) -> Tape {
        let traces: Vec<(lstm::Trace, lstm::Trace)> = self
            .params
            .branches
            .iter()
            .zip(&ex.branches)
            .map(|(p, seq)| (lstm::forward(&p.fwd, seq.active_rows(false)), lstm::forward(&p.bwd, seq.active_rows(true))))
            .collect();
        let mut parts: Vec<ArrayView1<'_, f64>> = Vec::with_capacity(2 * BRANCH_COUNT + 1);
        for (f, b) in &traces {
            parts.push(f.final_h());
            parts.push(b.final_h());
        }
        parts.push(ex.similarities.view());
        let mut z = concatenate(Axis(0), &parts).expect("1-d parts");
        if let Some(k) = &keep {
            z.iter_mut().zip(k).for_each(|(v, m)| *v *= m);
        }
        let hidden = (z.dot(&self.params.dense_w) + &self.params.dense_b).mapv(f64::tanh);
        let logits = hidden.dot(&self.params.out_w) + &self.params.out_b;
        let m = logits[0].max(logits[1]);
        let (e0, e1) = ((logits[0] - m).exp(), (logits[1] - m).exp());
        let probs = [e0 / (e0 + e1), e1 / (e0 + e1)];
        Tape {
            traces,
            z,
            keep,
            hidden,
            probs,
        }
    }

    fn branch_states(&self, tape: &Tape) -> Vec<Array1<f64>> {
        tape.traces
            .iter()
            .map(|(f, b)| concatenate![Axis(0), f.final_h(), b.final_h()])
            .collect()
    }

    /// Inference pass (no dropout).
    pub fn infer(&self, ex: &EncodedExample) -> Result<Forward> {
        self.check_dims(ex)?;
        let tape = self.forward_tape(ex, None);
        Ok(Forward {
            prob_false: tape.probs[0],
            prob_true: tape.probs[1],
            branch_states: self.branch_states(&tape),
            hidden: tape.hidden,
        })
    }

    /// Dropout multipliers for the LSTM part of the dense input; the
    /// similarity block is never dropped.
    pub(crate) fn dropout_mask(&self, rate: f64, rng: &mut impl Rng) -> Option<Vec<f64>> {
        if rate <= 0.0 {
            return None;
        }
        let lstm_width = BRANCH_COUNT * 2 * self.hidden_size;
        let scale = 1.0 / (1.0 - rate);
        Some(
            (0..lstm_width + self.similarity_dim)
                .map(|i| {
                    if i >= lstm_width {
                        1.0
                    } else if rng.random::<f64>() < rate {
                        0.0
                    } else {
                        scale
                    }
                })
                .collect(),
        )
    }

    /// Backward pass of the cross-entropy for `label`, accumulated into `grad`
    /// scaled by `weight`. Returns the cross-entropy.
    pub(crate) fn backward(&self, tape: &Tape, label: Label, weight: f64, grad: &mut NnParams) -> f64 {
        let y = label.index();
        let loss = -tape.probs[y].max(f64::MIN_POSITIVE).ln();
        let mut dlogits = Array1::from(vec![tape.probs[0], tape.probs[1]]);
        dlogits[y] -= 1.0;
        dlogits *= weight;

        grad.out_b += &dlogits;
        grad.out_w += &outer(&tape.hidden, &dlogits);
        let dh = self.params.out_w.dot(&dlogits);
        let da = &dh * &tape.hidden.mapv(|h| 1.0 - h * h);
        grad.dense_b += &da;
        grad.dense_w += &outer(&tape.z, &da);
        let mut dz = self.params.dense_w.dot(&da);
        if let Some(k) = &tape.keep {
            dz.iter_mut().zip(k).for_each(|(v, m)| *v *= m);
        }

        let h2 = 2 * self.hidden_size;
        for (k, ((f, b), p)) in tape.traces.iter().zip(&self.params.branches).enumerate() {
            let g = &mut grad.branches[k];
            let off = k * h2;
            lstm::backward(&p.fwd, f, dz.slice(s![off..off + self.hidden_size]), &mut g.fwd);
            lstm::backward(&p.bwd, b, dz.slice(s![off + self.hidden_size..off + h2]), &mut g.bwd);
        }
        loss
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(json)?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::format(
                "checkpoint",
                0,
                format!("unsupported checkpoint {} v{}", ck.format, ck.version),
            ));
        }
        Ok(ck.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        NnModel::from_json(&json)
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    model: NnModel,
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    let a2 = a.view().insert_axis(Axis(1));
    let b2 = b.view().insert_axis(Axis(0));
    a2.dot(&b2)
}

/// Forward pass. With `train_mode` the LSTM outputs go through dropout at
/// `dropout_rate`, with the mask drawn from `seed`.
pub fn nn_forward(model: &NnModel, ex: &EncodedExample, train_mode: bool, dropout_rate: f64, seed: u64) -> Result<Forward> {
    model.check_dims(ex)?;
    let keep = if train_mode {
        model.dropout_mask(dropout_rate, &mut ChaCha8Rng::seed_from_u64(seed))
    } else {
        None
    };
    let tape = model.forward_tape(ex, keep);
    Ok(Forward {
        prob_false: tape.probs[0],
        prob_true: tape.probs[1],
        branch_states: model.branch_states(&tape),
        hidden: tape.hidden,
    })
}

/// The 60 dense-layer activations at inference time.
pub fn hidden_embedding(model: &NnModel, ex: &EncodedExample) -> Result<Array1<f64>> {
    Ok(model.infer(ex)?.hidden)
}
