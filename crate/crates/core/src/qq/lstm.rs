//! Single-layer LSTM sequence classifier.
//!
//! For each time step `t` with input `x_t` and previous state `(h, c)`:
//!
//! ```text
//! i_t = σ(W_xi x_t + W_hi h_{t-1} + b_i)
//! f_t = σ(W_xf x_t + W_hf h_{t-1} + b_f)
//! o_t = σ(W_xo x_t + W_ho h_{t-1} + b_o)
//! g_t = tanh(W_xc x_t + W_hc h_{t-1} + b_c)
//! c_t = f_t ⊙ c_{t-1} + i_t ⊙ g_t
//! h_t = o_t ⊙ tanh(c_t)
//! ```
//!
//! The input at every step is the embedding row `x_t = W_es S_t` of the token,
//! the sequence starts with the start token and `h = c = 0`. The class
//! distribution is `softmax(W_pᵀ [h_L; features] + b_p)`. The linear
//! projection maps the hidden size onto the number of classes; optional
//! per-example feature vectors are appended to the last hidden state.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Sizes of every parameter block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LstmShape {
    pub vocab: usize,
    pub embed: usize,
    pub hidden: usize,
    /// Length of the per-example feature vector appended to `h_L` (0 for none).
    #[serde(default)]
    pub features: usize,
    pub classes: usize,
    /// Feed zero vectors instead of token embeddings (question-blind ablation).
    #[serde(default)]
    pub zero_question: bool,
}

impl LstmShape {
    pub fn new(vocab: usize, embed: usize, hidden: usize, classes: usize) -> Self {
        LstmShape {
            vocab,
            embed,
            hidden,
            features: 0,
            classes,
            zero_question: false,
        }
    }

    pub fn with_features(mut self, features: usize) -> Self {
        self.features = features;
        self
    }

    fn projection_in(&self) -> usize {
        self.hidden + self.features
    }
}

/// All learned weights. Gradients use the same type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParameters {
    pub shape: LstmShape,
    /// Word embeddings, one row per vocabulary entry (`vocab × embed`).
    pub w_es: Matrix,
    pub w_xi: Matrix,
    pub w_hi: Matrix,
    pub b_i: Vec<f64>,
    pub w_xf: Matrix,
    pub w_hf: Matrix,
    pub b_f: Vec<f64>,
    pub w_xo: Matrix,
    pub w_ho: Matrix,
    pub b_o: Vec<f64>,
    pub w_xc: Matrix,
    pub w_hc: Matrix,
    pub b_c: Vec<f64>,
    /// Output projection (`(hidden + features) × classes`).
    pub w_p: Matrix,
    pub b_p: Vec<f64>,
}

/// Hidden and cell vectors carried between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden: usize) -> Self {
        LstmState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// One training or evaluation sequence. `ids` already starts with the start
/// token. An empty `features` vector stands for all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub ids: Vec<usize>,
    pub features: Vec<f64>,
    pub label: usize,
}

impl Example {
    pub fn new(ids: Vec<usize>, label: usize) -> Self {
        Example {
            ids,
            features: Vec::new(),
            label,
        }
    }
}

pub const INIT_RANGE: f64 = 0.08;
pub const FORGET_BIAS: f64 = 1.0;

impl LstmParameters {
    pub fn zeros(shape: LstmShape) -> Self {
        let (e, h) = (shape.embed, shape.hidden);
        LstmParameters {
            shape,
            w_es: Matrix::zeros(shape.vocab, e),
            w_xi: Matrix::zeros(h, e),
            w_hi: Matrix::zeros(h, h),
            b_i: vec![0.0; h],
            w_xf: Matrix::zeros(h, e),
            w_hf: Matrix::zeros(h, h),
            b_f: vec![0.0; h],
            w_xo: Matrix::zeros(h, e),
            w_ho: Matrix::zeros(h, h),
            b_o: vec![0.0; h],
            w_xc: Matrix::zeros(h, e),
            w_hc: Matrix::zeros(h, h),
            b_c: vec![0.0; h],
            w_p: Matrix::zeros(shape.projection_in(), shape.classes),
            b_p: vec![0.0; shape.classes],
        }
    }

    /// Weights uniform in `±INIT_RANGE`, biases zero except the forget gate.
    pub fn init<R: Rng>(shape: LstmShape, rng: &mut R) -> Self {
        let mut p = Self::zeros(shape);
        for m in p.weight_matrices_mut() {
            for v in m.as_mut_slice() {
                *v = rng.gen_range(-INIT_RANGE..INIT_RANGE);
            }
        }
        p.b_f.fill(FORGET_BIAS);
        p
    }

    fn weight_matrices_mut(&mut self) -> [&mut Matrix; 10] {
        [
            &mut self.w_es,
            &mut self.w_xi,
            &mut self.w_hi,
            &mut self.w_xf,
            &mut self.w_hf,
            &mut self.w_xo,
            &mut self.w_ho,
            &mut self.w_xc,
            &mut self.w_hc,
            &mut self.w_p,
        ]
    }

    /// Every parameter block as a flat slice, in a fixed order.
    pub fn blocks(&self) -> [(&'static str, &[f64]); 15] {
        [
            ("w_es", self.w_es.as_slice()),
            ("w_xi", self.w_xi.as_slice()),
            ("w_hi", self.w_hi.as_slice()),
            ("b_i", &self.b_i),
            ("w_xf", self.w_xf.as_slice()),
            ("w_hf", self.w_hf.as_slice()),
            ("b_f", &self.b_f),
            ("w_xo", self.w_xo.as_slice()),
            ("w_ho", self.w_ho.as_slice()),
            ("b_o", &self.b_o),
            ("w_xc", self.w_xc.as_slice()),
            ("w_hc", self.w_hc.as_slice()),
            ("b_c", &self.b_c),
            ("w_p", self.w_p.as_slice()),
            ("b_p", &self.b_p),
        ]
    }

    pub fn blocks_mut(&mut self) -> [&mut [f64]; 15] {
        [
            self.w_es.as_mut_slice(),
            self.w_xi.as_mut_slice(),
            self.w_hi.as_mut_slice(),
            &mut self.b_i,
            self.w_xf.as_mut_slice(),
            self.w_hf.as_mut_slice(),
            &mut self.b_f,
            self.w_xo.as_mut_slice(),
            self.w_ho.as_mut_slice(),
            &mut self.b_o,
            self.w_xc.as_mut_slice(),
            self.w_hc.as_mut_slice(),
            &mut self.b_c,
            self.w_p.as_mut_slice(),
            &mut self.b_p,
        ]
    }

    pub fn num_params(&self) -> usize {
        self.blocks().iter().map(|(_, b)| b.len()).sum()
    }

    /// `‖θ‖²` over every block, embeddings and projection included.
    pub fn squared_norm(&self) -> f64 {
        self.blocks()
            .iter()
            .map(|(_, b)| b.iter().map(|v| v * v).sum::<f64>())
            .sum()
    }

    /// Check every block against `shape` and for non-finite entries.
    pub fn validate(&self) -> Result<()> {
        let s = self.shape;
        let (e, h) = (s.embed, s.hidden);
        let expect = [
            ("w_es", self.w_es.shape(), (s.vocab, e)),
            ("w_xi", self.w_xi.shape(), (h, e)),
            ("w_hi", self.w_hi.shape(), (h, h)),
            ("w_xf", self.w_xf.shape(), (h, e)),
            ("w_hf", self.w_hf.shape(), (h, h)),
            ("w_xo", self.w_xo.shape(), (h, e)),
            ("w_ho", self.w_ho.shape(), (h, h)),
            ("w_xc", self.w_xc.shape(), (h, e)),
            ("w_hc", self.w_hc.shape(), (h, h)),
            ("w_p", self.w_p.shape(), (s.projection_in(), s.classes)),
        ];
        for (name, got, want) in expect {
            if got != want {
                return Err(Error::Shape(format!("{name} is {got:?}, expected {want:?}")));
            }
        }
        for (name, b, want) in [
            ("b_i", &self.b_i, h),
            ("b_f", &self.b_f, h),
            ("b_o", &self.b_o, h),
            ("b_c", &self.b_c, h),
            ("b_p", &self.b_p, s.classes),
        ] {
            if b.len() != want {
                return Err(Error::Shape(format!("{name} has length {}, expected {want}", b.len())));
            }
        }
        if let Some((name, _)) = self.blocks().iter().find(|(_, b)| b.iter().any(|v| !v.is_finite())) {
            return Err(Error::Shape(format!("{name} has non-finite entries")));
        }
        Ok(())
    }

    fn embedding(&self, id: usize) -> Result<&[f64]> {
        if id >= self.shape.vocab {
            return Err(Error::Shape(format!(
                "token id {id} outside vocabulary of {}",
                self.shape.vocab
            )));
        }
        Ok(self.w_es.row(id))
    }

    fn input(&self, id: usize, zeros: &[f64]) -> Result<Vec<f64>> {
        let row = self.embedding(id)?;
        Ok(if self.shape.zero_question {
            zeros.to_vec()
        } else {
            row.to_vec()
        })
    }

    fn gates(&self, x: &[f64], h_prev: &[f64]) -> Gates {
        let pre = |wx: &Matrix, wh: &Matrix, b: &[f64]| {
            let mut a = b.to_vec();
            wx.matvec_acc(x, &mut a);
            wh.matvec_acc(h_prev, &mut a);
            a
        };
        let mut i = pre(&self.w_xi, &self.w_hi, &self.b_i);
        let mut f = pre(&self.w_xf, &self.w_hf, &self.b_f);
        let mut o = pre(&self.w_xo, &self.w_ho, &self.b_o);
        let mut g = pre(&self.w_xc, &self.w_hc, &self.b_c);
        i.iter_mut().for_each(|v| *v = sigmoid(*v));
        f.iter_mut().for_each(|v| *v = sigmoid(*v));
        o.iter_mut().for_each(|v| *v = sigmoid(*v));
        g.iter_mut().for_each(|v| *v = v.tanh());
        Gates { i, f, o, g }
    }

    fn check_features<'a>(&self, features: &'a [f64], zeros: &'a [f64]) -> Result<&'a [f64]> {
        match features.len() {
            0 => Ok(zeros),
            n if n == self.shape.features => Ok(features),
            n => Err(Error::Shape(format!(
                "feature vector of length {n}, expected {}",
                self.shape.features
            ))),
        }
    }

    fn logits(&self, h: &[f64], features: &[f64]) -> Vec<f64> {
        let mut z = self.b_p.clone();
        let hidden = self.shape.hidden;
        for (j, &v) in h.iter().chain(features).enumerate() {
            if v != 0.0 {
                super::matrix::axpy(v, self.w_p.row(j), &mut z);
            }
        }
        debug_assert_eq!(h.len(), hidden);
        z
    }

    /// Run the sequence and return its trace; `mask` (if any) scales the
    /// final hidden state that feeds the projection.
    fn run(&self, ex_ids: &[usize], features: &[f64], mask: Option<&[f64]>) -> Result<Trace> {
        if ex_ids.is_empty() {
            return Err(Error::Shape("empty token sequence".into()));
        }
        let hidden = self.shape.hidden;
        let zero_x = vec![0.0; self.shape.embed];
        let zero_f = vec![0.0; self.shape.features];
        let features = self.check_features(features, &zero_f)?.to_vec();
        let mut states = Vec::with_capacity(ex_ids.len() + 1);
        let mut gates = Vec::with_capacity(ex_ids.len());
        let mut inputs = Vec::with_capacity(ex_ids.len());
        states.push(LstmState::zeros(hidden));
        for &id in ex_ids {
            let x = self.input(id, &zero_x)?;
            let prev = states.last().expect("initial state");
            let g = self.gates(&x, &prev.h);
            let next = g.apply(prev);
            inputs.push(x);
            gates.push(g);
            states.push(next);
        }
        let last = states.last().expect("at least one step");
        let top: Vec<f64> = match mask {
            Some(m) => last.h.iter().zip(m).map(|(h, m)| h * m).collect(),
            None => last.h.clone(),
        };
        let logits = self.logits(&top, &features);
        Ok(Trace {
            inputs,
            states,
            gates,
            top,
            features,
            log_probs: log_softmax(&logits),
        })
    }

    /// Class probabilities for a sequence that already starts with the start
    /// token. Inference never applies dropout.
    pub fn forward(&self, ids: &[usize], features: &[f64]) -> Result<Vec<f64>> {
        let trace = self.run(ids, features, None)?;
        Ok(trace.log_probs.iter().map(|lp| lp.exp()).collect())
    }

    /// Mean negative log-likelihood of the labels plus `λ‖θ‖²`.
    pub fn loss(&self, batch: &[Example], lambda: f64) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Invalid("empty batch".into()));
        }
        let mut nll = 0.0;
        for ex in batch {
            self.check_label(ex.label)?;
            nll -= self.run(&ex.ids, &ex.features, None)?.log_probs[ex.label];
        }
        Ok(nll / batch.len() as f64 + lambda * self.squared_norm())
    }

    /// Gradient of [`loss`](Self::loss) with respect to every parameter.
    pub fn grad(&self, batch: &[Example], lambda: f64) -> Result<LstmParameters> {
        self.loss_and_grad(batch, lambda, None).map(|(_, g)| g)
    }

    fn check_label(&self, label: usize) -> Result<()> {
        if label >= self.shape.classes {
            return Err(Error::UnknownLabel(format!(
                "class {label} of {}",
                self.shape.classes
            )));
        }
        Ok(())
    }

    /// Loss and backpropagation through time over a batch. With `dropout`
    /// set, each example draws an inverted-dropout mask for its final hidden
    /// state from the given generator.
    pub(crate) fn loss_and_grad(
        &self,
        batch: &[Example],
        lambda: f64,
        mut dropout: Option<(&mut dyn RngCore, f64)>,
    ) -> Result<(f64, LstmParameters)> {
        if batch.is_empty() {
            return Err(Error::Invalid("empty batch".into()));
        }
        let n = batch.len() as f64;
        let hidden = self.shape.hidden;
        let mut grad = LstmParameters::zeros(self.shape);
        let mut nll = 0.0;

        for ex in batch {
            self.check_label(ex.label)?;
            let mask = dropout.as_mut().map(|(rng, rate)| dropout_mask(*rng, hidden, *rate));
            let trace = self.run(&ex.ids, &ex.features, mask.as_deref())?;
            nll -= trace.log_probs[ex.label];

            // d loss / d logits = (p - onehot) / N
            let mut dlogits: Vec<f64> = trace.log_probs.iter().map(|lp| lp.exp() / n).collect();
            dlogits[ex.label] -= 1.0 / n;

            super::matrix::axpy(1.0, &dlogits, &mut grad.b_p);
            let mut dtop = vec![0.0; hidden];
            for (j, &v) in trace.top.iter().chain(&trace.features).enumerate() {
                if v != 0.0 {
                    super::matrix::axpy(v, &dlogits, grad.w_p.row_mut(j));
                }
            }
            for (j, d) in dtop.iter_mut().enumerate() {
                *d = super::matrix::dot(self.w_p.row(j), &dlogits);
            }
            if let Some(m) = &mask {
                dtop.iter_mut().zip(m).for_each(|(d, m)| *d *= m);
            }

            let mut dh = dtop;
            let mut dc = vec![0.0; hidden];
            for t in (0..ex.ids.len()).rev() {
                let g = &trace.gates[t];
                let prev = &trace.states[t];
                let cur = &trace.states[t + 1];
                let mut da_i = vec![0.0; hidden];
                let mut da_f = vec![0.0; hidden];
                let mut da_o = vec![0.0; hidden];
                let mut da_g = vec![0.0; hidden];
                for k in 0..hidden {
                    let tc = cur.c[k].tanh();
                    let d_o = dh[k] * tc;
                    let dct = dc[k] + dh[k] * g.o[k] * (1.0 - tc * tc);
                    da_i[k] = dct * g.g[k] * g.i[k] * (1.0 - g.i[k]);
                    da_f[k] = dct * prev.c[k] * g.f[k] * (1.0 - g.f[k]);
                    da_o[k] = d_o * g.o[k] * (1.0 - g.o[k]);
                    da_g[k] = dct * g.i[k] * (1.0 - g.g[k] * g.g[k]);
                    dc[k] = dct * g.f[k];
                }
                let x = &trace.inputs[t];
                let mut dx = vec![0.0; self.shape.embed];
                let mut dh_prev = vec![0.0; hidden];
                for (da, wx, wh, gwx, gwh, gb) in [
                    (&da_i, &self.w_xi, &self.w_hi, &mut grad.w_xi, &mut grad.w_hi, &mut grad.b_i),
                    (&da_f, &self.w_xf, &self.w_hf, &mut grad.w_xf, &mut grad.w_hf, &mut grad.b_f),
                    (&da_o, &self.w_xo, &self.w_ho, &mut grad.w_xo, &mut grad.w_ho, &mut grad.b_o),
                    (&da_g, &self.w_xc, &self.w_hc, &mut grad.w_xc, &mut grad.w_hc, &mut grad.b_c),
                ] {
                    gwx.outer_acc(da, x);
                    if t > 0 {
                        gwh.outer_acc(da, &prev.h);
                        wh.matvec_t_acc(da, &mut dh_prev);
                    }
                    super::matrix::axpy(1.0, da, gb);
                    if !self.shape.zero_question {
                        wx.matvec_t_acc(da, &mut dx);
                    }
                }
                if !self.shape.zero_question {
                    super::matrix::axpy(1.0, &dx, grad.w_es.row_mut(ex.ids[t]));
                }
                dh = dh_prev;
            }
        }

        if lambda != 0.0 {
            for (g, (_, p)) in grad.blocks_mut().into_iter().zip(self.blocks()) {
                super::matrix::axpy(2.0 * lambda, p, g);
            }
        }
        Ok((nll / n + lambda * self.squared_norm(), grad))
    }
}

/// One evaluation of the recurrence. With `dropout_mask`, the new hidden
/// state is multiplied elementwise by the mask.
pub fn lstm_step(
    params: &LstmParameters,
    x: &[f64],
    state: &LstmState,
    dropout_mask: Option<&[f64]>,
) -> Result<LstmState> {
    let s = params.shape;
    if x.len() != s.embed {
        return Err(Error::Shape(format!("input of length {}, expected {}", x.len(), s.embed)));
    }
    if state.h.len() != s.hidden || state.c.len() != s.hidden {
        return Err(Error::Shape(format!("state is not of length {}", s.hidden)));
    }
    if dropout_mask.is_some_and(|m| m.len() != s.hidden) {
        return Err(Error::Shape("dropout mask length differs from hidden size".into()));
    }
    let mut next = params.gates(x, &state.h).apply(state);
    if let Some(m) = dropout_mask {
        next.h.iter_mut().zip(m).for_each(|(h, m)| *h *= m);
    }
    Ok(next)
}

struct Gates {
    i: Vec<f64>,
    f: Vec<f64>,
    o: Vec<f64>,
    g: Vec<f64>,
}

impl Gates {
    fn apply(&self, prev: &LstmState) -> LstmState {
        let c: Vec<f64> = (0..prev.c.len())
            .map(|k| self.f[k] * prev.c[k] + self.i[k] * self.g[k])
            .collect();
        let h = c.iter().zip(&self.o).map(|(c, o)| o * c.tanh()).collect();
        LstmState { h, c }
    }
}

struct Trace {
    inputs: Vec<Vec<f64>>,
    /// `states[0]` is the zero initial state, `states[t + 1]` follows step `t`.
    states: Vec<LstmState>,
    gates: Vec<Gates>,
    /// Final hidden state after dropout, as fed to the projection.
    top: Vec<f64>,
    features: Vec<f64>,
    log_probs: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Log-probabilities through the log-sum-exp; never `-inf` for finite logits.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
    let log_z = max + sum.ln();
    logits.iter().map(|z| z - log_z).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

/// Inverted dropout: each unit is kept with probability `1 - rate` and scaled
/// by `1 / (1 - rate)`.
fn dropout_mask(rng: &mut dyn RngCore, len: usize, rate: f64) -> Vec<f64> {
    if rate <= 0.0 {
        return vec![1.0; len];
    }
    let keep = 1.0 - rate;
    (0..len)
        .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
        .collect()
}
