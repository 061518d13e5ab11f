//! Per-character classifier: a stacked LSTM encoder whose final hidden states
//! feed a two-layer feed-forward decoder producing 27 logits.

mod lstm;
mod optim;
mod persist;
pub(crate) mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seqcore::{ChannelSelector, FixedSequence, NUM_CLASSES, N_RESAMPLE};

pub use lstm::Tape;
pub use optim::{AdamW, AdamWConfig};
pub use persist::{load_model, load_model_file, save_model, save_model_file};
pub use train::{
    accuracy, fine_tune, prepare, random_search, train, EpochRecord, LeaderboardEntry, SearchRanges,
    TrainOpts,
};

pub type Logits = [f64; NUM_CLASSES];

/// Architecture hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hparams {
    pub lstm_layers: usize,
    pub lstm_hidden: usize,
    pub ff_hidden: usize,
    pub input_channels: usize,
    pub resample_points: usize,
    pub num_classes: usize,
}

impl Default for Hparams {
    fn default() -> Self {
        Hparams {
            lstm_layers: 3,
            lstm_hidden: 200,
            ff_hidden: 200,
            input_channels: 3,
            resample_points: N_RESAMPLE,
            num_classes: NUM_CLASSES,
        }
    }
}

impl Hparams {
    pub fn new(lstm_layers: usize, lstm_hidden: usize, ff_hidden: usize) -> Hparams {
        Hparams {
            lstm_layers,
            lstm_hidden,
            ff_hidden,
            ..Hparams::default()
        }
    }

    pub fn with_resample_points(mut self, n: usize) -> Hparams {
        self.resample_points = n;
        self
    }

    pub fn with_channels(mut self, selector: ChannelSelector) -> Hparams {
        self.input_channels = selector.len();
        self
    }

    /// Structural validity. The search ranges are narrower; see [`SearchRanges`].
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("hparams: {what} ({self:?})")));
        if !(1..=8).contains(&self.lstm_layers) {
            return bad("lstm_layers outside [1, 8]");
        }
        if !(1..=300).contains(&self.lstm_hidden) {
            return bad("lstm_hidden outside [1, 300]");
        }
        if !(1..=400).contains(&self.ff_hidden) {
            return bad("ff_hidden outside [1, 400]");
        }
        if self.num_classes != NUM_CLASSES {
            return bad("num_classes must be 27");
        }
        if self.resample_points < 2 {
            return bad("resample_points below 2");
        }
        ChannelSelector::from_count(self.input_channels)?;
        Ok(())
    }

    pub fn selector(&self) -> ChannelSelector {
        ChannelSelector::from_count(self.input_channels).unwrap_or_default()
    }

    /// Width of the decoder input: all layers' final hidden states.
    pub fn encoder_width(&self) -> usize {
        self.lstm_layers * self.lstm_hidden
    }
}

/// Offsets of one LSTM layer's tensors inside the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct LayerSlots {
    pub in_dim: usize,
    pub w_ih: usize,
    pub w_hh: usize,
    pub bias: usize,
}

/// Positions of every tensor in the flat parameter vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Layout {
    pub hidden: usize,
    pub ff: usize,
    pub layers: Vec<LayerSlots>,
    pub w1: usize,
    pub b1: usize,
    pub w2: usize,
    pub b2: usize,
    pub total: usize,
}

impl Layout {
    pub fn new(h: &Hparams) -> Layout {
        let hidden = h.lstm_hidden;
        let mut off = 0;
        let mut layers = Vec::with_capacity(h.lstm_layers);
        for l in 0..h.lstm_layers {
            let in_dim = if l == 0 { h.input_channels } else { hidden };
            let w_ih = off;
            let w_hh = w_ih + 4 * hidden * in_dim;
            let bias = w_hh + 4 * hidden * hidden;
            off = bias + 4 * hidden;
            layers.push(LayerSlots {
                in_dim,
                w_ih,
                w_hh,
                bias,
            });
        }
        let w1 = off;
        let b1 = w1 + h.ff_hidden * h.encoder_width();
        let w2 = b1 + h.ff_hidden;
        let b2 = w2 + NUM_CLASSES * h.ff_hidden;
        let total = b2 + NUM_CLASSES;
        Layout {
            hidden,
            ff: h.ff_hidden,
            layers,
            w1,
            b1,
            w2,
            b2,
            total,
        }
    }

    /// Named tensors as `(name, offset, len, fan_in)`.
    pub fn tensors(&self, h: &Hparams) -> Vec<(String, usize, usize, usize)> {
        let hd = self.hidden;
        let mut out = Vec::new();
        for (l, s) in self.layers.iter().enumerate() {
            out.push((format!("lstm{l}.w_ih"), s.w_ih, 4 * hd * s.in_dim, s.in_dim));
            out.push((format!("lstm{l}.w_hh"), s.w_hh, 4 * hd * hd, hd));
            out.push((format!("lstm{l}.bias"), s.bias, 4 * hd, hd));
        }
        let enc = h.encoder_width();
        out.push(("dec1.w".into(), self.w1, self.ff * enc, enc));
        out.push(("dec1.b".into(), self.b1, self.ff, enc));
        out.push(("dec2.w".into(), self.w2, NUM_CLASSES * self.ff, self.ff));
        out.push(("dec2.b".into(), self.b2, NUM_CLASSES, self.ff));
        out
    }

    /// First index past the feature extractor (encoder plus decoder layer 1).
    pub fn feature_end(&self) -> usize {
        self.w2
    }
}

/// Per-channel affine input normalization `(x - shift) * scale`. Fixed at
/// training start; not a trained parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputNorm {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl InputNorm {
    pub fn identity(channels: usize) -> InputNorm {
        InputNorm {
            shift: vec![0.0; channels],
            scale: vec![1.0; channels],
        }
    }

    /// Mean and inverse standard deviation of each channel over all points.
    pub fn fit(data: &[FixedSequence]) -> InputNorm {
        let Some(first) = data.first() else {
            return InputNorm::identity(3);
        };
        let c = first.n_channels();
        let mut sum = vec![0.0; c];
        let mut sq = vec![0.0; c];
        let mut count = 0.0;
        for fs in data {
            for (k, (s, q)) in sum.iter_mut().zip(sq.iter_mut()).enumerate() {
                for &v in fs.channel(k) {
                    *s += v;
                    *q += v * v;
                }
            }
            count += fs.n_points() as f64;
        }
        let shift: Vec<f64> = sum.iter().map(|s| s / count).collect();
        let scale = sq
            .iter()
            .zip(&shift)
            .map(|(q, m)| {
                let var = (q / count - m * m).max(0.0);
                if var > 1e-12 {
                    1.0 / var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        InputNorm { shift, scale }
    }
}

/// Classifier parameters: stacked LSTM plus two dense layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub hparams: Hparams,
    pub norm: InputNorm,
    params: Vec<f64>,
    layout: Layout,
}

/// Uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` weights, forget-gate biases at
/// 1.0, deterministic in `seed`.
pub fn init_model(h: &Hparams, seed: u64) -> Result<Model> {
    h.validate()?;
    let layout = Layout::new(h);
    let mut params = vec![0.0; layout.total];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (_, off, len, fan_in) in layout.tensors(h) {
        let bound = 1.0 / (fan_in as f64).sqrt();
        for p in &mut params[off..off + len] {
            *p = rng.random_range(-bound..=bound);
        }
    }
    for s in &layout.layers {
        let hd = layout.hidden;
        params[s.bias + hd..s.bias + 2 * hd].fill(1.0);
    }
    Ok(Model {
        hparams: *h,
        norm: InputNorm::identity(h.input_channels),
        params,
        layout,
    })
}

impl Model {
    /// A model with every parameter set to zero.
    pub fn zeros(h: &Hparams) -> Result<Model> {
        h.validate()?;
        let layout = Layout::new(h);
        Ok(Model {
            hparams: *h,
            norm: InputNorm::identity(h.input_channels),
            params: vec![0.0; layout.total],
            layout,
        })
    }

    pub(crate) fn from_parts(hparams: Hparams, norm: InputNorm, params: Vec<f64>) -> Result<Model> {
        hparams.validate()?;
        let layout = Layout::new(&hparams);
        if params.len() != layout.total {
            return Err(Error::ModelFormat(format!(
                "payload has {} parameters, hparams need {}",
                params.len(),
                layout.total
            )));
        }
        if norm.shift.len() != hparams.input_channels || norm.scale.len() != hparams.input_channels {
            return Err(Error::ModelFormat("normalization width mismatch".into()));
        }
        Ok(Model {
            hparams,
            norm,
            params,
            layout,
        })
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub(crate) fn layout(&self) -> &Layout {
        &self.layout
    }

    /// `(name, values)` for every parameter tensor.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        self.layout
            .tensors(&self.hparams)
            .into_iter()
            .map(|(name, off, len, _)| (name, &self.params[off..off + len]))
            .collect()
    }

    /// Index range of each named tensor in [`Model::params`].
    pub fn tensor_ranges(&self) -> Vec<(String, std::ops::Range<usize>)> {
        self.layout
            .tensors(&self.hparams)
            .into_iter()
            .map(|(name, off, len, _)| (name, off..off + len))
            .collect()
    }

    /// Parameter indices belonging to the feature extractor (encoder and first
    /// decoder layer); the rest is the letter classifier.
    pub fn feature_param_range(&self) -> std::ops::Range<usize> {
        0..self.layout.feature_end()
    }

    pub fn check_input(&self, fs: &FixedSequence) -> Result<()> {
        if fs.n_channels() != self.hparams.input_channels || fs.n_points() != self.hparams.resample_points {
            return Err(Error::Shape(format!(
                "input is {}x{}, model expects {}x{}",
                fs.n_channels(),
                fs.n_points(),
                self.hparams.input_channels,
                self.hparams.resample_points
            )));
        }
        Ok(())
    }

    /// Logits for each input, in order.
    pub fn forward(&self, batch: &[FixedSequence]) -> Result<Vec<Logits>> {
        let refs: Vec<&FixedSequence> = batch.iter().collect();
        self.forward_refs(&refs)
    }

    pub fn forward_refs(&self, batch: &[&FixedSequence]) -> Result<Vec<Logits>> {
        const CHUNK: usize = 128;
        for fs in batch {
            self.check_input(fs)?;
        }
        let mut out = Vec::with_capacity(batch.len());
        for chunk in batch.chunks(CHUNK) {
            let tape = self.run(chunk);
            out.extend(tape.logits_rows());
        }
        Ok(out)
    }

    /// Forward pass that keeps every intermediate needed for backprop.
    pub fn run(&self, batch: &[&FixedSequence]) -> Tape {
        lstm::forward(self, batch)
    }

    /// Accumulates parameter gradients of a loss whose gradient with respect
    /// to the logits is `d_logits` (batch x 27). `d_features` optionally adds
    /// a gradient arriving directly at the decoder's hidden activations.
    pub fn backward(&self, tape: &Tape, d_logits: &[f64], d_features: Option<&[f64]>, grads: &mut [f64]) {
        lstm::backward(self, tape, d_logits, d_features, grads)
    }

    /// Mean cross-entropy of a batch and its gradient, accumulated into
    /// `grads`. Returns `(loss, correct predictions)`.
    pub fn batch_gradient(&self, batch: &[&FixedSequence], labels: &[usize], grads: &mut [f64]) -> Result<(f64, usize)> {
        let tape = self.run(batch);
        let (loss, correct, d_logits) = ce_head(&tape, labels)?;
        self.backward(&tape, &d_logits, None, grads);
        Ok((loss, correct))
    }

    pub fn predict(&self, batch: &[FixedSequence]) -> Result<Vec<usize>> {
        Ok(self.forward(batch)?.iter().map(argmax).collect())
    }
}

/// Mean cross-entropy over a batch, the number of argmax hits, and the
/// gradient with respect to the logits.
pub(crate) fn ce_head(tape: &Tape, labels: &[usize]) -> Result<(f64, usize, Vec<f64>)> {
    let b = labels.len();
    let mut d = vec![0.0; b * NUM_CLASSES];
    let mut loss = 0.0;
    let mut correct = 0;
    for (i, logits) in tape.logits_rows().iter().enumerate() {
        let label = labels[i];
        if label >= NUM_CLASSES {
            return Err(Error::InvalidLabel(format!("class index {label}")));
        }
        let lp = log_softmax(logits);
        loss -= lp[label];
        if argmax(logits) == label {
            correct += 1;
        }
        for (k, v) in lp.iter().enumerate() {
            d[i * NUM_CLASSES + k] = (v.exp() - if k == label { 1.0 } else { 0.0 }) / b as f64;
        }
    }
    Ok((loss / b as f64, correct, d))
}

/// Numerically stable log-softmax.
pub fn log_softmax(logits: &Logits) -> Logits {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    logits.map(|v| v - lse)
}

/// Cross-entropy of one prediction.
pub fn loss_ce(logits: &Logits, label: usize) -> Result<f64> {
    if label >= NUM_CLASSES {
        return Err(Error::InvalidLabel(format!("class index {label}")));
    }
    Ok(-log_softmax(logits)[label])
}

/// Mean cross-entropy over a batch.
pub fn batch_loss_ce(logits: &[Logits], labels: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for (l, &y) in logits.iter().zip(labels) {
        total += loss_ce(l, y)?;
    }
    Ok(total / logits.len().max(1) as f64)
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(v: &Logits) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}
