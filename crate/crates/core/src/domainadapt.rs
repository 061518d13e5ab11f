//! Adversarial domain adaptation of a pretrained letter classifier.
//!
//! The classifier's encoder and first decoder layer act as the feature
//! extractor, its last layer as the letter classifier. A small domain head
//! reads the same features and predicts whether a sample comes from the new
//! writer. Training minimizes `L_chr - lambda * L_dom` over the feature
//! extractor and letter classifier while the head minimizes `L_dom`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::augment::RandomSource;
use crate::classifier::train::{evaluate_prepared, prepare, shuffled_order};
use crate::classifier::{ce_head, loss_ce, AdamW, AdamWConfig, Logits, Model};
use crate::error::{Error, Result};
use crate::linalg::{gemm, sigmoid};
use crate::seqcore::{Dataset, FixedSequence};

/// Probabilities are clamped to `[EPS, 1 - EPS]` inside the log.
pub const BCE_EPS: f64 = 1e-12;

/// `2 / (1 + exp(-10 p)) - 1`
pub fn lambda_schedule(p: f64) -> f64 {
    2.0 / (1.0 + (-10.0 * p).exp()) - 1.0
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    /// `p = epoch / max_epochs`
    #[default]
    Progress,
    /// `p = epoch`
    RawEpoch,
}

impl Schedule {
    pub fn lambda(self, epoch: usize, max_epochs: usize) -> f64 {
        match self {
            Schedule::Progress => lambda_schedule(epoch as f64 / max_epochs.max(1) as f64),
            Schedule::RawEpoch => lambda_schedule(epoch as f64),
        }
    }
}

/// Two dense layers, ReLU between, sigmoid output: `P(out of domain)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainHead {
    pub input: usize,
    pub hidden: usize,
    params: Vec<f64>,
}

/// Intermediate values of a batched head pass.
pub struct HeadTape {
    pre: Vec<f64>,
    act: Vec<f64>,
    pub probs: Vec<f64>,
}

impl DomainHead {
    fn sizes(input: usize, hidden: usize) -> usize {
        hidden * input + hidden + hidden + 1
    }

    pub fn zeros(input: usize, hidden: usize) -> DomainHead {
        DomainHead {
            input,
            hidden,
            params: vec![0.0; Self::sizes(input, hidden)],
        }
    }

    /// Uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` initialization.
    pub fn init(input: usize, hidden: usize, seed: u64) -> DomainHead {
        let mut head = DomainHead::zeros(input, hidden);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b1 = 1.0 / (input as f64).sqrt();
        let b2 = 1.0 / (hidden as f64).sqrt();
        let split = hidden * input + hidden;
        for (i, p) in head.params.iter_mut().enumerate() {
            let b = if i < split { b1 } else { b2 };
            *p = rng.random_range(-b..=b);
        }
        head
    }

    /// Builds from explicit weights: `w1` is `hidden x input` row-major.
    pub fn from_weights(w1: &[f64], b1: &[f64], w2: &[f64], b2: f64) -> Result<DomainHead> {
        let hidden = b1.len();
        if hidden == 0 || w2.len() != hidden || w1.len() % hidden != 0 {
            return Err(Error::Shape("inconsistent domain head weights".into()));
        }
        let mut params = Vec::with_capacity(w1.len() + 2 * hidden + 1);
        params.extend_from_slice(w1);
        params.extend_from_slice(b1);
        params.extend_from_slice(w2);
        params.push(b2);
        Ok(DomainHead {
            input: w1.len() / hidden,
            hidden,
            params,
        })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn split(&self) -> (&[f64], &[f64], &[f64], f64) {
        let (d, f) = (self.hidden, self.input);
        let (w1, rest) = self.params.split_at(d * f);
        let (b1, rest) = rest.split_at(d);
        let (w2, b2) = rest.split_at(d);
        (w1, b1, w2, b2[0])
    }

    /// Batched pass over `features` (`batch x input`).
    pub fn run(&self, features: &[f64]) -> Result<HeadTape> {
        if features.len() % self.input != 0 {
            return Err(Error::Shape(format!(
                "feature buffer of {} values is not a multiple of width {}",
                features.len(),
                self.input
            )));
        }
        let b = features.len() / self.input;
        let (w1, b1, w2, b2) = self.split();
        let d = self.hidden;
        let mut pre = vec![0.0; b * d];
        for row in pre.chunks_exact_mut(d) {
            row.copy_from_slice(b1);
        }
        gemm(b, self.input, d, features, false, w1, true, 1.0, &mut pre);
        let act: Vec<f64> = pre.iter().map(|v| v.max(0.0)).collect();
        let probs = act
            .chunks_exact(d)
            .map(|h| sigmoid(b2 + h.iter().zip(w2).map(|(a, w)| a * w).sum::<f64>()))
            .collect();
        Ok(HeadTape { pre, act, probs })
    }

    /// Given the loss gradient with respect to each sample's pre-sigmoid
    /// output, accumulates head gradients and returns the gradient with
    /// respect to `features`.
    pub fn backward(&self, features: &[f64], tape: &HeadTape, d_out: &[f64], grads: &mut [f64]) -> Vec<f64> {
        let (d, f) = (self.hidden, self.input);
        let b = d_out.len();
        let (w1, _, w2, _) = self.split();
        let (g_w1, rest) = grads.split_at_mut(d * f);
        let (g_b1, rest) = rest.split_at_mut(d);
        let (g_w2, g_b2) = rest.split_at_mut(d);
        let mut d_hidden = vec![0.0; b * d];
        for (s, &dz) in d_out.iter().enumerate() {
            g_b2[0] += dz;
            for j in 0..d {
                g_w2[j] += dz * tape.act[s * d + j];
                if tape.pre[s * d + j] > 0.0 {
                    d_hidden[s * d + j] = dz * w2[j];
                }
            }
        }
        for row in d_hidden.chunks_exact(d) {
            for (g, v) in g_b1.iter_mut().zip(row) {
                *g += v;
            }
        }
        gemm(d, b, f, &d_hidden, true, features, false, 1.0, g_w1);
        let mut d_feat = vec![0.0; b * f];
        gemm(b, d, f, &d_hidden, false, w1, false, 0.0, &mut d_feat);
        d_feat
    }
}

/// `P(out of domain)` for one feature vector.
pub fn domain_forward(head: &DomainHead, features: &[f64]) -> Result<f64> {
    if features.len() != head.input {
        return Err(Error::Shape(format!("expected {} features, got {}", head.input, features.len())));
    }
    Ok(head.run(features)?.probs[0])
}

/// Clamped binary cross-entropy of one prediction.
pub fn bce(p: f64, y: u8) -> f64 {
    let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Mean BCE and its gradient with respect to each pre-sigmoid output.
fn bce_head(probs: &[f64], y: &[u8]) -> (f64, Vec<f64>) {
    let b = probs.len() as f64;
    let loss = probs.iter().zip(y).map(|(&p, &t)| bce(p, t)).sum::<f64>() / b;
    let grad = probs
        .iter()
        .zip(y)
        .map(|(&p, &t)| {
            if (BCE_EPS..=1.0 - BCE_EPS).contains(&p) {
                (p - f64::from(t)) / b
            } else {
                0.0
            }
        })
        .collect();
    (loss, grad)
}

/// `(L, L_chr, L_dom)` as batch means with `L = L_chr - lambda * L_dom`.
pub fn joint_loss(char_logits: &[Logits], y_c: &[usize], dom_prob: &[f64], y_d: &[u8], lambda: f64) -> Result<(f64, f64, f64)> {
    if char_logits.len() != y_c.len() || dom_prob.len() != y_d.len() || char_logits.is_empty() || dom_prob.is_empty() {
        return Err(Error::Shape("mismatched or empty loss inputs".into()));
    }
    let mut chr = 0.0;
    for (l, &y) in char_logits.iter().zip(y_c) {
        chr += loss_ce(l, y)?;
    }
    let chr = chr / y_c.len() as f64;
    let dom = dom_prob.iter().zip(y_d).map(|(&p, &y)| bce(p, y)).sum::<f64>() / y_d.len() as f64;
    Ok((chr - lambda * dom, chr, dom))
}

/// The pretrained classifier with its domain head.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainModel {
    pub base: Model,
    pub head: DomainHead,
}

/// Gradients of one batch under the joint objective.
pub struct JointGradients {
    pub loss: f64,
    pub char_loss: f64,
    pub dom_loss: f64,
    pub char_correct: usize,
    pub dom_correct: usize,
    /// `dL_chr/d theta - lambda * dL_dom/d theta` over the base model
    pub base: Vec<f64>,
    /// `dL_dom/d theta_dom`, not scaled by lambda
    pub head: Vec<f64>,
}

impl DomainModel {
    pub fn new(base: Model, head_seed: u64) -> DomainModel {
        let ff = base.hparams.ff_hidden;
        DomainModel {
            head: DomainHead::init(ff, ff, head_seed),
            base,
        }
    }

    pub fn joint_gradients(&self, batch: &[&FixedSequence], y_c: &[usize], y_d: &[u8], lambda: f64) -> Result<JointGradients> {
        let tape = self.base.run(batch);
        let (char_loss, char_correct, d_logits) = ce_head(&tape, y_c)?;
        let feats = tape.features();
        let head_tape = self.head.run(feats)?;
        let (dom_loss, d_out) = bce_head(&head_tape.probs, y_d);
        let mut head = vec![0.0; self.head.params.len()];
        let d_feat = self.head.backward(feats, &head_tape, &d_out, &mut head);
        let mut base = vec![0.0; self.base.param_count()];
        if lambda == 0.0 {
            self.base.backward(&tape, &d_logits, None, &mut base);
        } else {
            let reversed: Vec<f64> = d_feat.iter().map(|g| -lambda * g).collect();
            self.base.backward(&tape, &d_logits, Some(&reversed), &mut base);
        }
        let dom_correct = head_tape
            .probs
            .iter()
            .zip(y_d)
            .filter(|(&p, &y)| u8::from(p >= 0.5) == y)
            .count();
        Ok(JointGradients {
            loss: char_loss - lambda * dom_loss,
            char_loss,
            dom_loss,
            char_correct,
            dom_correct,
            base,
            head,
        })
    }

    /// Fraction of samples whose domain is predicted correctly.
    pub fn domain_accuracy(&self, xs: &[FixedSequence], y_d: &[u8]) -> Result<f64> {
        if xs.is_empty() {
            return Ok(f64::NAN);
        }
        let mut hits = 0;
        for (chunk, ys) in xs.chunks(128).zip(y_d.chunks(128)) {
            let refs: Vec<&FixedSequence> = chunk.iter().collect();
            let tape = self.base.run(&refs);
            let probs = self.head.run(tape.features())?.probs;
            hits += probs.iter().zip(ys).filter(|(&p, &y)| u8::from(p >= 0.5) == y).count();
        }
        Ok(hits as f64 / xs.len() as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptOpts {
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// ID items mixed into training; defaults to `ceil(1.09 * |OOD|)`.
    pub id_sample_size: Option<usize>,
    pub schedule: Schedule,
    /// Use this lambda in every epoch instead of the schedule.
    pub fixed_lambda: Option<f64>,
    /// Return the epoch with the best OOD dev accuracy.
    pub keep_best: bool,
}

impl Default for AdaptOpts {
    fn default() -> Self {
        AdaptOpts {
            max_epochs: 500,
            learning_rate: 1e-3,
            weight_decay: 0.05,
            batch_size: 32,
            seed: 0,
            id_sample_size: None,
            schedule: Schedule::Progress,
            fixed_lambda: None,
            keep_best: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdaptRecord {
    pub epoch: usize,
    pub lambda: f64,
    pub loss: f64,
    pub char_loss: f64,
    pub dom_loss: f64,
    pub id_dev_acc: f64,
    pub ood_dev_acc: f64,
    pub dom_acc: f64,
}

/// The ID subset followed by the whole OOD set, with domain labels (0 for
/// ID, 1 for OOD). The subset is drawn without replacement.
pub fn mixed_training_set(id_set: &Dataset, ood_set: &Dataset, id_sample_size: Option<usize>, seed: u64) -> (Dataset, Vec<u8>) {
    let want = id_sample_size
        .unwrap_or_else(|| (1.09 * ood_set.len() as f64).ceil() as usize)
        .min(id_set.len());
    let mut ids: Vec<usize> = (0..id_set.len()).collect();
    ids.shuffle(&mut RandomSource::stream(seed, 0x1d));
    ids.truncate(want);
    ids.sort_unstable();
    let mut items: Vec<_> = ids.iter().map(|&i| id_set.items[i].clone()).collect();
    items.extend(ood_set.iter().cloned());
    let mut domains = vec![0u8; want];
    domains.extend(std::iter::repeat_n(1u8, ood_set.len()));
    (Dataset::new(items), domains)
}

/// Adversarial training on an ID subset plus the OOD set. `dev` holds the
/// ID and OOD development sets used for the per-epoch history.
pub fn adapt(
    base: &Model,
    id_set: &Dataset,
    ood_set: &Dataset,
    dev: (&Dataset, &Dataset),
    opts: &AdaptOpts,
) -> Result<(DomainModel, Vec<AdaptRecord>)> {
    if ood_set.is_empty() {
        return Err(Error::EmptyInput("out-of-domain set is empty".into()));
    }
    if opts.max_epochs == 0 || opts.batch_size == 0 {
        return Err(Error::InvalidArgument("max_epochs and batch_size must be at least 1".into()));
    }
    let h = base.hparams;
    let (mixed, domains) = mixed_training_set(id_set, ood_set, opts.id_sample_size, opts.seed);
    let (xs, ys) = prepare(&mixed, &h)?;
    let (id_dev_x, id_dev_y) = prepare(dev.0, &h)?;
    let (ood_dev_x, ood_dev_y) = prepare(dev.1, &h)?;
    let mut dom_dev_x = id_dev_x.clone();
    dom_dev_x.extend(ood_dev_x.iter().cloned());
    let mut dom_dev_y = vec![0u8; id_dev_x.len()];
    dom_dev_y.extend(std::iter::repeat_n(1u8, ood_dev_x.len()));

    let mut dm = DomainModel::new(base.clone(), opts.seed ^ 0xd0);
    let cfg = AdamWConfig {
        learning_rate: opts.learning_rate,
        weight_decay: opts.weight_decay,
        ..AdamWConfig::default()
    };
    let mut base_opt = AdamW::new(cfg, dm.base.param_count());
    let mut head_opt = AdamW::new(cfg, dm.head.params.len());
    let mut rng = RandomSource::new(opts.seed);
    let mut history = Vec::with_capacity(opts.max_epochs);
    let mut best: Option<(f64, DomainModel)> = None;

    for epoch in 0..opts.max_epochs {
        let lambda = opts
            .fixed_lambda
            .unwrap_or_else(|| opts.schedule.lambda(epoch, opts.max_epochs));
        let order = shuffled_order(xs.len(), &mut rng);
        let (mut loss, mut chr, mut dom) = (0.0, 0.0, 0.0);
        for chunk in order.chunks(opts.batch_size) {
            let batch: Vec<&FixedSequence> = chunk.iter().map(|&i| &xs[i]).collect();
            let yc: Vec<usize> = chunk.iter().map(|&i| ys[i]).collect();
            let yd: Vec<u8> = chunk.iter().map(|&i| domains[i]).collect();
            let g = dm.joint_gradients(&batch, &yc, &yd, lambda)?;
            if !g.loss.is_finite() || g.base.iter().chain(&g.head).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    epoch,
                    detail: format!("joint loss {}", g.loss),
                });
            }
            base_opt.step(dm.base.params_mut(), &g.base);
            head_opt.step(dm.head.params_mut(), &g.head);
            let w = chunk.len() as f64;
            loss += g.loss * w;
            chr += g.char_loss * w;
            dom += g.dom_loss * w;
        }
        let n = xs.len() as f64;
        let id_dev_acc = evaluate_prepared(&dm.base, &id_dev_x, &id_dev_y)?.1;
        let ood_dev_acc = evaluate_prepared(&dm.base, &ood_dev_x, &ood_dev_y)?.1;
        let dom_acc = dm.domain_accuracy(&dom_dev_x, &dom_dev_y)?;
        history.push(AdaptRecord {
            epoch,
            lambda,
            loss: loss / n,
            char_loss: chr / n,
            dom_loss: dom / n,
            id_dev_acc,
            ood_dev_acc,
            dom_acc,
        });
        if opts.keep_best && best.as_ref().is_none_or(|(acc, _)| ood_dev_acc > *acc) {
            best = Some((ood_dev_acc, dm.clone()));
        }
    }
    Ok((best.map_or(dm, |(_, m)| m), history))
}
