use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, init_model, AdamW, AdamWConfig, Hparams, InputNorm, Model};
use crate::augment::{augment_epoch, AugmentConfig, RandomSource};
use crate::error::{Error, Result};
use crate::seqcore::{resample, CalibrationProfile, Dataset, FixedSequence};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainOpts {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Stop after this many epochs without a dev-accuracy improvement.
    pub patience: Option<usize>,
    /// Return the parameters of the best dev epoch rather than the last.
    pub keep_best: bool,
    /// Refit the input normalization on the training set before training.
    pub fit_input_norm: bool,
}

impl Default for TrainOpts {
    fn default() -> Self {
        TrainOpts {
            learning_rate: 1e-3,
            weight_decay: 0.005,
            max_epochs: 50,
            batch_size: 32,
            seed: 0,
            patience: None,
            keep_best: true,
            fit_input_norm: true,
        }
    }
}

impl TrainOpts {
    pub fn adamw(&self) -> AdamWConfig {
        AdamWConfig {
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            ..AdamWConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !(self.weight_decay >= 0.0) || self.batch_size == 0 {
            return Err(Error::InvalidArgument(format!("invalid training options {self:?}")));
        }
        Ok(())
    }
}

/// Metrics of one training epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub dev_loss: f64,
    pub dev_acc: f64,
}

/// Resamples every item to the model's input shape and extracts its class
/// index.
pub fn prepare(ds: &Dataset, h: &Hparams) -> Result<(Vec<FixedSequence>, Vec<usize>)> {
    let selector = h.selector();
    let mut xs = Vec::with_capacity(ds.len());
    let mut ys = Vec::with_capacity(ds.len());
    for (i, s) in ds.iter().enumerate() {
        let label = s
            .label
            .ok_or_else(|| Error::InvalidLabel(format!("item {i} has no label")))?;
        xs.push(resample(s, h.resample_points, selector)?);
        ys.push(label.index());
    }
    Ok((xs, ys))
}

/// Mean cross-entropy and accuracy without touching gradients.
pub(crate) fn evaluate_prepared(model: &Model, xs: &[FixedSequence], ys: &[usize]) -> Result<(f64, f64)> {
    if xs.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let logits = model.forward(xs)?;
    let loss = super::batch_loss_ce(&logits, ys)?;
    let hits = logits.iter().zip(ys).filter(|(l, &y)| argmax(l) == y).count();
    Ok((loss, hits as f64 / xs.len() as f64))
}

pub fn accuracy(model: &Model, ds: &Dataset) -> Result<f64> {
    let (xs, ys) = prepare(ds, &model.hparams)?;
    Ok(evaluate_prepared(model, &xs, &ys)?.1)
}

pub(crate) fn shuffled_order(n: usize, rng: &mut RandomSource) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order
}

/// Minibatch AdamW training on mean cross-entropy. With `aug`, the training
/// set is re-augmented before every epoch.
pub fn train(
    model: &Model,
    train_set: &Dataset,
    dev_set: &Dataset,
    opts: &TrainOpts,
    aug: Option<(&AugmentConfig, &CalibrationProfile)>,
) -> Result<(Model, Vec<EpochRecord>)> {
    opts.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyInput("training set is empty".into()));
    }
    if let Some((cfg, _)) = aug {
        cfg.validate()?;
    }
    let h = model.hparams;
    let mut model = model.clone();
    let (base_xs, base_ys) = prepare(train_set, &h)?;
    let (dev_xs, dev_ys) = prepare(dev_set, &h)?;
    if opts.fit_input_norm {
        model.norm = InputNorm::fit(&base_xs);
    }

    let mut rng = RandomSource::new(opts.seed);
    let mut optimizer = AdamW::new(opts.adamw(), model.param_count());
    let mut grads = vec![0.0; model.param_count()];
    let mut history = Vec::with_capacity(opts.max_epochs);
    let mut best: Option<(f64, Model)> = None;
    let mut since_best = 0;

    for epoch in 0..opts.max_epochs {
        let augmented;
        let (xs, ys) = match aug {
            Some((cfg, profile)) => {
                augmented = prepare(&augment_epoch(train_set, profile, cfg, &mut rng)?, &h)?;
                (&augmented.0, &augmented.1)
            }
            None => (&base_xs, &base_ys),
        };
        let order = shuffled_order(xs.len(), &mut rng);

        let mut loss_sum = 0.0;
        let mut hits = 0;
        for chunk in order.chunks(opts.batch_size) {
            let batch: Vec<&FixedSequence> = chunk.iter().map(|&i| &xs[i]).collect();
            let labels: Vec<usize> = chunk.iter().map(|&i| ys[i]).collect();
            grads.fill(0.0);
            let (loss, correct) = model.batch_gradient(&batch, &labels, &mut grads)?;
            if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFinite {
                    epoch,
                    detail: format!("batch loss {loss}"),
                });
            }
            optimizer.step(model.params_mut(), &grads);
            loss_sum += loss * chunk.len() as f64;
            hits += correct;
        }
        let train_loss = loss_sum / xs.len() as f64;
        let train_acc = hits as f64 / xs.len() as f64;
        let (dev_loss, dev_acc) = if dev_xs.is_empty() {
            (train_loss, train_acc)
        } else {
            evaluate_prepared(&model, &dev_xs, &dev_ys)?
        };
        history.push(EpochRecord {
            epoch,
            train_loss,
            train_acc,
            dev_loss,
            dev_acc,
        });

        if best.as_ref().is_none_or(|(acc, _)| dev_acc > *acc) {
            best = Some((dev_acc, model.clone()));
            since_best = 0;
        } else {
            since_best += 1;
        }
        if opts.patience.is_some_and(|p| since_best >= p) {
            break;
        }
    }

    let out = match best {
        Some((_, m)) if opts.keep_best => m,
        _ => model,
    };
    Ok((out, history))
}

/// Continues training a pretrained model on new data without augmentation
/// and without refitting the input normalization.
pub fn fine_tune(model: &Model, train_set: &Dataset, dev_set: &Dataset, opts: &TrainOpts) -> Result<(Model, Vec<EpochRecord>)> {
    let opts = TrainOpts {
        fit_input_norm: false,
        ..opts.clone()
    };
    train(model, train_set, dev_set, &opts, None)
}

/// Inclusive integer ranges sampled by [`random_search`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchRanges {
    pub lstm_layers: (usize, usize),
    pub lstm_hidden: (usize, usize),
    pub ff_hidden: (usize, usize),
}

impl Default for SearchRanges {
    fn default() -> Self {
        SearchRanges {
            lstm_layers: (1, 8),
            lstm_hidden: (50, 300),
            ff_hidden: (50, 400),
        }
    }
}

impl SearchRanges {
    /// `budget` independent uniform draws.
    pub fn draw(&self, budget: usize, base: &Hparams, seed: u64) -> Vec<Hparams> {
        let mut rng = RandomSource::new(seed);
        (0..budget)
            .map(|_| Hparams {
                lstm_layers: rng.random_range(self.lstm_layers.0..=self.lstm_layers.1),
                lstm_hidden: rng.random_range(self.lstm_hidden.0..=self.lstm_hidden.1),
                ff_hidden: rng.random_range(self.ff_hidden.0..=self.ff_hidden.1),
                ..*base
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardEntry {
    pub draw: usize,
    pub hparams: Hparams,
    pub dev_acc: f64,
    pub train_acc: f64,
}

/// Random hyperparameter search ranked by best dev accuracy.
pub fn random_search(
    ranges: &SearchRanges,
    base: &Hparams,
    budget: usize,
    train_set: &Dataset,
    dev_set: &Dataset,
    opts: &TrainOpts,
    aug: Option<(&AugmentConfig, &CalibrationProfile)>,
    seed: u64,
) -> Result<(Hparams, Vec<LeaderboardEntry>)> {
    if budget == 0 {
        return Err(Error::InvalidArgument("search budget must be at least 1".into()));
    }
    let mut board = Vec::with_capacity(budget);
    for (draw, h) in ranges.draw(budget, base, seed).into_iter().enumerate() {
        let model = init_model(&h, seed.wrapping_add(draw as u64))?;
        let (_, history) = train(&model, train_set, dev_set, opts, aug)?;
        let best = history
            .iter()
            .max_by(|a, b| a.dev_acc.total_cmp(&b.dev_acc).then(b.epoch.cmp(&a.epoch)));
        board.push(LeaderboardEntry {
            draw,
            hparams: h,
            dev_acc: best.map_or(0.0, |r| r.dev_acc),
            train_acc: best.map_or(0.0, |r| r.train_acc),
        });
    }
    board.sort_by(|a, b| b.dev_acc.total_cmp(&a.dev_acc).then(a.draw.cmp(&b.draw)));
    Ok((board[0].hparams, board))
}
