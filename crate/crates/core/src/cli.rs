//! Command-line front end of the `inkline` binary.
//!
//! Every command writes its result as JSON on stdout (or to `--out`), with
//! no timestamps or timings, so reruns with the same inputs and seeds are
//! byte-identical. Human-readable tables go to stderr.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::augment::{augment_epoch, AugmentConfig, RandomSource};
use crate::autocorrect::{build_index, CorrectionIndex, FrequencyDictionary, Kernel, LookupResult, ScoredWord};
use crate::classifier::{
    accuracy, init_model, load_model_file, random_search, save_model_file, train, Hparams, SearchRanges, TrainOpts,
};
use crate::decoder::{ScoreMode, SearchMode};
use crate::domainadapt::{adapt, AdaptOpts, Schedule};
use crate::error::{Error, Result};
use crate::pipeline::{compare_kernels, evaluate, grid_search, reconstruct, render, PipelineConfig};
use crate::seqcore::{
    calibrate, calibration_mean, load_dataset, read_frames_file, save_dataset, serialize_frames, split_dataset,
    CalibrationProfile, Dataset, Split,
};
use crate::synthglyph::{default_word_list, gen_corpus, SubjectProfile};

/// Settings shared by several commands, read from a TOML file. Command-line
/// flags take precedence.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<Hparams>,
    pub train: Option<TrainOpts>,
    pub augment: Option<AugmentConfig>,
    pub search: Option<SearchRanges>,
    pub adapt: Option<AdaptOpts>,
    pub pipeline: Option<PipelineConfig>,
    pub dictionary: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(toml::from_str(&text)?)
    }

    fn maybe_load(path: Option<&PathBuf>) -> Result<RunConfig> {
        path.map_or_else(|| Ok(RunConfig::default()), |p| RunConfig::load(p))
    }
}

/// Small architecture that trains in about a minute on one core.
pub fn desk_hparams() -> Hparams {
    Hparams::new(1, 64, 64).with_resample_points(50)
}

pub fn desk_train_opts() -> TrainOpts {
    TrainOpts {
        learning_rate: 3e-3,
        max_epochs: 30,
        ..TrainOpts::default()
    }
}

#[derive(Parser, Debug)]
#[command(name = "inkline", version, about = "Word reconstruction from stylus orientation recordings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Calibrate a raw dataset per subject and optionally tag a stratified split.
    Ingest(IngestArgs),
    /// Generate synthetic letter and word recordings.
    Synth(SynthArgs),
    /// Train a letter classifier.
    Train(TrainArgs),
    /// Random hyperparameter search.
    Search(SearchArgs),
    /// Adversarial domain adaptation to a new writer.
    Adapt(AdaptArgs),
    /// Reconstruct one word recording.
    Reconstruct(ReconstructArgs),
    /// Reconstruct a labeled word set and report accuracy and edit distance.
    Evaluate(EvaluateArgs),
    /// Evaluate a grid of granularities and beam widths.
    Grid(GridArgs),
    /// Spell-correct ranked candidate words and pick one with a kernel.
    Correct(CorrectArgs),
    /// Show augmented samples of a dataset.
    Augment(AugmentArgs),
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// Dataset manifest (JSON lines).
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory holding one still-hold recording `<subject>.csv` per subject.
    #[arg(long, conflicts_with = "calibration")]
    pub calibration_dir: Option<PathBuf>,
    /// One still-hold recording used for every subject.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Train:dev:test ratio, e.g. `9,1,1`.
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Output manifest name; defaults to the input's.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 3)]
    pub subjects: usize,
    #[arg(long, default_value_t = 80)]
    pub letters_per_class: usize,
    /// Word list, one word per line; defaults to the bundled 30 words.
    #[arg(long)]
    pub words: Option<PathBuf>,
    /// Sensor noise of the in-domain writers, degrees.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Also generate a held-out writer with this writing-plane tilt.
    #[arg(long)]
    pub ood_tilt: Option<f64>,
    #[arg(long, default_value_t = 15)]
    pub ood_letters_per_class: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Manifest with train/dev split tags.
    #[arg(long, conflicts_with_all = ["train", "dev"])]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub dev: Option<PathBuf>,
}

impl DataArgs {
    fn load(&self) -> Result<(Dataset, Dataset)> {
        match (&self.data, &self.train) {
            (Some(p), _) => {
                let ds = load_dataset(p)?.dataset;
                if ds.splits.is_none() {
                    return Err(Error::InvalidArgument(format!("{} has no split tags", p.display())));
                }
                Ok((ds.tagged(Split::Train), ds.tagged(Split::Dev)))
            }
            (None, Some(t)) => {
                let train = load_dataset(t)?.dataset;
                let dev = match &self.dev {
                    Some(d) => load_dataset(d)?.dataset,
                    None => Dataset::default(),
                };
                Ok((train, dev))
            }
            (None, None) => Err(Error::InvalidArgument("pass --data or --train".into())),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub ff: Option<usize>,
    #[arg(long)]
    pub points: Option<usize>,
    /// Use all six channels instead of the three rotation channels.
    #[arg(long)]
    pub all_channels: bool,
}

impl ModelArgs {
    fn resolve(&self, base: Hparams) -> Hparams {
        let mut h = base;
        h.lstm_layers = self.layers.unwrap_or(h.lstm_layers);
        h.lstm_hidden = self.hidden.unwrap_or(h.lstm_hidden);
        h.ff_hidden = self.ff.unwrap_or(h.ff_hidden);
        h.resample_points = self.points.unwrap_or(h.resample_points);
        if self.all_channels {
            h.input_channels = 6;
        }
        h
    }
}

#[derive(Args, Debug, Clone)]
pub struct OptArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl OptArgs {
    fn resolve(&self, base: TrainOpts) -> TrainOpts {
        TrainOpts {
            max_epochs: self.epochs.unwrap_or(base.max_epochs),
            learning_rate: self.lr.unwrap_or(base.learning_rate),
            weight_decay: self.weight_decay.unwrap_or(base.weight_decay),
            batch_size: self.batch_size.unwrap_or(base.batch_size),
            seed: self.seed.unwrap_or(base.seed),
            ..base
        }
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub opt: OptArgs,
    /// Still-hold recording used to cut non-class samples.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long)]
    pub no_augment: bool,
    /// Where to write the model.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch metrics as JSON lines.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    pub budget: usize,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub opt: OptArgs,
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long)]
    pub no_augment: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AdaptArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Pretrained model.
    #[arg(long)]
    pub base: PathBuf,
    /// In-domain manifest with train/dev split tags.
    #[arg(long)]
    pub id: PathBuf,
    /// Out-of-domain manifest with train/dev split tags.
    #[arg(long)]
    pub ood: PathBuf,
    #[arg(long, value_parser = parse_schedule)]
    pub schedule: Option<Schedule>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub id_sample_size: Option<usize>,
    /// Hold lambda fixed instead of following the schedule.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch history as JSON lines.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

fn parse_schedule(s: &str) -> std::result::Result<Schedule, String> {
    match s {
        "progress" => Ok(Schedule::Progress),
        "raw-epoch" => Ok(Schedule::RawEpoch),
        _ => Err(format!("unknown schedule {s:?} (progress or raw-epoch)")),
    }
}

#[derive(Args, Debug, Clone)]
pub struct DecodeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: PathBuf,
    /// Frequency dictionary; defaults to the bundled one.
    #[arg(long)]
    pub dict: Option<PathBuf>,
    #[arg(short = 'G', long = "granularity")]
    pub granularity: Option<usize>,
    #[arg(short = 'K', long = "top-k")]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub max_distance: Option<usize>,
    /// Keep one suffix beam per node ranked by suffix mean.
    #[arg(long)]
    pub suffix_mean_beam: bool,
    /// Score spans by raw logits instead of log-probabilities.
    #[arg(long)]
    pub raw_logits: bool,
}

struct Decoding {
    cfg: PipelineConfig,
    model: crate::classifier::Model,
    index: CorrectionIndex,
}

impl DecodeArgs {
    fn resolve(&self) -> Result<Decoding> {
        let rc = RunConfig::maybe_load(self.config.as_ref())?;
        let mut cfg = rc.pipeline.unwrap_or_default();
        cfg.granularity = self.granularity.unwrap_or(cfg.granularity);
        cfg.top_k = self.top_k.unwrap_or(cfg.top_k);
        cfg.max_distance = self.max_distance.unwrap_or(cfg.max_distance);
        if let Some(k) = &self.kernel {
            cfg.kernel = Kernel::from_name(k, self.beta)?;
        } else if let Some(b) = self.beta {
            cfg.kernel = Kernel::from_name(cfg.kernel.name(), Some(b))?;
        }
        if self.suffix_mean_beam {
            cfg.search_mode = SearchMode::SuffixMean;
        }
        if self.raw_logits {
            cfg.score_mode = ScoreMode::RawLogit;
        }
        cfg.validate()?;
        let dict_path = self.dict.clone().or(rc.dictionary);
        let dict = match dict_path {
            Some(p) => FrequencyDictionary::load(&p)?,
            None => FrequencyDictionary::bundled(),
        };
        Ok(Decoding {
            cfg,
            model: load_model_file(&self.model)?,
            index: build_index(&dict, cfg.max_distance)?,
        })
    }
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    #[command(flatten)]
    pub decode: DecodeArgs,
    /// Frame CSV of the word recording.
    #[arg(long)]
    pub word: PathBuf,
    /// Still-hold recording to calibrate the word with.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Write the span table and trajectories as JSON.
    #[arg(long)]
    pub dump_lattice: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub decode: DecodeArgs,
    /// Calibrated word manifest with `word` labels.
    #[arg(long)]
    pub words: PathBuf,
    /// Report every kernel instead of the configured one.
    #[arg(long)]
    pub all_kernels: bool,
    /// Per-word records as JSON lines.
    #[arg(long)]
    pub records: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    #[command(flatten)]
    pub decode: DecodeArgs,
    #[arg(long)]
    pub words: PathBuf,
    /// Granularities, e.g. `3-9` or `3,4,6`.
    #[arg(long, default_value = "3-9")]
    pub g_values: String,
    #[arg(long, default_value = "5,10,15,20")]
    pub k_values: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CorrectArgs {
    #[arg(long)]
    pub dict: Option<PathBuf>,
    #[arg(long, default_value = "division")]
    pub kernel: String,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, default_value_t = 2)]
    pub max_distance: usize,
    /// Candidates best first, each `word` or `word:confidence`.
    #[arg(required = true)]
    pub candidates: Vec<String>,
}

#[derive(Args, Debug)]
pub struct AugmentArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Number of augmented samples to write.
    #[arg(long, default_value_t = 5)]
    pub preview: usize,
    /// Still-hold recording used to cut non-class samples.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = to_json(value)?;
    match out {
        Some(p) => write_file(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut text = String::new();
    for r in rows {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    write_file(path, &text)
}

fn load_calibration(path: &Path) -> Result<CalibrationProfile> {
    calibration_mean(&read_frames_file(path)?)
}

fn parse_ratio(s: &str) -> Result<(u32, u32, u32)> {
    let parts: Vec<u32> = s
        .split(',')
        .map(|p| p.trim().parse::<u32>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::InvalidArgument(format!("bad split ratio {s:?}")))?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(Error::InvalidArgument(format!("split ratio needs three parts, got {s:?}"))),
    }
}

/// `3-9` or `5,10,20`.
pub fn parse_list(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidArgument(format!("bad list {s:?}"));
    if let Some((a, b)) = s.split_once('-') {
        let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|p| p.trim().parse().map_err(|_| bad())).collect()
}

fn word_labels(manifest: &Path) -> Result<(Dataset, Vec<String>)> {
    let loaded = load_dataset(manifest)?;
    let labels = loaded
        .words
        .into_iter()
        .enumerate()
        .map(|(i, w)| w.ok_or_else(|| Error::InvalidLabel(format!("word item {i} has no `word` label"))))
        .collect::<Result<Vec<_>>>()?;
    Ok((loaded.dataset, labels))
}

fn augmentation<'a>(
    disabled: bool,
    cfg: &'a mut AugmentConfig,
    calibration: Option<&PathBuf>,
    holder: &'a mut Option<CalibrationProfile>,
) -> Result<Option<(&'a AugmentConfig, &'a CalibrationProfile)>> {
    if disabled {
        return Ok(None);
    }
    *holder = Some(match calibration {
        Some(p) => load_calibration(p)?,
        None => {
            if cfg.nonclass_fraction > 0.0 {
                eprintln!("no --calibration recording given; training without non-class samples");
            }
            cfg.nonclass_fraction = 0.0;
            CalibrationProfile::zero()
        }
    });
    Ok(Some((cfg, holder.as_ref().expect("just set"))))
}

#[derive(Serialize)]
struct CountSummary {
    items: usize,
    per_split: BTreeMap<String, usize>,
    per_label: BTreeMap<String, usize>,
    per_subject: BTreeMap<String, usize>,
}

fn count_summary(ds: &Dataset) -> CountSummary {
    let mut per_split = BTreeMap::new();
    if let Some(tags) = &ds.splits {
        for t in tags {
            *per_split.entry(format!("{t:?}").to_lowercase()).or_insert(0) += 1;
        }
    }
    let mut per_label = BTreeMap::new();
    let mut per_subject = BTreeMap::new();
    for s in ds.iter() {
        let l = s.label.map_or("none".to_string(), |c| c.to_string());
        *per_label.entry(l).or_insert(0) += 1;
        *per_subject.entry(s.subject.clone()).or_insert(0) += 1;
    }
    CountSummary {
        items: ds.len(),
        per_split,
        per_label,
        per_subject,
    }
}

fn cmd_ingest(a: &IngestArgs) -> Result<()> {
    let loaded = load_dataset(&a.manifest)?;
    let mut cache: BTreeMap<String, CalibrationProfile> = BTreeMap::new();
    let shared = a.calibration.as_deref().map(load_calibration).transpose()?;
    let mut items = Vec::with_capacity(loaded.dataset.len());
    for s in loaded.dataset.iter() {
        let profile = match (&shared, &a.calibration_dir) {
            (Some(p), _) => p.clone(),
            (None, Some(dir)) => {
                if !cache.contains_key(&s.subject) {
                    let p = load_calibration(&dir.join(format!("{}.csv", s.subject)))?;
                    cache.insert(s.subject.clone(), p);
                }
                cache[&s.subject].clone()
            }
            (None, None) => CalibrationProfile::zero(),
        };
        items.push(calibrate(s, &profile));
    }
    let words: Option<Vec<String>> = loaded.words.iter().cloned().collect();
    let mut ds = Dataset::new(items);
    if let Some(r) = &a.split {
        ds.check_supervised()?;
        let ratio = parse_ratio(r)?;
        // tag items in place so word labels stay aligned
        let tagged: Dataset = ds
            .items
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut s = s.clone();
                s.session = format!("{}#{i}", s.session);
                s
            })
            .collect();
        let (tr, dv, te) = split_dataset(&tagged, ratio, a.seed)?;
        let mut tags = vec![Split::Train; ds.len()];
        for (part, tag) in [(&tr, Split::Train), (&dv, Split::Dev), (&te, Split::Test)] {
            for s in part.iter() {
                let (_, idx) = s.session.rsplit_once('#').expect("tagged session");
                tags[idx.parse::<usize>().expect("index")] = tag;
            }
        }
        ds.splits = Some(tags);
    }
    let name = a.name.clone().unwrap_or_else(|| {
        a.manifest
            .file_stem()
            .map_or("data".into(), |s| s.to_string_lossy().into_owned())
    });
    save_dataset(&a.out, &name, &ds, words.as_deref())?;
    emit(&count_summary(&ds), None)
}

fn synth_profiles(n: usize, noise: Option<f64>) -> Vec<SubjectProfile> {
    let defaults = SubjectProfile::defaults();
    (0..n)
        .map(|i| {
            let mut p = defaults[i % defaults.len()].clone();
            if i >= defaults.len() {
                let k = (i / defaults.len()) as f64;
                p.name = format!("s{}", i + 1);
                p.seed += 1000 * i as u64;
                p.scale = (p.scale.0 * (1.0 + 0.05 * k), p.scale.1 * (1.0 - 0.04 * k));
                p.tilt += 2.0 * k;
            }
            if let Some(s) = noise {
                p.noise_sigma = s;
            }
            p
        })
        .collect()
}

#[derive(Serialize)]
struct SynthSummary {
    letters: usize,
    words: usize,
    subjects: Vec<SubjectProfile>,
    ood: Option<SubjectProfile>,
}

fn cmd_synth(a: &SynthArgs) -> Result<()> {
    if a.subjects == 0 {
        return Err(Error::InvalidArgument("need at least one subject".into()));
    }
    let words = match &a.words {
        Some(p) => fs::read_to_string(p)
            .map_err(|e| Error::io(p, e))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_lowercase)
            .collect(),
        None => default_word_list(),
    };
    let profiles = synth_profiles(a.subjects, a.noise);
    let corpus = gen_corpus(a.letters_per_class, &words, &profiles, a.seed)?;
    save_dataset(&a.out, "letters", &corpus.letters, None)?;
    save_dataset(&a.out, "words", &corpus.words, Some(&corpus.word_labels))?;
    let cal_dir = a.out.join("calibration");
    for (subject, p) in &corpus.calibrations {
        write_file(&cal_dir.join(format!("{subject}.csv")), &serialize_frames(&p.source_frames))?;
    }
    let mut ood = None;
    if let Some(tilt) = a.ood_tilt {
        let mut p = SubjectProfile::out_of_domain(tilt);
        let mean_noise = profiles.iter().map(|p| p.noise_sigma).sum::<f64>() / profiles.len() as f64;
        p.noise_sigma = 2.0 * mean_noise;
        let oc = gen_corpus(a.ood_letters_per_class, &words, std::slice::from_ref(&p), a.seed ^ 0x00d)?;
        save_dataset(&a.out, "ood-letters", &oc.letters, None)?;
        save_dataset(&a.out, "ood-words", &oc.words, Some(&oc.word_labels))?;
        for (subject, c) in &oc.calibrations {
            write_file(&cal_dir.join(format!("{subject}.csv")), &serialize_frames(&c.source_frames))?;
        }
        ood = Some(p);
    }
    let summary = SynthSummary {
        letters: corpus.letters.len(),
        words: corpus.words.len(),
        subjects: profiles,
        ood,
    };
    write_file(&a.out.join("profiles.json"), &to_json(&summary)?)?;
    emit(&summary, None)
}

#[derive(Serialize)]
struct TrainSummary {
    hparams: Hparams,
    parameters: usize,
    epochs_run: usize,
    best_dev_acc: f64,
    final_train_acc: f64,
    dev_acc: f64,
}

fn cmd_train(a: &TrainArgs) -> Result<()> {
    let rc = RunConfig::maybe_load(a.config.as_ref())?;
    let h = a.model.resolve(rc.model.unwrap_or_else(desk_hparams));
    let opts = a.opt.resolve(rc.train.unwrap_or_else(desk_train_opts));
    let (train_set, dev_set) = a.data.load()?;
    train_set.check_supervised()?;
    let mut aug_cfg = rc.augment.unwrap_or_default();
    let mut holder = None;
    let aug = augmentation(a.no_augment, &mut aug_cfg, a.calibration.as_ref(), &mut holder)?;
    let model = init_model(&h, opts.seed)?;
    let (model, history) = train(&model, &train_set, &dev_set, &opts, aug)?;
    save_model_file(&model, &a.out)?;
    if let Some(p) = &a.metrics {
        write_jsonl(p, &history)?;
    }
    let dev_acc = if dev_set.is_empty() {
        f64::NAN
    } else {
        accuracy(&model, &dev_set)?
    };
    let summary = TrainSummary {
        hparams: h,
        parameters: model.param_count(),
        epochs_run: history.len(),
        best_dev_acc: history.iter().map(|r| r.dev_acc).fold(f64::NEG_INFINITY, f64::max),
        final_train_acc: history.last().map_or(f64::NAN, |r| r.train_acc),
        dev_acc,
    };
    emit(&summary, None)
}

fn cmd_search(a: &SearchArgs) -> Result<()> {
    let rc = RunConfig::maybe_load(a.config.as_ref())?;
    let base = rc.model.unwrap_or_else(desk_hparams);
    let opts = a.opt.resolve(rc.train.unwrap_or_else(desk_train_opts));
    let ranges = rc.search.unwrap_or_default();
    let (train_set, dev_set) = a.data.load()?;
    let mut aug_cfg = rc.augment.unwrap_or_default();
    let mut holder = None;
    let aug = augmentation(a.no_augment, &mut aug_cfg, a.calibration.as_ref(), &mut holder)?;
    let (best, board) = random_search(&ranges, &base, a.budget, &train_set, &dev_set, &opts, aug, opts.seed)?;
    #[derive(Serialize)]
    struct Out<'a> {
        best: Hparams,
        leaderboard: &'a [crate::classifier::LeaderboardEntry],
    }
    emit(&Out { best, leaderboard: &board }, a.out.as_deref())
}

#[derive(Serialize)]
struct AdaptSummary {
    epochs_run: usize,
    final_lambda: f64,
    best_ood_dev_acc: f64,
    id_dev_acc: f64,
    ood_dev_acc: f64,
}

fn cmd_adapt(a: &AdaptArgs) -> Result<()> {
    let rc = RunConfig::maybe_load(a.config.as_ref())?;
    let mut opts = rc.adapt.unwrap_or(AdaptOpts {
        max_epochs: 40,
        ..AdaptOpts::default()
    });
    opts.schedule = a.schedule.unwrap_or(opts.schedule);
    opts.max_epochs = a.epochs.unwrap_or(opts.max_epochs);
    opts.seed = a.seed.unwrap_or(opts.seed);
    opts.id_sample_size = a.id_sample_size.or(opts.id_sample_size);
    opts.fixed_lambda = a.lambda.or(opts.fixed_lambda);
    let base = load_model_file(&a.base)?;
    let split = |p: &Path| -> Result<(Dataset, Dataset)> {
        let ds = load_dataset(p)?.dataset;
        if ds.splits.is_none() {
            return Err(Error::InvalidArgument(format!("{} has no split tags", p.display())));
        }
        Ok((ds.tagged(Split::Train), ds.tagged(Split::Dev)))
    };
    let (id_train, id_dev) = split(&a.id)?;
    let (ood_train, ood_dev) = split(&a.ood)?;
    let (dm, history) = adapt(&base, &id_train, &ood_train, (&id_dev, &ood_dev), &opts)?;
    save_model_file(&dm.base, &a.out)?;
    if let Some(p) = &a.history {
        write_jsonl(p, &history)?;
    }
    let summary = AdaptSummary {
        epochs_run: history.len(),
        final_lambda: history.last().map_or(0.0, |r| r.lambda),
        best_ood_dev_acc: history.iter().map(|r| r.ood_dev_acc).fold(f64::NEG_INFINITY, f64::max),
        id_dev_acc: accuracy(&dm.base, &id_dev)?,
        ood_dev_acc: accuracy(&dm.base, &ood_dev)?,
    };
    emit(&summary, None)
}

#[derive(Serialize)]
struct RankedWord {
    word: String,
    mean_score: f64,
    spans: Vec<(usize, usize)>,
    confidence: f64,
    corrected: String,
    distance: usize,
    frequency: u64,
}

#[derive(Serialize)]
struct ReconstructOut {
    word: String,
    kernel: Kernel,
    n_splits: usize,
    part_len: usize,
    trajectories: Vec<RankedWord>,
}

fn cmd_reconstruct(a: &ReconstructArgs) -> Result<()> {
    let d = a.decode.resolve()?;
    let seq = read_frames_file(&a.word)?;
    let profile = a.calibration.as_deref().map(load_calibration).transpose()?;
    let r = reconstruct(&seq, profile.as_ref(), &d.cfg, &d.model, &d.index)?;
    if let Some(p) = &a.dump_lattice {
        write_file(p, &to_json(&r.lattice())?)?;
    }
    let out = ReconstructOut {
        word: r.word.clone(),
        kernel: d.cfg.kernel,
        n_splits: r.segments.n_splits,
        part_len: r.segments.part_len,
        trajectories: r
            .trajectories
            .iter()
            .zip(&r.scored)
            .map(|(t, (s, l))| RankedWord {
                word: t.word(),
                mean_score: t.mean_score,
                spans: t.spans(),
                confidence: s.confidence,
                corrected: l.corrected.clone(),
                distance: l.distance,
                frequency: l.frequency,
            })
            .collect(),
    };
    emit(&out, None)
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let d = a.decode.resolve()?;
    let (words, labels) = word_labels(&a.words)?;
    #[derive(Serialize)]
    struct KernelRow {
        kernel: Kernel,
        overall: crate::pipeline::Summary,
        per_subject: BTreeMap<String, crate::pipeline::Summary>,
    }
    if a.all_kernels {
        let kernels: Vec<Kernel> = Kernel::NAMES
            .iter()
            .map(|n| Kernel::from_name(n, None))
            .collect::<Result<_>>()?;
        let res = compare_kernels(&words, &labels, &d.cfg, &kernels, &d.model, &d.index)?;
        let subjects: Vec<String> = res[0].1.per_subject.keys().cloned().collect();
        let header: Vec<String> = std::iter::once("subject".to_string())
            .chain(res.iter().map(|(k, _)| k.name().to_string()))
            .collect();
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows = subjects.iter().map(|s| Some(s.clone())).chain([None]).map(|s| {
            let name = s.clone().unwrap_or_else(|| "overall".into());
            std::iter::once(name)
                .chain(res.iter().map(|(_, m)| {
                    let sm = s.as_ref().map_or(&m.overall, |s| &m.per_subject[s]);
                    format!("{:.4}", sm.accuracy)
                }))
                .collect()
        });
        eprint!("{}", render(&header_refs, rows));
        if let Some(p) = &a.records {
            let all: Vec<_> = res.iter().flat_map(|(_, m)| m.records.iter()).collect();
            write_jsonl(p, &all)?;
        }
        let out: Vec<KernelRow> = res
            .into_iter()
            .map(|(kernel, m)| KernelRow {
                kernel,
                overall: m.overall,
                per_subject: m.per_subject,
            })
            .collect();
        return emit(&out, a.out.as_deref());
    }
    let m = evaluate(&words, &labels, &d.cfg, &d.model, &d.index)?;
    eprint!("{}", m.table());
    if let Some(p) = &a.records {
        write_jsonl(p, &m.records)?;
    }
    emit(
        &KernelRow {
            kernel: d.cfg.kernel,
            overall: m.overall,
            per_subject: m.per_subject,
        },
        a.out.as_deref(),
    )
}

fn cmd_grid(a: &GridArgs) -> Result<()> {
    let d = a.decode.resolve()?;
    let (words, labels) = word_labels(&a.words)?;
    let gs = parse_list(&a.g_values)?;
    let ks = parse_list(&a.k_values)?;
    let report = grid_search(&gs, &ks, &words, &labels, &d.cfg, &d.model, &d.index)?;
    eprint!("{}", report.table());
    emit(&report, a.out.as_deref())
}

fn cmd_correct(a: &CorrectArgs) -> Result<()> {
    let kernel = Kernel::from_name(&a.kernel, a.beta)?;
    let dict = match &a.dict {
        Some(p) => FrequencyDictionary::load(p)?,
        None => FrequencyDictionary::bundled(),
    };
    let index = build_index(&dict, a.max_distance)?;
    let scored: Vec<(ScoredWord, LookupResult)> = a
        .candidates
        .iter()
        .map(|c| {
            let (w, conf) = match c.rsplit_once(':') {
                Some((w, v)) => (
                    w,
                    v.parse::<f64>()
                        .map_err(|_| Error::InvalidArgument(format!("bad confidence in {c:?}")))?,
                ),
                None => (c.as_str(), 1.0),
            };
            let word = w.to_lowercase();
            let lookup = index.lookup(&word);
            Ok((ScoredWord { word, confidence: conf }, lookup))
        })
        .collect::<Result<_>>()?;
    let chosen = kernel.select(&scored)?;
    #[derive(Serialize)]
    struct Out<'a> {
        kernel: Kernel,
        chosen: String,
        candidates: Vec<(&'a ScoredWord, &'a LookupResult)>,
    }
    emit(
        &Out {
            kernel,
            chosen,
            candidates: scored.iter().map(|(s, l)| (s, l)).collect(),
        },
        None,
    )
}

fn cmd_augment(a: &AugmentArgs) -> Result<()> {
    let rc = RunConfig::maybe_load(a.config.as_ref())?;
    let mut cfg = rc.augment.unwrap_or_default();
    let ds = load_dataset(&a.manifest)?.dataset;
    ds.check_supervised()?;
    let profile = match &a.calibration {
        Some(p) => load_calibration(p)?,
        None => {
            cfg.nonclass_fraction = 0.0;
            CalibrationProfile::zero()
        }
    };
    let epoch = augment_epoch(&ds, &profile, &cfg, &mut RandomSource::new(a.seed))?;
    let n = epoch.len();
    // evenly spaced picks so non-class samples at the tail can show up
    let picks: Vec<usize> = (0..a.preview.min(n)).map(|i| i * n / a.preview.min(n).max(1)).collect();
    let preview: Dataset = picks.iter().map(|&i| epoch.items[i].clone()).collect();
    save_dataset(&a.out, "preview", &preview, None)?;
    #[derive(Serialize)]
    struct Item {
        index: usize,
        label: String,
        source_len: Option<usize>,
        len: usize,
    }
    #[derive(Serialize)]
    struct Out {
        source_items: usize,
        augmented_items: usize,
        preview: Vec<Item>,
    }
    emit(
        &Out {
            source_items: ds.len(),
            augmented_items: n,
            preview: picks
                .iter()
                .map(|&i| Item {
                    index: i,
                    label: epoch.items[i].label.map_or("none".into(), |c| c.to_string()),
                    source_len: ds.items.get(i).map(|s| s.len()),
                    len: epoch.items[i].len(),
                })
                .collect(),
        },
        None,
    )
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Train(a) => cmd_train(a),
        Command::Search(a) => cmd_search(a),
        Command::Adapt(a) => cmd_adapt(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Grid(a) => cmd_grid(a),
        Command::Correct(a) => cmd_correct(a),
        Command::Augment(a) => cmd_augment(a),
    }
}

/// Parses the process arguments and runs the command; returns the exit code.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
