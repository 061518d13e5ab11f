//! Frame and sequence data model, calibration, resampling and the on-disk
//! dataset format.
//!
//! A recording is a list of [`Frame`]s in the frame-CSV layout
//! `td,yaw,pitch,roll,ax,ay,az`. Datasets are a JSON-lines manifest that
//! points at one frame-CSV per sequence.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact header of the frame-CSV format.
pub const FRAME_HEADER: &str = "td,yaw,pitch,roll,ax,ay,az";

/// Number of classifier classes: 26 letters plus the non-class.
pub const NUM_CLASSES: usize = 27;

/// Default number of points a sequence is resampled to.
pub const N_RESAMPLE: usize = 100;

/// A character class: `A..=Z` or the non-class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Class(u8);

impl Class {
    pub const NONCLASS: Class = Class(26);

    pub fn from_index(index: usize) -> Result<Class> {
        if index < NUM_CLASSES {
            Ok(Class(index as u8))
        } else {
            Err(Error::InvalidLabel(format!("class index {index} out of range")))
        }
    }

    pub fn from_letter(ch: char) -> Result<Class> {
        let up = ch.to_ascii_uppercase();
        if up.is_ascii_uppercase() {
            Ok(Class(up as u8 - b'A'))
        } else {
            Err(Error::InvalidLabel(format!("{ch:?} is not a letter")))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_letter(self) -> bool {
        self.0 < 26
    }

    /// Uppercase letter, or `None` for the non-class.
    pub fn letter(self) -> Option<char> {
        self.is_letter().then(|| (b'A' + self.0) as char)
    }

    pub fn letters() -> impl Iterator<Item = Class> {
        (0..26u8).map(Class)
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.letter() {
            Some(c) => write!(f, "{c}"),
            None => f.write_str("NONCLASS"),
        }
    }
}

impl FromStr for Class {
    type Err = Error;

    fn from_str(s: &str) -> Result<Class> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("NONCLASS") {
            return Ok(Class::NONCLASS);
        }
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Class::from_letter(c),
            _ => Err(Error::InvalidLabel(s.to_string())),
        }
    }
}

impl TryFrom<String> for Class {
    type Error = Error;

    fn try_from(s: String) -> Result<Class> {
        s.parse()
    }
}

impl From<Class> for String {
    fn from(c: Class) -> String {
        c.to_string()
    }
}

/// One sensor sample.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Frame {
    /// Milliseconds since the previous frame.
    pub td: u32,
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

/// The six real-valued sensor channels of a [`Frame`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Yaw,
    Pitch,
    Roll,
    Ax,
    Ay,
    Az,
}

impl Channel {
    pub const ALL: [Channel; 6] = [
        Channel::Yaw,
        Channel::Pitch,
        Channel::Roll,
        Channel::Ax,
        Channel::Ay,
        Channel::Az,
    ];
    pub const ROTATION: [Channel; 3] = [Channel::Yaw, Channel::Pitch, Channel::Roll];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl Frame {
    pub fn channels(&self) -> [f64; 6] {
        [self.yaw, self.pitch, self.roll, self.ax, self.ay, self.az]
    }

    pub fn set_channels(&mut self, v: [f64; 6]) {
        [self.yaw, self.pitch, self.roll, self.ax, self.ay, self.az] = v;
    }

    pub fn get(&self, ch: Channel) -> f64 {
        self.channels()[ch.index()]
    }

    pub fn is_finite(&self) -> bool {
        self.channels().iter().all(|v| v.is_finite())
    }
}

/// Which channels feed the classifier.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelSelector {
    /// yaw, pitch, roll
    #[default]
    Rotation,
    /// all six sensor channels
    All,
}

impl ChannelSelector {
    pub fn channels(self) -> &'static [Channel] {
        match self {
            ChannelSelector::Rotation => &Channel::ROTATION,
            ChannelSelector::All => &Channel::ALL,
        }
    }

    pub fn len(self) -> usize {
        self.channels().len()
    }

    pub fn from_count(count: usize) -> Result<ChannelSelector> {
        match count {
            3 => Ok(ChannelSelector::Rotation),
            6 => Ok(ChannelSelector::All),
            n => Err(Error::InvalidArgument(format!(
                "unsupported input channel count {n} (expected 3 or 6)"
            ))),
        }
    }
}

/// A recording of one writing event.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Sequence {
    pub frames: Vec<Frame>,
    pub label: Option<Class>,
    pub subject: String,
    pub session: String,
}

impl Sequence {
    pub fn new(frames: Vec<Frame>) -> Sequence {
        Sequence {
            frames,
            ..Default::default()
        }
    }

    pub fn with_label(mut self, label: Class) -> Sequence {
        self.label = Some(label);
        self
    }

    pub fn with_subject(mut self, subject: impl Into<String>) -> Sequence {
        self.subject = subject.into();
        self
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Copy of this sequence restricted to `frames[range]`, keeping metadata.
    pub fn slice(&self, start: usize, end: usize) -> Sequence {
        Sequence {
            frames: self.frames[start..end].to_vec(),
            label: self.label,
            subject: self.subject.clone(),
            session: self.session.clone(),
        }
    }

    /// Cumulative timestamps in milliseconds. Frame 0 sits at 0; repeated
    /// timestamps are pushed forward by 1 ms each so the axis is strictly
    /// increasing.
    pub fn timestamps(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.frames.len());
        let mut t = 0u64;
        for (i, f) in self.frames.iter().enumerate() {
            if i > 0 {
                t += u64::from(f.td.max(1));
            }
            out.push(t as f64);
        }
        out
    }
}

/// Parses frame-CSV text into an unlabeled [`Sequence`].
pub fn parse_frames<R: Read>(reader: R) -> Result<Sequence> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header.is_empty() {
        return Err(Error::EmptyInput("frame CSV has no header".into()));
    }
    if header != FRAME_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{FRAME_HEADER}`, found `{header}`"),
        });
    }
    let mut frames = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 7 {
            return Err(Error::Parse {
                line,
                message: format!("expected 7 fields, found {}", record.len()),
            });
        }
        let td = record[0].parse::<u32>().map_err(|e| Error::Parse {
            line,
            message: format!("td `{}`: {e}", &record[0]),
        })?;
        let mut vals = [0.0; 6];
        for (k, v) in vals.iter_mut().enumerate() {
            let field = &record[k + 1];
            *v = field
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("{} `{field}` is not a finite number", Channel::ALL[k].name()),
                })?;
        }
        let mut frame = Frame {
            td,
            ..Default::default()
        };
        frame.set_channels(vals);
        frames.push(frame);
    }
    if frames.is_empty() {
        return Err(Error::EmptyInput("frame CSV has no data rows".into()));
    }
    Ok(Sequence::new(frames))
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Yaw => "yaw",
            Channel::Pitch => "pitch",
            Channel::Roll => "roll",
            Channel::Ax => "ax",
            Channel::Ay => "ay",
            Channel::Az => "az",
        }
    }
}

/// Writes frames in the frame-CSV format. Reals use the shortest
/// representation that parses back to the same value.
pub fn write_frames<W: Write>(seq: &Sequence, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{FRAME_HEADER}")?;
    for f in &seq.frames {
        writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{:?},{:?}",
            f.td, f.yaw, f.pitch, f.roll, f.ax, f.ay, f.az
        )?;
    }
    Ok(())
}

pub fn serialize_frames(seq: &Sequence) -> String {
    let mut buf = Vec::new();
    write_frames(seq, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("frame CSV is ASCII")
}

pub fn read_frames_file(path: &Path) -> Result<Sequence> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_frames(BufReader::new(file))
}

/// Channel means of a still-hold recording, plus the recording itself.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationProfile {
    pub mean: [f64; 6],
    pub source_frames: Sequence,
}

impl CalibrationProfile {
    pub fn zero() -> CalibrationProfile {
        CalibrationProfile {
            mean: [0.0; 6],
            source_frames: Sequence::default(),
        }
    }

    /// Total recorded duration of the still-hold in milliseconds.
    pub fn duration_ms(&self) -> u64 {
        self.source_frames
            .frames
            .iter()
            .skip(1)
            .map(|f| u64::from(f.td))
            .sum()
    }
}

pub fn calibration_mean(cali: &Sequence) -> Result<CalibrationProfile> {
    if cali.is_empty() {
        return Err(Error::EmptyInput("calibration recording has no frames".into()));
    }
    let mut sum = [0.0; 6];
    for f in &cali.frames {
        for (s, v) in sum.iter_mut().zip(f.channels()) {
            *s += v;
        }
    }
    let n = cali.len() as f64;
    Ok(CalibrationProfile {
        mean: sum.map(|s| s / n),
        source_frames: cali.clone(),
    })
}

/// Applies `x_i - mean - x_0` to every non-td channel, where `x_0` is the raw
/// first frame of `seq`.
pub fn calibrate(seq: &Sequence, profile: &CalibrationProfile) -> Sequence {
    let Some(first) = seq.frames.first() else {
        return seq.clone();
    };
    let x0 = first.channels();
    let mut out = seq.clone();
    for f in &mut out.frames {
        let mut v = f.channels();
        for k in 0..6 {
            v[k] = v[k] - profile.mean[k] - x0[k];
        }
        f.set_channels(v);
    }
    out
}

/// Subtracts frame 0 from every frame.
pub fn delta_normalize(seq: &Sequence) -> Sequence {
    calibrate(seq, &CalibrationProfile::zero())
}

/// A sequence resampled to a fixed number of points, stored channel-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedSequence {
    n_channels: usize,
    n_points: usize,
    values: Vec<f64>,
    pub label: Option<Class>,
}

impl FixedSequence {
    pub fn from_channels(rows: Vec<Vec<f64>>, label: Option<Class>) -> Result<FixedSequence> {
        let n_channels = rows.len();
        let n_points = rows.first().map_or(0, Vec::len);
        if n_channels == 0 || n_points == 0 {
            return Err(Error::Shape("fixed sequence needs at least one channel and point".into()));
        }
        if rows.iter().any(|r| r.len() != n_points) {
            return Err(Error::Shape("ragged channel rows".into()));
        }
        Ok(FixedSequence {
            n_channels,
            n_points,
            values: rows.concat(),
            label,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        &self.values[c * self.n_points..(c + 1) * self.n_points]
    }

    pub fn value(&self, c: usize, t: usize) -> f64 {
        self.values[c * self.n_points + t]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Rebuilds a frame sequence with uniform `td` spacing. Channels beyond
    /// the stored ones are zero.
    pub fn to_sequence(&self, td: u32, selector: ChannelSelector) -> Sequence {
        let chans = selector.channels();
        let frames = (0..self.n_points)
            .map(|t| {
                let mut v = [0.0; 6];
                for (c, ch) in chans.iter().enumerate().take(self.n_channels) {
                    v[ch.index()] = self.value(c, t);
                }
                let mut f = Frame {
                    td: if t == 0 { 0 } else { td },
                    ..Default::default()
                };
                f.set_channels(v);
                f
            })
            .collect();
        Sequence {
            frames,
            label: self.label,
            ..Default::default()
        }
    }
}

/// Piecewise-linear resampling of the selected channels over cumulative time,
/// sampled at `n_points` uniformly spaced instants from the first to the last
/// timestamp inclusive.
pub fn resample(seq: &Sequence, n_points: usize, selector: ChannelSelector) -> Result<FixedSequence> {
    if seq.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: seq.len(),
        });
    }
    if n_points < 2 {
        return Err(Error::InvalidArgument("resample needs at least 2 points".into()));
    }
    let times = seq.timestamps();
    let t0 = times[0];
    let span = times[times.len() - 1] - t0;
    let last = seq.len() - 1;
    let denom = (n_points - 1) as f64;

    // (left knot, fraction) for every sample instant; shared by all channels
    let mut stencil = Vec::with_capacity(n_points);
    let mut j = 0;
    for k in 0..n_points {
        if k == n_points - 1 {
            stencil.push((last, 0.0));
            continue;
        }
        let t = t0 + span * k as f64 / denom;
        while j + 1 < last && times[j + 1] <= t {
            j += 1;
        }
        let frac = (t - times[j]) / (times[j + 1] - times[j]);
        stencil.push((j, frac));
    }

    let chans = selector.channels();
    let mut values = Vec::with_capacity(chans.len() * n_points);
    for ch in chans {
        let col: Vec<f64> = seq.frames.iter().map(|f| f.get(*ch)).collect();
        values.extend(stencil.iter().map(|&(j, frac)| {
            if frac == 0.0 {
                col[j]
            } else {
                col[j] + (col[j + 1] - col[j]) * frac
            }
        }));
    }
    Ok(FixedSequence {
        n_channels: chans.len(),
        n_points,
        values,
        label: seq.label,
    })
}

/// Which partition an item belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

/// A collection of sequences.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub items: Vec<Sequence>,
    pub splits: Option<Vec<Split>>,
}

impl Dataset {
    pub fn new(items: Vec<Sequence>) -> Dataset {
        Dataset {
            items,
            splits: None,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Sequence> {
        self.items.iter()
    }

    /// Items carrying the given split tag.
    pub fn tagged(&self, split: Split) -> Dataset {
        let items = match &self.splits {
            Some(tags) => self
                .items
                .iter()
                .zip(tags)
                .filter(|(_, t)| **t == split)
                .map(|(s, _)| s.clone())
                .collect(),
            None => Vec::new(),
        };
        Dataset::new(items)
    }

    /// Errors unless every item has a label and a subject.
    pub fn check_supervised(&self) -> Result<()> {
        for (i, s) in self.items.iter().enumerate() {
            if s.label.is_none() {
                return Err(Error::InvalidLabel(format!("item {i} has no label")));
            }
            if s.subject.is_empty() {
                return Err(Error::InvalidArgument(format!("item {i} has no subject")));
            }
        }
        Ok(())
    }

    pub fn extend(&mut self, other: Dataset) {
        self.items.extend(other.items);
        self.splits = None;
    }
}

impl FromIterator<Sequence> for Dataset {
    fn from_iter<I: IntoIterator<Item = Sequence>>(iter: I) -> Dataset {
        Dataset::new(iter.into_iter().collect())
    }
}

/// Deterministic, label-stratified partition into train/dev/test with sizes
/// proportional to `ratio`.
pub fn split_dataset(ds: &Dataset, ratio: (u32, u32, u32), seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    let parts = [ratio.0 as f64, ratio.1 as f64, ratio.2 as f64];
    let total: f64 = parts.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidArgument("split ratio sums to zero".into()));
    }
    let m = ds.len();

    // largest-remainder target sizes
    let quotas: Vec<f64> = parts.iter().map(|p| m as f64 * p / total).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut missing = m - sizes.iter().sum::<usize>();
    for &k in order.iter().cycle() {
        if missing == 0 {
            break;
        }
        if parts[k] > 0.0 {
            sizes[k] += 1;
            missing -= 1;
        }
    }

    // group by label, shuffle within each group, then lay groups end to end
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups: BTreeMap<Option<Class>, Vec<usize>> = BTreeMap::new();
    for (i, s) in ds.items.iter().enumerate() {
        groups.entry(s.label).or_default().push(i);
    }
    let mut ordered = Vec::with_capacity(m);
    for (_, mut idx) in groups {
        idx.shuffle(&mut rng);
        ordered.extend(idx);
    }

    // spread each partition evenly along the grouped order so every label is
    // represented proportionally
    let mut assigned = [0usize; 3];
    let mut out: [Vec<Sequence>; 3] = Default::default();
    for (pos, &i) in ordered.iter().enumerate() {
        let progress = (pos + 1) as f64 / m as f64;
        let k = (0..3)
            .filter(|&k| assigned[k] < sizes[k])
            .max_by(|&a, &b| {
                let da = sizes[a] as f64 * progress - assigned[a] as f64;
                let db = sizes[b] as f64 * progress - assigned[b] as f64;
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("sizes sum to the item count");
        assigned[k] += 1;
        out[k].push(ds.items[i].clone());
    }
    let [train, dev, test] = out;
    Ok((Dataset::new(train), Dataset::new(dev), Dataset::new(test)))
}

/// One line of the JSON-lines dataset manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Class>,
    #[serde(default)]
    pub subject: String,
    #[serde(default)]
    pub session: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    /// Target word for continuous word recordings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub word: Option<String>,
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut entries = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i as u64 + 1,
            message: e.to_string(),
        })?;
        entries.push(entry);
    }
    Ok(entries)
}

/// A manifest-backed dataset: sequences plus the per-item word labels, if any.
#[derive(Clone, Debug, Default)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    pub words: Vec<Option<String>>,
}

/// Loads every sequence named by a manifest. Relative paths resolve against
/// the manifest's directory.
pub fn load_dataset(manifest: &Path) -> Result<LoadedDataset> {
    let base = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
    let entries = read_manifest(manifest)?;
    let mut items = Vec::with_capacity(entries.len());
    let mut words = Vec::with_capacity(entries.len());
    let mut splits = Vec::with_capacity(entries.len());
    for e in &entries {
        let path = if e.path.is_absolute() {
            e.path.clone()
        } else {
            base.join(&e.path)
        };
        let mut seq = read_frames_file(&path)?;
        seq.label = e.label;
        seq.subject = e.subject.clone();
        seq.session = e.session.clone();
        items.push(seq);
        words.push(e.word.clone());
        splits.push(e.split);
    }
    let splits = if splits.iter().all(Option::is_some) && !splits.is_empty() {
        Some(splits.into_iter().flatten().collect())
    } else {
        None
    };
    Ok(LoadedDataset {
        dataset: Dataset { items, splits },
        words,
    })
}

/// Writes one frame-CSV per item under `dir/<prefix>/` and a manifest at
/// `dir/<prefix>.jsonl`. Returns the manifest path.
pub fn save_dataset(dir: &Path, prefix: &str, ds: &Dataset, words: Option<&[String]>) -> Result<PathBuf> {
    let seq_dir = dir.join(prefix);
    fs::create_dir_all(&seq_dir).map_err(|e| Error::io(&seq_dir, e))?;
    let manifest_path = dir.join(format!("{prefix}.jsonl"));
    let mut manifest = String::new();
    for (i, seq) in ds.items.iter().enumerate() {
        let rel = PathBuf::from(prefix).join(format!("{i:05}.csv"));
        let full = dir.join(&rel);
        fs::write(&full, serialize_frames(seq)).map_err(|e| Error::io(&full, e))?;
        let entry = ManifestEntry {
            path: rel,
            label: seq.label,
            subject: seq.subject.clone(),
            session: seq.session.clone(),
            split: ds.splits.as_ref().map(|s| s[i]),
            word: words.map(|w| w[i].clone()),
        };
        manifest.push_str(&serde_json::to_string(&entry)?);
        manifest.push('\n');
    }
    fs::write(&manifest_path, manifest).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(manifest_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(td: u32, yaw: f64) -> Frame {
        Frame {
            td,
            yaw,
            ..Default::default()
        }
    }

    const TABLE_ROWS: &str = "td,yaw,pitch,roll,ax,ay,az\n\
        7,90.10,-10.34,-20.02,206.9,-374.1,1052.9\n\
        25,90.27,-9.86,-20.29,193.0,-401.7,1046.2\n";

    #[test]
    fn parses_sample_rows() {
        let seq = parse_frames(TABLE_ROWS.as_bytes()).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.frames[0].td, 7);
        assert_eq!(seq.frames[0].yaw, 90.10);
        assert_eq!(seq.frames[1].az, 1046.2);
        assert!(seq.label.is_none());
    }

    #[test]
    fn header_only_is_empty_input() {
        let err = parse_frames("td,yaw,pitch,roll,ax,ay,az\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::EmptyInput(_)), "{err}");
        let err = parse_frames("".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::EmptyInput(_)), "{err}");
    }

    #[test]
    fn bad_number_names_line() {
        let text = "td,yaw,pitch,roll,ax,ay,az\n7,abc,1,1,1,1,1\n";
        match parse_frames(text.as_bytes()).unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("yaw"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn wrong_header_rejected() {
        let err = parse_frames("t,yaw\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn calibration_mean_of_two() {
        let cali = Sequence::new(vec![frame(10, 10.0), frame(10, 20.0)]);
        let p = calibration_mean(&cali).unwrap();
        assert_eq!(p.mean[0], 15.0);
        assert!(calibration_mean(&Sequence::default()).is_err());
    }

    #[test]
    fn calibrate_constant_sequence() {
        let c = 3.5;
        let mut f = Frame::default();
        f.set_channels([c; 6]);
        let seq = Sequence::new(vec![f; 5]);
        let profile = CalibrationProfile {
            mean: [1.25; 6],
            source_frames: Sequence::default(),
        };
        for f in calibrate(&seq, &profile).frames {
            assert_eq!(f.channels(), [-1.25; 6]);
        }
    }

    #[test]
    fn calibrate_table_rows() {
        let seq = parse_frames(TABLE_ROWS.as_bytes()).unwrap();
        let mut profile = CalibrationProfile::zero();
        profile.mean[0] = 90.0;
        let out = calibrate(&seq, &profile);
        assert!((out.frames[0].yaw - -90.0).abs() < 1e-12);
        assert!((out.frames[1].yaw - -89.83).abs() < 1e-9);
        assert_eq!(out.frames[1].td, 25);
    }

    #[test]
    fn delta_normalize_zeroes_first_frame() {
        let seq = parse_frames(TABLE_ROWS.as_bytes()).unwrap();
        let out = delta_normalize(&seq);
        assert_eq!(out.frames[0].channels(), [0.0; 6]);
    }

    #[test]
    fn resample_ramp() {
        let seq = Sequence::new(vec![frame(0, 0.0), frame(100, 10.0)]);
        let fixed = resample(&seq, 5, ChannelSelector::Rotation).unwrap();
        let yaw = fixed.channel(0);
        for (got, want) in yaw.iter().zip([0.0, 2.5, 5.0, 7.5, 10.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn resample_needs_two_frames() {
        let seq = Sequence::new(vec![frame(0, 1.0)]);
        assert!(matches!(
            resample(&seq, 10, ChannelSelector::Rotation),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn repeated_timestamps_are_separated() {
        let seq = Sequence::new(vec![frame(5, 0.0), frame(0, 1.0), frame(0, 2.0), frame(3, 3.0)]);
        assert_eq!(seq.timestamps(), vec![0.0, 1.0, 2.0, 5.0]);
    }

    #[test]
    fn split_sizes_follow_ratio() {
        let items = (0..11).map(|_| Sequence::new(vec![frame(1, 0.0)])).collect();
        let (a, b, c) = split_dataset(&Dataset::new(items), (9, 1, 1), 7).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (9, 1, 1));
    }

    #[test]
    fn split_all_train() {
        let items = (0..5).map(|i| Sequence::new(vec![frame(1, i as f64)])).collect();
        let (a, b, c) = split_dataset(&Dataset::new(items), (1, 0, 0), 1).unwrap();
        assert_eq!((a.len(), b.len(), c.len()), (5, 0, 0));
    }

    #[test]
    fn split_is_stratified() {
        let mut items = Vec::new();
        for letter in Class::letters().take(4) {
            for i in 0..22 {
                items.push(Sequence::new(vec![frame(1, i as f64)]).with_label(letter));
            }
        }
        let (train, dev, test) = split_dataset(&Dataset::new(items), (9, 1, 1), 3).unwrap();
        assert_eq!((train.len(), dev.len(), test.len()), (72, 8, 8));
        for letter in Class::letters().take(4) {
            let n = dev.iter().filter(|s| s.label == Some(letter)).count();
            assert_eq!(n, 2, "letter {letter}");
        }
    }

    #[test]
    fn class_text_round_trip() {
        for i in 0..NUM_CLASSES {
            let c = Class::from_index(i).unwrap();
            assert_eq!(c.to_string().parse::<Class>().unwrap(), c);
        }
        assert!("AB".parse::<Class>().is_err());
        assert!(Class::from_index(27).is_err());
    }
}
