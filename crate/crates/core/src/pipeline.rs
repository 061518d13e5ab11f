//! Whole-word reconstruction and its evaluation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autocorrect::{score_trajectories, CorrectionIndex, Kernel, LookupResult, ScoredWord};
use crate::classifier::Model;
use crate::decoder::{predict_segments, segment, trajectory_search, Lattice, PredictionTable, ScoreMode, SearchMode, SegmentMap, Trajectory};
use crate::error::{Error, Result};
use crate::seqcore::{calibrate, CalibrationProfile, Dataset, Sequence};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Splits per expected letter.
    pub granularity: usize,
    /// Trajectories kept.
    pub top_k: usize,
    pub kernel: Kernel,
    pub score_mode: ScoreMode,
    pub search_mode: SearchMode,
    /// Largest edit distance the corrector accepts.
    pub max_distance: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            granularity: 4,
            top_k: 20,
            kernel: Kernel::default(),
            score_mode: ScoreMode::LogProb,
            search_mode: SearchMode::Exact,
            max_distance: 2,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.granularity == 0 || self.top_k == 0 {
            return Err(Error::InvalidArgument("granularity and K must be at least 1".into()));
        }
        Ok(())
    }
}

/// A reconstructed word with everything that led to it.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub word: String,
    pub segments: SegmentMap,
    pub table: PredictionTable,
    pub trajectories: Vec<Trajectory>,
    pub scored: Vec<(ScoredWord, LookupResult)>,
}

impl Reconstruction {
    pub fn lattice(&self) -> Lattice {
        Lattice::new(&self.segments, &self.table, &self.trajectories)
    }
}

fn decode(word: &Sequence, cfg: &PipelineConfig, model: &Model, k: usize) -> Result<(SegmentMap, PredictionTable, Vec<Trajectory>)> {
    let sm = segment(word, cfg.granularity)?;
    let table = predict_segments(model, word, &sm, cfg.score_mode)?;
    let trajectories = trajectory_search(&table, k, cfg.search_mode)?;
    Ok((sm, table, trajectories))
}

/// Calibrates (when a profile is given), segments, classifies, searches and
/// corrects one word recording.
pub fn reconstruct(
    word: &Sequence,
    profile: Option<&CalibrationProfile>,
    cfg: &PipelineConfig,
    model: &Model,
    index: &CorrectionIndex,
) -> Result<Reconstruction> {
    cfg.validate()?;
    let calibrated;
    let word = match profile {
        Some(p) => {
            calibrated = calibrate(word, p);
            &calibrated
        }
        None => word,
    };
    let (segments, table, trajectories) = decode(word, cfg, model, cfg.top_k)?;
    let scored = score_trajectories(&trajectories, index);
    let chosen = cfg.kernel.select(&scored)?;
    Ok(Reconstruction {
        word: chosen,
        segments,
        table,
        trajectories,
        scored,
    })
}

/// Unit-cost insert/delete/substitute distance.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordRecord {
    pub index: usize,
    pub subject: String,
    pub label: String,
    pub predicted: String,
    /// Raw word of the best trajectory.
    pub top_trajectory: String,
    pub edit_distance: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub accuracy: f64,
    pub mean_edit_distance: f64,
}

impl Summary {
    fn of<'a>(records: impl Iterator<Item = &'a WordRecord>) -> Summary {
        let (mut n, mut hits, mut dist) = (0, 0, 0);
        for r in records {
            n += 1;
            hits += usize::from(r.edit_distance == 0);
            dist += r.edit_distance;
        }
        let denom = n.max(1) as f64;
        Summary {
            count: n,
            accuracy: hits as f64 / denom,
            mean_edit_distance: dist as f64 / denom,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub overall: Summary,
    pub per_subject: BTreeMap<String, Summary>,
    pub records: Vec<WordRecord>,
}

impl Metrics {
    pub fn from_records(records: Vec<WordRecord>) -> Metrics {
        let mut subjects: BTreeMap<String, Vec<&WordRecord>> = BTreeMap::new();
        for r in &records {
            subjects.entry(r.subject.clone()).or_default().push(r);
        }
        let per_subject = subjects
            .into_iter()
            .map(|(s, rs)| (s, Summary::of(rs.into_iter())))
            .collect();
        Metrics {
            overall: Summary::of(records.iter()),
            per_subject,
            records,
        }
    }

    pub fn accuracy(&self) -> f64 {
        self.overall.accuracy
    }

    pub fn mean_edit_distance(&self) -> f64 {
        self.overall.mean_edit_distance
    }

    /// Aligned text table with one row per subject and an overall row.
    pub fn table(&self) -> String {
        let mut rows: Vec<(String, &Summary)> = self.per_subject.iter().map(|(s, m)| (s.clone(), m)).collect();
        rows.push(("overall".into(), &self.overall));
        render(&["subject", "words", "accuracy", "MED"], rows.iter().map(|(s, m)| {
            vec![s.clone(), m.count.to_string(), format!("{:.4}", m.accuracy), format!("{:.4}", m.mean_edit_distance)]
        }))
    }
}

/// Left-aligned first column, right-aligned rest.
pub fn render(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
    cells.extend(rows);
    let widths: Vec<usize> = (0..header.len())
        .map(|c| cells.iter().map(|r| r.get(c).map_or(0, String::len)).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, row) in cells.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                out.push_str("  ");
            }
            if c == 0 {
                let _ = write!(out, "{cell:<w$}", w = widths[c]);
            } else {
                let _ = write!(out, "{cell:>w$}", w = widths[c]);
            }
        }
        out.truncate(out.trim_end().len());
        out.push('\n');
        if i == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            out.push('\n');
        }
    }
    out
}

fn check_labels(words: &Dataset, labels: &[String]) -> Result<()> {
    if words.len() != labels.len() {
        return Err(Error::Shape(format!("{} words but {} labels", words.len(), labels.len())));
    }
    if words.is_empty() {
        return Err(Error::EmptyInput("no words to evaluate".into()));
    }
    Ok(())
}

fn record(index: usize, seq: &Sequence, label: &str, predicted: String, trajectories: &[Trajectory]) -> WordRecord {
    let label = label.to_lowercase();
    let predicted = predicted.to_lowercase();
    WordRecord {
        index,
        subject: seq.subject.clone(),
        edit_distance: levenshtein(&label, &predicted),
        label,
        predicted,
        top_trajectory: trajectories.first().map(Trajectory::word).unwrap_or_default(),
    }
}

/// Reconstructs every (already calibrated) word and compares against its
/// label.
pub fn evaluate(words: &Dataset, labels: &[String], cfg: &PipelineConfig, model: &Model, index: &CorrectionIndex) -> Result<Metrics> {
    cfg.validate()?;
    check_labels(words, labels)?;
    let records = words
        .items
        .par_iter()
        .zip(labels.par_iter())
        .enumerate()
        .map(|(i, (seq, label))| {
            let r = reconstruct(seq, None, cfg, model, index)?;
            Ok(record(i, seq, label, r.word, &r.trajectories))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Metrics::from_records(records))
}

/// Evaluates several kernels over one decoding pass.
pub fn compare_kernels(
    words: &Dataset,
    labels: &[String],
    cfg: &PipelineConfig,
    kernels: &[Kernel],
    model: &Model,
    index: &CorrectionIndex,
) -> Result<Vec<(Kernel, Metrics)>> {
    cfg.validate()?;
    check_labels(words, labels)?;
    let decoded = words
        .items
        .par_iter()
        .map(|seq| {
            let (_, _, t) = decode(seq, cfg, model, cfg.top_k)?;
            let scored = score_trajectories(&t, index);
            Ok((t, scored))
        })
        .collect::<Result<Vec<_>>>()?;
    kernels
        .iter()
        .map(|kernel| {
            let records = decoded
                .iter()
                .enumerate()
                .map(|(i, (t, scored))| Ok(record(i, &words.items[i], &labels[i], kernel.select(scored)?, t)))
                .collect::<Result<Vec<_>>>()?;
            Ok((*kernel, Metrics::from_records(records)))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub granularity: usize,
    pub top_k: usize,
    pub accuracy: f64,
    pub mean_edit_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub cells: Vec<GridCell>,
    pub best: GridCell,
}

impl GridReport {
    /// Accuracy table, granularities down and K across.
    pub fn table(&self) -> String {
        let mut ks: Vec<usize> = self.cells.iter().map(|c| c.top_k).collect();
        ks.sort_unstable();
        ks.dedup();
        let mut gs: Vec<usize> = self.cells.iter().map(|c| c.granularity).collect();
        gs.sort_unstable();
        gs.dedup();
        let header: Vec<String> = std::iter::once("G".to_string()).chain(ks.iter().map(|k| format!("K={k}"))).collect();
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows = gs.iter().map(|&g| {
            std::iter::once(g.to_string())
                .chain(ks.iter().map(|&k| {
                    self.cells
                        .iter()
                        .find(|c| c.granularity == g && c.top_k == k)
                        .map_or("-".into(), |c| format!("{:.4}/{:.3}", c.accuracy, c.mean_edit_distance))
                }))
                .collect()
        });
        let mut out = render(&header_refs, rows);
        let _ = writeln!(
            out,
            "best: G={} K={} accuracy {:.4} MED {:.4}",
            self.best.granularity, self.best.top_k, self.best.accuracy, self.best.mean_edit_distance
        );
        out
    }
}

/// Evaluates every `(G, K)` pair. With exact search the top-K lists for
/// smaller K are prefixes of the largest one, so each word is decoded once
/// per granularity.
pub fn grid_search(
    granularities: &[usize],
    ks: &[usize],
    words: &Dataset,
    labels: &[String],
    cfg: &PipelineConfig,
    model: &Model,
    index: &CorrectionIndex,
) -> Result<GridReport> {
    check_labels(words, labels)?;
    if granularities.is_empty() || ks.is_empty() {
        return Err(Error::InvalidArgument("empty grid".into()));
    }
    let k_max = *ks.iter().max().expect("non-empty");
    let mut cells = Vec::with_capacity(granularities.len() * ks.len());
    for &g in granularities {
        let gcfg = PipelineConfig {
            granularity: g,
            top_k: k_max,
            ..*cfg
        };
        gcfg.validate()?;
        let per_word: Vec<Vec<WordRecord>> = words
            .items
            .par_iter()
            .enumerate()
            .map(|(i, seq)| {
                let (_, _, full) = decode(seq, &gcfg, model, k_max)?;
                ks.iter()
                    .map(|&k| {
                        let t = match cfg.search_mode {
                            SearchMode::Exact => full[..k.min(full.len())].to_vec(),
                            SearchMode::SuffixMean => decode(seq, &gcfg, model, k)?.2,
                        };
                        let chosen = cfg.kernel.select(&score_trajectories(&t, index))?;
                        Ok(record(i, seq, &labels[i], chosen, &t))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for (ki, &k) in ks.iter().enumerate() {
            let m = Summary::of(per_word.iter().map(|r| &r[ki]));
            cells.push(GridCell {
                granularity: g,
                top_k: k,
                accuracy: m.accuracy,
                mean_edit_distance: m.mean_edit_distance,
            });
        }
    }
    let best = cells
        .iter()
        .min_by(|a, b| {
            b.accuracy
                .total_cmp(&a.accuracy)
                .then(a.mean_edit_distance.total_cmp(&b.mean_edit_distance))
                .then(a.granularity.cmp(&b.granularity))
                .then(a.top_k.cmp(&b.top_k))
        })
        .expect("non-empty grid")
        .clone();
    Ok(GridReport { cells, best })
}
