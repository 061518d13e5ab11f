//! Equal-width segmentation of a word recording and top-K trajectory search
//! over the per-segment letter scores.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::classifier::{log_softmax, Logits, Model};
use crate::error::{Error, Result};
use crate::seqcore::{resample, Class, Sequence, NUM_CLASSES};

/// Frames per letter assumed when choosing the number of splits.
pub const FRAMES_PER_LETTER: usize = 75;

/// Split points of a word recording: `n_splits` parts of `part_len` frames,
/// the last ones clipped to the recording.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentMap {
    pub n_splits: usize,
    pub part_len: usize,
    pub word_len: usize,
}

impl SegmentMap {
    /// Frame range `[start, end)` covered by splits `begin..end`.
    pub fn frames(&self, begin: usize, end: usize) -> Option<(usize, usize)> {
        if begin >= end || end > self.n_splits {
            return None;
        }
        let start = (begin * self.part_len).min(self.word_len);
        let stop = (end * self.part_len).min(self.word_len);
        Some((start, stop))
    }

    /// Whether the span holds enough frames to be resampled.
    pub fn is_classifiable(&self, begin: usize, end: usize) -> bool {
        self.frames(begin, end).is_some_and(|(a, b)| b - a >= 2)
    }

    /// Every classifiable `(begin, end)` pair in lexicographic order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for b in 0..self.n_splits {
            for e in b + 1..=self.n_splits {
                if self.is_classifiable(b, e) {
                    out.push((b, e));
                }
            }
        }
        out
    }

    pub fn slice(&self, word: &Sequence, begin: usize, end: usize) -> Option<Sequence> {
        let (a, b) = self.frames(begin, end)?;
        Some(word.slice(a, b))
    }
}

/// `N = ceil(len / 75) * g` splits of `n = ceil(len / N)` frames.
pub fn segment_len(word_len: usize, g: usize) -> Result<SegmentMap> {
    if word_len == 0 {
        return Err(Error::EmptyInput("word recording has no frames".into()));
    }
    if word_len < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: word_len,
        });
    }
    if g == 0 {
        return Err(Error::InvalidArgument("granularity must be at least 1".into()));
    }
    let n_splits = word_len.div_ceil(FRAMES_PER_LETTER) * g;
    Ok(SegmentMap {
        n_splits,
        part_len: word_len.div_ceil(n_splits),
        word_len,
    })
}

pub fn segment(word: &Sequence, g: usize) -> Result<SegmentMap> {
    segment_len(word.len(), g)
}

/// What the table stores for each span.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreMode {
    /// Log-softmax of the classifier output.
    #[default]
    LogProb,
    /// The classifier's raw logits.
    RawLogit,
}

/// Per-span class scores, indexed by `(begin, end)` split pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionTable {
    n_splits: usize,
    cells: Vec<Option<Logits>>,
}

impl PredictionTable {
    pub fn new(n_splits: usize) -> PredictionTable {
        PredictionTable {
            n_splits,
            cells: vec![None; (n_splits + 1) * (n_splits + 1)],
        }
    }

    pub fn n_splits(&self) -> usize {
        self.n_splits
    }

    fn slot(&self, begin: usize, end: usize) -> Option<usize> {
        (begin < end && end <= self.n_splits).then(|| begin * (self.n_splits + 1) + end)
    }

    /// Stores the scores of span `(begin, end)`. A non-finite score removes
    /// that letter from the search.
    pub fn insert(&mut self, begin: usize, end: usize, scores: Logits) -> Result<()> {
        let slot = self
            .slot(begin, end)
            .ok_or_else(|| Error::InvalidArgument(format!("span ({begin}, {end}) outside {} splits", self.n_splits)))?;
        self.cells[slot] = Some(scores);
        Ok(())
    }

    pub fn get(&self, begin: usize, end: usize) -> Option<&Logits> {
        self.slot(begin, end).and_then(|s| self.cells[s].as_ref())
    }

    pub fn len(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(begin, end, scores)` in lexicographic span order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Logits)> {
        let w = self.n_splits + 1;
        self.cells
            .iter()
            .enumerate()
            .filter_map(move |(i, c)| c.as_ref().map(|s| (i / w, i % w, s)))
    }
}

/// Classifies every classifiable span of `word`.
pub fn predict_segments(model: &Model, word: &Sequence, sm: &SegmentMap, mode: ScoreMode) -> Result<PredictionTable> {
    if word.len() != sm.word_len {
        return Err(Error::Shape(format!(
            "segment map built for {} frames, word has {}",
            sm.word_len,
            word.len()
        )));
    }
    let h = &model.hparams;
    let pairs = sm.pairs();
    let inputs = pairs
        .iter()
        .map(|&(b, e)| resample(&sm.slice(word, b, e).expect("classifiable span"), h.resample_points, h.selector()))
        .collect::<Result<Vec<_>>>()?;
    let logits = model.forward(&inputs)?;
    let mut table = PredictionTable::new(sm.n_splits);
    for (&(b, e), l) in pairs.iter().zip(&logits) {
        let scores = match mode {
            ScoreMode::LogProb => log_softmax(l),
            ScoreMode::RawLogit => *l,
        };
        table.insert(b, e, scores)?;
    }
    Ok(table)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub seg_begin: usize,
    pub seg_end: usize,
    pub ch: char,
    pub score: f64,
}

/// A chain of candidates spanning every split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub candidates: Vec<Candidate>,
    pub mean_score: f64,
}

impl Trajectory {
    pub fn new(candidates: Vec<Candidate>) -> Trajectory {
        let mean_score = if candidates.is_empty() {
            0.0
        } else {
            candidates.iter().map(|c| c.score).sum::<f64>() / candidates.len() as f64
        };
        Trajectory {
            candidates,
            mean_score,
        }
    }

    pub fn word(&self) -> String {
        self.candidates.iter().map(|c| c.ch).collect()
    }

    pub fn spans(&self) -> Vec<(usize, usize)> {
        self.candidates.iter().map(|c| (c.seg_begin, c.seg_end)).collect()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Ranking of finished trajectories: higher mean first, then fewer
/// candidates, then the word, then the spans.
pub fn rank_order(a: &Trajectory, b: &Trajectory) -> Ordering {
    b.mean_score
        .total_cmp(&a.mean_score)
        .then(a.len().cmp(&b.len()))
        .then_with(|| a.word().cmp(&b.word()))
        .then_with(|| a.spans().cmp(&b.spans()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// Exact top-K: partial trajectories are kept per node and per
    /// candidate count, so no spanning trajectory that belongs in the final
    /// top K is pruned early.
    #[default]
    Exact,
    /// One beam of K suffixes per node ranked by suffix mean. Cheaper, but a
    /// suffix dropped at an inner node can belong to a better full
    /// trajectory.
    SuffixMean,
}

/// Top-`k` spanning trajectories, best first.
pub fn trajectory_search(tab: &PredictionTable, k: usize, mode: SearchMode) -> Result<Vec<Trajectory>> {
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    let out = match mode {
        SearchMode::Exact => exact_search(tab, k),
        SearchMode::SuffixMean => suffix_mean_search(tab, k),
    };
    if out.is_empty() {
        return Err(Error::NoPath {
            n_splits: tab.n_splits,
        });
    }
    Ok(out)
}

/// Letters of a span, best first, skipping non-finite scores and the
/// non-class label.
fn ranked_letters(scores: &Logits, limit: usize) -> Vec<(usize, f64)> {
    let mut v: Vec<(usize, f64)> = scores[..NUM_CLASSES - 1]
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, s)| s.is_finite())
        .collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v.truncate(limit);
    v
}

fn letter_of(class: usize) -> char {
    Class::from_index(class).ok().and_then(Class::letter).expect("letter class")
}

#[derive(Clone, Copy, Debug)]
struct Partial {
    sum: f64,
    class: usize,
    end: usize,
    /// index of the continuation in the stratum `(end, count - 1)`
    next: usize,
}

struct Strata {
    n_splits: usize,
    /// `cells[node][count]`, each sorted best first
    cells: Vec<Vec<Vec<Partial>>>,
}

impl Strata {
    fn materialize(&self, tab: &PredictionTable, mut node: usize, mut count: usize, mut idx: usize) -> Vec<Candidate> {
        let mut out = Vec::with_capacity(count);
        while count > 0 {
            let p = self.cells[node][count][idx];
            out.push(Candidate {
                seg_begin: node,
                seg_end: p.end,
                ch: letter_of(p.class),
                score: tab.get(node, p.end).expect("span in table")[p.class],
            });
            node = p.end;
            idx = p.next;
            count -= 1;
        }
        debug_assert_eq!(node, self.n_splits);
        out
    }
}

fn exact_search(tab: &PredictionTable, k: usize) -> Vec<Trajectory> {
    let n = tab.n_splits;
    let mut strata = Strata {
        n_splits: n,
        cells: vec![Vec::new(); n + 1],
    };
    strata.cells[n] = vec![Vec::new(); 1];
    strata.cells[n][0].push(Partial {
        sum: 0.0,
        class: usize::MAX,
        end: n,
        next: 0,
    });

    for node in (0..n).rev() {
        let max_count = n - node;
        let mut by_count: Vec<Vec<Partial>> = vec![Vec::new(); max_count + 1];
        for end in node + 1..=n {
            let Some(scores) = tab.get(node, end) else { continue };
            let letters = ranked_letters(scores, k);
            for (count_after, rest) in strata.cells[end].iter().enumerate() {
                for (next, r) in rest.iter().enumerate() {
                    for &(class, s) in &letters {
                        by_count[count_after + 1].push(Partial {
                            sum: s + r.sum,
                            class,
                            end,
                            next,
                        });
                    }
                }
            }
        }
        for (count, list) in by_count.iter_mut().enumerate().skip(1) {
            if list.is_empty() {
                continue;
            }
            let key = |p: &Partial| {
                let mut c = vec![Candidate {
                    seg_begin: node,
                    seg_end: p.end,
                    ch: letter_of(p.class),
                    score: 0.0,
                }];
                c.extend(strata.materialize(tab, p.end, count - 1, p.next));
                let word: String = c.iter().map(|c| c.ch).collect();
                let spans: Vec<(usize, usize)> = c.iter().map(|c| (c.seg_begin, c.seg_end)).collect();
                (word, spans)
            };
            let cmp = |a: &Partial, b: &Partial| b.sum.total_cmp(&a.sum).then_with(|| key(a).cmp(&key(b)));
            if list.len() > k {
                list.select_nth_unstable_by(k - 1, cmp);
                list.truncate(k);
            }
            list.sort_by(cmp);
        }
        strata.cells[node] = by_count;
    }

    let mut out: Vec<Trajectory> = strata.cells[0]
        .iter()
        .enumerate()
        .skip(1)
        .flat_map(|(count, list)| (0..list.len()).map(move |i| (count, i)))
        .map(|(count, i)| Trajectory::new(strata.materialize(tab, 0, count, i)))
        .collect();
    out.sort_by(rank_order);
    out.truncate(k);
    out
}

fn suffix_mean_search(tab: &PredictionTable, k: usize) -> Vec<Trajectory> {
    let n = tab.n_splits;
    let mut beams: Vec<Vec<Trajectory>> = vec![Vec::new(); n + 1];
    beams[n].push(Trajectory::new(Vec::new()));
    for node in (0..n).rev() {
        let mut pool = Vec::new();
        for end in node + 1..=n {
            let Some(scores) = tab.get(node, end) else { continue };
            for (class, s) in ranked_letters(scores, k) {
                for t in &beams[end] {
                    let mut c = Vec::with_capacity(t.len() + 1);
                    c.push(Candidate {
                        seg_begin: node,
                        seg_end: end,
                        ch: letter_of(class),
                        score: s,
                    });
                    c.extend_from_slice(&t.candidates);
                    pool.push(Trajectory::new(c));
                }
            }
        }
        pool.sort_by(rank_order);
        pool.truncate(k);
        beams[node] = pool;
    }
    std::mem::take(&mut beams[0])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeEntry {
    pub begin: usize,
    pub end: usize,
    pub logprobs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub word: String,
    pub mean_score: f64,
    pub spans: Vec<(usize, usize)>,
}

impl From<&Trajectory> for TrajectorySummary {
    fn from(t: &Trajectory) -> Self {
        TrajectorySummary {
            word: t.word(),
            mean_score: t.mean_score,
            spans: t.spans(),
        }
    }
}

/// Serializable view of a decoded word: the table and the kept trajectories.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub segments: SegmentMap,
    pub entries: Vec<LatticeEntry>,
    pub trajectories: Vec<TrajectorySummary>,
}

impl Lattice {
    pub fn new(sm: &SegmentMap, tab: &PredictionTable, trajectories: &[Trajectory]) -> Lattice {
        Lattice {
            segments: *sm,
            entries: tab
                .entries()
                .map(|(begin, end, s)| LatticeEntry {
                    begin,
                    end,
                    logprobs: s.to_vec(),
                })
                .collect(),
            trajectories: trajectories.iter().map(TrajectorySummary::from).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqcore::Frame;

    fn word(len: usize) -> Sequence {
        Sequence::new(
            (0..len)
                .map(|i| Frame {
                    td: 10,
                    yaw: i as f64,
                    ..Default::default()
                })
                .collect(),
        )
    }

    #[test]
    fn worked_segmentations() {
        let sm = segment(&word(150), 4).unwrap();
        assert_eq!((sm.n_splits, sm.part_len), (8, 19));
        assert_eq!(sm.frames(0, 1), Some((0, 19)));
        assert_eq!(sm.frames(7, 8), Some((133, 150)));

        let sm = segment(&word(75), 1).unwrap();
        assert_eq!((sm.n_splits, sm.part_len), (1, 75));
        assert_eq!(sm.pairs(), vec![(0, 1)]);

        let sm = segment(&word(225), 3).unwrap();
        assert_eq!((sm.n_splits, sm.part_len), (9, 25));
        assert_eq!(sm.frames(8, 9), Some((200, 225)));
    }

    #[test]
    fn segmentation_errors() {
        assert!(matches!(segment(&word(0), 4), Err(Error::EmptyInput(_))));
        assert!(segment(&word(1), 4).is_err());
        assert!(segment(&word(10), 0).is_err());
    }

    #[test]
    fn clipped_tail_spans_are_dropped() {
        // 150 frames, 18 splits of 9: split 17 starts past the end
        let sm = segment_len(150, 9).unwrap();
        assert_eq!((sm.n_splits, sm.part_len), (18, 9));
        assert!(!sm.is_classifiable(17, 18));
        assert!(sm.is_classifiable(16, 18));
        assert_eq!(sm.frames(16, 18), Some((144, 150)));
    }

    fn fill(table: &mut PredictionTable, b: usize, e: usize, best: char, score: f64) {
        let mut s = [-50.0; NUM_CLASSES];
        s[Class::from_letter(best).unwrap().index()] = score;
        table.insert(b, e, s).unwrap();
    }

    #[test]
    fn single_split() {
        let mut t = PredictionTable::new(1);
        fill(&mut t, 0, 1, 'Q', -0.2);
        let top = trajectory_search(&t, 1, SearchMode::Exact).unwrap();
        assert_eq!(top[0].word(), "Q");
        assert_eq!(top[0].mean_score, -0.2);
    }

    #[test]
    fn whole_span_beats_two_letter_chain() {
        let mut t = PredictionTable::new(2);
        fill(&mut t, 0, 1, 'C', -0.1);
        fill(&mut t, 1, 2, 'A', -0.3);
        fill(&mut t, 0, 2, 'B', -0.15);
        for mode in [SearchMode::Exact, SearchMode::SuffixMean] {
            let top = trajectory_search(&t, 1, mode).unwrap();
            assert_eq!(top[0].word(), "B");
            let two = trajectory_search(&t, 2, mode).unwrap();
            assert_eq!(two[1].word(), "CA");
            assert!((two[1].mean_score + 0.2).abs() < 1e-15);
        }
    }

    #[test]
    fn nonclass_never_chosen() {
        let mut t = PredictionTable::new(1);
        let mut s = [-9.0; NUM_CLASSES];
        s[Class::NONCLASS.index()] = 0.0;
        s[3] = -1.0;
        t.insert(0, 1, s).unwrap();
        let top = trajectory_search(&t, 3, SearchMode::Exact).unwrap();
        assert_eq!(top[0].word(), "D");
        assert!(top.iter().all(|tr| !tr.word().is_empty()));
    }

    #[test]
    fn missing_spans_mean_no_path() {
        let mut t = PredictionTable::new(3);
        fill(&mut t, 0, 1, 'A', -0.1);
        fill(&mut t, 2, 3, 'A', -0.1);
        assert!(matches!(
            trajectory_search(&t, 5, SearchMode::Exact),
            Err(Error::NoPath { n_splits: 3 })
        ));
    }

    #[test]
    fn literal_beam_can_miss_the_best_trajectory() {
        // suffix from node 1: "X" (mean -1.0) beats "YZ" (mean -1.1) and
        // pushes it out of a K=1 beam, but behind the weak -5.0 prefix the
        // longer chain dilutes it better: (-5.0 - 2.2) / 3 > (-5.0 - 1.0) / 2.
        let mut t = PredictionTable::new(3);
        let neg = [f64::NEG_INFINITY; NUM_CLASSES];
        let mut put = |b, e, ch: char, v: f64| {
            let mut s = t.get(b, e).copied().unwrap_or(neg);
            s[Class::from_letter(ch).unwrap().index()] = v;
            t.insert(b, e, s).unwrap();
        };
        put(0, 1, 'A', -5.0);
        put(1, 3, 'X', -1.0);
        put(1, 2, 'Y', -0.1);
        put(2, 3, 'Z', -2.1);
        let beam = trajectory_search(&t, 1, SearchMode::SuffixMean).unwrap();
        let exact = trajectory_search(&t, 1, SearchMode::Exact).unwrap();
        assert_eq!(beam[0].word(), "AX");
        assert_eq!(exact[0].word(), "AYZ");
    }

    #[test]
    fn lattice_serializes() {
        let mut t = PredictionTable::new(1);
        fill(&mut t, 0, 1, 'B', -0.5);
        let sm = segment_len(60, 1).unwrap();
        let trajs = trajectory_search(&t, 2, SearchMode::Exact).unwrap();
        let json = serde_json::to_string(&Lattice::new(&sm, &t, &trajs)).unwrap();
        assert!(json.contains("\"word\":\"B\""));
        assert!(json.contains("\"logprobs\""));
    }
}
