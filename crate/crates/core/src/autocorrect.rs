//! Spelling correction with a symmetric-delete index and the rules that pick
//! one word out of the top-K trajectories.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::decoder::Trajectory;
use crate::error::{Error, Result};

/// Word frequencies, lowercase ASCII words only.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FrequencyDictionary {
    entries: BTreeMap<String, u64>,
}

fn is_plain_word(w: &str) -> bool {
    !w.is_empty() && w.bytes().all(|b| b.is_ascii_alphabetic())
}

impl FrequencyDictionary {
    /// Builds from `(word, count)` pairs. Words are lowercased; entries that
    /// are not plain ASCII letters are skipped; zero counts are raised to 1;
    /// repeated words keep the largest count.
    pub fn from_entries<I, S>(entries: I) -> FrequencyDictionary
    where
        I: IntoIterator<Item = (S, u64)>,
        S: AsRef<str>,
    {
        let mut map = BTreeMap::new();
        for (w, f) in entries {
            let w = w.as_ref();
            if !is_plain_word(w) {
                continue;
            }
            let slot = map.entry(w.to_ascii_lowercase()).or_insert(1);
            *slot = (*slot).max(f.max(1));
        }
        FrequencyDictionary { entries: map }
    }

    /// Parses `word count` lines.
    pub fn parse<R: BufRead>(reader: R) -> Result<FrequencyDictionary> {
        let mut pairs = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse {
                line: i as u64 + 1,
                message: e.to_string(),
            })?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(word), Some(count), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse {
                    line: i as u64 + 1,
                    message: format!("expected `word count`, got {line:?}"),
                });
            };
            let count: u64 = count.parse().map_err(|_| Error::Parse {
                line: i as u64 + 1,
                message: format!("bad count {count:?}"),
            })?;
            pairs.push((word.to_string(), count));
        }
        Ok(FrequencyDictionary::from_entries(pairs))
    }

    pub fn load(path: &Path) -> Result<FrequencyDictionary> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        FrequencyDictionary::parse(std::io::BufReader::new(f))
    }

    /// The bundled English sample of about 5000 words.
    pub fn bundled() -> FrequencyDictionary {
        FrequencyDictionary::parse(include_str!("../data/frequency_dictionary_en_5k.txt").as_bytes())
            .expect("bundled dictionary parses")
    }

    pub fn frequency(&self, word: &str) -> Option<u64> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.entries.iter().map(|(w, &f)| (w.as_str(), f))
    }
}

/// Every string reachable from `word` by at most `d` character deletions,
/// `word` included.
pub fn delete_variants(word: &str, d: usize) -> HashSet<String> {
    let mut all = HashSet::new();
    all.insert(word.to_string());
    let mut frontier = vec![word.chars().collect::<Vec<char>>()];
    for _ in 0..d {
        let mut next = Vec::new();
        for w in &frontier {
            for i in 0..w.len() {
                let mut v = w.clone();
                v.remove(i);
                if all.insert(v.iter().collect()) {
                    next.push(v);
                }
            }
        }
        frontier = next;
    }
    all
}

/// Optimal string alignment distance: insertions, deletions, substitutions
/// and transpositions of adjacent characters, no substring edited twice.
pub fn osa_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let w = b.len() + 1;
    let mut d = vec![0usize; (a.len() + 1) * w];
    for i in 0..=a.len() {
        d[i * w] = i;
    }
    for j in 0..=b.len() {
        d[j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            let mut v = (d[(i - 1) * w + j] + 1)
                .min(d[i * w + j - 1] + 1)
                .min(d[(i - 1) * w + j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                v = v.min(d[(i - 2) * w + j - 2] + 1);
            }
            d[i * w + j] = v;
        }
    }
    d[a.len() * w + b.len()]
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LookupResult {
    pub corrected: String,
    pub distance: usize,
    pub frequency: u64,
}

/// Delete-variant index over a dictionary.
#[derive(Clone, Debug)]
pub struct CorrectionIndex {
    max_distance: usize,
    words: Vec<(String, u64)>,
    variants: HashMap<String, Vec<u32>>,
}

pub fn build_index(dict: &FrequencyDictionary, max_distance: usize) -> Result<CorrectionIndex> {
    if max_distance > 3 {
        return Err(Error::InvalidArgument(format!("max distance {max_distance} above 3")));
    }
    let words: Vec<(String, u64)> = dict.iter().map(|(w, f)| (w.to_string(), f)).collect();
    let mut variants: HashMap<String, Vec<u32>> = HashMap::new();
    for (id, (w, _)) in words.iter().enumerate() {
        for v in delete_variants(w, max_distance) {
            variants.entry(v).or_default().push(id as u32);
        }
    }
    Ok(CorrectionIndex {
        max_distance,
        words,
        variants,
    })
}

impl CorrectionIndex {
    pub fn max_distance(&self) -> usize {
        self.max_distance
    }

    /// Dictionary words that produce `variant` by deletions, sorted.
    pub fn originators(&self, variant: &str) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .variants
            .get(variant)
            .map(|ids| ids.iter().map(|&i| self.words[i as usize].0.as_str()).collect())
            .unwrap_or_default();
        out.sort_unstable();
        out
    }

    pub fn variant_count(&self) -> usize {
        self.variants.len()
    }

    /// Closest dictionary word: smallest distance, then highest frequency,
    /// then alphabetical. Falls back to the input itself at distance
    /// `max_distance + 1` with frequency 1.
    pub fn lookup(&self, word: &str) -> LookupResult {
        let word = word.to_lowercase();
        let mut seen = HashSet::new();
        let mut best: Option<(usize, u64, &str)> = None;
        for v in delete_variants(&word, self.max_distance) {
            let Some(ids) = self.variants.get(&v) else { continue };
            for &id in ids {
                if !seen.insert(id) {
                    continue;
                }
                let (cand, freq) = &self.words[id as usize];
                let d = osa_distance(&word, cand);
                if d > self.max_distance {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bd, bf, bw)) => (d, std::cmp::Reverse(*freq), cand.as_str()) < (bd, std::cmp::Reverse(bf), bw),
                };
                if better {
                    best = Some((d, *freq, cand));
                }
            }
        }
        match best {
            Some((distance, frequency, w)) => LookupResult {
                corrected: w.to_string(),
                distance,
                frequency,
            },
            None => LookupResult {
                corrected: word,
                distance: self.max_distance + 1,
                frequency: 1,
            },
        }
    }
}

/// A trajectory's word with its confidence `exp(mean score)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredWord {
    pub word: String,
    pub confidence: f64,
}

/// Final-word selection rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Kernel {
    Top1,
    MaxVote,
    SumConf,
    Division { beta: f64 },
    Power { beta: f64 },
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::Division { beta: 100.0 }
    }
}

impl Kernel {
    pub const NAMES: [&'static str; 5] = ["top1", "maxvote", "sumconf", "division", "power"];

    /// Kernel by name; `beta` overrides the default weight of the two
    /// combination kernels.
    pub fn from_name(name: &str, beta: Option<f64>) -> Result<Kernel> {
        Ok(match name {
            "top1" => Kernel::Top1,
            "maxvote" => Kernel::MaxVote,
            "sumconf" => Kernel::SumConf,
            "division" => Kernel::Division {
                beta: beta.unwrap_or(100.0),
            },
            "power" => Kernel::Power {
                beta: beta.unwrap_or(0.75),
            },
            other => return Err(Error::InvalidArgument(format!("unknown kernel {other:?}"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Top1 => "top1",
            Kernel::MaxVote => "maxvote",
            Kernel::SumConf => "sumconf",
            Kernel::Division { .. } => "division",
            Kernel::Power { .. } => "power",
        }
    }

    pub fn select(&self, results: &[(ScoredWord, LookupResult)]) -> Result<String> {
        match *self {
            Kernel::Top1 => kernel_top1(results),
            Kernel::MaxVote => kernel_max_vote(results),
            Kernel::SumConf => kernel_sum_conf(results),
            Kernel::Division { beta } => kernel_division(results, beta),
            Kernel::Power { beta } => kernel_power(results, beta),
        }
    }
}

/// `c * ln(f) / (beta * d + 1)`
pub fn alpha_division(confidence: f64, frequency: f64, distance: usize, beta: f64) -> f64 {
    confidence * frequency.ln() / (beta * distance as f64 + 1.0)
}

/// `c * ln(f)^(beta / (d + 1))`
pub fn alpha_power(confidence: f64, frequency: f64, distance: usize, beta: f64) -> f64 {
    confidence * frequency.ln().powf(beta / (distance as f64 + 1.0))
}

fn non_empty(results: &[(ScoredWord, LookupResult)]) -> Result<()> {
    if results.is_empty() {
        return Err(Error::EmptyInput("no trajectories to choose from".into()));
    }
    Ok(())
}

/// Word with the largest summed weight, ties alphabetical.
fn argmax_sum(results: &[(ScoredWord, LookupResult)], weight: impl Fn(&ScoredWord, &LookupResult) -> f64) -> Result<String> {
    non_empty(results)?;
    let mut sums: BTreeMap<&str, f64> = BTreeMap::new();
    for (s, l) in results {
        *sums.entry(l.corrected.as_str()).or_insert(0.0) += weight(s, l);
    }
    let mut best: Option<(&str, f64)> = None;
    for (w, v) in sums {
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((w, v));
        }
    }
    Ok(best.expect("non-empty").0.to_string())
}

pub fn kernel_top1(results: &[(ScoredWord, LookupResult)]) -> Result<String> {
    non_empty(results)?;
    Ok(results[0].1.corrected.clone())
}

pub fn kernel_max_vote(results: &[(ScoredWord, LookupResult)]) -> Result<String> {
    non_empty(results)?;
    let mut tally: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    for (s, l) in results {
        let t = tally.entry(l.corrected.as_str()).or_insert((0, 0.0));
        t.0 += 1;
        t.1 += s.confidence;
    }
    let mut best: Option<(&str, usize, f64)> = None;
    for (w, (n, c)) in tally {
        if best.is_none_or(|(_, bn, bc)| n > bn || (n == bn && c > bc)) {
            best = Some((w, n, c));
        }
    }
    Ok(best.expect("non-empty").0.to_string())
}

pub fn kernel_sum_conf(results: &[(ScoredWord, LookupResult)]) -> Result<String> {
    argmax_sum(results, |s, _| s.confidence)
}

pub fn kernel_division(results: &[(ScoredWord, LookupResult)], beta: f64) -> Result<String> {
    argmax_sum(results, |s, l| alpha_division(s.confidence, l.frequency as f64, l.distance, beta))
}

pub fn kernel_power(results: &[(ScoredWord, LookupResult)], beta: f64) -> Result<String> {
    argmax_sum(results, |s, l| alpha_power(s.confidence, l.frequency as f64, l.distance, beta))
}

/// Lowercased trajectory words with their confidences and lookups.
pub fn score_trajectories(trajectories: &[Trajectory], idx: &CorrectionIndex) -> Vec<(ScoredWord, LookupResult)> {
    trajectories
        .iter()
        .map(|t| {
            let word = t.word().to_ascii_lowercase();
            let lookup = idx.lookup(&word);
            (
                ScoredWord {
                    word,
                    confidence: t.mean_score.exp(),
                },
                lookup,
            )
        })
        .collect()
}

pub fn finalize(trajectories: &[Trajectory], idx: &CorrectionIndex, kernel: Kernel) -> Result<String> {
    kernel.select(&score_trajectories(trajectories, idx))
}
