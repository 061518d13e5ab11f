//! Independent reference implementations shared by the property and
//! acceptance tests. Nothing here calls the library code it is compared to.

#![allow(dead_code)]

use std::collections::HashMap;

use inkline::augment::RandomSource;
use inkline::autocorrect::{FrequencyDictionary, LookupResult};
use inkline::classifier::Logits;
use inkline::decoder::PredictionTable;
use inkline::seqcore::NUM_CLASSES;
use rand::Rng;

pub const NONCLASS: usize = NUM_CLASSES - 1;

/// `(N, n, slices)` straight from the ceiling formulas.
pub fn segmentation_oracle(len: usize, g: usize) -> (usize, usize, Vec<(usize, usize, usize, usize)>) {
    let n_splits = len.div_ceil(75) * g;
    let part = len.div_ceil(n_splits);
    let mut slices = Vec::new();
    for b in 0..n_splits {
        for e in b + 1..=n_splits {
            let (s, t) = ((b * part).min(len), (e * part).min(len));
            if t - s >= 2 {
                slices.push((b, e, s, t));
            }
        }
    }
    (n_splits, part, slices)
}

/// A table over `n` splits where only `letters` carry finite scores, plus a
/// tempting NONCLASS score. With `quantized`, scores are multiples of 0.25 so
/// ties actually occur. Roughly one span in `drop_one_in` is left empty.
pub fn random_table(n: usize, letters: &[usize], quantized: bool, drop_one_in: u32, rng: &mut RandomSource) -> PredictionTable {
    let mut tab = PredictionTable::new(n);
    for b in 0..n {
        for e in b + 1..=n {
            if drop_one_in > 0 && rng.random_range(0..drop_one_in) == 0 {
                continue;
            }
            let mut s: Logits = [f64::NEG_INFINITY; NUM_CLASSES];
            for &l in letters {
                s[l] = if quantized {
                    -0.25 * f64::from(rng.random_range(0..12u32))
                } else {
                    rng.random_range(-6.0..0.0)
                };
            }
            s[NONCLASS] = 1.0;
            tab.insert(b, e, s).unwrap();
        }
    }
    tab
}

/// Dense table with every class scored, as a log-softmax of random logits.
pub fn dense_table(n: usize, rng: &mut RandomSource) -> PredictionTable {
    let mut tab = PredictionTable::new(n);
    for b in 0..n {
        for e in b + 1..=n {
            let mut l: Logits = [0.0; NUM_CLASSES];
            for v in l.iter_mut() {
                *v = rng.random_range(-4.0..4.0);
            }
            let m = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z = l.iter().map(|v| (v - m).exp()).sum::<f64>().ln() + m;
            tab.insert(b, e, l.map(|v| v - z)).unwrap();
        }
    }
    tab
}

#[derive(Clone, Debug, PartialEq)]
pub struct Enumerated {
    pub word: String,
    pub spans: Vec<(usize, usize)>,
    pub mean: f64,
}

/// Every segmentation of `0..n` into spans, every letter choice per span.
pub fn enumerate_all(tab: &PredictionTable) -> Vec<Enumerated> {
    let n = tab.n_splits();
    let mut out = Vec::new();
    // each subset of the inner split points is one segmentation
    for mask in 0u32..(1 << (n - 1)) {
        let mut cuts = vec![0];
        cuts.extend((1..n).filter(|i| mask & (1 << (i - 1)) != 0));
        cuts.push(n);
        let spans: Vec<(usize, usize)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();
        let mut partial: Vec<(String, f64)> = vec![(String::new(), 0.0)];
        for &(b, e) in &spans {
            let Some(scores) = tab.get(b, e) else {
                partial.clear();
                break;
            };
            let mut next = Vec::new();
            for (w, s) in &partial {
                for (c, &v) in scores.iter().enumerate().take(NONCLASS) {
                    if v.is_finite() {
                        next.push((format!("{w}{}", (b'A' + c as u8) as char), s + v));
                    }
                }
            }
            partial = next;
        }
        for (word, sum) in partial {
            out.push(Enumerated {
                word,
                spans: spans.clone(),
                mean: sum / spans.len() as f64,
            });
        }
    }
    out.sort_by(|a, b| {
        b.mean
            .total_cmp(&a.mean)
            .then(a.spans.len().cmp(&b.spans.len()))
            .then_with(|| a.word.cmp(&b.word))
            .then_with(|| a.spans.cmp(&b.spans))
    });
    out
}

/// Damerau-Levenshtein in its restricted (optimal string alignment) form,
/// written as a memoized recursion over suffixes.
pub fn osa_reference(a: &str, b: &str) -> usize {
    fn go(a: &[u8], b: &[u8], memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if a.is_empty() {
            return b.len();
        }
        if b.is_empty() {
            return a.len();
        }
        if let Some(&v) = memo.get(&(a.len(), b.len())) {
            return v;
        }
        let cost = usize::from(a[0] != b[0]);
        let mut best = (go(&a[1..], b, memo) + 1)
            .min(go(a, &b[1..], memo) + 1)
            .min(go(&a[1..], &b[1..], memo) + cost);
        if a.len() > 1 && b.len() > 1 && a[0] == b[1] && a[1] == b[0] {
            best = best.min(go(&a[2..], &b[2..], memo) + 1);
        }
        memo.insert((a.len(), b.len()), best);
        best
    }
    go(a.as_bytes(), b.as_bytes(), &mut HashMap::new())
}

/// Linear scan of the whole dictionary.
pub fn lookup_scan(dict: &FrequencyDictionary, word: &str, max_distance: usize) -> LookupResult {
    let mut best: Option<(usize, u64, String)> = None;
    for (w, f) in dict.iter() {
        let d = osa_reference(word, w);
        if d > max_distance {
            continue;
        }
        let better = match &best {
            None => true,
            Some((bd, bf, bw)) => d < *bd || (d == *bd && (f > *bf || (f == *bf && w < bw.as_str()))),
        };
        if better {
            best = Some((d, f, w.to_string()));
        }
    }
    match best {
        Some((distance, frequency, corrected)) => LookupResult {
            corrected,
            distance,
            frequency,
        },
        None => LookupResult {
            corrected: word.to_string(),
            distance: max_distance + 1,
            frequency: 1,
        },
    }
}

pub fn random_word(rng: &mut RandomSource, alphabet: &[u8], max_len: usize) -> String {
    let len = rng.random_range(1..=max_len);
    (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())] as char).collect()
}

/// A dictionary word with a few random edits, or an unrelated string.
pub fn random_query(rng: &mut RandomSource, words: &[String], alphabet: &[u8]) -> String {
    if words.is_empty() || rng.random_range(0..4) == 0 {
        return random_word(rng, alphabet, 7);
    }
    let mut w: Vec<u8> = words[rng.random_range(0..words.len())].bytes().collect();
    for _ in 0..rng.random_range(0..=3) {
        let pick = rng.random_range(0..4);
        let at = rng.random_range(0..=w.len());
        let ch = alphabet[rng.random_range(0..alphabet.len())];
        match pick {
            0 => w.insert(at, ch),
            1 if at < w.len() => {
                w.remove(at);
            }
            2 if at < w.len() => w[at] = ch,
            3 if at + 1 < w.len() => w.swap(at, at + 1),
            _ => {}
        }
    }
    if w.is_empty() {
        w.push(alphabet[0]);
    }
    String::from_utf8(w).unwrap()
}

pub fn random_dictionary(rng: &mut RandomSource, alphabet: &[u8], max_words: usize) -> (FrequencyDictionary, Vec<String>) {
    let n = rng.random_range(1..=max_words);
    let entries: Vec<(String, u64)> = (0..n)
        .map(|_| (random_word(rng, alphabet, 6), rng.random_range(1..=20)))
        .collect();
    let dict = FrequencyDictionary::from_entries(entries);
    let words = dict.iter().map(|(w, _)| w.to_string()).collect();
    (dict, words)
}
