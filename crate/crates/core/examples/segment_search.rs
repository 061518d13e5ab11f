//! Splits a word-length recording into equal parts and searches a hand-made
//! score table for the best letter chains.
//!
//!     cargo run --example segment_search

use inkline::classifier::Logits;
use inkline::decoder::{segment_len, trajectory_search, PredictionTable, SearchMode};
use inkline::seqcore::{Class, NUM_CLASSES};

fn scores(pairs: &[(char, f64)]) -> Logits {
    let mut s = [f64::NEG_INFINITY; NUM_CLASSES];
    for &(c, v) in pairs {
        s[Class::from_letter(c).unwrap().index()] = v;
    }
    s
}

fn main() -> inkline::Result<()> {
    for (len, g) in [(150, 4), (225, 3), (150, 9)] {
        let sm = segment_len(len, g)?;
        println!(
            "{len} frames at G={g}: {} splits of {} frames, {} classifiable spans",
            sm.n_splits,
            sm.part_len,
            sm.pairs().len()
        );
    }

    // three splits; the one-letter-per-split reading is weak, the merged
    // spans tell a clearer story
    let mut tab = PredictionTable::new(3);
    tab.insert(0, 1, scores(&[('c', -0.4), ('o', -1.2)]))?;
    tab.insert(1, 2, scores(&[('a', -2.5), ('u', -1.9)]))?;
    tab.insert(2, 3, scores(&[('t', -0.3), ('l', -1.4)]))?;
    tab.insert(1, 3, scores(&[('a', -0.2), ('d', -1.0)]))?;
    tab.insert(0, 2, scores(&[('d', -1.1)]))?;
    tab.insert(0, 3, scores(&[('o', -3.0)]))?;

    for (mode, name) in [(SearchMode::Exact, "exact"), (SearchMode::SuffixMean, "suffix-mean beam")] {
        println!("{name}:");
        for t in trajectory_search(&tab, 5, mode)? {
            println!("  {:<5} mean {:>6.3} spans {:?}", t.word(), t.mean_score, t.spans());
        }
    }
    Ok(())
}
