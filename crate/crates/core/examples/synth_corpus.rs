//! Generates a small synthetic corpus and shows what the writers look like.
//!
//!     cargo run --example synth_corpus

use inkline::synthglyph::{default_word_list, gen_corpus, SubjectProfile};

fn main() -> inkline::Result<()> {
    let profiles = SubjectProfile::defaults();
    let words = default_word_list();
    let corpus = gen_corpus(5, &words[..6], &profiles, 0)?;

    for p in &profiles {
        println!("{}: scale {:?}, tilt {} deg, noise {} deg", p.name, p.scale, p.tilt, p.noise_sigma);
    }
    let mean_len = corpus.letters.iter().map(|s| s.len()).sum::<usize>() as f64 / corpus.letters.len() as f64;
    println!("{} letters, mean length {mean_len:.1} frames", corpus.letters.len());
    for (seq, label) in corpus.words.iter().zip(&corpus.word_labels).take(6) {
        println!("{:<8} {} frames, subject {}", label, seq.len(), seq.subject);
    }
    for (subject, cal) in &corpus.calibrations {
        println!("{subject} still-hold: {} ms", cal.duration_ms());
    }
    Ok(())
}
