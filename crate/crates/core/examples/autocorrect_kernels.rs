//! Looks up noisy candidate words in the bundled frequency dictionary and
//! shows how each selection kernel settles on a final word.
//!
//!     cargo run --example autocorrect_kernels

use inkline::autocorrect::{build_index, FrequencyDictionary, Kernel, ScoredWord};

fn main() -> inkline::Result<()> {
    let dict = FrequencyDictionary::bundled();
    let index = build_index(&dict, 2)?;
    println!("{} words, {} delete variants", dict.len(), index.variant_count());

    // ranked trajectory words with confidence exp(mean log-probability)
    let ranked = [("qxarts", 0.41), ("quartz", 0.30), ("qnarts", 0.12), ("quarts", 0.10), ("guarts", 0.07)];
    let results: Vec<_> = ranked
        .iter()
        .map(|&(w, c)| {
            let hit = index.lookup(w);
            println!("{w:<8} conf {c:.2} -> {:<8} d={} f={}", hit.corrected, hit.distance, hit.frequency);
            (
                ScoredWord {
                    word: w.to_string(),
                    confidence: c,
                },
                hit,
            )
        })
        .collect();

    for name in Kernel::NAMES {
        let k = Kernel::from_name(name, None)?;
        println!("{name:<9} picks {}", k.select(&results)?);
    }
    Ok(())
}
