//! Applies each augmentation to one synthetic letter and prints how the
//! recording changes.
//!
//!     cargo run --example augment_preview

use inkline::augment::{augment_epoch, jitter_shape, make_nonclass, splice_neighbors, trim, AugmentConfig, RandomSource};
use inkline::seqcore::{calibrate, Dataset, Sequence};
use inkline::synthglyph::{gen_corpus, SubjectProfile};

fn describe(name: &str, s: &Sequence) {
    let yaw: Vec<f64> = s.frames.iter().map(|f| f.yaw).collect();
    let lo = yaw.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = yaw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let label = s.label.map_or("-".to_string(), |c| c.to_string());
    println!("{name:<10} label {label:<8} {:>4} frames, yaw {lo:>7.2} .. {hi:>7.2}", s.len());
}

fn main() -> inkline::Result<()> {
    let corpus = gen_corpus(2, &[], &SubjectProfile::defaults()[..1], 1)?;
    let profile = &corpus.calibrations[0].1;
    let letters: Dataset = corpus.letters.iter().map(|s| calibrate(s, profile)).collect();
    let cfg = AugmentConfig::default();
    let mut rng = RandomSource::new(3);

    let x = &letters.items[0];
    describe("original", x);
    describe("jitter", &jitter_shape(x, &cfg, &mut rng));
    describe("splice", &splice_neighbors(x, &letters.items[4], &letters.items[9], &cfg, &mut rng)?);
    describe("trim", &trim(x, &cfg, &mut rng)?);
    for _ in 0..3 {
        describe("non-class", &make_nonclass(profile, &letters, &cfg, &mut rng)?);
    }

    let epoch = augment_epoch(&letters, profile, &cfg, &mut rng)?;
    let extra = epoch.iter().filter(|s| s.label.is_some_and(|c| !c.is_letter())).count();
    println!("one epoch: {} letters in, {} items out, {extra} non-class", letters.len(), epoch.len());
    Ok(())
}
