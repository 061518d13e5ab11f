//! Trains a classifier, then reconstructs synthetic continuously written
//! words and compares the selection kernels.
//!
//!     cargo run --release --example reconstruct_words -- [epochs]

use inkline::augment::AugmentConfig;
use inkline::autocorrect::{build_index, FrequencyDictionary, Kernel};
use inkline::classifier::{init_model, train, TrainOpts};
use inkline::cli::{desk_hparams, desk_train_opts};
use inkline::pipeline::{compare_kernels, reconstruct, PipelineConfig};
use inkline::seqcore::{calibrate, split_dataset, Dataset};
use inkline::synthglyph::{default_word_list, gen_corpus, SubjectProfile};

fn main() -> inkline::Result<()> {
    let epochs: usize = std::env::args().nth(1).map_or(30, |s| s.parse().expect("epochs"));
    let corpus = gen_corpus(80, &default_word_list(), &SubjectProfile::defaults(), 0)?;
    let cal = |ds: &Dataset| -> Dataset {
        ds.iter()
            .map(|s| calibrate(s, corpus.calibration(&s.subject).expect("profile")))
            .collect()
    };
    let (letters, words) = (cal(&corpus.letters), cal(&corpus.words));
    let (tr, dev, _) = split_dataset(&letters, (9, 1, 1), 0)?;
    let opts = TrainOpts {
        max_epochs: epochs,
        ..desk_train_opts()
    };
    let aug = AugmentConfig::default();
    let (model, _) = train(&init_model(&desk_hparams(), 0)?, &tr, &dev, &opts, Some((&aug, &corpus.calibrations[0].1)))?;

    let index = build_index(&FrequencyDictionary::bundled(), 2)?;
    let cfg = PipelineConfig::default();

    // one word in detail; raw recording plus its writer's still-hold profile
    let raw = &corpus.words.items[0];
    let r = reconstruct(raw, corpus.calibration(&raw.subject), &cfg, &model, &index)?;
    println!("\"{}\" -> \"{}\" ({} splits)", corpus.word_labels[0], r.word, r.segments.n_splits);
    for (t, (_, hit)) in r.trajectories.iter().zip(&r.scored).take(5) {
        println!("  {:<8} mean {:>7.3} -> {}", t.word(), t.mean_score, hit.corrected);
    }

    let kernels: Vec<Kernel> = Kernel::NAMES.iter().map(|n| Kernel::from_name(n, None)).collect::<inkline::Result<_>>()?;
    for (k, m) in compare_kernels(&words, &corpus.word_labels, &cfg, &kernels, &model, &index)? {
        println!("{:<9} accuracy {:.4}  MED {:.4}", k.name(), m.accuracy(), m.mean_edit_distance());
    }
    Ok(())
}
