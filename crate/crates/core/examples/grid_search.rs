//! Sweeps the granularity and beam width over a synthetic word set.
//!
//!     cargo run --release --example grid_search -- [epochs]

use inkline::augment::AugmentConfig;
use inkline::autocorrect::{build_index, FrequencyDictionary};
use inkline::classifier::{init_model, train, TrainOpts};
use inkline::cli::{desk_hparams, desk_train_opts};
use inkline::pipeline::{grid_search, PipelineConfig};
use inkline::seqcore::{calibrate, split_dataset, Dataset};
use inkline::synthglyph::{default_word_list, gen_corpus, SubjectProfile};

fn main() -> inkline::Result<()> {
    let epochs: usize = std::env::args().nth(1).map_or(20, |s| s.parse().expect("epochs"));
    let words_list = default_word_list();
    let corpus = gen_corpus(60, &words_list[..10], &SubjectProfile::defaults(), 2)?;
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
    let gs: Vec<usize> = (3..=9).collect();
    let report = grid_search(&gs, &[5, 10, 15, 20], &words, &corpus.word_labels, &PipelineConfig::default(), &model, &index)?;
    print!("{}", report.table());
    Ok(())
}
