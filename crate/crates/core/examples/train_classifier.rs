//! Trains the letter classifier on synthetic writers and saves it.
//!
//!     cargo run --release --example train_classifier -- [epochs] [out.inkm]

use std::path::PathBuf;

use inkline::augment::AugmentConfig;
use inkline::classifier::{accuracy, init_model, save_model_file, train};
use inkline::cli::{desk_hparams, desk_train_opts};
use inkline::seqcore::{calibrate, split_dataset, Dataset};
use inkline::synthglyph::{gen_corpus, SubjectProfile};

fn main() -> inkline::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().map_or(30, |s| s.parse().expect("epochs"));
    let out = args.next().map_or_else(|| std::env::temp_dir().join("inkline-letters.inkm"), PathBuf::from);

    let corpus = gen_corpus(80, &[], &SubjectProfile::defaults(), 0)?;
    let letters: Dataset = corpus
        .letters
        .iter()
        .map(|s| calibrate(s, corpus.calibration(&s.subject).expect("profile")))
        .collect();
    let (tr, dev, test) = split_dataset(&letters, (9, 1, 1), 0)?;
    println!("train {} / dev {} / test {}", tr.len(), dev.len(), test.len());

    let h = desk_hparams();
    let opts = inkline::classifier::TrainOpts {
        max_epochs: epochs,
        ..desk_train_opts()
    };
    let aug = AugmentConfig::default();
    let (model, history) = train(&init_model(&h, 0)?, &tr, &dev, &opts, Some((&aug, &corpus.calibrations[0].1)))?;
    for r in history.iter().step_by(5.max(epochs / 6)) {
        println!("epoch {:>3}: loss {:.4} train {:.3} dev {:.3}", r.epoch, r.train_loss, r.train_acc, r.dev_acc);
    }
    println!("{} parameters, test accuracy {:.4}", model.param_count(), accuracy(&model, &test)?);
    save_model_file(&model, &out)?;
    println!("saved {}", out.display());
    Ok(())
}
