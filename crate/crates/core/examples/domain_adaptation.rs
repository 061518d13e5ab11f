//! Compares the frozen classifier, plain fine-tuning and adversarial
//! adaptation on a held-out writer with a tilted writing plane.
//!
//!     cargo run --release --example domain_adaptation -- [tilt] [epochs] [id_sample_size]

use inkline::augment::AugmentConfig;
use inkline::classifier::{accuracy, fine_tune, init_model, train, TrainOpts};
use inkline::cli::{desk_hparams, desk_train_opts};
use inkline::domainadapt::{adapt, AdaptOpts};
use inkline::seqcore::{calibrate, split_dataset, Dataset};
use inkline::synthglyph::{gen_corpus, SubjectProfile, SynthCorpus};

fn calibrated(c: &SynthCorpus) -> Dataset {
    c.letters
        .iter()
        .map(|s| calibrate(s, c.calibration(&s.subject).expect("profile")))
        .collect()
}

fn main() -> inkline::Result<()> {
    let mut args = std::env::args().skip(1);
    let tilt: f64 = args.next().map_or(30.0, |s| s.parse().expect("tilt"));
    let epochs: usize = args.next().map_or(80, |s| s.parse().expect("epochs"));
    // ID items mixed into adaptation; by default 1.09 times the labeled OOD set
    let id_sample_size: Option<usize> = args.next().map(|s| s.parse().expect("id sample size"));

    let noise = 2.0;
    let writers: Vec<SubjectProfile> = SubjectProfile::defaults()
        .into_iter()
        .map(|mut p| {
            p.noise_sigma = noise;
            p
        })
        .collect();
    let id = gen_corpus(80, &[], &writers, 0)?;
    let (tr, dev, _) = split_dataset(&calibrated(&id), (9, 1, 1), 0)?;
    let (base, _) = train(
        &init_model(&desk_hparams(), 0)?,
        &tr,
        &dev,
        &desk_train_opts(),
        Some((&AugmentConfig::default(), &id.calibrations[0].1)),
    )?;

    let mut writer = SubjectProfile::out_of_domain(tilt);
    writer.noise_sigma = 2.0 * noise;
    let ood = gen_corpus(20, &[], &[writer], 100)?;
    let (otr, odev, ote) = split_dataset(&calibrated(&ood), (2, 1, 17), 0)?;
    println!("new writer: {} labeled, {} dev, {} test", otr.len(), odev.len(), ote.len());

    let ft_opts = TrainOpts {
        max_epochs: epochs,
        weight_decay: 0.05,
        ..TrainOpts::default()
    };
    let (tuned, _) = fine_tune(&base, &otr, &odev, &ft_opts)?;
    let da_opts = AdaptOpts {
        max_epochs: epochs,
        id_sample_size,
        ..AdaptOpts::default()
    };
    let (adapted, history) = adapt(&base, &tr, &otr, (&dev, &odev), &da_opts)?;
    if let Some(last) = history.last() {
        println!("final lambda {:.3}, domain accuracy {:.3}", last.lambda, last.dom_acc);
    }
    println!("frozen     {:.4}", accuracy(&base, &ote)?);
    println!("fine-tuned {:.4}", accuracy(&tuned, &ote)?);
    println!("adapted    {:.4}", accuracy(&adapted.base, &ote)?);
    Ok(())
}
