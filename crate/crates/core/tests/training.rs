use inkline::augment::AugmentConfig;
use inkline::classifier::{fine_tune, init_model, load_model, save_model, train, Hparams, TrainOpts};
use inkline::domainadapt::{adapt, mixed_training_set, AdaptOpts};
use inkline::seqcore::{calibrate, Dataset};
use inkline::synthglyph::{gen_corpus, SubjectProfile, SynthCorpus};

fn calibrated(c: &SynthCorpus, ds: &Dataset) -> Dataset {
    ds.iter().map(|s| calibrate(s, c.calibration(&s.subject).unwrap())).collect()
}

fn small() -> Hparams {
    Hparams::new(1, 6, 6).with_resample_points(12)
}

#[test]
fn training_is_deterministic() {
    let c = gen_corpus(2, &[], &SubjectProfile::defaults()[..1], 3).unwrap();
    let letters = calibrated(&c, &c.letters);
    let opts = TrainOpts {
        max_epochs: 3,
        seed: 9,
        ..TrainOpts::default()
    };
    let aug = AugmentConfig::default();
    let run = || {
        let m = init_model(&small(), 1).unwrap();
        train(&m, &letters, &Dataset::default(), &opts, Some((&aug, &c.calibrations[0].1))).unwrap()
    };
    let (a, ha) = run();
    let (b, hb) = run();
    assert_eq!(a.params(), b.params());
    assert_eq!(ha, hb);

    let bytes = save_model(&a);
    assert_eq!(save_model(&b), bytes);
    assert_eq!(load_model(&bytes).unwrap().params(), a.params());
}

#[test]
fn adaptation_without_reversal_is_fine_tuning_on_the_mixed_set() {
    let profiles = SubjectProfile::defaults();
    let id = gen_corpus(2, &[], &profiles[..1], 5).unwrap();
    let ood = gen_corpus(1, &[], &[SubjectProfile::out_of_domain(20.0)], 6).unwrap();
    let (id_set, ood_set) = (calibrated(&id, &id.letters), calibrated(&ood, &ood.letters));
    let mut base = init_model(&small(), 2).unwrap();
    base.norm.scale = vec![0.05; 3];

    let opts = AdaptOpts {
        max_epochs: 3,
        learning_rate: 2e-3,
        seed: 4,
        fixed_lambda: Some(0.0),
        keep_best: false,
        ..AdaptOpts::default()
    };
    let (dm, history) = adapt(&base, &id_set, &ood_set, (&id_set, &ood_set), &opts).unwrap();
    assert!(history.iter().all(|r| r.lambda == 0.0));

    let (mixed, domains) = mixed_training_set(&id_set, &ood_set, None, opts.seed);
    assert_eq!(domains.iter().filter(|&&d| d == 1).count(), ood_set.len());
    assert_eq!(domains.len() - ood_set.len(), (1.09 * ood_set.len() as f64).ceil() as usize);
    let ft_opts = TrainOpts {
        max_epochs: opts.max_epochs,
        learning_rate: opts.learning_rate,
        weight_decay: opts.weight_decay,
        batch_size: opts.batch_size,
        seed: opts.seed,
        keep_best: false,
        ..TrainOpts::default()
    };
    let (ft, _) = fine_tune(&base, &mixed, &Dataset::default(), &ft_opts).unwrap();
    assert_eq!(dm.base.params(), ft.params());
}

#[test]
fn reversal_changes_the_features() {
    let profiles = SubjectProfile::defaults();
    let id = gen_corpus(2, &[], &profiles[..1], 5).unwrap();
    let ood = gen_corpus(1, &[], &[SubjectProfile::out_of_domain(20.0)], 6).unwrap();
    let (id_set, ood_set) = (calibrated(&id, &id.letters), calibrated(&ood, &ood.letters));
    let base = init_model(&small(), 2).unwrap();
    let run = |lambda| {
        let opts = AdaptOpts {
            max_epochs: 2,
            seed: 1,
            fixed_lambda: Some(lambda),
            keep_best: false,
            ..AdaptOpts::default()
        };
        adapt(&base, &id_set, &ood_set, (&id_set, &ood_set), &opts).unwrap().0
    };
    let (plain, reversed) = (run(0.0), run(1.0));
    let range = plain.base.feature_param_range();
    assert_ne!(plain.base.params()[range.clone()], reversed.base.params()[range]);
    // the head is trained the same way in both runs only if the features agree
    assert_ne!(plain.head.params(), reversed.head.params());
}
