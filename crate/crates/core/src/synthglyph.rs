//! Synthetic letter and word recordings.
//!
//! A simple pen model: the stylus tip traces an uppercase letterform and the
//! orientation follows the tip's displacement from where the letter began
//! (yaw horizontally, pitch vertically), while roll drifts slowly. Each
//! [`SubjectProfile`] distorts the mapping with its own gains, tilt, speed
//! and sensor noise.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::augment::RandomSource;
use crate::error::{Error, Result};
use crate::seqcore::{calibration_mean, CalibrationProfile, Class, Dataset, Frame, Sequence};

/// Sampling interval of generated recordings, milliseconds.
pub const FRAME_MS: u32 = 10;

/// Target mean letter length in frames.
pub const MEAN_LETTER_FRAMES: f64 = 75.0;

/// A single-stroke polyline tracing an uppercase letter in the unit box
/// (y pointing up). Pen-up travel is folded into the stroke.
#[derive(Clone, Debug, PartialEq)]
pub struct GlyphTemplate {
    pub letter: char,
    pub stroke: Vec<(f64, f64)>,
}

const GLYPHS: [&[(f64, f64)]; 26] = [
    // A
    &[(0.0, 0.0), (0.5, 1.0), (1.0, 0.0), (0.75, 0.5), (0.25, 0.5)],
    // B
    &[
        (0.0, 0.0), (0.0, 1.0), (0.6, 1.0), (0.8, 0.9), (0.8, 0.6), (0.6, 0.5), (0.0, 0.5),
        (0.7, 0.5), (0.9, 0.35), (0.9, 0.15), (0.7, 0.0), (0.0, 0.0),
    ],
    // C
    &[(0.9, 0.85), (0.7, 1.0), (0.3, 1.0), (0.05, 0.75), (0.05, 0.25), (0.3, 0.0), (0.7, 0.0), (0.9, 0.15)],
    // D
    &[(0.0, 0.0), (0.0, 1.0), (0.5, 1.0), (0.9, 0.7), (0.9, 0.3), (0.5, 0.0), (0.0, 0.0)],
    // E
    &[(0.9, 1.0), (0.0, 1.0), (0.0, 0.5), (0.7, 0.5), (0.0, 0.5), (0.0, 0.0), (0.9, 0.0)],
    // F
    &[(0.9, 1.0), (0.0, 1.0), (0.0, 0.5), (0.7, 0.5), (0.0, 0.5), (0.0, 0.0)],
    // G
    &[
        (0.9, 0.85), (0.7, 1.0), (0.3, 1.0), (0.05, 0.7), (0.05, 0.3), (0.3, 0.0), (0.7, 0.0),
        (0.95, 0.3), (0.95, 0.5), (0.55, 0.5),
    ],
    // H
    &[(0.0, 1.0), (0.0, 0.0), (0.0, 0.5), (1.0, 0.5), (1.0, 1.0), (1.0, 0.0)],
    // I
    &[(0.2, 1.0), (0.8, 1.0), (0.5, 1.0), (0.5, 0.0), (0.2, 0.0), (0.8, 0.0)],
    // J
    &[(0.3, 1.0), (0.9, 1.0), (0.7, 1.0), (0.7, 0.2), (0.5, 0.0), (0.25, 0.0), (0.1, 0.25)],
    // K
    &[(0.0, 1.0), (0.0, 0.0), (0.0, 0.45), (0.9, 1.0), (0.25, 0.6), (0.9, 0.0)],
    // L
    &[(0.0, 1.0), (0.0, 0.0), (0.8, 0.0)],
    // M
    &[(0.0, 0.0), (0.0, 1.0), (0.5, 0.4), (1.0, 1.0), (1.0, 0.0)],
    // N
    &[(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)],
    // O
    &[
        (0.5, 1.0), (0.15, 0.85), (0.0, 0.5), (0.15, 0.15), (0.5, 0.0), (0.85, 0.15), (1.0, 0.5),
        (0.85, 0.85), (0.5, 1.0),
    ],
    // P
    &[(0.0, 0.0), (0.0, 1.0), (0.7, 1.0), (0.9, 0.85), (0.9, 0.65), (0.7, 0.5), (0.0, 0.5)],
    // Q
    &[
        (0.5, 1.0), (0.15, 0.85), (0.0, 0.5), (0.15, 0.15), (0.5, 0.0), (0.85, 0.15), (1.0, 0.5),
        (0.85, 0.85), (0.5, 1.0), (0.6, 0.3), (1.0, 0.0),
    ],
    // R
    &[
        (0.0, 0.0), (0.0, 1.0), (0.7, 1.0), (0.9, 0.85), (0.9, 0.65), (0.7, 0.5), (0.0, 0.5),
        (0.4, 0.5), (0.9, 0.0),
    ],
    // S
    &[
        (0.9, 0.85), (0.6, 1.0), (0.3, 1.0), (0.05, 0.8), (0.2, 0.55), (0.8, 0.45), (0.95, 0.2),
        (0.7, 0.0), (0.3, 0.0), (0.05, 0.15),
    ],
    // T
    &[(0.0, 1.0), (1.0, 1.0), (0.5, 1.0), (0.5, 0.0)],
    // U
    &[(0.0, 1.0), (0.0, 0.3), (0.2, 0.05), (0.5, 0.0), (0.8, 0.05), (1.0, 0.3), (1.0, 1.0)],
    // V
    &[(0.0, 1.0), (0.5, 0.0), (1.0, 1.0)],
    // W
    &[(0.0, 1.0), (0.25, 0.0), (0.5, 0.6), (0.75, 0.0), (1.0, 1.0)],
    // X
    &[(0.0, 1.0), (1.0, 0.0), (1.0, 1.0), (0.0, 0.0)],
    // Y
    &[(0.0, 1.0), (0.5, 0.5), (1.0, 1.0), (0.5, 0.5), (0.5, 0.0)],
    // Z
    &[(0.0, 1.0), (1.0, 1.0), (0.0, 0.0), (1.0, 0.0)],
];

impl GlyphTemplate {
    pub fn for_letter(letter: char) -> Result<GlyphTemplate> {
        let class = Class::from_letter(letter)?;
        Ok(GlyphTemplate {
            letter: letter.to_ascii_uppercase(),
            stroke: GLYPHS[class.index()].to_vec(),
        })
    }

    pub fn arc_length(&self) -> f64 {
        self.stroke
            .windows(2)
            .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
            .sum()
    }

    /// `n` points spaced evenly by arc length from the first vertex to the
    /// last, inclusive.
    pub fn walk(&self, n: usize) -> Vec<(f64, f64)> {
        let seg_len: Vec<f64> = self
            .stroke
            .windows(2)
            .map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt())
            .collect();
        let total: f64 = seg_len.iter().sum();
        let mut out = Vec::with_capacity(n);
        let mut seg = 0;
        let mut seg_start = 0.0;
        for k in 0..n {
            let s = if n > 1 { total * k as f64 / (n - 1) as f64 } else { 0.0 };
            while seg + 1 < seg_len.len() && seg_start + seg_len[seg] < s {
                seg_start += seg_len[seg];
                seg += 1;
            }
            let (a, b) = (self.stroke[seg], self.stroke[seg + 1]);
            let w = if seg_len[seg] > 0.0 {
                ((s - seg_start) / seg_len[seg]).clamp(0.0, 1.0)
            } else {
                0.0
            };
            out.push((a.0 + (b.0 - a.0) * w, a.1 + (b.1 - a.1) * w));
        }
        out
    }
}

fn mean_arc_length() -> f64 {
    let total: f64 = ('A'..='Z')
        .map(|c| GlyphTemplate::for_letter(c).expect("letter").arc_length())
        .sum();
    total / 26.0
}

/// How one simulated writer maps pen motion to sensor readings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubjectProfile {
    pub name: String,
    /// Degrees of yaw and pitch per unit of horizontal and vertical pen travel.
    pub scale: (f64, f64),
    /// Rotation of the writing plane, degrees.
    pub tilt: f64,
    /// Per-frame Gaussian noise on the rotation channels, degrees.
    pub noise_sigma: f64,
    /// Frames per unit of stroke arc length.
    pub speed: f64,
    /// Resting orientation (yaw, pitch, roll) of the stylus, degrees.
    pub rest: (f64, f64, f64),
    pub seed: u64,
}

impl SubjectProfile {
    /// Speed giving an average letter length of 75 frames, times `factor`.
    pub fn calibrated_speed(factor: f64) -> f64 {
        MEAN_LETTER_FRAMES / mean_arc_length() * factor
    }

    /// The three default in-domain writers.
    pub fn defaults() -> Vec<SubjectProfile> {
        vec![
            SubjectProfile {
                name: "s1".into(),
                scale: (24.0, 22.0),
                tilt: 0.0,
                noise_sigma: 0.5,
                speed: Self::calibrated_speed(1.0),
                rest: (90.1, -10.3, -20.0),
                seed: 101,
            },
            SubjectProfile {
                name: "s2".into(),
                scale: (21.0, 25.0),
                tilt: 4.0,
                noise_sigma: 0.6,
                speed: Self::calibrated_speed(0.96),
                rest: (88.4, -8.9, -18.7),
                seed: 202,
            },
            SubjectProfile {
                name: "s3".into(),
                scale: (26.0, 20.0),
                tilt: -4.0,
                noise_sigma: 0.5,
                speed: Self::calibrated_speed(1.04),
                rest: (91.6, -11.8, -21.2),
                seed: 303,
            },
        ]
    }

    /// A held-out writer: strongly tilted writing plane and doubled noise.
    pub fn out_of_domain(tilt: f64) -> SubjectProfile {
        SubjectProfile {
            name: "ood".into(),
            scale: (23.0, 23.0),
            tilt,
            noise_sigma: 1.1,
            speed: Self::calibrated_speed(1.0),
            rest: (90.0, -10.0, -20.0),
            seed: 909,
        }
    }

    fn orientation(&self, dx: f64, dy: f64) -> (f64, f64) {
        let (s, c) = self.tilt.to_radians().sin_cos();
        let rx = c * dx - s * dy;
        let ry = s * dx + c * dy;
        (self.rest.0 + self.scale.0 * rx, self.rest.1 + self.scale.1 * ry)
    }
}

fn noise(profile: &SubjectProfile) -> Normal<f64> {
    Normal::new(0.0, profile.noise_sigma.max(0.0)).expect("finite sigma")
}

fn frame_at(yaw: f64, pitch: f64, roll: f64, td: u32) -> Frame {
    Frame {
        td,
        yaw,
        pitch,
        roll,
        ax: 200.0,
        ay: -380.0,
        az: 1050.0,
    }
}

/// One recording of `letter`.
pub fn gen_letter(letter: char, profile: &SubjectProfile, rng: &mut RandomSource) -> Result<Sequence> {
    let glyph = GlyphTemplate::for_letter(letter)?;
    let pace = rng.random_range(0.9..=1.1);
    let n = ((profile.speed * glyph.arc_length() * pace).round() as usize).clamp(50, 110);
    let pts = glyph.walk(n);
    let (x0, y0) = pts[0];
    let sensor = noise(profile);
    let drift_step = Normal::new(0.0, 0.15).expect("finite sigma");
    let mut roll = 0.0;
    let mut frames = Vec::with_capacity(n);
    let mut prev = pts[0];
    for (k, &(x, y)) in pts.iter().enumerate() {
        let (yaw, pitch) = profile.orientation(x - x0, y - y0);
        roll = 0.97 * roll + drift_step.sample(rng);
        let mut f = frame_at(
            yaw + sensor.sample(rng),
            pitch + sensor.sample(rng),
            profile.rest.2 + roll + sensor.sample(rng),
            if k == 0 { 0 } else { FRAME_MS },
        );
        // pen acceleration shows up as a small lateral reading
        f.ax += 400.0 * (x - prev.0);
        f.ay += 400.0 * (y - prev.1);
        prev = (x, y);
        frames.push(f);
    }
    Ok(Sequence {
        frames,
        label: Some(Class::from_letter(letter)?),
        subject: profile.name.clone(),
        session: format!("{}-letters", profile.name),
    })
}

/// A continuously written word: letters joined by 5 to 15 interpolated
/// transition frames. The result is unlabeled.
pub fn gen_word(word: &str, profile: &SubjectProfile, rng: &mut RandomSource) -> Result<Sequence> {
    if word.is_empty() || !word.chars().all(|c| c.is_ascii_alphabetic()) {
        return Err(Error::InvalidArgument(format!("cannot synthesize word {word:?}")));
    }
    let sensor = noise(profile);
    let mut frames: Vec<Frame> = Vec::new();
    for ch in word.chars() {
        let letter = gen_letter(ch, profile, rng)?;
        if let (Some(a), Some(b)) = (frames.last().copied(), letter.frames.first()) {
            let gap = rng.random_range(5..=15);
            for k in 1..=gap {
                let w = k as f64 / (gap + 1) as f64;
                let lerp = |p: f64, q: f64| p + (q - p) * w;
                frames.push(frame_at(
                    lerp(a.yaw, b.yaw) + sensor.sample(rng),
                    lerp(a.pitch, b.pitch) + sensor.sample(rng),
                    lerp(a.roll, b.roll) + sensor.sample(rng),
                    FRAME_MS,
                ));
            }
        }
        let mut letter_frames = letter.frames;
        if !frames.is_empty() {
            letter_frames[0].td = FRAME_MS;
        }
        frames.extend(letter_frames);
    }
    Ok(Sequence {
        frames,
        label: None,
        subject: profile.name.clone(),
        session: format!("{}-words", profile.name),
    })
}

/// A still-hold recording of `seconds` length and its channel means.
pub fn gen_calibration(profile: &SubjectProfile, seconds: f64, rng: &mut RandomSource) -> Result<CalibrationProfile> {
    let n = ((seconds * 1000.0 / FRAME_MS as f64).ceil() as usize).max(2);
    let sensor = noise(profile);
    let frames = (0..n)
        .map(|k| {
            frame_at(
                profile.rest.0 + sensor.sample(rng),
                profile.rest.1 + sensor.sample(rng),
                profile.rest.2 + sensor.sample(rng),
                if k == 0 { 0 } else { FRAME_MS },
            )
        })
        .collect();
    let mut seq = Sequence::new(frames).with_subject(profile.name.clone());
    seq.session = format!("{}-still", profile.name);
    calibration_mean(&seq)
}

/// Generated letters, words and calibration recordings for a set of writers.
#[derive(Clone, Debug)]
pub struct SynthCorpus {
    pub letters: Dataset,
    pub words: Dataset,
    /// Target word of each item in `words`, lowercase.
    pub word_labels: Vec<String>,
    /// Calibration profile per writer, keyed by subject name.
    pub calibrations: Vec<(String, CalibrationProfile)>,
}

impl SynthCorpus {
    pub fn calibration(&self, subject: &str) -> Option<&CalibrationProfile> {
        self.calibrations.iter().find(|(s, _)| s == subject).map(|(_, p)| p)
    }
}

/// `letters_per_class` recordings of every letter and 3 to 4 recordings of
/// every word, for each writer.
pub fn gen_corpus(
    letters_per_class: usize,
    word_list: &[String],
    profiles: &[SubjectProfile],
    seed: u64,
) -> Result<SynthCorpus> {
    let mut letters = Vec::with_capacity(letters_per_class * 26 * profiles.len());
    let mut words = Vec::new();
    let mut word_labels = Vec::new();
    let mut calibrations = Vec::with_capacity(profiles.len());
    for (si, p) in profiles.iter().enumerate() {
        let base = seed ^ p.seed.rotate_left(17) ^ ((si as u64) << 48);
        let mut cal_rng = RandomSource::stream(base, 0);
        calibrations.push((p.name.clone(), gen_calibration(p, 12.0, &mut cal_rng)?));

        for (li, ch) in ('A'..='Z').enumerate() {
            for rep in 0..letters_per_class {
                let mut rng = RandomSource::stream(base, 1 + (li * 100_000 + rep) as u64);
                letters.push(gen_letter(ch, p, &mut rng)?);
            }
        }

        let mut reps_rng = RandomSource::stream(base, 2 << 32);
        for (wi, w) in word_list.iter().enumerate() {
            let reps = reps_rng.random_range(3..=4);
            for rep in 0..reps {
                let mut rng = RandomSource::stream(base, (3 << 32) + (wi * 100 + rep) as u64);
                words.push(gen_word(w, p, &mut rng)?);
                word_labels.push(w.to_ascii_lowercase());
            }
        }
    }
    Ok(SynthCorpus {
        letters: Dataset::new(letters),
        words: Dataset::new(words),
        word_labels,
        calibrations,
    })
}

/// The bundled 30-word evaluation list.
pub fn default_word_list() -> Vec<String> {
    include_str!("../data/wordlist.txt")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_fit_unit_box() {
        for c in 'A'..='Z' {
            let g = GlyphTemplate::for_letter(c).unwrap();
            assert!(g.stroke.len() >= 2);
            assert!(g.stroke.iter().all(|&(x, y)| (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y)));
        }
    }

    #[test]
    fn walk_hits_endpoints() {
        let g = GlyphTemplate::for_letter('Z').unwrap();
        let pts = g.walk(40);
        assert_eq!(pts[0], (0.0, 1.0));
        let last = pts[39];
        assert!((last.0 - 1.0).abs() < 1e-12 && last.1.abs() < 1e-12);
    }

    #[test]
    fn letter_lengths_average_near_75() {
        let p = &SubjectProfile::defaults()[0];
        let mut rng = RandomSource::new(5);
        let mut total = 0;
        for rep in 0..4 {
            for c in 'A'..='Z' {
                let s = gen_letter(c, p, &mut rng).unwrap();
                assert!((50..=110).contains(&s.len()), "{c} rep {rep}: {}", s.len());
                total += s.len();
            }
        }
        let mean = total as f64 / 104.0;
        assert!((70.0..=80.0).contains(&mean), "mean {mean}");
    }

    #[test]
    fn generation_is_deterministic() {
        let p = SubjectProfile {
            noise_sigma: 0.0,
            ..SubjectProfile::defaults()[1].clone()
        };
        let a = gen_letter('K', &p, &mut RandomSource::new(3)).unwrap();
        let b = gen_letter('K', &p, &mut RandomSource::new(3)).unwrap();
        assert_eq!(a, b);
        let c = gen_letter('R', &p, &mut RandomSource::new(3)).unwrap();
        assert_ne!(a.frames, c.frames);
        let w1 = gen_word("fox", &p, &mut RandomSource::new(8)).unwrap();
        let w2 = gen_word("fox", &p, &mut RandomSource::new(8)).unwrap();
        assert_eq!(w1, w2);
    }

    #[test]
    fn word_length_arithmetic() {
        let p = &SubjectProfile::defaults()[0];
        let mut rng = RandomSource::new(12);
        let word = gen_word("cat", p, &mut rng).unwrap();
        let mut rng = RandomSource::new(12);
        let mut letters = 0;
        for ch in "cat".chars() {
            letters += gen_letter(ch, p, &mut rng).unwrap().len();
            if ch != 't' {
                let _gap: usize = rng.random_range(5..=15);
            }
        }
        let extra = word.len() - letters;
        assert!((10..=30).contains(&extra), "transition frames {extra}");
        assert!(word.label.is_none());

        let mut rng = RandomSource::new(1);
        let single = gen_word("q", p, &mut rng).unwrap();
        let mut rng = RandomSource::new(1);
        assert_eq!(single.frames, gen_letter('Q', p, &mut rng).unwrap().frames);
    }

    #[test]
    fn calibration_recording_is_long_enough() {
        let p = &SubjectProfile::defaults()[2];
        let cal = gen_calibration(p, 12.0, &mut RandomSource::new(0)).unwrap();
        assert!(cal.duration_ms() >= 10_000);
        assert!((cal.mean[0] - p.rest.0).abs() < 0.2);
    }

    #[test]
    fn corpus_counts() {
        let words = vec!["dog".to_string(), "fox".to_string()];
        let c = gen_corpus(2, &words, &SubjectProfile::defaults(), 4).unwrap();
        assert_eq!(c.letters.len(), 2 * 26 * 3);
        assert!((12..=24).contains(&c.words.len()));
        assert_eq!(c.words.len(), c.word_labels.len());
        assert_eq!(c.calibrations.len(), 3);
        let again = gen_corpus(2, &words, &SubjectProfile::defaults(), 4).unwrap();
        assert_eq!(again.letters, c.letters);
        assert_eq!(again.words, c.words);
    }

    #[test]
    fn word_list_has_thirty_words() {
        assert_eq!(default_word_list().len(), 30);
    }
}
