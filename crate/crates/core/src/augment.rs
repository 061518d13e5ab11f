//! Per-epoch stochastic augmentation of letter sequences and generation of
//! non-class samples.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seqcore::{calibrate, CalibrationProfile, Class, Dataset, Frame, Sequence};

/// Seeded deterministic generator. Identical seeds give identical draws.
#[derive(Clone, Debug)]
pub struct RandomSource(ChaCha8Rng);

impl RandomSource {
    pub fn new(seed: u64) -> RandomSource {
        RandomSource(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Independent stream derived from `seed`; stream `i` never overlaps `j`.
    pub fn stream(seed: u64, stream: u64) -> RandomSource {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RandomSource(rng)
    }

    /// Draws a fresh seed for deriving child streams.
    pub fn fork_seed(&mut self) -> u64 {
        self.0.next_u64()
    }
}

impl RngCore for RandomSource {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    /// Standard deviation of per-frame rotation noise, degrees.
    pub noise_sigma: f64,
    pub max_rotation_deg: f64,
    pub stretch_lo: f64,
    pub stretch_hi: f64,
    /// Fraction of each donor spliced onto the sequence. Zero disables
    /// splicing inside [`augment_epoch`].
    pub splice_fraction: f64,
    /// Lower bound on spliced donor frames; zero lets the fraction round to
    /// nothing.
    pub splice_min_frames: usize,
    pub bridge_frames: usize,
    pub trim_max_fraction: f64,
    pub nonclass_max_subseq_fraction: f64,
    /// Share of each augmented epoch made of freshly generated non-class
    /// samples.
    pub nonclass_fraction: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            noise_sigma: 1.0,
            max_rotation_deg: 5.0,
            stretch_lo: 1.0,
            stretch_hi: 1.3,
            splice_fraction: 0.15,
            splice_min_frames: 1,
            bridge_frames: 5,
            trim_max_fraction: 0.10,
            nonclass_max_subseq_fraction: 1.0 / 3.0,
            nonclass_fraction: 1.0 / 27.0,
        }
    }
}

impl AugmentConfig {
    /// Every augmentation reduced to the identity and no non-class samples.
    pub fn identity() -> AugmentConfig {
        AugmentConfig {
            noise_sigma: 0.0,
            max_rotation_deg: 0.0,
            stretch_lo: 1.0,
            stretch_hi: 1.0,
            splice_fraction: 0.0,
            splice_min_frames: 0,
            trim_max_fraction: 0.0,
            nonclass_fraction: 0.0,
            ..AugmentConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let frac_ok = |f: f64| (0.0..=1.0).contains(&f);
        if !(self.stretch_lo <= self.stretch_hi && self.stretch_lo > 0.0)
            || self.noise_sigma < 0.0
            || self.max_rotation_deg < 0.0
            || !frac_ok(self.splice_fraction)
            || !frac_ok(self.trim_max_fraction)
            || !frac_ok(self.nonclass_max_subseq_fraction)
            || !(0.0..1.0).contains(&self.nonclass_fraction)
        {
            return Err(Error::InvalidArgument(format!("invalid augmentation config {self:?}")));
        }
        Ok(())
    }
}

type Mat3 = [[f64; 3]; 3];

fn matmul3(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Rotation matrix for intrinsic Z-Y-X (yaw, pitch, roll) angles in degrees.
pub fn euler_to_matrix(yaw: f64, pitch: f64, roll: f64) -> Mat3 {
    let (sy, cy) = yaw.to_radians().sin_cos();
    let (sp, cp) = pitch.to_radians().sin_cos();
    let (sr, cr) = roll.to_radians().sin_cos();
    [
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ]
}

/// Inverse of [`euler_to_matrix`], angles in degrees.
pub fn matrix_to_euler(m: &Mat3) -> (f64, f64, f64) {
    let pitch = (-m[2][0]).clamp(-1.0, 1.0).asin();
    let yaw = m[1][0].atan2(m[0][0]);
    let roll = m[2][1].atan2(m[2][2]);
    (yaw.to_degrees(), pitch.to_degrees(), roll.to_degrees())
}

fn axis_angle(axis: [f64; 3], angle_deg: f64) -> Mat3 {
    let [x, y, z] = axis;
    let (s, c) = angle_deg.to_radians().sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

/// `angle` shifted by a multiple of 360 to land nearest `reference`.
fn unwrap_near(angle: f64, reference: f64) -> f64 {
    angle + 360.0 * ((reference - angle) / 360.0).round()
}

fn uniform(rng: &mut RandomSource, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Gaussian rotation noise, one global rotation and per-channel stretch.
pub fn jitter_shape(seq: &Sequence, cfg: &AugmentConfig, rng: &mut RandomSource) -> Sequence {
    let mut out = seq.clone();

    if cfg.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, cfg.noise_sigma).expect("sigma is positive");
        for f in &mut out.frames {
            f.yaw += noise.sample(rng);
            f.pitch += noise.sample(rng);
            f.roll += noise.sample(rng);
        }
    }

    // axis uniform on the sphere, angle uniform in [0, max]
    let axis: [f64; 3] = {
        let v: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(rng));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        v.map(|x| x / n)
    };
    let angle = uniform(rng, 0.0, cfg.max_rotation_deg);
    if angle > 0.0 {
        let global = axis_angle(axis, angle);
        for f in &mut out.frames {
            let r = matmul3(&global, &euler_to_matrix(f.yaw, f.pitch, f.roll));
            let (y, p, r) = matrix_to_euler(&r);
            f.yaw = unwrap_near(y, f.yaw);
            f.pitch = unwrap_near(p, f.pitch);
            f.roll = unwrap_near(r, f.roll);
        }
    }

    let scale: [f64; 6] = std::array::from_fn(|_| uniform(rng, cfg.stretch_lo, cfg.stretch_hi));
    for f in &mut out.frames {
        let mut v = f.channels();
        for (x, s) in v.iter_mut().zip(scale) {
            *x *= s;
        }
        f.set_channels(v);
    }
    out
}

fn splice_count(len: usize, cfg: &AugmentConfig) -> usize {
    let n = (cfg.splice_fraction * len as f64).ceil() as usize;
    n.max(cfg.splice_min_frames).min(len)
}

fn bridge(from: &Frame, to: &Frame, count: usize) -> impl Iterator<Item = Frame> {
    let a = from.channels();
    let b = to.channels();
    let td = to.td.max(1);
    (1..=count).map(move |k| {
        let w = k as f64 / (count + 1) as f64;
        let mut f = Frame {
            td,
            ..Default::default()
        };
        f.set_channels(std::array::from_fn(|c| a[c] + (b[c] - a[c]) * w));
        f
    })
}

/// Prepends the tail of `donor_pre` and appends the head of `donor_post`,
/// each joined by linearly interpolated bridge frames.
pub fn splice_neighbors(
    seq: &Sequence,
    donor_pre: &Sequence,
    donor_post: &Sequence,
    cfg: &AugmentConfig,
    _rng: &mut RandomSource,
) -> Result<Sequence> {
    if donor_pre.is_empty() || donor_post.is_empty() {
        return Err(Error::EmptyInput("splice donor has no frames".into()));
    }
    if seq.is_empty() {
        return Err(Error::EmptyInput("spliced sequence has no frames".into()));
    }
    let n_pre = splice_count(donor_pre.len(), cfg);
    let n_post = splice_count(donor_post.len(), cfg);
    let pre = &donor_pre.frames[donor_pre.len() - n_pre..];
    let post = &donor_post.frames[..n_post];

    let first = &seq.frames[0];
    let last = seq.frames.last().expect("non-empty");
    let mut frames = Vec::with_capacity(seq.len() + n_pre + n_post + 2 * cfg.bridge_frames);
    frames.extend_from_slice(pre);
    if let Some(p) = pre.last() {
        frames.extend(bridge(p, first, cfg.bridge_frames));
    }
    frames.extend_from_slice(&seq.frames);
    if let Some(q) = post.first() {
        frames.extend(bridge(last, q, cfg.bridge_frames));
    }
    frames.extend_from_slice(post);

    Ok(Sequence {
        frames,
        ..seq.clone()
    })
}

/// Removes up to `trim_max_fraction` of the frames from each end.
pub fn trim(seq: &Sequence, cfg: &AugmentConfig, rng: &mut RandomSource) -> Result<Sequence> {
    let len = seq.len();
    if len < 4 {
        return Err(Error::TooShort { needed: 4, got: len });
    }
    let cap = ((cfg.trim_max_fraction * len as f64).floor() as usize).min((len - 2) / 2);
    let head = rng.random_range(0..=cap);
    let tail = rng.random_range(0..=cap);
    Ok(seq.slice(head, len - tail))
}

/// A non-class sample: either a slice of the still-hold recording (calibrated
/// against `profile`, like the letters) or a short fragment of a random
/// letter.
pub fn make_nonclass(
    profile: &CalibrationProfile,
    letters: &Dataset,
    cfg: &AugmentConfig,
    rng: &mut RandomSource,
) -> Result<Sequence> {
    let src = &profile.source_frames;
    if src.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: src.len(),
        });
    }
    if letters.is_empty() {
        return Err(Error::EmptyInput("no letters to cut non-class fragments from".into()));
    }
    let mut out = if rng.random_bool(0.5) {
        let hi = src.len().min(110);
        let lo = src.len().min(30).max(2);
        let len = rng.random_range(lo..=hi);
        let start = rng.random_range(0..=src.len() - len);
        calibrate(&src.slice(start, start + len), profile)
    } else {
        let letter = &letters.items[rng.random_range(0..letters.len())];
        let max_len = ((letter.len() as f64 * cfg.nonclass_max_subseq_fraction).floor() as usize)
            .max(2)
            .min(letter.len());
        let len = rng.random_range(max_len.min(2)..=max_len);
        let start = rng.random_range(0..=letter.len() - len);
        letter.slice(start, start + len)
    };
    out.label = Some(Class::NONCLASS);
    Ok(out)
}

fn augment_one(
    seq: &Sequence,
    pool: &Dataset,
    cfg: &AugmentConfig,
    rng: &mut RandomSource,
) -> Result<Sequence> {
    let mut s = jitter_shape(seq, cfg, rng);
    if cfg.splice_fraction > 0.0 && !pool.is_empty() {
        let pre = &pool.items[rng.random_range(0..pool.len())];
        let post = &pool.items[rng.random_range(0..pool.len())];
        s = splice_neighbors(&s, pre, post, cfg, rng)?;
    }
    if s.len() >= 4 {
        s = trim(&s, cfg, rng)?;
    }
    Ok(s)
}

/// One epoch's worth of augmented training data. Each item draws from its
/// own stream derived from `rng`, so the result does not depend on
/// processing order.
pub fn augment_epoch(
    ds: &Dataset,
    profile: &CalibrationProfile,
    cfg: &AugmentConfig,
    rng: &mut RandomSource,
) -> Result<Dataset> {
    let epoch_seed = rng.fork_seed();
    let letters: Dataset = ds
        .iter()
        .filter(|s| s.label.is_some_and(Class::is_letter))
        .cloned()
        .collect();

    let mut items = Vec::with_capacity(ds.len() + ds.len() / 26 + 1);
    for (i, seq) in ds.iter().enumerate() {
        let mut item_rng = RandomSource::stream(epoch_seed, i as u64);
        items.push(augment_one(seq, &letters, cfg, &mut item_rng)?);
    }

    let n_nonclass = if cfg.nonclass_fraction > 0.0 && !letters.is_empty() {
        (ds.len() as f64 * cfg.nonclass_fraction / (1.0 - cfg.nonclass_fraction)).round() as usize
    } else {
        0
    };
    for j in 0..n_nonclass {
        let mut item_rng = RandomSource::stream(epoch_seed, (ds.len() + j) as u64);
        let raw = make_nonclass(profile, &letters, cfg, &mut item_rng)?;
        let mut s = augment_one(&raw, &letters, cfg, &mut item_rng)?;
        s.label = Some(Class::NONCLASS);
        items.push(s);
    }
    Ok(Dataset::new(items))
}
