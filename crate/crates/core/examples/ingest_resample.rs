//! Parses a frame CSV, calibrates it against a still-hold recording and
//! resamples it to the classifier's fixed length.
//!
//!     cargo run --example ingest_resample

use inkline::seqcore::{calibrate, calibration_mean, parse_frames, resample, ChannelSelector, N_RESAMPLE};

const WORD: &str = "td,yaw,pitch,roll,ax,ay,az
7,90.10,-10.34,-20.02,206.9,-374.1,1052.9
25,90.27,-9.86,-20.29,193.0,-401.7,1046.2
10,91.02,-9.01,-20.40,188.4,-399.0,1041.7
10,92.40,-8.12,-20.38,180.2,-390.5,1039.9
10,93.95,-7.60,-20.31,171.0,-377.2,1040.3
";

const STILL: &str = "td,yaw,pitch,roll,ax,ay,az
0,90.00,-10.30,-20.00,200.0,-380.0,1050.0
10,90.02,-10.28,-20.01,201.0,-381.0,1049.0
10,89.98,-10.32,-19.99,199.0,-379.0,1051.0
";

fn main() -> inkline::Result<()> {
    let seq = parse_frames(WORD.as_bytes())?;
    let profile = calibration_mean(&parse_frames(STILL.as_bytes())?)?;
    println!("still-hold mean: {:?}", profile.mean);

    let cal = calibrate(&seq, &profile);
    for (raw, c) in seq.frames.iter().zip(&cal.frames) {
        println!("yaw {:>7.2} -> {:>8.2}   pitch {:>7.2} -> {:>7.2}", raw.yaw, c.yaw, raw.pitch, c.pitch);
    }

    let fixed = resample(&cal, N_RESAMPLE, ChannelSelector::Rotation)?;
    println!(
        "resampled to {} channels x {} points; yaw runs {:.3} .. {:.3}",
        fixed.n_channels(),
        fixed.n_points(),
        fixed.value(0, 0),
        fixed.value(0, N_RESAMPLE - 1)
    );
    Ok(())
}
