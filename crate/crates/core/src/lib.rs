//! Word reconstruction from continuously written stylus motion.
//!
//! The pipeline splits a word recording into equal parts, classifies every
//! contiguous span with an LSTM letter classifier, searches the span lattice
//! for the best-scoring letter chains, and settles on a final word with a
//! frequency-dictionary spelling corrector.

pub mod augment;
pub mod autocorrect;
pub mod classifier;
pub mod cli;
pub mod decoder;
pub mod domainadapt;
pub mod error;
mod linalg;
pub mod pipeline;
pub mod seqcore;
pub mod synthglyph;

pub use error::{Error, Result};
