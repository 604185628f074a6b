//! Doubly selective WSSUS channel synthesis.

mod cfr;
mod fading;
mod geometry;
mod profile;

pub use cfr::{time_avg_cfr, CfrSynthesizer, DEFAULT_AVG_SAMPLES};
pub use fading::{make_fading, FadingRealization, DEFAULT_OSCILLATORS, MIN_OSCILLATORS};
pub use geometry::OfdmGeometry;
pub use profile::{ChannelProfile, ProfileDef};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("invalid channel profile: {0}")]
    InvalidProfile(String),
    #[error("invalid OFDM geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid fading parameters: {0}")]
    InvalidFading(String),
    #[error("path {path} out of range for a {paths}-path realization")]
    PathOutOfRange { path: usize, paths: usize },
}
