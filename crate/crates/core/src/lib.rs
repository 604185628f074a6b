//! Maximum Doppler spread estimation for comb-pilot OFDM links.
//!
//! The crate has two halves. The estimator ([`tracker`]) follows the
//! delay-subspace of the zero-lag and lagged pilot autocorrelation matrices
//! with QR-based low-rank recursions, picks the model order with MDL, and
//! maps the ratio of the tracked diagonals to a Doppler spread by solving a
//! Bessel-series polynomial with Newton's method ([`numerics`]). The
//! simulator ([`channel`], [`frontend`]) synthesizes WSSUS Rayleigh channels
//! with a Jakes spectrum and produces noisy LS pilot estimates, and
//! [`harness`] runs Monte-Carlo experiment grids over both.

pub mod channel;
pub mod frontend;
pub mod harness;
pub mod numerics;
pub mod seed;
pub mod tracker;

pub use num_complex::Complex64;
