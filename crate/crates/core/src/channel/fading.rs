//! Sum-of-sinusoids Rayleigh fading with a Jakes (Clarke) spectrum.
//!
//! Each path is a bank of `M` oscillators with angles of arrival `theta_i`
//! drawn uniformly on `[0, 2 pi)`. The in-phase branch runs at
//! `f_d cos(theta_i)` and the quadrature branch at `f_d sin(theta_i)`, each
//! with its own uniform phase:
//!
//! ```text
//! h(t) = sqrt(sigma^2 / M) * sum_i [ cos(w_i t + a_i) + j cos(v_i t + b_i) ]
//! ```
//!
//! Over the ensemble both branches carry `sigma^2 / 2` and the time
//! correlation is `sigma^2 J0(2 pi f_d dt)`. Gains are closed-form in `t`,
//! so they can be evaluated or averaged at arbitrary instants.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ChannelError, ChannelProfile};
use crate::seed;

pub const DEFAULT_OSCILLATORS: usize = 64;
pub const MIN_OSCILLATORS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
struct Oscillator {
    /// Angular frequencies of the in-phase and quadrature branches.
    w_i: f64,
    w_q: f64,
    phase_i: f64,
    phase_q: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct PathBank {
    amplitude: f64,
    oscillators: Vec<Oscillator>,
}

/// One realization of every path gain process of a profile.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingRealization {
    doppler_hz: f64,
    seed: u64,
    paths: Vec<PathBank>,
}

/// Draws a realization. Path `l` uses its own sub-seed of `seed`, so the
/// paths are mutually independent.
pub fn make_fading(
    profile: &ChannelProfile,
    doppler_hz: f64,
    seed: u64,
    oscillators: usize,
) -> Result<FadingRealization, ChannelError> {
    if !(doppler_hz.is_finite() && doppler_hz >= 0.0) {
        return Err(ChannelError::InvalidFading(format!("Doppler must be finite and >= 0, got {doppler_hz}")));
    }
    if oscillators < MIN_OSCILLATORS {
        return Err(ChannelError::InvalidFading(format!(
            "need at least {MIN_OSCILLATORS} oscillators per path, got {oscillators}"
        )));
    }
    let wd = 2.0 * PI * doppler_hz;
    let count = oscillators;
    let paths = profile
        .powers()
        .iter()
        .enumerate()
        .map(|(l, &power)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, l as u64));
            let oscillators = (0..count)
                .map(|_| {
                    let theta = 2.0 * PI * rng.random::<f64>();
                    Oscillator {
                        w_i: wd * theta.cos(),
                        w_q: wd * theta.sin(),
                        phase_i: 2.0 * PI * rng.random::<f64>(),
                        phase_q: 2.0 * PI * rng.random::<f64>(),
                    }
                })
                .collect();
            PathBank { amplitude: (power / count as f64).sqrt(), oscillators }
        })
        .collect();
    Ok(FadingRealization { doppler_hz, seed, paths })
}

impl FadingRealization {
    pub fn doppler_hz(&self) -> f64 {
        self.doppler_hz
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }

    fn bank(&self, path: usize) -> Result<&PathBank, ChannelError> {
        self.paths
            .get(path)
            .ok_or(ChannelError::PathOutOfRange { path, paths: self.paths.len() })
    }

    /// Complex gain of `path` at time `t` seconds.
    pub fn path_gain(&self, path: usize, t: f64) -> Result<Complex64, ChannelError> {
        let bank = self.bank(path)?;
        let (mut re, mut im) = (0.0, 0.0);
        for o in &bank.oscillators {
            re += (o.w_i * t + o.phase_i).cos();
            im += (o.w_q * t + o.phase_q).cos();
        }
        Ok(Complex64::new(re, im) * bank.amplitude)
    }

    /// Mean of `path_gain` over the `count` instants `start + j * step`.
    ///
    /// Evaluated in closed form: the average of `exp(j w (start + j step))`
    /// is a Dirichlet kernel in `w * step`, so the cost does not grow with
    /// `count`.
    pub fn path_gain_mean(&self, path: usize, start: f64, step: f64, count: usize) -> Result<Complex64, ChannelError> {
        let bank = self.bank(path)?;
        if count == 0 {
            return Err(ChannelError::InvalidFading("cannot average over zero instants".into()));
        }
        let (mut re, mut im) = (0.0, 0.0);
        for o in &bank.oscillators {
            re += mean_cos(o.w_i, o.phase_i, start, step, count);
            im += mean_cos(o.w_q, o.phase_q, start, step, count);
        }
        Ok(Complex64::new(re, im) * bank.amplitude)
    }
}

/// `(1/M) sum_{j<M} cos(w (t0 + j dt) + phase)`.
fn mean_cos(w: f64, phase: f64, t0: f64, dt: f64, m: usize) -> f64 {
    let half = 0.5 * w * dt;
    let s = half.sin();
    if s.abs() < 1e-12 {
        // Kernel is 1 up to O((w dt M)^2) ~ 1e-24.
        let centre = t0 + 0.5 * (m as f64 - 1.0) * dt;
        return (w * centre + phase).cos();
    }
    let mf = m as f64;
    let gain = (mf * half).sin() / (mf * s);
    let centre = t0 + 0.5 * (mf - 1.0) * dt;
    gain * (w * centre + phase).cos()
}
