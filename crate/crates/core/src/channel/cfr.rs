//! Time-averaged channel frequency response on the pilot comb.
//!
//! With the inter-carrier leakage dropped, pilot `p` of symbol `n` sees the
//! mean of the instantaneous response
//! `H(n, m, k) = sum_l h_l(n T_s + (L_cp + m) T) exp(-j 2 pi k tau_l / N)`
//! over the `N` useful samples `m` of the symbol. Because the sum over
//! paths is linear, the average is taken per path gain first and then
//! projected through the pilot steering matrix.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{ChannelError, ChannelProfile, FadingRealization, OfdmGeometry};

pub const DEFAULT_AVG_SAMPLES: usize = 64;

/// Produces the per-symbol time-averaged pilot CFR for one profile and
/// geometry.
#[derive(Debug, Clone)]
pub struct CfrSynthesizer {
    geometry: OfdmGeometry,
    delays: Vec<f64>,
    avg_samples: usize,
    drift_samples_per_s: f64,
    /// Pilot-major `P x L` steering matrix for the undrifted delays.
    steering: Vec<Complex64>,
}

impl CfrSynthesizer {
    /// `avg_samples` evenly spaced instants per symbol enter the average;
    /// `avg_samples == N` is the exact per-sample mean.
    pub fn new(profile: &ChannelProfile, geometry: OfdmGeometry, avg_samples: usize) -> Result<Self, ChannelError> {
        geometry.check_profile(profile)?;
        if avg_samples == 0 || avg_samples > geometry.tones() {
            return Err(ChannelError::InvalidGeometry(format!(
                "averaging samples must lie in [1, {}], got {avg_samples}",
                geometry.tones()
            )));
        }
        let delays = profile.normalized_delays(geometry.sample_period());
        let steering = steering(&geometry, &delays);
        Ok(Self { geometry, delays, avg_samples, drift_samples_per_s: 0.0, steering })
    }

    /// Lets every path delay drift linearly at `ns_per_s`. The drifted delay
    /// is frozen at the symbol centre; the intra-symbol change is far below
    /// a sample.
    pub fn with_delay_drift(mut self, ns_per_s: f64) -> Self {
        self.drift_samples_per_s = ns_per_s * 1e-9 / self.geometry.sample_period();
        self
    }

    pub fn geometry(&self) -> &OfdmGeometry {
        &self.geometry
    }

    pub fn avg_samples(&self) -> usize {
        self.avg_samples
    }

    /// Averaged pilot CFR of symbol `n`, length `P`.
    pub fn symbol(&self, fading: &FadingRealization, n: usize) -> Result<Vec<Complex64>, ChannelError> {
        let paths = self.delays.len();
        if fading.path_count() != paths {
            return Err(ChannelError::PathOutOfRange { path: paths, paths: fading.path_count() });
        }
        let g = &self.geometry;
        let t_sample = g.sample_period();
        let stride = g.tones() as f64 / self.avg_samples as f64;
        // Midpoints of `avg_samples` equal blocks of the useful part.
        let first_m = 0.5 * (stride - 1.0);
        let symbol_start = n as f64 * g.symbol_duration() + g.cp_len() as f64 * t_sample;
        let start = symbol_start + first_m * t_sample;
        let step = stride * t_sample;

        let gains = (0..paths)
            .map(|l| fading.path_gain_mean(l, start, step, self.avg_samples))
            .collect::<Result<Vec<_>, _>>()?;

        let drifted;
        let steering = if self.drift_samples_per_s != 0.0 {
            let centre = symbol_start + 0.5 * g.tones() as f64 * t_sample;
            let shift = self.drift_samples_per_s * centre;
            let delays: Vec<f64> = self.delays.iter().map(|d| d + shift).collect();
            drifted = steering(g, &delays);
            &drifted
        } else {
            &self.steering
        };

        Ok(steering
            .chunks_exact(paths)
            .map(|row| row.iter().zip(&gains).map(|(s, h)| s * h).sum())
            .collect())
    }
}

fn steering(g: &OfdmGeometry, delays: &[f64]) -> Vec<Complex64> {
    let n = g.tones() as f64;
    let mut out = Vec::with_capacity(g.pilots() * delays.len());
    for p in 0..g.pilots() {
        let k = g.pilot_tone(p) as f64;
        out.extend(delays.iter().map(|tau| Complex64::from_polar(1.0, -2.0 * PI * k * tau / n)));
    }
    out
}

/// Averaged pilot CFR of symbol `n` for a one-off call.
pub fn time_avg_cfr(
    fading: &FadingRealization,
    geometry: &OfdmGeometry,
    profile: &ChannelProfile,
    n: usize,
    avg_samples: usize,
) -> Result<Vec<Complex64>, ChannelError> {
    CfrSynthesizer::new(profile, *geometry, avg_samples)?.symbol(fading, n)
}
