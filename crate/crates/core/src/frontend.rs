//! Pilot extraction and least-squares channel estimation.
//!
//! Pilots are unit-modulus, so dividing by them leaves the AWGN statistics
//! unchanged and the LS estimate is the true averaged CFR plus circular
//! white noise. Channel power is normalized to one, hence
//! `sigma_n^2 = 10^(-snr_db / 10)`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// LS estimate of the averaged CFR on the pilot comb for one symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotSnapshot {
    pub index: usize,
    pub values: Vec<Complex64>,
    pub snr_db: f64,
}

impl PilotSnapshot {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-entry noise variance for an SNR in dB; `+inf` means noiseless.
pub fn noise_variance(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 10.0)
    }
}

/// Adds `CN(0, sigma_n^2)` noise to each pilot of `true_cfr`.
pub fn ls_observe<R: Rng + ?Sized>(index: usize, true_cfr: &[Complex64], snr_db: f64, rng: &mut R) -> PilotSnapshot {
    let var = noise_variance(snr_db);
    let values = if var == 0.0 {
        true_cfr.to_vec()
    } else {
        let scale = (0.5 * var).sqrt();
        true_cfr
            .iter()
            .map(|h| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                h + Complex64::new(re, im) * scale
            })
            .collect()
    };
    PilotSnapshot { index, values, snr_db }
}
