use serde::{Deserialize, Serialize};

use super::{ChannelError, ChannelProfile};

/// OFDM numerology: tone count, cyclic prefix, sampling period, comb pilots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfdmGeometry {
    tones: usize,
    cp_len: usize,
    sample_period: f64,
    pilots: usize,
}

impl OfdmGeometry {
    pub fn new(tones: usize, cp_len: usize, sample_period: f64, pilots: usize) -> Result<Self, ChannelError> {
        if tones == 0 || cp_len == 0 || pilots == 0 {
            return Err(ChannelError::InvalidGeometry(format!(
                "tones ({tones}), CP length ({cp_len}) and pilots ({pilots}) must be positive"
            )));
        }
        if !tones.is_multiple_of(pilots) {
            return Err(ChannelError::InvalidGeometry(format!("{pilots} pilots do not divide {tones} tones")));
        }
        if !(sample_period.is_finite() && sample_period > 0.0) {
            return Err(ChannelError::InvalidGeometry(format!("sample period must be positive, got {sample_period}")));
        }
        Ok(Self { tones, cp_len, sample_period, pilots })
    }

    /// 12 MHz, N = 1024, L_cp = 128, P = 128.
    pub fn reference() -> Self {
        Self::new(1024, 128, 1.0 / 12e6, 128).expect("reference geometry is valid")
    }

    pub fn tones(&self) -> usize {
        self.tones
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn pilots(&self) -> usize {
        self.pilots
    }

    pub fn cp_ratio(&self) -> f64 {
        self.cp_len as f64 / self.tones as f64
    }

    /// `T_s = (1 + r_cp) N T`.
    pub fn symbol_duration(&self) -> f64 {
        (self.tones + self.cp_len) as f64 * self.sample_period
    }

    /// Tone index of pilot `p`; pilots are equispaced.
    pub fn pilot_tone(&self, p: usize) -> usize {
        p * (self.tones / self.pilots)
    }

    /// Checks that the profile is identifiable and fits inside the CP.
    pub fn check_profile(&self, profile: &ChannelProfile) -> Result<(), ChannelError> {
        if profile.path_count() > self.pilots {
            return Err(ChannelError::InvalidGeometry(format!(
                "{} paths exceed {} pilots",
                profile.path_count(),
                self.pilots
            )));
        }
        let max_tau = profile.normalized_delays(self.sample_period).into_iter().fold(0.0, f64::max);
        if max_tau > self.cp_len as f64 {
            return Err(ChannelError::InvalidGeometry(format!(
                "profile {} spans {max_tau:.2} samples, longer than the {}-sample CP",
                profile.name(),
                self.cp_len
            )));
        }
        Ok(())
    }
}
