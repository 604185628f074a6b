//! Monte-Carlo experiment runner: scenarios, trials, grids and CSV output.
//!
//! One trial wires a fading realization through CFR synthesis, LS pilot
//! observation and the tracker for `floor(duration / T_s)` symbols.
//! Randomness is keyed by `(master_seed, profile, trial)` only, so the same
//! trial index sees the same fading and noise draws at every `f_d`, SNR and
//! duration of a sweep.

mod config;
mod grid;
mod metrics;
mod report;
mod trial;

pub use config::{
    GeometryConfig, RunConfig, SimulationConfig, SweepConfig, TrackerParams, DEFAULT_SNR_DB, PRESETS,
};
pub use grid::{run_grid, summarize, GridResult, ScenarioSummary, TrialFailure};
pub use metrics::{
    convergence_symbol, median, normalized_error, percentile, CONVERGENCE_HOLD, CONVERGENCE_THRESHOLD,
    CONVERGENCE_WINDOW,
};
pub use report::{emit_csv, write_estimates, write_gnuplot, write_summary, ESTIMATE_HEADER, SUMMARY_HEADER};
pub use trial::{run_trial, FlagCounts, TrialResult, TrialSummary};

use thiserror::Error;

use crate::channel::{ChannelError, ChannelProfile, OfdmGeometry, MIN_OSCILLATORS};
use crate::seed;
use crate::tracker::{TrackerConfig, TrackerError};

/// Largest `f_d T_s` inside the validity region of the estimator.
pub const MAX_NORMALIZED_DOPPLER: f64 = 0.1;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Tracker(#[from] TrackerError),
    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// True for errors detected before any computation.
    pub fn is_config(&self) -> bool {
        matches!(self, HarnessError::Config(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub profile: ChannelProfile,
    pub fd_hz: f64,
    pub snr_db: f64,
    pub duration_ms: f64,
    pub geometry: OfdmGeometry,
    pub tracker: TrackerConfig,
    pub trials: usize,
    pub master_seed: u64,
    pub oscillators: usize,
    pub avg_samples: usize,
    pub delay_drift_ns_per_s: f64,
}

impl Scenario {
    /// Scenario with reference geometry, tracker and simulation settings.
    pub fn reference(profile: ChannelProfile, fd_hz: f64, snr_db: f64, duration_ms: f64) -> Self {
        let geometry = OfdmGeometry::reference();
        let cfg = RunConfig::default();
        Self {
            id: Self::make_id(profile.name(), fd_hz, snr_db, duration_ms),
            profile,
            fd_hz,
            snr_db,
            duration_ms,
            geometry,
            tracker: TrackerConfig::reference(geometry),
            trials: cfg.trials,
            master_seed: cfg.master_seed,
            oscillators: cfg.simulation.oscillators,
            avg_samples: cfg.simulation.avg_samples,
            delay_drift_ns_per_s: cfg.simulation.delay_drift_ns_per_s,
        }
    }

    pub fn make_id(profile: &str, fd_hz: f64, snr_db: f64, duration_ms: f64) -> String {
        format!("{profile}_fd{fd_hz}_snr{snr_db}_d{duration_ms}ms")
    }

    /// Checks every parameter; returns warnings for settings that are
    /// legal but outside the estimator's validity region.
    pub fn validate(&self) -> Result<Vec<String>, HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(format!("scenario {}: {msg}", self.id)));
        if !(self.fd_hz.is_finite() && self.fd_hz >= 0.0) {
            return bad(format!("f_d must be finite and non-negative, got {}", self.fd_hz));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return bad(format!("invalid SNR {}", self.snr_db));
        }
        if !(self.duration_ms.is_finite() && self.duration_ms > 0.0) {
            return bad(format!("duration must be positive, got {} ms", self.duration_ms));
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.oscillators < MIN_OSCILLATORS {
            return bad(format!("need at least {MIN_OSCILLATORS} oscillators, got {}", self.oscillators));
        }
        if self.avg_samples == 0 || self.avg_samples > self.geometry.tones() {
            return bad(format!("avg_samples must lie in 1..={}, got {}", self.geometry.tones(), self.avg_samples));
        }
        if !self.delay_drift_ns_per_s.is_finite() {
            return bad("delay drift must be finite".into());
        }
        if self.tracker.geometry != self.geometry {
            return bad("tracker geometry differs from scenario geometry".into());
        }
        self.geometry
            .check_profile(&self.profile)
            .map_err(|e| HarnessError::Config(format!("scenario {}: {e}", self.id)))?;
        self.tracker
            .validate()
            .map_err(|e| HarnessError::Config(format!("scenario {}: {e}", self.id)))?;
        if self.symbol_count() == 0 {
            return bad(format!("{} ms is shorter than one OFDM symbol", self.duration_ms));
        }
        let mut warnings = Vec::new();
        let norm = self.fd_hz * self.geometry.symbol_duration();
        if norm > MAX_NORMALIZED_DOPPLER {
            warnings.push(format!(
                "scenario {}: f_d T_s = {norm:.3} exceeds {MAX_NORMALIZED_DOPPLER}; estimates are unreliable",
                self.id
            ));
        }
        Ok(warnings)
    }

    /// Symbols processed per trial.
    pub fn symbol_count(&self) -> usize {
        // Rounded first so 40 ms / 96 us lands on 416, not 416 - 1 ulp.
        let ratio = self.duration_ms * 1e-3 / self.geometry.symbol_duration();
        (ratio * 1e9).round().div_euclid(1e9) as usize
    }

    /// Root seed of one trial.
    pub fn trial_seed(&self, trial: usize) -> u64 {
        seed::derive(self.master_seed ^ seed::label_hash(self.profile.name()), trial as u64)
    }

    pub fn profile_name(&self) -> &str {
        self.profile.name()
    }
}
