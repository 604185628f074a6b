//! One Monte-Carlo trial: channel, LS front end and tracker wired together.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::metrics::{convergence_symbol, median, normalized_error};
use super::{HarnessError, Scenario};
use crate::channel::{make_fading, CfrSynthesizer};
use crate::frontend::ls_observe;
use crate::seed;
use crate::tracker::{DopplerEstimate, DopplerTracker, EstimateFlags};

/// Symbols carrying each flag over one trial.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlagCounts {
    pub warmup: usize,
    pub eta_clamped: usize,
    pub not_converged: usize,
    pub rank_collapse: usize,
    pub no_signal: usize,
    pub inversion_failed: usize,
}

impl FlagCounts {
    pub fn add(&mut self, f: &EstimateFlags) {
        self.warmup += f.warmup as usize;
        self.eta_clamped += f.eta_clamped as usize;
        self.not_converged += f.not_converged as usize;
        self.rank_collapse += f.rank_collapse as usize;
        self.no_signal += f.no_signal as usize;
        self.inversion_failed += f.inversion_failed as usize;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub final_fd_hat: f64,
    /// Median over the symbols past warmup.
    pub median_fd_hat: Option<f64>,
    /// Normalized error of the final estimate; `None` for `f_d = 0`.
    pub final_norm_err: Option<f64>,
    pub convergence_symbol: Option<usize>,
    pub flags: FlagCounts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub scenario_id: String,
    pub trial: usize,
    pub fd_true: f64,
    pub estimates: Vec<DopplerEstimate>,
    pub summary: TrialSummary,
}

impl TrialResult {
    pub fn new(scenario_id: String, trial: usize, fd_true: f64, estimates: Vec<DopplerEstimate>) -> Self {
        let summary = TrialSummary::from_estimates(&estimates, fd_true);
        Self { scenario_id, trial, fd_true, estimates, summary }
    }
}

impl TrialSummary {
    pub fn from_estimates(estimates: &[DopplerEstimate], fd_true: f64) -> Self {
        let mut flags = FlagCounts::default();
        for e in estimates {
            flags.add(&e.flags);
        }
        let settled: Vec<f64> = estimates.iter().filter(|e| !e.flags.warmup).map(|e| e.fd_hat).collect();
        let final_fd_hat = estimates.last().map_or(f64::NAN, |e| e.fd_hat);
        let errors: Option<Vec<f64>> = (fd_true > 0.0).then(|| {
            estimates
                .iter()
                .map(|e| if e.flags.warmup { f64::NAN } else { (e.fd_hat - fd_true).abs() / fd_true })
                .collect()
        });
        Self {
            final_fd_hat,
            median_fd_hat: median(&settled),
            final_norm_err: normalized_error(final_fd_hat, fd_true).filter(|e| e.is_finite()),
            convergence_symbol: errors.as_deref().and_then(convergence_symbol),
            flags,
        }
    }
}

/// Runs trial `trial` of `s`. Deterministic in `(s, trial)`.
pub fn run_trial(s: &Scenario, trial: usize) -> Result<TrialResult, HarnessError> {
    s.validate()?;
    let root = s.trial_seed(trial);
    let fading = make_fading(&s.profile, s.fd_hz, seed::derive(root, 0), s.oscillators)?;
    let synth =
        CfrSynthesizer::new(&s.profile, s.geometry, s.avg_samples)?.with_delay_drift(s.delay_drift_ns_per_s);
    let mut noise = ChaCha8Rng::seed_from_u64(seed::derive(root, 1));
    let mut tracker = DopplerTracker::new(s.tracker)?;

    let count = s.symbol_count();
    let mut estimates = Vec::with_capacity(count);
    for n in 0..count {
        let cfr = synth.symbol(&fading, n)?;
        let snap = ls_observe(n, &cfr, s.snr_db, &mut noise);
        estimates.push(tracker.step(&snap)?);
    }
    Ok(TrialResult::new(s.id.clone(), trial, s.fd_hz, estimates))
}
