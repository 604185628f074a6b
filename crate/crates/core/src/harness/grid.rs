//! Parallel execution of scenario grids and per-scenario aggregation.

use std::cmp::Ordering;

use rayon::prelude::*;

use super::metrics::{median, percentile};
use super::trial::{run_trial, TrialResult};
use super::{HarnessError, Scenario};

#[derive(Debug, Clone, PartialEq)]
pub struct TrialFailure {
    pub scenario_id: String,
    pub trial: usize,
    pub message: String,
}

/// Aggregate over the trials of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSummary {
    pub scenario_id: String,
    pub profile: String,
    pub fd_true: f64,
    pub snr_db: f64,
    pub duration_ms: f64,
    /// Median of the final per-trial estimates.
    pub median_fd_hat: Option<f64>,
    pub mean_norm_err: Option<f64>,
    pub median_norm_err: Option<f64>,
    pub p10_fd_hat: Option<f64>,
    pub p90_fd_hat: Option<f64>,
    /// Median per-trial convergence symbol, counting unconverged trials as
    /// never; `None` when that median is never.
    pub convergence_symbol: Option<f64>,
    pub trials: usize,
    pub failed_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GridResult {
    /// Successful trials, sorted by scenario key then trial index.
    pub trials: Vec<TrialResult>,
    pub failures: Vec<TrialFailure>,
    /// One row per scenario, sorted by (profile, f_d, SNR, duration).
    pub summaries: Vec<ScenarioSummary>,
}

fn scenario_order(a: &Scenario, b: &Scenario) -> Ordering {
    a.profile_name()
        .cmp(b.profile_name())
        .then(a.fd_hz.total_cmp(&b.fd_hz))
        .then(a.snr_db.total_cmp(&b.snr_db))
        .then(a.duration_ms.total_cmp(&b.duration_ms))
        .then(a.id.cmp(&b.id))
}

/// Summary of one scenario from its successful trials, in trial order.
pub fn summarize(s: &Scenario, trials: &[&TrialResult], failed_trials: usize) -> ScenarioSummary {
    let finals: Vec<f64> = trials.iter().map(|t| t.summary.final_fd_hat).collect();
    let errors: Vec<f64> = trials.iter().filter_map(|t| t.summary.final_norm_err).collect();
    let mean_norm_err = (!errors.is_empty()).then(|| errors.iter().sum::<f64>() / errors.len() as f64);
    let conv: Vec<f64> = trials
        .iter()
        .map(|t| t.summary.convergence_symbol.map_or(f64::INFINITY, |c| c as f64))
        .collect();
    ScenarioSummary {
        scenario_id: s.id.clone(),
        profile: s.profile_name().to_string(),
        fd_true: s.fd_hz,
        snr_db: s.snr_db,
        duration_ms: s.duration_ms,
        median_fd_hat: median(&finals),
        mean_norm_err,
        median_norm_err: median(&errors),
        p10_fd_hat: percentile(&finals, 10.0),
        p90_fd_hat: percentile(&finals, 90.0),
        convergence_symbol: median_with_never(&conv),
        trials: trials.len(),
        failed_trials,
    }
}

/// Median where `inf` means "never"; `None` if the median is never.
fn median_with_never(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let m = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    m.is_finite().then_some(m)
}

/// Runs every trial of every scenario on `parallelism` worker threads.
///
/// All scenarios are validated before any trial starts. A failing trial is
/// recorded in `failures` and the rest of the grid continues. The result
/// does not depend on `parallelism`.
pub fn run_grid(scenarios: &[Scenario], parallelism: usize) -> Result<GridResult, HarnessError> {
    if parallelism == 0 {
        return Err(HarnessError::Config("parallelism must be at least 1".into()));
    }
    for s in scenarios {
        s.validate()?;
    }
    let mut order: Vec<&Scenario> = scenarios.iter().collect();
    order.sort_by(|a, b| scenario_order(a, b));
    if let Some(w) = order.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(HarnessError::Config(format!("duplicate scenario `{}`", w[0].id)));
    }
    let jobs: Vec<(usize, usize)> =
        order.iter().enumerate().flat_map(|(i, s)| (0..s.trials).map(move |t| (i, t))).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<TrialResult, HarnessError>> =
        pool.install(|| jobs.par_iter().map(|&(i, t)| run_trial(order[i], t)).collect());

    let mut result = GridResult::default();
    let mut per_scenario: Vec<(Vec<usize>, usize)> = vec![(Vec::new(), 0); order.len()];
    for (&(i, t), outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(r) => {
                per_scenario[i].0.push(result.trials.len());
                result.trials.push(r);
            }
            Err(e) => {
                per_scenario[i].1 += 1;
                result.failures.push(TrialFailure { scenario_id: order[i].id.clone(), trial: t, message: e.to_string() });
            }
        }
    }
    for (s, (idx, failed)) in order.iter().zip(&per_scenario) {
        let trials: Vec<&TrialResult> = idx.iter().map(|&k| &result.trials[k]).collect();
        let summary = summarize(s, &trials, *failed);
        result.summaries.push(summary);
    }
    Ok(result)
}
