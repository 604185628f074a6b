//! CSV and gnuplot output.
//!
//! Floats use Rust's shortest round-trip formatting, so every value read
//! back parses to the identical `f64`. Missing values are empty fields in
//! CSV and `NaN` in the gnuplot layout.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::grid::{GridResult, ScenarioSummary};
use super::trial::TrialResult;
use super::HarnessError;

pub const ESTIMATE_HEADER: [&str; 9] =
    ["scenario_id", "trial", "n", "fd_hat_hz", "eta_hat", "L_hat", "sigma_n2_hat", "newton_iters", "flags"];

pub const SUMMARY_HEADER: [&str; 12] = [
    "scenario_id",
    "fd_true",
    "snr_db",
    "duration_ms",
    "median_fd_hat",
    "mean_norm_err",
    "p10_fd_hat",
    "p90_fd_hat",
    "convergence_symbol",
    "median_norm_err",
    "trials",
    "failed_trials",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-symbol rows of every trial, in the given order.
pub fn write_estimates<W: Write>(out: W, trials: &[TrialResult]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ESTIMATE_HEADER)?;
    for t in trials {
        let trial = t.trial.to_string();
        for e in &t.estimates {
            w.write_record([
                t.scenario_id.as_str(),
                &trial,
                &e.index.to_string(),
                &e.fd_hat.to_string(),
                &e.eta_hat.to_string(),
                &e.l_hat.to_string(),
                &e.sigma_n2_hat.to_string(),
                &e.newton_iters.to_string(),
                &e.flags.to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_summary<W: Write>(out: W, summaries: &[ScenarioSummary]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for s in summaries {
        w.write_record([
            s.scenario_id.clone(),
            s.fd_true.to_string(),
            s.snr_db.to_string(),
            s.duration_ms.to_string(),
            opt(s.median_fd_hat),
            opt(s.mean_norm_err),
            opt(s.p10_fd_hat),
            opt(s.p90_fd_hat),
            opt(s.convergence_symbol),
            opt(s.median_norm_err),
            s.trials.to_string(),
            s.failed_trials.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Whitespace-separated summary with one data block per
/// (profile, f_d, duration), blocks separated by two blank lines so that
/// gnuplot's `index` selects them.
pub fn write_gnuplot<W: Write>(mut out: W, summaries: &[ScenarioSummary]) -> std::io::Result<()> {
    let num = |v: Option<f64>| v.map_or_else(|| "NaN".to_string(), |x| x.to_string());
    let mut block: Option<(&str, f64, f64)> = None;
    let mut index = 0;
    for s in summaries {
        let key = (s.profile.as_str(), s.fd_true, s.duration_ms);
        if block != Some(key) {
            if block.is_some() {
                writeln!(out)?;
                writeln!(out)?;
            }
            writeln!(out, "# index {index}: profile={} fd_true={} duration_ms={}", key.0, key.1, key.2)?;
            writeln!(out, "# snr_db median_fd_hat mean_norm_err p10_fd_hat p90_fd_hat convergence_symbol")?;
            block = Some(key);
            index += 1;
        }
        writeln!(
            out,
            "{} {} {} {} {} {}",
            s.snr_db,
            num(s.median_fd_hat),
            num(s.mean_norm_err),
            num(s.p10_fd_hat),
            num(s.p90_fd_hat),
            num(s.convergence_symbol)
        )?;
    }
    out.flush()
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| HarnessError::Output { path: path.display().to_string(), source })
}

/// Writes `estimates.csv`, `summary.csv` and optionally `summary.dat`
/// into `dir`, creating it if needed. Returns the written paths.
pub fn emit_csv(result: &GridResult, dir: &Path, gnuplot: bool) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir)
        .map_err(|source| HarnessError::Output { path: dir.display().to_string(), source })?;
    let estimates = dir.join("estimates.csv");
    let summary = dir.join("summary.csv");
    write_estimates(create(&estimates)?, &result.trials)?;
    write_summary(create(&summary)?, &result.summaries)?;
    let mut written = vec![estimates, summary];
    if gnuplot {
        let dat = dir.join("summary.dat");
        write_gnuplot(create(&dat)?, &result.summaries)
            .map_err(|source| HarnessError::Output { path: dat.display().to_string(), source })?;
        written.push(dat);
    }
    Ok(written)
}
