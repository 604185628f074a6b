use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use doppler_core::channel::ChannelProfile;
use doppler_core::harness::{emit_csv, run_grid, run_trial, Scenario};

const BIN: &str = env!("CARGO_BIN_EXE_doppler-sim");

fn scenario(fd: f64, snr: f64, duration_ms: f64, trials: usize) -> Scenario {
    Scenario { trials, ..Scenario::reference(ChannelProfile::eva(), fd, snr, duration_ms) }
}

fn read_csv(path: &Path) -> Vec<BTreeMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(str::to_string).collect();
    r.records()
        .map(|rec| header.iter().cloned().zip(rec.unwrap().iter().map(str::to_string)).collect())
        .collect()
}

fn num(row: &BTreeMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap()
}

fn interp_percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn plain_median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) }
}

/// Convergence rule recomputed from per-symbol rows: trailing 50-symbol
/// median of the errors of non-warmup rows, below 0.1 for 100 symbols.
fn first_settled(errors: &[Option<f64>]) -> Option<usize> {
    let mut run = 0;
    for n in 0..errors.len() {
        let window: Vec<f64> = errors[n.saturating_sub(49)..=n].iter().flatten().copied().collect();
        let ok = !window.is_empty() && plain_median(window) < 0.1;
        run = if ok { run + 1 } else { 0 };
        if run == 100 {
            return Some(n - 99);
        }
    }
    None
}

#[test]
fn single_cell_grid_equals_run_trial() {
    let s = scenario(400.0, 15.0, 20.0, 1);
    let grid = run_grid(std::slice::from_ref(&s), 1).unwrap();
    let direct = run_trial(&s, 0).unwrap();
    assert_eq!(grid.trials.len(), 1);
    assert_eq!(format!("{:?}", grid.trials[0]), format!("{direct:?}"));
}

#[test]
fn summary_is_recomputable_from_estimates() {
    let scenarios = [scenario(400.0, 15.0, 40.0, 5), scenario(200.0, 5.0, 40.0, 5)];
    let dir = tempfile::tempdir().unwrap();
    emit_csv(&run_grid(&scenarios, 1).unwrap(), dir.path(), false).unwrap();
    let rows = read_csv(&dir.path().join("estimates.csv"));
    let summary = read_csv(&dir.path().join("summary.csv"));
    assert_eq!(summary.len(), 2);

    for srow in &summary {
        let id = &srow["scenario_id"];
        let fd = num(srow, "fd_true");
        let mut per_trial: BTreeMap<usize, Vec<&BTreeMap<String, String>>> = BTreeMap::new();
        for r in rows.iter().filter(|r| &r["scenario_id"] == id) {
            per_trial.entry(r["trial"].parse().unwrap()).or_default().push(r);
        }
        assert_eq!(per_trial.len(), 5);

        let finals: Vec<f64> = per_trial.values().map(|t| num(t.last().unwrap(), "fd_hat_hz")).collect();
        let mut sorted = finals.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(num(srow, "median_fd_hat"), interp_percentile(&sorted, 50.0));
        assert_eq!(num(srow, "p10_fd_hat"), interp_percentile(&sorted, 10.0));
        assert_eq!(num(srow, "p90_fd_hat"), interp_percentile(&sorted, 90.0));
        let errs: Vec<f64> = finals.iter().map(|f| (f - fd).abs() / fd).collect();
        assert_eq!(num(srow, "mean_norm_err"), errs.iter().sum::<f64>() / errs.len() as f64);
        assert_eq!(num(srow, "median_norm_err"), plain_median(errs));

        let conv: Vec<f64> = per_trial
            .values()
            .map(|t| {
                let errors: Vec<Option<f64>> = t
                    .iter()
                    .map(|r| {
                        (!r["flags"].split('|').any(|f| f == "warmup"))
                            .then(|| (num(r, "fd_hat_hz") - fd).abs() / fd)
                    })
                    .collect();
                first_settled(&errors).map_or(f64::INFINITY, |c| c as f64)
            })
            .collect();
        let expected = plain_median(conv);
        let field = &srow["convergence_symbol"];
        if expected.is_finite() {
            assert_eq!(field.parse::<f64>().unwrap(), expected, "{id}");
        } else {
            assert!(field.is_empty(), "{id}: {field}");
        }
    }
}

#[test]
fn short_trial_is_all_warmup() {
    let s = scenario(400.0, 15.0, 1.5, 1);
    let dir = tempfile::tempdir().unwrap();
    emit_csv(&run_grid(&[s], 1).unwrap(), dir.path(), false).unwrap();
    let rows = read_csv(&dir.path().join("estimates.csv"));
    assert_eq!(rows.len(), 15);
    for r in &rows {
        assert!(r["flags"].split('|').any(|f| f == "warmup"), "row {}: {}", r["n"], r["flags"]);
    }
}

#[test]
fn parallelism_does_not_change_output() {
    let scenarios = [scenario(400.0, 10.0, 10.0, 3), scenario(600.0, 20.0, 10.0, 2)];
    let files = [1usize, 3].map(|p| {
        let dir = tempfile::tempdir().unwrap();
        emit_csv(&run_grid(&scenarios, p).unwrap(), dir.path(), true).unwrap();
        ["estimates.csv", "summary.csv", "summary.dat"].map(|f| std::fs::read(dir.path().join(f)).unwrap())
    });
    assert_eq!(files[0], files[1]);
}

#[test]
fn distinct_trials_are_uncorrelated() {
    let s = scenario(400.0, 15.0, 150.0, 12);
    let grid = run_grid(&[s], 1).unwrap();
    // First differences of the error series past warmup. Even these keep a
    // lag-1 autocorrelation near 0.85, so a single pair's sample correlation
    // scatters by about 0.15 under independence; the mean over all pairs
    // estimates the population value.
    let diffs: Vec<Vec<f64>> = grid
        .trials
        .iter()
        .map(|t| {
            let e: Vec<f64> = t.estimates.iter().filter(|e| !e.flags.warmup).map(|e| e.fd_hat - 400.0).collect();
            e.windows(2).map(|w| w[1] - w[0]).collect()
        })
        .collect();
    let corr = |a: &[f64], b: &[f64]| {
        let k = a.len().min(b.len());
        let (a, b) = (&a[..k], &b[..k]);
        let ma = a.iter().sum::<f64>() / k as f64;
        let mb = b.iter().sum::<f64>() / k as f64;
        let sab: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let saa: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let sbb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        sab / (saa * sbb).sqrt()
    };
    let mut pairs = Vec::new();
    for i in 0..diffs.len() {
        for j in i + 1..diffs.len() {
            pairs.push(corr(&diffs[i], &diffs[j]));
        }
    }
    let mean = pairs.iter().sum::<f64>() / pairs.len() as f64;
    assert!(mean.abs() < 0.1, "mean cross-correlation over {} pairs: {mean}", pairs.len());
    assert!(pairs.iter().all(|c| c.abs() < 0.9), "{pairs:?}");
}

#[test]
fn cli_validate_and_oracle() {
    let ok = Command::new(BIN).args(["validate", "--preset", "eva"]).output().unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("ok: 21 scenarios"));

    let out = Command::new(BIN)
        .args(["oracle", "xi", "--fd", "400", "--n", "1024", "--t", "83.333333333", "--beta", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let xi: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    let direct = doppler_core::numerics::xi_exact(400.0, 1024, 83.333333333e-9, 1, 0.125).unwrap();
    assert_eq!(xi, direct);
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "trials = 0\n[sweep]\nprofiles = [\"eva\"]\n").unwrap();
    let code = |args: &[&str]| Command::new(BIN).args(args).output().unwrap().status.code();

    assert_eq!(code(&["validate", "--config", bad.to_str().unwrap()]), Some(1));
    assert_eq!(code(&["validate", "--preset", "no-such-preset"]), Some(1));
    assert_eq!(code(&["validate"]), Some(1));
    assert_eq!(code(&["run", "--bogus-flag"]), Some(1));
    assert_eq!(code(&["--help"]), Some(0));

    let unknown_key = dir.path().join("typo.toml");
    std::fs::write(&unknown_key, "trails = 3\n").unwrap();
    assert_eq!(code(&["validate", "--config", unknown_key.to_str().unwrap()]), Some(1));

    // A file where the output directory should be.
    let blocked = dir.path().join("blocked");
    std::fs::write(&blocked, "").unwrap();
    let small = dir.path().join("small.toml");
    std::fs::write(&small, "trials = 1\n[sweep]\nprofiles = [\"eva\"]\nfd_hz = [400.0]\nsnr_db = [20.0]\nduration_ms = [3.0]\n")
        .unwrap();
    let small = small.to_str().unwrap();
    assert_eq!(code(&["run", "--config", small, "--out", blocked.join("x").to_str().unwrap()]), Some(2));

    let out = dir.path().join("out");
    assert_eq!(code(&["run", "--config", small, "--out", out.to_str().unwrap(), "--seed", "7"]), Some(0));
    let summary = read_csv(&out.join("summary.csv"));
    assert_eq!(summary.len(), 1);
    assert_eq!(summary[0]["scenario_id"], "eva_fd400_snr20_d3ms");
    assert_eq!(read_csv(&out.join("estimates.csv")).len(), 31);
}
