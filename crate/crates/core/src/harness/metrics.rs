//! Error statistics shared by trial summaries and scenario summaries.

/// Rolling-median window, in symbols.
pub const CONVERGENCE_WINDOW: usize = 50;
/// Symbols the rolling median must stay below the threshold.
pub const CONVERGENCE_HOLD: usize = 100;
pub const CONVERGENCE_THRESHOLD: f64 = 0.1;

/// `|fd_hat - fd| / fd`; undefined for `fd = 0`.
pub fn normalized_error(fd_hat: f64, fd_true: f64) -> Option<f64> {
    (fd_true > 0.0).then(|| (fd_hat - fd_true).abs() / fd_true)
}

/// Median of the finite entries; `None` if there are none.
pub fn median(values: &[f64]) -> Option<f64> {
    percentile(values, 50.0)
}

/// Linearly interpolated percentile (`q` in 0..=100) of the finite entries.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 100.0) / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (pos - lo as f64) * (v[hi] - v[lo]))
}

/// First symbol `n` at which the median error over the trailing window
/// `n + 1 - W ..= n` is below the threshold and stays below through symbol
/// `n + HOLD - 1`.
///
/// NaN entries mark symbols without an estimate (warmup) and are left out
/// of the median, so windows near the start use the estimates available so
/// far; a window with none counts as a miss. Infinite errors are misses.
/// Returns `None` when the stream never converges or is too short to
/// confirm it.
pub fn convergence_symbol(errors: &[f64]) -> Option<usize> {
    let mut run = 0;
    for n in 0..errors.len() {
        let window: Vec<f64> =
            errors[(n + 1).saturating_sub(CONVERGENCE_WINDOW)..=n].iter().copied().filter(|e| !e.is_nan()).collect();
        let below = median_of(window).is_some_and(|m| m < CONVERGENCE_THRESHOLD);
        run = if below { run + 1 } else { 0 };
        if run == CONVERGENCE_HOLD {
            return Some(n + 1 - CONVERGENCE_HOLD);
        }
    }
    None
}

fn median_of(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    Some(if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) })
}
