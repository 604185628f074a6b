//! Model-order selection and noise-floor estimation from tracked
//! eigenvalues.

use super::TrackerError;

const EIG_FLOOR: f64 = 1e-15;

/// Number of significant eigenvalues by the minimum description length
/// criterion.
///
/// `eigs` holds the `L_m` tracked eigenvalues in descending order. Returns
/// the `k` in `0..L_m` minimizing
/// `-n_eff (L_m - k) ln(g_k / a_k) + k (2 L_m - k) ln(n_eff) / 2`, where
/// `g_k` and `a_k` are the geometric and arithmetic means of the trailing
/// `L_m - k` eigenvalues. Non-positive eigenvalues are floored at 1e-15.
pub fn mdl_order(eigs: &[f64], n_eff: f64) -> usize {
    let lm = eigs.len();
    if lm == 0 {
        return 0;
    }
    let floored: Vec<f64> = eigs.iter().map(|&e| if e > EIG_FLOOR { e } else { EIG_FLOOR }).collect();
    let ln_n = n_eff.ln();
    let mut best = (f64::INFINITY, 0);
    for k in 0..lm {
        let tail = &floored[k..];
        let m = tail.len() as f64;
        let ln_geo = tail.iter().map(|e| e.ln()).sum::<f64>() / m;
        let ln_arith = (tail.iter().sum::<f64>() / m).ln();
        // ln_geo <= ln_arith; clamp rounding noise so equal tails score 0.
        let fit = -n_eff * m * (ln_geo - ln_arith).min(0.0);
        let penalty = 0.5 * (k * (2 * lm - k)) as f64 * ln_n;
        let score = fit + penalty;
        if score < best.0 {
            best = (score, k);
        }
    }
    best.1
}

/// Mean of the eigenvalues past the first `l_hat`.
pub fn noise_floor(eigs: &[f64], l_hat: usize) -> Result<f64, TrackerError> {
    if l_hat >= eigs.len() {
        return Err(TrackerError::NoNoiseEntries { l_hat, max_rank: eigs.len() });
    }
    let tail = &eigs[l_hat..];
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}
