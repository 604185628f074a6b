//! Time-averaged correlation factors of the per-symbol averaged CFR.
//!
//! `xi(beta)` is the mean of `J0(2 pi f_d (m - q + beta (1 + r_cp) N) T)` over
//! all sample pairs `(m, q)` of two OFDM symbols `beta` apart. The exact
//! double sum lives here next to its truncated power series in
//! `psi = pi f_d N T` and `phi = beta (1 + r_cp)`.

use std::f64::consts::PI;

use super::bessel::j0;
use super::NumericsError;

/// Parameters of the truncated correlation-factor series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesParams {
    psi: f64,
    phi: f64,
    order: usize,
}

impl SeriesParams {
    pub fn new(psi: f64, phi: f64, order: usize) -> Result<Self, NumericsError> {
        if !(psi.is_finite() && psi >= 0.0) {
            return Err(NumericsError::InvalidParameter(format!("psi must be finite and >= 0, got {psi}")));
        }
        if !(phi.is_finite() && phi >= 0.0) {
            return Err(NumericsError::InvalidParameter(format!("phi must be finite and >= 0, got {phi}")));
        }
        if order < 2 {
            return Err(NumericsError::InvalidParameter(format!("series order must be >= 2, got {order}")));
        }
        Ok(Self { psi, phi, order })
    }

    /// Builds the parameters from physical quantities.
    pub fn from_physical(
        doppler_hz: f64,
        tones: usize,
        sample_period: f64,
        lag: u32,
        cp_ratio: f64,
        order: usize,
    ) -> Result<Self, NumericsError> {
        Self::new(psi(doppler_hz, tones, sample_period), phi(lag, cp_ratio), order)
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

/// `psi = pi f_d N T`.
pub fn psi(doppler_hz: f64, tones: usize, sample_period: f64) -> f64 {
    PI * doppler_hz * tones as f64 * sample_period
}

/// `phi = beta (1 + r_cp)`, the symbol lag in units of `N T`.
pub fn phi(lag: u32, cp_ratio: f64) -> f64 {
    lag as f64 * (1.0 + cp_ratio)
}

/// Exact correlation factor.
///
/// The `N^2` pair sum only depends on `d = m - q`, so it is folded into a
/// weighted sum over the `2N - 1` differences. `lag = 0` gives `xi_0`.
pub fn xi_exact(
    doppler_hz: f64,
    tones: usize,
    sample_period: f64,
    lag: u32,
    cp_ratio: f64,
) -> Result<f64, NumericsError> {
    if !(doppler_hz.is_finite() && doppler_hz >= 0.0) {
        return Err(NumericsError::InvalidParameter(format!("Doppler must be finite and >= 0, got {doppler_hz}")));
    }
    if tones < 2 {
        return Err(NumericsError::InvalidParameter(format!("need at least 2 tones, got {tones}")));
    }
    if !(sample_period.is_finite() && sample_period > 0.0) {
        return Err(NumericsError::InvalidParameter(format!("sample period must be positive, got {sample_period}")));
    }
    if !(cp_ratio.is_finite() && cp_ratio >= 0.0) {
        return Err(NumericsError::InvalidParameter(format!("CP ratio must be >= 0, got {cp_ratio}")));
    }

    let n = tones as f64;
    let offset = phi(lag, cp_ratio) * n;
    let scale = 2.0 * PI * doppler_hz * sample_period;
    let mut acc = 0.0;
    for d in -(tones as i64 - 1)..tones as i64 {
        let weight = n - (d.abs() as f64);
        acc += weight * j0(scale * (d as f64 + offset));
    }
    Ok(acc / (n * n))
}

/// `xi_0` from its first `K` series terms.
pub fn xi0_series(p: &SeriesParams) -> f64 {
    terms(p.psi, 0.0, p.order).map(|(s, _)| s).sum()
}

/// `xi_beta` from its first `K` series terms.
pub fn xi_beta_series(p: &SeriesParams) -> f64 {
    terms(p.psi, p.phi, p.order).map(|(s, b)| s * b).sum()
}

/// Yields `(s_k, b_k)` where `s_k = (-psi^2)^k / (k! (k+1)! (2k+1))` and
/// `b_k = [(1+phi)^{2k+2} + (1-phi)^{2k+2} - 2 phi^{2k+2}] / 2`, so that the
/// lagged series term is `t_k = s_k b_k`.
fn terms(psi: f64, phi: f64, order: usize) -> impl Iterator<Item = (f64, f64)> {
    let x = -psi * psi;
    let (up, down) = ((1.0 + phi) * (1.0 + phi), (1.0 - phi) * (1.0 - phi));
    let phi2 = phi * phi;
    let mut s = 1.0;
    let (mut pu, mut pd, mut pp) = (up, down, phi2);
    (0..order).map(move |k| {
        if k > 0 {
            let kf = k as f64;
            s *= x * (2.0 * kf - 1.0) / (kf * (kf + 1.0) * (2.0 * kf + 1.0));
            pu *= up;
            pd *= down;
            pp *= phi2;
        }
        // The k = 0 bracket is exactly 2 for every phi.
        let b = if k == 0 { 1.0 } else { 0.5 * (pu + pd - 2.0 * pp) };
        (s, b)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: f64 = 83.33e-9;
    const N: usize = 1024;
    const CP: f64 = 0.125;

    fn brute_force(fd: f64, n: usize, t: f64, lag: u32, cp: f64) -> f64 {
        let mut acc = 0.0;
        let off = lag as f64 * (1.0 + cp) * n as f64;
        for m in 0..n {
            for q in 0..n {
                acc += j0(2.0 * PI * fd * (m as f64 - q as f64 + off) * t);
            }
        }
        acc / (n * n) as f64
    }

    fn factorial_series(psi: f64, phi: f64, order: usize) -> (f64, f64) {
        let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
        let mut s0 = 0.0;
        let mut sb = 0.0;
        for k in 0..order {
            let s = (-psi * psi).powi(k as i32) / (fact(k) * fact(k + 1) * (2 * k + 1) as f64);
            let e = 2 * k as i32 + 2;
            let b = 0.5 * ((1.0 + phi).powi(e) + (1.0 - phi).powi(e) - 2.0 * phi.powi(e));
            s0 += s;
            sb += s * b;
        }
        (s0, sb)
    }

    #[test]
    fn zero_doppler_is_one() {
        for lag in 0..4 {
            assert_eq!(xi_exact(0.0, 64, 1e-7, lag, 0.25).unwrap(), 1.0);
        }
    }

    #[test]
    fn folded_sum_matches_double_sum() {
        for &(fd, lag) in &[(400.0, 0u32), (650.0, 1), (900.0, 3)] {
            let fast = xi_exact(fd, 96, 1e-6, lag, 0.125).unwrap();
            let slow = brute_force(fd, 96, 1e-6, lag, 0.125);
            assert!((fast - slow).abs() < 1e-13, "{fast} vs {slow}");
        }
    }

    #[test]
    fn regression_anchor_at_400_hz() {
        let xi0 = xi_exact(400.0, N, T, 0, CP).unwrap();
        assert!((xi0 - 0.998_085_869_938_534_9).abs() < 1e-12);
        assert!((xi0 - 0.99809).abs() < 5e-6);
    }

    #[test]
    fn depends_only_on_psi() {
        let a = xi_exact(400.0, N, T, 0, CP).unwrap();
        let b = xi_exact(800.0, N, T / 2.0, 0, CP).unwrap();
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn series_at_zero_psi() {
        let p = SeriesParams::new(0.0, 2.25, 8).unwrap();
        assert_eq!(xi0_series(&p), 1.0);
        assert_eq!(xi_beta_series(&p), 1.0);
    }

    #[test]
    fn series_matches_factorial_form() {
        for &(psi, phi) in &[(0.1, 1.125), (0.5, 2.25), (1.0, 4.5)] {
            let p = SeriesParams::new(psi, phi, 12).unwrap();
            let (s0, sb) = factorial_series(psi, phi, 12);
            assert!((xi0_series(&p) - s0).abs() < 1e-13);
            assert!((xi_beta_series(&p) - sb).abs() < 1e-12 * sb.abs().max(1.0));
        }
    }

    #[test]
    fn series_tracks_exact_sum() {
        let p = SeriesParams::from_physical(400.0, N, T, 1, CP, 8).unwrap();
        assert!((p.psi() - 0.10723).abs() < 1e-5);
        let e0 = xi_exact(400.0, N, T, 0, CP).unwrap();
        let e1 = xi_exact(400.0, N, T, 1, CP).unwrap();
        assert!(((xi0_series(&p) - e0) / e0).abs() < 1e-6);
        assert!(((xi_beta_series(&p) - e1) / e1).abs() < 1e-5);
    }

    #[test]
    fn truncation_tail_is_small() {
        let k8 = SeriesParams::new(0.5, 0.0, 8).unwrap();
        let k16 = SeriesParams::new(0.5, 0.0, 16).unwrap();
        assert!((xi0_series(&k8) - xi0_series(&k16)).abs() < 1e-10);
    }

    #[test]
    fn truncation_gap_shrinks_with_order() {
        for &psi in &[0.2, 0.6, 1.0] {
            let gap = |k: usize| {
                let a = SeriesParams::new(psi, 0.0, k).unwrap();
                let b = SeriesParams::new(psi, 0.0, k + 4).unwrap();
                (xi0_series(&a) - xi0_series(&b)).abs()
            };
            let gaps: Vec<f64> = (2..10).map(gap).collect();
            for w in gaps.windows(2) {
                assert!(w[1] <= w[0], "psi={psi}: {gaps:?}");
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SeriesParams::new(-0.1, 0.0, 8).is_err());
        assert!(SeriesParams::new(0.1, -1.0, 8).is_err());
        assert!(SeriesParams::new(0.1, 1.0, 1).is_err());
        assert!(xi_exact(-1.0, 1024, T, 0, CP).is_err());
        assert!(xi_exact(1.0, 1, T, 0, CP).is_err());
    }
}
