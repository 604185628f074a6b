//! Inversion of the correlation ratio `eta = xi_beta / xi_0` into a Doppler
//! spread.
//!
//! Truncating both series at `K` terms and clearing `eta` gives a polynomial
//! in `x = -psi^2` whose small negative root maps back to `f_d`.

use std::f64::consts::PI;

use super::NumericsError;

/// Coefficients `c_0..c_{K-1}` of `sum_k c_k x^k = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DopplerPolynomial {
    coeffs: Vec<f64>,
    eta: f64,
    phi: f64,
}

impl DopplerPolynomial {
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Value and first derivative at `x`, both by Horner's rule.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    /// Root of the affine truncation `c_0 + c_1 x`.
    pub fn linear_root(&self) -> f64 {
        -self.coeffs[0] / self.coeffs[1]
    }
}

/// Builds `c_k = ([(1+phi)^{2k+2} + (1-phi)^{2k+2} - 2 phi^{2k+2}] - 2 eta) / (2 k! (k+1)! (2k+1))`.
///
/// The bracket is exactly 2 at `k = 0`, so `c_0 = 1 - eta` holds bit for bit.
pub fn poly_coeffs(eta: f64, phi: f64, order: usize) -> Result<DopplerPolynomial, NumericsError> {
    if order < 2 {
        return Err(NumericsError::InvalidParameter(format!("series order must be >= 2, got {order}")));
    }
    if !eta.is_finite() {
        return Err(NumericsError::InvalidParameter(format!("eta must be finite, got {eta}")));
    }
    if !(phi.is_finite() && phi >= 0.0) {
        return Err(NumericsError::InvalidParameter(format!("phi must be finite and >= 0, got {phi}")));
    }

    let (up, down, phi2) = ((1.0 + phi).powi(2), (1.0 - phi).powi(2), phi * phi);
    let (mut pu, mut pd, mut pp) = (up, down, phi2);
    // k! (k+1)! (2k+1), updated by its term ratio.
    let mut denom = 1.0;
    let mut coeffs = Vec::with_capacity(order);
    coeffs.push(1.0 - eta);
    for k in 1..order {
        let kf = k as f64;
        denom *= kf * (kf + 1.0) * (2.0 * kf + 1.0) / (2.0 * kf - 1.0);
        pu *= up;
        pd *= down;
        pp *= phi2;
        let bracket = pu + pd - 2.0 * pp;
        coeffs.push((bracket - 2.0 * eta) / (2.0 * denom));
    }
    Ok(DopplerPolynomial { coeffs, eta, phi })
}

/// Newton iteration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Convergence threshold on the Newton step `|x_{i+1} - x_i|`.
    pub tolerance: f64,
    pub max_iters: usize,
    /// Starting point. `None` starts from the affine root `-c_0 / c_1`.
    pub init: Option<f64>,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { tolerance: 1e-4, max_iters: 4, init: None }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<(), NumericsError> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(NumericsError::InvalidParameter(format!("Newton tolerance must be > 0, got {}", self.tolerance)));
        }
        if self.max_iters == 0 {
            return Err(NumericsError::InvalidParameter("Newton needs at least one iteration".into()));
        }
        if let Some(x) = self.init {
            if !x.is_finite() {
                return Err(NumericsError::InvalidParameter(format!("Newton start {x} is not finite")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSolution {
    pub root: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Runs Newton's method on `poly` from `cfg.init` (or the affine root).
///
/// Stops when the step falls below the tolerance or the polynomial is exactly
/// zero. Running out of iterations is not an error: the last iterate comes
/// back with `converged == false`.
pub fn newton_solve(poly: &DopplerPolynomial, cfg: &NewtonConfig) -> Result<NewtonSolution, NumericsError> {
    cfg.validate()?;
    let init = match cfg.init {
        Some(x) => x,
        None if poly.coeffs[1] != 0.0 => poly.linear_root(),
        None => 0.0,
    };
    let bound = 10.0 * init.abs() + 10.0;
    let mut x = init;
    for iter in 0..cfg.max_iters {
        let (p, dp) = poly.eval(x);
        if p == 0.0 {
            return Ok(NewtonSolution { root: x, iterations: iter, converged: true });
        }
        if dp.abs() < 1e-30 {
            return Err(NumericsError::SingularDerivative { x });
        }
        let step = p / dp;
        x -= step;
        if !x.is_finite() || x.abs() > bound {
            return Err(NumericsError::Diverged { x, bound });
        }
        if step.abs() < cfg.tolerance {
            return Ok(NewtonSolution { root: x, iterations: iter + 1, converged: true });
        }
    }
    Ok(NewtonSolution { root: x, iterations: cfg.max_iters, converged: false })
}

/// `f_d = sqrt(-x) / (pi N T)`. Positive roots up to 1e-12 are treated as 0.
pub fn doppler_from_root(root: f64, tones: usize, sample_period: f64) -> Result<f64, NumericsError> {
    if root.is_nan() || root > 1e-12 {
        return Err(NumericsError::InvalidRoot(root));
    }
    let x = root.min(0.0);
    Ok((-x).sqrt() / (PI * tones as f64 * sample_period))
}

/// Outcome of mapping one `eta` to a Doppler spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inversion {
    pub doppler_hz: f64,
    pub root: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `eta > 1` lies outside the model and was pinned to `f_d = 0`.
    pub clamped: bool,
}

/// Full `eta -> f_d` chain: coefficients, Newton, root mapping.
pub fn invert_eta(
    eta: f64,
    phi: f64,
    order: usize,
    newton: &NewtonConfig,
    tones: usize,
    sample_period: f64,
) -> Result<Inversion, NumericsError> {
    if !eta.is_finite() {
        return Err(NumericsError::InvalidParameter(format!("eta must be finite, got {eta}")));
    }
    if eta > 1.0 {
        newton.validate()?;
        return Ok(Inversion { doppler_hz: 0.0, root: 0.0, iterations: 0, converged: true, clamped: true });
    }
    let poly = poly_coeffs(eta, phi, order)?;
    let sol = newton_solve(&poly, newton)?;
    let doppler_hz = doppler_from_root(sol.root, tones, sample_period)?;
    Ok(Inversion {
        doppler_hz,
        root: sol.root,
        iterations: sol.iterations,
        converged: sol.converged,
        clamped: false,
    })
}
