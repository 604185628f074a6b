//! Scalar and polynomial mathematics behind the estimator.

mod bessel;
mod newton;
mod xi;

pub use bessel::bessel_j0;
pub use newton::{
    doppler_from_root, invert_eta, newton_solve, poly_coeffs, DopplerPolynomial, Inversion, NewtonConfig,
    NewtonSolution,
};
pub use xi::{phi, psi, xi0_series, xi_beta_series, xi_exact, SeriesParams};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Newton derivative vanished at x = {x}")]
    SingularDerivative { x: f64 },
    #[error("Newton iterate {x} left the search bound {bound}")]
    Diverged { x: f64, bound: f64 },
    #[error("root {0} is positive; eta is outside the model range")]
    InvalidRoot(f64),
}
