//! Thin QR factorization by classical Gram-Schmidt with one full
//! reorthogonalization pass.
//!
//! `R` has a real non-negative diagonal, which is what lets `diag(R)` stand
//! in for eigenvalue magnitudes in the subspace recursion. A column whose
//! residual vanishes (the input has lower rank than the number of columns)
//! gets a replacement direction from the identity-padded basis so that `Q`
//! always stays orthonormal; its `R` diagonal entry is zero.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Residual norms below this fraction of `||A||_F` count as rank collapse.
const COLLAPSE_REL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct ThinQr {
    pub q: DMatrix<Complex64>,
    pub r: DMatrix<Complex64>,
    pub collapsed: bool,
}

pub(crate) fn thin_qr(a: &DMatrix<Complex64>) -> ThinQr {
    let (rows, cols) = a.shape();
    debug_assert!(cols <= rows);
    let floor = COLLAPSE_REL * a.norm();
    let mut q = DMatrix::<Complex64>::zeros(rows, cols);
    let mut r = DMatrix::<Complex64>::zeros(cols, cols);
    let mut collapsed = false;

    for j in 0..cols {
        let mut v = a.column(j).clone_owned();
        for _ in 0..2 {
            for i in 0..j {
                let qi = q.column(i);
                let c = qi.dotc(&v);
                r[(i, j)] += c;
                v.axpy(-c, &qi, Complex64::new(1.0, 0.0));
            }
        }
        let norm = v.norm();
        if norm > floor && norm > 0.0 {
            r[(j, j)] = Complex64::new(norm, 0.0);
            q.set_column(j, &(v / Complex64::new(norm, 0.0)));
        } else {
            collapsed = true;
            let fill = complement(&q, j);
            q.set_column(j, &fill);
        }
    }
    ThinQr { q, r, collapsed }
}

/// Unit vector orthogonal to the first `filled` columns of `q`, taken from
/// the canonical basis starting at `e_filled`.
fn complement(q: &DMatrix<Complex64>, filled: usize) -> DVector<Complex64> {
    let rows = q.nrows();
    let mut best: Option<(f64, DVector<Complex64>)> = None;
    for k in (filled..rows).chain(0..filled) {
        let mut v = DVector::<Complex64>::zeros(rows);
        v[k] = Complex64::new(1.0, 0.0);
        for _ in 0..2 {
            for i in 0..filled {
                let qi = q.column(i);
                let c = qi.dotc(&v);
                v.axpy(-c, &qi, Complex64::new(1.0, 0.0));
            }
        }
        let norm = v.norm();
        if norm > 0.5 {
            return v / Complex64::new(norm, 0.0);
        }
        if best.as_ref().is_none_or(|(b, _)| norm > *b) {
            best = Some((norm, v));
        }
    }
    let (norm, v) = best.expect("at least one candidate");
    v / Complex64::new(norm, 0.0)
}
