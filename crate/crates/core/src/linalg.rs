//! Dense complex linear algebra helpers.

use crate::error::{Error, Result};
use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Negative eigenvalues of a PSD matrix above this value are rounding noise.
pub const PSD_CLAMP: f64 = -1e-10;

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    match n {
        0 => Vec::new(),
        1 => vec![m[(0, 0)].re],
        _ => {
            // Symmetrize first; the solver only reads the lower triangle.
            let herm = (m + m.adjoint()).scale(0.5);
            let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            ev
        }
    }
}

/// Eigenvalues of a Hermitian positive semidefinite matrix, ascending,
/// with small negative rounding noise clamped to zero.
pub fn psd_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    let mut ev = hermitian_eigenvalues(m);
    for v in ev.iter_mut() {
        if *v < 0.0 {
            if *v < PSD_CLAMP * (1.0 + m.norm()) {
                return Err(Error::InternalConsistency(format!(
                    "PSD matrix has eigenvalue {v:.3e}"
                )));
            }
            *v = 0.0;
        }
    }
    Ok(ev)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Largest elementwise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn norm_sq(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}
