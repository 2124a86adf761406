//! Mutual information of the effective channel and the outage indicator.
//!
//! All logarithms are base 2; rates are bits per channel use, including the
//! half-duplex factor `1/2`.

use crate::channel::{ChannelRealization, EffectiveChannel};
use crate::error::{invalid, Result};
use crate::linalg::{psd_eigenvalues, C64};
use crate::scheme::GramianSummary;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiResult {
    pub exact_mi: f64,
    pub jensen_mi: f64,
}

/// `(1/2N) sum_n log2(1 + rho lambda_n(H H^H))`.
pub fn mutual_information(heff: &EffectiveChannel, rho: f64) -> Result<f64> {
    let h = &heff.matrix;
    let n = h.nrows();
    let ev = psd_eigenvalues(&(h * h.adjoint()))?;
    let total: f64 = ev.iter().map(|l| (rho * l).ln_1p()).sum();
    Ok(total / std::f64::consts::LN_2 / (2.0 * n as f64))
}

/// Jensen upper bound `(1/2) log2(1 + (rho/N) ||H||_F^2)`.
pub fn jensen_mi(heff: &EffectiveChannel, rho: f64) -> f64 {
    let n = heff.matrix.nrows() as f64;
    0.5 * (rho / n * heff.frobenius_sq()).ln_1p() / std::f64::consts::LN_2
}

pub fn mi_pair(heff: &EffectiveChannel, rho: f64) -> Result<MiResult> {
    Ok(MiResult { exact_mi: mutual_information(heff, rho)?, jensen_mi: jensen_mi(heff, rho) })
}

/// Quadratic form `v^H A v` of a Hermitian matrix; the imaginary part is rounding.
pub fn hermitian_form(gram: &crate::linalg::CMatrix, v: &[C64]) -> f64 {
    let k = v.len();
    let mut acc = 0.0;
    for r in 0..k {
        let mut row = C64::new(0.0, 0.0);
        for c in 0..k {
            row += gram[(r, c)] * v[c];
        }
        acc += (v[r].conj() * row).re;
    }
    acc
}

/// Jensen bound through the Gramian: `(1/2) log2(1 + rho h~^H K h~ / (1 + |h|^2))`
/// with `h~ = h ∘ f`. `offset` is the prefactor constant (1, or `K` under split power).
pub fn jensen_mi_via_gramian_with_offset(
    gram: &GramianSummary,
    ch: &ChannelRealization,
    rho: f64,
    offset: f64,
) -> f64 {
    let q = hermitian_form(&gram.gram, &ch.cascade()).max(0.0);
    0.5 * (rho * q / (offset + ch.h_norm_sq())).ln_1p() / std::f64::consts::LN_2
}

/// Per-relay power convention (`offset = 1`).
pub fn jensen_mi_via_gramian(gram: &GramianSummary, ch: &ChannelRealization, rho: f64) -> f64 {
    jensen_mi_via_gramian_with_offset(gram, ch, rho, 1.0)
}

/// Rate target `base_rate + r log2(rho)` in bits per channel use.
pub fn rate_target(r: f64, rho: f64, base_rate: f64) -> Result<f64> {
    if !(rho > 1.0) {
        return Err(invalid(format!("outage requires rho > 1, got {rho}")));
    }
    Ok(base_rate + r * rho.log2())
}

/// Outage iff `mi < r log2(rho)` (strict).
pub fn is_outage(mi: f64, r: f64, rho: f64) -> Result<bool> {
    Ok(mi < rate_target(r, rho, 0.0)?)
}
