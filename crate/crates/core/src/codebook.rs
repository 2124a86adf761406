//! Codebooks, code difference matrices, and the full-rank conditions.

use crate::channel::complex_gaussian_vec;
use crate::error::{invalid, Error, Result};
use crate::linalg::{psd_eigenvalues, singular_values, CMatrix, CVector, C64};
use crate::scheme::{dft_matrix, RelayScheme};
use rand::Rng;
use rayon::prelude::*;

pub const DEFAULT_SIZE_CAP: usize = 65_536;

/// Relative cutoff for the "nonzero" tests of the simplified conditions.
pub const ZERO_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    n: usize,
    codewords: Vec<Vec<C64>>,
    /// Nominal multiplexing gain, when generated for one.
    pub rate: Option<f64>,
    /// Nominal SNR (linear), when generated for one.
    pub snr: Option<f64>,
}

impl Codebook {
    pub fn new(n: usize, codewords: Vec<Vec<C64>>) -> Result<Self> {
        if n == 0 {
            return Err(invalid("codeword length must be positive"));
        }
        if codewords.is_empty() {
            return Err(invalid("codebook must contain at least one codeword"));
        }
        if let Some((i, _)) = codewords.iter().enumerate().find(|(_, c)| c.len() != n) {
            return Err(invalid(format!("codeword {} does not have length {n}", i + 1)));
        }
        Ok(Codebook { n, codewords, rate: None, snr: None })
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn codewords(&self) -> &[Vec<C64>] {
        &self.codewords
    }

    pub fn mean_energy(&self) -> f64 {
        let total: f64 = self.codewords.iter().map(|c| crate::linalg::norm_sq(c)).sum();
        total / self.len() as f64
    }

    /// Every codeword multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Codebook {
        let codewords = self
            .codewords
            .iter()
            .map(|w| w.iter().map(|v| v * c).collect())
            .collect();
        Codebook { codewords, ..self.clone() }
    }
}

/// Nominal codebook size `ceil(rho^(2 N r))`.
pub fn nominal_size(n: usize, r: f64, rho: f64) -> f64 {
    let v = rho.powf(2.0 * n as f64 * r);
    // Guard exact powers like 16^1 against a trailing ulp.
    (v * (1.0 - 1e-12)).ceil().max(1.0)
}

/// I.i.d. `CN(0, 1)` codebook with `ceil(rho^(2 N r))` codewords.
pub fn gaussian_codebook<R: Rng + ?Sized>(
    n: usize,
    r: f64,
    rho: f64,
    rng: &mut R,
    size_cap: usize,
) -> Result<Codebook> {
    if n == 0 {
        return Err(invalid("block length N must be positive"));
    }
    if !(0.0..=0.5).contains(&r) {
        return Err(invalid(format!("multiplexing gain r={r} outside [0, 1/2]")));
    }
    if !(rho > 0.0) {
        return Err(invalid(format!("SNR must be positive, got {rho}")));
    }
    let size = nominal_size(n, r, rho);
    if size > size_cap as f64 {
        return Err(Error::ResourceLimit {
            what: format!("codebook (N={n}, r={r}, rho={rho})"),
            required: size,
            allowed: size_cap as f64,
        });
    }
    let codewords = (0..size as usize).map(|_| complex_gaussian_vec(n, rng)).collect();
    let mut book = Codebook::new(n, codewords)?;
    book.rate = Some(r);
    book.snr = Some(rho);
    Ok(book)
}

/// `Phi(dx) = [G_1 dx, ..., G_K dx]`, an `N x K` matrix.
#[derive(Debug, Clone)]
pub struct DifferenceMatrix {
    pub phi: CMatrix,
}

pub fn difference_matrix(scheme: &RelayScheme, dx: &[C64]) -> Result<DifferenceMatrix> {
    let n = scheme.block_len();
    if dx.len() != n {
        return Err(invalid(format!("difference vector length {} != N={n}", dx.len())));
    }
    let v = CVector::from_column_slice(dx);
    let mut phi = CMatrix::zeros(n, scheme.relays());
    for (i, g) in scheme.matrices().iter().enumerate() {
        phi.set_column(i, &(g * &v));
    }
    Ok(DifferenceMatrix { phi })
}

/// Singular-value cutoff for numerical rank decisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankTolerance {
    /// Threshold is `K * sigma_max * relative`.
    pub relative: f64,
}

impl Default for RankTolerance {
    fn default() -> Self {
        RankTolerance { relative: 1e-12 }
    }
}

/// True iff `Phi` has full column rank `K`.
pub fn rank_full(phi: &DifferenceMatrix, tol: RankTolerance) -> bool {
    let k = phi.phi.ncols();
    if phi.phi.nrows() < k {
        return false;
    }
    let sv = singular_values(&phi.phi);
    let (Some(&max), Some(&min)) = (sv.first(), sv.last()) else {
        return false;
    };
    sv.len() == k && min > k as f64 * max * tol.relative
}

fn all_nonzero(values: impl Iterator<Item = C64>, reference: f64) -> bool {
    let cut = ZERO_THRESHOLD * reference;
    let mut any = false;
    for v in values {
        any = true;
        if !(v.norm() > cut) {
            return false;
        }
    }
    any
}

/// Cyclic-delay condition: every DFT coefficient of `dx` is nonzero.
pub fn cdd_condition(dx: &[C64]) -> bool {
    let f = dft_matrix(dx.len());
    let spectrum = f * CVector::from_column_slice(dx);
    all_nonzero(spectrum.iter().copied(), crate::linalg::norm_sq(dx).sqrt())
}

/// Phase-rolling condition: every entry of `dx` is nonzero.
pub fn phase_rolling_condition(dx: &[C64]) -> bool {
    all_nonzero(dx.iter().copied(), crate::linalg::norm_sq(dx).sqrt())
}

/// Smallest eigenvalue of `Phi^H Phi`.
pub fn difference_min_eigenvalue(scheme: &RelayScheme, dx: &[C64]) -> Result<f64> {
    let phi = difference_matrix(scheme, dx)?.phi;
    Ok(psd_eigenvalues(&(phi.adjoint() * &phi))?[0])
}

pub fn codeword_difference(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Minimum over unordered codeword pairs of `lambda_min(Phi^H Phi)`;
/// `+inf` for a single-codeword book.
pub fn min_gram_eigenvalue(scheme: &RelayScheme, book: &Codebook) -> Result<f64> {
    if book.block_len() != scheme.block_len() {
        return Err(invalid(format!(
            "codebook length {} != scheme block length {}",
            book.block_len(),
            scheme.block_len()
        )));
    }
    let words = book.codewords();
    (0..words.len())
        .into_par_iter()
        .map(|i| {
            let mut best = f64::INFINITY;
            for j in (i + 1)..words.len() {
                let dx = codeword_difference(&words[i], &words[j]);
                best = best.min(difference_min_eigenvalue(scheme, &dx)?);
            }
            Ok(best)
        })
        .try_reduce(|| f64::INFINITY, |a, b| Ok(a.min(b)))
}

/// Finite-SNR check of `mu_min(rho) > rho^(-2r)`.
pub fn approximately_universal(scheme: &RelayScheme, book: &Codebook, r: f64, rho: f64) -> Result<bool> {
    if !(0.0..=0.5).contains(&r) {
        return Err(invalid(format!("multiplexing gain r={r} outside [0, 1/2]")));
    }
    if !(rho > 1.0) {
        return Err(invalid(format!("rho must exceed 1, got {rho}")));
    }
    let mu = min_gram_eigenvalue(scheme, book)?;
    Ok(mu > rho.powf(-2.0 * r))
}
