//! Relay transformation families and their Gramian.
//!
//! Every relay `i` applies an `N x N` matrix `G_i` with `G_i G_i^H = I/N`.
//! Cyclic delay diversity uses scaled cyclic shifts, phase rolling uses
//! scaled diagonal phase ramps; the two are DFT conjugates of each other.

use crate::error::{invalid, Error, Result};
use crate::linalg::{psd_eigenvalues, CMatrix, C64};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

/// Elementwise tolerance on `G G^H - I/N`.
pub const UNITARY_SCALING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    CyclicDelay,
    PhaseRolling,
    Custom,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::CyclicDelay => "cdd",
            SchemeKind::PhaseRolling => "phase-rolling",
            SchemeKind::Custom => "custom",
        }
    }
}

/// Transmit power convention of the relays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RelayPower {
    /// Each relay transmits at power `rho`.
    #[default]
    PerRelay,
    /// Each relay transmits at `rho / K`, total `rho`.
    Split,
}

#[derive(Debug, Clone)]
pub struct RelayScheme {
    kind: SchemeKind,
    n: usize,
    matrices: Vec<CMatrix>,
    relay_power: RelayPower,
}

impl RelayScheme {
    /// Cyclic delay diversity: relay `i` (0-based) shifts the block up by `i`.
    pub fn cyclic_delay(k: usize, n: usize) -> Result<Self> {
        check_dims(k, n)?;
        let matrices = (0..k).map(|i| cyclic_shift(n, i).scale(1.0 / (n as f64).sqrt())).collect();
        Ok(RelayScheme { kind: SchemeKind::CyclicDelay, n, matrices, relay_power: RelayPower::PerRelay })
    }

    /// Phase rolling: relay `i` (0-based) multiplies sample `m` by `exp(j 2 pi m i / N)`.
    pub fn phase_rolling(k: usize, n: usize) -> Result<Self> {
        check_dims(k, n)?;
        let matrices = (0..k).map(|i| phase_ramp(n, i).scale(1.0 / (n as f64).sqrt())).collect();
        Ok(RelayScheme { kind: SchemeKind::PhaseRolling, n, matrices, relay_power: RelayPower::PerRelay })
    }

    /// User-supplied matrices, validated against the unitary-scaling constraint.
    pub fn custom(matrices: Vec<CMatrix>) -> Result<Self> {
        let n = validate_matrices(&matrices)?;
        Ok(RelayScheme { kind: SchemeKind::Custom, n, matrices, relay_power: RelayPower::PerRelay })
    }

    /// `G_i = U_i / sqrt(N)` with independent Haar-distributed unitaries.
    pub fn random_unitary<R: Rng + ?Sized>(k: usize, n: usize, rng: &mut R) -> Result<Self> {
        check_dims(k, n)?;
        let s = 1.0 / (n as f64).sqrt();
        let matrices = (0..k).map(|_| random_unitary(n, rng).scale(s)).collect();
        Self::custom(matrices)
    }

    pub fn with_relay_power(mut self, power: RelayPower) -> Self {
        self.relay_power = power;
        self
    }

    /// Applies a common unitary `U` to all relays: `G_i -> U G_i`.
    pub fn left_multiplied(&self, u: &CMatrix) -> Result<Self> {
        let matrices = self.matrices.iter().map(|g| u * g).collect();
        let mut out = Self::custom(matrices)?;
        out.relay_power = self.relay_power;
        Ok(out)
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn relays(&self) -> usize {
        self.matrices.len()
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn relay_power(&self) -> RelayPower {
        self.relay_power
    }

    /// The constant `c` in the effective-channel prefactor `1/sqrt(c + |h|^2)`.
    pub(crate) fn prefactor_offset(&self) -> f64 {
        match self.relay_power {
            RelayPower::PerRelay => 1.0,
            RelayPower::Split => self.relays() as f64,
        }
    }

    /// Per-relay transmit power for a given SNR.
    pub(crate) fn relay_tx_power(&self, rho: f64) -> f64 {
        match self.relay_power {
            RelayPower::PerRelay => rho,
            RelayPower::Split => rho / self.relays() as f64,
        }
    }
}

fn check_dims(k: usize, n: usize) -> Result<()> {
    if k == 0 {
        return Err(invalid("relay count K must be at least 1"));
    }
    if k > n {
        return Err(invalid(format!("relay count K={k} exceeds block length N={n}")));
    }
    Ok(())
}

/// Largest elementwise deviation of `G G^H` from `I/N`.
pub fn unitary_scaling_deviation(g: &CMatrix) -> f64 {
    let n = g.nrows();
    let target = 1.0 / n as f64;
    let ggh = g * g.adjoint();
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in 0..n {
            let expect = if r == c { target } else { 0.0 };
            worst = worst.max((ggh[(r, c)] - C64::new(expect, 0.0)).norm());
        }
    }
    worst
}

/// Checks shapes and the unitary-scaling constraint; returns `N`.
pub fn validate_matrices(matrices: &[CMatrix]) -> Result<usize> {
    let first = matrices.first().ok_or_else(|| invalid("scheme needs at least one matrix"))?;
    let n = first.nrows();
    if n == 0 {
        return Err(invalid("relay matrices must be non-empty"));
    }
    for (i, g) in matrices.iter().enumerate() {
        if g.nrows() != n || g.ncols() != n {
            return Err(invalid(format!(
                "matrix {} is {}x{}, expected {n}x{n}",
                i + 1,
                g.nrows(),
                g.ncols()
            )));
        }
    }
    check_dims(matrices.len(), n)?;
    for (i, g) in matrices.iter().enumerate() {
        let deviation = unitary_scaling_deviation(g);
        if !(deviation <= UNITARY_SCALING_TOL) {
            return Err(Error::SchemeInvalid { index: i + 1, deviation });
        }
    }
    Ok(n)
}

/// Unitary DFT matrix, `F[l][m] = exp(-j 2 pi l m / N) / sqrt(N)`.
pub fn dft_matrix(n: usize) -> CMatrix {
    let s = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |l, m| {
        // Reduce the exponent modulo N before scaling to keep phases exact.
        let idx = (l * m) % n;
        C64::from_polar(s, -2.0 * PI * idx as f64 / n as f64)
    })
}

/// Permutation matrix shifting a vector up by `shift` positions:
/// `(P x)[m] = x[(m + shift) mod N]`.
pub fn cyclic_shift(n: usize, shift: usize) -> CMatrix {
    let mut p = CMatrix::zeros(n, n);
    for m in 0..n {
        p[(m, (m + shift) % n)] = C64::new(1.0, 0.0);
    }
    p
}

/// `diag(exp(j 2 pi m shift / N))`, the DFT-domain image of `cyclic_shift`.
pub fn phase_ramp(n: usize, shift: usize) -> CMatrix {
    let mut d = CMatrix::zeros(n, n);
    for m in 0..n {
        let idx = (m * shift) % n;
        d[(m, m)] = C64::from_polar(1.0, 2.0 * PI * idx as f64 / n as f64);
    }
    d
}

/// Haar-random unitary via QR of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im)
    });
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..n {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..n {
            q[(row, c)] *= phase;
        }
    }
    q
}

/// The `K x K` Gramian of a scheme and its eigenvalue extremes.
#[derive(Debug, Clone)]
pub struct GramianSummary {
    pub gram: CMatrix,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// `gram[r][c] = tr(G_c G_r^H) / N`.
pub fn gramian(scheme: &RelayScheme) -> Result<GramianSummary> {
    let g = scheme.matrices();
    let k = g.len();
    let inv_n = 1.0 / scheme.block_len() as f64;
    let mut gram = CMatrix::zeros(k, k);
    for r in 0..k {
        for c in 0..k {
            // tr(A B^H) = sum_{ab} A[a,b] conj(B[a,b])
            let tr: C64 = g[c].iter().zip(g[r].iter()).map(|(a, b)| a * b.conj()).sum();
            gram[(r, c)] = tr * inv_n;
        }
    }
    let ev = psd_eigenvalues(&gram)?;
    Ok(GramianSummary {
        lambda_min: ev[0],
        lambda_max: ev[k - 1],
        gram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn cdd_small_cases() {
        let s = RelayScheme::cyclic_delay(1, 2).unwrap();
        let h = 1.0 / 2f64.sqrt();
        let expect = CMatrix::from_row_slice(2, 2, &[c(h, 0.), c(0., 0.), c(0., 0.), c(h, 0.)]);
        assert!(max_abs_diff(&s.matrices()[0], &expect) < 1e-15);

        let s = RelayScheme::cyclic_delay(2, 2).unwrap();
        let expect = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(h, 0.), c(h, 0.), c(0., 0.)]);
        assert!(max_abs_diff(&s.matrices()[1], &expect) < 1e-15);
    }

    #[test]
    fn shift_moves_entries_up() {
        let p = cyclic_shift(4, 1);
        let x = crate::linalg::CVector::from_vec((0..4).map(|v| c(v as f64, 0.)).collect());
        let y = &p * &x;
        let got: Vec<f64> = y.iter().map(|z| z.re).collect();
        assert_eq!(got, vec![1.0, 2.0, 3.0, 0.0]);
    }

    #[test]
    fn phase_rolling_small_cases() {
        let s = RelayScheme::phase_rolling(1, 5).unwrap();
        let id = CMatrix::identity(5, 5).scale(1.0 / 5f64.sqrt());
        assert!(max_abs_diff(&s.matrices()[0], &id) < 1e-15);

        let lam = phase_ramp(4, 1);
        let expect = [c(1., 0.), c(0., 1.), c(-1., 0.), c(0., -1.)];
        for (m, e) in expect.iter().enumerate() {
            assert!((lam[(m, m)] - e).norm() < 1e-15);
        }
    }

    #[test]
    fn dft_small_cases() {
        assert!((dft_matrix(1)[(0, 0)] - c(1., 0.)).norm() < 1e-15);
        let f = dft_matrix(2);
        let h = 1.0 / 2f64.sqrt();
        let expect = CMatrix::from_row_slice(2, 2, &[c(h, 0.), c(h, 0.), c(h, 0.), c(-h, 0.)]);
        assert!(max_abs_diff(&f, &expect) < 1e-15);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(matches!(RelayScheme::cyclic_delay(3, 2), Err(Error::InvalidParameter(_))));
        assert!(matches!(RelayScheme::phase_rolling(0, 2), Err(Error::InvalidParameter(_))));
        let rect = CMatrix::zeros(2, 3);
        assert!(RelayScheme::custom(vec![rect]).is_err());
    }

    #[test]
    fn custom_rejects_unscaled_identity() {
        let err = RelayScheme::custom(vec![CMatrix::identity(4, 4)]).unwrap_err();
        match err {
            Error::SchemeInvalid { index, deviation } => {
                assert_eq!(index, 1);
                assert!((deviation - 0.75).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
        let ok = RelayScheme::custom(vec![CMatrix::identity(4, 4).scale(0.5)]);
        assert!(ok.is_ok());
    }

    #[test]
    fn rank_one_gramian() {
        // Every entry is tr(G G^H)/N = 1/N.
        let n: f64 = 3.0;
        let g = CMatrix::identity(3, 3).scale(1.0 / n.sqrt());
        let s = RelayScheme::custom(vec![g.clone(), g]).unwrap();
        let gs = gramian(&s).unwrap();
        for v in gs.gram.iter() {
            assert!((v - c(1. / n, 0.)).norm() < 1e-14);
        }
        assert!(gs.lambda_min.abs() < 1e-14);
        assert!((gs.lambda_max - 2.0 / n).abs() < 1e-14);
    }

    #[test]
    fn gramian_index_placement() {
        // G_1 = I/sqrt(2), G_2 = diag(1, j)/sqrt(2): tr(G_2 G_1^H)/N = (1 + j)/4 sits at (row 0, col 1).
        let s = 1.0 / 2f64.sqrt();
        let g1 = CMatrix::identity(2, 2).scale(s);
        let mut g2 = CMatrix::identity(2, 2).scale(s);
        g2[(1, 1)] = c(0., s);
        let gs = gramian(&RelayScheme::custom(vec![g1, g2]).unwrap()).unwrap();
        assert!((gs.gram[(0, 1)] - c(0.25, 0.25)).norm() < 1e-15);
        assert!((gs.gram[(1, 0)] - c(0.25, -0.25)).norm() < 1e-15);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [1, 2, 5, 8] {
            let u = random_unitary(n, &mut rng);
            let d = max_abs_diff(&(&u * u.adjoint()), &CMatrix::identity(n, n));
            assert!(d < 1e-13, "n={n} dev={d}");
        }
    }
}
