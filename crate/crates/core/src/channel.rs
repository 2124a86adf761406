//! Fading realizations, the effective channel, and the two receive chains.

use crate::error::{invalid, Result};
use crate::linalg::{frobenius_sq, norm_sq, CMatrix, CVector, C64};
use crate::scheme::RelayScheme;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::FRAC_1_SQRT_2;

/// Source-to-relay (`f`) and relay-to-destination (`h`) fading coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub f: Vec<C64>,
    pub h: Vec<C64>,
}

impl ChannelRealization {
    pub fn new(f: Vec<C64>, h: Vec<C64>) -> Result<Self> {
        if f.is_empty() || f.len() != h.len() {
            return Err(invalid(format!(
                "fading vectors must be non-empty and equally long (got {} and {})",
                f.len(),
                h.len()
            )));
        }
        Ok(ChannelRealization { f, h })
    }

    pub fn relays(&self) -> usize {
        self.f.len()
    }

    /// Hadamard product `h ∘ f`.
    pub fn cascade(&self) -> Vec<C64> {
        self.h.iter().zip(&self.f).map(|(h, f)| h * f).collect()
    }

    pub fn h_norm_sq(&self) -> f64 {
        norm_sq(&self.h)
    }
}

/// One `CN(0, 1)` draw, `(a + jb)/sqrt(2)` with `a, b` standard normal.
#[inline]
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let a: f64 = StandardNormal.sample(rng);
    let b: f64 = StandardNormal.sample(rng);
    C64::new(a * FRAC_1_SQRT_2, b * FRAC_1_SQRT_2)
}

pub fn complex_gaussian_vec<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<C64> {
    (0..len).map(|_| complex_gaussian(rng)).collect()
}

/// Draws `f` then `h`, each with `K` i.i.d. `CN(0, 1)` entries.
pub fn sample_channel<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<ChannelRealization> {
    if k == 0 {
        return Err(invalid("relay count K must be at least 1"));
    }
    let f = complex_gaussian_vec(k, rng);
    let h = complex_gaussian_vec(k, rng);
    Ok(ChannelRealization { f, h })
}

#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    pub matrix: CMatrix,
}

impl EffectiveChannel {
    pub fn frobenius_sq(&self) -> f64 {
        frobenius_sq(&self.matrix)
    }
}

fn check_match(scheme: &RelayScheme, ch: &ChannelRealization) -> Result<()> {
    if scheme.relays() != ch.relays() || ch.h.len() != ch.f.len() {
        return Err(invalid(format!(
            "scheme has K={} relays but realization has {}",
            scheme.relays(),
            ch.relays()
        )));
    }
    Ok(())
}

fn check_signal(scheme: &RelayScheme, x: &[C64], rho: f64) -> Result<()> {
    if x.len() != scheme.block_len() {
        return Err(invalid(format!(
            "signal length {} does not match block length {}",
            x.len(),
            scheme.block_len()
        )));
    }
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(invalid(format!("SNR must be positive and finite, got {rho}")));
    }
    Ok(())
}

/// `H_eff = sum_i h_i f_i G_i / sqrt(1 + |h|^2)`.
///
/// With [`crate::scheme::RelayPower::Split`] the offset `1` becomes `K`.
pub fn effective_channel(scheme: &RelayScheme, ch: &ChannelRealization) -> Result<EffectiveChannel> {
    check_match(scheme, ch)?;
    let n = scheme.block_len();
    let scale = 1.0 / (scheme.prefactor_offset() + ch.h_norm_sq()).sqrt();
    let mut matrix = CMatrix::zeros(n, n);
    for ((g, h), f) in scheme.matrices().iter().zip(&ch.h).zip(&ch.f) {
        matrix += g * (h * f * scale);
    }
    Ok(EffectiveChannel { matrix })
}

/// Which noise sources a simulation injects. Disabling is for tests only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseSwitches {
    pub relay: bool,
    pub destination: bool,
}

impl NoiseSwitches {
    pub const ON: NoiseSwitches = NoiseSwitches { relay: true, destination: true };
    #[doc(hidden)]
    pub const OFF: NoiseSwitches = NoiseSwitches { relay: false, destination: false };
}

/// Noise power at the destination before normalization,
/// `N0' = 1 + P_r/(1 + rho) |h|^2` where `P_r` is the relay transmit power.
pub fn noise_normalization(scheme: &RelayScheme, ch: &ChannelRealization, rho: f64) -> f64 {
    1.0 + scheme.relay_tx_power(rho) / (1.0 + rho) * ch.h_norm_sq()
}

/// Literal two-hop chain: `r_i = sqrt(rho) f_i x + w_i`, relays send
/// `sqrt(P_r/(1+rho)) G_i r_i`, the destination adds unit noise and divides
/// by `sqrt(N0')`.
///
/// The forwarded relay noise `G_i w_i` has covariance `I/N`, so the output
/// noise covariance is `(1 + P_r/(1+rho) |h|^2 / N) / N0' * I`, which is the
/// identity only for `N = 1`.
pub fn simulate_two_hop<R: Rng + ?Sized>(
    scheme: &RelayScheme,
    ch: &ChannelRealization,
    x: &[C64],
    rho: f64,
    noise: NoiseSwitches,
    rng: &mut R,
) -> Result<Vec<C64>> {
    check_match(scheme, ch)?;
    check_signal(scheme, x, rho)?;
    let n = scheme.block_len();
    let xv = CVector::from_column_slice(x);
    let relay_amp = (scheme.relay_tx_power(rho) / (1.0 + rho)).sqrt();
    let mut y = CVector::zeros(n);
    for ((g, f), h) in scheme.matrices().iter().zip(&ch.f).zip(&ch.h) {
        let mut r = xv.scale(rho.sqrt()) * *f;
        if noise.relay {
            for v in r.iter_mut() {
                *v += complex_gaussian(rng);
            }
        }
        y += (g * r) * (h * relay_amp);
    }
    if noise.destination {
        for v in y.iter_mut() {
            *v += complex_gaussian(rng);
        }
    }
    let norm = noise_normalization(scheme, ch, rho).sqrt();
    Ok(y.iter().map(|v| v / norm).collect())
}

/// High-SNR normalized model `y = sqrt(rho) H_eff x + z`.
pub fn simulate_normalized<R: Rng + ?Sized>(
    scheme: &RelayScheme,
    ch: &ChannelRealization,
    x: &[C64],
    rho: f64,
    noise: NoiseSwitches,
    rng: &mut R,
) -> Result<Vec<C64>> {
    check_signal(scheme, x, rho)?;
    let heff = effective_channel(scheme, ch)?;
    Ok(apply_normalized(&heff, x, rho, noise.destination, rng))
}

pub(crate) fn apply_normalized<R: Rng + ?Sized>(
    heff: &EffectiveChannel,
    x: &[C64],
    rho: f64,
    noisy: bool,
    rng: &mut R,
) -> Vec<C64> {
    let xv = CVector::from_column_slice(x);
    let mut y = (&heff.matrix * xv).scale(rho.sqrt());
    if noisy {
        for v in y.iter_mut() {
            *v += complex_gaussian(rng);
        }
    }
    y.iter().copied().collect()
}
