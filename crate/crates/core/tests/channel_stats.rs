#![allow(clippy::needless_range_loop)]

mod common;

use common::c;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relaydiv::channel::{
    effective_channel, sample_channel, simulate_normalized, simulate_two_hop, ChannelRealization, NoiseSwitches,
};
use relaydiv::linalg::C64;
use relaydiv::scheme::RelayScheme;

#[test]
fn sampled_entries_have_unit_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let draws = 1_000_000;
    let (mut sum, mut sq, mut cross, mut prod) = (c(0.0, 0.0), 0.0, 0.0, 0.0);
    for _ in 0..draws {
        let ch = sample_channel(1, &mut rng).unwrap();
        let (f, h) = (ch.f[0], ch.h[0]);
        sum += f;
        sq += f.norm_sqr();
        cross += f.re * f.im;
        prod += (h * f).norm_sqr();
    }
    let n = draws as f64;
    let var = sq / n - (sum / n).norm_sqr();
    assert!((0.99..=1.01).contains(&var), "variance {var}");
    assert!((sum / n).norm() < 5e-3);
    assert!((cross / n).abs() < 3e-3, "real/imag correlation {}", cross / n);
    assert!(((prod / n) - 1.0).abs() < 0.01, "E|hf|^2 = {}", prod / n);
}

#[test]
fn prefactor_gap_at_high_snr() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rho = 1e6;
    for (k, n) in [(1, 1), (2, 4), (3, 8)] {
        let scheme = RelayScheme::cyclic_delay(k, n).unwrap();
        for _ in 0..100 {
            let ch = sample_channel(k, &mut rng).unwrap();
            let x: Vec<C64> = relaydiv::channel::complex_gaussian_vec(n, &mut rng);
            let a = simulate_two_hop(&scheme, &ch, &x, rho, NoiseSwitches::OFF, &mut rng).unwrap();
            let b = simulate_normalized(&scheme, &ch, &x, rho, NoiseSwitches::OFF, &mut rng).unwrap();
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).norm() <= 1e-3 * v.norm() + 1e-300);
            }
        }
    }
}

/// Sample covariance of the two-hop output with `x = 0` for a fixed channel.
fn noise_covariance(scheme: &RelayScheme, ch: &ChannelRealization, rho: f64, trials: usize) -> Vec<Vec<C64>> {
    let n = scheme.block_len();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = vec![c(0.0, 0.0); n];
    let mut cov = vec![vec![c(0.0, 0.0); n]; n];
    for _ in 0..trials {
        let y = simulate_two_hop(scheme, ch, &x, rho, NoiseSwitches::ON, &mut rng).unwrap();
        for a in 0..n {
            for b in 0..n {
                cov[a][b] += y[a] * y[b].conj();
            }
        }
    }
    cov.iter().map(|row| row.iter().map(|v| v / trials as f64).collect()).collect()
}

#[test]
fn single_sample_block_noise_is_white() {
    let scheme = RelayScheme::cyclic_delay(1, 1).unwrap();
    let ch = ChannelRealization::new(vec![c(0.3, -1.1)], vec![c(1.4, 0.2)]).unwrap();
    let cov = noise_covariance(&scheme, &ch, 100.0, 100_000);
    assert!((0.97..=1.03).contains(&cov[0][0].re), "{:?}", cov[0][0]);
}

#[test]
fn block_noise_is_white_with_predicted_level() {
    let (k, n) = (2, 4);
    let rho = 100.0;
    let scheme = RelayScheme::cyclic_delay(k, n).unwrap();
    let ch = ChannelRealization::new(vec![c(0.3, -1.1), c(0.9, 0.4)], vec![c(1.4, 0.2), c(-0.5, 0.7)]).unwrap();
    let cov = noise_covariance(&scheme, &ch, rho, 100_000);
    // Relay noise passes G_i with G_i G_i^H = I/N, so only 1/N of it reaches each sample.
    let g = rho / (1.0 + rho) * ch.h_norm_sq();
    let level = (1.0 + g / n as f64) / (1.0 + g);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                let ratio = cov[a][a].re / level;
                assert!((0.97..=1.03).contains(&ratio), "diag {a}: {ratio}");
            } else {
                assert!(cov[a][b].norm() < 0.02, "off-diag ({a},{b}) {}", cov[a][b].norm());
            }
        }
    }
}

#[test]
fn effective_channel_is_superposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let scheme = RelayScheme::phase_rolling(3, 5).unwrap();
    let h = relaydiv::channel::complex_gaussian_vec(3, &mut rng);
    let f1 = relaydiv::channel::complex_gaussian_vec(3, &mut rng);
    let f2 = relaydiv::channel::complex_gaussian_vec(3, &mut rng);
    let sum: Vec<C64> = f1.iter().zip(&f2).map(|(a, b)| a + b).collect();
    let e = |f: Vec<C64>| effective_channel(&scheme, &ChannelRealization::new(f, h.clone()).unwrap()).unwrap().matrix;
    let lhs = e(sum);
    let rhs = e(f1) + e(f2);
    assert!((lhs - rhs).iter().all(|v| v.norm() < 1e-14));
}
