//! Numerical identity checks run by `relaydiv self-check`.

use crate::channel::{effective_channel, sample_channel};
use crate::information::{jensen_mi, jensen_mi_via_gramian_with_offset, mutual_information};
use crate::linalg::{max_abs_diff, CMatrix, C64};
use crate::scheme::{
    cyclic_shift, dft_matrix, gramian, phase_ramp, unitary_scaling_deviation, RelayScheme, UNITARY_SCALING_TOL,
};
use crate::special::product_rayleigh_cdf;
use crate::streams::TrialStreams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub tolerance: f64,
    pub deviation: f64,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, tolerance: f64, deviation: f64) -> Self {
        CheckResult { name: name.into(), tolerance, deviation }
    }

    /// NaN deviations fail.
    pub fn passed(&self) -> bool {
        self.deviation < self.tolerance
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<28} deviation {:.3e}  tolerance {:.1e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.deviation,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SelfCheckReport {
    pub checks: Vec<CheckResult>,
}

impl SelfCheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for SelfCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed()).count();
        write!(f, "{} checks, {failed} failed", self.checks.len())
    }
}

/// Largest block length used by the structural checks.
pub const MAX_CHECK_N: usize = 32;

const IDENTITY_TOL: f64 = 1e-12;

/// `max |G_i^PR - F G_i^CDD F^H|` over `1 <= i <= N <= max_n`.
pub fn duality_deviation(max_n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for n in 1..=max_n {
        let f = dft_matrix(n);
        let cdd = RelayScheme::cyclic_delay(n, n).expect("valid CDD");
        let pr = RelayScheme::phase_rolling(n, n).expect("valid phase rolling");
        for (gc, gp) in cdd.matrices().iter().zip(pr.matrices()) {
            worst = worst.max(max_abs_diff(gp, &(&f * gc * f.adjoint())));
        }
    }
    worst
}

/// `max |P_i - F^H Lambda_i F|` over `1 <= i <= N <= max_n`.
pub fn diagonalization_deviation(max_n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for n in 1..=max_n {
        let f = dft_matrix(n);
        for i in 0..n {
            let rebuilt = f.adjoint() * phase_ramp(n, i) * &f;
            worst = worst.max(max_abs_diff(&cyclic_shift(n, i), &rebuilt));
        }
    }
    worst
}

/// `max |tr(G_i G_j^H) - delta_ij|` for cyclic delay and phase rolling.
pub fn orthogonality_deviation(max_n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for n in 1..=max_n {
        for scheme in [RelayScheme::cyclic_delay(n, n), RelayScheme::phase_rolling(n, n)] {
            let g = gramian(&scheme.expect("valid scheme")).expect("PSD Gramian");
            let target = CMatrix::identity(n, n);
            worst = worst.max(max_abs_diff(&(g.gram * C64::new(n as f64, 0.0)), &target));
        }
    }
    worst
}

/// Largest unitary-scaling deviation among `matrices`.
pub fn unitary_scaling_check(name: &str, matrices: &[CMatrix]) -> CheckResult {
    let dev = matrices.iter().map(unitary_scaling_deviation).fold(0.0, f64::max);
    CheckResult::new(name, UNITARY_SCALING_TOL, dev)
}

fn check_schemes(seed: u64) -> Vec<RelayScheme> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut out = Vec::new();
    for (k, n) in [(1, 1), (2, 2), (2, 4), (3, 8), (4, 8)] {
        out.push(RelayScheme::cyclic_delay(k, n).expect("valid"));
        out.push(RelayScheme::phase_rolling(k, n).expect("valid"));
        out.push(RelayScheme::random_unitary(k, n, &mut rng).expect("valid"));
    }
    out
}

/// `(max relative Gramian discrepancy, max (exact - Jensen))` over random channels.
pub fn channel_identity_deviations(seed: u64, draws_per_scheme: u64) -> (f64, f64) {
    let mut gram_dev: f64 = 0.0;
    let mut dominance: f64 = f64::NEG_INFINITY;
    for (s, scheme) in check_schemes(seed).iter().enumerate() {
        let g = gramian(scheme).expect("PSD Gramian");
        let streams = TrialStreams::new(seed, 0x1d00 + s as u64);
        for t in 0..draws_per_scheme {
            let mut rng = streams.trial(t);
            let ch = sample_channel(scheme.relays(), &mut rng).expect("K >= 1");
            let rho = crate::stats::db_to_linear(rand::Rng::random_range(&mut rng, -10.0..50.0));
            let heff = effective_channel(scheme, &ch).expect("dims");
            let j = jensen_mi(&heff, rho);
            let jg = jensen_mi_via_gramian_with_offset(&g, &ch, rho, 1.0);
            gram_dev = gram_dev.max((j - jg).abs() / j.abs().max(f64::MIN_POSITIVE));
            match mutual_information(&heff, rho) {
                Ok(exact) => dominance = dominance.max(exact - j),
                Err(_) => dominance = f64::NAN,
            }
        }
    }
    (gram_dev, dominance.max(0.0))
}

/// Kolmogorov distance between the empirical law of `|f||h|` and
/// `1 - 2x K1(2x)`.
pub fn cdf_sup_distance(seed: u64, samples: usize) -> f64 {
    let streams = TrialStreams::new(seed, 0xcdf);
    let mut xs: Vec<f64> = (0..samples as u64)
        .map(|t| {
            let mut rng = streams.trial(t);
            let ch = sample_channel(1, &mut rng).expect("K = 1");
            ch.f[0].norm() * ch.h[0].norm()
        })
        .collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = product_rayleigh_cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// All checks on the built-in schemes.
pub fn run_self_check(seed: u64) -> SelfCheckReport {
    run_self_check_with(seed, None)
}

/// As `run_self_check`, with the unitary-scaling check applied to
/// `fixture` instead of the built-in schemes.
pub fn run_self_check_with(seed: u64, fixture: Option<&[CMatrix]>) -> SelfCheckReport {
    let (gram_dev, dominance) = channel_identity_deviations(seed, 2_000);
    let scaling = match fixture {
        Some(m) => unitary_scaling_check("unitary-scaling", m),
        None => {
            let all: Vec<CMatrix> = check_schemes(seed).iter().flat_map(|s| s.matrices().to_vec()).collect();
            unitary_scaling_check("unitary-scaling", &all)
        }
    };
    SelfCheckReport {
        checks: vec![
            CheckResult::new("duality", IDENTITY_TOL, duality_deviation(MAX_CHECK_N)),
            CheckResult::new("dft-diagonalization", IDENTITY_TOL, diagonalization_deviation(MAX_CHECK_N)),
            CheckResult::new("inner-product-orthogonality", IDENTITY_TOL, orthogonality_deviation(MAX_CHECK_N)),
            CheckResult::new("gramian-identity", 1e-10, gram_dev),
            CheckResult::new("jensen-dominance", 1e-9, dominance),
            CheckResult::new("product-rayleigh-cdf", 5e-3, cdf_sup_distance(seed, 1_000_000)),
            scaling,
        ],
    }
}
