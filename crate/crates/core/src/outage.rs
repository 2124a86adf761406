//! Outage and error probability estimation, analytic bounds, and the
//! pairwise-error / union-bound chain.

use crate::channel::{apply_normalized, effective_channel, sample_channel, ChannelRealization};
use crate::codebook::{codeword_difference, difference_min_eigenvalue, min_gram_eigenvalue, Codebook};
use crate::error::{invalid, Error, Result};
use crate::information::{jensen_mi_via_gramian_with_offset, mutual_information, rate_target};
use crate::linalg::{norm_sq, CVector, C64};
use crate::scheme::{gramian, GramianSummary, RelayScheme};
use crate::special::product_rayleigh_cdf;
use crate::stats::ProbEstimate;
use crate::streams::TrialStreams;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutageKind {
    /// Outage of the Jensen upper bound on the mutual information.
    Jensen,
    /// Outage of the exact mutual information.
    Exact,
}

impl OutageKind {
    pub fn name(self) -> &'static str {
        match self {
            OutageKind::Jensen => "jensen",
            OutageKind::Exact => "exact",
        }
    }
}

/// Rate `base_rate + r log2(rho)` bits per channel use.
///
/// `base_rate = 0` is the multiplexing-gain target; a positive base rate at
/// `r = 0` gives the fixed-rate regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTarget {
    pub r: f64,
    pub base_rate: f64,
}

impl RateTarget {
    pub fn gain(r: f64) -> Self {
        RateTarget { r, base_rate: 0.0 }
    }
}

/// How many trials to spend on one SNR point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrialsPolicy {
    Fixed(u64),
    /// Start at `min_trials` and grow until `target_events` events are seen
    /// or `max_trials` is reached.
    Adaptive { min_trials: u64, target_events: u64, max_trials: u64 },
}

impl Default for TrialsPolicy {
    fn default() -> Self {
        TrialsPolicy::Adaptive { min_trials: 100_000, target_events: 200, max_trials: 100_000_000 }
    }
}

fn snr_db(rho: f64) -> f64 {
    10.0 * rho.log10()
}

/// Per-trial outage indicators `(jensen, exact)` at a given rate threshold.
pub fn outage_indicators(
    scheme: &RelayScheme,
    gram: &GramianSummary,
    ch: &ChannelRealization,
    rho: f64,
    threshold: f64,
) -> Result<(bool, bool)> {
    let jensen = jensen_mi_via_gramian_with_offset(gram, ch, rho, scheme.prefactor_offset());
    let exact = mutual_information(&effective_channel(scheme, ch)?, rho)?;
    Ok((jensen < threshold, exact < threshold))
}

struct OutageTrial<'a> {
    scheme: &'a RelayScheme,
    gram: GramianSummary,
    kind: OutageKind,
    rho: f64,
    threshold: f64,
}

impl OutageTrial<'_> {
    fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<bool> {
        let ch = sample_channel(self.scheme.relays(), rng)?;
        Ok(match self.kind {
            OutageKind::Jensen => {
                jensen_mi_via_gramian_with_offset(&self.gram, &ch, self.rho, self.scheme.prefactor_offset())
                    < self.threshold
            }
            OutageKind::Exact => mutual_information(&effective_channel(self.scheme, &ch)?, self.rho)? < self.threshold,
        })
    }
}

fn check_rate(target: RateTarget) -> Result<()> {
    if !(0.0..=0.5).contains(&target.r) {
        return Err(invalid(format!("multiplexing gain r={} outside [0, 1/2]", target.r)));
    }
    if !(target.base_rate >= 0.0) {
        return Err(invalid(format!("base rate must be non-negative, got {}", target.base_rate)));
    }
    Ok(())
}

/// Outage probability estimate at one SNR under a trials policy.
///
/// Trial `t` uses substream `t` of `streams`; growing the trial count only
/// appends trials, so the estimate is a function of the final count alone.
pub fn mc_outage(
    scheme: &RelayScheme,
    kind: OutageKind,
    target: RateTarget,
    rho: f64,
    policy: TrialsPolicy,
    streams: &TrialStreams,
) -> Result<ProbEstimate> {
    check_rate(target)?;
    let threshold = rate_target(target.r, rho, target.base_rate)?;
    let trial = OutageTrial { scheme, gram: gramian(scheme)?, kind, rho, threshold };
    let run = |lo: u64, hi: u64| streams.try_count(lo, hi, |rng| trial.run(rng));
    let (events, trials) = match policy {
        TrialsPolicy::Fixed(n) => {
            if n == 0 {
                return Err(invalid("trial count must be positive"));
            }
            (run(0, n)?, n)
        }
        TrialsPolicy::Adaptive { min_trials, target_events, max_trials } => {
            if min_trials == 0 || max_trials < min_trials {
                return Err(invalid("adaptive policy needs 0 < min_trials <= max_trials"));
            }
            let mut n = min_trials;
            let mut events = run(0, n)?;
            while events < target_events && n < max_trials {
                let want = (target_events as f64 * n as f64 / events.max(1) as f64).ceil() as u64;
                let next = want.max(2 * n).min(max_trials);
                events += run(n, next)?;
                n = next;
            }
            (events, n)
        }
    };
    Ok(ProbEstimate::from_counts(snr_db(rho), events, trials))
}

/// Jensen-outage probability `P[I_J < r log2 rho]` with a fixed trial count.
pub fn mc_jensen_outage(
    scheme: &RelayScheme,
    r: f64,
    rho: f64,
    trials: u64,
    streams: &TrialStreams,
) -> Result<ProbEstimate> {
    mc_outage(scheme, OutageKind::Jensen, RateTarget::gain(r), rho, TrialsPolicy::Fixed(trials), streams)
}

/// Exact outage probability `P[I < r log2 rho]` with a fixed trial count.
pub fn mc_exact_outage(
    scheme: &RelayScheme,
    r: f64,
    rho: f64,
    trials: u64,
    streams: &TrialStreams,
) -> Result<ProbEstimate> {
    mc_outage(scheme, OutageKind::Exact, RateTarget::gain(r), rho, TrialsPolicy::Fixed(trials), streams)
}

/// Finite-SNR sandwich of the Jensen-outage probability built from the
/// product-Rayleigh CDF and the Gramian eigenvalue extremes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticBracket {
    /// `max(0, (1 - F1(sqrt(rho^(1-2r+eps2))))^K - (1 - F1(sqrt(rho)))^K)`
    pub lower: f64,
    /// `(1 - F1(sqrt(rho^(1-2r-eps1))))^K`
    pub upper: f64,
    /// `log2((1 + K)/lambda_min) / log2(rho)`
    pub eps1: f64,
    /// `log2(K lambda_max) / log2(rho)`
    pub eps2: f64,
}

/// `1 - F1(sqrt(a)) = P(|f|^2 |h|^2 < 1/a)`.
fn product_below_inverse(a: f64) -> f64 {
    product_rayleigh_cdf(1.0 / a.sqrt())
}

pub fn analytic_jensen_bracket(k: usize, gram: &GramianSummary, r: f64, rho: f64) -> Result<AnalyticBracket> {
    if k == 0 {
        return Err(invalid("relay count K must be at least 1"));
    }
    if !(0.0..=0.5).contains(&r) {
        return Err(invalid(format!("multiplexing gain r={r} outside [0, 1/2]")));
    }
    if !(rho > 1.0) {
        return Err(invalid(format!("rho must exceed 1, got {rho}")));
    }
    if !(gram.lambda_min > 0.0) {
        return Err(invalid("bracket undefined for a rank-deficient Gramian (lambda_min = 0)"));
    }
    let kf = k as f64;
    let lrho = rho.log2();
    let eps1 = ((1.0 + kf) / gram.lambda_min).log2() / lrho;
    let eps2 = (kf * gram.lambda_max).log2() / lrho;
    let base = rho.powf(1.0 - 2.0 * r);
    let upper = product_below_inverse(base * gram.lambda_min / (1.0 + kf)).powi(k as i32);
    let lower_raw = product_below_inverse(base * kf * gram.lambda_max).powi(k as i32)
        - product_below_inverse(rho).powi(k as i32);
    Ok(AnalyticBracket { lower: lower_raw.max(0.0), upper, eps1, eps2 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PepBounds {
    /// `min(1, exp(-(rho/4) ||H_eff dx||^2))`
    pub chernoff: f64,
    /// `min(1, exp(-rho mu ||h~||^2 / (4 (1 + K))))`, `mu = lambda_min(Phi^H Phi)`.
    /// Looser than `chernoff` whenever `||h||^2 <= K`.
    pub rayleigh_ritz: f64,
}

pub fn pep_upper_bound(scheme: &RelayScheme, dx: &[C64], ch: &ChannelRealization, rho: f64) -> Result<PepBounds> {
    if !(rho > 0.0) {
        return Err(invalid(format!("SNR must be positive, got {rho}")));
    }
    let heff = effective_channel(scheme, ch)?;
    let hd = &heff.matrix * CVector::from_column_slice(dx);
    let energy = hd.iter().map(|v| v.norm_sqr()).sum::<f64>();
    let mu = difference_min_eigenvalue(scheme, dx)?;
    let ht = norm_sq(&ch.cascade());
    let k = scheme.relays() as f64;
    Ok(PepBounds {
        chernoff: (-(rho / 4.0) * energy).exp().min(1.0),
        rayleigh_ritz: (-rho * mu * ht / (4.0 * (1.0 + k))).exp().min(1.0),
    })
}

/// ML (minimum Euclidean distance) block error probability of `book` over
/// the normalized channel, codewords drawn uniformly.
pub fn mc_ml_error(
    scheme: &RelayScheme,
    book: &Codebook,
    rho: f64,
    trials: u64,
    size_cap: usize,
    streams: &TrialStreams,
) -> Result<ProbEstimate> {
    if book.len() < 2 {
        return Err(invalid("ML error simulation needs at least two codewords"));
    }
    if book.len() > size_cap {
        return Err(Error::ResourceLimit {
            what: "codebook for ML decoding".into(),
            required: book.len() as f64,
            allowed: size_cap as f64,
        });
    }
    if book.block_len() != scheme.block_len() {
        return Err(invalid("codebook and scheme block lengths differ"));
    }
    if trials == 0 || !(rho > 0.0) {
        return Err(invalid("need trials > 0 and rho > 0"));
    }
    let words = book.codewords();
    let m = words.len();
    let errors = streams.try_count(0, trials, |rng| -> Result<bool> {
        let ch = sample_channel(scheme.relays(), rng)?;
        let sent = rng.random_range(0..m);
        let heff = effective_channel(scheme, &ch)?;
        let y = apply_normalized(&heff, &words[sent], rho, true, rng);
        let mut best = (f64::INFINITY, 0usize);
        for (j, w) in words.iter().enumerate() {
            let candidate = apply_normalized(&heff, w, rho, false, rng);
            let d: f64 = y.iter().zip(&candidate).map(|(a, b)| (a - b).norm_sqr()).sum();
            if d < best.0 {
                best = (d, j);
            }
        }
        Ok(best.1 != sent)
    })?;
    Ok(ProbEstimate::from_counts(snr_db(rho), errors, trials))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnionBound {
    /// Natural log of the bound.
    pub ln_value: f64,
    /// `mu_min` used.
    pub mu_min: f64,
}

impl UnionBound {
    /// The bound itself; may exceed 1 or overflow to infinity.
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

/// `rho^(2Nr) exp(-mu_min rho^(2r) / (4 (1 + K)))`, evaluated in log space.
pub fn union_bound(scheme: &RelayScheme, book: &Codebook, rho: f64, r: f64) -> Result<UnionBound> {
    if !(rho > 0.0) {
        return Err(invalid(format!("SNR must be positive, got {rho}")));
    }
    let mu = min_gram_eigenvalue(scheme, book)?;
    Ok(union_bound_from_mu(scheme.block_len(), scheme.relays(), mu, rho, r))
}

pub fn union_bound_from_mu(n: usize, k: usize, mu: f64, rho: f64, r: f64) -> UnionBound {
    let size_term = 2.0 * n as f64 * r * rho.ln();
    let decay = if mu.is_infinite() { f64::INFINITY } else { mu * rho.powf(2.0 * r) / (4.0 * (1.0 + k as f64)) };
    UnionBound { ln_value: size_term - decay, mu_min: mu }
}

/// Smallest `lambda_min(Phi^H Phi)` over the pairs of a book, with the pair.
pub fn worst_pair(scheme: &RelayScheme, book: &Codebook) -> Result<Option<(usize, usize, f64)>> {
    let w = book.codewords();
    let mut worst: Option<(usize, usize, f64)> = None;
    for i in 0..w.len() {
        for j in (i + 1)..w.len() {
            let mu = difference_min_eigenvalue(scheme, &codeword_difference(&w[i], &w[j]))?;
            if worst.is_none_or(|(_, _, m)| mu < m) {
                worst = Some((i, j, mu));
            }
        }
    }
    Ok(worst)
}
