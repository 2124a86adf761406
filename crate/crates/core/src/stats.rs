//! Binomial estimates, outage curves, and diversity-slope fitting.

use crate::error::{Error, Result};

/// z-quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq)]
pub struct ProbEstimate {
    pub snr_db: f64,
    pub probability: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
    pub events: u64,
}

impl ProbEstimate {
    pub fn from_counts(snr_db: f64, events: u64, trials: u64) -> Self {
        assert!(trials > 0 && events <= trials);
        let probability = events as f64 / trials as f64;
        let (lo, hi) = wilson_interval(events, trials, Z95);
        ProbEstimate {
            snr_db,
            probability,
            ci_low: lo.min(probability),
            ci_high: hi.max(probability),
            trials,
            events,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

/// Wilson score interval for `events` successes in `trials`.
pub fn wilson_interval(events: u64, trials: u64, z: f64) -> (f64, f64) {
    let n = trials as f64;
    let p = events as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// What produced a curve; carried into CSV manifests.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveFingerprint {
    pub scheme: String,
    pub relays: usize,
    pub block_len: usize,
    pub r: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutageCurve {
    pub points: Vec<ProbEstimate>,
    pub fingerprint: CurveFingerprint,
}

impl OutageCurve {
    pub fn new(points: Vec<ProbEstimate>, fingerprint: CurveFingerprint) -> Result<Self> {
        if points.windows(2).any(|w| !(w[0].snr_db < w[1].snr_db)) {
            return Err(Error::InvalidParameter("curve SNR values must be strictly increasing".into()));
        }
        Ok(OutageCurve { points, fingerprint })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeEstimate {
    /// Estimated diversity exponent, the negated log-log slope.
    pub d_hat: f64,
    pub stderr: f64,
    pub points_used: usize,
}

pub const DEFAULT_MIN_EVENTS: u64 = 20;

/// Weighted least squares of `log2 P` on `log2 rho` over points with at
/// least `min_events` events (and at least one non-event).
///
/// Weights are the inverse delta-method variance of `log2 P-hat`,
/// `n p / (1 - p) * ln(2)^2`.
pub fn fit_diversity_slope(curve: &OutageCurve, min_events: u64) -> Result<SlopeEstimate> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    for p in &curve.points {
        if p.events < min_events.max(1) || p.events >= p.trials {
            continue;
        }
        let prob = p.probability;
        let var = (1.0 - prob) / (p.trials as f64 * prob) / std::f64::consts::LN_2.powi(2);
        xs.push(db_to_linear(p.snr_db).log2());
        ys.push(prob.log2());
        ws.push(1.0 / var);
    }
    let (slope, stderr) = weighted_slope(&xs, &ys, &ws)?;
    Ok(SlopeEstimate { d_hat: -slope, stderr, points_used: xs.len() })
}

/// Slope of a weighted least-squares line and its standard error
/// (from the weights, treated as known inverse variances).
pub fn weighted_slope(xs: &[f64], ys: &[f64], ws: &[f64]) -> Result<(f64, f64)> {
    if xs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "slope fit needs at least 2 usable points, have {}",
            xs.len()
        )));
    }
    let sw: f64 = ws.iter().sum();
    let mx = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ys.iter().zip(ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(ws).map(|(x, w)| w * (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("slope fit needs distinct SNR values".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).zip(ws).map(|((x, y), w)| w * (x - mx) * (y - my)).sum();
    Ok((sxy / sxx, (1.0 / sxx).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp() -> CurveFingerprint {
        CurveFingerprint { scheme: "test".into(), relays: 1, block_len: 1, r: 0.0, seed: 0 }
    }

    fn synthetic(d: f64, c: f64) -> OutageCurve {
        let trials = 1u64 << 40;
        let points = (0..6)
            .map(|i| {
                let db = 20.0 + 5.0 * i as f64;
                let p = c * db_to_linear(db).powf(-d);
                let events = (p * trials as f64).round() as u64;
                ProbEstimate { snr_db: db, probability: p, ci_low: p, ci_high: p, trials, events }
            })
            .collect();
        OutageCurve::new(points, fp()).unwrap()
    }

    #[test]
    fn exact_power_laws() {
        let s = fit_diversity_slope(&synthetic(2.0, 1.0), 20).unwrap();
        assert!((s.d_hat - 2.0).abs() < 1e-9);
        assert_eq!(s.points_used, 6);
        let s = fit_diversity_slope(&synthetic(1.0, 7.0), 20).unwrap();
        assert!((s.d_hat - 1.0).abs() < 1e-9);
    }

    #[test]
    fn insufficient_points() {
        let p = ProbEstimate::from_counts(20.0, 50, 1000);
        let q = ProbEstimate::from_counts(25.0, 3, 1000);
        let curve = OutageCurve::new(vec![p, q], fp()).unwrap();
        assert!(matches!(fit_diversity_slope(&curve, 20), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn unsorted_curve_rejected() {
        let p = ProbEstimate::from_counts(25.0, 1, 10);
        let q = ProbEstimate::from_counts(20.0, 1, 10);
        assert!(OutageCurve::new(vec![p, q], fp()).is_err());
    }

    #[test]
    fn wilson_contains_estimate() {
        for (e, n) in [(0u64, 10u64), (1, 10), (5, 10), (10, 10), (3, 100_000)] {
            let est = ProbEstimate::from_counts(0.0, e, n);
            assert!(est.ci_low <= est.probability && est.probability <= est.ci_high);
            assert!(est.ci_low >= 0.0 && est.ci_high <= 1.0);
        }
        // Textbook value: 0 of 10 gives upper limit z^2/(n + z^2).
        let (_, hi) = wilson_interval(0, 10, Z95);
        assert!((hi - Z95 * Z95 / (10.0 + Z95 * Z95)).abs() < 1e-12);
    }
}
