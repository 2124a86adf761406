//! Batch experiments: SNR sweeps, slope fits, code certification and
//! analytic curves, each writing a CSV (or report) plus a manifest.

use crate::codebook::{
    cdd_condition, codeword_difference, difference_matrix, min_gram_eigenvalue, phase_rolling_condition,
    rank_full, Codebook, RankTolerance,
};
use crate::config::ExperimentConfig;
use crate::error::{invalid, Error, Result};
use crate::outage::{analytic_jensen_bracket, mc_outage};
use crate::scheme::{gramian, RelayScheme, SchemeKind};
use crate::stats::{db_to_linear, fit_diversity_slope, CurveFingerprint, OutageCurve, SlopeEstimate};
use crate::streams::{point_salt, TrialStreams};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Key tag shared by all outage estimators, so Jensen and exact sweeps
/// with the same seed see the same channel draws.
const OUTAGE_TAG: u64 = 0x6f75_7461_6765;

/// Reproducibility record written next to every CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config_echo: String,
    pub version: String,
    pub wall_time_s: f64,
    /// `(snr_db, events, trials)` for each grid point.
    pub point_events: Vec<(f64, u64, u64)>,
}

impl RunManifest {
    /// The config echo followed by metadata as comment lines, so the
    /// manifest itself is a valid config file.
    pub fn to_text(&self) -> String {
        let mut s = self.config_echo.clone();
        let _ = writeln!(s, "# relaydiv version {}", self.version);
        let _ = writeln!(s, "# wall_time_s {:.3}", self.wall_time_s);
        for (db, events, trials) in &self.point_events {
            let _ = writeln!(s, "# point snr_db={db} events={events} trials={trials}");
        }
        s
    }
}

/// `<out>.manifest`
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

fn output_path(config: &ExperimentConfig) -> PathBuf {
    config.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.csv", config.experiment.name())))
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), source }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| invalid(format!("csv buffer: {e}")))?;
    write_file(path, &bytes)
}

fn write_manifest(config: &ExperimentConfig, out: &Path, start: Instant, points: Vec<(f64, u64, u64)>) -> Result<RunManifest> {
    let manifest = RunManifest {
        config_echo: config.to_config_text(),
        version: crate::VERSION.to_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
        point_events: points,
    };
    write_file(&manifest_path(out), manifest.to_text().as_bytes())?;
    Ok(manifest)
}

fn build_scheme(config: &ExperimentConfig) -> Result<RelayScheme> {
    let scheme = config.scheme.build()?.with_relay_power(config.power);
    if scheme.relays() > scheme.block_len() {
        return Err(invalid(format!("need K <= N, got K={}, N={}", scheme.relays(), scheme.block_len())));
    }
    Ok(scheme)
}

fn fingerprint(scheme: &RelayScheme, config: &ExperimentConfig) -> CurveFingerprint {
    CurveFingerprint {
        scheme: scheme.kind().name().to_string(),
        relays: scheme.relays(),
        block_len: scheme.block_len(),
        r: config.r,
        seed: config.seed,
    }
}

/// Diversity order `K(1 - 2r)` of the optimal tradeoff curve.
pub fn theory_exponent(k: usize, r: f64) -> f64 {
    k as f64 * (1.0 - 2.0 * r)
}

/// Runs the configured outage estimator over the grid. Grid points are
/// independent: each has its own key derived from `(seed, rho)`.
pub fn outage_curve(config: &ExperimentConfig) -> Result<OutageCurve> {
    let scheme = build_scheme(config)?;
    let target = config.rate_target();
    let mut points = Vec::with_capacity(config.snr_db.len());
    for &db in &config.snr_db {
        let rho = db_to_linear(db);
        let streams = TrialStreams::new(config.seed, point_salt(OUTAGE_TAG, rho));
        let mut est = mc_outage(&scheme, config.estimator, target, rho, config.trials, &streams)?;
        est.snr_db = db;
        points.push(est);
    }
    OutageCurve::new(points, fingerprint(&scheme, config))
}

#[derive(Serialize)]
struct SweepRow {
    snr_db: f64,
    probability: f64,
    ci_low: f64,
    ci_high: f64,
    trials: u64,
    events: u64,
}

const SWEEP_HEADER: &[&str] = &["snr_db", "probability", "ci_low", "ci_high", "trials", "events"];

fn sweep_rows(curve: &OutageCurve) -> Vec<SweepRow> {
    curve
        .points
        .iter()
        .map(|p| SweepRow {
            snr_db: p.snr_db,
            probability: p.probability,
            ci_low: p.ci_low,
            ci_high: p.ci_high,
            trials: p.trials,
            events: p.events,
        })
        .collect()
}

fn point_events(curve: &OutageCurve) -> Vec<(f64, u64, u64)> {
    curve.points.iter().map(|p| (p.snr_db, p.events, p.trials)).collect()
}

pub struct SweepOutput {
    pub curve: OutageCurve,
    pub csv: PathBuf,
    pub manifest: RunManifest,
}

/// Outage sweep: CSV columns `snr_db, probability, ci_low, ci_high, trials, events`.
pub fn run_outage_sweep(config: &ExperimentConfig) -> Result<SweepOutput> {
    let start = Instant::now();
    let out = output_path(config);
    let curve = outage_curve(config)?;
    write_csv(&out, &sweep_rows(&curve), SWEEP_HEADER)?;
    let manifest = write_manifest(config, &out, start, point_events(&curve))?;
    Ok(SweepOutput { curve, csv: out, manifest })
}

#[derive(Serialize)]
struct SlopeRow {
    snr_db: f64,
    probability: f64,
    ci_low: f64,
    ci_high: f64,
    trials: u64,
    events: u64,
    used: bool,
    d_hat: Option<f64>,
    stderr: Option<f64>,
    theory_exponent: f64,
}

pub struct SlopeOutput {
    pub curve: OutageCurve,
    /// `Err` carries the reason when too few points had enough events.
    pub slope: std::result::Result<SlopeEstimate, String>,
    pub theory_exponent: f64,
    pub csv: PathBuf,
    pub manifest: RunManifest,
}

impl SlopeOutput {
    pub fn is_partial(&self) -> bool {
        self.slope.is_err()
    }
}

/// Diversity-slope fit. Per-point rows are written even when the fit
/// fails for lack of events; the fit columns are then empty.
pub fn run_dm_slope(config: &ExperimentConfig) -> Result<SlopeOutput> {
    if config.snr_db.len() < 3 {
        return Err(invalid("dm-slope needs at least 3 grid points"));
    }
    let start = Instant::now();
    let out = output_path(config);
    let curve = outage_curve(config)?;
    let theory = theory_exponent(curve.fingerprint.relays, config.r);
    let slope = match fit_diversity_slope(&curve, config.min_events) {
        Ok(s) => Ok(s),
        Err(Error::InsufficientData(msg)) => Err(msg),
        Err(e) => return Err(e),
    };
    let fit = slope.as_ref().ok();
    let rows: Vec<SlopeRow> = curve
        .points
        .iter()
        .map(|p| SlopeRow {
            snr_db: p.snr_db,
            probability: p.probability,
            ci_low: p.ci_low,
            ci_high: p.ci_high,
            trials: p.trials,
            events: p.events,
            used: p.events >= config.min_events && p.events < p.trials,
            d_hat: fit.map(|s| s.d_hat),
            stderr: fit.map(|s| s.stderr),
            theory_exponent: theory,
        })
        .collect();
    write_csv(&out, &rows, &[])?;
    let manifest = write_manifest(config, &out, start, point_events(&curve))?;
    Ok(SlopeOutput { curve, slope, theory_exponent: theory, csv: out, manifest })
}

#[derive(Serialize)]
struct AnalyticRow {
    snr_db: f64,
    lower: f64,
    upper: f64,
    theory_exponent: f64,
}

pub struct AnalyticPoint {
    pub snr_db: f64,
    pub lower: f64,
    pub upper: f64,
}

pub struct AnalyticOutput {
    pub points: Vec<AnalyticPoint>,
    pub theory_exponent: f64,
    pub csv: PathBuf,
    pub manifest: RunManifest,
}

/// Analytic Jensen-outage bracket over the grid:
/// CSV columns `snr_db, lower, upper, theory_exponent`.
pub fn run_analytic_curve(config: &ExperimentConfig) -> Result<AnalyticOutput> {
    let start = Instant::now();
    let out = output_path(config);
    let scheme = build_scheme(config)?;
    let gram = gramian(&scheme)?;
    let theory = theory_exponent(scheme.relays(), config.r);
    let mut points = Vec::new();
    for &db in &config.snr_db {
        let b = analytic_jensen_bracket(scheme.relays(), &gram, config.r, db_to_linear(db))?;
        points.push(AnalyticPoint { snr_db: db, lower: b.lower, upper: b.upper });
    }
    let rows: Vec<AnalyticRow> = points
        .iter()
        .map(|p| AnalyticRow { snr_db: p.snr_db, lower: p.lower, upper: p.upper, theory_exponent: theory })
        .collect();
    write_csv(&out, &rows, &["snr_db", "lower", "upper", "theory_exponent"])?;
    let manifest = write_manifest(config, &out, start, Vec::new())?;
    Ok(AnalyticOutput { points, theory_exponent: theory, csv: out, manifest })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairVerdict {
    pub i: usize,
    pub j: usize,
    pub full_rank: bool,
    pub singular_values: Vec<f64>,
    /// Simplified-condition verdict for cyclic-delay / phase-rolling schemes.
    pub simplified: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyReport {
    pub scheme: String,
    pub relays: usize,
    pub block_len: usize,
    pub codewords: usize,
    pub pairs: Vec<PairVerdict>,
    pub mu_min: f64,
    /// `(snr_db, rho^(-2r), mu_min > rho^(-2r))` per grid point.
    pub universality: Vec<(f64, f64, bool)>,
    pub r: f64,
}

impl CertifyReport {
    pub fn certified(&self) -> bool {
        self.pairs.iter().all(|p| p.full_rank)
    }

    pub fn first_violation(&self) -> Option<&PairVerdict> {
        self.pairs.iter().find(|p| !p.full_rank)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "scheme {} K={} N={} codewords={} pairs={}",
            self.scheme,
            self.relays,
            self.block_len,
            self.codewords,
            self.pairs.len()
        );
        let verdict = if self.certified() { "CERTIFIED" } else { "NOT CERTIFIED" };
        let _ = writeln!(s, "full-rank condition: {verdict}");
        if let Some(v) = self.first_violation() {
            let sv: Vec<String> = v.singular_values.iter().map(|x| format!("{x:.6e}")).collect();
            let zero = if v.singular_values.first().is_none_or(|&x| x == 0.0) { " (dx = 0)" } else { "" };
            let _ = writeln!(
                s,
                "first violation: codewords {} and {}{zero}, singular values [{}]",
                v.i,
                v.j,
                sv.join(", ")
            );
        }
        let _ = writeln!(s, "mu_min {:e}", self.mu_min);
        for (db, thr, ok) in &self.universality {
            let _ = writeln!(
                s,
                "snr_db {db}: mu_min {} rho^(-2r) = {thr:e} (r = {})",
                if *ok { ">" } else { "<=" },
                self.r
            );
        }
        if self.pairs.first().is_some_and(|p| p.simplified.is_some()) {
            let _ = writeln!(s, "simplified condition agrees with SVD rank on all pairs");
        }
        for p in &self.pairs {
            let simplified = match p.simplified {
                Some(true) => " simplified=holds",
                Some(false) => " simplified=fails",
                None => "",
            };
            let _ = writeln!(
                s,
                "pair {} {}: {}{simplified}",
                p.i,
                p.j,
                if p.full_rank { "full-rank" } else { "rank-deficient" }
            );
        }
        s
    }
}

/// Certifies `config.codebook` against the scheme: per-pair rank, `mu_min`,
/// and the finite-SNR universality check on the grid. For cyclic-delay and
/// phase-rolling schemes the simplified conditions must agree with the SVD
/// verdicts (equivalence at `K = N`, sufficiency for `K < N`).
pub fn certify(config: &ExperimentConfig) -> Result<CertifyReport> {
    let scheme = build_scheme(config)?;
    let path = config.codebook.as_ref().ok_or_else(|| invalid("certify-code needs a codebook path"))?;
    let book = crate::fileio::load_codebook(path)?;
    certify_book(&scheme, &book, config.r, &config.snr_db)
}

pub fn certify_book(scheme: &RelayScheme, book: &Codebook, r: f64, snr_db: &[f64]) -> Result<CertifyReport> {
    if book.block_len() != scheme.block_len() {
        return Err(invalid(format!(
            "codebook length {} != scheme block length {}",
            book.block_len(),
            scheme.block_len()
        )));
    }
    let w = book.codewords();
    let square = scheme.relays() == scheme.block_len();
    let pairs: Vec<(usize, usize)> = (0..w.len()).flat_map(|i| ((i + 1)..w.len()).map(move |j| (i, j))).collect();
    let pairs = pairs
        .into_par_iter()
        .map(|(i, j)| -> Result<PairVerdict> {
            let dx = codeword_difference(&w[i], &w[j]);
            let phi = difference_matrix(scheme, &dx)?;
            let full_rank = rank_full(&phi, RankTolerance::default());
            let simplified = match scheme.kind() {
                SchemeKind::CyclicDelay => Some(cdd_condition(&dx)),
                SchemeKind::PhaseRolling => Some(phase_rolling_condition(&dx)),
                SchemeKind::Custom => None,
            };
            if let Some(c) = simplified {
                let disagree = if square { c != full_rank } else { c && !full_rank };
                if disagree {
                    return Err(Error::InternalConsistency(format!(
                        "simplified condition ({c}) contradicts SVD rank ({full_rank}) for codewords {i} and {j}"
                    )));
                }
            }
            Ok(PairVerdict { i, j, full_rank, singular_values: crate::linalg::singular_values(&phi.phi), simplified })
        })
        .collect::<Result<Vec<_>>>()?;
    let mu_min = min_gram_eigenvalue(scheme, book)?;
    let universality = snr_db
        .iter()
        .map(|&db| {
            let thr = db_to_linear(db).powf(-2.0 * r);
            (db, thr, mu_min > thr)
        })
        .collect();
    Ok(CertifyReport {
        scheme: scheme.kind().name().to_string(),
        relays: scheme.relays(),
        block_len: scheme.block_len(),
        codewords: w.len(),
        pairs,
        mu_min,
        universality,
        r,
    })
}

pub struct CertifyOutput {
    pub report: CertifyReport,
    pub path: Option<PathBuf>,
}

/// Certification; the report is written to `config.out` when given.
pub fn run_certify(config: &ExperimentConfig) -> Result<CertifyOutput> {
    let start = Instant::now();
    let report = certify(config)?;
    if let Some(out) = &config.out {
        write_file(out, report.to_text().as_bytes())?;
        write_manifest(config, out, start, Vec::new())?;
    }
    Ok(CertifyOutput { report, path: config.out.clone() })
}
