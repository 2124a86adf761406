use clap::{Args, Parser, Subcommand};
use relaydiv::config::{ConfigDocument, ExperimentKind, SchemeSpec, Value};
use relaydiv::experiments::{run_analytic_curve, run_certify, run_dm_slope, run_outage_sweep};
use relaydiv::selfcheck::run_self_check_with;
use relaydiv::{Error, Result};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_WARNING: u8 = 6;

#[derive(Parser)]
#[command(name = "relaydiv", version, about = "Outage, diversity and code-certification experiments for two-hop relay networks")]
struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true, env = "RELAYDIV_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Outage probability over an SNR grid.
    OutageSweep(Common),
    /// Outage sweep plus a weighted log-log slope fit.
    DmSlope(Common),
    /// Check a codebook against the rank criterion.
    CertifyCode(Common),
    /// Analytic bounds on the Jensen-outage probability.
    AnalyticCurve(Common),
    /// Numerical identity checks.
    SelfCheck(Common),
}

#[derive(Args)]
struct Common {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (CSV, or report for certify-code).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config key, e.g. `--set snr_db=[20,30,40]`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn document(&self) -> Result<ConfigDocument> {
        let mut doc = match &self.config {
            Some(p) => ConfigDocument::load(p)?,
            None => ConfigDocument::default(),
        };
        for o in &self.overrides {
            doc.set(o)?;
        }
        if let Some(seed) = self.seed {
            doc.set_value("seed", Value::Scalar(seed.to_string()))?;
        }
        if let Some(out) = &self.out {
            doc.set_value("out", Value::Scalar(out.display().to_string()))?;
        }
        Ok(doc)
    }
}

fn run(command: &Command) -> Result<u8> {
    let (kind, common) = match command {
        Command::OutageSweep(c) => (ExperimentKind::OutageSweep, c),
        Command::DmSlope(c) => (ExperimentKind::DmSlope, c),
        Command::CertifyCode(c) => (ExperimentKind::CertifyCode, c),
        Command::AnalyticCurve(c) => (ExperimentKind::AnalyticCurve, c),
        Command::SelfCheck(c) => (ExperimentKind::SelfCheck, c),
    };
    let config = common.document()?.build(Some(kind))?;
    match kind {
        ExperimentKind::OutageSweep => {
            let out = run_outage_sweep(&config)?;
            for p in &out.curve.points {
                println!("snr_db {:>6} P_out {:.4e} [{:.3e}, {:.3e}] events {}/{}", p.snr_db, p.probability, p.ci_low, p.ci_high, p.events, p.trials);
            }
            println!("wrote {}", out.csv.display());
            Ok(0)
        }
        ExperimentKind::DmSlope => {
            let out = run_dm_slope(&config)?;
            println!("wrote {}", out.csv.display());
            match &out.slope {
                Ok(s) => {
                    println!(
                        "d_hat {:.4} +/- {:.4} from {} points (theory {})",
                        s.d_hat, s.stderr, s.points_used, out.theory_exponent
                    );
                    Ok(0)
                }
                Err(msg) => {
                    eprintln!("warning: slope fit skipped: {msg}; per-point data written");
                    Ok(EXIT_WARNING)
                }
            }
        }
        ExperimentKind::CertifyCode => {
            let out = run_certify(&config)?;
            print!("{}", out.report.to_text());
            if let Some(p) = &out.path {
                println!("wrote {}", p.display());
            }
            Ok(if out.report.certified() { 0 } else { EXIT_CHECK_FAILED })
        }
        ExperimentKind::AnalyticCurve => {
            let out = run_analytic_curve(&config)?;
            println!("wrote {}", out.csv.display());
            Ok(0)
        }
        ExperimentKind::SelfCheck => {
            let fixture = match &config.scheme {
                SchemeSpec::File(p) => {
                    let text = std::fs::read_to_string(p)
                        .map_err(|source| Error::Io { path: p.display().to_string(), source })?;
                    Some(relaydiv::fileio::parse_scheme_matrices(&p.display().to_string(), &text)?)
                }
                _ => None,
            };
            let report = run_self_check_with(config.seed, fixture.as_deref());
            println!("{report}");
            Ok(if report.passed() { 0 } else { EXIT_CHECK_FAILED })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(&cli.command)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
