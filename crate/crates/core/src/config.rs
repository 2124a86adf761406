//! Experiment configuration.
//!
//! A configuration is a flat text document of `key = value` lines:
//!
//! ```text
//! # K=2 cyclic delay, Jensen outage
//! scheme = cdd
//! K = 2
//! N = 8
//! r = 0.25
//! snr_db = [20, 25, 30, 35, 40, 45]
//! seed = 7
//! out = "k2.csv"
//! ```
//!
//! Values are numbers, bare words, double-quoted strings, or bracketed
//! comma-separated lists. `#` starts a comment outside quotes. Later lines
//! override earlier ones, and command-line `--set key=value` overrides win
//! over the file.

use crate::error::{invalid, Error, Result};
use crate::outage::{OutageKind, RateTarget, TrialsPolicy};
use crate::scheme::{RelayPower, RelayScheme};
use crate::stats::DEFAULT_MIN_EVENTS;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Base rate used by `dm-slope` when `r = 0` and no `base_rate` is given.
pub const DEFAULT_FIXED_BASE_RATE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    OutageSweep,
    DmSlope,
    CertifyCode,
    AnalyticCurve,
    SelfCheck,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::OutageSweep,
        ExperimentKind::DmSlope,
        ExperimentKind::CertifyCode,
        ExperimentKind::AnalyticCurve,
        ExperimentKind::SelfCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::OutageSweep => "outage-sweep",
            ExperimentKind::DmSlope => "dm-slope",
            ExperimentKind::CertifyCode => "certify-code",
            ExperimentKind::AnalyticCurve => "analytic-curve",
            ExperimentKind::SelfCheck => "self-check",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SchemeSpec {
    CyclicDelay { k: usize, n: usize },
    PhaseRolling { k: usize, n: usize },
    File(PathBuf),
}

impl SchemeSpec {
    pub fn build(&self) -> Result<RelayScheme> {
        match self {
            SchemeSpec::CyclicDelay { k, n } => RelayScheme::cyclic_delay(*k, *n),
            SchemeSpec::PhaseRolling { k, n } => RelayScheme::phase_rolling(*k, *n),
            SchemeSpec::File(p) => crate::fileio::load_scheme(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub scheme: SchemeSpec,
    pub power: RelayPower,
    pub r: f64,
    /// Additive rate offset in bits; `None` picks the per-experiment default.
    pub base_rate: Option<f64>,
    pub snr_db: Vec<f64>,
    pub estimator: OutageKind,
    pub trials: TrialsPolicy,
    pub min_events: u64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub codebook: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Rate target with the base-rate default resolved for this experiment.
    pub fn rate_target(&self) -> RateTarget {
        let base_rate = self.base_rate.unwrap_or(
            if self.experiment == ExperimentKind::DmSlope && self.r == 0.0 { DEFAULT_FIXED_BASE_RATE } else { 0.0 },
        );
        RateTarget { r: self.r, base_rate }
    }

    pub fn validate(&self) -> Result<()> {
        if let SchemeSpec::CyclicDelay { k, n } | SchemeSpec::PhaseRolling { k, n } = self.scheme {
            if k == 0 || k > n {
                return Err(invalid(format!("need 1 <= K <= N, got K={k}, N={n}")));
            }
        }
        if !(0.0..=0.5).contains(&self.r) {
            return Err(invalid(format!("r={} outside [0, 1/2]", self.r)));
        }
        if let Some(b) = self.base_rate {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(invalid(format!("base_rate must be finite and non-negative, got {b}")));
            }
        }
        if self.experiment != ExperimentKind::SelfCheck {
            if self.snr_db.is_empty() {
                return Err(invalid("snr_db grid is empty"));
            }
            if self.snr_db.iter().any(|x| !x.is_finite()) {
                return Err(invalid("snr_db grid has a non-finite value"));
            }
            if self.snr_db.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid("snr_db grid must be strictly increasing"));
            }
        }
        match self.trials {
            TrialsPolicy::Fixed(0) => return Err(invalid("trials must be positive")),
            TrialsPolicy::Adaptive { min_trials, max_trials, .. } if min_trials == 0 || max_trials < min_trials => {
                return Err(invalid("need 0 < min_trials <= max_trials"));
            }
            _ => {}
        }
        if self.experiment == ExperimentKind::DmSlope && self.snr_db.len() < 3 {
            return Err(invalid("dm-slope needs at least 3 grid points"));
        }
        if self.experiment == ExperimentKind::CertifyCode && self.codebook.is_none() {
            return Err(invalid("certify-code needs a codebook path"));
        }
        Ok(())
    }

    /// Canonical config document; parsing it yields an equal config.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment = {}", self.experiment.name());
        match &self.scheme {
            SchemeSpec::CyclicDelay { k, n } => {
                let _ = writeln!(s, "scheme = cdd\nK = {k}\nN = {n}");
            }
            SchemeSpec::PhaseRolling { k, n } => {
                let _ = writeln!(s, "scheme = phase-rolling\nK = {k}\nN = {n}");
            }
            SchemeSpec::File(p) => {
                let _ = writeln!(s, "scheme = {}", quote(&p.display().to_string()));
            }
        }
        let power = match self.power {
            RelayPower::PerRelay => "per-relay",
            RelayPower::Split => "split",
        };
        let _ = writeln!(s, "power = {power}");
        let _ = writeln!(s, "r = {}", self.r);
        if let Some(b) = self.base_rate {
            let _ = writeln!(s, "base_rate = {b}");
        }
        let grid: Vec<String> = self.snr_db.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(s, "snr_db = [{}]", grid.join(", "));
        let _ = writeln!(s, "estimator = {}", self.estimator.name());
        match self.trials {
            TrialsPolicy::Fixed(n) => {
                let _ = writeln!(s, "trials = {n}");
            }
            TrialsPolicy::Adaptive { min_trials, target_events, max_trials } => {
                let _ = writeln!(
                    s,
                    "min_trials = {min_trials}\ntarget_events = {target_events}\nmax_trials = {max_trials}"
                );
            }
        }
        let _ = writeln!(s, "min_events = {}", self.min_events);
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(p) = &self.out {
            let _ = writeln!(s, "out = {}", quote(&p.display().to_string()));
        }
        if let Some(p) = &self.codebook {
            let _ = writeln!(s, "codebook = {}", quote(&p.display().to_string()));
        }
        s
    }
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Scalar(String),
    List(Vec<String>),
}

#[derive(Debug, Clone)]
struct Entry {
    value: Value,
    line: usize,
    column: usize,
}

/// Raw `key = value` document before interpretation.
#[derive(Debug, Clone, Default)]
pub struct ConfigDocument {
    source: String,
    entries: BTreeMap<String, Entry>,
}

pub const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "scheme",
    "K",
    "N",
    "power",
    "r",
    "base_rate",
    "snr_db",
    "estimator",
    "trials",
    "min_trials",
    "target_events",
    "max_trials",
    "min_events",
    "seed",
    "out",
    "codebook",
];

struct Cursor<'a> {
    chars: Vec<(usize, char)>,
    pos: usize,
    source: &'a str,
    line: usize,
}

impl Cursor<'_> {
    fn column(&self) -> usize {
        self.chars.get(self.pos).map_or(self.chars.len(), |(i, _)| *i) + 1
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse { path: self.source.to_string(), line: self.line, column: self.column(), message: message.into() }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).map(|c| c.1)
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        matches!(self.peek(), None | Some('#'))
    }

    fn atom(&mut self) -> Result<String> {
        self.skip_ws();
        match self.peek() {
            Some('"') => {
                self.pos += 1;
                let mut s = String::new();
                loop {
                    match self.peek() {
                        None => return Err(self.err("unterminated string")),
                        Some('"') => {
                            self.pos += 1;
                            return Ok(s);
                        }
                        Some('\\') => {
                            self.pos += 1;
                            match self.peek() {
                                Some(c) => s.push(c),
                                None => return Err(self.err("unterminated string")),
                            }
                            self.pos += 1;
                        }
                        Some(c) => {
                            s.push(c);
                            self.pos += 1;
                        }
                    }
                }
            }
            _ => {
                let start = self.pos;
                while self.peek().is_some_and(|c| !c.is_whitespace() && !matches!(c, ',' | '[' | ']' | '#' | '"' | '=')) {
                    self.pos += 1;
                }
                if self.pos == start {
                    return Err(self.err("expected a value"));
                }
                Ok(self.chars[start..self.pos].iter().map(|c| c.1).collect())
            }
        }
    }

    fn value(&mut self) -> Result<Value> {
        self.skip_ws();
        if self.peek() != Some('[') {
            return self.atom().map(Value::Scalar);
        }
        self.pos += 1;
        let mut items = Vec::new();
        self.skip_ws();
        if self.peek() == Some(']') {
            self.pos += 1;
            return Ok(Value::List(items));
        }
        loop {
            items.push(self.atom()?);
            self.skip_ws();
            match self.peek() {
                Some(',') => self.pos += 1,
                Some(']') => {
                    self.pos += 1;
                    return Ok(Value::List(items));
                }
                _ => return Err(self.err("expected `,` or `]`")),
            }
        }
    }
}

impl ConfigDocument {
    pub fn parse(source: &str, text: &str) -> Result<Self> {
        let mut doc = ConfigDocument { source: source.to_string(), entries: BTreeMap::new() };
        for (i, line) in text.lines().enumerate() {
            let mut cur = Cursor { chars: line.char_indices().collect(), pos: 0, source, line: i + 1 };
            if cur.at_end() {
                continue;
            }
            let column = cur.column();
            let key = cur.atom()?;
            doc.check_key(&key, i + 1, column)?;
            cur.skip_ws();
            if cur.peek() != Some('=') {
                return Err(cur.err("expected `=`"));
            }
            cur.pos += 1;
            let vcol = {
                cur.skip_ws();
                cur.column()
            };
            let value = cur.value()?;
            if !cur.at_end() {
                return Err(cur.err("unexpected text after value"));
            }
            doc.entries.insert(key, Entry { value, line: i + 1, column: vcol });
        }
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::parse(&path.display().to_string(), &text)
    }

    fn check_key(&self, key: &str, line: usize, column: usize) -> Result<()> {
        if KNOWN_KEYS.contains(&key) {
            Ok(())
        } else {
            Err(Error::Parse {
                path: self.source.clone(),
                line,
                column,
                message: format!("unknown key `{key}`"),
            })
        }
    }

    /// Applies a `key=value` override; the value uses the file grammar.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let parsed = ConfigDocument::parse("--set", assignment)?;
        if parsed.entries.is_empty() {
            return Err(invalid(format!("empty override `{assignment}`")));
        }
        for (k, mut e) in parsed.entries {
            e.line = 0;
            self.entries.insert(k, e);
        }
        Ok(())
    }

    pub fn set_value(&mut self, key: &str, value: Value) -> Result<()> {
        self.check_key(key, 0, 0)?;
        self.entries.insert(key.to_string(), Entry { value, line: 0, column: 0 });
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key).map(|e| &e.value)
    }

    fn bad(&self, key: &str, message: String) -> Error {
        let e = &self.entries[key];
        if e.line == 0 {
            invalid(format!("override `{key}`: {message}"))
        } else {
            Error::Parse { path: self.source.clone(), line: e.line, column: e.column, message: format!("`{key}`: {message}") }
        }
    }

    fn scalar(&self, key: &str) -> Result<Option<&str>> {
        match self.entries.get(key).map(|e| &e.value) {
            None => Ok(None),
            Some(Value::Scalar(s)) => Ok(Some(s)),
            Some(Value::List(_)) => Err(self.bad(key, "expected a single value, found a list".into())),
        }
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        match self.scalar(key)? {
            None => Ok(None),
            Some(s) => s.parse().map(Some).map_err(|_| self.bad(key, format!("expected {what}, found `{s}`"))),
        }
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        let v: Option<f64> = self.parsed(key, "a number")?;
        match v {
            Some(x) if !x.is_finite() => Err(self.bad(key, "expected a finite number".into())),
            _ => Ok(v),
        }
    }

    /// Interprets the document for `experiment` (the file's own
    /// `experiment` key is ignored when `experiment` is given).
    pub fn build(&self, experiment: Option<ExperimentKind>) -> Result<ExperimentConfig> {
        let experiment = match experiment {
            Some(k) => k,
            None => match self.scalar("experiment")? {
                Some(s) => ExperimentKind::from_name(s).ok_or_else(|| self.bad("experiment", format!("unknown experiment `{s}`")))?,
                None => return Err(invalid("no experiment given")),
            },
        };
        let k: Option<usize> = self.parsed("K", "a positive integer")?;
        let n: Option<usize> = self.parsed("N", "a positive integer")?;
        let scheme = match self.scalar("scheme")?.unwrap_or("cdd") {
            name @ ("cdd" | "phase-rolling") => {
                let (k, n) = match (k, n) {
                    (Some(k), Some(n)) => (k, n),
                    _ if experiment == ExperimentKind::SelfCheck => (k.unwrap_or(2), n.unwrap_or(4)),
                    _ => return Err(invalid(format!("scheme `{name}` needs K and N"))),
                };
                if name == "cdd" {
                    SchemeSpec::CyclicDelay { k, n }
                } else {
                    SchemeSpec::PhaseRolling { k, n }
                }
            }
            path => SchemeSpec::File(PathBuf::from(path)),
        };
        let power = match self.scalar("power")?.unwrap_or("per-relay") {
            "per-relay" => RelayPower::PerRelay,
            "split" => RelayPower::Split,
            other => return Err(self.bad("power", format!("expected per-relay or split, found `{other}`"))),
        };
        let estimator = match self.scalar("estimator")?.unwrap_or("jensen") {
            "jensen" => OutageKind::Jensen,
            "exact" => OutageKind::Exact,
            other => return Err(self.bad("estimator", format!("expected jensen or exact, found `{other}`"))),
        };
        let snr_db = match self.entries.get("snr_db").map(|e| &e.value) {
            None => Vec::new(),
            Some(Value::Scalar(s)) => vec![s.clone()],
            Some(Value::List(v)) => v.clone(),
        };
        let snr_db = snr_db
            .iter()
            .map(|s| match s.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(self.bad("snr_db", format!("expected a finite number, found `{s}`"))),
            })
            .collect::<Result<Vec<f64>>>()?;
        let default = TrialsPolicy::default();
        let TrialsPolicy::Adaptive { min_trials: d_min, target_events: d_target, max_trials: d_max } = default else {
            unreachable!()
        };
        let trials = match self.parsed::<u64>("trials", "a positive integer")? {
            Some(n) => TrialsPolicy::Fixed(n),
            None => TrialsPolicy::Adaptive {
                min_trials: self.parsed("min_trials", "a positive integer")?.unwrap_or(d_min),
                target_events: self.parsed("target_events", "a non-negative integer")?.unwrap_or(d_target),
                max_trials: self.parsed("max_trials", "a positive integer")?.unwrap_or(d_max),
            },
        };
        let config = ExperimentConfig {
            experiment,
            scheme,
            power,
            r: self.float("r")?.unwrap_or(0.0),
            base_rate: self.float("base_rate")?,
            snr_db,
            estimator,
            trials,
            min_events: self.parsed("min_events", "a non-negative integer")?.unwrap_or(DEFAULT_MIN_EVENTS),
            seed: self.parsed("seed", "a 64-bit unsigned integer")?.unwrap_or(0),
            out: self.scalar("out")?.map(PathBuf::from),
            codebook: self.scalar("codebook")?.map(PathBuf::from),
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# sweep\nscheme = cdd\nK = 2\nN = 8   # block\nr = 0.25\nsnr_db = [20, 25.5, 30]\nseed = 11\nout = \"a b.csv\"\ntrials = 5000\n";

    #[test]
    fn parses_sample() {
        let c = ConfigDocument::parse("c", SAMPLE).unwrap().build(Some(ExperimentKind::OutageSweep)).unwrap();
        assert_eq!(c.scheme, SchemeSpec::CyclicDelay { k: 2, n: 8 });
        assert_eq!(c.snr_db, vec![20.0, 25.5, 30.0]);
        assert_eq!(c.trials, TrialsPolicy::Fixed(5000));
        assert_eq!(c.out, Some(PathBuf::from("a b.csv")));
        assert_eq!(c.seed, 11);
        assert_eq!(c.estimator, OutageKind::Jensen);
    }

    #[test]
    fn echo_reparses_to_same_config() {
        let c = ConfigDocument::parse("c", SAMPLE).unwrap().build(Some(ExperimentKind::DmSlope)).unwrap();
        let echo = c.to_config_text();
        let back = ConfigDocument::parse("echo", &echo).unwrap().build(None).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn overrides_win() {
        let mut doc = ConfigDocument::parse("c", SAMPLE).unwrap();
        doc.set("seed=99").unwrap();
        doc.set("snr_db = [1,2,3,4]").unwrap();
        let c = doc.build(Some(ExperimentKind::OutageSweep)).unwrap();
        assert_eq!(c.seed, 99);
        assert_eq!(c.snr_db.len(), 4);
    }

    #[test]
    fn rejects_invalid_configs() {
        let build = |extra: &str| {
            let mut doc = ConfigDocument::parse("c", SAMPLE).unwrap();
            doc.set(extra).unwrap();
            doc.build(Some(ExperimentKind::OutageSweep))
        };
        assert!(build("K = 9").is_err());
        assert!(build("r = 0.6").is_err());
        assert!(build("snr_db = [30, 20]").is_err());
        assert!(build("snr_db = []").is_err());
        assert!(build("trials = 0").is_err());
        assert!(build("estimator = fancy").is_err());
    }

    #[test]
    fn parse_errors_have_positions() {
        let err = ConfigDocument::parse("f.cfg", "K = 2\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, column: 1, .. }));
        let err = ConfigDocument::parse("f.cfg", "snr_db = [1, 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, column: 15, .. }));
        let err = ConfigDocument::parse("f.cfg", "K 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, column: 3, .. }));
        let doc = ConfigDocument::parse("f.cfg", "scheme = cdd\nK = 2\nN = x\nsnr_db=[1]\n").unwrap();
        let err = doc.build(Some(ExperimentKind::OutageSweep)).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, column: 5, .. }));
    }

    #[test]
    fn dm_slope_base_rate_default() {
        let mut doc = ConfigDocument::parse("c", SAMPLE).unwrap();
        doc.set("r = 0").unwrap();
        let c = doc.build(Some(ExperimentKind::DmSlope)).unwrap();
        assert_eq!(c.rate_target().base_rate, DEFAULT_FIXED_BASE_RATE);
        let c = doc.build(Some(ExperimentKind::OutageSweep)).unwrap();
        assert_eq!(c.rate_target().base_rate, 0.0);
    }
}
