//! Text formats for relay schemes and codebooks.
//!
//! ```text
//! # comments run to end of line, blank lines are ignored
//! N 4 K 2            (codebooks: N 4 COUNT 16)
//! re im re im ...    one line per matrix row (K*N lines) or per codeword
//! ```
//!
//! Every data line holds `2N` decimal numbers, real and imaginary parts
//! interleaved. Numbers use Rust's `f64` grammar (no locale, no inf/nan).

use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::scheme::RelayScheme;
use std::fmt::Write as _;
use std::path::Path;

fn parse_error(name: &str, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: name.to_string(), line, column, message: message.into() }
}

struct Token<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

struct Lines<'a> {
    name: &'a str,
    lines: Vec<(usize, Vec<Token<'a>>)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Lines<'a> {
    fn new(name: &'a str, text: &'a str) -> Self {
        let mut lines = Vec::new();
        let mut last_line = 0;
        for (i, raw) in text.lines().enumerate() {
            last_line = i + 1;
            let content = raw.split('#').next().unwrap_or("");
            let mut tokens = Vec::new();
            let mut start = None;
            for (off, ch) in content.char_indices().chain(std::iter::once((content.len(), ' '))) {
                match (ch.is_whitespace(), start) {
                    (false, None) => start = Some(off),
                    (true, Some(s)) => {
                        tokens.push(Token { text: &content[s..off], line: i + 1, column: content[..s].chars().count() + 1 });
                        start = None;
                    }
                    _ => {}
                }
            }
            if !tokens.is_empty() {
                lines.push((i + 1, tokens));
            }
        }
        Lines { name, lines, pos: 0, last_line }
    }

    fn err(&self, line: usize, column: usize, message: impl Into<String>) -> Error {
        parse_error(self.name, line, column, message)
    }

    fn next_line(&mut self, what: &str) -> Result<(usize, &[Token<'a>])> {
        match self.lines.get(self.pos) {
            Some((n, toks)) => {
                self.pos += 1;
                Ok((*n, toks.as_slice()))
            }
            None => Err(self.err(self.last_line + 1, 1, format!("unexpected end of file, expected {what}"))),
        }
    }

    fn finish(&self) -> Result<()> {
        match self.lines.get(self.pos) {
            Some((_, toks)) => Err(self.err(toks[0].line, toks[0].column, "unexpected trailing data")),
            None => Ok(()),
        }
    }

    /// Parses `N <int> <KEY> <int>`.
    fn header(&mut self, key: &str) -> Result<(usize, usize)> {
        let name = self.name;
        let (line, toks) = self.next_line("header")?;
        let toks: Vec<(&str, usize)> = toks.iter().map(|t| (t.text, t.column)).collect();
        let expect = format!("header `N <int> {key} <int>`");
        if toks.len() != 4 || toks[0].0 != "N" || toks[2].0 != key {
            let col = toks.first().map_or(1, |t| t.1);
            return Err(parse_error(name, line, col, format!("expected {expect}")));
        }
        let int = |(text, col): (&str, usize)| -> Result<usize> {
            text.parse::<usize>()
                .map_err(|_| parse_error(name, line, col, format!("expected a non-negative integer, found `{text}`")))
        };
        Ok((int(toks[1])?, int(toks[3])?))
    }

    /// One line of exactly `2n` numbers as `n` complex values.
    fn complex_row(&mut self, n: usize, what: &str) -> Result<Vec<C64>> {
        let name = self.name;
        let (line, toks) = self.next_line(what)?;
        if toks.len() != 2 * n {
            return Err(parse_error(name, line, toks[0].column, format!("expected {} numbers for {what}, found {}", 2 * n, toks.len())));
        }
        let mut vals = Vec::with_capacity(2 * n);
        for t in toks {
            let v = t
                .text
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_error(name, t.line, t.column, format!("invalid number `{}`", t.text)))?;
            vals.push(v);
        }
        Ok(vals.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect())
    }
}

/// Parses a scheme document into its raw matrices (not validated).
pub fn parse_scheme_matrices(name: &str, text: &str) -> Result<Vec<CMatrix>> {
    let mut lines = Lines::new(name, text);
    let (n, k) = lines.header("K")?;
    if n == 0 || k == 0 {
        return Err(lines.err(1, 1, "N and K must be positive"));
    }
    let mut matrices = Vec::with_capacity(k);
    for i in 0..k {
        let mut g = CMatrix::zeros(n, n);
        for row in 0..n {
            let vals = lines.complex_row(n, &format!("row {} of matrix {}", row + 1, i + 1))?;
            for (col, v) in vals.into_iter().enumerate() {
                g[(row, col)] = v;
            }
        }
        matrices.push(g);
    }
    lines.finish()?;
    Ok(matrices)
}

/// Parses and validates a scheme document.
pub fn parse_scheme(name: &str, text: &str) -> Result<RelayScheme> {
    RelayScheme::custom(parse_scheme_matrices(name, text)?)
}

pub fn parse_codebook(name: &str, text: &str) -> Result<Codebook> {
    let mut lines = Lines::new(name, text);
    let (n, count) = lines.header("COUNT")?;
    if n == 0 || count == 0 {
        return Err(lines.err(1, 1, "N and COUNT must be positive"));
    }
    let mut words = Vec::with_capacity(count);
    for i in 0..count {
        words.push(lines.complex_row(n, &format!("codeword {}", i + 1))?);
    }
    lines.finish()?;
    Codebook::new(n, words)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

pub fn load_scheme(path: &Path) -> Result<RelayScheme> {
    parse_scheme(&path.display().to_string(), &read(path)?)
}

pub fn load_codebook(path: &Path) -> Result<Codebook> {
    parse_codebook(&path.display().to_string(), &read(path)?)
}

fn push_row(out: &mut String, vals: impl Iterator<Item = C64>) {
    let mut first = true;
    for v in vals {
        if !first {
            out.push(' ');
        }
        first = false;
        // `{}` on f64 prints the shortest string that parses back to the same bits.
        let _ = write!(out, "{} {}", v.re, v.im);
    }
    out.push('\n');
}

pub fn format_scheme(matrices: &[CMatrix]) -> String {
    let n = matrices.first().map_or(0, |g| g.nrows());
    let mut out = format!("N {n} K {}\n", matrices.len());
    for (i, g) in matrices.iter().enumerate() {
        let _ = writeln!(out, "# G_{}", i + 1);
        for row in 0..n {
            push_row(&mut out, (0..n).map(|c| g[(row, c)]));
        }
    }
    out
}

pub fn format_codebook(book: &Codebook) -> String {
    let mut out = format!("N {} COUNT {}\n", book.block_len(), book.len());
    for w in book.codewords() {
        push_row(&mut out, w.iter().copied());
    }
    out
}
