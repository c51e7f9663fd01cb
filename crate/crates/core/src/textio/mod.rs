//! Plain-text reaction network format and JSON reports.
//!
//! ```text
//! file     := (line NEWLINE)*
//! line     := reaction | comment | blank
//! comment  := '#' any
//! reaction := complex arrow complex [';' rates]
//! complex  := '0' | term ('+' term)*
//! term     := [coeff] IDENT
//! coeff    := positive integer | decimal | p/q
//! arrow    := '->' | '<->'
//! rates    := 'k=' NUM | 'kf=' NUM ',' 'kr=' NUM
//! ```
//!
//! A comment of the form `# species: A B C` placed before the first reaction
//! fixes the leading species order; otherwise species are ordered by first
//! appearance.

pub mod report;

use std::fmt;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::model::{Complex, ModelError, Network, NetworkBuilder};
use crate::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParseErrorKind {
    Syntax,
    DuplicateRate,
    BadCoefficient,
    EmptySideBoth,
    /// Well-formed text describing an invalid reaction (identical sides,
    /// species on both sides, non-positive rate).
    InvalidReaction,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Keep reactions whose sides share a species.
    pub permissive: bool,
}

/// The input grammar, for usage messages.
pub const GRAMMAR: &str = "\
file     := (line NEWLINE)*
line     := reaction | comment | blank
comment  := '#' any            ('# species: A B C' fixes species order)
reaction := complex arrow complex [';' rates]
complex  := '0' | term ('+' term)*
term     := [coeff] IDENT
coeff    := positive integer | decimal | p/q
arrow    := '->' | '<->'
rates    := 'k=' NUM | 'kf=' NUM ',' 'kr=' NUM
";

pub fn parse_network(text: &str) -> Result<Network, ParseError> {
    parse_network_with(text, ParseOptions::default())
}

/// Like [`parse_network`] for raw bytes; invalid UTF-8 is a syntax error.
pub fn parse_network_bytes(bytes: &[u8]) -> Result<Network, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(s) => parse_network(s),
        Err(e) => {
            let good = &bytes[..e.valid_up_to()];
            let line = good.iter().filter(|&&b| b == b'\n').count() + 1;
            let last = good.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
            let column = String::from_utf8_lossy(&good[last..]).chars().count() + 1;
            Err(ParseError {
                line,
                column,
                message: "invalid UTF-8".into(),
                kind: ParseErrorKind::Syntax,
            })
        }
    }
}

type Side = Vec<(String, Rational)>;

enum Rates {
    None,
    Single(f64),
    Pair(f64, f64),
}

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    _src: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        Cursor {
            chars: src.chars().collect(),
            pos: 0,
            line,
            _src: src,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn column(&self) -> usize {
        self.pos + 1
    }

    fn err_at(&self, column: usize, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column,
            message: message.into(),
            kind,
        }
    }

    fn err(&self, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
        self.err_at(self.column(), kind, message)
    }

    fn describe_next(&self) -> String {
        match self.peek() {
            Some(c) => format!("`{c}`"),
            None => "end of line".into(),
        }
    }

    fn eat(&mut self, s: &str) -> bool {
        let n = s.chars().count();
        if self.chars[self.pos..].iter().take(n).copied().eq(s.chars()) {
            self.pos += n;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Option<String> {
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return None,
        }
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
        {
            self.pos += 1;
        }
        Some(self.chars[start..self.pos].iter().collect())
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    /// integer | decimal | p/q, exactly
    fn coefficient(&mut self) -> Result<Option<Rational>, ParseError> {
        if !self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
            return Ok(None);
        }
        let col = self.column();
        let int = self.digits();
        let mut value = if int.is_empty() {
            Rational::zero()
        } else {
            Rational::from_integer(int.parse::<BigInt>().expect("digits"))
        };
        if self.peek() == Some('.') {
            self.pos += 1;
            let frac = self.digits();
            if int.is_empty() && frac.is_empty() {
                return Err(self.err_at(col, ParseErrorKind::BadCoefficient, "malformed number"));
            }
            if !frac.is_empty() {
                let num: BigInt = frac.parse().expect("digits");
                let den = num_traits::pow(BigInt::from(10), frac.len());
                value += Rational::new(num, den);
            }
        } else if self.peek() == Some('/') {
            self.pos += 1;
            let den = self.digits();
            if den.is_empty() {
                return Err(self.err(ParseErrorKind::BadCoefficient, "expected denominator after `/`"));
            }
            let den: BigInt = den.parse().expect("digits");
            if den.is_zero() {
                return Err(self.err_at(col, ParseErrorKind::BadCoefficient, "zero denominator"));
            }
            value /= Rational::from_integer(den);
        }
        Ok(Some(value))
    }

    fn rate_number(&mut self) -> Result<f64, ParseError> {
        let col = self.column();
        let start = self.pos;
        if matches!(self.peek(), Some('+') | Some('-')) {
            self.pos += 1;
        }
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E')
        {
            if matches!(self.peek(), Some('e') | Some('E'))
                && matches!(self.peek_at(1), Some('+') | Some('-'))
            {
                self.pos += 1;
            }
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
            Ok(v) => Err(self.err_at(
                col,
                ParseErrorKind::InvalidReaction,
                format!("rate constant must be positive, got {v}"),
            )),
            Err(_) => Err(self.err_at(col, ParseErrorKind::Syntax, "expected a number")),
        }
    }

    fn complex(&mut self) -> Result<Side, ParseError> {
        self.skip_ws();
        let mut terms = Vec::new();
        loop {
            self.skip_ws();
            let col = self.column();
            let coeff = self.coefficient()?;
            self.skip_ws();
            let name = self.ident();
            match (coeff, name) {
                (Some(c), None) if c.is_zero() && terms.is_empty() => return Ok(terms),
                (Some(_), None) | (None, None) => {
                    return Err(self.err(
                        ParseErrorKind::Syntax,
                        format!("expected a species name, found {}", self.describe_next()),
                    ))
                }
                (Some(c), Some(n)) => {
                    if c.is_zero() {
                        return Err(self.err_at(
                            col,
                            ParseErrorKind::BadCoefficient,
                            "coefficient must be positive",
                        ));
                    }
                    terms.push((n, c));
                }
                (None, Some(n)) => terms.push((n, Rational::one())),
            }
            self.skip_ws();
            if self.peek() == Some('+') {
                self.pos += 1;
            } else {
                return Ok(terms);
            }
        }
    }

    fn rates(&mut self, reversible: bool) -> Result<Rates, ParseError> {
        let mut k = None;
        let mut kf = None;
        let mut kr = None;
        loop {
            self.skip_ws();
            let col = self.column();
            let Some(name) = self.ident() else {
                return Err(self.err(ParseErrorKind::Syntax, "expected `k=`, `kf=` or `kr=`"));
            };
            self.skip_ws();
            if !self.eat("=") {
                return Err(self.err(ParseErrorKind::Syntax, "expected `=`"));
            }
            self.skip_ws();
            let v = self.rate_number()?;
            let slot = match name.as_str() {
                "k" => &mut k,
                "kf" => &mut kf,
                "kr" => &mut kr,
                other => {
                    return Err(self.err_at(
                        col,
                        ParseErrorKind::Syntax,
                        format!("unknown rate `{other}`"),
                    ))
                }
            };
            if slot.is_some() {
                return Err(self.err_at(
                    col,
                    ParseErrorKind::DuplicateRate,
                    format!("rate `{name}` given twice"),
                ));
            }
            *slot = Some((v, col));
            self.skip_ws();
            if !self.eat(",") {
                break;
            }
        }
        match (reversible, k, kf, kr) {
            (false, Some((v, _)), None, None) => Ok(Rates::Single(v)),
            (true, None, Some((f, _)), Some((r, _))) => Ok(Rates::Pair(f, r)),
            (true, Some((_, col)), _, _) => Err(self.err_at(
                col,
                ParseErrorKind::Syntax,
                "reversible reaction takes `kf=` and `kr=`",
            )),
            (false, _, Some((_, col)), _) | (false, _, _, Some((_, col))) => Err(self.err_at(
                col,
                ParseErrorKind::Syntax,
                "irreversible reaction takes a single `k=`",
            )),
            _ => Err(self.err(ParseErrorKind::Syntax, "reversible reaction needs both `kf=` and `kr=`")),
        }
    }
}

fn model_error(line: usize, column: usize, e: ModelError) -> ParseError {
    ParseError {
        line,
        column,
        message: e.to_string(),
        kind: match e {
            ModelError::NonPositiveCoefficient { .. } => ParseErrorKind::BadCoefficient,
            ModelError::InvalidName(_) | ModelError::DuplicateSpecies(_) => ParseErrorKind::Syntax,
            _ => ParseErrorKind::InvalidReaction,
        },
    }
}

fn species_pragma(comment: &str) -> Option<&str> {
    comment
        .strip_prefix('#')?
        .trim_start()
        .strip_prefix("species:")
}

pub fn parse_network_with(text: &str, opts: ParseOptions) -> Result<Network, ParseError> {
    let mut b = NetworkBuilder::default().permissive(opts.permissive);
    let mut pragma_line = None;
    let mut seen_reaction = false;
    let mut last_line = 1;
    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let mut cur = Cursor::new(raw, line_no);
        cur.skip_ws();
        match cur.peek() {
            None => continue,
            Some('#') => {
                let rest: String = cur.chars[cur.pos..].iter().collect();
                if let Some(list) = species_pragma(&rest) {
                    if seen_reaction || pragma_line.is_some() {
                        return Err(cur.err(
                            ParseErrorKind::Syntax,
                            "species order must come once, before the first reaction",
                        ));
                    }
                    let names: Vec<&str> = list.split_whitespace().collect();
                    b.declare_species(&names)
                        .map_err(|e| model_error(line_no, cur.column(), e))?;
                    pragma_line = Some(line_no);
                }
                continue;
            }
            Some(_) => {}
        }
        let start_col = cur.column();
        let left = cur.complex()?;
        cur.skip_ws();
        let reversible = if cur.eat("<->") {
            true
        } else if cur.eat("->") {
            false
        } else {
            return Err(cur.err(
                ParseErrorKind::Syntax,
                format!("expected `->` or `<->`, found {}", cur.describe_next()),
            ));
        };
        let right_col = {
            cur.skip_ws();
            cur.column()
        };
        let right = cur.complex()?;
        if left.is_empty() && right.is_empty() {
            return Err(cur.err_at(
                right_col,
                ParseErrorKind::EmptySideBoth,
                "both sides are the zero complex",
            ));
        }
        cur.skip_ws();
        let rates = if cur.eat(";") {
            cur.rates(reversible)?
        } else {
            Rates::None
        };
        cur.skip_ws();
        if cur.peek().is_some() {
            return Err(cur.err(
                ParseErrorKind::Syntax,
                format!("unexpected {}", cur.describe_next()),
            ));
        }
        let res = if reversible {
            let pair = match rates {
                Rates::Pair(f, r) => Some((f, r)),
                _ => None,
            };
            b.add_reversible(&left, &right, pair, None).map(|_| ())
        } else {
            let k = match rates {
                Rates::Single(k) => Some(k),
                _ => None,
            };
            b.add_reaction(&left, &right, k, None).map(|_| ())
        };
        res.map_err(|e| model_error(line_no, start_col, e))?;
        seen_reaction = true;
    }
    if !seen_reaction {
        return Err(ParseError {
            line: last_line.max(1),
            column: 1,
            message: "no reactions".into(),
            kind: ParseErrorKind::Syntax,
        });
    }
    b.build().map_err(|e| model_error(pragma_line.unwrap_or(1), 1, e))
}

struct SideText<'a>(&'a Complex, &'a Network);

impl fmt::Display for SideText<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.display_spaced(self.1.species()))
    }
}

/// Inverse of [`parse_network`]. Adjacent forward/reverse pairs are written
/// with `<->`; a species line is emitted only when the species order differs
/// from order of first appearance.
pub fn serialize_network(net: &Network) -> String {
    let mut lines = Vec::new();
    let mut appearance = Vec::new();
    let mut seen = vec![false; net.species_count()];
    let reactions = net.reactions();
    let paired = |j: usize| {
        net.reversible_pairs().iter().any(|&(f, r)| {
            f == j
                && r == j + 1
                && reactions[f].reactant == reactions[r].product
                && reactions[f].product == reactions[r].reactant
                && reactions[f].rate.is_some() == reactions[r].rate.is_some()
        })
    };
    let mut j = 0;
    while j < reactions.len() {
        let r = &reactions[j];
        for (s, _) in r.reactant.terms().chain(r.product.terms()) {
            if !seen[s] {
                seen[s] = true;
                appearance.push(s);
            }
        }
        let mut line = String::new();
        if paired(j) {
            let back = &reactions[j + 1];
            write!(line, "{} <-> {}", SideText(&r.reactant, net), SideText(&r.product, net)).unwrap();
            if let (Some(f), Some(b)) = (r.rate, back.rate) {
                write!(line, " ; kf={f}, kr={b}").unwrap();
            }
            j += 2;
        } else {
            write!(line, "{} -> {}", SideText(&r.reactant, net), SideText(&r.product, net)).unwrap();
            if let Some(k) = r.rate {
                write!(line, " ; k={k}").unwrap();
            }
            j += 1;
        }
        lines.push(line);
    }
    let mut out = String::new();
    if appearance.iter().enumerate().any(|(i, &s)| i != s) {
        out.push_str("# species:");
        for s in net.species() {
            out.push(' ');
            out.push_str(&s.name);
        }
        out.push('\n');
    }
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}
