//! Text formats: expanded polynomials and point assignments.
//!
//! ```text
//! poly    := [sign] term (sign term)*        sign := '+' | '-'
//! term    := integer | integer '*' factors | factors
//! factors := factor ('*' factor)*            factor := ident ['^' natural]
//! ident   := letter (letter | digit | '_')*
//! ```
//!
//! Points are comma separated `var=value` pairs where a value is an
//! integer, a decimal, or an interval `[lo,hi]`.

use std::collections::BTreeMap;
use std::fmt;
use std::iter::Peekable;
use std::str::{CharIndices, FromStr};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::numeric::Interval;
use crate::polynomial::{Exponent, Polynomial, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedEnd,
    ExpectedTerm,
    BadExponent,
    UnknownVariable(String),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::UnexpectedChar(c) => write!(f, "unexpected character `{c}`"),
            ParseErrorKind::UnexpectedEnd => f.write_str("unexpected end of input"),
            ParseErrorKind::ExpectedTerm => f.write_str("expected a term"),
            ParseErrorKind::BadExponent => f.write_str("exponent must be a natural number"),
            ParseErrorKind::UnknownVariable(v) => write!(f, "variable `{v}` is not in the variable list"),
        }
    }
}

/// Syntax error at a character position (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at position {position}")]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

struct Scanner<'a> {
    src: &'a str,
    chars: Peekable<CharIndices<'a>>,
    /// Character count consumed so far.
    column: usize,
}

impl<'a> Scanner<'a> {
    fn new(src: &'a str) -> Self {
        Scanner {
            src,
            chars: src.char_indices().peekable(),
            column: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.chars.peek().is_some_and(|(_, c)| c.is_whitespace()) {
            self.bump();
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.peek().map(|&(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next().map(|(_, c)| c);
        if c.is_some() {
            self.column += 1;
        }
        c
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map_or(self.src.len(), |&(i, _)| i)
    }

    fn error(&mut self, kind: ParseErrorKind) -> ParseError {
        self.skip_ws();
        ParseError {
            position: self.column,
            kind,
        }
    }

    fn unexpected(&mut self) -> ParseError {
        match self.peek() {
            Some(c) => self.error(ParseErrorKind::UnexpectedChar(c)),
            None => self.error(ParseErrorKind::UnexpectedEnd),
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> &'a str {
        let start = self.offset();
        while self.chars.peek().is_some_and(|&(_, c)| pred(c)) {
            self.bump();
        }
        let end = self.offset();
        &self.src[start..end]
    }
}

struct PolyParser<'a> {
    scan: Scanner<'a>,
    variables: Vec<String>,
    fixed: bool,
}

/// A parsed term before canonicalization: coefficient and `(variable, exponent)` factors.
type RawTerm = (BigInt, Vec<(usize, Exponent)>);

impl PolyParser<'_> {
    fn poly(&mut self) -> Result<Vec<RawTerm>, ParseError> {
        let mut terms = Vec::new();
        let mut negative = match self.scan.peek() {
            Some('+') => {
                self.scan.bump();
                false
            }
            Some('-') => {
                self.scan.bump();
                true
            }
            _ => false,
        };
        loop {
            let (c, factors) = self.term()?;
            terms.push((if negative { -c } else { c }, factors));
            negative = match self.scan.peek() {
                None => break,
                Some('+') => false,
                Some('-') => true,
                Some(_) => return Err(self.scan.unexpected()),
            };
            self.scan.bump();
        }
        Ok(terms)
    }

    fn term(&mut self) -> Result<RawTerm, ParseError> {
        match self.scan.peek() {
            Some(c) if c.is_ascii_digit() => {
                let digits = self.scan.take_while(|c| c.is_ascii_digit());
                let coefficient = BigInt::from_str(digits).expect("ascii digits");
                if self.scan.peek() == Some('*') {
                    self.scan.bump();
                    Ok((coefficient, self.factors()?))
                } else {
                    Ok((coefficient, Vec::new()))
                }
            }
            Some(c) if c.is_ascii_alphabetic() => Ok((BigInt::one(), self.factors()?)),
            Some(_) | None => match self.scan.peek() {
                Some(c) if is_known_char(c) => Err(self.scan.error(ParseErrorKind::ExpectedTerm)),
                _ => Err(self.scan.unexpected()),
            },
        }
    }

    fn factors(&mut self) -> Result<Vec<(usize, Exponent)>, ParseError> {
        let mut out = vec![self.factor()?];
        while self.scan.peek() == Some('*') {
            self.scan.bump();
            out.push(self.factor()?);
        }
        Ok(out)
    }

    fn factor(&mut self) -> Result<(usize, Exponent), ParseError> {
        match self.scan.peek() {
            Some(c) if c.is_ascii_alphabetic() => {}
            Some(c) if is_known_char(c) => return Err(self.scan.error(ParseErrorKind::ExpectedTerm)),
            _ => return Err(self.scan.unexpected()),
        }
        let position = self.scan.column;
        let name = self.scan.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
        let index = match self.variables.iter().position(|v| v == name) {
            Some(i) => i,
            None if self.fixed => {
                return Err(ParseError {
                    position,
                    kind: ParseErrorKind::UnknownVariable(name.to_string()),
                });
            }
            None => {
                self.variables.push(name.to_string());
                self.variables.len() - 1
            }
        };
        if self.scan.peek() != Some('^') {
            return Ok((index, 1));
        }
        self.scan.bump();
        let position = {
            self.scan.skip_ws();
            self.scan.column
        };
        let digits = self.scan.take_while(|c| c.is_ascii_digit());
        let exponent = digits.parse::<Exponent>().map_err(|_| ParseError {
            position,
            kind: ParseErrorKind::BadExponent,
        })?;
        // `x^2.5` or `x^2a`
        if self.scan.chars.peek().is_some_and(|&(_, c)| c == '.' || c.is_ascii_alphanumeric()) {
            return Err(ParseError {
                position,
                kind: ParseErrorKind::BadExponent,
            });
        }
        Ok((index, exponent))
    }
}

fn is_known_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '*' | '^' | '_')
}

/// Parses an expanded polynomial. Without `variables` the variable list is
/// the order of first appearance; with it, any other name is an error.
pub fn parse_polynomial(src: &str, variables: Option<&[String]>) -> Result<Polynomial, ParseError> {
    let mut parser = PolyParser {
        scan: Scanner::new(src),
        variables: variables.map(<[String]>::to_vec).unwrap_or_default(),
        fixed: variables.is_some(),
    };
    let raw = parser.poly()?;
    let arity = parser.variables.len();
    let terms = raw.into_iter().map(|(c, factors)| {
        let mut exponents = vec![0; arity];
        for (i, e) in factors {
            exponents[i] += e;
        }
        Term::new(c, exponents)
    });
    Ok(Polynomial::canonicalize(terms, parser.variables)
        .expect("exponent vectors are built with the variable count"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainTag {
    Integer,
    Float,
    Interval,
}

impl FromStr for DomainTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "int" | "integer" => Ok(DomainTag::Integer),
            "float" => Ok(DomainTag::Float),
            "interval" => Ok(DomainTag::Interval),
            other => Err(format!("unknown domain `{other}` (expected int, float or interval)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Integer(BigInt),
    Float(f64),
    Interval(Interval),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PointError {
    #[error("variable `{0}` is not bound")]
    Unbound(String),
    #[error("variable `{0}` is bound more than once")]
    Duplicate(String),
    #[error("`{0}` is not a variable of the polynomial")]
    UnknownVariable(String),
    #[error("malformed binding `{0}`")]
    MalformedBinding(String),
    #[error("malformed {expected} literal `{text}`")]
    MalformedLiteral { text: String, expected: &'static str },
    #[error("empty interval: lower bound {lo} exceeds upper bound {hi}")]
    EmptyInterval { lo: String, hi: String },
}

/// Values bound to variable names.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointAssignment {
    bindings: BTreeMap<String, Literal>,
}

impl PointAssignment {
    pub fn get(&self, name: &str) -> Option<&Literal> {
        self.bindings.get(name)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Literals in the order of `variables`.
    pub fn ordered(&self, variables: &[String]) -> Result<Vec<&Literal>, PointError> {
        variables
            .iter()
            .map(|v| self.get(v).ok_or_else(|| PointError::Unbound(v.clone())))
            .collect()
    }
}

/// Parses `x=2, y=[1.5,2]`; every variable must be bound exactly once.
pub fn parse_point(text: &str, variables: &[String], tag: DomainTag) -> Result<PointAssignment, PointError> {
    let mut bindings = BTreeMap::new();
    for piece in split_bindings(text) {
        let piece = piece.trim();
        if piece.is_empty() && text.trim().is_empty() {
            continue;
        }
        let (name, value) = piece
            .split_once('=')
            .ok_or_else(|| PointError::MalformedBinding(piece.to_string()))?;
        let name = name.trim();
        let valid_name = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid_name {
            return Err(PointError::MalformedBinding(piece.to_string()));
        }
        if !variables.iter().any(|v| v == name) {
            return Err(PointError::UnknownVariable(name.to_string()));
        }
        let literal = parse_literal(value.trim(), tag)?;
        if bindings.insert(name.to_string(), literal).is_some() {
            return Err(PointError::Duplicate(name.to_string()));
        }
    }
    let point = PointAssignment { bindings };
    point.ordered(variables)?;
    Ok(point)
}

/// Splits on commas outside brackets.
fn split_bindings(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&text[start..]);
    out
}

fn parse_literal(text: &str, tag: DomainTag) -> Result<Literal, PointError> {
    match tag {
        DomainTag::Integer => BigInt::from_str(text)
            .map(Literal::Integer)
            .map_err(|_| malformed(text, "integer")),
        DomainTag::Float => parse_decimal(text).map(|(f, _)| Literal::Float(f)),
        DomainTag::Interval => {
            let (lo, hi) = match text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
                Some(inner) => inner
                    .split_once(',')
                    .map(|(a, b)| (a.trim(), b.trim()))
                    .ok_or_else(|| malformed(text, "interval"))?,
                None => (text, text),
            };
            let lo_bound = enclose_decimal(lo)?.lo();
            let hi_bound = enclose_decimal(hi)?.hi();
            Interval::new(lo_bound, hi_bound)
                .map(Literal::Interval)
                .ok_or_else(|| PointError::EmptyInterval {
                    lo: lo.to_string(),
                    hi: hi.to_string(),
                })
        }
    }
}

fn malformed(text: &str, expected: &'static str) -> PointError {
    PointError::MalformedLiteral {
        text: text.to_string(),
        expected,
    }
}

/// Nearest float and whether it equals the decimal exactly.
fn parse_decimal(text: &str) -> Result<(f64, bool), PointError> {
    let exact = decimal_to_rational(text).ok_or_else(|| malformed(text, "decimal"))?;
    let f: f64 = text.parse().map_err(|_| malformed(text, "decimal"))?;
    if !f.is_finite() {
        return Err(malformed(text, "decimal"));
    }
    let is_exact = BigRational::from_float(f).is_some_and(|r| r == exact);
    Ok((f, is_exact))
}

/// Tightest float interval containing the decimal's exact value.
fn enclose_decimal(text: &str) -> Result<Interval, PointError> {
    let (f, exact) = parse_decimal(text)?;
    Ok(if exact {
        Interval::point(f)
    } else {
        Interval::new(f.next_down(), f.next_up()).expect("finite")
    })
}

fn decimal_to_rational(text: &str) -> Option<BigRational> {
    let (negative, body) = match text.as_bytes().first()? {
        b'-' => (true, &text[1..]),
        b'+' => (false, &text[1..]),
        _ => (false, text),
    };
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i32>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut numerator = BigInt::from_str(&digits).ok()?;
    if negative {
        numerator = -numerator;
    }
    let scale = exponent.checked_sub(i32::try_from(frac_part.len()).ok()?)?;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(numerator * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numerator, num_traits::pow(ten, scale.unsigned_abs() as usize))
    };
    (!value.denom().is_zero()).then_some(value)
}
