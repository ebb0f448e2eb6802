//! Scalar signals built from constants and single-frequency sinusoids.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! expr := ['+'|'-'] term (('+'|'-') term)*
//! term := number | number '*' trig | trig
//! trig := ('sin'|'cos') '(' number '*t' (('+'|'-') number)? ')'
//! ```

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Vector;

/// Name of the pseudo-random generator used for every sampled realization.
pub const RNG_ALGORITHM: &str = "ChaCha8";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TermKind {
    Const,
    Sin,
    Cos,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub amplitude: f64,
    pub kind: TermKind,
    /// Angular frequency in rad per time unit.
    pub frequency: f64,
    pub phase: f64,
}

impl Term {
    pub fn constant(value: f64) -> Self {
        Term {
            amplitude: value,
            kind: TermKind::Const,
            frequency: 0.0,
            phase: 0.0,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self.kind {
            TermKind::Const => self.amplitude,
            TermKind::Sin => self.amplitude * (self.frequency * t + self.phase).sin(),
            TermKind::Cos => self.amplitude * (self.frequency * t + self.phase).cos(),
        }
    }
}

/// A sum of terms. Never empty; the zero signal is a single constant `0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalExpr {
    terms: Vec<Term>,
}

impl SignalExpr {
    pub fn new(terms: Vec<Term>) -> Self {
        if terms.is_empty() {
            return Self::zero();
        }
        SignalExpr { terms }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(value: f64) -> Self {
        SignalExpr {
            terms: vec![Term::constant(value)],
        }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.eval(t)).sum()
    }

    /// Sum of absolute amplitudes; `|eval(t)| <= amplitude_bound()` for every `t`.
    pub fn amplitude_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.amplitude.abs()).sum()
    }
}

pub fn parse_signal(text: &str) -> Result<SignalExpr> {
    Parser::new(text).parse()
}

pub fn eval_signal(expr: &SignalExpr, t: f64) -> f64 {
    expr.eval(t)
}

impl FromStr for SignalExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_signal(s)
    }
}

impl fmt::Display for SignalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, term) in self.terms.iter().enumerate() {
            let amp = term.amplitude;
            if i == 0 {
                if amp.is_sign_negative() {
                    write!(f, "-")?;
                }
            } else if amp.is_sign_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mag = amp.abs();
            match term.kind {
                TermKind::Const => write!(f, "{mag}")?,
                TermKind::Sin | TermKind::Cos => {
                    let name = if term.kind == TermKind::Sin { "sin" } else { "cos" };
                    write!(f, "{mag}*{name}({}*t", term.frequency)?;
                    if term.phase != 0.0 || term.phase.is_sign_negative() {
                        if term.phase.is_sign_negative() {
                            write!(f, "-{}", -term.phase)?;
                        } else {
                            write!(f, "+{}", term.phase)?;
                        }
                    }
                    write!(f, ")")?;
                }
            }
        }
        Ok(())
    }
}

impl Serialize for SignalText {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for SignalText {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_signal(&text)
            .map(SignalText)
            .map_err(serde::de::Error::custom)
    }
}

/// Serde adapter storing a signal as its textual form.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalText(pub SignalExpr);

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            src: text.as_bytes(),
            pos: 0,
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    fn eat_sign(&mut self) -> Option<f64> {
        match self.peek() {
            Some(b'+') => {
                self.pos += 1;
                Some(1.0)
            }
            Some(b'-') => {
                self.pos += 1;
                Some(-1.0)
            }
            _ => None,
        }
    }

    fn parse(mut self) -> Result<SignalExpr> {
        let mut terms = Vec::new();
        let mut sign = self.eat_sign().unwrap_or(1.0);
        loop {
            let mut term = self.term()?;
            term.amplitude *= sign;
            terms.push(term);
            match self.eat_sign() {
                Some(s) => sign = s,
                None => break,
            }
        }
        if self.peek().is_some() {
            return self.err("unexpected trailing input");
        }
        Ok(SignalExpr::new(terms))
    }

    fn term(&mut self) -> Result<Term> {
        if self.at_trig() {
            return self.trig(1.0);
        }
        let amplitude = self.number()?;
        if self.peek() == Some(b'*') {
            self.pos += 1;
            if !self.at_trig() {
                return self.err("expected 'sin' or 'cos' after '*'");
            }
            return self.trig(amplitude);
        }
        Ok(Term::constant(amplitude))
    }

    fn at_trig(&mut self) -> bool {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        rest.starts_with(b"sin") || rest.starts_with(b"cos")
    }

    fn trig(&mut self, amplitude: f64) -> Result<Term> {
        let kind = if self.src[self.pos..].starts_with(b"sin") {
            TermKind::Sin
        } else {
            TermKind::Cos
        };
        self.pos += 3;
        self.expect(b'(')?;
        let sign = self.eat_sign().unwrap_or(1.0);
        let frequency = sign * self.number()?;
        self.expect(b'*')?;
        self.expect(b't')?;
        let phase = match self.eat_sign() {
            Some(s) => s * self.number()?,
            None => 0.0,
        };
        self.expect(b')')?;
        Ok(Term {
            amplitude,
            kind,
            frequency,
            phase,
        })
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            self.pos = start;
            return self.err("expected a number");
        }
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii slice");
        text.parse::<f64>().or_else(|_| {
            self.pos = start;
            self.err("malformed number")
        })
    }
}

/// A vector of scalar signals, one per component.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSignal {
    components: Vec<SignalExpr>,
}

impl VectorSignal {
    pub fn new(components: Vec<SignalExpr>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::DimensionMismatch(
                "vector signal needs at least one component".into(),
            ));
        }
        Ok(VectorSignal { components })
    }

    pub fn zeros(dim: usize) -> Self {
        VectorSignal {
            components: vec![SignalExpr::zero(); dim.max(1)],
        }
    }

    pub fn constant(values: &[f64]) -> Self {
        VectorSignal {
            components: values.iter().map(|&v| SignalExpr::constant(v)).collect(),
        }
    }

    pub fn parse(texts: &[impl AsRef<str>]) -> Result<Self> {
        Self::new(
            texts
                .iter()
                .map(|t| parse_signal(t.as_ref()))
                .collect::<Result<_>>()?,
        )
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[SignalExpr] {
        &self.components
    }

    pub fn eval(&self, t: f64) -> Vector {
        Vector::from_iterator(self.dim(), self.components.iter().map(|c| c.eval(t)))
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.components.iter().map(|c| c.to_string()).collect()
    }
}

/// Uniform draw from `[lower, upper]`, advancing `rng`.
pub fn sample_in_box(lower: f64, upper: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    if !(lower <= upper) {
        return Err(Error::UnorderedBounds(format!("{lower} > {upper}")));
    }
    let u: f64 = rng.random();
    Ok((lower + (upper - lower) * u).clamp(lower, upper))
}

/// Componentwise [`sample_in_box`].
pub fn sample_vector_in_box(lower: &Vector, upper: &Vector, rng: &mut ChaCha8Rng) -> Result<Vector> {
    let mut out = Vector::zeros(lower.len());
    for i in 0..lower.len() {
        out[i] = sample_in_box(lower[i], upper[i], rng)?;
    }
    Ok(out)
}
