//! Sparse multivariate polynomials over the integers.
//!
//! Coefficients are arbitrary precision. Terms are kept in graded
//! lexicographic order (highest total degree first, ties broken by the
//! exponent of `x1`, then `x2`, ...), which is also the order of the
//! canonical text form.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Pow, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("variable index 0 at position {pos} (variables are x1, x2, ...)")]
    ZeroVariable { pos: usize },
    #[error("negative exponent at position {pos}")]
    NegativeExponent { pos: usize },
    #[error("expected {expected} values, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("variable index {index} out of range 1..={var_count}")]
    VariableOutOfRange { index: usize, var_count: usize },
}

/// Dense exponent vector with trailing zeros trimmed; entry `k` is the
/// exponent of `x{k+1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Exponents(Vec<u32>);

impl Exponents {
    fn new(mut v: Vec<u32>) -> Self {
        while v.last() == Some(&0) {
            v.pop();
        }
        Exponents(v)
    }

    fn degree(&self) -> u64 {
        self.0.iter().map(|&e| u64::from(e)).sum()
    }

    fn get(&self, k: usize) -> u32 {
        self.0.get(k).copied().unwrap_or(0)
    }

    fn product(&self, other: &Exponents) -> Exponents {
        let len = self.0.len().max(other.0.len());
        Exponents::new((0..len).map(|k| self.get(k) + other.get(k)).collect())
    }
}

impl Ord for Exponents {
    /// "Less" means printed first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.degree().cmp(&self.degree()).then_with(|| {
            let len = self.0.len().max(other.0.len());
            for k in 0..len {
                match other.get(k).cmp(&self.get(k)) {
                    Ordering::Equal => continue,
                    ord => return ord,
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for Exponents {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A single term: nonzero coefficient times a product of variable powers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Monomial {
    pub coefficient: BigInt,
    /// Variable index (1-based) to exponent; no zero entries.
    pub exponents: BTreeMap<usize, u32>,
}

impl Monomial {
    pub fn degree(&self) -> u64 {
        self.exponents.values().map(|&e| u64::from(e)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    var_count: usize,
    terms: BTreeMap<Exponents, BigInt>,
}

impl Polynomial {
    pub fn zero(var_count: usize) -> Self {
        Polynomial {
            var_count,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: impl Into<BigInt>, var_count: usize) -> Self {
        let mut p = Polynomial::zero(var_count);
        p.add_term(Exponents::new(Vec::new()), c.into());
        p
    }

    /// The polynomial `x{index}`.
    pub fn var(index: usize, var_count: usize) -> Self {
        assert!(
            index >= 1 && index <= var_count,
            "variable x{index} outside 1..={var_count}"
        );
        let mut e = vec![0; index];
        e[index - 1] = 1;
        let mut p = Polynomial::zero(var_count);
        p.add_term(Exponents::new(e), BigInt::one());
        p
    }

    /// Builds a polynomial from monomials, combining like terms.
    pub fn from_monomials(
        var_count: usize,
        monomials: impl IntoIterator<Item = Monomial>,
    ) -> Result<Self, PolyError> {
        let mut p = Polynomial::zero(var_count);
        for m in monomials {
            let top = m.exponents.keys().next_back().copied().unwrap_or(0);
            if top > var_count {
                return Err(PolyError::VariableOutOfRange {
                    index: top,
                    var_count,
                });
            }
            if m.exponents.contains_key(&0) {
                return Err(PolyError::VariableOutOfRange {
                    index: 0,
                    var_count,
                });
            }
            let mut e = vec![0; top];
            for (&i, &k) in &m.exponents {
                e[i - 1] = k;
            }
            p.add_term(Exponents::new(e), m.coefficient);
        }
        Ok(p)
    }

    fn add_term(&mut self, e: Exponents, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e);
        match slot {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn var_count(&self) -> usize {
        self.var_count
    }

    /// Highest variable index actually occurring.
    pub fn max_var_used(&self) -> usize {
        self.terms.keys().map(|e| e.0.len()).max().unwrap_or(0)
    }

    /// Re-declares the number of variables; fails if a used variable would
    /// fall out of range.
    pub fn with_var_count(mut self, var_count: usize) -> Result<Self, PolyError> {
        let used = self.max_var_used();
        if used > var_count {
            return Err(PolyError::VariableOutOfRange {
                index: used,
                var_count,
            });
        }
        self.var_count = var_count;
        Ok(self)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.0.is_empty())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical order.
    pub fn monomials(&self) -> impl Iterator<Item = Monomial> + '_ {
        self.terms.iter().map(|(e, c)| Monomial {
            coefficient: c.clone(),
            exponents: e
                .0
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| (i + 1, k))
                .collect(),
        })
    }

    pub fn degree_in(&self, index: usize) -> Result<u32, PolyError> {
        if index == 0 || index > self.var_count {
            return Err(PolyError::VariableOutOfRange {
                index,
                var_count: self.var_count,
            });
        }
        Ok(self
            .terms
            .keys()
            .map(|e| e.get(index - 1))
            .max()
            .unwrap_or(0))
    }

    pub fn total_degree(&self) -> u64 {
        self.terms.keys().map(Exponents::degree).max().unwrap_or(0)
    }

    pub fn evaluate(&self, point: &[BigInt]) -> Result<BigInt, PolyError> {
        if point.len() != self.var_count {
            return Err(PolyError::ArityMismatch {
                expected: self.var_count,
                got: point.len(),
            });
        }
        let mut total = BigInt::zero();
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for (k, &exp) in e.0.iter().enumerate() {
                if exp > 0 {
                    term *= Pow::pow(&point[k], exp);
                }
            }
            total += term;
        }
        Ok(total)
    }

    pub fn pow(&self, exp: u32) -> Polynomial {
        let mut result = Polynomial::constant(1, self.var_count);
        let mut base = self.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Expanded, `^`-free text in canonical term order.
    pub fn canonical_text(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (idx, (e, c)) in self.terms.iter().enumerate() {
            if c.is_negative() {
                out.push('-');
            } else if idx > 0 {
                out.push('+');
            }
            let mag = c.abs();
            let mut factors: Vec<String> = Vec::new();
            for (k, &exp) in e.0.iter().enumerate() {
                for _ in 0..exp {
                    factors.push(format!("x{}", k + 1));
                }
            }
            if factors.is_empty() {
                out.push_str(&mag.to_string());
            } else {
                if !mag.is_one() {
                    out.push_str(&mag.to_string());
                    out.push('*');
                }
                out.push_str(&factors.join("*"));
            }
        }
        out
    }

    /// Number of tokens in the canonical text, one token per character.
    pub fn length_measure(&self) -> usize {
        self.canonical_text().len()
    }

    fn combine(&self, other: &Polynomial, negate: bool) -> Polynomial {
        let mut p = self.clone();
        p.var_count = self.var_count.max(other.var_count);
        for (e, c) in &other.terms {
            p.add_term(e.clone(), if negate { -c.clone() } else { c.clone() });
        }
        p
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_text())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.combine(rhs, false)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.combine(rhs, true)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut p = Polynomial::zero(self.var_count.max(rhs.var_count));
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                p.add_term(e1.product(e2), c1 * c2);
            }
        }
        p
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial {
            var_count: self.var_count,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), -c.clone()))
                .collect(),
        }
    }
}

macro_rules! forward_owned_op {
    ($tr:ident, $method:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $method(self, rhs: Polynomial) -> Polynomial {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_owned_op!(Add, add);
forward_owned_op!(Sub, sub);
forward_owned_op!(Mul, mul);

impl std::str::FromStr for Polynomial {
    type Err = PolyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_polynomial(s)
    }
}

/// Parses polynomial text. The variable count is the highest index used
/// (at least 1).
pub fn parse_polynomial(text: &str) -> Result<Polynomial, PolyError> {
    let mut parser = Parser {
        src: text.as_bytes(),
        pos: 0,
        max_var: 0,
    };
    let p = parser.expr()?;
    parser.skip_ws();
    if parser.pos < parser.src.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    let count = parser.max_var.max(1);
    Ok(Polynomial {
        var_count: count,
        ..p
    })
}

/// Parses polynomial text over exactly `var_count` variables.
pub fn parse_polynomial_in(text: &str, var_count: usize) -> Result<Polynomial, PolyError> {
    parse_polynomial(text)?.with_var_count(var_count)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    max_var: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> PolyError {
        PolyError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
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

    fn digits(&mut self) -> Option<String> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            None
        } else {
            std::str::from_utf8(&self.src[start..self.pos])
                .ok()
                .map(str::to_string)
        }
    }

    fn expr(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.unary()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = &acc * &self.unary()?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Polynomial, PolyError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-&self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial, PolyError> {
        let base = self.atom()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        let sign_pos = {
            self.skip_ws();
            self.pos
        };
        if self.peek() == Some(b'-') {
            return Err(PolyError::NegativeExponent { pos: sign_pos });
        }
        self.skip_ws();
        let Some(digits) = self.digits() else {
            return Err(self.error("expected exponent"));
        };
        let exp: u32 = digits.parse().map_err(|_| PolyError::Syntax {
            pos: sign_pos,
            msg: "exponent too large".to_string(),
        })?;
        Ok(base.pow(exp))
    }

    fn atom(&mut self) -> Result<Polynomial, PolyError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b'x') => {
                let start = self.pos;
                self.pos += 1;
                let Some(digits) = self.digits() else {
                    return Err(self.error("expected variable index after 'x'"));
                };
                let index: usize = digits.parse().map_err(|_| PolyError::Syntax {
                    pos: start,
                    msg: "variable index too large".to_string(),
                })?;
                if index == 0 {
                    return Err(PolyError::ZeroVariable { pos: start });
                }
                self.max_var = self.max_var.max(index);
                Ok(Polynomial::var(index, index))
            }
            Some(c) if c.is_ascii_digit() => {
                let digits = self.digits().expect("peeked a digit");
                let value: BigInt = digits.parse().expect("ascii digits parse");
                Ok(Polynomial::constant(value, 0))
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}
