//! Compilation of a polynomial equation `D = 0` into an equivalent system of
//! unit, sum and product equations. Every auxiliary variable is a fixed
//! polynomial in the original variables, so each zero of `D` extends to
//! exactly one solution of the system.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensystem::{EnEquation, EnSystem, SystemError};
use crate::polyalg::{parse_polynomial, parse_polynomial_in, Monomial, PolyError, Polynomial};
use crate::solver::{brute_force_zeros, DomainSpec, SolveError, Solver};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error("cannot compile the zero polynomial")]
    ZeroPolynomial,
    #[error("cannot compile a constant polynomial")]
    ConstantPolynomial,
    #[error("variable x{0} does not occur in the polynomial")]
    UnusedVariable(usize),
    #[error("the point is not a zero of the polynomial")]
    NotAZero,
    #[error("point has {got} coordinates, expected {expected}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("malformed compilation result: {0}")]
    Malformed(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// A compiled system together with the definition of each auxiliary
/// variable as a polynomial in `x1..xp`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompilationResult {
    pub polynomial: Polynomial,
    pub p: usize,
    pub system: EnSystem,
    /// Entry `k` defines variable `p + 1 + k`.
    lineage: Vec<Lineage>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Lineage {
    /// How the variable was introduced, e.g. `x3*x4` or `1`.
    step: String,
    value: Polynomial,
}

impl CompilationResult {
    pub fn n(&self) -> usize {
        self.system.n()
    }

    /// One line per auxiliary variable: `x6 = x3*x4 = x1*x1*x2`.
    pub fn var_map(&self) -> Vec<String> {
        self.lineage
            .iter()
            .enumerate()
            .map(|(k, l)| {
                let var = self.p + 1 + k;
                let value = l.value.canonical_text();
                if l.step == value {
                    format!("x{var} = {value}")
                } else {
                    format!("x{var} = {} = {value}", l.step)
                }
            })
            .collect()
    }

    /// Value of every auxiliary variable as a polynomial in `x1..xp`.
    pub fn aux_definitions(&self) -> impl Iterator<Item = (usize, &Polynomial)> + '_ {
        self.lineage
            .iter()
            .enumerate()
            .map(|(k, l)| (self.p + 1 + k, &l.value))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(CompilationFile::from(self)).expect("serializable")
    }

    pub fn from_json(value: serde_json::Value) -> Result<Self, CompileError> {
        let file: CompilationFile =
            serde_json::from_value(value).map_err(|e| CompileError::Malformed(e.to_string()))?;
        file.try_into()
    }
}

#[derive(Serialize, Deserialize)]
struct CompilationFile {
    polynomial: String,
    p: usize,
    n: usize,
    system: EnSystem,
    var_map: Vec<String>,
}

impl From<&CompilationResult> for CompilationFile {
    fn from(r: &CompilationResult) -> Self {
        CompilationFile {
            polynomial: r.polynomial.canonical_text(),
            p: r.p,
            n: r.n(),
            system: r.system.clone(),
            var_map: r.var_map(),
        }
    }
}

impl TryFrom<CompilationFile> for CompilationResult {
    type Error = CompileError;

    fn try_from(f: CompilationFile) -> Result<Self, CompileError> {
        let malformed = |m: &str| CompileError::Malformed(m.to_string());
        if f.system.n() != f.n || f.n != f.p + f.var_map.len() {
            return Err(malformed("variable counts disagree"));
        }
        let polynomial = parse_polynomial_in(&f.polynomial, f.p)?;
        let mut lineage = Vec::with_capacity(f.var_map.len());
        for (k, line) in f.var_map.iter().enumerate() {
            let parts: Vec<&str> = line.split(" = ").collect();
            let head = format!("x{}", f.p + 1 + k);
            if parts.len() < 2 || parts.len() > 3 || parts[0] != head {
                return Err(CompileError::Malformed(format!(
                    "bad var_map entry '{line}'"
                )));
            }
            let value = parse_polynomial_in(parts[parts.len() - 1], f.p)?;
            lineage.push(Lineage {
                step: parts[1].to_string(),
                value,
            });
        }
        Ok(CompilationResult {
            polynomial,
            p: f.p,
            system: f.system,
            lineage,
        })
    }
}

/// Hash-consed terms over the original variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Term {
    Var(usize),
    One,
    Sum(usize, usize),
    Product(usize, usize),
}

struct Builder {
    p: usize,
    vars: HashMap<Term, usize>,
    lineage: Vec<Lineage>,
    equations: Vec<EnEquation>,
    one: usize,
}

impl Builder {
    fn new(p: usize) -> Self {
        let mut b = Builder {
            p,
            vars: HashMap::new(),
            lineage: Vec::new(),
            equations: Vec::new(),
            one: 0,
        };
        for i in 1..=p {
            b.vars.insert(Term::Var(i), i);
        }
        b.one = b.fresh(Term::One, "1".to_string(), Polynomial::constant(1, p));
        b.equations.push(EnEquation::unit(b.one));
        b
    }

    fn next_index(&self) -> usize {
        self.p + self.lineage.len() + 1
    }

    fn fresh(&mut self, term: Term, step: String, value: Polynomial) -> usize {
        let v = self.next_index();
        self.lineage.push(Lineage { step, value });
        self.vars.insert(term, v);
        v
    }

    fn value(&self, v: usize) -> Polynomial {
        if v <= self.p {
            Polynomial::var(v, self.p)
        } else {
            self.lineage[v - self.p - 1].value.clone()
        }
    }

    fn op(&mut self, term: Term) -> usize {
        if let Some(&v) = self.vars.get(&term) {
            return v;
        }
        let (eq_of, step, value): (fn(usize, usize, usize) -> EnEquation, String, Polynomial) =
            match term {
                Term::Sum(a, b) => (
                    EnEquation::add,
                    format!("x{a}+x{b}"),
                    &self.value(a) + &self.value(b),
                ),
                Term::Product(a, b) => (
                    EnEquation::mul,
                    format!("x{a}*x{b}"),
                    &self.value(a) * &self.value(b),
                ),
                Term::Var(_) | Term::One => unreachable!("leaf terms are pre-registered"),
            };
        let (a, b) = match term {
            Term::Sum(a, b) | Term::Product(a, b) => (a, b),
            _ => unreachable!(),
        };
        let v = self.fresh(term, step, value);
        self.equations.push(eq_of(a, b, v));
        v
    }

    fn sum(&mut self, a: usize, b: usize) -> usize {
        self.op(Term::Sum(a.min(b), a.max(b)))
    }

    fn product(&mut self, a: usize, b: usize) -> usize {
        self.op(Term::Product(a.min(b), a.max(b)))
    }

    /// Double-and-add from `one`.
    fn constant(&mut self, c: &BigInt) -> usize {
        debug_assert!(c.is_positive());
        let mut acc = self.one;
        for bit in c.to_str_radix(2).chars().skip(1) {
            acc = self.sum(acc, acc);
            if bit == '1' {
                acc = self.sum(acc, self.one);
            }
        }
        acc
    }

    /// Square-and-multiply for `x_i^e`.
    fn power(&mut self, i: usize, e: u32) -> usize {
        let mut acc = i;
        for bit in format!("{e:b}").chars().skip(1) {
            acc = self.product(acc, acc);
            if bit == '1' {
                acc = self.product(acc, i);
            }
        }
        acc
    }

    /// Variable holding `|c| * m`, or `None` for the bare constant 1.
    fn monomial(&mut self, m: &Monomial) -> usize {
        let mut acc: Option<usize> = None;
        for (&i, &e) in &m.exponents {
            let f = self.power(i, e);
            acc = Some(match acc {
                None => f,
                Some(a) => self.product(a, f),
            });
        }
        let c = m.coefficient.abs();
        match acc {
            None => self.constant(&c),
            Some(a) if c.is_one() => a,
            Some(a) => {
                let k = self.constant(&c);
                self.product(k, a)
            }
        }
    }
}

/// One side of the equation: the operands of its final operation.
enum Side {
    /// A variable that already exists (an original variable, `one`, or a
    /// shared subterm).
    Existing(usize),
    Last(Term),
    Empty,
}

fn build_side(b: &mut Builder, monomials: &[Monomial]) -> Side {
    let parts: Vec<usize> = monomials.iter().map(|m| b.monomial(m)).collect();
    match parts.len() {
        0 => Side::Empty,
        1 => Side::Existing(parts[0]),
        _ => {
            let mut acc = parts[0];
            for &part in &parts[1..parts.len() - 1] {
                acc = b.sum(acc, part);
            }
            let last = parts[parts.len() - 1];
            let term = Term::Sum(acc.min(last), acc.max(last));
            if let Some(&v) = b.vars.get(&term) {
                Side::Existing(v)
            } else {
                Side::Last(term)
            }
        }
    }
}

/// Compiles `D = 0`. Variables `1..=p` of the result are the variables of
/// `D`; the rest are auxiliary.
pub fn compile(d: &Polynomial) -> Result<CompilationResult, CompileError> {
    if d.is_zero() {
        return Err(CompileError::ZeroPolynomial);
    }
    if d.is_constant() {
        return Err(CompileError::ConstantPolynomial);
    }
    let p = d.var_count();
    for i in 1..=p {
        if d.degree_in(i)? == 0 {
            return Err(CompileError::UnusedVariable(i));
        }
    }
    let (mut pos, mut neg): (Vec<Monomial>, Vec<Monomial>) =
        d.monomials().partition(|m| m.coefficient.is_positive());
    if pos.is_empty() {
        std::mem::swap(&mut pos, &mut neg);
    }

    let mut b = Builder::new(p);
    let left = build_side(&mut b, &pos);
    let right = build_side(&mut b, &neg);

    // Both sides write into one shared variable. A side whose value already
    // lives in a variable is routed through `one * x = v` (or `v = 1`).
    let target = b.next_index();
    let value = b.value_of_side(&left);
    b.lineage.push(Lineage {
        step: b.step_of_side(&left),
        value,
    });
    for side in [&left, &right] {
        let eq = match *side {
            Side::Existing(x) if x == b.one => EnEquation::unit(target),
            Side::Existing(x) => EnEquation::mul(b.one, x, target),
            Side::Last(Term::Sum(a, c)) => EnEquation::add(a, c, target),
            Side::Last(_) => unreachable!("sides end in a sum"),
            Side::Empty => EnEquation::add(target, b.one, b.one),
        };
        b.equations.push(eq);
    }

    let n = b.next_index() - 1;
    let system = EnSystem::from_equations(n, b.equations)?;
    Ok(CompilationResult {
        polynomial: d.clone(),
        p,
        system,
        lineage: b.lineage,
    })
}

impl Builder {
    fn value_of_side(&self, side: &Side) -> Polynomial {
        match *side {
            Side::Existing(x) => self.value(x),
            Side::Last(Term::Sum(a, c)) => &self.value(a) + &self.value(c),
            Side::Last(_) => unreachable!(),
            Side::Empty => Polynomial::zero(self.p),
        }
    }

    fn step_of_side(&self, side: &Side) -> String {
        match *side {
            Side::Existing(x) if x == self.one => "1".to_string(),
            Side::Existing(x) => format!("x{}*x{x}", self.one),
            Side::Last(Term::Sum(a, c)) => format!("x{a}+x{c}"),
            Side::Last(_) => unreachable!(),
            Side::Empty => "0".to_string(),
        }
    }
}

/// Compiles polynomial text.
pub fn compile_text(text: &str) -> Result<CompilationResult, CompileError> {
    compile(&parse_polynomial(text)?)
}

/// The unique solution of the compiled system above a zero of `D`.
pub fn extend_solution(
    r: &CompilationResult,
    zero: &[BigInt],
) -> Result<Vec<BigInt>, CompileError> {
    if zero.len() != r.p {
        return Err(CompileError::ArityMismatch {
            expected: r.p,
            got: zero.len(),
        });
    }
    if !r.polynomial.evaluate(zero)?.is_zero() {
        return Err(CompileError::NotAZero);
    }
    let mut point = zero.to_vec();
    for l in &r.lineage {
        point.push(l.value.evaluate(zero)?);
    }
    Ok(point)
}

/// Outcome of [`verify_conditions`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub domain: DomainSpec,
    pub box_radius: u64,
    pub passed: bool,
    /// The box was too large to scan; nothing was checked.
    pub inconclusive: bool,
    pub zeros: u64,
    pub system_solutions: u64,
    pub counterexample: Option<String>,
}

/// Checks both directions of the count correspondence inside a box: every
/// zero of `D` extends to a solution, and every solution of the system with
/// original coordinates in the box projects to a distinct zero.
pub fn verify_conditions(
    r: &CompilationResult,
    box_radius: u64,
    domain: DomainSpec,
) -> VerificationReport {
    let mut report = VerificationReport {
        domain,
        box_radius,
        passed: false,
        inconclusive: false,
        zeros: 0,
        system_solutions: 0,
        counterexample: None,
    };
    let zeros = match brute_force_zeros(&r.polynomial, domain, box_radius) {
        Ok(z) => z,
        Err(SolveError::ScanCeiling { .. }) => {
            report.inconclusive = true;
            return report;
        }
        Err(e) => {
            report.counterexample = Some(e.to_string());
            return report;
        }
    };
    report.zeros = zeros.len() as u64;
    let show = |v: &[BigInt]| {
        format!(
            "({})",
            v.iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(",")
        )
    };

    for z in &zeros {
        let ext = match extend_solution(r, z) {
            Ok(e) => e,
            Err(e) => {
                report.counterexample = Some(format!("zero {} does not extend: {e}", show(z)));
                return report;
            }
        };
        if !ext.iter().all(|v| domain.contains(v)) || !r.system.is_solved_by(&ext).unwrap_or(false)
        {
            report.counterexample = Some(format!(
                "extension {} of zero {} is not a solution",
                show(&ext),
                show(z)
            ));
            return report;
        }
    }

    let solved = Solver::new(&r.system, domain)
        .radius(box_radius.max(1))
        .box_only(1..=r.p)
        .witness_cap(usize::MAX)
        .run();
    let solved = match solved {
        Ok(s) => s,
        Err(e) => {
            report.counterexample = Some(e.to_string());
            return report;
        }
    };
    let limit = BigInt::from(box_radius);
    let zero_set: BTreeSet<&[BigInt]> = zeros.iter().map(Vec::as_slice).collect();
    let mut seen: BTreeSet<&[BigInt]> = BTreeSet::new();
    for s in &solved.solutions {
        let proj = &s[..r.p];
        if proj.iter().any(|v| v.abs() > limit) {
            continue;
        }
        report.system_solutions += 1;
        if !zero_set.contains(proj) {
            report.counterexample = Some(format!(
                "solution {} projects outside the zero set",
                show(s)
            ));
            return report;
        }
        if !seen.insert(proj) {
            report.counterexample = Some(format!("zero {} has several extensions", show(proj)));
            return report;
        }
    }
    if seen.len() != zeros.len() {
        report.counterexample = Some(format!(
            "{} zeros but {} system solutions",
            zeros.len(),
            seen.len()
        ));
        return report;
    }
    report.passed = true;
    report
}

/// Shape limits for [`random_polynomial`].
#[derive(Debug, Clone, Copy)]
pub struct PolynomialShape {
    pub max_vars: usize,
    pub max_degree: u32,
    pub max_coefficient: i64,
    pub max_terms: usize,
}

impl Default for PolynomialShape {
    fn default() -> Self {
        PolynomialShape {
            max_vars: 3,
            max_degree: 3,
            max_coefficient: 5,
            max_terms: 4,
        }
    }
}

/// A random compilable polynomial: every variable occurs, total degree and
/// coefficients stay within `shape`.
pub fn random_polynomial(rng: &mut impl Rng, shape: PolynomialShape) -> Polynomial {
    let p = rng.gen_range(1..=shape.max_vars);
    loop {
        let monomials = (0..rng.gen_range(1..=shape.max_terms)).map(|_| {
            let mut exponents = BTreeMap::new();
            for _ in 0..rng.gen_range(0..=shape.max_degree) {
                *exponents.entry(rng.gen_range(1..=p)).or_insert(0) += 1;
            }
            let mut c = rng.gen_range(-shape.max_coefficient..=shape.max_coefficient);
            if c == 0 {
                c = 1;
            }
            Monomial {
                coefficient: BigInt::from(c),
                exponents,
            }
        });
        let poly =
            Polynomial::from_monomials(p, monomials.collect::<Vec<_>>()).expect("indices within p");
        if !poly.is_constant() && (1..=p).all(|i| poly.degree_in(i).is_ok_and(|d| d >= 1)) {
            return poly;
        }
    }
}
