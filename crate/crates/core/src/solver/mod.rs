//! Exact counting of system solutions over the integers, the naturals and
//! the positive naturals.
//!
//! The search runs bounds propagation (see [`propagate`]) at every node and
//! branches on the variable with the smallest domain. A count is reported as
//! exact only when propagation alone, without any search box, already
//! proves every domain finite; otherwise the count is a lower bound obtained
//! inside the box.

mod domain;
mod oracle;
mod propagate;
mod search;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensystem::{EnEquation, EnSystem};
use crate::json_int;

pub use domain::VarDomain;
pub use oracle::{brute_force_zeros, DEFAULT_SCAN_CEILING};

use domain::{Dom, Ext};

/// Default number of witnesses kept in a report.
pub const DEFAULT_WITNESS_CAP: usize = 256;

/// Largest search space (product of domain sizes) explored beyond the box
/// when propagation has certified finiteness.
pub const DEFAULT_EXTENSION_LIMIT: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("search box radius must be at least 1")]
    BadBound,
    #[error("pinned variable x{index} outside 1..={n}")]
    PinOutOfRange { index: usize, n: usize },
    #[error("box scan of {size} points exceeds the ceiling {ceiling}")]
    ScanCeiling { size: String, ceiling: u64 },
    #[error("{0}")]
    Poly(#[from] crate::polyalg::PolyError),
    #[error("unknown domain '{0}' (expected z, n or n+)")]
    UnknownDomain(String),
}

/// Solution domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainSpec {
    #[serde(alias = "z")]
    Integers,
    #[serde(alias = "n")]
    Naturals,
    #[serde(alias = "n+")]
    PositiveNaturals,
}

impl DomainSpec {
    pub const ALL: [DomainSpec; 3] = [
        DomainSpec::Integers,
        DomainSpec::Naturals,
        DomainSpec::PositiveNaturals,
    ];

    pub fn contains(self, v: &BigInt) -> bool {
        match self {
            DomainSpec::Integers => true,
            DomainSpec::Naturals => !v.is_negative(),
            DomainSpec::PositiveNaturals => v.is_positive(),
        }
    }

    /// Smallest member, if any.
    pub fn floor(self) -> Option<BigInt> {
        match self {
            DomainSpec::Integers => None,
            DomainSpec::Naturals => Some(BigInt::zero()),
            DomainSpec::PositiveNaturals => Some(BigInt::one()),
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            DomainSpec::Integers => "z",
            DomainSpec::Naturals => "n",
            DomainSpec::PositiveNaturals => "n+",
        }
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for DomainSpec {
    type Err = SolveError;
    fn from_str(s: &str) -> Result<Self, SolveError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "z" | "integers" | "int" => Ok(DomainSpec::Integers),
            "n" | "naturals" | "nat" | "n0" => Ok(DomainSpec::Naturals),
            "n+" | "npos" | "positive" | "positive_naturals" | "n1" => {
                Ok(DomainSpec::PositiveNaturals)
            }
            _ => Err(SolveError::UnknownDomain(s.to_string())),
        }
    }
}

/// Outcome of [`propagate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Propagation {
    Domains(Vec<VarDomain>),
    Contradiction,
}

impl Propagation {
    pub fn domains(&self) -> Option<&[VarDomain]> {
        match self {
            Propagation::Domains(d) => Some(d),
            Propagation::Contradiction => None,
        }
    }
}

/// Propagates to a fixpoint (or the default round cap), optionally inside
/// the box `[-r, r]^n` clipped to the domain.
pub fn propagate(
    system: &EnSystem,
    domain: DomainSpec,
    box_radius: Option<&BigInt>,
) -> Propagation {
    let eqs: Vec<EnEquation> = system.equations().copied().collect();
    let mut doms = vec![Dom::full(domain); system.n()];
    match propagate_in_box(
        &eqs,
        &mut doms,
        box_radius,
        propagate::default_round_cap(system.n(), eqs.len()),
    ) {
        Ok(()) => Propagation::Domains(doms.iter().map(Dom::to_public).collect()),
        Err(_) => Propagation::Contradiction,
    }
}

fn propagate_in_box(
    eqs: &[EnEquation],
    doms: &mut [Dom],
    box_radius: Option<&BigInt>,
    cap: usize,
) -> Result<(), domain::Empty> {
    if let Some(r) = box_radius {
        for d in doms.iter_mut() {
            d.intersect(&Ext::Fin(-r.clone()), &Ext::Fin(r.clone()))?;
        }
    }
    propagate::propagate_with_aliases(eqs, doms, cap)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    /// Finiteness certified by propagation; the count is exact.
    #[serde(rename = "exact")]
    ExactFinite,
    /// Count is a lower bound found inside the search box.
    #[serde(rename = "at_least")]
    AtLeast,
    #[serde(rename = "unsatisfiable")]
    Unsatisfiable,
    /// Satisfiable with a variable that can take every domain value.
    #[serde(rename = "infinite")]
    InfiniteCertified,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub count: u64,
    /// Radius of the region actually searched.
    #[serde(with = "json_int")]
    pub bound: BigInt,
    /// Finiteness (or unsatisfiability) was proved without the box.
    pub certified: bool,
    /// Witnesses in lexicographic order, at most the witness cap.
    #[serde(with = "json_int::nested")]
    pub solutions: Vec<Vec<BigInt>>,
}

impl SolveReport {
    pub fn is_exact(&self) -> bool {
        matches!(
            self.status,
            SolveStatus::ExactFinite | SolveStatus::Unsatisfiable
        ) && self.certified
    }

    /// Exact finite count, if certified.
    pub fn exact_count(&self) -> Option<u64> {
        self.is_exact().then_some(self.count)
    }
}

/// Configurable enumeration of one system.
#[derive(Debug, Clone)]
pub struct Solver<'a> {
    system: &'a EnSystem,
    domain: DomainSpec,
    box_radius: BigInt,
    pinned: BTreeMap<usize, BigInt>,
    boxed: Option<Vec<usize>>,
    witness_cap: usize,
    stop_after: Option<u64>,
    workers: usize,
    round_cap: Option<usize>,
    extension_limit: u64,
}

impl<'a> Solver<'a> {
    pub fn new(system: &'a EnSystem, domain: DomainSpec) -> Self {
        Solver {
            system,
            domain,
            box_radius: BigInt::from(10),
            pinned: BTreeMap::new(),
            boxed: None,
            witness_cap: DEFAULT_WITNESS_CAP,
            stop_after: None,
            workers: 1,
            round_cap: None,
            extension_limit: DEFAULT_EXTENSION_LIMIT,
        }
    }

    pub fn radius(mut self, r: impl Into<BigInt>) -> Self {
        self.box_radius = r.into();
        self
    }

    pub fn pin(mut self, index: usize, value: impl Into<BigInt>) -> Self {
        self.pinned.insert(index, value.into());
        self
    }

    pub fn pins(mut self, pins: &BTreeMap<usize, BigInt>) -> Self {
        self.pinned
            .extend(pins.iter().map(|(k, v)| (*k, v.clone())));
        self
    }

    /// Applies the box only to these variables; the others get their bounds
    /// from propagation (and fall back to the box if still unbounded).
    pub fn box_only(mut self, vars: impl IntoIterator<Item = usize>) -> Self {
        self.boxed = Some(vars.into_iter().collect());
        self
    }

    pub fn witness_cap(mut self, cap: usize) -> Self {
        self.witness_cap = cap;
        self
    }

    /// Stop the search once this many solutions are found.
    pub fn stop_after(mut self, limit: u64) -> Self {
        self.stop_after = Some(limit);
        self
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn round_cap(mut self, cap: usize) -> Self {
        self.round_cap = Some(cap);
        self
    }

    pub fn extension_limit(mut self, limit: u64) -> Self {
        self.extension_limit = limit;
        self
    }

    pub fn run(&self) -> Result<SolveReport, SolveError> {
        if self.box_radius < BigInt::one() {
            return Err(SolveError::BadBound);
        }
        let n = self.system.n();
        if let Some((&index, _)) = self.pinned.iter().find(|(&k, _)| k == 0 || k > n) {
            return Err(SolveError::PinOutOfRange { index, n });
        }
        let eqs: Vec<EnEquation> = self.system.equations().copied().collect();
        let cap = self
            .round_cap
            .unwrap_or_else(|| propagate::default_round_cap(n, eqs.len()));
        let unsat = |bound: BigInt| SolveReport {
            status: SolveStatus::Unsatisfiable,
            count: 0,
            bound,
            certified: true,
            solutions: Vec::new(),
        };

        let mut root = vec![Dom::full(self.domain); n];
        for (&k, v) in &self.pinned {
            if root[k - 1].assign(v).is_err() {
                return Ok(unsat(self.box_radius.clone()));
            }
        }
        if propagate::propagate_with_aliases(&eqs, &mut root, cap).is_err() {
            return Ok(unsat(self.box_radius.clone()));
        }

        let certified_finite = root.iter().all(Dom::is_finite);
        let extent = root
            .iter()
            .filter_map(Dom::extent)
            .max()
            .unwrap_or_default();
        let within_box = certified_finite && extent <= self.box_radius;
        let small_enough =
            certified_finite && search_space(&root) <= BigInt::from(self.extension_limit);

        let ctx = search::Search {
            system: self.system,
            eqs: &eqs,
            round_cap: cap,
            witness_cap: self.witness_cap,
            stop_after: self.stop_after,
        };

        if within_box || small_enough {
            let mut found = ctx.run(root, self.workers);
            found.solutions.sort();
            let bound = self.box_radius.clone().max(extent);
            if found.count == 0 && self.stop_after.is_none() {
                return Ok(unsat(bound));
            }
            let stopped = self.stop_after.is_some_and(|l| found.count >= l);
            return Ok(SolveReport {
                status: if stopped {
                    SolveStatus::AtLeast
                } else {
                    SolveStatus::ExactFinite
                },
                count: found.count,
                bound,
                certified: true,
                solutions: found.solutions,
            });
        }

        let mut region = root;
        let r = &self.box_radius;
        let (lo, hi) = (Ext::Fin(-r.clone()), Ext::Fin(r.clone()));
        let boxed: Vec<usize> = self.boxed.clone().unwrap_or_else(|| (1..=n).collect());
        let empty_region = (|| -> Result<(), domain::Empty> {
            for &v in &boxed {
                region[v - 1].intersect(&lo, &hi)?;
            }
            propagate::propagate(&eqs, &mut region, cap)?;
            for d in region.iter_mut().filter(|d| !d.is_finite()) {
                d.intersect(&lo, &hi)?;
            }
            propagate::propagate(&eqs, &mut region, cap)
        })()
        .is_err();
        let mut found = if empty_region {
            search::Found::default()
        } else {
            ctx.run(region, self.workers)
        };
        found.solutions.sort();

        let status = if found.count > 0
            && search::has_free_direction(self.system, self.domain, &self.pinned, cap)
        {
            SolveStatus::InfiniteCertified
        } else {
            SolveStatus::AtLeast
        };
        Ok(SolveReport {
            status,
            count: found.count,
            bound: self.box_radius.clone(),
            certified: certified_finite || status == SolveStatus::InfiniteCertified,
            solutions: found.solutions,
        })
    }
}

fn search_space(doms: &[Dom]) -> BigInt {
    doms.iter()
        .map(|d| d.size().unwrap_or_default())
        .fold(BigInt::one(), |a, b| a * b)
}

/// Counts solutions of `system` in the box `[-r, r]^n` (clipped to the
/// domain), with optional pinned values.
pub fn enumerate(
    system: &EnSystem,
    domain: DomainSpec,
    box_radius: impl Into<BigInt>,
    pinned: Option<&BTreeMap<usize, BigInt>>,
) -> Result<SolveReport, SolveError> {
    let mut solver = Solver::new(system, domain).radius(box_radius);
    if let Some(p) = pinned {
        solver = solver.pins(p);
    }
    solver.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensystem::EnEquation as E;

    fn sys(n: usize, eqs: &[E]) -> EnSystem {
        EnSystem::from_equations(n, eqs.iter().copied()).unwrap()
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn idempotent_square_has_two_integer_solutions() {
        let s = sys(1, &[E::mul(1, 1, 1)]);
        let r = enumerate(&s, DomainSpec::Integers, 10, None).unwrap();
        assert_eq!(r.status, SolveStatus::ExactFinite);
        assert_eq!(r.count, 2);
        assert_eq!(r.solutions, vec![ints(&[0]), ints(&[1])]);
        assert!(r.certified);

        let r = enumerate(&s, DomainSpec::PositiveNaturals, 10, None).unwrap();
        assert_eq!((r.status, r.count), (SolveStatus::ExactFinite, 1));
    }

    #[test]
    fn free_variable_is_infinite() {
        let s = EnSystem::new(1).unwrap();
        let r = enumerate(&s, DomainSpec::Integers, 10, None).unwrap();
        assert_eq!(r.status, SolveStatus::InfiniteCertified);
        assert_eq!(r.count, 21);
    }

    #[test]
    fn product_of_independent_idempotents() {
        let s = sys(2, &[E::mul(1, 1, 1), E::mul(2, 2, 2)]);
        let r = enumerate(&s, DomainSpec::Integers, 10, None).unwrap();
        assert_eq!((r.status, r.count), (SolveStatus::ExactFinite, 4));
    }

    #[test]
    fn contradiction_is_certified_unsat() {
        let s = sys(1, &[E::unit(1), E::add(1, 1, 1)]);
        let r = enumerate(&s, DomainSpec::Integers, 10, None).unwrap();
        assert_eq!(r.status, SolveStatus::Unsatisfiable);
        assert!(r.certified);
        assert_eq!(r.count, 0);
    }

    #[test]
    fn uncertified_systems_report_lower_bounds() {
        // x1 + x1 = x2, x2 + x2 = x1: only (0, 0), but bounds alone cannot see it
        let s = sys(2, &[E::add(1, 1, 2), E::add(2, 2, 1)]);
        let r = enumerate(&s, DomainSpec::Integers, 5, None).unwrap();
        assert_eq!((r.status, r.count), (SolveStatus::AtLeast, 1));
        assert!(!r.certified);
    }

    #[test]
    fn effectively_free_variables() {
        // x2 = 0 makes x1 + x2 = x1 hold for every x1
        let s = sys(2, &[E::add(1, 2, 1)]);
        let r = enumerate(&s, DomainSpec::Integers, 3, None).unwrap();
        assert_eq!((r.status, r.count), (SolveStatus::InfiniteCertified, 7));
        // x3 = x1 * x2 is determined, x1 and x2 are free
        let s = sys(3, &[E::mul(1, 2, 3)]);
        let r = enumerate(&s, DomainSpec::Naturals, 3, None).unwrap();
        assert_eq!(r.status, SolveStatus::InfiniteCertified);
    }

    #[test]
    fn certified_systems_extend_past_the_box() {
        // 1, 2, 4, 16
        let s = sys(
            4,
            &[
                E::unit(1),
                E::add(1, 1, 2),
                E::mul(2, 2, 3),
                E::mul(3, 3, 4),
            ],
        );
        let r = enumerate(&s, DomainSpec::Integers, 3, None).unwrap();
        assert_eq!((r.status, r.count), (SolveStatus::ExactFinite, 1));
        assert_eq!(r.solutions, vec![ints(&[1, 2, 4, 16])]);
        assert_eq!(r.bound, BigInt::from(16));
    }

    #[test]
    fn pins_and_errors() {
        let s = sys(2, &[E::add(1, 1, 2)]);
        let r = Solver::new(&s, DomainSpec::Integers)
            .pin(2, 6)
            .run()
            .unwrap();
        assert_eq!(r.solutions, vec![ints(&[3, 6])]);
        let r = Solver::new(&s, DomainSpec::Integers)
            .pin(2, 5)
            .run()
            .unwrap();
        assert_eq!(r.status, SolveStatus::Unsatisfiable);
        assert_eq!(
            Solver::new(&s, DomainSpec::Integers).radius(0).run(),
            Err(SolveError::BadBound)
        );
        assert!(matches!(
            Solver::new(&s, DomainSpec::Integers).pin(3, 1).run(),
            Err(SolveError::PinOutOfRange { index: 3, n: 2 })
        ));
    }

    #[test]
    fn witness_cap_truncates_but_counts() {
        let s = EnSystem::new(2).unwrap();
        let r = Solver::new(&s, DomainSpec::Naturals)
            .radius(4)
            .witness_cap(3)
            .run()
            .unwrap();
        assert_eq!(r.count, 25);
        assert_eq!(r.solutions.len(), 3);
    }

    #[test]
    fn parallel_root_split_matches_sequential() {
        let s = sys(3, &[E::add(1, 2, 3)]);
        let seq = Solver::new(&s, DomainSpec::Integers)
            .radius(4)
            .run()
            .unwrap();
        let par = Solver::new(&s, DomainSpec::Integers)
            .radius(4)
            .workers(4)
            .run()
            .unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn report_json_shape() {
        let s = sys(1, &[E::mul(1, 1, 1)]);
        let r = enumerate(&s, DomainSpec::Integers, 10, None).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        assert_eq!(
            text,
            r#"{"status":"exact","count":2,"bound":10,"certified":true,"solutions":[[0],[1]]}"#
        );
        let back: SolveReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn public_propagation() {
        let s = sys(1, &[E::mul(1, 1, 1)]);
        let p = propagate(&s, DomainSpec::Integers, None);
        assert_eq!(p.domains().unwrap()[0], VarDomain::Set(ints(&[0, 1])));
        let s = sys(1, &[E::add(1, 1, 1)]);
        assert_eq!(
            propagate(&s, DomainSpec::PositiveNaturals, None),
            Propagation::Contradiction
        );
        let s = sys(1, &[E::unit(1)]);
        assert_eq!(
            propagate(&s, DomainSpec::Integers, None).domains().unwrap()[0].singleton(),
            Some(&BigInt::one())
        );
    }

    #[test]
    fn domain_names() {
        assert_eq!("z".parse::<DomainSpec>().unwrap(), DomainSpec::Integers);
        assert_eq!(
            "N+".parse::<DomainSpec>().unwrap(),
            DomainSpec::PositiveNaturals
        );
        assert!("q".parse::<DomainSpec>().is_err());
    }
}
