//! Backtracking search and the structural infiniteness check.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::Zero;
use rayon::prelude::*;

use super::domain::Dom;
use super::propagate::{propagate, propagate_with_aliases};
use super::DomainSpec;
use crate::ensystem::{EnEquation, EnSystem};

#[derive(Debug, Default)]
pub(crate) struct Found {
    pub(crate) count: u64,
    pub(crate) solutions: Vec<Vec<BigInt>>,
}

impl Found {
    fn merge(&mut self, other: Found, cap: usize) {
        self.count += other.count;
        let room = cap.saturating_sub(self.solutions.len());
        self.solutions
            .extend(other.solutions.into_iter().take(room));
    }
}

pub(crate) struct Search<'a> {
    pub(crate) system: &'a EnSystem,
    pub(crate) eqs: &'a [EnEquation],
    pub(crate) round_cap: usize,
    pub(crate) witness_cap: usize,
    pub(crate) stop_after: Option<u64>,
}

impl Search<'_> {
    /// Enumerates every solution in the (finite, propagated) region. With
    /// several workers the values of the first branching variable are
    /// searched in parallel and merged in value order.
    pub(crate) fn run(&self, region: Vec<Dom>, workers: usize) -> Found {
        let mut found = Found::default();
        if workers <= 1 || self.stop_after.is_some() {
            self.dfs(region, &mut found);
            return found;
        }
        let Some(var) = branch_var(&region) else {
            self.dfs(region, &mut found);
            return found;
        };
        let values = region[var].values();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool");
        let parts: Vec<Found> = pool.install(|| {
            values
                .par_iter()
                .map(|v| {
                    let mut part = Found::default();
                    if let Some(child) = self.child(&region, var, v) {
                        self.dfs(child, &mut part);
                    }
                    part
                })
                .collect()
        });
        for part in parts {
            found.merge(part, self.witness_cap);
        }
        found
    }

    fn child(&self, doms: &[Dom], var: usize, value: &BigInt) -> Option<Vec<Dom>> {
        let mut child = doms.to_vec();
        child[var].assign(value).ok()?;
        propagate(self.eqs, &mut child, self.round_cap).ok()?;
        Some(child)
    }

    fn dfs(&self, doms: Vec<Dom>, found: &mut Found) {
        if self.stop_after.is_some_and(|l| found.count >= l) {
            return;
        }
        match branch_var(&doms) {
            None => {
                let point: Vec<BigInt> = doms
                    .iter()
                    .map(|d| d.singleton().expect("all domains singleton").clone())
                    .collect();
                if self.system.is_solved_by(&point).unwrap_or(false) {
                    found.count += 1;
                    if found.solutions.len() < self.witness_cap {
                        found.solutions.push(point);
                    }
                }
            }
            Some(var) => {
                for v in doms[var].values() {
                    if let Some(child) = self.child(&doms, var, &v) {
                        self.dfs(child, found);
                        if self.stop_after.is_some_and(|l| found.count >= l) {
                            return;
                        }
                    }
                }
            }
        }
    }
}

/// Most constrained unassigned variable (0-based), lowest index on ties.
fn branch_var(doms: &[Dom]) -> Option<usize> {
    doms.iter()
        .enumerate()
        .filter_map(|(k, d)| match d.size() {
            Some(s) if s > BigInt::from(1) => Some((s, k)),
            Some(_) => None,
            None => panic!("search region must be finite"),
        })
        .min()
        .map(|(_, k)| k)
}

/// Whether some variable can take every domain value in any solution.
///
/// Equations whose output occurs nowhere else only define that output, so
/// they are removed (repeatedly). A remaining variable is free if every
/// remaining equation mentioning it holds identically once the other
/// variables take their propagated singleton values. A satisfiable system
/// with a free variable has infinitely many solutions.
pub(crate) fn has_free_direction(
    system: &EnSystem,
    domain: DomainSpec,
    pinned: &BTreeMap<usize, BigInt>,
    round_cap: usize,
) -> bool {
    let n = system.n();
    let mut eqs: Vec<EnEquation> = system.equations().copied().collect();
    let mut removed = vec![false; n];
    loop {
        let mut uses = vec![0usize; n];
        for eq in &eqs {
            let mut vars = eq.variables();
            vars.sort_unstable();
            vars.dedup();
            for v in vars {
                uses[v - 1] += 1;
            }
        }
        let peel = eqs.iter().position(|eq| match *eq {
            EnEquation::Add { i, j, o } | EnEquation::Mul { i, j, o } => {
                o != i && o != j && uses[o - 1] == 1 && !pinned.contains_key(&o)
            }
            EnEquation::Unit { .. } => false,
        });
        match peel {
            Some(k) => {
                let eq = eqs.remove(k);
                if let EnEquation::Add { o, .. } | EnEquation::Mul { o, .. } = eq {
                    removed[o - 1] = true;
                }
            }
            None => break,
        }
    }

    let mut doms = vec![Dom::full(domain); n];
    for (&k, v) in pinned {
        if doms[k - 1].assign(v).is_err() {
            return false;
        }
    }
    if propagate_with_aliases(&eqs, &mut doms, round_cap).is_err() {
        return false;
    }
    (1..=n).any(|v| {
        !removed[v - 1]
            && !pinned.contains_key(&v)
            && eqs
                .iter()
                .filter(|eq| eq.variables().contains(&v))
                .all(|eq| identity_in(eq, v, &doms))
    })
}

/// Does `eq` hold for every value of `x_v` given singleton values elsewhere?
fn identity_in(eq: &EnEquation, v: usize, doms: &[Dom]) -> bool {
    // lhs - rhs as a*x^2 + b*x + c
    let mut coef = [BigInt::zero(), BigInt::zero(), BigInt::zero()];
    let value = |k: usize| doms[k - 1].singleton().cloned();
    let add_linear = |k: usize, sign: i32, coef: &mut [BigInt; 3]| -> bool {
        if k == v {
            coef[1] += sign;
            true
        } else if let Some(x) = value(k) {
            coef[0] += x * sign;
            true
        } else {
            false
        }
    };
    match *eq {
        EnEquation::Unit { i } => return i != v && value(i).is_some(),
        EnEquation::Add { i, j, o } => {
            if !(add_linear(i, 1, &mut coef)
                && add_linear(j, 1, &mut coef)
                && add_linear(o, -1, &mut coef))
            {
                return false;
            }
        }
        EnEquation::Mul { i, j, o } => {
            match (i == v, j == v) {
                (true, true) => coef[2] += 1,
                (true, false) | (false, true) => {
                    let other = if i == v { j } else { i };
                    match value(other) {
                        Some(x) => coef[1] += x,
                        None => return false,
                    }
                }
                (false, false) => match (value(i), value(j)) {
                    (Some(a), Some(b)) => coef[0] += a * b,
                    _ => return false,
                },
            }
            if !add_linear(o, -1, &mut coef) {
                return false;
            }
        }
    }
    coef.iter().all(Zero::is_zero)
}
