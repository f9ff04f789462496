//! Search over subsystems of the full equation set for the largest finite
//! solution count, with certified lower bounds.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensystem::{full_en, permutations, EnEquation, EnSystem, SystemError};
use crate::json_int;
use crate::solver::{propagate, DomainSpec, SolveStatus, Solver};

/// Largest `n` whose full equation set fits a 128-bit mask.
pub const MAX_EXPLORE_N: usize = 4;

pub const DEFAULT_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExploreError {
    #[error("budget must be positive")]
    ZeroBudget,
    #[error("n must be between 1 and {MAX_EXPLORE_N}, got {0}")]
    UnsupportedN(usize),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// The full equation list for `n` plus, for each variable permutation, the
/// induced permutation of equation positions.
struct Universe {
    n: usize,
    equations: Vec<EnEquation>,
    perm_maps: Vec<Vec<usize>>,
}

impl Universe {
    fn new(n: usize) -> Result<Self, ExploreError> {
        if n == 0 || n > MAX_EXPLORE_N {
            return Err(ExploreError::UnsupportedN(n));
        }
        let equations: Vec<EnEquation> = full_en(n)?.equations().copied().collect();
        let position: BTreeMap<EnEquation, usize> =
            equations.iter().enumerate().map(|(k, e)| (*e, k)).collect();
        let perm_maps = permutations(n)
            .iter()
            .map(|perm| {
                equations
                    .iter()
                    .map(|e| position[&e.relabel(perm)])
                    .collect()
            })
            .collect();
        Ok(Universe {
            n,
            equations,
            perm_maps,
        })
    }

    fn size(&self) -> usize {
        self.equations.len()
    }

    fn apply(&self, map: &[usize], mask: u128) -> u128 {
        let mut out = 0u128;
        let mut rest = mask;
        while rest != 0 {
            let k = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            out |= 1u128 << map[k];
        }
        out
    }

    fn orbit(&self, mask: u128) -> Vec<u128> {
        let mut all: Vec<u128> = self.perm_maps.iter().map(|m| self.apply(m, mask)).collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    /// Numerically smallest mask in its orbit.
    fn is_canonical(&self, mask: u128) -> bool {
        self.perm_maps.iter().all(|m| self.apply(m, mask) >= mask)
    }

    fn system(&self, mask: u128) -> EnSystem {
        let eqs = (0..self.size())
            .filter(|k| mask >> k & 1 == 1)
            .map(|k| self.equations[k]);
        EnSystem::from_equations(self.n, eqs).expect("equations are in range")
    }

    /// Number of subsets, or of orbits of subsets (Burnside).
    fn class_count(&self, use_symmetry: bool) -> BigInt {
        let m = self.size() as u32;
        if !use_symmetry {
            return BigInt::from(1) << m;
        }
        let total: BigInt = self
            .perm_maps
            .iter()
            .map(|map| {
                let mut seen = vec![false; map.len()];
                let mut cycles = 0u32;
                for start in 0..map.len() {
                    if !seen[start] {
                        cycles += 1;
                        let mut k = start;
                        while !seen[k] {
                            seen[k] = true;
                            k = map[k];
                        }
                    }
                }
                BigInt::from(1) << cycles
            })
            .sum();
        total / self.perm_maps.len()
    }
}

/// Subsets of `0..m` with `k` elements in increasing numeric order.
struct FixedSize {
    next: Option<u128>,
    limit: u128,
}

impl FixedSize {
    fn new(m: usize, k: usize) -> Self {
        let limit = if m == 128 {
            u128::MAX
        } else {
            (1u128 << m) - 1
        };
        let first = if k == 0 { 0 } else { u128::MAX >> (128 - k) };
        FixedSize {
            next: (k <= m).then_some(first),
            limit,
        }
    }
}

impl Iterator for FixedSize {
    type Item = u128;

    fn next(&mut self) -> Option<u128> {
        let x = self.next?;
        self.next = if x == 0 {
            None
        } else {
            let c = x & x.wrapping_neg();
            x.checked_add(c).and_then(|r| {
                let y = (((r ^ x) >> 2) / c) | r;
                (y <= self.limit && y > x).then_some(y)
            })
        };
        Some(x)
    }
}

/// All masks over `m` positions in breadth-first order (by size, then value).
fn masks_by_size(m: usize) -> impl Iterator<Item = u128> {
    (0..=m).flat_map(move |k| FixedSize::new(m, k))
}

/// Subsystems of the full set for `n`, smallest first. With `use_symmetry`
/// only one representative per relabeling orbit is produced; `budget`
/// truncates the stream to a deterministic prefix.
pub fn subsystems(
    n: usize,
    use_symmetry: bool,
    budget: Option<u64>,
) -> Result<impl Iterator<Item = EnSystem>, ExploreError> {
    if budget == Some(0) {
        return Err(ExploreError::ZeroBudget);
    }
    let universe = Universe::new(n)?;
    let limit = budget.map_or(usize::MAX, |b| usize::try_from(b).unwrap_or(usize::MAX));
    Ok(masks_by_size(universe.size())
        .filter_map(move |mask| {
            (!use_symmetry || universe.is_canonical(mask)).then(|| universe.system(mask))
        })
        .take(limit))
}

#[derive(Debug, Clone)]
pub struct ExploreOptions {
    pub box_radius: u64,
    pub budget: u64,
    pub workers: usize,
    pub use_symmetry: bool,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        ExploreOptions {
            box_radius: 64,
            budget: DEFAULT_BUDGET,
            workers: 1,
            use_symmetry: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    /// Subsystem classes handed to the solver.
    pub examined: u64,
    pub certified_finite: u64,
    /// Certified to have no solution (a special case of finite).
    pub unsatisfiable: u64,
    /// Examined but with finiteness not proved.
    pub uncertified: u64,
    /// Skipped because they contain a certified system, so their count
    /// cannot exceed the best found.
    pub pruned: u64,
    #[serde(with = "json_int")]
    pub skipped_by_budget: BigInt,
    /// Classes in the search space: subsets, or orbits under relabeling.
    #[serde(with = "json_int")]
    pub total_classes: BigInt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FReport {
    pub n: usize,
    pub box_radius: u64,
    pub use_symmetry: bool,
    pub best_count: u64,
    pub witness: EnSystem,
    #[serde(with = "json_int::nested")]
    pub witness_solutions: Vec<Vec<BigInt>>,
    pub coverage: Coverage,
    /// No class was left out by the budget: every system is either examined
    /// or pruned by a certified subsystem.
    pub exhaustive: bool,
}

enum Verdict {
    Finite {
        count: u64,
        solutions: Vec<Vec<BigInt>>,
    },
    Uncertified,
}

fn classify(system: &EnSystem, box_radius: u64) -> Verdict {
    // cheap gate: finiteness can only be certified when propagation alone
    // bounds every variable
    let doms = propagate(system, DomainSpec::Integers, None);
    if doms
        .domains()
        .is_some_and(|d| !d.iter().all(|v| v.is_finite()))
    {
        return Verdict::Uncertified;
    }
    let report = Solver::new(system, DomainSpec::Integers)
        .radius(box_radius.max(1))
        .witness_cap(usize::MAX)
        .run()
        .expect("valid solver configuration");
    match report.status {
        SolveStatus::ExactFinite | SolveStatus::Unsatisfiable => Verdict::Finite {
            count: report.count,
            solutions: report.solutions,
        },
        SolveStatus::AtLeast | SolveStatus::InfiniteCertified => Verdict::Uncertified,
    }
}

/// Largest certified-finite solution count over subsystems of the full set.
pub fn f_lower_bound(n: usize, options: &ExploreOptions) -> Result<FReport, ExploreError> {
    explore(n, options, |_| {})
}

/// As [`f_lower_bound`], calling `progress` after every breadth-first level.
pub fn explore(
    n: usize,
    options: &ExploreOptions,
    mut progress: impl FnMut(&Coverage),
) -> Result<FReport, ExploreError> {
    if options.budget == 0 {
        return Err(ExploreError::ZeroBudget);
    }
    let universe = Universe::new(n)?;
    let m = universe.size();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.workers.max(1))
        .build()
        .expect("thread pool");

    let mut coverage = Coverage {
        total_classes: universe.class_count(options.use_symmetry),
        ..Coverage::default()
    };
    // certified systems and all their relabelings
    let mut certified: Vec<u128> = Vec::new();
    let mut best: Option<(u64, EnSystem, Vec<Vec<BigInt>>)> = None;
    let mut visited = BigInt::from(0);
    let mut out_of_budget = false;

    for k in 0..=m {
        let mut level = Vec::new();
        for mask in FixedSize::new(m, k) {
            if options.use_symmetry && !universe.is_canonical(mask) {
                continue;
            }
            if certified.iter().any(|&c| mask & c == c) {
                coverage.pruned += 1;
                visited += 1;
                continue;
            }
            if coverage.examined + level.len() as u64 >= options.budget {
                out_of_budget = true;
                break;
            }
            level.push(mask);
        }
        let verdicts: Vec<Verdict> = pool.install(|| {
            level
                .par_iter()
                .map(|&mask| classify(&universe.system(mask), options.box_radius))
                .collect()
        });
        for (mask, verdict) in level.into_iter().zip(verdicts) {
            coverage.examined += 1;
            visited += 1;
            match verdict {
                Verdict::Uncertified => coverage.uncertified += 1,
                Verdict::Finite { count, solutions } => {
                    coverage.certified_finite += 1;
                    if count == 0 {
                        coverage.unsatisfiable += 1;
                    }
                    certified.extend(universe.orbit(mask));
                    let system = universe.system(mask);
                    let better = match &best {
                        None => true,
                        Some((c, w, _)) => count > *c || (count == *c && system < *w),
                    };
                    if better {
                        best = Some((count, system, solutions));
                    }
                }
            }
        }
        progress(&coverage);
        if out_of_budget {
            break;
        }
    }

    coverage.skipped_by_budget = &coverage.total_classes - &visited;
    let exhaustive = coverage.skipped_by_budget == BigInt::from(0);
    let (best_count, witness, witness_solutions) = match best {
        Some(b) => b,
        None => (0, EnSystem::new(n)?, Vec::new()),
    };
    Ok(FReport {
        n,
        box_radius: options.box_radius,
        use_symmetry: options.use_symmetry,
        best_count,
        witness,
        witness_solutions,
        coverage,
        exhaustive,
    })
}

/// Adds a fresh variable restricted to `{0, 1}`, doubling the solution count.
pub fn double_by_idempotent(system: &EnSystem) -> EnSystem {
    let n = system.n() + 1;
    let mut lifted = system.widen(n).expect("widening never shrinks");
    lifted
        .insert(EnEquation::mul(n, n, n))
        .expect("new variable is in range");
    lifted
}
