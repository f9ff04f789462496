//! Systems of three-address constraints `x_i = 1`, `x_i + x_j = x_k` and
//! `x_i * x_j = x_k` over variables `x_1..x_n`.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polyalg::Polynomial;

/// Highest `n` accepted by [`EnSystem::canonical_relabel`] by default.
pub const DEFAULT_RELABEL_CEILING: usize = 6;

/// Highest `n` accepted by [`psi`] unless overridden through
/// [`PSI_CEILING_ENV`]. The emitted-length bound of [`psi`] is exact for
/// every `n` below 25.
pub const DEFAULT_PSI_CEILING: usize = 16;

pub const PSI_CEILING_ENV: &str = "FINFOLD_PSI_CEILING";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SystemError {
    #[error("a system needs at least one variable")]
    NoVariables,
    #[error("equation {equation} mentions a variable outside 1..={n}")]
    IndexOutOfRange { equation: String, n: usize },
    #[error("n = {n} exceeds the relabeling ceiling {ceiling}")]
    RelabelCeiling { n: usize, ceiling: usize },
    #[error("n = {n} exceeds the expansion ceiling {ceiling}")]
    PsiCeiling { n: usize, ceiling: usize },
    #[error("permutation is not a bijection on 1..={n}")]
    BadPermutation { n: usize },
    #[error("assignment has {got} values, system has {n} variables")]
    ArityMismatch { n: usize, got: usize },
}

/// One constraint. Indices are 1-based; `Add` and `Mul` keep `i <= j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "k", rename_all = "lowercase")]
pub enum EnEquation {
    Unit { i: usize },
    Add { i: usize, j: usize, o: usize },
    Mul { i: usize, j: usize, o: usize },
}

impl EnEquation {
    pub fn unit(i: usize) -> Self {
        EnEquation::Unit { i }
    }

    pub fn add(i: usize, j: usize, o: usize) -> Self {
        EnEquation::Add {
            i: i.min(j),
            j: i.max(j),
            o,
        }
    }

    pub fn mul(i: usize, j: usize, o: usize) -> Self {
        EnEquation::Mul {
            i: i.min(j),
            j: i.max(j),
            o,
        }
    }

    /// Restores the `i <= j` normal form.
    pub fn normalized(self) -> Self {
        match self {
            EnEquation::Unit { .. } => self,
            EnEquation::Add { i, j, o } => EnEquation::add(i, j, o),
            EnEquation::Mul { i, j, o } => EnEquation::mul(i, j, o),
        }
    }

    pub fn max_index(&self) -> usize {
        match *self {
            EnEquation::Unit { i } => i,
            EnEquation::Add { i, j, o } | EnEquation::Mul { i, j, o } => i.max(j).max(o),
        }
    }

    pub fn min_index(&self) -> usize {
        match *self {
            EnEquation::Unit { i } => i,
            EnEquation::Add { i, j, o } | EnEquation::Mul { i, j, o } => i.min(j).min(o),
        }
    }

    pub fn variables(&self) -> Vec<usize> {
        match *self {
            EnEquation::Unit { i } => vec![i],
            EnEquation::Add { i, j, o } | EnEquation::Mul { i, j, o } => vec![i, j, o],
        }
    }

    /// Applies `perm`, where `perm[v - 1]` is the new index of `x_v`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let m = |v: usize| perm[v - 1];
        match *self {
            EnEquation::Unit { i } => EnEquation::unit(m(i)),
            EnEquation::Add { i, j, o } => EnEquation::add(m(i), m(j), m(o)),
            EnEquation::Mul { i, j, o } => EnEquation::mul(m(i), m(j), m(o)),
        }
    }

    pub fn holds(&self, x: &[BigInt]) -> bool {
        let v = |k: usize| &x[k - 1];
        match *self {
            EnEquation::Unit { i } => v(i).is_one(),
            EnEquation::Add { i, j, o } => &(v(i) + v(j)) == v(o),
            EnEquation::Mul { i, j, o } => &(v(i) * v(j)) == v(o),
        }
    }

    /// `(lhs - rhs)^2` over `n` variables.
    pub fn squared_residual(&self, n: usize) -> Polynomial {
        let x = |k: usize| Polynomial::var(k, n);
        let diff = match *self {
            EnEquation::Unit { i } => &x(i) - &Polynomial::constant(1, n),
            EnEquation::Add { i, j, o } => &(&x(i) + &x(j)) - &x(o),
            EnEquation::Mul { i, j, o } => &(&x(i) * &x(j)) - &x(o),
        };
        &diff * &diff
    }
}

impl fmt::Display for EnEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            EnEquation::Unit { i } => write!(f, "x{i}=1"),
            EnEquation::Add { i, j, o } => write!(f, "x{i}+x{j}=x{o}"),
            EnEquation::Mul { i, j, o } => write!(f, "x{i}*x{j}=x{o}"),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawSystem {
    n: usize,
    equations: Vec<EnEquation>,
}

/// A set of equations over `x_1..x_n`. Variables mentioned by no equation
/// still range over the whole solution domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawSystem", into = "RawSystem")]
pub struct EnSystem {
    n: usize,
    equations: BTreeSet<EnEquation>,
}

impl TryFrom<RawSystem> for EnSystem {
    type Error = SystemError;
    fn try_from(raw: RawSystem) -> Result<Self, SystemError> {
        EnSystem::from_equations(raw.n, raw.equations)
    }
}

impl From<EnSystem> for RawSystem {
    fn from(s: EnSystem) -> Self {
        RawSystem {
            n: s.n,
            equations: s.equations.into_iter().collect(),
        }
    }
}

impl EnSystem {
    pub fn new(n: usize) -> Result<Self, SystemError> {
        if n == 0 {
            return Err(SystemError::NoVariables);
        }
        Ok(EnSystem {
            n,
            equations: BTreeSet::new(),
        })
    }

    pub fn from_equations(
        n: usize,
        eqs: impl IntoIterator<Item = EnEquation>,
    ) -> Result<Self, SystemError> {
        let mut s = EnSystem::new(n)?;
        for eq in eqs {
            s.insert(eq)?;
        }
        Ok(s)
    }

    /// Inserts an equation (normalized); returns whether it was new.
    pub fn insert(&mut self, eq: EnEquation) -> Result<bool, SystemError> {
        if eq.min_index() == 0 || eq.max_index() > self.n {
            return Err(SystemError::IndexOutOfRange {
                equation: eq.to_string(),
                n: self.n,
            });
        }
        Ok(self.equations.insert(eq.normalized()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn contains(&self, eq: &EnEquation) -> bool {
        self.equations.contains(&eq.normalized())
    }

    /// Equations in canonical order.
    pub fn equations(&self) -> impl Iterator<Item = &EnEquation> + '_ {
        self.equations.iter()
    }

    /// Same equations over more variables.
    pub fn widen(&self, n: usize) -> Result<Self, SystemError> {
        if n < self.n {
            return Err(SystemError::IndexOutOfRange {
                equation: format!("widen to {n}"),
                n: self.n,
            });
        }
        Ok(EnSystem {
            n,
            equations: self.equations.clone(),
        })
    }

    pub fn union(&self, other: &EnSystem) -> EnSystem {
        let mut s = self
            .widen(self.n.max(other.n))
            .expect("widening to a larger n");
        s.equations.extend(other.equations.iter().copied());
        s
    }

    /// Per-variable flag: does some equation mention `x_{k+1}`?
    pub fn mentioned(&self) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        for eq in &self.equations {
            for v in eq.variables() {
                seen[v - 1] = true;
            }
        }
        seen
    }

    pub fn is_solved_by(&self, x: &[BigInt]) -> Result<bool, SystemError> {
        if x.len() != self.n {
            return Err(SystemError::ArityMismatch {
                n: self.n,
                got: x.len(),
            });
        }
        Ok(self.equations.iter().all(|eq| eq.holds(x)))
    }

    pub fn relabel(&self, perm: &[usize]) -> Result<EnSystem, SystemError> {
        if !is_permutation(perm, self.n) {
            return Err(SystemError::BadPermutation { n: self.n });
        }
        Ok(EnSystem {
            n: self.n,
            equations: self.equations.iter().map(|e| e.relabel(perm)).collect(),
        })
    }

    pub fn canonical_relabel(&self) -> Result<EnSystem, SystemError> {
        self.canonical_relabel_with_ceiling(DEFAULT_RELABEL_CEILING)
    }

    /// Least system, in equation-list order, among all `n!` relabelings.
    pub fn canonical_relabel_with_ceiling(&self, ceiling: usize) -> Result<EnSystem, SystemError> {
        if self.n > ceiling {
            return Err(SystemError::RelabelCeiling { n: self.n, ceiling });
        }
        let best = permutations(self.n)
            .into_iter()
            .map(|perm| self.relabel(&perm).expect("generated permutation"))
            .min()
            .expect("at least the identity permutation");
        Ok(best)
    }

    /// Sum of squared residuals: zero exactly on the solutions of the system.
    pub fn to_diophantine(&self) -> Polynomial {
        self.equations
            .iter()
            .fold(Polynomial::zero(self.n), |acc, eq| {
                &acc + &eq.squared_residual(self.n)
            })
    }
}

impl fmt::Display for EnSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={} {{", self.n)?;
        for (k, eq) in self.equations.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{eq}")?;
        }
        f.write_str("}")
    }
}

fn is_permutation(perm: &[usize], n: usize) -> bool {
    if perm.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p == 0 || p > n || seen[p - 1] {
            return false;
        }
        seen[p - 1] = true;
    }
    true
}

/// All permutations of `1..=n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (1..=n).collect();
    loop {
        out.push(current.clone());
        // next lexicographic permutation
        let Some(i) = (1..current.len())
            .rev()
            .find(|&i| current[i - 1] < current[i])
        else {
            return out;
        };
        let j = (i..current.len())
            .rev()
            .find(|&j| current[j] > current[i - 1])
            .expect("pivot successor");
        current.swap(i - 1, j);
        current[i..].reverse();
    }
}

/// Every canonical-form equation over `x_1..x_n`.
pub fn full_en(n: usize) -> Result<EnSystem, SystemError> {
    let mut s = EnSystem::new(n)?;
    for i in 1..=n {
        s.equations.insert(EnEquation::unit(i));
    }
    for i in 1..=n {
        for j in i..=n {
            for o in 1..=n {
                s.equations.insert(EnEquation::add(i, j, o));
                s.equations.insert(EnEquation::mul(i, j, o));
            }
        }
    }
    Ok(s)
}

/// `n + 2 * n * n(n+1)/2`.
pub fn full_en_size(n: usize) -> usize {
    n + n * n * (n + 1)
}

/// Expansion ceiling for [`psi`], honoring [`PSI_CEILING_ENV`].
pub fn psi_ceiling() -> usize {
    std::env::var(PSI_CEILING_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_PSI_CEILING)
}

/// Length of the single equation emitted for the full system over `n`
/// variables; bounds the emitted length of every subsystem.
pub fn psi(n: usize) -> Result<usize, SystemError> {
    psi_with_ceiling(n, psi_ceiling())
}

pub fn psi_with_ceiling(n: usize, ceiling: usize) -> Result<usize, SystemError> {
    if n > ceiling {
        return Err(SystemError::PsiCeiling { n, ceiling });
    }
    Ok(full_en(n)?.to_diophantine().length_measure())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::parse_polynomial_in;

    fn sys(n: usize, eqs: &[EnEquation]) -> EnSystem {
        EnSystem::from_equations(n, eqs.iter().copied()).unwrap()
    }

    #[test]
    fn full_en_small_cases() {
        let e1 = full_en(1).unwrap();
        assert_eq!(
            e1.equations().copied().collect::<Vec<_>>(),
            vec![
                EnEquation::unit(1),
                EnEquation::add(1, 1, 1),
                EnEquation::mul(1, 1, 1)
            ]
        );
        assert_eq!(full_en(2).unwrap().len(), 14);
        assert_eq!(full_en(3).unwrap().len(), 39);
        for n in 1..=5 {
            let k = n * (n + 1) / 2;
            assert_eq!(full_en(n).unwrap().len(), n + 2 * k * n);
            assert_eq!(full_en_size(n), n + 2 * k * n);
        }
        assert_eq!(full_en(0), Err(SystemError::NoVariables));
    }

    #[test]
    fn normal_form_and_order() {
        assert_eq!(
            EnEquation::add(3, 1, 2),
            EnEquation::Add { i: 1, j: 3, o: 2 }
        );
        let s = sys(
            3,
            &[
                EnEquation::mul(1, 1, 1),
                EnEquation::add(2, 1, 3),
                EnEquation::unit(3),
            ],
        );
        let order: Vec<_> = s.equations().copied().collect();
        assert_eq!(
            order,
            vec![
                EnEquation::unit(3),
                EnEquation::add(1, 2, 3),
                EnEquation::mul(1, 1, 1)
            ]
        );
        assert!(s.contains(&EnEquation::add(2, 1, 3)));
    }

    #[test]
    fn rejects_out_of_range() {
        let mut s = EnSystem::new(2).unwrap();
        assert!(matches!(
            s.insert(EnEquation::unit(3)),
            Err(SystemError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            s.insert(EnEquation::add(0, 1, 1)),
            Err(SystemError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn canonical_relabel_examples() {
        let s = sys(2, &[EnEquation::unit(2)]);
        assert_eq!(
            s.canonical_relabel().unwrap(),
            sys(2, &[EnEquation::unit(1)])
        );

        let m = sys(1, &[EnEquation::mul(1, 1, 1)]);
        assert_eq!(m.canonical_relabel().unwrap(), m);

        // the swap maps Add(1,2,2) to Add(1,2,1)
        let a = sys(2, &[EnEquation::add(1, 2, 2)]);
        let b = sys(2, &[EnEquation::add(1, 2, 1)]);
        assert_eq!(a.relabel(&[2, 1]).unwrap(), b);
        assert_eq!(
            a.canonical_relabel().unwrap(),
            b.canonical_relabel().unwrap()
        );

        let c = sys(2, &[EnEquation::add(1, 1, 2)]);
        assert_ne!(
            a.canonical_relabel().unwrap(),
            c.canonical_relabel().unwrap()
        );

        let big = EnSystem::new(7).unwrap();
        assert!(matches!(
            big.canonical_relabel(),
            Err(SystemError::RelabelCeiling { n: 7, ceiling: 6 })
        ));
    }

    #[test]
    fn permutations_enumerate_all() {
        assert_eq!(permutations(1), vec![vec![1]]);
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(3)[1], vec![1, 3, 2]);
    }

    #[test]
    fn to_diophantine_examples() {
        assert_eq!(
            sys(1, &[EnEquation::unit(1)]).to_diophantine(),
            parse_polynomial_in("x1^2-2*x1+1", 1).unwrap()
        );
        assert_eq!(
            sys(1, &[EnEquation::mul(1, 1, 1)]).to_diophantine(),
            parse_polynomial_in("(x1^2-x1)^2", 1).unwrap()
        );
        assert_eq!(
            sys(2, &[EnEquation::add(1, 2, 1)]).to_diophantine(),
            parse_polynomial_in("x2^2", 2).unwrap()
        );
        let empty = EnSystem::new(3).unwrap().to_diophantine();
        assert!(empty.is_zero());
        assert_eq!(empty.var_count(), 3);
    }

    #[test]
    fn psi_golden_values() {
        // frozen from this tokenizer
        assert_eq!(psi(1).unwrap(), 37);
        let (p1, p2, p3) = (psi(1).unwrap(), psi(2).unwrap(), psi(3).unwrap());
        assert!(p1 <= p2 && p2 <= p3);
        assert!(matches!(
            psi_with_ceiling(5, 4),
            Err(SystemError::PsiCeiling { .. })
        ));
        assert_eq!(
            full_en(1).unwrap().to_diophantine().canonical_text(),
            "x1*x1*x1*x1-2*x1*x1*x1+3*x1*x1-2*x1+1"
        );
    }

    #[test]
    fn json_shape() {
        let s = sys(
            3,
            &[
                EnEquation::mul(2, 2, 1),
                EnEquation::unit(1),
                EnEquation::add(1, 2, 3),
            ],
        );
        let text = serde_json::to_string(&s).unwrap();
        assert_eq!(
            text,
            r#"{"n":3,"equations":[{"k":"unit","i":1},{"k":"add","i":1,"j":2,"o":3},{"k":"mul","i":2,"j":2,"o":1}]}"#
        );
        let back: EnSystem = serde_json::from_str(
            r#"{"n":3,"equations":[{"k":"mul","i":2,"j":2,"o":1},{"k":"add","i":2,"j":1,"o":3},{"k":"unit","i":1}]}"#,
        )
        .unwrap();
        assert_eq!(back, s);
        assert!(
            serde_json::from_str::<EnSystem>(r#"{"n":1,"equations":[{"k":"unit","i":2}]}"#)
                .is_err()
        );
        assert!(serde_json::from_str::<EnSystem>(r#"{"n":0,"equations":[]}"#).is_err());
    }

    mod props {
        use super::*;
        use crate::solver::{DomainSpec, Solver};
        use proptest::prelude::*;

        fn system() -> impl Strategy<Value = EnSystem> {
            (1usize..=3).prop_flat_map(|n| {
                let all: Vec<EnEquation> = full_en(n).unwrap().equations().copied().collect();
                proptest::sample::subsequence(all.clone(), 0..=all.len().min(5))
                    .prop_map(move |eqs| EnSystem::from_equations(n, eqs).unwrap())
            })
        }

        fn count(s: &EnSystem) -> u64 {
            Solver::new(s, DomainSpec::Integers)
                .radius(4)
                .box_only(1..=s.n())
                .extension_limit(0)
                .run()
                .unwrap()
                .count
        }

        proptest! {
            #[test]
            fn relabeling_keeps_the_count(s in system(), pick in any::<prop::sample::Index>()) {
                let perms = permutations(s.n());
                let perm = pick.get(&perms);
                prop_assert_eq!(count(&s.relabel(perm).unwrap()), count(&s));
            }

            #[test]
            fn equation_vanishes_exactly_on_solutions(s in system(), x in proptest::collection::vec(-3i64..=3, 3)) {
                let x: Vec<BigInt> = x[..s.n()].iter().map(|&v| BigInt::from(v)).collect();
                let value = s.to_diophantine().evaluate(&x).unwrap();
                prop_assert_eq!(value == BigInt::from(0), s.is_solved_by(&x).unwrap());
            }

            #[test]
            fn canonical_relabel_is_a_class_invariant(s in system(), pick in any::<prop::sample::Index>()) {
                let perms = permutations(s.n());
                let moved = s.relabel(pick.get(&perms)).unwrap();
                prop_assert_eq!(moved.canonical_relabel().unwrap(), s.canonical_relabel().unwrap());
            }
        }
    }
}
