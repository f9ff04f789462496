//! Bounds propagation for the three equation shapes.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::domain::{
    add_range, ceil_sqrt, div_range, floor_sqrt, magnitude_range, mul_range, square_range,
    sub_range, Dom, Empty, Ext,
};
use crate::ensystem::EnEquation;

/// Largest number of input combinations for which an equation is filtered
/// value by value instead of by bounds only.
const SUPPORT_LIMIT: u64 = 512;

/// Bounds wider than this many bits are not applied. Skipping a narrowing
/// is always sound, and it stops runaway growth such as `x = 2*x*x + 3`,
/// whose lower bound squares every round.
const MAX_BOUND_BITS: u64 = 1 << 16;

fn too_wide(e: &Ext) -> bool {
    e.fin().is_some_and(|v| v.bits() > MAX_BOUND_BITS)
}

fn narrow(doms: &mut [Dom], v: usize, range: (Ext, Ext)) -> Result<bool, Empty> {
    let lo = if too_wide(&range.0) {
        Ext::NegInf
    } else {
        range.0
    };
    let hi = if too_wide(&range.1) {
        Ext::PosInf
    } else {
        range.1
    };
    doms[v - 1].intersect(&lo, &hi)
}

fn restrict(doms: &mut [Dom], v: usize, values: &[i64]) -> Result<bool, Empty> {
    let set: BTreeSet<BigInt> = values.iter().map(|&x| BigInt::from(x)).collect();
    doms[v - 1].intersect_set(&set)
}

fn two() -> Dom {
    let t = Ext::Fin(BigInt::from(2));
    Dom {
        lo: t.clone(),
        hi: t,
        set: None,
    }
}

/// One application of the bounds rules of `eq`.
fn apply_bounds(eq: &EnEquation, doms: &mut [Dom]) -> Result<bool, Empty> {
    let mut changed = false;
    match *eq {
        EnEquation::Unit { i } => changed |= restrict(doms, i, &[1])?,
        EnEquation::Add { i, j, o } => {
            if i == j && j == o {
                changed |= restrict(doms, i, &[0])?;
            } else if o == i {
                changed |= restrict(doms, j, &[0])?;
            } else if o == j {
                changed |= restrict(doms, i, &[0])?;
            } else if i == j {
                let r = add_range(&doms[i - 1], &doms[i - 1]);
                changed |= narrow(doms, o, r)?;
                let r = div_range(&doms[o - 1], &two());
                changed |= narrow(doms, i, r)?;
            } else {
                let r = add_range(&doms[i - 1], &doms[j - 1]);
                changed |= narrow(doms, o, r)?;
                let r = sub_range(&doms[o - 1], &doms[j - 1]);
                changed |= narrow(doms, i, r)?;
                let r = sub_range(&doms[o - 1], &doms[i - 1]);
                changed |= narrow(doms, j, r)?;
            }
        }
        EnEquation::Mul { i, j, o } => {
            if i == j && j == o {
                changed |= restrict(doms, i, &[0, 1])?;
            } else if i == j {
                changed |= square_rule(doms, i, o)?;
            } else if o == i {
                changed |= idempotent_factor_rule(doms, i, j)?;
            } else if o == j {
                changed |= idempotent_factor_rule(doms, j, i)?;
            } else {
                let r = mul_range(&doms[i - 1], &doms[j - 1]);
                changed |= narrow(doms, o, r)?;
                if doms[j - 1].excludes_zero() {
                    let r = div_range(&doms[o - 1], &doms[j - 1]);
                    changed |= narrow(doms, i, r)?;
                }
                if doms[i - 1].excludes_zero() {
                    let r = div_range(&doms[o - 1], &doms[i - 1]);
                    changed |= narrow(doms, j, r)?;
                }
                if doms[o - 1].excludes_zero() {
                    // a nonzero product has factors of magnitude at least one
                    changed |= doms[i - 1].remove_zero()?;
                    changed |= doms[j - 1].remove_zero()?;
                    if doms[o - 1].is_finite() {
                        let r = magnitude_range(&doms[o - 1]);
                        changed |= narrow(doms, i, r.clone())?;
                        changed |= narrow(doms, j, r)?;
                    }
                }
            }
        }
    }
    Ok(changed)
}

/// `x_i * x_i = x_o` with `i != o`.
fn square_rule(doms: &mut [Dom], i: usize, o: usize) -> Result<bool, Empty> {
    let mut changed = false;
    let r = square_range(&doms[i - 1]);
    changed |= narrow(doms, o, r)?;
    if let Some(hi) = doms[o - 1].hi.fin().cloned() {
        let root = floor_sqrt(&hi);
        changed |= narrow(doms, i, (Ext::Fin(-root.clone()), Ext::Fin(root)))?;
    }
    if let Some(lo) = doms[o - 1].lo.fin().cloned() {
        if lo > BigInt::zero() {
            changed |= doms[i - 1].remove_zero()?;
            let root = ceil_sqrt(&lo);
            let zero = Ext::Fin(BigInt::zero());
            if doms[i - 1].lo >= zero {
                changed |= narrow(doms, i, (Ext::Fin(root), Ext::PosInf))?;
            } else if doms[i - 1].hi <= zero {
                changed |= narrow(doms, i, (Ext::NegInf, Ext::Fin(-root)))?;
            }
        }
    }
    Ok(changed)
}

/// `x_a * x_b = x_a`, i.e. `x_a = 0` or `x_b = 1`.
fn idempotent_factor_rule(doms: &mut [Dom], a: usize, b: usize) -> Result<bool, Empty> {
    let mut changed = false;
    if doms[a - 1].excludes_zero() {
        changed |= restrict(doms, b, &[1])?;
    }
    if !doms[b - 1].contains(&BigInt::one()) {
        changed |= restrict(doms, a, &[0])?;
    }
    Ok(changed)
}

/// Value-level filtering when the inputs of `eq` have few combinations.
fn apply_supports(eq: &EnEquation, doms: &mut [Dom]) -> Result<bool, Empty> {
    let (i, j, o, is_add) = match *eq {
        EnEquation::Unit { .. } => return Ok(false),
        EnEquation::Add { i, j, o } => (i, j, o, true),
        EnEquation::Mul { i, j, o } => (i, j, o, false),
    };
    let Some(si) = doms[i - 1].small_size(SUPPORT_LIMIT) else {
        return Ok(false);
    };
    let Some(sj) = doms[j - 1].small_size(SUPPORT_LIMIT) else {
        return Ok(false);
    };
    if i != j && si * sj > SUPPORT_LIMIT {
        return Ok(false);
    }
    let mut sup_i = BTreeSet::new();
    let mut sup_j = BTreeSet::new();
    let mut sup_o = BTreeSet::new();
    let combine = |a: &BigInt, b: &BigInt| if is_add { a + b } else { a * b };
    let vi = doms[i - 1].values();
    let vj = if i == j {
        Vec::new()
    } else {
        doms[j - 1].values()
    };
    for a in &vi {
        let partners: Vec<&BigInt> = if i == j { vec![a] } else { vj.iter().collect() };
        for b in partners {
            let out = combine(a, b);
            let ok = if o == i {
                &out == a
            } else if o == j {
                &out == b
            } else {
                doms[o - 1].contains(&out)
            };
            if ok {
                sup_i.insert(a.clone());
                sup_j.insert(b.clone());
                sup_o.insert(out);
            }
        }
    }
    let mut changed = doms[i - 1].intersect_set(&sup_i)?;
    if j != i {
        changed |= doms[j - 1].intersect_set(&sup_j)?;
    }
    if o != i && o != j {
        changed |= doms[o - 1].intersect_set(&sup_o)?;
    }
    Ok(changed)
}

/// Runs the rule set to a fixpoint or for at most `round_cap` rounds.
/// Stopping at the cap leaves sound, possibly loose, domains.
pub(crate) fn propagate(
    eqs: &[EnEquation],
    doms: &mut [Dom],
    round_cap: usize,
) -> Result<(), Empty> {
    for _ in 0..round_cap.max(1) {
        let mut changed = false;
        for eq in eqs {
            changed |= apply_bounds(eq, doms)?;
            changed |= apply_supports(eq, doms)?;
        }
        if !changed {
            break;
        }
    }
    Ok(())
}

/// Like [`propagate`], but also merges variables that the domains force to
/// be equal (`1 * a = b`, `0 + a = b`) and propagates the merged system,
/// which sees through chains such as `a * a = c, 1 * c = a`.
pub(crate) fn propagate_with_aliases(
    eqs: &[EnEquation],
    doms: &mut [Dom],
    round_cap: usize,
) -> Result<(), Empty> {
    let n = doms.len();
    let mut rep: Vec<usize> = (0..=n).collect();
    fn find(rep: &mut [usize], v: usize) -> usize {
        let mut r = v;
        while rep[r] != r {
            r = rep[r];
        }
        rep[v] = r;
        r
    }
    let mut current: Vec<EnEquation> = eqs.to_vec();
    let one = BigInt::one();
    let zero = BigInt::zero();
    loop {
        propagate(&current, doms, round_cap)?;
        let mut merged = false;
        for eq in &current {
            let pair = match *eq {
                EnEquation::Mul { i, j, o } if doms[i - 1].singleton() == Some(&one) => {
                    Some((j, o))
                }
                EnEquation::Mul { i, j, o } if doms[j - 1].singleton() == Some(&one) => {
                    Some((i, o))
                }
                EnEquation::Add { i, j, o } if doms[i - 1].singleton() == Some(&zero) => {
                    Some((j, o))
                }
                EnEquation::Add { i, j, o } if doms[j - 1].singleton() == Some(&zero) => {
                    Some((i, o))
                }
                _ => None,
            };
            if let Some((a, b)) = pair {
                let (ra, rb) = (find(&mut rep, a), find(&mut rep, b));
                if ra != rb {
                    let (keep, drop) = (ra.min(rb), ra.max(rb));
                    rep[drop] = keep;
                    let other = doms[drop - 1].clone();
                    doms[keep - 1].intersect(&other.lo, &other.hi)?;
                    if let Some(set) = &other.set {
                        doms[keep - 1].intersect_set(set)?;
                    }
                    merged = true;
                }
            }
        }
        if !merged {
            break;
        }
        let mut rewritten: Vec<EnEquation> = current
            .iter()
            .map(|eq| {
                let mut m = |v: usize| find(&mut rep, v);
                match *eq {
                    EnEquation::Unit { i } => EnEquation::unit(m(i)),
                    EnEquation::Add { i, j, o } => EnEquation::add(m(i), m(j), m(o)),
                    EnEquation::Mul { i, j, o } => EnEquation::mul(m(i), m(j), m(o)),
                }
            })
            .collect();
        rewritten.sort();
        rewritten.dedup();
        current = rewritten;
    }
    for v in 1..=n {
        let r = find(&mut rep, v);
        if r != v {
            doms[v - 1] = doms[r - 1].clone();
        }
    }
    Ok(())
}

/// Default round cap: `10 * n * |equations|`.
pub(crate) fn default_round_cap(n: usize, equations: usize) -> usize {
    (10 * n * equations).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::DomainSpec;

    fn run(eqs: &[EnEquation], n: usize, spec: DomainSpec) -> Result<Vec<Dom>, Empty> {
        let mut doms = vec![Dom::full(spec); n];
        propagate(eqs, &mut doms, default_round_cap(n, eqs.len()))?;
        Ok(doms)
    }

    fn hull(d: &Dom) -> (Option<i64>, Option<i64>) {
        let f = |e: &Ext| e.fin().map(|v| i64::try_from(v).unwrap());
        (f(&d.lo), f(&d.hi))
    }

    #[test]
    fn basic_rules() {
        let d = run(&[EnEquation::unit(1)], 1, DomainSpec::Integers).unwrap();
        assert_eq!(hull(&d[0]), (Some(1), Some(1)));
        let d = run(&[EnEquation::mul(1, 1, 1)], 1, DomainSpec::Integers).unwrap();
        assert_eq!(d[0].values(), vec![BigInt::from(0), BigInt::from(1)]);
        assert!(run(&[EnEquation::add(1, 1, 1)], 1, DomainSpec::PositiveNaturals).is_err());
        let d = run(&[EnEquation::add(1, 2, 1)], 2, DomainSpec::Integers).unwrap();
        assert_eq!(hull(&d[1]), (Some(0), Some(0)));
        assert_eq!(hull(&d[0]), (None, None));
    }

    #[test]
    fn square_bounds_from_output() {
        let eqs = [EnEquation::mul(1, 1, 2), EnEquation::mul(2, 2, 2)];
        let d = run(&eqs, 2, DomainSpec::Integers).unwrap();
        assert_eq!(hull(&d[0]), (Some(-1), Some(1)));
        assert_eq!(hull(&d[1]), (Some(0), Some(1)));
    }

    #[test]
    fn quotient_from_nonzero_factor() {
        // x1 = 1, x1 * x2 = x1 forces x2 = 1
        let eqs = [EnEquation::unit(1), EnEquation::mul(1, 2, 1)];
        let d = run(&eqs, 2, DomainSpec::Integers).unwrap();
        assert_eq!(hull(&d[1]), (Some(1), Some(1)));
        // x3 = 2 via 1+1, x1 * x2 = x3 bounds both factors by 2
        let eqs = [
            EnEquation::unit(1),
            EnEquation::add(1, 1, 3),
            EnEquation::mul(2, 4, 3),
        ];
        let d = run(&eqs, 4, DomainSpec::Integers).unwrap();
        assert_eq!(hull(&d[2]), (Some(2), Some(2)));
        assert!(d[1].is_finite() && d[3].is_finite());
        assert!(!d[1].contains(&BigInt::zero()));
    }

    #[test]
    fn aliases_expose_idempotents() {
        // x2 = 1, x1 * x1 = x3, x2 * x3 = x4, x2 * x1 = x4: so x1 * x1 = x1
        let eqs = [
            EnEquation::unit(2),
            EnEquation::mul(1, 1, 3),
            EnEquation::mul(2, 3, 4),
            EnEquation::mul(1, 2, 4),
        ];
        let mut doms = vec![Dom::full(DomainSpec::Integers); 4];
        propagate(&eqs, &mut doms, 100).unwrap();
        assert!(!doms[0].is_finite());
        propagate_with_aliases(&eqs, &mut doms, 100).unwrap();
        assert_eq!(doms[0].values(), vec![BigInt::from(0), BigInt::from(1)]);
        assert_eq!(doms[3].values(), vec![BigInt::from(0), BigInt::from(1)]);
    }

    #[test]
    fn quotient_by_divisor_around_a_hole() {
        // x3 = 2 and x1 * x2 = x3: both factors range over {-2,-1,1,2}
        let eqs = [
            EnEquation::unit(4),
            EnEquation::add(4, 4, 3),
            EnEquation::mul(1, 2, 3),
        ];
        let mut doms = vec![Dom::full(DomainSpec::Integers); 4];
        propagate(&eqs, &mut doms, 100).unwrap();
        let four: Vec<BigInt> = [-2, -1, 1, 2].into_iter().map(BigInt::from).collect();
        assert_eq!(doms[0].values(), four);
        assert_eq!(doms[1].values(), four);
    }

    #[test]
    fn runaway_bounds_stop_growing() {
        // x1 = 2*x1*x1 + 3 has no integer solution; the lower bound of x1
        // squares each round until the width guard stops it
        let eqs = [
            EnEquation::unit(2),
            EnEquation::mul(1, 1, 3),
            EnEquation::add(3, 3, 4),
            EnEquation::add(2, 2, 5),
            EnEquation::add(2, 5, 6),
            EnEquation::add(4, 6, 1),
        ];
        let mut doms = vec![Dom::full(DomainSpec::Integers); 6];
        propagate(&eqs, &mut doms, 100_000).unwrap();
        assert!(!doms[0].is_finite());
        assert!(doms[0].lo > Ext::Fin(BigInt::from(1000)));
    }

    #[test]
    fn round_cap_is_a_safety_net() {
        // x2 = x1 + 1 and x1 = x2 + 1 only shrink by one per round inside a box
        let eqs = [
            EnEquation::unit(3),
            EnEquation::add(1, 3, 2),
            EnEquation::add(2, 3, 1),
        ];
        let mut doms = vec![Dom::full(DomainSpec::Integers); 3];
        let b = BigInt::from(1_000_000);
        for d in doms.iter_mut().take(2) {
            d.intersect(&Ext::Fin(-b.clone()), &Ext::Fin(b.clone()))
                .unwrap();
        }
        // cap reached: still consistent, domains only shrank
        assert!(propagate(&eqs, &mut doms, 5).is_ok());
        assert!(doms[0].is_finite());
    }
}
