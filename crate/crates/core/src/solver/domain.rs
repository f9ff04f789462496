//! Integer domains with possibly infinite bounds.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::DomainSpec;
use crate::json_int;

/// Extended integer used for interval endpoints.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Ext {
    NegInf,
    Fin(BigInt),
    PosInf,
}

impl Ext {
    fn signum(&self) -> i8 {
        match self {
            Ext::NegInf => -1,
            Ext::PosInf => 1,
            Ext::Fin(v) if v.is_zero() => 0,
            Ext::Fin(v) if v.is_negative() => -1,
            Ext::Fin(_) => 1,
        }
    }

    fn inf(sign: i8) -> Ext {
        if sign < 0 {
            Ext::NegInf
        } else {
            Ext::PosInf
        }
    }

    pub(crate) fn fin(&self) -> Option<&BigInt> {
        match self {
            Ext::Fin(v) => Some(v),
            _ => None,
        }
    }

    /// Sum of two endpoints of the same side; never mixes opposite infinities.
    fn add(&self, other: &Ext) -> Ext {
        match (self, other) {
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a + b),
            (Ext::NegInf, _) | (_, Ext::NegInf) => Ext::NegInf,
            _ => Ext::PosInf,
        }
    }

    fn neg(&self) -> Ext {
        match self {
            Ext::NegInf => Ext::PosInf,
            Ext::PosInf => Ext::NegInf,
            Ext::Fin(v) => Ext::Fin(-v),
        }
    }

    /// Product of endpoints; `0 * inf = 0` since endpoints bound finite values.
    fn mul(&self, other: &Ext) -> Ext {
        match (self, other) {
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a * b),
            _ => {
                let s = self.signum() * other.signum();
                if s == 0 {
                    Ext::Fin(BigInt::zero())
                } else {
                    Ext::inf(s)
                }
            }
        }
    }

    /// `(floor, ceil)` of `self / other` for a nonzero divisor, with limits
    /// at the infinite corners.
    fn div_floor_ceil(&self, other: &Ext) -> (Ext, Ext) {
        match (self, other) {
            (Ext::Fin(a), Ext::Fin(b)) => {
                (Ext::Fin(a.div_floor(b)), Ext::Fin(Integer::div_ceil(a, b)))
            }
            (Ext::Fin(_), _) => (Ext::Fin(BigInt::zero()), Ext::Fin(BigInt::zero())),
            _ => {
                let e = Ext::inf(self.signum() * other.signum());
                (e.clone(), e)
            }
        }
    }

    fn square(&self) -> Ext {
        match self {
            Ext::Fin(v) => Ext::Fin(v * v),
            _ => Ext::PosInf,
        }
    }

    fn abs(&self) -> Ext {
        match self {
            Ext::Fin(v) => Ext::Fin(v.abs()),
            _ => Ext::PosInf,
        }
    }
}

pub(crate) fn floor_sqrt(v: &BigInt) -> BigInt {
    v.sqrt()
}

pub(crate) fn ceil_sqrt(v: &BigInt) -> BigInt {
    let s = v.sqrt();
    if &(&s * &s) < v {
        s + 1
    } else {
        s
    }
}

/// Emptied domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Empty;

/// Working domain of one variable: a closed interval, optionally refined
/// to an explicit value set whose hull is the interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Dom {
    pub(crate) lo: Ext,
    pub(crate) hi: Ext,
    pub(crate) set: Option<BTreeSet<BigInt>>,
}

impl Dom {
    pub(crate) fn full(spec: DomainSpec) -> Dom {
        let lo = match spec {
            DomainSpec::Integers => Ext::NegInf,
            DomainSpec::Naturals => Ext::Fin(BigInt::zero()),
            DomainSpec::PositiveNaturals => Ext::Fin(BigInt::one()),
        };
        Dom {
            lo,
            hi: Ext::PosInf,
            set: None,
        }
    }

    pub(crate) fn is_finite(&self) -> bool {
        matches!((&self.lo, &self.hi), (Ext::Fin(_), Ext::Fin(_)))
    }

    pub(crate) fn size(&self) -> Option<BigInt> {
        if let Some(s) = &self.set {
            return Some(BigInt::from(s.len()));
        }
        match (&self.lo, &self.hi) {
            (Ext::Fin(a), Ext::Fin(b)) => Some(b - a + 1),
            _ => None,
        }
    }

    /// Size when small enough to enumerate.
    pub(crate) fn small_size(&self, limit: u64) -> Option<u64> {
        let s = self.size()?;
        let s: u64 = s.try_into().ok()?;
        (s <= limit).then_some(s)
    }

    pub(crate) fn singleton(&self) -> Option<&BigInt> {
        match (&self.lo, &self.hi) {
            (Ext::Fin(a), Ext::Fin(b)) if a == b => Some(a),
            _ => None,
        }
    }

    pub(crate) fn contains(&self, v: &BigInt) -> bool {
        if let Some(s) = &self.set {
            return s.contains(v);
        }
        let above = match &self.lo {
            Ext::Fin(a) => v >= a,
            _ => true,
        };
        let below = match &self.hi {
            Ext::Fin(b) => v <= b,
            _ => true,
        };
        above && below
    }

    pub(crate) fn excludes_zero(&self) -> bool {
        !self.contains(&BigInt::zero())
    }

    /// Largest magnitude, if bounded.
    pub(crate) fn extent(&self) -> Option<BigInt> {
        match (&self.lo, &self.hi) {
            (Ext::Fin(a), Ext::Fin(b)) => Some(a.abs().max(b.abs())),
            _ => None,
        }
    }

    /// Values in ascending order; only for finite domains.
    pub(crate) fn values(&self) -> Vec<BigInt> {
        if let Some(s) = &self.set {
            return s.iter().cloned().collect();
        }
        let (Ext::Fin(a), Ext::Fin(b)) = (&self.lo, &self.hi) else {
            panic!("enumerating an unbounded domain");
        };
        let mut out = Vec::new();
        let mut v = a.clone();
        while &v <= b {
            out.push(v.clone());
            v += 1;
        }
        out
    }

    fn resync(&mut self) -> Result<(), Empty> {
        if let Some(s) = &self.set {
            match (s.first(), s.last()) {
                (Some(a), Some(b)) => {
                    self.lo = Ext::Fin(a.clone());
                    self.hi = Ext::Fin(b.clone());
                }
                _ => return Err(Empty),
            }
        }
        if self.lo > self.hi {
            return Err(Empty);
        }
        Ok(())
    }

    pub(crate) fn intersect(&mut self, lo: &Ext, hi: &Ext) -> Result<bool, Empty> {
        let mut changed = false;
        if lo > &self.lo {
            self.lo = lo.clone();
            changed = true;
        }
        if hi < &self.hi {
            self.hi = hi.clone();
            changed = true;
        }
        if changed {
            if let Some(s) = self.set.take() {
                let kept: BTreeSet<BigInt> = s
                    .into_iter()
                    .filter(|v| {
                        let ok_lo = match &self.lo {
                            Ext::Fin(a) => v >= a,
                            _ => true,
                        };
                        let ok_hi = match &self.hi {
                            Ext::Fin(b) => v <= b,
                            _ => true,
                        };
                        ok_lo && ok_hi
                    })
                    .collect();
                self.set = Some(kept);
            }
            self.resync()?;
        }
        Ok(changed)
    }

    pub(crate) fn intersect_set(&mut self, values: &BTreeSet<BigInt>) -> Result<bool, Empty> {
        let kept: BTreeSet<BigInt> = values
            .iter()
            .filter(|v| self.contains(v))
            .cloned()
            .collect();
        let changed = self.set.as_ref() != Some(&kept);
        self.set = Some(kept);
        self.resync()?;
        Ok(changed)
    }

    pub(crate) fn assign(&mut self, v: &BigInt) -> Result<bool, Empty> {
        if !self.contains(v) {
            return Err(Empty);
        }
        let changed = self.singleton() != Some(v);
        self.lo = Ext::Fin(v.clone());
        self.hi = Ext::Fin(v.clone());
        self.set = None;
        Ok(changed)
    }

    pub(crate) fn remove_zero(&mut self) -> Result<bool, Empty> {
        let zero = BigInt::zero();
        if !self.contains(&zero) {
            return Ok(false);
        }
        if let Some(s) = &mut self.set {
            s.remove(&zero);
            self.resync()?;
            return Ok(true);
        }
        if self.lo == Ext::Fin(zero.clone()) {
            self.lo = Ext::Fin(BigInt::one());
        } else if self.hi == Ext::Fin(zero) {
            self.hi = Ext::Fin(-BigInt::one());
        } else {
            return Ok(false);
        }
        self.resync()?;
        Ok(true)
    }

    pub(crate) fn to_public(&self) -> VarDomain {
        match &self.set {
            Some(s) => VarDomain::Set(s.iter().cloned().collect()),
            None => VarDomain::Interval {
                lo: self.lo.fin().cloned(),
                hi: self.hi.fin().cloned(),
            },
        }
    }
}

/// Interval sum.
pub(crate) fn add_range(a: &Dom, b: &Dom) -> (Ext, Ext) {
    (a.lo.add(&b.lo), a.hi.add(&b.hi))
}

/// Interval difference `a - b`.
pub(crate) fn sub_range(a: &Dom, b: &Dom) -> (Ext, Ext) {
    (a.lo.add(&b.hi.neg()), a.hi.add(&b.lo.neg()))
}

/// Interval product.
pub(crate) fn mul_range(a: &Dom, b: &Dom) -> (Ext, Ext) {
    let corners = [
        a.lo.mul(&b.lo),
        a.lo.mul(&b.hi),
        a.hi.mul(&b.lo),
        a.hi.mul(&b.hi),
    ];
    let lo = corners.iter().min().cloned().expect("four corners");
    let hi = corners.into_iter().max().expect("four corners");
    (lo, hi)
}

/// Integer hull of `a / b`; `b` must exclude zero.
pub(crate) fn div_range(a: &Dom, b: &Dom) -> (Ext, Ext) {
    let zero = Ext::Fin(BigInt::zero());
    if b.lo < zero && b.hi > zero {
        // divisor straddles zero (which it excludes): split into signed halves
        let neg = Dom {
            lo: b.lo.clone(),
            hi: Ext::Fin(-BigInt::one()),
            set: None,
        };
        let pos = Dom {
            lo: Ext::Fin(BigInt::one()),
            hi: b.hi.clone(),
            set: None,
        };
        let (l1, h1) = corner_quotients(a, &neg);
        let (l2, h2) = corner_quotients(a, &pos);
        return (l1.min(l2), h1.max(h2));
    }
    corner_quotients(a, b)
}

/// Quotient hull for a divisor interval of one sign.
fn corner_quotients(a: &Dom, b: &Dom) -> (Ext, Ext) {
    let mut lo = Ext::PosInf;
    let mut hi = Ext::NegInf;
    for num in [&a.lo, &a.hi] {
        for den in [&b.lo, &b.hi] {
            let (f, c) = num.div_floor_ceil(den);
            if c < lo {
                lo = c;
            }
            if f > hi {
                hi = f;
            }
        }
    }
    (lo, hi)
}

/// Hull of `a * a`.
pub(crate) fn square_range(a: &Dom) -> (Ext, Ext) {
    let zero = Ext::Fin(BigInt::zero());
    let (l2, h2) = (a.lo.square(), a.hi.square());
    if a.lo < zero && a.hi > zero {
        let floor = if a.contains(&BigInt::zero()) {
            BigInt::zero()
        } else {
            BigInt::one()
        };
        (Ext::Fin(floor), l2.max(h2))
    } else {
        (l2.clone().min(h2.clone()), l2.max(h2))
    }
}

pub(crate) fn magnitude_range(a: &Dom) -> (Ext, Ext) {
    let m = a.lo.abs().max(a.hi.abs());
    (m.neg(), m)
}

/// Public view of a propagated variable domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarDomain {
    /// Closed interval; `None` is an infinite endpoint.
    Interval {
        #[serde(with = "json_int::option")]
        lo: Option<BigInt>,
        #[serde(with = "json_int::option")]
        hi: Option<BigInt>,
    },
    /// Explicit finite set, ascending.
    Set(#[serde(with = "json_int::vec")] Vec<BigInt>),
}

impl VarDomain {
    pub fn contains(&self, v: &BigInt) -> bool {
        match self {
            VarDomain::Set(s) => s.binary_search(v).is_ok(),
            VarDomain::Interval { lo, hi } => {
                lo.as_ref().is_none_or(|a| v >= a) && hi.as_ref().is_none_or(|b| v <= b)
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        match self {
            VarDomain::Set(_) => true,
            VarDomain::Interval { lo, hi } => lo.is_some() && hi.is_some(),
        }
    }

    pub fn singleton(&self) -> Option<&BigInt> {
        match self {
            VarDomain::Set(s) if s.len() == 1 => s.first(),
            VarDomain::Interval {
                lo: Some(a),
                hi: Some(b),
            } if a == b => Some(a),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: Option<i64>, hi: Option<i64>) -> Dom {
        Dom {
            lo: lo.map_or(Ext::NegInf, |v| Ext::Fin(v.into())),
            hi: hi.map_or(Ext::PosInf, |v| Ext::Fin(v.into())),
            set: None,
        }
    }

    fn fin(v: i64) -> Ext {
        Ext::Fin(v.into())
    }

    #[test]
    fn products_with_infinite_endpoints() {
        assert_eq!(
            mul_range(&iv(Some(0), Some(5)), &iv(Some(3), None)),
            (fin(0), Ext::PosInf)
        );
        assert_eq!(
            mul_range(&iv(None, Some(0)), &iv(Some(0), None)),
            (Ext::NegInf, fin(0))
        );
        assert_eq!(
            mul_range(&iv(Some(-2), Some(3)), &iv(Some(-4), Some(5))),
            (fin(-12), fin(15))
        );
    }

    #[test]
    fn quotients() {
        // x * [2, 3] in [7, 20]  =>  x in [3, 10]
        assert_eq!(
            div_range(&iv(Some(7), Some(20)), &iv(Some(2), Some(3))),
            (fin(3), fin(10))
        );
        // x * [-3, -1] in [-6, 4]  =>  x in [-4, 6]
        assert_eq!(
            div_range(&iv(Some(-6), Some(4)), &iv(Some(-3), Some(-1))),
            (fin(-4), fin(6))
        );
        // x * [1, inf) in [5, 9]  =>  x in [0, 9]
        assert_eq!(
            div_range(&iv(Some(5), Some(9)), &iv(Some(1), None)),
            (fin(0), fin(9))
        );
        // x * [1, inf) in [-3, inf)  =>  x in [-3, inf)
        assert_eq!(
            div_range(&iv(Some(-3), None), &iv(Some(1), None)),
            (fin(-3), Ext::PosInf)
        );
    }

    #[test]
    fn squares_and_roots() {
        assert_eq!(square_range(&iv(Some(-3), Some(2))), (fin(0), fin(9)));
        assert_eq!(square_range(&iv(Some(2), Some(4))), (fin(4), fin(16)));
        assert_eq!(square_range(&iv(None, Some(-2))), (fin(4), Ext::PosInf));
        let mut holed = iv(Some(-3), Some(2));
        holed
            .intersect_set(&[-3, -1, 2].into_iter().map(BigInt::from).collect())
            .unwrap();
        assert_eq!(square_range(&holed), (fin(1), fin(9)));
        assert_eq!(floor_sqrt(&BigInt::from(15)), BigInt::from(3));
        assert_eq!(ceil_sqrt(&BigInt::from(15)), BigInt::from(4));
        assert_eq!(ceil_sqrt(&BigInt::from(16)), BigInt::from(4));
    }

    #[test]
    fn set_refinement_keeps_hull() {
        let mut d = iv(None, None);
        let vals: BTreeSet<BigInt> = [0, 1].into_iter().map(BigInt::from).collect();
        assert_eq!(d.intersect_set(&vals), Ok(true));
        assert_eq!((d.lo.clone(), d.hi.clone()), (fin(0), fin(1)));
        assert_eq!(d.remove_zero(), Ok(true));
        assert_eq!(d.singleton(), Some(&BigInt::from(1)));
        assert_eq!(d.intersect(&fin(2), &Ext::PosInf), Err(Empty));
    }

    #[test]
    fn remove_zero_from_interval_edges() {
        let mut d = iv(Some(0), Some(4));
        assert_eq!(d.remove_zero(), Ok(true));
        assert_eq!(d.lo, fin(1));
        let mut mid = iv(Some(-1), Some(1));
        assert_eq!(mid.remove_zero(), Ok(false));
        let mut z = iv(Some(0), Some(0));
        assert_eq!(z.remove_zero(), Err(Empty));
    }
}
