//! Exhaustive zero scan of a polynomial over a box. Evaluates the
//! polynomial directly and never touches the propagation engine, so it can
//! serve as an independent check of [`super::enumerate`].

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{DomainSpec, SolveError};
use crate::polyalg::Polynomial;

/// Largest number of box points scanned by default.
pub const DEFAULT_SCAN_CEILING: u64 = 20_000_000;

/// All zeros of `poly` in `[-r, r]^p` clipped to the domain, in
/// lexicographic order.
pub fn brute_force_zeros(
    poly: &Polynomial,
    domain: DomainSpec,
    box_radius: u64,
) -> Result<Vec<Vec<BigInt>>, SolveError> {
    brute_force_zeros_with_ceiling(poly, domain, box_radius, DEFAULT_SCAN_CEILING)
}

pub fn brute_force_zeros_with_ceiling(
    poly: &Polynomial,
    domain: DomainSpec,
    box_radius: u64,
    ceiling: u64,
) -> Result<Vec<Vec<BigInt>>, SolveError> {
    let p = poly.var_count();
    let r = i64::try_from(box_radius).map_err(|_| SolveError::BadBound)?;
    let lo = match domain {
        DomainSpec::Integers => -r,
        DomainSpec::Naturals => 0,
        DomainSpec::PositiveNaturals => 1,
    };
    if lo > r {
        return Ok(Vec::new());
    }
    let width = (r - lo + 1) as u64;
    let size = (0..p).try_fold(1u64, |acc, _| acc.checked_mul(width));
    match size {
        Some(s) if s <= ceiling => {}
        _ => {
            let total = BigInt::from(width).pow(p as u32);
            return Err(SolveError::ScanCeiling {
                size: total.to_string(),
                ceiling,
            });
        }
    }

    let mut zeros = Vec::new();
    let mut point: Vec<BigInt> = vec![BigInt::from(lo); p];
    let top = BigInt::from(r);
    loop {
        if poly.evaluate(&point)?.is_zero() {
            zeros.push(point.clone());
        }
        // odometer, last coordinate fastest
        let mut k = p;
        loop {
            if k == 0 {
                return Ok(zeros);
            }
            k -= 1;
            if point[k] < top {
                point[k] += BigInt::one();
                break;
            }
            point[k] = BigInt::from(lo);
        }
    }
}
