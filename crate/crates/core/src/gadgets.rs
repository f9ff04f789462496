//! Named building blocks: sums of four squares, the eight-square split, the
//! doubly exponential tower, the combined system and the majorant pipeline.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensystem::{psi, EnEquation, EnSystem, SystemError};
use crate::polyalg::{parse_polynomial_in, PolyError, Polynomial};
use crate::reducer::{compile, CompileError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GadgetError {
    #[error("tower height must be at least 3, got {0}")]
    TowerTooShort(usize),
    #[error("unknown role '{0}'")]
    UnknownRole(String),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// A system whose variables carry role names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetSystem {
    #[serde(flatten)]
    pub system: EnSystem,
    pub roles: BTreeMap<String, usize>,
}

impl GadgetSystem {
    pub fn index(&self, role: &str) -> Result<usize, GadgetError> {
        self.roles
            .get(role)
            .copied()
            .ok_or_else(|| GadgetError::UnknownRole(role.to_string()))
    }

    /// Pins by role name, for use with the solver.
    pub fn pins(&self, values: &[(&str, BigInt)]) -> Result<BTreeMap<usize, BigInt>, GadgetError> {
        values
            .iter()
            .map(|(role, v)| Ok((self.index(role)?, v.clone())))
            .collect()
    }
}

const BLOCK_ROLES: [&str; 11] = ["a", "b", "c", "d", "A", "B", "C", "D", "u1", "u2", "u3"];

/// Equations of a four-square block. `var(k)` gives the index of the k-th
/// role in [`BLOCK_ROLES`].
fn block_equations(var: impl Fn(usize) -> usize) -> Vec<EnEquation> {
    vec![
        EnEquation::mul(var(0), var(0), var(4)),
        EnEquation::mul(var(1), var(1), var(5)),
        EnEquation::mul(var(2), var(2), var(6)),
        EnEquation::mul(var(3), var(3), var(7)),
        EnEquation::add(var(4), var(5), var(8)),
        EnEquation::add(var(6), var(7), var(9)),
        EnEquation::add(var(8), var(9), var(10)),
    ]
}

/// `u3 = a*a + b*b + c*c + d*d` over 11 variables, roles prefixed.
pub fn four_square_block(prefix: &str) -> GadgetSystem {
    let system =
        EnSystem::from_equations(11, block_equations(|k| k + 1)).expect("indices within 11");
    let roles = BLOCK_ROLES
        .iter()
        .enumerate()
        .map(|(k, r)| (format!("{prefix}{r}"), k + 1))
        .collect();
    GadgetSystem { system, roles }
}

/// Two four-square blocks whose totals add up to `x2`. The second block's
/// roles carry a `~` prefix.
pub fn eight_square_split() -> GadgetSystem {
    let mut eqs = block_equations(|k| k + 1);
    eqs.extend(block_equations(|k| k + 12));
    eqs.push(EnEquation::add(11, 22, 23));
    let system = EnSystem::from_equations(23, eqs).expect("indices within 23");
    let mut roles = BTreeMap::new();
    for (k, r) in BLOCK_ROLES.iter().enumerate() {
        roles.insert(r.to_string(), k + 1);
        roles.insert(format!("~{r}"), k + 12);
    }
    roles.insert("x2".to_string(), 23);
    GadgetSystem { system, roles }
}

/// `t1 = 1, t2 = t1 + t1, t(i+1) = t(i)^2, x1 = t(s+1)^2`, which forces
/// `x1 = 2^(2^s)`. Variable 1 is `x1`, variable `i + 1` is `t(i)`.
pub fn power_tower(s: usize) -> Result<GadgetSystem, GadgetError> {
    if s < 3 {
        return Err(GadgetError::TowerTooShort(s));
    }
    let (system, roles) = tower_parts(s, 1, |i| i + 1);
    Ok(GadgetSystem {
        system: EnSystem::from_equations(s + 2, system)?,
        roles,
    })
}

fn tower_parts(
    s: usize,
    x1: usize,
    t: impl Fn(usize) -> usize,
) -> (Vec<EnEquation>, BTreeMap<String, usize>) {
    let mut eqs = vec![EnEquation::unit(t(1)), EnEquation::add(t(1), t(1), t(2))];
    for i in 2..=s {
        eqs.push(EnEquation::mul(t(i), t(i), t(i + 1)));
    }
    eqs.push(EnEquation::mul(t(s + 1), t(s + 1), x1));
    let mut roles: BTreeMap<String, usize> = (1..=s + 1).map(|i| (format!("t{i}"), t(i))).collect();
    roles.insert("x1".to_string(), x1);
    (eqs, roles)
}

/// The value the tower forces on `x1`.
pub fn tower_value(s: usize) -> BigInt {
    BigInt::one() << (1usize << s)
}

/// A formula over `x1..xs` stating `W = 0` with every `xi` (i <= m) a sum of
/// four squares. Variables: `x1..x(max(m,2))`, then the compiled auxiliaries
/// of `W`, then ten block variables per `xi` (its `u3` is `xi` itself).
/// Returns the gadget and `s`.
pub fn build_phi(w: &Polynomial) -> Result<(GadgetSystem, usize), GadgetError> {
    let compiled = compile(w)?;
    let m = compiled.p;
    let base = m.max(2);
    let shift = |v: usize| if v <= m { v } else { v - m + base };
    let mut eqs: Vec<EnEquation> = compiled
        .system
        .equations()
        .map(|eq| match *eq {
            EnEquation::Unit { i } => EnEquation::unit(shift(i)),
            EnEquation::Add { i, j, o } => EnEquation::add(shift(i), shift(j), shift(o)),
            EnEquation::Mul { i, j, o } => EnEquation::mul(shift(i), shift(j), shift(o)),
        })
        .collect();
    let mut next = shift(compiled.n()) + 1;
    for xi in 1..=m {
        let first = next;
        eqs.extend(block_equations(|k| if k == 10 { xi } else { first + k }));
        next += 10;
    }
    let s = next - 1;
    let system = EnSystem::from_equations(s, eqs)?;
    let roles = (1..=s).map(|i| (format!("x{i}"), i)).collect();
    Ok((GadgetSystem { system, roles }, s))
}

/// The combined system: the formula on `x1..xs`, the tower on `x1`, and the
/// eight-square split on `x2`. It has `2s + 23` variables.
pub fn build_system_s(w: &Polynomial) -> Result<(GadgetSystem, usize), GadgetError> {
    let (phi, s) = build_phi(w)?;
    let mut eqs: Vec<EnEquation> = phi.system.equations().copied().collect();
    let mut roles = phi.roles;

    let (tower, tower_roles) = tower_parts(s, 1, |i| s + i);
    eqs.extend(tower);
    roles.extend(tower_roles);

    // the split's 22 block variables follow the tower; its x2 is shared
    let split = eight_square_split();
    let offset = 2 * s + 1;
    let place = |v: usize| if v == 23 { 2 } else { offset + v };
    for eq in split.system.equations() {
        eqs.push(match *eq {
            EnEquation::Unit { i } => EnEquation::unit(place(i)),
            EnEquation::Add { i, j, o } => EnEquation::add(place(i), place(j), place(o)),
            EnEquation::Mul { i, j, o } => EnEquation::mul(place(i), place(j), place(o)),
        });
    }
    for (role, v) in split.roles {
        roles.insert(role, place(v));
    }
    let system = EnSystem::from_equations(2 * s + 23, eqs)?;
    Ok((GadgetSystem { system, roles }, s))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeltaError {
    #[error("bad delta description: {0}")]
    Parse(String),
    #[error("delta({input}) = {value} is not a positive integer")]
    NotPositive { input: BigInt, value: BigInt },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// A function from positive integers to positive integers: `identity`, a
/// polynomial in `x1`, or `table:1=4,2=10,default=<polynomial>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeltaSpec {
    Identity,
    Polynomial(Polynomial),
    Table {
        entries: BTreeMap<BigInt, BigInt>,
        default: Box<DeltaSpec>,
    },
}

impl DeltaSpec {
    pub fn eval(&self, r: &BigInt) -> Result<BigInt, DeltaError> {
        let value = match self {
            DeltaSpec::Identity => r.clone(),
            DeltaSpec::Polynomial(p) => p.evaluate(std::slice::from_ref(r))?,
            DeltaSpec::Table { entries, default } => match entries.get(r) {
                Some(v) => v.clone(),
                None => default.eval(r)?,
            },
        };
        if value < BigInt::one() {
            return Err(DeltaError::NotPositive {
                input: r.clone(),
                value,
            });
        }
        Ok(value)
    }
}

impl FromStr for DeltaSpec {
    type Err = DeltaError;

    fn from_str(text: &str) -> Result<Self, DeltaError> {
        let text = text.trim();
        if text == "identity" {
            return Ok(DeltaSpec::Identity);
        }
        if let Some(body) = text.strip_prefix("table:") {
            let mut entries = BTreeMap::new();
            let mut default = None;
            for item in body.split(',') {
                let (key, value) = item.split_once('=').ok_or_else(|| {
                    DeltaError::Parse(format!("expected key=value, got '{item}'"))
                })?;
                let (key, value) = (key.trim(), value.trim());
                if key == "default" {
                    default = Some(Box::new(value.parse::<DeltaSpec>()?));
                } else {
                    let parse = |s: &str| {
                        s.parse::<BigInt>()
                            .map_err(|_| DeltaError::Parse(format!("bad integer '{s}'")))
                    };
                    entries.insert(parse(key)?, parse(value)?);
                }
            }
            let default =
                default.ok_or_else(|| DeltaError::Parse("table needs a default".to_string()))?;
            return Ok(DeltaSpec::Table { entries, default });
        }
        Ok(DeltaSpec::Polynomial(
            parse_polynomial_in(text, 1).map_err(|e| DeltaError::Parse(e.to_string()))?,
        ))
    }
}

impl fmt::Display for DeltaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeltaSpec::Identity => write!(f, "identity"),
            DeltaSpec::Polynomial(p) => write!(f, "{p}"),
            DeltaSpec::Table { entries, default } => {
                write!(f, "table:")?;
                for (k, v) in entries {
                    write!(f, "{k}={v},")?;
                }
                write!(f, "default={default}")
            }
        }
    }
}

/// `delta(psi(n))`.
pub fn majorant_h(n: usize, delta: &DeltaSpec) -> Result<BigInt, DeltaError> {
    delta.eval(&BigInt::from(psi(n)?))
}

/// `h(1) + ... + h(n)`.
pub fn majorant_g(n: usize, delta: &DeltaSpec) -> Result<BigInt, DeltaError> {
    (1..=n).try_fold(BigInt::zero(), |acc, i| Ok(acc + majorant_h(i, delta)?))
}
