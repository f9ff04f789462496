//! Arbitrary-precision integers as plain JSON numbers.

use num_bigint::BigInt;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Transparent wrapper that (de)serializes as a JSON number of any size.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct JsonInt(pub BigInt);

impl Serialize for JsonInt {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let n: serde_json::Number = self
            .0
            .to_string()
            .parse()
            .map_err(serde::ser::Error::custom)?;
        n.serialize(s)
    }
}

impl<'de> Deserialize<'de> for JsonInt {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let n = serde_json::Number::deserialize(d)?;
        n.to_string()
            .parse::<BigInt>()
            .map(JsonInt)
            .map_err(|_| D::Error::custom(format!("not an integer: {n}")))
    }
}

pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
    JsonInt(v.clone()).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
    JsonInt::deserialize(d).map(|j| j.0)
}

pub mod option {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<BigInt>, s: S) -> Result<S::Ok, S::Error> {
        v.clone().map(JsonInt).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<BigInt>, D::Error> {
        Ok(Option::<JsonInt>::deserialize(d)?.map(|j| j.0))
    }
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().cloned().map(JsonInt))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
        Ok(Vec::<JsonInt>::deserialize(d)?
            .into_iter()
            .map(|j| j.0)
            .collect())
    }
}

pub mod nested {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Vec<BigInt>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(
            v.iter()
                .map(|row| row.iter().cloned().map(JsonInt).collect::<Vec<_>>()),
        )
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<BigInt>>, D::Error> {
        Ok(Vec::<Vec<JsonInt>>::deserialize(d)?
            .into_iter()
            .map(|row| row.into_iter().map(|j| j.0).collect())
            .collect())
    }
}

pub mod map {
    use super::*;
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(v: &BTreeMap<usize, BigInt>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(v.iter().map(|(k, x)| (k.to_string(), JsonInt(x.clone()))))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<usize, BigInt>, D::Error> {
        BTreeMap::<String, JsonInt>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| k.parse().map(|k| (k, v.0)).map_err(D::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Pow;

    #[test]
    fn huge_values_stay_numbers() {
        let big = BigInt::from(2).pow(1024u32);
        let text = serde_json::to_string(&JsonInt(big.clone())).unwrap();
        assert_eq!(text, big.to_string());
        let back: JsonInt = serde_json::from_str(&text).unwrap();
        assert_eq!(back.0, big);
        let neg: JsonInt = serde_json::from_str("-12").unwrap();
        assert_eq!(neg.0, BigInt::from(-12));
        assert!(serde_json::from_str::<JsonInt>("1.5").is_err());
    }
}
