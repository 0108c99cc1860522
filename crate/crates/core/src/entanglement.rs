//! Exact logarithms of positive integers, `log Π p^{a_p}`, kept as
//! prime-exponent maps so that table entries compare symbolically.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::modmath::factorize;

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ExactEntanglement {
    prime_exponents: BTreeMap<u64, u64>,
}

impl ExactEntanglement {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `log n` for `n ≥ 1`.
    pub fn log_of(n: u64) -> Self {
        assert!(n > 0, "log of zero");
        Self {
            prime_exponents: factorize(n),
        }
    }

    /// Builds from `prime → exponent`, dropping zero exponents. Keys must be prime.
    pub fn from_prime_exponents(exponents: impl IntoIterator<Item = (u64, u64)>) -> Self {
        let mut map = BTreeMap::new();
        for (p, a) in exponents {
            if a > 0 {
                *map.entry(p).or_insert(0) += a;
            }
        }
        Self { prime_exponents: map }
    }

    pub fn prime_exponents(&self) -> &BTreeMap<u64, u64> {
        &self.prime_exponents
    }

    pub fn is_zero(&self) -> bool {
        self.prime_exponents.is_empty()
    }

    /// Value in bits (base-2 logarithm).
    pub fn bits(&self) -> f64 {
        self.prime_exponents
            .iter()
            .fold(0.0, |acc, (&p, &a)| acc + a as f64 * (p as f64).log2())
    }

    pub fn times(&self, factor: u64) -> Self {
        Self::from_prime_exponents(self.prime_exponents.iter().map(|(&p, &a)| (p, a * factor)))
    }

    /// `self − other`, or `None` if some exponent would go negative.
    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        let mut map = self.prime_exponents.clone();
        for (&p, &a) in &other.prime_exponents {
            let entry = map.get_mut(&p)?;
            *entry = entry.checked_sub(a)?;
        }
        Some(Self::from_prime_exponents(map))
    }

    /// Renders in the local dimension's own base where that is exact:
    /// `16 → "2 log 4"` for `d = 4`, otherwise prime by prime.
    pub fn render_in_base(&self, d: u64) -> String {
        let base = factorize(d);
        if base.len() == 1 && self.prime_exponents.len() == 1 {
            let (&p, &a) = base.iter().next().unwrap();
            if a > 1 {
                if let Some(&e) = self.prime_exponents.get(&p) {
                    if e % a == 0 {
                        return term(e / a, d);
                    }
                }
            }
        }
        self.to_string()
    }
}

fn term(coefficient: u64, base: u64) -> String {
    if coefficient == 1 {
        format!("log {base}")
    } else {
        format!("{coefficient} log {base}")
    }
}

impl fmt::Display for ExactEntanglement {
    /// Largest prime first, e.g. `3 log 3 + 2 log 2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let terms: Vec<String> = self.prime_exponents.iter().rev().map(|(&p, &a)| term(a, p)).collect();
        f.write_str(&terms.join(" + "))
    }
}

impl Add for &ExactEntanglement {
    type Output = ExactEntanglement;

    fn add(self, rhs: Self) -> ExactEntanglement {
        ExactEntanglement::from_prime_exponents(
            self.prime_exponents
                .iter()
                .chain(rhs.prime_exponents.iter())
                .map(|(&p, &a)| (p, a)),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct Wire {
    prime_exponents: BTreeMap<u64, u64>,
    #[serde(default)]
    bits: Option<f64>,
}

impl Serialize for ExactEntanglement {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        Wire {
            prime_exponents: self.prime_exponents.clone(),
            bits: Some(self.bits()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExactEntanglement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let wire = Wire::deserialize(d)?;
        for &p in wire.prime_exponents.keys() {
            if factorize(p).len() != 1 || factorize(p).get(&p) != Some(&1) {
                return Err(serde::de::Error::custom(format!("{p} is not prime")));
            }
        }
        let value = Self::from_prime_exponents(wire.prime_exponents);
        if let Some(bits) = wire.bits {
            if (bits - value.bits()).abs() > 1e-9 * value.bits().max(1.0) {
                return Err(serde::de::Error::custom(format!(
                    "bits {bits} inconsistent with exponents ({})",
                    value.bits()
                )));
            }
        }
        Ok(value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendering() {
        assert_eq!(ExactEntanglement::zero().to_string(), "0");
        assert_eq!(ExactEntanglement::log_of(2).to_string(), "log 2");
        assert_eq!(ExactEntanglement::log_of(16).render_in_base(4), "2 log 4");
        assert_eq!(ExactEntanglement::log_of(2).render_in_base(4), "log 2");
        assert_eq!(ExactEntanglement::log_of(27 * 4).to_string(), "3 log 3 + 2 log 2");
        assert_eq!(ExactEntanglement::log_of(27 * 4).render_in_base(6), "3 log 3 + 2 log 2");
        assert_eq!(ExactEntanglement::log_of(125).render_in_base(5), "3 log 5");
    }

    #[test]
    fn arithmetic() {
        let a = ExactEntanglement::log_of(6);
        let b = ExactEntanglement::log_of(2);
        assert_eq!(&a + &b, ExactEntanglement::log_of(12));
        assert_eq!(a.checked_sub(&b), Some(ExactEntanglement::log_of(3)));
        assert_eq!(b.checked_sub(&a), None);
        assert_eq!(a.times(3), ExactEntanglement::log_of(216));
        assert!((ExactEntanglement::log_of(8).bits() - 3.0).abs() < 1e-15);
        assert!(ExactEntanglement::log_of(1).is_zero());
        assert!(ExactEntanglement::zero().bits().is_sign_positive());
    }

    #[test]
    fn json_shape() {
        let e = ExactEntanglement::log_of(12);
        let json = serde_json::to_value(&e).unwrap();
        assert_eq!(json["prime_exponents"]["2"], 2);
        assert_eq!(json["prime_exponents"]["3"], 1);
        let back: ExactEntanglement = serde_json::from_value(json).unwrap();
        assert_eq!(back, e);
        assert!(serde_json::from_str::<ExactEntanglement>(r#"{"prime_exponents":{"4":1}}"#).is_err());
        assert!(serde_json::from_str::<ExactEntanglement>(r#"{"prime_exponents":{"2":1},"bits":3}"#).is_err());
    }
}
