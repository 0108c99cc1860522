//! Exact integer arithmetic behind the gcd split of the copy count and the
//! local dimension.
//!
//! With `g = gcd(d, k)`, `d = g·d̃` and `k = g·k̃`, every shift index
//! `m ∈ [0, d)` is written `m = s·d̃ + t`, and the label the BXOR round
//! leaves on the last pair, `k·m mod d`, only depends on `t`:
//! `k·m mod d = g·((k̃·t) mod d̃)`. Because `gcd(k̃, d̃) = 1` that map is
//! injective in `t`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Largest accepted local dimension or copy count.
pub const MAX_PARAMETER: u64 = 1 << 16;

fn check_parameter(name: &str, value: u64) -> Result<()> {
    if value == 0 {
        return invalid(format!("{name} must be positive"));
    }
    if value > MAX_PARAMETER {
        return invalid(format!("{name} = {value} exceeds the maximum {MAX_PARAMETER}"));
    }
    Ok(())
}

/// Greatest common divisor of two positive integers.
pub fn gcd(a: u64, b: u64) -> Result<u64> {
    if a == 0 || b == 0 {
        return invalid(format!("gcd requires positive arguments, got ({a}, {b})"));
    }
    let (mut a, mut b) = (a, b);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    Ok(a)
}

/// The factorization `d = g·d̃`, `k = g·k̃` with `g = gcd(d, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GcdSplit {
    pub d: u64,
    pub k: u64,
    pub g: u64,
    pub d_tilde: u64,
    pub k_tilde: u64,
}

impl GcdSplit {
    /// Checks the defining relations; used after deserialization.
    pub fn validate(&self) -> Result<()> {
        let expected = split_gcd(self.d, self.k)?;
        if *self != expected {
            return invalid(format!("inconsistent gcd split {self:?}, expected {expected:?}"));
        }
        Ok(())
    }
}

pub fn split_gcd(d: u64, k: u64) -> Result<GcdSplit> {
    check_parameter("d", d)?;
    check_parameter("k", k)?;
    let g = gcd(d, k)?;
    Ok(GcdSplit {
        d,
        k,
        g,
        d_tilde: d / g,
        k_tilde: k / g,
    })
}

/// Writes `m = s·d̃ + t` and returns `(s, t)`.
pub fn decompose_m(m: u64, split: &GcdSplit) -> Result<(u64, u64)> {
    if m >= split.d {
        return invalid(format!("shift index {m} out of range for d = {}", split.d));
    }
    Ok((m / split.d_tilde, m % split.d_tilde))
}

/// `T(t) = g·((k̃·t) mod d̃)`, the flag label carried by branch group `t`.
pub fn t_permutation(split: &GcdSplit, t: u64) -> Result<u64> {
    if t >= split.d_tilde {
        return invalid(format!("group index {t} out of range for d̃ = {}", split.d_tilde));
    }
    Ok(split.g * ((split.k_tilde * t) % split.d_tilde))
}

/// Index isomorphism `[0, d) → [0, d/d̃) × [0, d̃)`, `j = a·d̃ + b`.
pub fn split_index(j: u64, d: u64, d_tilde: u64) -> Result<(u64, u64)> {
    if d_tilde == 0 || !d.is_multiple_of(d_tilde) {
        return invalid(format!("{d_tilde} does not divide {d}"));
    }
    if j >= d {
        return invalid(format!("index {j} out of range for dimension {d}"));
    }
    Ok((j / d_tilde, j % d_tilde))
}

/// Inverse of [`split_index`].
pub fn join_index(a: u64, b: u64, d_tilde: u64) -> u64 {
    a * d_tilde + b
}

/// Prime factorization by trial division; `1` maps to the empty map.
pub fn factorize(mut n: u64) -> BTreeMap<u64, u64> {
    let mut factors = BTreeMap::new();
    let mut p = 2;
    while p * p <= n {
        while n.is_multiple_of(p) {
            *factors.entry(p).or_insert(0) += 1;
            n /= p;
        }
        p += 1;
    }
    if n > 1 {
        *factors.entry(n).or_insert(0) += 1;
    }
    factors
}
