//! Symbolic algebra on canonical maximally entangled state labels.
//!
//! `φ_mn(d) = d^{-1/2} Σ_j ω^{jn} |j⟩_A |j ⊕ m⟩_B` with `ω = e^{2πi/d}`.
//! Global phases are dropped: a label names the projector `P_mn`, and every
//! rule here is checked against the numeric oracle by fidelity.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Identity `(m, n)` of `φ_mn` in local dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawLabel")]
pub struct MesLabel {
    d: u64,
    m: u64,
    n: u64,
}

#[derive(Deserialize)]
struct RawLabel {
    d: u64,
    m: u64,
    n: u64,
}

impl TryFrom<RawLabel> for MesLabel {
    type Error = crate::Error;

    fn try_from(raw: RawLabel) -> Result<Self> {
        MesLabel::new(raw.d, raw.m, raw.n)
    }
}

impl MesLabel {
    pub fn new(d: u64, m: u64, n: u64) -> Result<Self> {
        if d == 0 {
            return invalid("label dimension must be positive");
        }
        if m >= d || n >= d {
            return invalid(format!("label ({m},{n}) out of range for d = {d}"));
        }
        Ok(Self { d, m, n })
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn n(&self) -> u64 {
        self.n
    }
}

impl fmt::Display for MesLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.d > 10 {
            write!(f, "φ_{{{},{}}}", self.m, self.n)
        } else {
            write!(f, "φ_{{{}{}}}", self.m, self.n)
        }
    }
}

/// Tensor product of labels, one per pair. Slot `i` is pair `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<MesLabel>", into = "Vec<MesLabel>")]
pub struct LabelWord(Vec<MesLabel>);

impl TryFrom<Vec<MesLabel>> for LabelWord {
    type Error = crate::Error;

    fn try_from(pairs: Vec<MesLabel>) -> Result<Self> {
        LabelWord::new(pairs)
    }
}

impl From<LabelWord> for Vec<MesLabel> {
    fn from(word: LabelWord) -> Self {
        word.0
    }
}

impl LabelWord {
    pub fn new(pairs: Vec<MesLabel>) -> Result<Self> {
        if pairs.is_empty() {
            return invalid("a label word needs at least one pair");
        }
        Ok(Self(pairs))
    }

    /// `label^{⊗copies}`.
    pub fn uniform(label: MesLabel, copies: usize) -> Result<Self> {
        Self::new(vec![label; copies])
    }

    pub fn pairs(&self) -> &[MesLabel] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dims(&self) -> Vec<u64> {
        self.0.iter().map(MesLabel::d).collect()
    }

    pub fn into_pairs(self) -> Vec<MesLabel> {
        self.0
    }

    fn slot(&self, slot: usize) -> Result<MesLabel> {
        self.0.get(slot).copied().ok_or_else(|| {
            crate::Error::InvalidArgument(format!("slot {slot} out of range for word of length {}", self.len()))
        })
    }

    /// Applies `B(source, target)` in place on slot indices.
    pub fn bxor(&mut self, source: usize, target: usize) -> Result<()> {
        if source == target {
            return invalid("BXOR source and target must differ");
        }
        let (s, t) = bxor_labels(self.slot(source)?, self.slot(target)?)?;
        self.0[source] = s;
        self.0[target] = t;
        Ok(())
    }

    pub fn map_slot(&mut self, slot: usize, f: impl FnOnce(MesLabel) -> Result<MesLabel>) -> Result<()> {
        let updated = f(self.slot(slot)?)?;
        self.0[slot] = updated;
        Ok(())
    }
}

impl fmt::Display for LabelWord {
    /// Runs of equal labels are collapsed into `φ^⊗r`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut i = 0;
        while i < self.0.len() {
            let mut run = 1;
            while i + run < self.0.len() && self.0[i + run] == self.0[i] {
                run += 1;
            }
            if !first {
                f.write_str("⊗")?;
            }
            first = false;
            write!(f, "{}", self.0[i])?;
            if run > 1 {
                write!(f, "^⊗{run}")?;
            }
            i += run;
        }
        Ok(())
    }
}

/// Action of one BXOR on `φ_{m1 n1} ⊗ φ_{m2 n2}` (source, target):
/// `(m1, n1 − n2) ⊗ (m1 + m2, n2)`, all mod `d`. Exact, no phase appears.
pub fn bxor_labels(source: MesLabel, target: MesLabel) -> Result<(MesLabel, MesLabel)> {
    if source.d != target.d {
        return invalid(format!(
            "BXOR needs equal dimensions, got {} and {}",
            source.d, target.d
        ));
    }
    let d = source.d;
    Ok((
        MesLabel {
            d,
            m: source.m,
            n: (source.n + d - target.n) % d,
        },
        MesLabel {
            d,
            m: (source.m + target.m) % d,
            n: target.n,
        },
    ))
}

/// BXOR round with every listed source onto one target, applied in order.
pub fn bxor_round(word: &LabelWord, sources: &[usize], target: usize) -> Result<LabelWord> {
    let mut out = word.clone();
    for &source in sources {
        out.bxor(source, target)?;
    }
    Ok(out)
}

/// `B(1,k)···B(k−1,k)`: every pair controls the last one.
pub fn script_b(word: &LabelWord) -> Result<LabelWord> {
    let d = word.0[0].d;
    if word.0.iter().any(|l| l.d != d) {
        return invalid("the BXOR round needs a word of uniform dimension");
    }
    let last = word.len() - 1;
    let sources: Vec<usize> = (0..last).collect();
    bxor_round(word, &sources, last)
}

/// Relabeling under the local Fourier change to the dual basis on both
/// sides: `(m, n) ↦ (n, −m)`.
pub fn dual_label(label: MesLabel) -> MesLabel {
    let d = label.d;
    MesLabel {
        d,
        m: label.n,
        n: (d - label.m) % d,
    }
}

/// Bob-side basis permutation `j ↦ j ⊕ a`.
pub fn shift_m(label: MesLabel, a: u64) -> MesLabel {
    let d = label.d;
    MesLabel {
        d,
        m: (label.m + a % d) % d,
        n: label.n,
    }
}

/// Alice-side diagonal phase `j ↦ ω^{jb}`.
pub fn shift_n(label: MesLabel, b: u64) -> MesLabel {
    let d = label.d;
    MesLabel {
        d,
        m: label.m,
        n: (label.n + b % d) % d,
    }
}

/// `φ_{s·d̃, 0}(d) = φ_{s0}(g) ⊗ φ_{00}(d̃)` under `j = a·d̃ + b`.
///
/// Returns `(coarse, fine)` factors of dimensions `d/d̃` and `d̃`.
pub fn factor_label(label: MesLabel, d_tilde: u64) -> Result<(MesLabel, MesLabel)> {
    if d_tilde == 0 || !label.d.is_multiple_of(d_tilde) {
        return invalid(format!("{d_tilde} does not divide dimension {}", label.d));
    }
    if !label.m.is_multiple_of(d_tilde) || label.n != 0 {
        return invalid(format!(
            "label ({},{}) does not factor over d̃ = {d_tilde}",
            label.m, label.n
        ));
    }
    let g = label.d / d_tilde;
    Ok((
        MesLabel {
            d: g,
            m: label.m / d_tilde,
            n: 0,
        },
        MesLabel { d: d_tilde, m: 0, n: 0 },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn l(d: u64, m: u64, n: u64) -> MesLabel {
        MesLabel::new(d, m, n).unwrap()
    }

    #[test]
    fn label_range_checked() {
        assert!(MesLabel::new(3, 3, 0).is_err());
        assert!(MesLabel::new(3, 0, 3).is_err());
        assert!(MesLabel::new(0, 0, 0).is_err());
        assert!(serde_json::from_str::<MesLabel>(r#"{"d":2,"m":2,"n":0}"#).is_err());
        assert!(LabelWord::new(vec![]).is_err());
    }

    #[test]
    fn bxor_examples() {
        assert_eq!(bxor_labels(l(3, 0, 0), l(3, 0, 0)), Ok((l(3, 0, 0), l(3, 0, 0))));
        for d in 1..7 {
            for m in 0..d {
                for n in 0..d {
                    assert_eq!(
                        bxor_labels(l(d, m, n), l(d, m, n)),
                        Ok((l(d, m, 0), l(d, 2 * m % d, n)))
                    );
                }
            }
        }
        assert_eq!(bxor_labels(l(3, 1, 2), l(3, 2, 1)), Ok((l(3, 1, 1), l(3, 0, 1))));
        assert!(bxor_labels(l(3, 1, 2), l(2, 1, 1)).is_err());
    }

    #[test]
    fn bxor_is_bijective() {
        for d in 1..=8 {
            let mut seen = HashSet::new();
            for m1 in 0..d {
                for n1 in 0..d {
                    for m2 in 0..d {
                        for n2 in 0..d {
                            assert!(seen.insert(bxor_labels(l(d, m1, n1), l(d, m2, n2)).unwrap()));
                        }
                    }
                }
            }
            assert_eq!(seen.len() as u64, d.pow(4));
        }
    }

    #[test]
    fn script_b_examples() {
        let w = |d, m, k| LabelWord::uniform(l(d, m, 1 % d), k).unwrap();
        let out = script_b(&w(3, 1, 2)).unwrap();
        assert_eq!(out.pairs(), &[l(3, 1, 0), l(3, 2, 1)]);
        let out = script_b(&w(2, 1, 4)).unwrap();
        assert_eq!(out.pairs(), &[l(2, 1, 0), l(2, 1, 0), l(2, 1, 0), l(2, 0, 1)]);
        let out = script_b(&w(5, 2, 3)).unwrap();
        assert_eq!(out.pairs(), &[l(5, 2, 0), l(5, 2, 0), l(5, 1, 1)]);
        let single = w(4, 3, 1);
        assert_eq!(script_b(&single).unwrap(), single);
        let mixed = LabelWord::new(vec![l(2, 0, 0), l(3, 0, 0)]).unwrap();
        assert!(script_b(&mixed).is_err());
    }

    #[test]
    fn script_b_uniform_words() {
        for d in 1..=8 {
            for k in 1..=6usize {
                for m in 0..d {
                    for n in 0..d {
                        let out = script_b(&LabelWord::uniform(l(d, m, n), k).unwrap()).unwrap();
                        let mut expected = vec![l(d, m, 0); k - 1];
                        expected.push(l(d, (k as u64 * m) % d, n));
                        assert_eq!(out.pairs(), expected.as_slice());
                    }
                }
            }
        }
    }

    #[test]
    fn dual_examples() {
        assert_eq!(dual_label(l(3, 0, 0)), l(3, 0, 0));
        assert_eq!(dual_label(l(3, 2, 0)), l(3, 0, 1));
        for g in 1..10 {
            let image: HashSet<_> = (0..g).map(|s| dual_label(l(g, s, 0))).collect();
            let target: HashSet<_> = (0..g).map(|s| l(g, 0, s)).collect();
            assert_eq!(image, target);
        }
    }

    #[test]
    fn shift_examples() {
        for d in 1..8 {
            for t in 0..d {
                assert_eq!(shift_m(l(d, t, 0), d - t), l(d, 0, 0));
            }
        }
        assert_eq!(shift_m(l(3, 0, 0), 0), l(3, 0, 0));
        assert_eq!(shift_n(l(2, 1, 1), 1), l(2, 1, 0));
    }

    #[test]
    fn factor_examples() {
        assert_eq!(factor_label(l(6, 3, 0), 3), Ok((l(2, 1, 0), l(3, 0, 0))));
        assert_eq!(factor_label(l(6, 0, 0), 3), Ok((l(2, 0, 0), l(3, 0, 0))));
        assert_eq!(factor_label(l(6, 2, 0), 1), Ok((l(6, 2, 0), l(1, 0, 0))));
        assert!(factor_label(l(6, 2, 0), 3).is_err());
        assert!(factor_label(l(6, 3, 1), 3).is_err());
        assert!(factor_label(l(6, 3, 0), 4).is_err());
    }

    #[test]
    fn word_display() {
        let w = LabelWord::new(vec![l(2, 1, 0), l(2, 1, 0), l(2, 0, 1)]).unwrap();
        assert_eq!(w.to_string(), "φ_{10}^⊗2⊗φ_{01}");
        assert_eq!(l(12, 11, 3).to_string(), "φ_{11,3}");
    }

    fn label_strategy() -> impl Strategy<Value = MesLabel> {
        (1u64..12)
            .prop_flat_map(|d| (Just(d), 0..d, 0..d))
            .prop_map(|(d, m, n)| l(d, m, n))
    }

    proptest! {
        #[test]
        fn dual_has_order_four(label in label_strategy()) {
            let d = label.d();
            let twice = dual_label(dual_label(label));
            prop_assert_eq!(twice, l(d, (d - label.m()) % d, (d - label.n()) % d));
            prop_assert_eq!(dual_label(dual_label(twice)), label);
        }

        #[test]
        fn shifts_compose_and_reach_everything(label in label_strategy(), a in 0u64..100, b in 0u64..100) {
            let d = label.d();
            prop_assert_eq!(shift_m(shift_m(label, a % d), b % d), shift_m(label, (a + b) % d));
            prop_assert_eq!(shift_n(shift_n(label, a % d), b % d), shift_n(label, (a + b) % d));
            let origin = l(d, 0, 0);
            prop_assert_eq!(shift_n(shift_m(origin, label.m()), label.n()), label);
        }
    }
}
