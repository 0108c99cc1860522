//! Exact mixtures of tensor products of canonical states, and the separable
//! flag subspaces used to tag them.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::labels::{bxor_round, dual_label, script_b, shift_m, shift_n, LabelWord, MesLabel};

/// Exact branch probability.
pub type Probability = Ratio<u64>;

/// Serializes a [`Probability`] as `"p/q"`.
pub mod probability_str {
    use super::Probability;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &Probability, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", p.numer(), p.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Probability, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).map_err(de::Error::custom)
    }

    pub fn parse(text: &str) -> Result<Probability, String> {
        let (numer, denom) = match text.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (text.trim(), "1"),
        };
        let numer: u64 = numer.parse().map_err(|_| format!("bad numerator in {text:?}"))?;
        let denom: u64 = denom.parse().map_err(|_| format!("bad denominator in {text:?}"))?;
        if denom == 0 {
            return Err(format!("zero denominator in {text:?}"));
        }
        Ok(Probability::new(numer, denom))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Branch {
    #[serde(with = "probability_str")]
    pub probability: Probability,
    pub word: LabelWord,
}

/// `Σ_i p_i ⊗_slot P_{label}` with exact weights.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BranchEnsemble {
    branches: Vec<Branch>,
}

impl BranchEnsemble {
    pub fn new(branches: Vec<Branch>) -> Result<Self> {
        let Some(first) = branches.first() else {
            return Err(Error::MalformedEnsemble("no branches".into()));
        };
        let dims = first.word.dims();
        let mut total = Probability::from_integer(0);
        for b in &branches {
            if *b.probability.numer() == 0 {
                return Err(Error::MalformedEnsemble("zero-probability branch".into()));
            }
            if b.word.dims() != dims {
                return Err(Error::MalformedEnsemble(format!(
                    "branch {} has slot dimensions {:?}, expected {dims:?}",
                    b.word,
                    b.word.dims()
                )));
            }
            total += b.probability;
        }
        if total != Probability::from_integer(1) {
            return Err(Error::MalformedEnsemble(format!("probabilities sum to {total}")));
        }
        Ok(Self { branches })
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn slot_count(&self) -> usize {
        self.branches[0].word.len()
    }

    pub fn slot_dims(&self) -> Vec<u64> {
        self.branches[0].word.dims()
    }

    pub fn total_probability(&self) -> Probability {
        self.branches.iter().map(|b| b.probability).sum()
    }
}

/// `ρ_d^(k) = d^{-2} Σ_{m,n} P_mn^{⊗k}`, branches in row-major `(m, n)` order.
pub fn canonical_mixture(d: u64, k: u64) -> Result<BranchEnsemble> {
    crate::modmath::split_gcd(d, k)?;
    let p = Probability::new(1, d * d);
    let mut branches = Vec::with_capacity((d * d) as usize);
    for m in 0..d {
        for n in 0..d {
            branches.push(Branch {
                probability: p,
                word: LabelWord::uniform(MesLabel::new(d, m, n)?, k as usize)?,
            });
        }
    }
    BranchEnsemble::new(branches)
}

/// Label-level local operations that can be applied branchwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelOp {
    Identity,
    /// The full round `B(1,k)···B(k−1,k)`.
    ScriptB,
    BxorRound {
        sources: Vec<usize>,
        target: usize,
    },
    Dual {
        slots: Vec<usize>,
    },
    ShiftM {
        slot: usize,
        amount: u64,
    },
    ShiftN {
        slot: usize,
        amount: u64,
    },
}

impl LabelOp {
    pub fn apply(&self, word: &LabelWord) -> Result<LabelWord> {
        match self {
            LabelOp::Identity => Ok(word.clone()),
            LabelOp::ScriptB => script_b(word),
            LabelOp::BxorRound { sources, target } => bxor_round(word, sources, *target),
            LabelOp::Dual { slots } => {
                let mut out = word.clone();
                for &slot in slots {
                    out.map_slot(slot, |l| Ok(dual_label(l)))?;
                }
                Ok(out)
            }
            LabelOp::ShiftM { slot, amount } => {
                let mut out = word.clone();
                out.map_slot(*slot, |l| Ok(shift_m(l, *amount)))?;
                Ok(out)
            }
            LabelOp::ShiftN { slot, amount } => {
                let mut out = word.clone();
                out.map_slot(*slot, |l| Ok(shift_n(l, *amount)))?;
                Ok(out)
            }
        }
    }
}

pub fn apply_to_ensemble(ensemble: &BranchEnsemble, op: &LabelOp) -> Result<BranchEnsemble> {
    let branches = ensemble
        .branches
        .iter()
        .map(|b| {
            Ok(Branch {
                probability: b.probability,
                word: op.apply(&b.word)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    BranchEnsemble::new(branches)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagKind {
    /// `Σ_n P_mn`, parameter `m`; product-diagonal in the computational basis.
    SumOverN,
    /// `Σ_m P_mn`, parameter `n`; product-diagonal in the dual basis.
    SumOverM,
}

/// A separable projector family member, e.g. `Σ_n P_{2n}(6)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawFlag")]
pub struct FlagSubspace {
    pub d: u64,
    pub kind: FlagKind,
    pub value: u64,
}

#[derive(Deserialize)]
struct RawFlag {
    d: u64,
    kind: FlagKind,
    value: u64,
}

impl TryFrom<RawFlag> for FlagSubspace {
    type Error = Error;

    fn try_from(raw: RawFlag) -> Result<Self> {
        FlagSubspace::new(raw.d, raw.kind, raw.value)
    }
}

impl FlagSubspace {
    pub fn new(d: u64, kind: FlagKind, value: u64) -> Result<Self> {
        if d == 0 || value >= d {
            return invalid(format!("flag value {value} out of range for d = {d}"));
        }
        Ok(Self { d, kind, value })
    }

    /// Whether `φ_label` lies inside this flag.
    pub fn contains(&self, label: MesLabel) -> bool {
        label.d() == self.d
            && match self.kind {
                FlagKind::SumOverN => label.m() == self.value,
                FlagKind::SumOverM => label.n() == self.value,
            }
    }

    /// The flag containing `label` for a given kind.
    pub fn of_label(label: MesLabel, kind: FlagKind) -> Self {
        let value = match kind {
            FlagKind::SumOverN => label.m(),
            FlagKind::SumOverM => label.n(),
        };
        Self {
            d: label.d(),
            kind,
            value,
        }
    }

    /// Labels spanning the flag.
    pub fn members(&self) -> Vec<MesLabel> {
        (0..self.d)
            .map(|x| match self.kind {
                FlagKind::SumOverN => MesLabel::new(self.d, self.value, x),
                FlagKind::SumOverM => MesLabel::new(self.d, x, self.value),
            })
            .collect::<Result<_>>()
            .expect("flag members are in range")
    }

    pub fn protocol(&self) -> LocalDiscriminationProtocol {
        LocalDiscriminationProtocol { kind: self.kind }
    }
}

impl fmt::Display for FlagSubspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FlagKind::SumOverN => write!(f, "Σ_n P_{{{}n}}({})", self.value, self.d),
            FlagKind::SumOverM => write!(f, "Σ_m P_{{m{}}}({})", self.value, self.d),
        }
    }
}

/// One-way local measurement identifying the flag parameter.
///
/// For [`FlagKind::SumOverN`] both parties measure in the computational
/// basis; for [`FlagKind::SumOverM`] both measure in the dual basis. With
/// outcomes `j_A`, `j_B` the parameter is `(j_B − j_A) mod d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalDiscriminationProtocol {
    pub kind: FlagKind,
}

impl LocalDiscriminationProtocol {
    pub fn describe(&self) -> &'static str {
        match self.kind {
            FlagKind::SumOverN => "Alice and Bob measure in the computational basis; flag m = (j_B - j_A) mod d",
            FlagKind::SumOverM => "Alice and Bob measure in the dual (Fourier) basis; flag n = (j_B - j_A) mod d",
        }
    }

    pub fn infer(&self, j_a: u64, j_b: u64, d: u64) -> u64 {
        (j_b + d - j_a % d) % d
    }
}

/// Branches sharing one flag outcome after a tag readout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlagGroup {
    pub flag: FlagSubspace,
    pub probability: Probability,
    /// Renormalized state of the remaining slots; the tag slot is consumed.
    pub conditional: BranchEnsemble,
}

/// Partitions branches by the flag parameter of `slot`.
///
/// Within a group the tag factor must be the whole flag projector and
/// independent of the other slots: for every remaining word, the free index
/// at `slot` must run over `[0, d)` exactly once with equal weight.
pub fn group_by_flag(ensemble: &BranchEnsemble, slot: usize, kind: FlagKind) -> Result<Vec<FlagGroup>> {
    if slot >= ensemble.slot_count() {
        return invalid(format!("slot {slot} out of range"));
    }
    if ensemble.slot_count() < 2 {
        return Err(Error::MalformedEnsemble(
            "consuming the only slot leaves nothing to condition on".into(),
        ));
    }
    let d = ensemble.slot_dims()[slot];

    // flag value -> rest word -> (free index -> probability)
    let mut groups: BTreeMap<u64, BTreeMap<LabelWord, BTreeMap<u64, Probability>>> = BTreeMap::new();
    for branch in &ensemble.branches {
        let label = branch.word.pairs()[slot];
        let flag = FlagSubspace::of_label(label, kind);
        let free = match kind {
            FlagKind::SumOverN => label.n(),
            FlagKind::SumOverM => label.m(),
        };
        let mut rest = branch.word.pairs().to_vec();
        rest.remove(slot);
        let rest = LabelWord::new(rest)?;
        *groups
            .entry(flag.value)
            .or_default()
            .entry(rest)
            .or_default()
            .entry(free)
            .or_insert(Probability::from_integer(0)) += branch.probability;
    }

    let mut out = Vec::with_capacity(groups.len());
    for (value, rests) in groups {
        let mut group_probability = Probability::from_integer(0);
        let mut conditional = Vec::with_capacity(rests.len());
        for (rest, free) in rests {
            let weights: Vec<Probability> = free.values().copied().collect();
            if free.len() as u64 != d || weights.iter().any(|w| *w != weights[0]) {
                return Err(Error::MalformedEnsemble(format!(
                    "flag {value} at slot {slot}: word {rest} does not carry the full flag uniformly"
                )));
            }
            let weight: Probability = weights.iter().sum();
            group_probability += weight;
            conditional.push(Branch {
                probability: weight,
                word: rest,
            });
        }
        for b in &mut conditional {
            b.probability /= group_probability;
        }
        out.push(FlagGroup {
            flag: FlagSubspace { d, kind, value },
            probability: group_probability,
            conditional: BranchEnsemble::new(conditional)?,
        });
    }
    Ok(out)
}
