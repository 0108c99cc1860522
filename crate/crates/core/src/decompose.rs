//! Quasi-pure decomposition certificates for `ρ_d^(k)`.
//!
//! Phase A applies the BXOR round `B(1,k)···B(k−1,k)`, which maps every
//! branch `φ_mn^{⊗k}` to `φ_{m0}^{⊗(k−1)} ⊗ φ_{km mod d, n}`, and reads the
//! last pair out with the computational-basis flag `Σ_n P_{T(t),n}`. This
//! splits the branches into `d̃` groups `t` of probability `1/d̃`.
//!
//! When `g = gcd(d, k) > 1` each group is still the mixture
//! `g^{-1} Σ_s P_{s·d̃+t, 0}^{⊗(k−1)}`. Phase B shifts `t` away on Bob's
//! side, splits every pair as `(g) ⊗ (d̃)` with `j = a·d̃ + b`, which leaves
//! `φ_00(d̃)` on every fine factor, changes the coarse factors to the dual
//! basis (`φ_{s0} → φ_{0,−s}`) and runs one more BXOR round on them. The
//! result is `φ_00(g)^{⊗(k−2)}` times the separable `Σ_s P_{0s}(g)`, and the
//! pure part no longer depends on `s`, so no second readout is needed.
//!
//! Every leaf then carries the same pure part and
//! `E(ρ_d^(k)) = log(d^{k−1} / gcd(d, k))`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ensemble::{probability_str, FlagKind, FlagSubspace, Probability};
use crate::entanglement::ExactEntanglement;
use crate::error::{invalid, Error, Result};
use crate::labels::{bxor_labels, dual_label, factor_label, shift_m, MesLabel};
use crate::modmath::{decompose_m, factorize, split_gcd, t_permutation, GcdSplit};

/// Which factor of an original pair a slot refers to after dimension splits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    Whole,
    /// The `g`-dimensional factor, index `a` of `j = a·d̃ + b`.
    Coarse,
    /// The `d̃`-dimensional factor, index `b`.
    Fine,
}

/// A pair (1-based, in original copy order) or one of its factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SlotRef {
    pub pair: usize,
    pub factor: Factor,
}

impl SlotRef {
    pub fn whole(pair: usize) -> Self {
        Self {
            pair,
            factor: Factor::Whole,
        }
    }

    pub fn coarse(pair: usize) -> Self {
        Self {
            pair,
            factor: Factor::Coarse,
        }
    }

    pub fn fine(pair: usize) -> Self {
        Self {
            pair,
            factor: Factor::Fine,
        }
    }
}

impl fmt::Display for SlotRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.factor {
            Factor::Whole => write!(f, "{}", self.pair),
            Factor::Coarse => write!(f, "{}g", self.pair),
            Factor::Fine => write!(f, "{}d~", self.pair),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    All,
    /// Only the branches whose readout selected group `t`.
    Group(u64),
}

impl Scope {
    fn applies_to(&self, group: Option<u64>) -> Result<bool> {
        match (self, group) {
            (Scope::All, _) => Ok(true),
            (Scope::Group(t), Some(g)) => Ok(*t == g),
            (Scope::Group(_), None) => invalid("group-scoped step before the flag readout"),
        }
    }
}

/// One local operation of the certificate, in execution order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperationStep {
    /// `B(source, target)` for each source in order.
    BxorRound {
        sources: Vec<SlotRef>,
        target: SlotRef,
        scope: Scope,
    },
    /// Fourier basis change on both sides of each slot.
    DualBasis { slots: Vec<SlotRef>, scope: Scope },
    /// Bob-side permutation `j ↦ j ⊕ amount`.
    LocalShiftM { slot: SlotRef, amount: u64, scope: Scope },
    /// Relabels a whole pair as its coarse and fine factors.
    DimensionSplit { slot: SlotRef, d_tilde: u64, scope: Scope },
    /// Local readout of the flag; consumes the slot. The only branching step.
    FlagMeasurement {
        slot: SlotRef,
        flag_kind: FlagKind,
        scope: Scope,
    },
}

impl OperationStep {
    pub fn scope(&self) -> Scope {
        match self {
            OperationStep::BxorRound { scope, .. }
            | OperationStep::DualBasis { scope, .. }
            | OperationStep::LocalShiftM { scope, .. }
            | OperationStep::DimensionSplit { scope, .. }
            | OperationStep::FlagMeasurement { scope, .. } => *scope,
        }
    }
}

/// The readout flag of a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tag {
    pub slot: SlotRef,
    #[serde(flatten)]
    pub flag: FlagSubspace,
}

/// `copies` identical pure states `φ_{m n}(dim)` on the listed slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PureFactor {
    pub dim: u64,
    pub copies: u64,
    pub m: u64,
    pub n: u64,
    pub slots: Vec<SlotRef>,
}

impl PureFactor {
    pub fn label(&self) -> Result<MesLabel> {
        MesLabel::new(self.dim, self.m, self.n)
    }
}

/// A slot whose residual state is the uniform mixture of the listed flag
/// projectors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparableFactor {
    pub slot: SlotRef,
    pub flags: Vec<FlagSubspace>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leaf {
    /// Group index `t` of `m = s·d̃ + t`.
    pub t: u64,
    pub tag: Option<Tag>,
    #[serde(with = "probability_str")]
    pub probability: Probability,
    pub pure_part: Vec<PureFactor>,
    pub separable_part: Vec<SeparableFactor>,
}

impl Leaf {
    pub fn pure_entanglement(&self) -> ExactEntanglement {
        self.pure_part.iter().fold(ExactEntanglement::zero(), |acc, p| {
            &acc + &ExactEntanglement::log_of(p.dim).times(p.copies)
        })
    }

    /// Checks a replayed branch's final labels against this leaf.
    pub fn accepts(&self, slots: &[(SlotRef, MesLabel)]) -> std::result::Result<(), String> {
        let mut covered = BTreeSet::new();
        for factor in &self.pure_part {
            let label = factor.label().map_err(|e| e.to_string())?;
            for slot in &factor.slots {
                let found = slots
                    .iter()
                    .find(|(s, _)| s == slot)
                    .ok_or_else(|| format!("pure slot {slot} missing"))?;
                if found.1 != label {
                    return Err(format!("slot {slot} holds {}, leaf expects {label}", found.1));
                }
                covered.insert(*slot);
            }
        }
        for factor in &self.separable_part {
            let found = slots
                .iter()
                .find(|(s, _)| *s == factor.slot)
                .ok_or_else(|| format!("separable slot {} missing", factor.slot))?;
            if !factor.flags.iter().any(|f| f.contains(found.1)) {
                return Err(format!(
                    "slot {} holds {}, outside the leaf's flags",
                    factor.slot, found.1
                ));
            }
            covered.insert(factor.slot);
        }
        for (slot, label) in slots {
            if !covered.contains(slot) && label.d() > 1 {
                return Err(format!("slot {slot} ({label}) not accounted for by the leaf"));
            }
        }
        Ok(())
    }
}

/// Certificate that `ρ_d^(k)` is LOCC-reversibly equivalent to
/// `Σ_leaf p · (tag ⊗ separable residue) ⊗ pure part`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionTree {
    #[serde(flatten)]
    pub split: GcdSplit,
    pub steps: Vec<OperationStep>,
    pub leaves: Vec<Leaf>,
    pub entanglement: ExactEntanglement,
}

impl DecompositionTree {
    pub fn d(&self) -> u64 {
        self.split.d
    }

    pub fn k(&self) -> u64 {
        self.split.k
    }

    /// Structural checks for trees read back from JSON.
    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        let total: Probability = self.leaves.iter().map(|l| l.probability).sum();
        if total != Probability::from_integer(1) {
            return Err(Error::MalformedEnsemble(format!("leaf probabilities sum to {total}")));
        }
        let mut tags = BTreeSet::new();
        for leaf in &self.leaves {
            if let Some(tag) = leaf.tag {
                if !tags.insert((tag.slot, tag.flag)) {
                    return invalid(format!("two leaves share the tag {}", tag.flag));
                }
            }
            for p in &leaf.pure_part {
                p.label()?;
                if p.copies != p.slots.len() as u64 {
                    return invalid(format!(
                        "pure factor lists {} slots for {} copies",
                        p.slots.len(),
                        p.copies
                    ));
                }
            }
        }
        if self.leaves.len() > 1 && tags.len() != self.leaves.len() {
            return invalid("several leaves but not all of them are tagged");
        }
        if entanglement_of_tree(self)? != self.entanglement {
            return invalid("recorded entanglement disagrees with the leaves");
        }
        Ok(())
    }

    pub fn leaf_for_group(&self, t: u64) -> Option<&Leaf> {
        self.leaves.iter().find(|l| l.t == t)
    }
}

/// Builds the certificate for `ρ_d^(k)`. Groups are emitted in increasing `t`.
pub fn decompose(d: u64, k: u64) -> Result<DecompositionTree> {
    let split = split_gcd(d, k)?;
    let copies = k as usize;
    let GcdSplit { g, d_tilde, .. } = split;
    let mut steps = Vec::new();
    let mut leaves = Vec::new();

    if k == 1 {
        leaves.push(Leaf {
            t: 0,
            tag: None,
            probability: Probability::from_integer(1),
            pure_part: Vec::new(),
            separable_part: vec![SeparableFactor {
                slot: SlotRef::whole(1),
                flags: (0..d)
                    .map(|m| FlagSubspace::new(d, FlagKind::SumOverN, m))
                    .collect::<Result<_>>()?,
            }],
        });
    } else {
        let rest: Vec<usize> = (1..copies).collect();
        steps.push(OperationStep::BxorRound {
            sources: rest.iter().map(|&i| SlotRef::whole(i)).collect(),
            target: SlotRef::whole(copies),
            scope: Scope::All,
        });
        steps.push(OperationStep::FlagMeasurement {
            slot: SlotRef::whole(copies),
            flag_kind: FlagKind::SumOverN,
            scope: Scope::All,
        });
        if g > 1 {
            for t in 1..d_tilde {
                for &i in &rest {
                    steps.push(OperationStep::LocalShiftM {
                        slot: SlotRef::whole(i),
                        amount: d - t,
                        scope: Scope::Group(t),
                    });
                }
            }
            for &i in &rest {
                steps.push(OperationStep::DimensionSplit {
                    slot: SlotRef::whole(i),
                    d_tilde,
                    scope: Scope::All,
                });
            }
            steps.push(OperationStep::DualBasis {
                slots: rest.iter().map(|&i| SlotRef::coarse(i)).collect(),
                scope: Scope::All,
            });
            if copies >= 3 {
                steps.push(OperationStep::BxorRound {
                    sources: (1..copies - 1).map(SlotRef::coarse).collect(),
                    target: SlotRef::coarse(copies - 1),
                    scope: Scope::All,
                });
            }
        }

        for t in 0..d_tilde {
            let tag = Tag {
                slot: SlotRef::whole(copies),
                flag: FlagSubspace::new(d, FlagKind::SumOverN, t_permutation(&split, t)?)?,
            };
            let mut pure_part = Vec::new();
            let mut separable_part = Vec::new();
            if g == 1 {
                if d > 1 {
                    pure_part.push(PureFactor {
                        dim: d,
                        copies: k - 1,
                        m: t,
                        n: 0,
                        slots: rest.iter().map(|&i| SlotRef::whole(i)).collect(),
                    });
                }
            } else {
                if d_tilde > 1 {
                    pure_part.push(PureFactor {
                        dim: d_tilde,
                        copies: k - 1,
                        m: 0,
                        n: 0,
                        slots: rest.iter().map(|&i| SlotRef::fine(i)).collect(),
                    });
                }
                if copies >= 3 {
                    pure_part.push(PureFactor {
                        dim: g,
                        copies: k - 2,
                        m: 0,
                        n: 0,
                        slots: (1..copies - 1).map(SlotRef::coarse).collect(),
                    });
                }
                separable_part.push(SeparableFactor {
                    slot: SlotRef::coarse(copies - 1),
                    flags: vec![FlagSubspace::new(g, FlagKind::SumOverN, 0)?],
                });
            }
            leaves.push(Leaf {
                t,
                tag: Some(tag),
                probability: Probability::new(1, d_tilde),
                pure_part,
                separable_part,
            });
        }
    }

    let mut tree = DecompositionTree {
        split,
        steps,
        leaves,
        entanglement: ExactEntanglement::zero(),
    };
    tree.entanglement = entanglement_of_tree(&tree)?;
    Ok(tree)
}

/// Closed form `log(d^{k−1} / gcd(d, k))`.
pub fn entanglement(d: u64, k: u64) -> Result<ExactEntanglement> {
    let split = split_gcd(d, k)?;
    ExactEntanglement::log_of(d)
        .times(k - 1)
        .checked_sub(&ExactEntanglement::log_of(split.g))
        .ok_or_else(|| Error::InvalidArgument(format!("gcd exceeds d^(k-1) for ({d},{k})")))
}

/// Leaf-weighted pure-part entanglement, computed with exact rational
/// exponents.
pub fn entanglement_of_tree(tree: &DecompositionTree) -> Result<ExactEntanglement> {
    let mut exponents: std::collections::BTreeMap<u64, Probability> = Default::default();
    for leaf in &tree.leaves {
        for factor in &leaf.pure_part {
            for (p, a) in factorize(factor.dim) {
                *exponents.entry(p).or_insert(Probability::from_integer(0)) +=
                    leaf.probability * Probability::from_integer(a * factor.copies);
            }
        }
    }
    let mut integral = Vec::with_capacity(exponents.len());
    for (p, a) in exponents {
        if !a.is_integer() {
            return Err(Error::NonIntegralEntanglement(format!("exponent {a} of prime {p}")));
        }
        integral.push((p, a.to_integer()));
    }
    Ok(ExactEntanglement::from_prime_exponents(integral))
}

/// Whether `ρ_d^(k)` has zero distillable entanglement.
pub fn is_separable_point(d: u64, k: u64) -> Result<bool> {
    Ok(entanglement(d, k)?.is_zero())
}

/// Symbolic replay of a certificate on one original branch `φ_mn^{⊗k}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchTrace {
    pub m: u64,
    pub n: u64,
    /// Group selected by the readout (0 when there is none).
    pub group: u64,
    pub tag_value: Option<u64>,
    /// Remaining slots and their labels after the last step.
    pub slots: Vec<(SlotRef, MesLabel)>,
}

fn position(slots: &[(SlotRef, MesLabel)], slot: SlotRef) -> Result<usize> {
    slots
        .iter()
        .position(|(s, _)| *s == slot)
        .ok_or_else(|| Error::InvalidArgument(format!("slot {slot} not present")))
}

pub fn trace_branch(tree: &DecompositionTree, m: u64, n: u64) -> Result<BranchTrace> {
    let d = tree.d();
    let start = MesLabel::new(d, m, n)?;
    let mut slots: Vec<(SlotRef, MesLabel)> = (1..=tree.k() as usize).map(|i| (SlotRef::whole(i), start)).collect();
    let mut group = None;
    let mut tag_value = None;

    for step in &tree.steps {
        if !step.scope().applies_to(group)? {
            continue;
        }
        match step {
            OperationStep::BxorRound { sources, target, .. } => {
                let ti = position(&slots, *target)?;
                for source in sources {
                    let si = position(&slots, *source)?;
                    let (s, t) = bxor_labels(slots[si].1, slots[ti].1)?;
                    slots[si].1 = s;
                    slots[ti].1 = t;
                }
            }
            OperationStep::DualBasis { slots: targets, .. } => {
                for slot in targets {
                    let i = position(&slots, *slot)?;
                    slots[i].1 = dual_label(slots[i].1);
                }
            }
            OperationStep::LocalShiftM { slot, amount, .. } => {
                let i = position(&slots, *slot)?;
                slots[i].1 = shift_m(slots[i].1, *amount);
            }
            OperationStep::DimensionSplit { slot, d_tilde, .. } => {
                let i = position(&slots, *slot)?;
                let (coarse, fine) = factor_label(slots[i].1, *d_tilde)?;
                slots[i] = (SlotRef::coarse(slot.pair), coarse);
                slots.insert(i + 1, (SlotRef::fine(slot.pair), fine));
            }
            OperationStep::FlagMeasurement { slot, flag_kind, .. } => {
                let i = position(&slots, *slot)?;
                let (_, label) = slots.remove(i);
                let flag = FlagSubspace::of_label(label, *flag_kind);
                let leaf = tree
                    .leaves
                    .iter()
                    .find(|l| l.tag.is_some_and(|t| t.slot == *slot && t.flag == flag))
                    .ok_or_else(|| Error::InvalidArgument(format!("readout {flag} matches no leaf")))?;
                group = Some(leaf.t);
                tag_value = Some(flag.value);
            }
        }
    }

    Ok(BranchTrace {
        m,
        n,
        group: group.unwrap_or(0),
        tag_value,
        slots,
    })
}

/// The group `t` a branch must land in, straight from `m = s·d̃ + t`.
pub fn expected_group(split: &GcdSplit, m: u64) -> Result<u64> {
    if split.k == 1 {
        return Ok(0);
    }
    Ok(decompose_m(m, split)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(terms: &[(u64, u64)]) -> ExactEntanglement {
        ExactEntanglement::from_prime_exponents(terms.iter().copied())
    }

    #[test]
    fn decompose_d2_k3() {
        let tree = decompose(2, 3).unwrap();
        assert_eq!(tree.leaves.len(), 2);
        for leaf in &tree.leaves {
            assert_eq!(leaf.probability, Probability::new(1, 2));
            assert_eq!(leaf.pure_part.len(), 1);
            assert_eq!((leaf.pure_part[0].dim, leaf.pure_part[0].copies), (2, 2));
        }
        assert_eq!(tree.entanglement, e(&[(2, 2)]));
    }

    #[test]
    fn decompose_d6_k3() {
        let tree = decompose(6, 3).unwrap();
        assert_eq!(tree.leaves.len(), 2);
        for leaf in &tree.leaves {
            assert_eq!(leaf.probability, Probability::new(1, 2));
            let dims: Vec<_> = leaf.pure_part.iter().map(|p| (p.dim, p.copies)).collect();
            assert_eq!(dims, vec![(2, 2), (3, 1)]);
            assert_eq!(leaf.separable_part.len(), 1);
            assert_eq!(leaf.separable_part[0].flags[0].d, 3);
        }
        assert_eq!(
            tree.leaves
                .iter()
                .map(|l| l.tag.unwrap().flag.value)
                .collect::<Vec<_>>(),
            vec![0, 3]
        );
        assert_eq!(tree.entanglement, e(&[(3, 1), (2, 2)]));
    }

    #[test]
    fn decompose_single_copy() {
        for d in 1..8 {
            let tree = decompose(d, 1).unwrap();
            assert!(tree.steps.is_empty());
            assert_eq!(tree.leaves.len(), 1);
            assert!(tree.entanglement.is_zero());
        }
    }

    #[test]
    fn decompose_rejects_zero() {
        assert!(decompose(0, 2).is_err());
        assert!(decompose(2, 0).is_err());
        assert!(entanglement(0, 1).is_err());
    }

    #[test]
    fn entanglement_examples() {
        assert!(entanglement(2, 2).unwrap().is_zero());
        assert_eq!(entanglement(5, 5).unwrap(), e(&[(5, 3)]));
        assert_eq!(entanglement(6, 4).unwrap(), e(&[(3, 3), (2, 2)]));
        assert_eq!(entanglement_of_tree(&decompose(4, 2).unwrap()).unwrap(), e(&[(2, 1)]));
    }

    #[test]
    fn separable_points() {
        assert!(is_separable_point(2, 2).unwrap());
        assert!(!is_separable_point(3, 2).unwrap());
        assert!(is_separable_point(7, 1).unwrap());
        for d in 1..=12 {
            for k in 1..=12 {
                let expected = k == 1 || d == 1 || (d, k) == (2, 2);
                assert_eq!(is_separable_point(d, k).unwrap(), expected, "({d},{k})");
            }
        }
    }

    #[test]
    fn closed_form_matches_trees() {
        for d in 1..=12 {
            for k in 1..=12 {
                let tree = decompose(d, k).unwrap();
                let total: Probability = tree.leaves.iter().map(|l| l.probability).sum();
                assert_eq!(total, Probability::from_integer(1));
                assert_eq!(
                    entanglement_of_tree(&tree).unwrap(),
                    entanglement(d, k).unwrap(),
                    "({d},{k})"
                );
                let readouts = tree
                    .steps
                    .iter()
                    .filter(|s| matches!(s, OperationStep::FlagMeasurement { .. }))
                    .count();
                assert_eq!(readouts, usize::from(k >= 2));
                // Every leaf carries the same pure part.
                let first = tree.leaves[0].pure_entanglement();
                assert!(tree.leaves.iter().all(|l| l.pure_entanglement() == first));
                tree.validate().unwrap();
            }
        }
    }

    #[test]
    fn symbolic_replay_lands_in_leaves() {
        for d in 1..=12 {
            for k in 1..=7 {
                let tree = decompose(d, k).unwrap();
                for m in 0..d {
                    for n in 0..d {
                        let trace = trace_branch(&tree, m, n).unwrap();
                        assert_eq!(trace.group, expected_group(&tree.split, m).unwrap());
                        let leaf = tree.leaf_for_group(trace.group).unwrap();
                        leaf.accepts(&trace.slots)
                            .unwrap_or_else(|e| panic!("({d},{k}) ({m},{n}): {e}"));
                    }
                }
            }
        }
    }

    #[test]
    fn validate_catches_tampering() {
        let mut tree = decompose(6, 2).unwrap();
        tree.leaves[0].probability = Probability::new(1, 2);
        assert!(tree.validate().is_err());

        let mut tree = decompose(6, 3).unwrap();
        tree.entanglement = ExactEntanglement::log_of(6);
        assert!(tree.validate().is_err());

        let mut tree = decompose(5, 3).unwrap();
        tree.leaves[1].tag = tree.leaves[0].tag;
        assert!(tree.validate().is_err());
    }

    #[test]
    fn leaf_rejects_wrong_labels() {
        let tree = decompose(5, 3).unwrap();
        let trace = trace_branch(&tree, 2, 1).unwrap();
        let wrong = tree.leaf_for_group((trace.group + 1) % 5).unwrap();
        assert!(wrong.accepts(&trace.slots).is_err());
    }
}
