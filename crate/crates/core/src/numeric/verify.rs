//! Numeric replay of decomposition certificates and the label/numeric
//! equivalence suites.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::dense::{flag_projector_from_states, flag_projector_product_form};
use super::state::{mes_from_label, product_of_labels, root_of_unity, SparseState};
use super::tolerance;
use crate::decompose::{expected_group, trace_branch, DecompositionTree, Leaf, OperationStep, Scope, SlotRef};
use crate::ensemble::{FlagKind, FlagSubspace};
use crate::error::{invalid, Error, Result};
use crate::labels::{bxor_labels, dual_label, factor_label, script_b, shift_m, shift_n, LabelWord, MesLabel};

/// Sparse and dense resource limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Maximum amplitudes per branch state (`d^k`).
    pub sparse: u64,
    /// Maximum row dimension of dense operators.
    pub dense: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            sparse: 1_000_000,
            dense: super::dense::DEFAULT_DENSE_CAP,
        }
    }
}

/// Work budget for the pairwise tag orthogonality check, in overlap terms.
const ORTHOGONALITY_BUDGET: u128 = 200_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Largest deviation from the ideal value observed.
    pub worst_deviation: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    fn from_deviation(name: &str, worst: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: worst <= tolerance,
            worst_deviation: worst,
            tolerance,
            detail,
        }
    }

    fn failed(name: &str, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: false,
            worst_deviation: f64::INFINITY,
            tolerance: 0.0,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub d: u64,
    pub k: u64,
    pub checks: Vec<CheckResult>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn check_sparse_cap(d: u64, k: u64, caps: &Caps) -> Result<()> {
    let needed = (d as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if needed > caps.sparse as u128 {
        return Err(Error::ResourceLimit {
            what: "sparse amplitudes per branch (d^k)",
            needed,
            cap: caps.sparse as u128,
        });
    }
    Ok(())
}

/// Per-branch outcome of the numeric replay.
#[derive(Debug, Clone, Default)]
struct BranchOutcome {
    readout_deviation: f64,
    factorization_deficit: f64,
    norm_deviation: f64,
    leaf_deviation: f64,
    trace_deviation: f64,
    failures: Vec<String>,
}

/// Replays `tree.steps` numerically on every branch `φ_mn^{⊗k}` and checks
/// that (i) each branch is read out in its predicted tag with certainty and
/// factors across the tag pair, (ii) the residual matches the leaf's pure
/// part on the separable residue's support, (iii) distinct tags are
/// orthogonal, and (iv) every flag used is product-diagonal in its basis.
pub fn verify_decomposition(d: u64, k: u64, tree: &DecompositionTree, caps: &Caps) -> Result<VerificationReport> {
    if (tree.d(), tree.k()) != (d, k) {
        return invalid(format!("tree is for ({}, {}), not ({d}, {k})", tree.d(), tree.k()));
    }
    check_sparse_cap(d, k, caps)?;

    let mut checks = Vec::new();
    checks.push(match tree.validate() {
        Ok(()) => CheckResult::from_deviation(
            "certificate structure",
            0.0,
            0.0,
            "probabilities, tags and entanglement consistent".into(),
        ),
        Err(e) => CheckResult::failed("certificate structure", e.to_string()),
    });

    let branches: Vec<(u64, u64)> = (0..d).flat_map(|m| (0..d).map(move |n| (m, n))).collect();
    let outcomes: Vec<BranchOutcome> = branches
        .par_iter()
        .map(|&(m, n)| {
            replay_branch(tree, m, n, caps).unwrap_or_else(|e| BranchOutcome {
                failures: vec![format!("({m},{n}): {e}")],
                ..Default::default()
            })
        })
        .collect();

    let worst = |f: fn(&BranchOutcome) -> f64| outcomes.iter().map(f).fold(0.0, f64::max);
    let failures: Vec<String> = outcomes.iter().flat_map(|o| o.failures.iter().cloned()).collect();
    let failure_note = |base: &str| {
        if failures.is_empty() {
            base.to_string()
        } else {
            format!("{base}; {} failure(s), first: {}", failures.len(), failures[0])
        }
    };

    let mut replay_ok = CheckResult::from_deviation(
        "replay completed on every branch",
        if failures.is_empty() { 0.0 } else { f64::INFINITY },
        0.0,
        failure_note(&format!("{} branches", branches.len())),
    );
    replay_ok.passed = failures.is_empty();
    checks.push(replay_ok);
    checks.push(CheckResult::from_deviation(
        "tag readout deterministic and as predicted",
        worst(|o| o.readout_deviation),
        tolerance::FIDELITY,
        "1 - probability of the predicted flag outcome".into(),
    ));
    checks.push(CheckResult::from_deviation(
        "branch factors across the tag pair",
        worst(|o| o.factorization_deficit),
        tolerance::FIDELITY,
        "1 - weight of the best product factorization".into(),
    ));
    checks.push(CheckResult::from_deviation(
        "norm preserved by every step",
        worst(|o| o.norm_deviation),
        tolerance::FIDELITY,
        "|1 - <psi|psi>| after each step".into(),
    ));
    checks.push(CheckResult::from_deviation(
        "residual matches leaf pure part",
        worst(|o| o.leaf_deviation),
        tolerance::FIDELITY,
        "1 - fidelity with the leaf's pure part times the separable residue's projector".into(),
    ));
    checks.push(CheckResult::from_deviation(
        "residual matches symbolic replay",
        worst(|o| o.trace_deviation),
        tolerance::FIDELITY,
        "1 - fidelity with the label-level prediction".into(),
    ));
    checks.push(tag_orthogonality(tree)?);
    checks.push(flag_product_forms(tree, caps)?);

    Ok(VerificationReport { d, k, checks })
}

fn replay_branch(tree: &DecompositionTree, m: u64, n: u64, caps: &Caps) -> Result<BranchOutcome> {
    let d = tree.d();
    let k = tree.k() as usize;
    let mut out = BranchOutcome::default();
    let mut state = product_of_labels(&vec![MesLabel::new(d, m, n)?; k], caps.sparse)?;
    let mut slots: Vec<SlotRef> = (1..=k).map(SlotRef::whole).collect();
    let mut group: Option<u64> = None;
    let predicted_group = expected_group(&tree.split, m)?;
    let pos = |slots: &[SlotRef], s: &SlotRef| {
        slots
            .iter()
            .position(|x| x == s)
            .ok_or_else(|| Error::InvalidArgument(format!("slot {s} not present")))
    };

    for step in &tree.steps {
        let applies = match step.scope() {
            Scope::All => true,
            Scope::Group(t) => group.ok_or_else(|| Error::InvalidArgument("group step before readout".into()))? == t,
        };
        if !applies {
            continue;
        }
        match step {
            OperationStep::BxorRound { sources, target, .. } => {
                let t = pos(&slots, target)?;
                for s in sources {
                    state = state.apply_bxor(pos(&slots, s)?, t)?;
                }
            }
            OperationStep::DualBasis { slots: targets, .. } => {
                for s in targets {
                    state = state.apply_dual_basis(pos(&slots, s)?)?;
                }
            }
            OperationStep::LocalShiftM { slot, amount, .. } => {
                let p = pos(&slots, slot)?;
                let dim = state.dims()[2 * p];
                let perm: Vec<usize> = (0..dim).map(|j| (j + *amount as usize) % dim).collect();
                state = state.apply_local_permutation(2 * p + 1, &perm)?;
            }
            OperationStep::DimensionSplit { slot, d_tilde, .. } => {
                let p = pos(&slots, slot)?;
                state = state.split_pair(p, *d_tilde as usize)?;
                slots[p] = SlotRef::coarse(slot.pair);
                slots.insert(p + 1, SlotRef::fine(slot.pair));
            }
            OperationStep::FlagMeasurement { slot, flag_kind, .. } => {
                let p = pos(&slots, slot)?;
                let dist = state.flag_distribution(p, *flag_kind)?;
                let leaf = tree
                    .leaf_for_group(predicted_group)
                    .ok_or_else(|| Error::InvalidArgument(format!("no leaf for group {predicted_group}")))?;
                let tag = leaf
                    .tag
                    .ok_or_else(|| Error::InvalidArgument("leaf without tag after readout".into()))?;
                if tag.flag.kind != *flag_kind || tag.slot != *slot {
                    out.failures.push(format!(
                        "({m},{n}): leaf tag {} does not match the readout step",
                        tag.flag
                    ));
                }
                let p_predicted = dist.get(&tag.flag.value).copied().unwrap_or(0.0);
                out.readout_deviation = out.readout_deviation.max(1.0 - p_predicted);
                group = Some(predicted_group);
                let (rest, deficit) = state.remove_pair(p)?;
                out.factorization_deficit = out.factorization_deficit.max(deficit);
                state = rest;
                slots.remove(p);
            }
        }
        out.norm_deviation = out.norm_deviation.max((state.norm_sqr() - 1.0).abs());
    }

    let group = group.unwrap_or(0);
    let leaf = tree
        .leaf_for_group(group)
        .ok_or_else(|| Error::InvalidArgument(format!("no leaf for group {group}")))?;
    out.leaf_deviation = 1.0 - leaf_fidelity(&state, &slots, leaf)?;

    let trace = trace_branch(tree, m, n)?;
    if trace.group != group {
        out.failures.push(format!(
            "({m},{n}): symbolic replay chose group {}, expected {group}",
            trace.group
        ));
    }
    if let Err(e) = leaf.accepts(&trace.slots) {
        out.failures.push(format!("({m},{n}): symbolic replay: {e}"));
    }
    let trace_slots: Vec<SlotRef> = trace.slots.iter().map(|(s, _)| *s).collect();
    if trace_slots != slots {
        out.failures
            .push(format!("({m},{n}): symbolic and numeric slot layouts differ"));
    } else {
        let labels: Vec<MesLabel> = trace.slots.iter().map(|(_, l)| *l).collect();
        let predicted = product_of_labels(&labels, caps.sparse)?;
        out.trace_deviation = 1.0 - state.fidelity(&predicted)?;
    }
    Ok(out)
}

/// `‖(⟨pure| ⊗ Π_separable) ψ‖²` for the slot layout `slots`.
fn leaf_fidelity(state: &SparseState, slots: &[SlotRef], leaf: &Leaf) -> Result<f64> {
    enum Role {
        Pure(MesLabel),
        Separable(Vec<u64>),
        Trivial,
    }
    let mut state = state.clone();
    let mut roles = Vec::with_capacity(slots.len());
    for (p, slot) in slots.iter().enumerate() {
        let dim = state.dims()[2 * p] as u64;
        if let Some(f) = leaf.pure_part.iter().find(|f| f.slots.contains(slot)) {
            roles.push(Role::Pure(f.label()?));
        } else if let Some(f) = leaf.separable_part.iter().find(|f| f.slot == *slot) {
            let kind = f.flags.first().map(|x| x.kind).unwrap_or(FlagKind::SumOverN);
            if f.flags.iter().any(|x| x.kind != kind || x.d != dim) {
                return invalid(format!("separable slot {slot} mixes flag kinds or dimensions"));
            }
            if kind == FlagKind::SumOverM {
                // Σ_m P_{mv} is Σ_j |j, j⊕v⟩⟨j, j⊕v| in the dual basis.
                state = state.apply_dual_basis(p)?;
            }
            roles.push(Role::Separable(f.flags.iter().map(|x| x.value).collect()));
        } else if dim == 1 {
            roles.push(Role::Trivial);
        } else {
            return Ok(0.0);
        }
    }

    let mut projected: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
    'amps: for (&idx, &amp) in state.amplitudes() {
        let x = state.digits(idx);
        let mut weight = amp;
        let mut key = Vec::new();
        for (p, role) in roles.iter().enumerate() {
            let (ja, jb) = (x[2 * p] as u64, x[2 * p + 1] as u64);
            match role {
                Role::Pure(label) => {
                    let dim = label.d();
                    if jb != (ja + label.m()) % dim {
                        continue 'amps;
                    }
                    weight *= root_of_unity(ja * label.n(), dim).conj() / (dim as f64).sqrt();
                }
                Role::Separable(values) => {
                    let dim = state.dims()[2 * p] as u64;
                    if !values.contains(&((jb + dim - ja) % dim)) {
                        continue 'amps;
                    }
                    key.extend([ja as usize, jb as usize]);
                }
                Role::Trivial => {}
            }
        }
        *projected.entry(key).or_default() += weight;
    }
    Ok(projected.values().map(|a| a.norm_sqr()).sum())
}

/// `Tr(P_a P_b)` for every pair of distinct leaf tags, from member overlaps.
fn tag_orthogonality(tree: &DecompositionTree) -> Result<CheckResult> {
    let tags: Vec<FlagSubspace> = tree.leaves.iter().filter_map(|l| l.tag.map(|t| t.flag)).collect();
    let d = tree.d() as u128;
    let work = (tags.len() as u128).pow(2) * d.pow(3);
    if work > ORTHOGONALITY_BUDGET {
        return Err(Error::ResourceLimit {
            what: "tag orthogonality overlaps",
            needed: work,
            cap: ORTHOGONALITY_BUDGET,
        });
    }
    let members: Vec<Vec<SparseState>> = tags
        .iter()
        .map(|f| f.members().into_iter().map(mes_from_label).collect())
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..tags.len() {
        for j in i + 1..tags.len() {
            let mut overlap = 0.0;
            for a in &members[i] {
                for b in &members[j] {
                    overlap += a.inner(b)?.norm_sqr();
                }
            }
            worst = worst.max(overlap);
        }
    }
    Ok(CheckResult::from_deviation(
        "distinct tags orthogonal",
        worst,
        tolerance::FIDELITY,
        format!("max Tr(P_a P_b) over {} tag(s)", tags.len()),
    ))
}

/// Every flag in the certificate equals its product-diagonal construction.
fn flag_product_forms(tree: &DecompositionTree, caps: &Caps) -> Result<CheckResult> {
    let mut flags: Vec<FlagSubspace> = tree.leaves.iter().filter_map(|l| l.tag.map(|t| t.flag)).collect();
    for leaf in &tree.leaves {
        for f in &leaf.separable_part {
            flags.extend(f.flags.iter().copied());
        }
    }
    flags.sort();
    flags.dedup();
    let mut worst: f64 = 0.0;
    for flag in &flags {
        let from_states = flag_projector_from_states(flag, caps.dense)?;
        let product = flag_projector_product_form(flag, caps.dense)?;
        worst = worst.max(from_states.max_abs_diff(&product)?);
        worst = worst.max(from_states.idempotency_error());
    }
    Ok(CheckResult::from_deviation(
        "flag projectors product-diagonal",
        worst,
        tolerance::FIDELITY,
        format!(
            "{} distinct flag(s), entrywise against product-vector construction",
            flags.len()
        ),
    ))
}

fn label_fidelity(state: &SparseState, labels: &[MesLabel], cap: u64) -> Result<f64> {
    state.fidelity(&product_of_labels(labels, cap)?)
}

/// Numeric BXOR against [`bxor_labels`] for every label pair at `d`.
pub fn bxor_rule_check(d: u64) -> Result<CheckResult> {
    let labels = all_labels(d)?;
    let mut worst: f64 = 0.0;
    for &x in &labels {
        for &y in &labels {
            let numeric = product_of_labels(&[x, y], u64::MAX)?.apply_bxor(0, 1)?;
            let (px, py) = bxor_labels(x, y)?;
            worst = worst.max(1.0 - label_fidelity(&numeric, &[px, py], u64::MAX)?);
        }
    }
    Ok(CheckResult::from_deviation(
        "two-label BXOR rule",
        worst,
        tolerance::FIDELITY,
        format!("{} label pairs at d = {d}", labels.len().pow(2)),
    ))
}

/// Numeric `B(1,k)···B(k−1,k)` on `φ_mn^{⊗k}` against [`script_b`].
pub fn script_b_check(d: u64, k: u64, caps: &Caps) -> Result<CheckResult> {
    check_sparse_cap(d, k, caps)?;
    let labels = all_labels(d)?;
    let results: Vec<Result<f64>> = labels
        .par_iter()
        .map(|&label| {
            let word = LabelWord::uniform(label, k as usize)?;
            let mut state = product_of_labels(word.pairs(), caps.sparse)?;
            let last = k as usize - 1;
            for source in 0..last {
                state = state.apply_bxor(source, last)?;
            }
            let predicted = script_b(&word)?;
            Ok(1.0 - label_fidelity(&state, predicted.pairs(), caps.sparse)?)
        })
        .collect();
    let mut worst: f64 = 0.0;
    for r in results {
        worst = worst.max(r?);
    }
    Ok(CheckResult::from_deviation(
        "BXOR round on identical copies",
        worst,
        tolerance::FIDELITY,
        format!("all (m,n) at d = {d}, k = {k}"),
    ))
}

/// Dual-basis change, Bob-side shifts and Alice-side phases against the label maps.
pub fn local_rule_check(d: u64) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for label in all_labels(d)? {
        let state = mes_from_label(label);
        let dual = state.apply_dual_basis(0)?;
        worst = worst.max(1.0 - dual.fidelity(&mes_from_label(dual_label(label)))?);
        for a in 0..d {
            let perm: Vec<usize> = (0..d as usize).map(|j| (j + a as usize) % d as usize).collect();
            let shifted = state.apply_local_permutation(1, &perm)?;
            worst = worst.max(1.0 - shifted.fidelity(&mes_from_label(shift_m(label, a)))?);
            let phases: Vec<u64> = (0..d).map(|j| j * a).collect();
            let phased = state.apply_local_phase(0, &phases)?;
            worst = worst.max(1.0 - phased.fidelity(&mes_from_label(shift_n(label, a)))?);
        }
    }
    Ok(CheckResult::from_deviation(
        "dual basis and local shifts",
        worst,
        tolerance::FIDELITY,
        format!("all labels and shift amounts at d = {d}"),
    ))
}

/// `φ_{s·d̃,0}(d)` against the embedding of `φ_{s0}(g) ⊗ φ_00(d̃)` for every divisor.
pub fn factorization_check(d: u64) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for d_tilde in (1..=d).filter(|x| d.is_multiple_of(*x)) {
        for s in 0..d / d_tilde {
            let label = MesLabel::new(d, s * d_tilde, 0)?;
            let (coarse, fine) = factor_label(label, d_tilde)?;
            let split = mes_from_label(label).split_pair(0, d_tilde as usize)?;
            worst = worst.max(1.0 - label_fidelity(&split, &[coarse, fine], u64::MAX)?);
            cases += 1;
        }
    }
    Ok(CheckResult::from_deviation(
        "dimension factorization",
        worst,
        tolerance::CONSTRUCTION,
        format!("{cases} (d̃, s) cases at d = {d}"),
    ))
}

fn all_labels(d: u64) -> Result<Vec<MesLabel>> {
    (0..d * d).map(|i| MesLabel::new(d, i / d, i % d)).collect()
}

/// Every check `verify` runs at one `(d, k)`: the certificate replay plus
/// the label/numeric equivalence suites at that dimension.
pub fn full_verification(d: u64, k: u64, caps: &Caps) -> Result<VerificationReport> {
    let tree = crate::decompose::decompose(d, k)?;
    let mut report = verify_decomposition(d, k, &tree, caps)?;
    if d > 1 {
        if d.pow(4) <= caps.sparse {
            report.checks.push(bxor_rule_check(d)?);
        }
        report.checks.push(local_rule_check(d)?);
        report.checks.push(factorization_check(d)?);
    }
    if k >= 2 {
        report.checks.push(script_b_check(d, k, caps)?);
    }
    Ok(report)
}
