//! Exact entanglement of formation for uniform mixtures of `k` copies of the
//! `d²` maximally entangled qudit pairs, together with a constructive
//! decomposition certificate and a numeric oracle that replays it.
//!
//! The symbolic side works on labels `(m, n)` of
//! `φ_mn = d^{-1/2} Σ_j ω^{jn} |j⟩|j⊕m⟩`; the [`numeric`] side builds the
//! corresponding vectors and checks every label rule and certificate step.

pub mod decompose;
pub mod ensemble;
pub mod entanglement;
pub mod error;
pub mod labels;
pub mod modmath;
pub mod numeric;

pub use decompose::{
    decompose, entanglement, entanglement_of_tree, is_separable_point, trace_branch, BranchTrace, DecompositionTree,
    Factor, Leaf, OperationStep, PureFactor, Scope, SeparableFactor, SlotRef, Tag,
};
pub use ensemble::{
    canonical_mixture, group_by_flag, Branch, BranchEnsemble, FlagGroup, FlagKind, FlagSubspace, LabelOp,
    LocalDiscriminationProtocol, Probability,
};
pub use entanglement::ExactEntanglement;
pub use error::{Error, Result};
pub use labels::{bxor_labels, bxor_round, dual_label, script_b, shift_m, shift_n, LabelWord, MesLabel};
pub use modmath::{gcd, split_gcd, GcdSplit};
pub use numeric::{Caps, CheckResult, DenseOperator, SparseState, VerificationReport};
