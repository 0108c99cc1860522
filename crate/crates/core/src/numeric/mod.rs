//! Dense and sparse numeric oracle used to replay certificates.
//!
//! Qudits are ordered `A1, B1, A2, B2, …` and basis indices are row-major
//! over that order.

pub mod dense;
pub mod state;
pub mod verify;

pub use dense::{
    density_from_ensemble, flag_projector_from_states, flag_projector_product_form, partial_transpose_min_eig,
    reduced_density, DenseOperator, Side, DEFAULT_DENSE_CAP,
};
pub use state::{build_mes, fourier, mes_from_label, product_of_labels, SparseState};
pub use verify::{
    bxor_rule_check, factorization_check, full_verification, local_rule_check, script_b_check, verify_decomposition,
    Caps, CheckResult, VerificationReport,
};

/// Numeric tolerances.
pub mod tolerance {
    /// Exact constructions: unitarity, normalization, label equivalence.
    pub const CONSTRUCTION: f64 = 1e-12;
    /// Fidelities and projector identities.
    pub const FIDELITY: f64 = 1e-10;
    /// A partial-transpose eigenvalue below `-NPT_THRESHOLD` certifies NPT.
    pub const NPT_THRESHOLD: f64 = 1e-8;
}
