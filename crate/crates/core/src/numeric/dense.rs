//! Dense operators for density matrices, partial transposes and projectors.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::state::{decode, encode, fourier, mes_from_label, product_of_labels, SparseState};
use crate::ensemble::{BranchEnsemble, FlagKind, FlagSubspace};
use crate::error::{invalid, Error, Result};

/// Default cap on the row dimension of dense operators.
pub const DEFAULT_DENSE_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// Square matrix over qudits with dimensions `dims` (row-major indexing).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    dims: Vec<usize>,
    matrix: DMatrix<Complex64>,
}

fn check_cap(dim: u128, cap: usize) -> Result<usize> {
    if dim > cap as u128 {
        return Err(Error::ResourceLimit {
            what: "dense operator dimension",
            needed: dim,
            cap: cap as u128,
        });
    }
    Ok(dim as usize)
}

impl DenseOperator {
    pub fn new(dims: Vec<usize>, matrix: DMatrix<Complex64>) -> Result<Self> {
        let dim: usize = dims.iter().product();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return invalid(format!(
                "matrix is {}x{}, dims {dims:?} need {dim}",
                matrix.nrows(),
                matrix.ncols()
            ));
        }
        Ok(Self { dims, matrix })
    }

    pub fn zeros(dims: Vec<usize>, cap: usize) -> Result<Self> {
        let dim = check_cap(dims.iter().map(|&d| d as u128).product(), cap)?;
        Ok(Self {
            dims,
            matrix: DMatrix::zeros(dim, dim),
        })
    }

    pub fn identity(dims: Vec<usize>, cap: usize) -> Result<Self> {
        let dim = check_cap(dims.iter().map(|&d| d as u128).product(), cap)?;
        Ok(Self {
            dims,
            matrix: DMatrix::identity(dim, dim),
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    /// `|ψ⟩⟨ψ|` for a sparse state.
    pub fn projector(state: &SparseState, cap: usize) -> Result<Self> {
        let mut out = Self::zeros(state.dims().to_vec(), cap)?;
        out.add_outer(state, 1.0);
        Ok(out)
    }

    fn add_outer(&mut self, state: &SparseState, weight: f64) {
        for (&i, a) in state.amplitudes() {
            for (&j, b) in state.amplitudes() {
                self.matrix[(i as usize, j as usize)] += a * b.conj() * weight;
            }
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn max_abs_diff(&self, other: &DenseOperator) -> Result<f64> {
        if self.dims != other.dims {
            return invalid("operator dimension mismatch");
        }
        Ok((&self.matrix - &other.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `max |O² − O|` entry; zero for projectors.
    pub fn idempotency_error(&self) -> f64 {
        (&self.matrix * &self.matrix - &self.matrix)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn mul(&self, other: &DenseOperator) -> Result<DenseOperator> {
        if self.dims != other.dims {
            return invalid("operator dimension mismatch");
        }
        Ok(DenseOperator {
            dims: self.dims.clone(),
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn add(&self, other: &DenseOperator) -> Result<DenseOperator> {
        if self.dims != other.dims {
            return invalid("operator dimension mismatch");
        }
        Ok(DenseOperator {
            dims: self.dims.clone(),
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn scale(&self, factor: f64) -> DenseOperator {
        DenseOperator {
            dims: self.dims.clone(),
            matrix: &self.matrix * Complex64::new(factor, 0.0),
        }
    }

    /// `O₁ ⊗ O₂` with `O₂`'s qudits appended after `O₁`'s.
    pub fn kron(&self, other: &DenseOperator, cap: usize) -> Result<DenseOperator> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        check_cap(self.dim() as u128 * other.dim() as u128, cap)?;
        Ok(DenseOperator {
            dims,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }

    /// `U† O U` for the basis permutation `U|i⟩ = |π(i)⟩`, i.e.
    /// `(U† O U)_{ij} = O_{π(i) π(j)}`.
    pub fn conjugate_by_basis_permutation(&self, pi: impl Fn(usize) -> usize) -> DenseOperator {
        let dim = self.dim();
        let map: Vec<usize> = (0..dim).map(pi).collect();
        let matrix = DMatrix::from_fn(dim, dim, |i, j| self.matrix[(map[i], map[j])]);
        DenseOperator {
            dims: self.dims.clone(),
            matrix,
        }
    }

    /// Transposes every qudit on `side` of the interleaved `A1,B1,…` layout.
    pub fn partial_transpose(&self, side: Side) -> DenseOperator {
        let offset = match side {
            Side::A => 0,
            Side::B => 1,
        };
        let dims = &self.dims;
        let dim = self.dim();
        let mut matrix = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            let ri = decode(i as u64, dims);
            for j in 0..dim {
                let (mut r, mut c) = (ri.clone(), decode(j as u64, dims));
                for q in (offset..dims.len()).step_by(2) {
                    std::mem::swap(&mut r[q], &mut c[q]);
                }
                matrix[(encode(&r, dims) as usize, encode(&c, dims) as usize)] = self.matrix[(i, j)];
            }
        }
        DenseOperator {
            dims: self.dims.clone(),
            matrix,
        }
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        let mut values: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }
}

/// `Σ_i p_i |branch_i⟩⟨branch_i|`.
pub fn density_from_ensemble(ensemble: &BranchEnsemble, cap: usize) -> Result<DenseOperator> {
    let dims: Vec<usize> = ensemble
        .slot_dims()
        .iter()
        .flat_map(|&d| [d as usize, d as usize])
        .collect();
    let mut out = DenseOperator::zeros(dims, cap)?;
    for branch in ensemble.branches() {
        let state = product_of_labels(branch.word.pairs(), cap as u64)?;
        let p = *branch.probability.numer() as f64 / *branch.probability.denom() as f64;
        out.add_outer(&state, p);
    }
    Ok(out)
}

/// Partial trace of `|ψ⟩⟨ψ|` onto the `keep` side (A = even qudits).
pub fn reduced_density(state: &SparseState, keep: Side, cap: usize) -> Result<DenseOperator> {
    let dims = state.dims();
    let offset = match keep {
        Side::A => 0,
        Side::B => 1,
    };
    let kept: Vec<usize> = (offset..dims.len()).step_by(2).collect();
    let traced: Vec<usize> = (1 - offset..dims.len()).step_by(2).collect();
    let kept_dims: Vec<usize> = kept.iter().map(|&q| dims[q]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&q| dims[q]).collect();
    let mut out = DenseOperator::zeros(kept_dims.clone(), cap)?;

    let mut by_traced: std::collections::BTreeMap<u64, Vec<(usize, Complex64)>> = Default::default();
    for (&idx, &a) in state.amplitudes() {
        let x = state.digits(idx);
        let kx: Vec<usize> = kept.iter().map(|&q| x[q]).collect();
        let tx: Vec<usize> = traced.iter().map(|&q| x[q]).collect();
        by_traced
            .entry(encode(&tx, &traced_dims))
            .or_default()
            .push((encode(&kx, &kept_dims) as usize, a));
    }
    for entries in by_traced.values() {
        for &(i, a) in entries {
            for &(j, b) in entries {
                out.matrix[(i, j)] += a * b.conj();
            }
        }
    }
    Ok(out)
}

/// Smallest eigenvalue of `ρ^{T_B}`, transposing every Bob qudit.
pub fn partial_transpose_min_eig(rho: &DenseOperator, cap: usize) -> Result<f64> {
    check_cap(rho.dim() as u128, cap)?;
    Ok(rho.partial_transpose(Side::B).hermitian_eigenvalues()[0])
}

/// Flag projector summed from its member states, `Σ P_{mn}`.
pub fn flag_projector_from_states(flag: &FlagSubspace, cap: usize) -> Result<DenseOperator> {
    let d = flag.d as usize;
    let mut out = DenseOperator::zeros(vec![d, d], cap)?;
    for label in flag.members() {
        out.add_outer(&mes_from_label(label), 1.0);
    }
    Ok(out)
}

/// Dual basis vectors: `|e_j^A⟩ = d^{-1/2} Σ_k ω^{−jk}|k⟩` (so that
/// `|k^A⟩ = d^{-1/2} Σ_j ω^{jk}|e_j^A⟩`) and `|e_j^B⟩ = d^{-1/2} Σ_k ω^{jk}|k⟩`.
pub fn dual_basis_vector(side: Side, j: usize, d: usize) -> Vec<Complex64> {
    let f = fourier(d, matches!(side, Side::A));
    (0..d).map(|k| f[k][j]).collect()
}

/// The same flag projector assembled from product vectors:
/// `Σ_j |j⟩⟨j| ⊗ |j⊕v⟩⟨j⊕v|`, or its dual-basis analogue for `Σ_m P_{mv}`.
pub fn flag_projector_product_form(flag: &FlagSubspace, cap: usize) -> Result<DenseOperator> {
    let d = flag.d as usize;
    let v = flag.value as usize;
    let mut out = DenseOperator::zeros(vec![d, d], cap)?;
    for j in 0..d {
        let (a, b) = match flag.kind {
            FlagKind::SumOverN => {
                let mut a = vec![Complex64::default(); d];
                let mut b = vec![Complex64::default(); d];
                a[j] = Complex64::new(1.0, 0.0);
                b[(j + v) % d] = Complex64::new(1.0, 0.0);
                (a, b)
            }
            FlagKind::SumOverM => (
                dual_basis_vector(Side::A, j, d),
                dual_basis_vector(Side::B, (j + v) % d, d),
            ),
        };
        for (ia, xa) in a.iter().enumerate() {
            for (ib, xb) in b.iter().enumerate() {
                for (ja, ya) in a.iter().enumerate() {
                    for (jb, yb) in b.iter().enumerate() {
                        out.matrix[(ia * d + ib, ja * d + jb)] += xa * xb * (ya * yb).conj();
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `ρ_2^(2)` rebuilt from the product form left by one BXOR:
/// `𝓑† [¼ (P_00 + P_10) ⊗ (P_00 + P_01)] 𝓑`, each factor assembled from
/// product vectors.
pub fn separable_form_rho_2_2() -> Result<DenseOperator> {
    let cap = DEFAULT_DENSE_CAP;
    let first = flag_projector_product_form(&FlagSubspace::new(2, FlagKind::SumOverM, 0)?, cap)?;
    let second = flag_projector_product_form(&FlagSubspace::new(2, FlagKind::SumOverN, 0)?, cap)?;
    let after = first.kron(&second, cap)?.scale(0.25);
    let dims = after.dims.clone();
    Ok(after.conjugate_by_basis_permutation(|i| {
        let mut x = decode(i as u64, &dims);
        x[2] = (x[2] + x[0]) % 2;
        x[3] = (x[3] + x[1]) % 2;
        encode(&x, &dims) as usize
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::canonical_mixture;
    use crate::numeric::state::build_mes;

    #[test]
    fn reduced_states_are_maximally_mixed() {
        for d in 1..=6u64 {
            for m in 0..d {
                for n in 0..d {
                    let s = build_mes(d, m, n).unwrap();
                    for side in [Side::A, Side::B] {
                        let r = reduced_density(&s, side, 64).unwrap();
                        for i in 0..d as usize {
                            for j in 0..d as usize {
                                let expected = if i == j { 1.0 / d as f64 } else { 0.0 };
                                assert!((r.get(i, j) - Complex64::new(expected, 0.0)).norm() < 1e-12);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn reduced_product_and_two_copies() {
        let mut amps = std::collections::BTreeMap::new();
        amps.insert(0, Complex64::new(1.0, 0.0));
        let product = SparseState::new(vec![2, 2], amps).unwrap();
        let r = reduced_density(&product, Side::A, 16).unwrap();
        assert!(r.idempotency_error() < 1e-12);
        assert!((r.trace().re - 1.0).abs() < 1e-12);

        let two = build_mes(2, 0, 0)
            .unwrap()
            .tensor(&build_mes(2, 0, 0).unwrap())
            .unwrap();
        let r = reduced_density(&two, Side::A, 16).unwrap();
        assert_eq!(r.dim(), 4);
        for i in 0..4 {
            assert!((r.get(i, i).re - 0.25).abs() < 1e-12);
        }
        assert!(reduced_density(&two, Side::A, 3).is_err());
    }

    #[test]
    fn single_copy_mixture_is_maximally_mixed() {
        let rho = density_from_ensemble(&canonical_mixture(2, 1).unwrap(), 64).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { 0.25 } else { 0.0 };
                assert!((rho.get(i, j) - Complex64::new(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn pure_branch_is_projector() {
        let e = canonical_mixture(1, 2).unwrap();
        let rho = density_from_ensemble(&e, 16).unwrap();
        assert!(rho.idempotency_error() < 1e-12);
        let p = DenseOperator::projector(&build_mes(3, 1, 2).unwrap(), 16).unwrap();
        assert!(p.idempotency_error() < 1e-12);
        assert!(p.hermiticity_error() < 1e-12);
    }

    #[test]
    fn bell_state_partial_transpose() {
        let p = DenseOperator::projector(&build_mes(2, 0, 0).unwrap(), 16).unwrap();
        let min = partial_transpose_min_eig(&p, 16).unwrap();
        assert!((min + 0.5).abs() < 1e-12);
        assert!(partial_transpose_min_eig(&p, 2).is_err());
    }

    #[test]
    fn partial_transpose_is_an_involution() {
        let rho = density_from_ensemble(&canonical_mixture(3, 2).unwrap(), 4096).unwrap();
        let twice = rho.partial_transpose(Side::B).partial_transpose(Side::B);
        assert!(twice.max_abs_diff(&rho).unwrap() < 1e-15);
    }

    #[test]
    fn flag_projectors_two_routes() {
        for d in 1..=6u64 {
            for kind in [FlagKind::SumOverN, FlagKind::SumOverM] {
                for v in 0..d {
                    let flag = FlagSubspace::new(d, kind, v).unwrap();
                    let a = flag_projector_from_states(&flag, 64).unwrap();
                    let b = flag_projector_product_form(&flag, 64).unwrap();
                    assert!(a.max_abs_diff(&b).unwrap() < 1e-12, "{flag}");
                    assert!(a.idempotency_error() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn separable_reconstruction() {
        let rho = density_from_ensemble(&canonical_mixture(2, 2).unwrap(), 64).unwrap();
        let sep = separable_form_rho_2_2().unwrap();
        assert!(rho.max_abs_diff(&sep).unwrap() < 1e-10);
    }

    #[test]
    fn dense_cap_enforced() {
        let e = canonical_mixture(3, 4).unwrap();
        assert!(matches!(
            density_from_ensemble(&e, 4096),
            Err(Error::ResourceLimit { .. })
        ));
    }
}
