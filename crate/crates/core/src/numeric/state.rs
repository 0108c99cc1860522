//! Sparse pure states over interleaved qudits `A1, B1, A2, B2, …`.
//!
//! A basis index is the row-major flattening
//! `index = Σ_q x_q · Π_{q' > q} d_{q'}`, so pair `p` owns qudits `2p` and
//! `2p + 1`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::ensemble::{FlagKind, FlagSubspace};
use crate::error::{invalid, Error, Result};
use crate::labels::MesLabel;

/// Amplitudes below this magnitude are dropped after dense local gates.
const PRUNE: f64 = 1e-15;

/// `e^{2πi·num/den}`.
pub(crate) fn root_of_unity(num: u64, den: u64) -> Complex64 {
    let angle = 2.0 * PI * ((num % den) as f64) / den as f64;
    Complex64::from_polar(1.0, angle)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseState {
    dims: Vec<usize>,
    amplitudes: BTreeMap<u64, Complex64>,
}

fn total_dimension(dims: &[usize]) -> Result<u64> {
    dims.iter()
        .try_fold(1u64, |acc, &d| acc.checked_mul(d as u64))
        .ok_or(Error::ResourceLimit {
            what: "basis index space",
            needed: dims.iter().map(|&d| d as u128).fold(1u128, |a, b| a.saturating_mul(b)),
            cap: u64::MAX as u128,
        })
}

impl SparseState {
    pub fn new(dims: Vec<usize>, amplitudes: BTreeMap<u64, Complex64>) -> Result<Self> {
        if dims.contains(&0) {
            return invalid("qudit dimensions must be positive");
        }
        let total = total_dimension(&dims)?;
        if let Some((&idx, _)) = amplitudes.iter().next_back() {
            if idx >= total {
                return invalid(format!("basis index {idx} out of range {total}"));
            }
        }
        Ok(Self { dims, amplitudes })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn pair_count(&self) -> usize {
        self.dims.len() / 2
    }

    pub fn amplitudes(&self) -> &BTreeMap<u64, Complex64> {
        &self.amplitudes
    }

    pub fn nnz(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitude(&self, index: u64) -> Complex64 {
        self.amplitudes.get(&index).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn strides(&self) -> Vec<u64> {
        strides(&self.dims)
    }

    pub fn digits(&self, index: u64) -> Vec<usize> {
        decode(index, &self.dims)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &SparseState) -> Result<Complex64> {
        if self.dims != other.dims {
            return invalid(format!("dimension mismatch {:?} vs {:?}", self.dims, other.dims));
        }
        let (small, large, conj_small) = if self.nnz() <= other.nnz() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let mut acc = Complex64::default();
        for (idx, a) in &small.amplitudes {
            if let Some(b) = large.amplitudes.get(idx) {
                acc += if conj_small { a.conj() * b } else { b.conj() * a };
            }
        }
        Ok(acc)
    }

    /// `|⟨a|b⟩|² / (⟨a|a⟩⟨b|b⟩)`; insensitive to global phase.
    pub fn fidelity(&self, other: &SparseState) -> Result<f64> {
        let overlap = self.inner(other)?.norm_sqr();
        Ok(overlap / (self.norm_sqr() * other.norm_sqr()))
    }

    pub fn tensor(&self, other: &SparseState) -> Result<SparseState> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let scale = total_dimension(&other.dims)?;
        total_dimension(&dims)?;
        let mut amplitudes = BTreeMap::new();
        for (i, a) in &self.amplitudes {
            for (j, b) in &other.amplitudes {
                amplitudes.insert(i * scale + j, a * b);
            }
        }
        Ok(SparseState { dims, amplitudes })
    }

    /// Rewrites every basis index through a digit map. The map must be a
    /// bijection of basis states for the result to be unitary.
    fn permute_basis(&self, dims: Vec<usize>, f: impl Fn(&mut Vec<usize>)) -> SparseState {
        let mut digits = Vec::with_capacity(self.dims.len() + 2);
        let mut entries: Vec<(u64, Complex64)> = self
            .amplitudes
            .iter()
            .map(|(&idx, &a)| {
                decode_into(idx, &self.dims, &mut digits);
                f(&mut digits);
                (encode(&digits, &dims), a)
            })
            .collect();
        entries.sort_unstable_by_key(|e| e.0);
        SparseState {
            dims,
            amplitudes: entries.into_iter().collect(),
        }
    }

    fn check_pair(&self, pair: usize) -> Result<()> {
        if pair >= self.pair_count() {
            return invalid(format!("pair {pair} out of range ({} pairs)", self.pair_count()));
        }
        Ok(())
    }

    fn check_qudit(&self, qudit: usize) -> Result<usize> {
        self.dims
            .get(qudit)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("qudit {qudit} out of range")))
    }

    /// BXOR with `source` pair controlling `target` pair (0-based):
    /// `A_t ← A_t ⊕ A_s`, `B_t ← B_t ⊕ B_s`.
    pub fn apply_bxor(&self, source: usize, target: usize) -> Result<SparseState> {
        self.check_pair(source)?;
        self.check_pair(target)?;
        if source == target {
            return invalid("BXOR source and target must differ");
        }
        let d = self.dims[2 * source];
        if self.dims[2 * source + 1] != d || self.dims[2 * target] != d || self.dims[2 * target + 1] != d {
            return invalid("BXOR needs equal local dimensions on both pairs");
        }
        Ok(self.permute_basis(self.dims.clone(), |x| {
            x[2 * target] = (x[2 * target] + x[2 * source]) % d;
            x[2 * target + 1] = (x[2 * target + 1] + x[2 * source + 1]) % d;
        }))
    }

    /// Basis permutation `|j⟩ ↦ |perm[j]⟩` on one qudit.
    pub fn apply_local_permutation(&self, qudit: usize, perm: &[usize]) -> Result<SparseState> {
        let d = self.check_qudit(qudit)?;
        let mut seen = vec![false; d];
        if perm.len() != d || perm.iter().any(|&p| p >= d || std::mem::replace(&mut seen[p], true)) {
            return invalid(format!("{perm:?} is not a permutation of 0..{d}"));
        }
        Ok(self.permute_basis(self.dims.clone(), |x| x[qudit] = perm[x[qudit]]))
    }

    /// Diagonal phase `|j⟩ ↦ ω^{exponents[j]} |j⟩`, `ω = e^{2πi/d}`.
    pub fn apply_local_phase(&self, qudit: usize, exponents: &[u64]) -> Result<SparseState> {
        let d = self.check_qudit(qudit)?;
        if exponents.len() != d {
            return invalid(format!("need {d} phase exponents, got {}", exponents.len()));
        }
        let stride = self.strides()[qudit];
        let amplitudes = self
            .amplitudes
            .iter()
            .map(|(&idx, &a)| {
                let j = ((idx / stride) % d as u64) as usize;
                (idx, a * root_of_unity(exponents[j], d as u64))
            })
            .collect();
        Ok(SparseState {
            dims: self.dims.clone(),
            amplitudes,
        })
    }

    /// Applies a dense `d×d` unitary (row-major, `u[out][in]`) to one qudit.
    pub fn apply_local_unitary(&self, qudit: usize, u: &[Vec<Complex64>]) -> Result<SparseState> {
        let d = self.check_qudit(qudit)?;
        if u.len() != d || u.iter().any(|row| row.len() != d) {
            return invalid(format!("local unitary must be {d}x{d}"));
        }
        let stride = self.strides()[qudit];
        let mut out: BTreeMap<u64, Complex64> = BTreeMap::new();
        for (&idx, &a) in &self.amplitudes {
            let j = (idx / stride) % d as u64;
            let base = idx - j * stride;
            for (row, entries) in u.iter().enumerate() {
                let v = entries[j as usize] * a;
                if v != Complex64::default() {
                    *out.entry(base + row as u64 * stride).or_default() += v;
                }
            }
        }
        out.retain(|_, v| v.norm() > PRUNE);
        Ok(SparseState {
            dims: self.dims.clone(),
            amplitudes: out,
        })
    }

    /// Coordinates in the dual basis on both sides of a pair: `F` on Alice's
    /// qudit and `F†` on Bob's, with `F_{jk} = ω^{jk}/√d`. Under this
    /// convention `φ_mn ↦ ω^{−mn} φ_{n, −m}`.
    pub fn apply_dual_basis(&self, pair: usize) -> Result<SparseState> {
        self.check_pair(pair)?;
        let d = self.dims[2 * pair];
        if self.dims[2 * pair + 1] != d {
            return invalid("dual basis change needs equal local dimensions");
        }
        let f = fourier(d, false);
        let f_dag = fourier(d, true);
        self.apply_local_unitary(2 * pair, &f)?
            .apply_local_unitary(2 * pair + 1, &f_dag)
    }

    /// Inverse of [`SparseState::apply_dual_basis`].
    pub fn apply_dual_basis_inverse(&self, pair: usize) -> Result<SparseState> {
        self.check_pair(pair)?;
        let d = self.dims[2 * pair];
        self.apply_local_unitary(2 * pair, &fourier(d, true))?
            .apply_local_unitary(2 * pair + 1, &fourier(d, false))
    }

    /// Re-reads pair `pair` of dimension `d = g·d̃` as two pairs: the coarse
    /// `(A^g, B^g)` at `pair` and the fine `(A^d̃, B^d̃)` at `pair + 1`, with
    /// `j = a·d̃ + b` on each side.
    pub fn split_pair(&self, pair: usize, d_tilde: usize) -> Result<SparseState> {
        self.check_pair(pair)?;
        let d = self.dims[2 * pair];
        if self.dims[2 * pair + 1] != d || d_tilde == 0 || !d.is_multiple_of(d_tilde) {
            return invalid(format!("cannot split pair of dimension {d} by {d_tilde}"));
        }
        let g = d / d_tilde;
        let mut dims = self.dims[..2 * pair].to_vec();
        dims.extend_from_slice(&[g, g, d_tilde, d_tilde]);
        dims.extend_from_slice(&self.dims[2 * pair + 2..]);
        Ok(self.permute_basis(dims, |x| {
            let (ja, jb) = (x[2 * pair], x[2 * pair + 1]);
            x.splice(
                2 * pair..2 * pair + 2,
                [ja / d_tilde, jb / d_tilde, ja % d_tilde, jb % d_tilde],
            );
        }))
    }

    /// Removes pair `pair`, assuming the state is a product across it.
    ///
    /// Returns the normalized remaining state and the factorization deficit
    /// `1 − ‖rest‖²`, which is zero exactly for product states.
    pub fn remove_pair(&self, pair: usize) -> Result<(SparseState, f64)> {
        self.check_pair(pair)?;
        let mut rest_dims = self.dims.clone();
        let pair_dims = [rest_dims.remove(2 * pair), rest_dims.remove(2 * pair)];
        let split = |idx: u64| {
            let mut digits = decode(idx, &self.dims);
            let pd: Vec<usize> = digits.drain(2 * pair..2 * pair + 2).collect();
            (encode(&digits, &rest_dims), encode(&pd, &pair_dims))
        };
        let norm = self.norm_sqr().sqrt();
        let Some((&peak, _)) = self
            .amplitudes
            .iter()
            .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
        else {
            return invalid("cannot factor the zero vector");
        };
        let (peak_rest, _) = split(peak);
        let mut pair_vec: BTreeMap<u64, Complex64> = BTreeMap::new();
        for (&idx, &a) in &self.amplitudes {
            let (r, p) = split(idx);
            if r == peak_rest {
                pair_vec.insert(p, a);
            }
        }
        let pair_norm = pair_vec.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let mut rest: BTreeMap<u64, Complex64> = BTreeMap::new();
        for (&idx, &a) in &self.amplitudes {
            let (r, p) = split(idx);
            if let Some(v) = pair_vec.get(&p) {
                *rest.entry(r).or_default() += a * v.conj() / (pair_norm * norm);
            }
        }
        rest.retain(|_, v| v.norm() > PRUNE);
        let rest = SparseState {
            dims: rest_dims,
            amplitudes: rest,
        };
        let kept = rest.norm_sqr();
        let scale = 1.0 / kept.sqrt();
        let normalized = SparseState {
            dims: rest.dims,
            amplitudes: rest.amplitudes.into_iter().map(|(i, a)| (i, a * scale)).collect(),
        };
        Ok((normalized, 1.0 - kept))
    }

    /// Outcome distribution of the local flag readout on one pair.
    pub fn flag_distribution(&self, pair: usize, kind: FlagKind) -> Result<BTreeMap<u64, f64>> {
        self.check_pair(pair)?;
        let measured = match kind {
            FlagKind::SumOverN => self.clone(),
            FlagKind::SumOverM => self.apply_dual_basis(pair)?,
        };
        let d = self.dims[2 * pair] as u64;
        let protocol = crate::ensemble::LocalDiscriminationProtocol { kind };
        let total = measured.norm_sqr();
        let mut dist = BTreeMap::new();
        for (&idx, a) in &measured.amplitudes {
            let x = measured.digits(idx);
            let outcome = protocol.infer(x[2 * pair] as u64, x[2 * pair + 1] as u64, d);
            *dist.entry(outcome).or_insert(0.0) += a.norm_sqr() / total;
        }
        Ok(dist)
    }

    /// Probability that pair `pair` is found in `flag`.
    pub fn flag_weight(&self, pair: usize, flag: &FlagSubspace) -> Result<f64> {
        if self.dims[2 * pair] as u64 != flag.d {
            return invalid("flag dimension does not match the pair");
        }
        Ok(self
            .flag_distribution(pair, flag.kind)?
            .get(&flag.value)
            .copied()
            .unwrap_or(0.0))
    }
}

pub(crate) fn strides(dims: &[usize]) -> Vec<u64> {
    let mut out = vec![1u64; dims.len()];
    for q in (0..dims.len().saturating_sub(1)).rev() {
        out[q] = out[q + 1] * dims[q + 1] as u64;
    }
    out
}

pub(crate) fn decode(index: u64, dims: &[usize]) -> Vec<usize> {
    let mut digits = Vec::with_capacity(dims.len());
    decode_into(index, dims, &mut digits);
    digits
}

fn decode_into(mut index: u64, dims: &[usize], digits: &mut Vec<usize>) {
    digits.clear();
    digits.resize(dims.len(), 0);
    for q in (0..dims.len()).rev() {
        let d = dims[q] as u64;
        digits[q] = (index % d) as usize;
        index /= d;
    }
}

pub(crate) fn encode(digits: &[usize], dims: &[usize]) -> u64 {
    digits
        .iter()
        .zip(dims)
        .fold(0u64, |acc, (&x, &d)| acc * d as u64 + x as u64)
}

/// `F_{jk} = ω^{jk}/√d`, or its adjoint.
pub fn fourier(d: usize, adjoint: bool) -> Vec<Vec<Complex64>> {
    let scale = 1.0 / (d as f64).sqrt();
    (0..d)
        .map(|j| {
            (0..d)
                .map(|k| {
                    let e = (j * k) as u64;
                    let e = if adjoint {
                        (d as u64 - e % d as u64) % d as u64
                    } else {
                        e
                    };
                    root_of_unity(e, d as u64) * scale
                })
                .collect()
        })
        .collect()
}

/// `φ_mn(d) = d^{-1/2} Σ_j ω^{jn} |j⟩_A |j ⊕ m⟩_B`.
pub fn build_mes(d: u64, m: u64, n: u64) -> Result<SparseState> {
    let label = MesLabel::new(d, m, n)?;
    Ok(mes_from_label(label))
}

pub fn mes_from_label(label: MesLabel) -> SparseState {
    let (d, m, n) = (label.d(), label.m(), label.n());
    let scale = 1.0 / (d as f64).sqrt();
    let amplitudes = (0..d)
        .map(|j| (j * d + (j + m) % d, root_of_unity(j * n, d) * scale))
        .collect();
    SparseState {
        dims: vec![d as usize, d as usize],
        amplitudes,
    }
}

/// `⊗_i φ_{label_i}` in pair order, refusing more than `cap` amplitudes.
pub fn product_of_labels(labels: &[MesLabel], cap: u64) -> Result<SparseState> {
    let needed = labels.iter().map(|l| l.d() as u128).product::<u128>();
    if needed > cap as u128 {
        return Err(Error::ResourceLimit {
            what: "sparse amplitudes",
            needed,
            cap: cap as u128,
        });
    }
    let mut state = SparseState {
        dims: Vec::new(),
        amplitudes: BTreeMap::from([(0, Complex64::new(1.0, 0.0))]),
    };
    for &label in labels {
        state = state.tensor(&mes_from_label(label))?;
    }
    Ok(state)
}
