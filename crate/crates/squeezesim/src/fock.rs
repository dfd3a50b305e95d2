//! Truncated Fock spaces, tensor products, and sparse mode operators.
//!
//! A [`FockSpace`] is an ordered list of labeled modes with per-mode photon
//! cutoffs N_k; basis states are multi-indices (n_0, …, n_{M−1}) with n_k <
//! N_k, flattened row-major (first mode most significant). Operators are CSR
//! sparse over that basis. Truncation is surfaced, never silent: builders
//! take explicit cutoffs, constructors check adequacy rules, and the
//! interior-projection helpers make boundary-level artifacts removable
//! instead of hidden.
//!
//! Key constructors beyond the ladder operators: the Bogoliubov quasi-mode
//! β̂ = cosh(r)·â + sinh(r)·â† and the squeezed vacuum |Φ_sv⟩ with
//! amplitudes c_{n+2}/c_n = −tanh(r)·√((n+1)/(n+2)) on even levels, which is
//! annihilated by β̂ on the truncation interior.

use crate::linalg::DnMatrix;
use crate::{C64, ONE, ZERO};
use thiserror::Error;

/// Errors from space/operator/state construction and use.
#[derive(Debug, Error, PartialEq)]
pub enum FockError {
    #[error("mode label '{0}' appears more than once")]
    DuplicateLabel(String),
    #[error("unknown mode label '{0}'")]
    UnknownLabel(String),
    #[error("mode '{label}' needs dimension >= 2, got {dim}")]
    DimTooSmall { label: String, dim: usize },
    #[error("a space needs at least one mode")]
    EmptySpace,
    #[error("total dimension {0} exceeds the supported maximum {1}")]
    TooLarge(usize, usize),
    #[error("operands live on different spaces")]
    SpaceMismatch,
    #[error("expected {expected} amplitudes, got {got}")]
    AmplitudeLength { expected: usize, got: usize },
    #[error("mode '{label}' expected dimension {expected}, got {got}")]
    WrongModeDim { label: String, expected: usize, got: usize },
    #[error("truncation inadequate: {0}")]
    TruncationInadequate(String),
    #[error("generator is not anti-Hermitian: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotAntiHermitian { defect: f64, tol: f64 },
    #[error("matrix exponential lost unitarity: defect {0:.3e}")]
    ExponentialDrift(f64),
    #[error("triplet index ({row}, {col}) out of range for dimension {dim}")]
    IndexOutOfRange { row: usize, col: usize, dim: usize },
}

/// Hard cap on total Hilbert-space dimension (dense ρ is dim² complex).
pub const MAX_TOTAL_DIM: usize = 1 << 14;

/// One labeled bosonic (or two-level) mode with photon cutoff `dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mode {
    /// Human-readable label, unique within a space.
    pub label: String,
    /// Local dimension: occupations run 0..dim−1.
    pub dim: usize,
}

/// Ordered tensor product of labeled modes.
#[derive(Clone, Debug, PartialEq)]
pub struct FockSpace {
    modes: Vec<Mode>,
    dim: usize,
    /// Row-major strides: index = Σ_k n_k · stride[k].
    strides: Vec<usize>,
}

impl FockSpace {
    /// Build a space from `(label, dim)` pairs in tensor order.
    pub fn new(modes: &[(&str, usize)]) -> Result<Self, FockError> {
        if modes.is_empty() {
            return Err(FockError::EmptySpace);
        }
        let mut seen: Vec<&str> = Vec::new();
        for (label, dim) in modes {
            if seen.contains(label) {
                return Err(FockError::DuplicateLabel(label.to_string()));
            }
            seen.push(label);
            if *dim < 2 {
                return Err(FockError::DimTooSmall { label: label.to_string(), dim: *dim });
            }
        }
        let mut dim_total: usize = 1;
        for (_, d) in modes {
            dim_total = dim_total
                .checked_mul(*d)
                .filter(|v| *v <= MAX_TOTAL_DIM)
                .ok_or(FockError::TooLarge(usize::MAX, MAX_TOTAL_DIM))?;
        }
        let mut strides = vec![1usize; modes.len()];
        for k in (0..modes.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * modes[k + 1].1;
        }
        Ok(FockSpace {
            modes: modes
                .iter()
                .map(|(l, d)| Mode { label: l.to_string(), dim: *d })
                .collect(),
            dim: dim_total,
            strides,
        })
    }

    /// Single-mode space.
    pub fn single(label: &str, dim: usize) -> Result<Self, FockError> {
        Self::new(&[(label, dim)])
    }

    /// Total Hilbert-space dimension.
    pub fn total_dim(&self) -> usize {
        self.dim
    }

    /// Modes in tensor order.
    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Position of a mode by label.
    pub fn mode_index(&self, label: &str) -> Result<usize, FockError> {
        self.modes
            .iter()
            .position(|m| m.label == label)
            .ok_or_else(|| FockError::UnknownLabel(label.to_string()))
    }

    /// Local dimension of a labeled mode.
    pub fn mode_dim(&self, label: &str) -> Result<usize, FockError> {
        Ok(self.modes[self.mode_index(label)?].dim)
    }

    /// Row-major stride of mode `k`.
    pub fn stride(&self, k: usize) -> usize {
        self.strides[k]
    }

    /// Occupation of mode `k` within flattened basis index `idx`.
    #[inline]
    pub fn occupation(&self, idx: usize, k: usize) -> usize {
        (idx / self.strides[k]) % self.modes[k].dim
    }

    /// Flattened index of a full multi-index.
    pub fn index_of(&self, occupations: &[usize]) -> Result<usize, FockError> {
        if occupations.len() != self.modes.len() {
            return Err(FockError::AmplitudeLength {
                expected: self.modes.len(),
                got: occupations.len(),
            });
        }
        let mut idx = 0;
        for (k, (&n, mode)) in occupations.iter().zip(self.modes.iter()).enumerate() {
            if n >= mode.dim {
                return Err(FockError::IndexOutOfRange { row: n, col: k, dim: mode.dim });
            }
            idx += n * self.strides[k];
        }
        Ok(idx)
    }

    /// Concatenate two spaces (labels must stay unique).
    pub fn tensor(&self, other: &FockSpace) -> Result<FockSpace, FockError> {
        let all: Vec<(&str, usize)> = self
            .modes
            .iter()
            .chain(other.modes.iter())
            .map(|m| (m.label.as_str(), m.dim))
            .collect();
        FockSpace::new(&all)
    }
}

fn ensure_same_space(a: &FockSpace, b: &FockSpace) -> Result<(), FockError> {
    if a == b {
        Ok(())
    } else {
        Err(FockError::SpaceMismatch)
    }
}

/// Sparse (CSR) operator on a [`FockSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: FockSpace,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl Operator {
    /// Zero operator.
    pub fn zero(space: &FockSpace) -> Self {
        Operator {
            space: space.clone(),
            row_ptr: vec![0; space.total_dim() + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Identity operator.
    pub fn identity(space: &FockSpace) -> Self {
        let dim = space.total_dim();
        Operator {
            space: space.clone(),
            row_ptr: (0..=dim).collect(),
            col_idx: (0..dim).collect(),
            values: vec![ONE; dim],
        }
    }

    /// Build from (row, col, value) triplets; duplicates are summed, exact
    /// zeros dropped.
    pub fn from_triplets(
        space: &FockSpace,
        triplets: &[(usize, usize, C64)],
    ) -> Result<Self, FockError> {
        let dim = space.total_dim();
        for &(r, c, _) in triplets {
            if r >= dim || c >= dim {
                return Err(FockError::IndexOutOfRange { row: r, col: c, dim });
            }
        }
        let mut sorted: Vec<(usize, usize, C64)> = triplets.to_vec();
        sorted.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<C64> = Vec::with_capacity(sorted.len());
        let mut rows_seen = vec![0usize; dim];
        let mut i = 0;
        while i < sorted.len() {
            let (r, c, mut v) = sorted[i];
            i += 1;
            while i < sorted.len() && sorted[i].0 == r && sorted[i].1 == c {
                v += sorted[i].2;
                i += 1;
            }
            if v != ZERO {
                rows_seen[r] += 1;
                col_idx.push(c);
                values.push(v);
            }
        }
        let mut acc = 0;
        for r in 0..dim {
            row_ptr[r] = acc;
            acc += rows_seen[r];
        }
        row_ptr[dim] = acc;
        // col_idx/values are already grouped by row in sorted order.
        Ok(Operator { space: space.clone(), row_ptr, col_idx, values })
    }

    /// Annihilation operator â of a labeled mode: ⟨n−1|â|n⟩ = √n.
    pub fn annihilation(space: &FockSpace, label: &str) -> Result<Self, FockError> {
        let k = space.mode_index(label)?;
        let dk = space.modes()[k].dim;
        let stride = space.stride(k);
        let dim = space.total_dim();
        let mut trips = Vec::with_capacity(dim - dim / dk);
        for row in 0..dim {
            let n = space.occupation(row, k);
            if n + 1 < dk {
                trips.push((row, row + stride, C64::new(((n + 1) as f64).sqrt(), 0.0)));
            }
        }
        Self::from_triplets(space, &trips)
    }

    /// Creation operator â† of a labeled mode.
    pub fn creation(space: &FockSpace, label: &str) -> Result<Self, FockError> {
        Ok(Self::annihilation(space, label)?.adjoint())
    }

    /// Number operator n̂ of a labeled mode.
    pub fn number(space: &FockSpace, label: &str) -> Result<Self, FockError> {
        let k = space.mode_index(label)?;
        let trips: Vec<_> = (0..space.total_dim())
            .map(|row| (row, row, C64::new(space.occupation(row, k) as f64, 0.0)))
            .collect();
        Self::from_triplets(space, &trips)
    }

    /// σ̂_z on a two-level mode: diag(−1, +1) in the (|g⟩=0, |e⟩=1) basis.
    pub fn sigma_z(space: &FockSpace, label: &str) -> Result<Self, FockError> {
        let k = space.mode_index(label)?;
        let dk = space.modes()[k].dim;
        if dk != 2 {
            return Err(FockError::WrongModeDim { label: label.to_string(), expected: 2, got: dk });
        }
        let trips: Vec<_> = (0..space.total_dim())
            .map(|row| {
                let s = if space.occupation(row, k) == 0 { -1.0 } else { 1.0 };
                (row, row, C64::new(s, 0.0))
            })
            .collect();
        Self::from_triplets(space, &trips)
    }

    /// σ̂₋ = |g⟩⟨e| on a two-level mode (same matrix as `annihilation`).
    pub fn sigma_minus(space: &FockSpace, label: &str) -> Result<Self, FockError> {
        let k = space.mode_index(label)?;
        let dk = space.modes()[k].dim;
        if dk != 2 {
            return Err(FockError::WrongModeDim { label: label.to_string(), expected: 2, got: dk });
        }
        Self::annihilation(space, label)
    }

    /// The space this operator acts on.
    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    /// Number of stored nonzeros.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// CSR internals: (row_ptr, col_idx, values).
    pub fn csr(&self) -> (&[usize], &[usize], &[C64]) {
        (&self.row_ptr, &self.col_idx, &self.values)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Operator {
        let dim = self.space.total_dim();
        let mut counts = vec![0usize; dim + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..dim {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut col_idx = vec![0usize; self.values.len()];
        let mut values = vec![ZERO; self.values.len()];
        let mut cursor = counts;
        for r in 0..dim {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[i];
                let pos = cursor[c];
                cursor[c] += 1;
                col_idx[pos] = r;
                values[pos] = self.values[i].conj();
            }
        }
        Operator { space: self.space.clone(), row_ptr, col_idx, values }
    }

    /// self + other.
    pub fn checked_add(&self, other: &Operator) -> Result<Operator, FockError> {
        ensure_same_space(&self.space, &other.space)?;
        Operator::sum(&self.space, &[(ONE, self), (ONE, other)])
    }

    /// self − other.
    pub fn checked_sub(&self, other: &Operator) -> Result<Operator, FockError> {
        ensure_same_space(&self.space, &other.space)?;
        Operator::sum(&self.space, &[(ONE, self), (-ONE, other)])
    }

    /// c · self.
    pub fn scaled(&self, c: C64) -> Operator {
        if c == ZERO {
            return Operator::zero(&self.space);
        }
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v *= c;
        }
        out
    }

    /// Linear combination Σ c_i · op_i on a shared space.
    pub fn sum(space: &FockSpace, terms: &[(C64, &Operator)]) -> Result<Operator, FockError> {
        let dim = space.total_dim();
        for (_, op) in terms {
            ensure_same_space(space, &op.space)?;
        }
        // Row-wise merge with a dense scratch row (dims are modest).
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut scratch = vec![ZERO; dim];
        let mut touched: Vec<usize> = Vec::new();
        for r in 0..dim {
            for (c, op) in terms {
                if *c == ZERO {
                    continue;
                }
                for i in op.row_ptr[r]..op.row_ptr[r + 1] {
                    let col = op.col_idx[i];
                    if scratch[col] == ZERO {
                        touched.push(col);
                    }
                    scratch[col] += *c * op.values[i];
                }
            }
            touched.sort_unstable();
            for &col in &touched {
                let v = scratch[col];
                scratch[col] = ZERO;
                if v != ZERO {
                    col_idx.push(col);
                    values.push(v);
                }
            }
            touched.clear();
            row_ptr[r + 1] = col_idx.len();
        }
        Ok(Operator { space: space.clone(), row_ptr, col_idx, values })
    }

    /// Sparse product self · other.
    pub fn matmul(&self, other: &Operator) -> Result<Operator, FockError> {
        ensure_same_space(&self.space, &other.space)?;
        let dim = self.space.total_dim();
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut scratch = vec![ZERO; dim];
        let mut touched: Vec<usize> = Vec::new();
        for r in 0..dim {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                let k = self.col_idx[i];
                let a = self.values[i];
                for j in other.row_ptr[k]..other.row_ptr[k + 1] {
                    let col = other.col_idx[j];
                    if scratch[col] == ZERO {
                        touched.push(col);
                    }
                    scratch[col] += a * other.values[j];
                }
            }
            touched.sort_unstable();
            for &col in &touched {
                let v = scratch[col];
                scratch[col] = ZERO;
                if v != ZERO {
                    col_idx.push(col);
                    values.push(v);
                }
            }
            touched.clear();
            row_ptr[r + 1] = col_idx.len();
        }
        Ok(Operator { space: self.space.clone(), row_ptr, col_idx, values })
    }

    /// Commutator [self, other].
    pub fn commutator(&self, other: &Operator) -> Result<Operator, FockError> {
        self.matmul(other)?.checked_sub(&other.matmul(self)?)
    }

    /// Apply to a state vector: self·|ψ⟩.
    pub fn apply(&self, psi: &StateVector) -> Result<StateVector, FockError> {
        ensure_same_space(&self.space, &psi.space)?;
        let mut out = vec![ZERO; psi.amp.len()];
        for r in 0..self.space.total_dim() {
            let mut acc = ZERO;
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[i] * psi.amp[self.col_idx[i]];
            }
            out[r] = acc;
        }
        Ok(StateVector { space: self.space.clone(), amp: out })
    }

    /// ⟨ψ|self|ψ⟩.
    pub fn expectation_state(&self, psi: &StateVector) -> Result<C64, FockError> {
        let ap = self.apply(psi)?;
        Ok(psi.inner(&ap)?)
    }

    /// Tr(self · ρ) for a dense density matrix.
    pub fn expectation(&self, rho: &DnMatrix) -> C64 {
        debug_assert_eq!(rho.rows, self.space.total_dim());
        let mut acc = ZERO;
        for r in 0..self.space.total_dim() {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[i] * rho.get(self.col_idx[i], r);
            }
        }
        acc
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Induced ∞-norm (max row absolute sum).
    pub fn inf_norm(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.space.total_dim() {
            let s: f64 = (self.row_ptr[r]..self.row_ptr[r + 1]).map(|i| self.values[i].norm()).sum();
            worst = worst.max(s);
        }
        worst
    }

    /// Hermiticity defect max|A − A†|.
    pub fn hermiticity_defect(&self) -> f64 {
        self.checked_sub(&self.adjoint()).expect("same space").max_abs()
    }

    /// Dense copy.
    pub fn to_dense(&self) -> DnMatrix {
        let dim = self.space.total_dim();
        let mut m = DnMatrix::zeros(dim, dim);
        for r in 0..dim {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                m.set(r, self.col_idx[i], self.values[i]);
            }
        }
        m
    }

    /// Rebuild from a dense matrix, keeping entries with |v| > drop_tol.
    pub fn from_dense(space: &FockSpace, m: &DnMatrix, drop_tol: f64) -> Result<Self, FockError> {
        let dim = space.total_dim();
        let mut trips = Vec::new();
        for r in 0..dim {
            for c in 0..dim {
                let v = m.get(r, c);
                if v.norm() > drop_tol {
                    trips.push((r, c, v));
                }
            }
        }
        Self::from_triplets(space, &trips)
    }
}

/// Pure state on a [`FockSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: FockSpace,
    amp: Vec<C64>,
}

impl StateVector {
    /// Joint vacuum |0, 0, …⟩.
    pub fn vacuum(space: &FockSpace) -> Self {
        let mut amp = vec![ZERO; space.total_dim()];
        amp[0] = ONE;
        StateVector { space: space.clone(), amp }
    }

    /// Basis state with the given occupations.
    pub fn basis_state(space: &FockSpace, occupations: &[usize]) -> Result<Self, FockError> {
        let idx = space.index_of(occupations)?;
        let mut amp = vec![ZERO; space.total_dim()];
        amp[idx] = ONE;
        Ok(StateVector { space: space.clone(), amp })
    }

    /// Wrap raw amplitudes (length must match the space).
    pub fn from_amplitudes(space: &FockSpace, amp: Vec<C64>) -> Result<Self, FockError> {
        if amp.len() != space.total_dim() {
            return Err(FockError::AmplitudeLength { expected: space.total_dim(), got: amp.len() });
        }
        Ok(StateVector { space: space.clone(), amp })
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amp
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<C64, FockError> {
        ensure_same_space(&self.space, &other.space)?;
        Ok(self.amp.iter().zip(other.amp.iter()).map(|(a, b)| a.conj() * b).sum())
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// self scaled to unit norm.
    pub fn normalized(&self) -> StateVector {
        let n = self.norm();
        let mut out = self.clone();
        if n > 0.0 {
            let inv = C64::new(1.0 / n, 0.0);
            for a in out.amp.iter_mut() {
                *a *= inv;
            }
        }
        out
    }

    /// self + c·other.
    pub fn add_scaled(&self, c: C64, other: &StateVector) -> Result<StateVector, FockError> {
        ensure_same_space(&self.space, &other.space)?;
        let amp = self
            .amp
            .iter()
            .zip(other.amp.iter())
            .map(|(a, b)| a + c * b)
            .collect();
        Ok(StateVector { space: self.space.clone(), amp })
    }

    /// c·self.
    pub fn scaled(&self, c: C64) -> StateVector {
        let mut out = self.clone();
        for a in out.amp.iter_mut() {
            *a *= c;
        }
        out
    }

    /// Tensor product with a state on another space.
    pub fn kron(&self, other: &StateVector) -> Result<StateVector, FockError> {
        let space = self.space.tensor(&other.space)?;
        let mut amp = Vec::with_capacity(self.amp.len() * other.amp.len());
        for a in &self.amp {
            for b in &other.amp {
                amp.push(a * b);
            }
        }
        Ok(StateVector { space, amp })
    }

    /// Zero every amplitude whose occupation of `label` lies in the top `k`
    /// levels (occupation ≥ N_label − k). Not renormalized.
    ///
    /// Truncation artifacts of ladder-operator identities live entirely in
    /// those boundary levels; projecting them out exposes the interior block
    /// on which the identities hold exactly.
    pub fn zero_top_levels(&self, label: &str, k: usize) -> Result<StateVector, FockError> {
        let m = self.space.mode_index(label)?;
        let dk = self.space.modes()[m].dim;
        let cut = dk.saturating_sub(k);
        let mut out = self.clone();
        for (idx, a) in out.amp.iter_mut().enumerate() {
            if self.space.occupation(idx, m) >= cut {
                *a = ZERO;
            }
        }
        Ok(out)
    }

    /// |ψ⟩⟨ψ| as a dense matrix.
    pub fn density_matrix(&self) -> DnMatrix {
        let dim = self.amp.len();
        let mut m = DnMatrix::zeros(dim, dim);
        for r in 0..dim {
            if self.amp[r] == ZERO {
                continue;
            }
            for c in 0..dim {
                m.set(r, c, self.amp[r] * self.amp[c].conj());
            }
        }
        m
    }

    /// Marginal occupation distribution of one mode: P(n) for n < N_label.
    pub fn occupation_populations(&self, label: &str) -> Result<Vec<f64>, FockError> {
        let k = self.space.mode_index(label)?;
        let dk = self.space.modes()[k].dim;
        let mut p = vec![0.0; dk];
        for (idx, a) in self.amp.iter().enumerate() {
            p[self.space.occupation(idx, k)] += a.norm_sqr();
        }
        Ok(p)
    }
}

/// Marginal occupation distribution of one mode of a density matrix.
pub fn occupation_populations(
    rho: &DnMatrix,
    space: &FockSpace,
    label: &str,
) -> Result<Vec<f64>, FockError> {
    let k = space.mode_index(label)?;
    let dk = space.modes()[k].dim;
    let mut p = vec![0.0; dk];
    for idx in 0..space.total_dim() {
        p[space.occupation(idx, k)] += rho.get(idx, idx).re;
    }
    Ok(p)
}

/// Partial trace keeping the listed modes (in their original order).
///
/// Returns the reduced space and the reduced density matrix.
pub fn partial_trace(
    rho: &DnMatrix,
    space: &FockSpace,
    keep: &[&str],
) -> Result<(FockSpace, DnMatrix), FockError> {
    let dim = space.total_dim();
    if rho.rows != dim || rho.cols != dim {
        return Err(FockError::AmplitudeLength { expected: dim, got: rho.rows });
    }
    let mut keep_idx: Vec<usize> = Vec::new();
    for label in keep {
        keep_idx.push(space.mode_index(label)?);
    }
    keep_idx.sort_unstable();
    keep_idx.dedup();
    if keep_idx.is_empty() {
        return Err(FockError::EmptySpace);
    }
    let kept_modes: Vec<(&str, usize)> =
        keep_idx.iter().map(|&k| (space.modes()[k].label.as_str(), space.modes()[k].dim)).collect();
    let out_space = FockSpace::new(&kept_modes)?;
    // Precompute (kept part, traced part) of every flattened index.
    let mut kept_part = vec![0usize; dim];
    let mut traced_part = vec![0usize; dim];
    for idx in 0..dim {
        let mut kp = 0usize;
        let mut tp = 0usize;
        let mut kpos = 0usize;
        for (m, _mode) in space.modes().iter().enumerate() {
            let n = space.occupation(idx, m);
            if kpos < keep_idx.len() && keep_idx[kpos] == m {
                kp = kp * space.modes()[m].dim + n;
                kpos += 1;
            } else {
                tp = tp * space.modes()[m].dim + n;
            }
        }
        kept_part[idx] = kp;
        traced_part[idx] = tp;
    }
    let od = out_space.total_dim();
    let mut out = DnMatrix::zeros(od, od);
    for r in 0..dim {
        for c in 0..dim {
            if traced_part[r] == traced_part[c] {
                let v = out.get(kept_part[r], kept_part[c]) + rho.get(r, c);
                out.set(kept_part[r], kept_part[c], v);
            }
        }
    }
    Ok((out_space, out))
}

/// Bogoliubov quasi-mode operator β̂ = cosh(r)·â + sinh(r)·â†.
pub fn bogoliubov_operator(space: &FockSpace, label: &str, r: f64) -> Result<Operator, FockError> {
    let a = Operator::annihilation(space, label)?;
    let adag = a.adjoint();
    Operator::sum(
        space,
        &[(C64::new(r.cosh(), 0.0), &a), (C64::new(r.sinh(), 0.0), &adag)],
    )
}

/// Squeezed vacuum |Φ_sv⟩ of one mode (others in vacuum), renormalized after
/// truncation.
///
/// Even-level amplitudes follow c_{n+2}/c_n = −tanh(r)·√((n+1)/(n+2)); odd
/// levels are exactly zero. Requires sinh²(r) ≤ N/6 so the truncated state
/// carries the intended squeezing.
pub fn squeezed_vacuum_state(
    space: &FockSpace,
    label: &str,
    r: f64,
) -> Result<StateVector, FockError> {
    let k = space.mode_index(label)?;
    let dk = space.modes()[k].dim;
    if r.sinh().powi(2) > dk as f64 / 6.0 {
        return Err(FockError::TruncationInadequate(format!(
            "squeezed vacuum with sinh^2(r) = {:.3} needs mode dimension >= {:.0}, got {}",
            r.sinh().powi(2),
            6.0 * r.sinh().powi(2),
            dk
        )));
    }
    let stride = space.stride(k);
    let mut amp = vec![ZERO; space.total_dim()];
    let t = r.tanh();
    let mut c = 1.0f64;
    let mut n = 0usize;
    loop {
        amp[n * stride] = C64::new(c, 0.0);
        if n + 2 >= dk {
            break;
        }
        c *= -t * (((n + 1) as f64) / ((n + 2) as f64)).sqrt();
        n += 2;
    }
    Ok(StateVector { space: space.clone(), amp }.normalized())
}

/// e^{Ĝ}|ψ⟩ for an anti-Hermitian generator Ĝ, by scaling and squaring of
/// the Taylor series applied to the vector.
///
/// Preconditions: Ĝ anti-Hermitian within 1e−10 (max-entry defect relative
/// to max(1, ‖Ĝ‖_max)). Postcondition: the norm is preserved to 1e−10
/// relative (unitarity at the used truncation), else an error is returned.
pub fn matrix_exponential_apply_state(
    gen: &Operator,
    psi: &StateVector,
) -> Result<StateVector, FockError> {
    ensure_same_space(&gen.space, &psi.space)?;
    let tol = 1e-10 * gen.max_abs().max(1.0);
    let defect = gen.checked_add(&gen.adjoint())?.max_abs();
    if defect > tol {
        return Err(FockError::NotAntiHermitian { defect, tol });
    }
    let norm_in = psi.norm();
    let scale = gen.inf_norm();
    let s = if scale > 0.5 { (scale / 0.5).log2().ceil() as u32 } else { 0 };
    let m = 1u64 << s.min(40);
    let inv_m = 1.0 / m as f64;
    let mut y = psi.clone();
    for _ in 0..m {
        let mut acc = y.clone();
        let mut term = y.clone();
        for k in 1..=60u32 {
            term = gen.apply(&term)?.scaled(C64::new(inv_m / k as f64, 0.0));
            acc = acc.add_scaled(ONE, &term)?;
            if term.norm() <= 1e-18 * acc.norm().max(1e-300) {
                break;
            }
        }
        y = acc;
    }
    let drift = (y.norm() - norm_in).abs() / norm_in.max(1e-300);
    if drift > 1e-10 {
        return Err(FockError::ExponentialDrift(drift));
    }
    Ok(y)
}

/// e^{Ĝ}·Â·e^{−Ĝ} for an anti-Hermitian generator (unitary frame change of
/// an operator). Dense intermediate — intended for constructor-sized spaces.
pub fn matrix_exponential_conjugate(gen: &Operator, op: &Operator) -> Result<Operator, FockError> {
    ensure_same_space(&gen.space, &op.space)?;
    let tol = 1e-10 * gen.max_abs().max(1.0);
    let defect = gen.checked_add(&gen.adjoint())?.max_abs();
    if defect > tol {
        return Err(FockError::NotAntiHermitian { defect, tol });
    }
    let dim = gen.space.total_dim();
    let scale = gen.inf_norm();
    let s = if scale > 0.25 { (scale / 0.25).log2().ceil() as u32 } else { 0 };
    let m = 2.0f64.powi(s as i32);
    // Taylor series of exp(G/m), then square s times.
    let gd = gen.to_dense();
    let mut e = DnMatrix::identity(dim);
    let mut term = DnMatrix::identity(dim);
    for k in 1..=30u32 {
        term = gd.matmul(&term);
        term.scale(C64::new(1.0 / (m * k as f64), 0.0));
        e.add_scaled(ONE, &term);
        if term.max_abs() <= 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        e = e.matmul(&e);
    }
    let unit_defect = {
        let mut ee = e.matmul(&e.adjoint());
        ee.add_scaled(-ONE, &DnMatrix::identity(dim));
        ee.max_abs()
    };
    if unit_defect > 1e-10 {
        return Err(FockError::ExponentialDrift(unit_defect));
    }
    let out = e.matmul(&op.to_dense()).matmul(&e.adjoint());
    Operator::from_dense(&gen.space, &out, 0.0)
}

/// Poisson upper tail P(n ≥ from_level) for mean occupation `nbar`.
///
/// Coherent-amplitude truncation estimate: a displaced mode of amplitude α
/// has Poissonian number statistics with n̄ = |α|².
pub fn poisson_top_tail(nbar: f64, from_level: usize) -> f64 {
    if nbar <= 0.0 {
        return 0.0;
    }
    // Work in log space to survive large n̄ and deep tails.
    let ln_nbar = nbar.ln();
    let mut ln_fact = 0.0f64;
    let mut tail = 0.0f64;
    let mut below = 0.0f64;
    for k in 0..(from_level + 400) {
        if k > 0 {
            ln_fact += (k as f64).ln();
        }
        let ln_p = -nbar + k as f64 * ln_nbar - ln_fact;
        let p = ln_p.exp();
        if k >= from_level {
            tail += p;
            if p < 1e-30 * tail.max(1e-280) && k > from_level + 5 && (k as f64) > nbar {
                break;
            }
        } else {
            below += p;
        }
    }
    // Guard against accumulated rounding: the tail is also 1 − Σ_below.
    tail.min((1.0 - below).max(0.0)).max(0.0)
}

/// Squeezed-vacuum upper tail Σ_{even n ≥ from_level} P(n) for squeeze r.
///
/// P(2m) = (2m)! / (4^m (m!)²) · tanh^{2m}(r)/cosh(r); the ratio
/// P(2m+2)/P(2m) = tanh²(r)·(2m+1)/(2m+2) → geometric decay at rate
/// tanh²(r), far heavier than Poissonian.
pub fn squeezed_top_tail(r: f64, from_level: usize) -> f64 {
    let t2 = r.tanh().powi(2);
    if t2 == 0.0 {
        return 0.0;
    }
    let mut p = 1.0 / r.cosh(); // P(0)
    let mut m = 0usize;
    let mut tail = 0.0f64;
    loop {
        if 2 * m >= from_level {
            tail += p;
            // Conservative geometric bound on the remainder.
            if p * t2 / (1.0 - t2) < 1e-30 * tail.max(1e-280) {
                break;
            }
        }
        p *= t2 * (2 * m + 1) as f64 / (2 * m + 2) as f64;
        m += 1;
        if m > from_level / 2 + 4000 {
            tail += p / (1.0 - t2);
            break;
        }
    }
    tail.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn space_indexing_round_trip() {
        let sp = FockSpace::new(&[("pump", 3), ("signal", 4)]).unwrap();
        assert_eq!(sp.total_dim(), 12);
        assert_eq!(sp.stride(0), 4);
        assert_eq!(sp.stride(1), 1);
        let idx = sp.index_of(&[2, 3]).unwrap();
        assert_eq!(idx, 11);
        assert_eq!(sp.occupation(idx, 0), 2);
        assert_eq!(sp.occupation(idx, 1), 3);
        assert!(matches!(
            FockSpace::new(&[("a", 2), ("a", 3)]),
            Err(FockError::DuplicateLabel(_))
        ));
        assert!(matches!(FockSpace::new(&[("a", 1)]), Err(FockError::DimTooSmall { .. })));
    }

    #[test]
    fn annihilation_matrix_elements() {
        let sp = FockSpace::single("m", 5).unwrap();
        let a = Operator::annihilation(&sp, "m").unwrap();
        let d = a.to_dense();
        for n in 1..5usize {
            assert!((d.get(n - 1, n) - C64::new((n as f64).sqrt(), 0.0)).norm() < 1e-15);
        }
        assert_eq!(a.nnz(), 4);
        // a|2> = sqrt(2)|1>
        let psi = StateVector::basis_state(&sp, &[2]).unwrap();
        let out = a.apply(&psi).unwrap();
        assert!((out.amplitudes()[1] - C64::new(2.0f64.sqrt(), 0.0)).norm() < 1e-15);
    }

    #[test]
    fn commutator_identity_on_interior() {
        let sp = FockSpace::single("m", 20).unwrap();
        let a = Operator::annihilation(&sp, "m").unwrap();
        let comm = a.commutator(&a.adjoint()).unwrap().to_dense();
        // [a, a†] = 1 except the last diagonal entry (truncation boundary
        // carries 1 − N).
        for n in 0..19 {
            assert!((comm.get(n, n) - ONE).norm() < 1e-14);
        }
        assert!((comm.get(19, 19) - C64::new(1.0 - 20.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn embedded_operators_commute_across_modes() {
        let sp = FockSpace::new(&[("p", 4), ("s", 5)]).unwrap();
        let ap = Operator::annihilation(&sp, "p").unwrap();
        let as_ = Operator::annihilation(&sp, "s").unwrap();
        assert_eq!(ap.commutator(&as_).unwrap().nnz(), 0);
        assert_eq!(ap.commutator(&as_.adjoint()).unwrap().nnz(), 0);
        // Number operators add independently.
        let np = Operator::number(&sp, "p").unwrap();
        let psi = StateVector::basis_state(&sp, &[2, 3]).unwrap();
        let n = np.expectation_state(&psi).unwrap();
        assert!((n - C64::new(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn operator_sum_and_matmul_agree_with_dense() {
        let sp = FockSpace::single("m", 6).unwrap();
        let a = Operator::annihilation(&sp, "m").unwrap();
        let n = Operator::number(&sp, "m").unwrap();
        // a†a == n as matrices.
        let rebuilt = a.adjoint().matmul(&a).unwrap();
        assert!(rebuilt.to_dense().max_abs_diff(&n.to_dense()) < 1e-14);
        let s = Operator::sum(&sp, &[(C64::new(2.0, 0.0), &n), (-ONE, &n)]).unwrap();
        assert!(s.to_dense().max_abs_diff(&n.to_dense()) < 1e-15);
    }

    #[test]
    fn from_triplets_merges_duplicates() {
        let sp = FockSpace::single("m", 3).unwrap();
        let op = Operator::from_triplets(
            &sp,
            &[(0, 1, ONE), (0, 1, ONE), (2, 2, C64::new(0.5, 0.0)), (1, 1, ZERO)],
        )
        .unwrap();
        assert_eq!(op.nnz(), 2);
        assert!((op.to_dense().get(0, 1) - C64::new(2.0, 0.0)).norm() < 1e-15);
        assert!(matches!(
            Operator::from_triplets(&sp, &[(3, 0, ONE)]),
            Err(FockError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn bogoliubov_commutation_on_interior() {
        // [β, β†] = (cosh² − sinh²)[a, a†] = 1 on the interior block.
        let sp = FockSpace::single("m", 24).unwrap();
        let beta = bogoliubov_operator(&sp, "m", 0.3).unwrap();
        let comm = beta.commutator(&beta.adjoint()).unwrap().to_dense();
        for n in 0..20 {
            assert!((comm.get(n, n) - ONE).norm() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn squeezed_vacuum_moments_and_parity() {
        let sp = FockSpace::single("m", 40).unwrap();
        let r = 0.5f64;
        let phi = squeezed_vacuum_state(&sp, "m", r).unwrap();
        assert!((phi.norm() - 1.0).abs() < 1e-14);
        // Odd amplitudes exactly zero.
        for (idx, a) in phi.amplitudes().iter().enumerate() {
            if idx % 2 == 1 {
                assert_eq!(*a, ZERO);
            }
        }
        // <n> = sinh²r, <aa> = −cosh r sinh r, ξ² = e^{−2r}.
        let a = Operator::annihilation(&sp, "m").unwrap();
        let n = a.adjoint().matmul(&a).unwrap().expectation_state(&phi).unwrap().re;
        let m = a.matmul(&a).unwrap().expectation_state(&phi).unwrap();
        assert!((n - r.sinh().powi(2)).abs() < 1e-10);
        assert!((m.re + r.cosh() * r.sinh()).abs() < 1e-10);
        assert!(m.im.abs() < 1e-14);
        let xi2 = 1.0 + 2.0 * (n - m.norm());
        assert!((xi2 - (-2.0 * r).exp()).abs() < 1e-10);
    }

    #[test]
    fn squeezed_vacuum_is_bogoliubov_vacuum_on_interior() {
        let sp = FockSpace::single("m", 40).unwrap();
        for r in [0.2, 0.5, 0.8673005276940532, 1.0] {
            let phi = squeezed_vacuum_state(&sp, "m", r).unwrap();
            let beta = bogoliubov_operator(&sp, "m", r).unwrap();
            let res = beta.apply(&phi).unwrap().zero_top_levels("m", 2).unwrap();
            assert!(res.norm() < 1e-12, "r = {r}: interior norm {}", res.norm());
        }
        // Truncation precondition: sinh²(r) ≤ N/6.
        let tiny = FockSpace::single("m", 8).unwrap();
        assert!(matches!(
            squeezed_vacuum_state(&tiny, "m", 1.2),
            Err(FockError::TruncationInadequate(_))
        ));
    }

    #[test]
    fn annihilated_squeezed_vacuum_matches_excited_quasimode() {
        // â|Φ_sv⟩ = −sinh(r)·β̂†|Φ_sv⟩ exactly on the truncation interior.
        let sp = FockSpace::single("m", 40).unwrap();
        for r in [0.5, 0.8673005276940532, 1.0] {
            let phi = squeezed_vacuum_state(&sp, "m", r).unwrap();
            let a = Operator::annihilation(&sp, "m").unwrap();
            let beta_dag = bogoliubov_operator(&sp, "m", r).unwrap().adjoint();
            let lhs = a.apply(&phi).unwrap();
            let one_beta = beta_dag.apply(&phi).unwrap();
            let combo = lhs
                .add_scaled(C64::new(r.sinh(), 0.0), &one_beta)
                .unwrap()
                .zero_top_levels("m", 2)
                .unwrap();
            assert!(combo.norm() < 1e-12, "r = {r}: {}", combo.norm());
        }
    }

    #[test]
    fn displacement_produces_poisson_amplitudes() {
        // exp(α↠− α*â)|0⟩ has amplitudes e^{−|α|²/2} αⁿ/√n!.
        let sp = FockSpace::single("m", 30).unwrap();
        let alpha = C64::new(0.7, -0.4);
        let a = Operator::annihilation(&sp, "m").unwrap();
        let gen = Operator::sum(
            &sp,
            &[(alpha, &a.adjoint()), (-alpha.conj(), &a)],
        )
        .unwrap();
        let out = matrix_exponential_apply_state(&gen, &StateVector::vacuum(&sp)).unwrap();
        let mut fact = 1.0f64;
        for n in 0..12 {
            if n > 0 {
                fact *= n as f64;
            }
            let direct = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0) * alpha.powu(n as u32)
                / C64::new(fact.sqrt(), 0.0);
            assert!((out.amplitudes()[n] - direct).norm() < 1e-12, "n = {n}");
        }
        assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exponential_rejects_non_antihermitian() {
        let sp = FockSpace::single("m", 5).unwrap();
        let n = Operator::number(&sp, "m").unwrap(); // Hermitian, not anti-
        let psi = StateVector::vacuum(&sp);
        assert!(matches!(
            matrix_exponential_apply_state(&n, &psi),
            Err(FockError::NotAntiHermitian { .. })
        ));
    }

    #[test]
    fn conjugation_displaces_ladder_operator() {
        // e^G â e^{−G} = â + α for G = −(α↠− α*â). Truncation corrections
        // enter at the cutoff with O(N) weight and decay into the interior
        // like α^d/d!, so the identity is asserted on a deep interior block.
        let sp = FockSpace::single("m", 24).unwrap();
        let alpha = C64::new(0.3, 0.2);
        let a = Operator::annihilation(&sp, "m").unwrap();
        let gen = Operator::sum(&sp, &[(-alpha, &a.adjoint()), (alpha.conj(), &a)]).unwrap();
        let moved = matrix_exponential_conjugate(&gen, &a).unwrap();
        let shifted = a
            .checked_add(&Operator::identity(&sp).scaled(alpha))
            .unwrap();
        let diff = moved.checked_sub(&shifted).unwrap().to_dense();
        let mut worst = 0.0f64;
        for r in 0..12 {
            for c in 0..12 {
                worst = worst.max(diff.get(r, c).norm());
            }
        }
        assert!(worst < 1e-9, "interior defect {worst}");
        // Cross-check the dense exponential against the vector-Taylor one:
        // (E â E†)|0⟩ must equal E·(â·(E†|0⟩)) computed stage by stage.
        let vac = StateVector::vacuum(&sp);
        let w1 = moved.apply(&vac).unwrap();
        let back = matrix_exponential_apply_state(&gen.scaled(-ONE), &vac).unwrap();
        let mid = a.apply(&back).unwrap();
        let w2 = matrix_exponential_apply_state(&gen, &mid).unwrap();
        let delta = w1.add_scaled(-ONE, &w2).unwrap().norm();
        assert!(delta < 1e-10, "path mismatch {delta}");
    }

    #[test]
    fn partial_trace_of_product_state() {
        let sp_p = FockSpace::single("p", 3).unwrap();
        let sp_q = FockSpace::single("q", 2).unwrap();
        let psi_p = StateVector::basis_state(&sp_p, &[1]).unwrap();
        let psi_q = StateVector::from_amplitudes(
            &sp_q,
            vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)],
        )
        .unwrap();
        let joint = psi_p.kron(&psi_q).unwrap();
        let rho = joint.density_matrix();
        let (sp_red, red) = partial_trace(&rho, joint.space(), &["q"]).unwrap();
        assert_eq!(sp_red.total_dim(), 2);
        assert!((red.get(0, 0).re - 0.36).abs() < 1e-14);
        assert!((red.get(1, 1).re - 0.64).abs() < 1e-14);
        assert!((red.get(0, 1) - C64::new(0.0, -0.48)).norm() < 1e-14);
        assert!((red.trace().re - 1.0).abs() < 1e-14);
        // Tracing out the qubit instead leaves |1><1| on the pump.
        let (_, red_p) = partial_trace(&rho, joint.space(), &["p"]).unwrap();
        assert!((red_p.get(1, 1).re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sigma_operators_require_two_levels() {
        let sp = FockSpace::new(&[("qubit", 2), ("mode", 4)]).unwrap();
        let sz = Operator::sigma_z(&sp, "qubit").unwrap();
        let psi_g = StateVector::basis_state(&sp, &[0, 0]).unwrap();
        let psi_e = StateVector::basis_state(&sp, &[1, 0]).unwrap();
        assert!((sz.expectation_state(&psi_g).unwrap().re + 1.0).abs() < 1e-15);
        assert!((sz.expectation_state(&psi_e).unwrap().re - 1.0).abs() < 1e-15);
        assert!(matches!(
            Operator::sigma_z(&sp, "mode"),
            Err(FockError::WrongModeDim { .. })
        ));
        let sm = Operator::sigma_minus(&sp, "qubit").unwrap();
        let lowered = sm.apply(&psi_e).unwrap();
        assert!((lowered.inner(&psi_g).unwrap() - ONE).norm() < 1e-15);
    }

    #[test]
    fn tail_estimators_match_direct_sums() {
        // Poisson: direct partial sum at n̄ = 2.89 from level 16.
        let nbar = 2.89f64;
        let mut p = (-nbar).exp();
        let mut direct = 0.0;
        for k in 0..200 {
            if k >= 16 {
                direct += p;
            }
            p *= nbar / (k + 1) as f64;
        }
        let est = poisson_top_tail(nbar, 16);
        assert!((est - direct).abs() < 1e-18 + 1e-10 * direct);
        // Squeezed: compare against explicit amplitudes at r = 1.
        let r = 1.0f64;
        let sp = FockSpace::single("m", 200).unwrap();
        let phi = squeezed_vacuum_state(&sp, "m", r).unwrap();
        let pops = phi.occupation_populations("m").unwrap();
        let direct_sq: f64 = (38..200).map(|n| pops[n]).sum();
        let est_sq = squeezed_top_tail(r, 38);
        assert!(
            (est_sq - direct_sq).abs() < 1e-9,
            "estimated {est_sq:.3e} vs direct {direct_sq:.3e}"
        );
    }

    #[test]
    fn zero_top_levels_masks_only_boundary() {
        let sp = FockSpace::new(&[("p", 4), ("s", 3)]).unwrap();
        let mut amps = vec![ZERO; 12];
        for (i, a) in amps.iter_mut().enumerate() {
            *a = C64::new(i as f64 + 1.0, 0.0);
        }
        let psi = StateVector::from_amplitudes(&sp, amps).unwrap();
        let masked = psi.zero_top_levels("p", 2).unwrap();
        for idx in 0..12 {
            let n_p = sp.occupation(idx, 0);
            if n_p >= 2 {
                assert_eq!(masked.amplitudes()[idx], ZERO);
            } else {
                assert_eq!(masked.amplitudes()[idx], psi.amplitudes()[idx]);
            }
        }
    }
}
