//! Dense complex linear algebra: row-major matrices, LU solves, and the
//! small closed-form decompositions the analytics need.
//!
//! Density matrices and superoperators are dense; only Hamiltonians and jump
//! operators are sparse (see [`crate::fock::Operator`]). Everything here is
//! deterministic: no pivot randomization, no parallel reductions.

use crate::{C64, ONE, ZERO};
use thiserror::Error;

/// Errors from dense linear algebra.
#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    /// Matrix dimensions incompatible with the requested operation.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// LU factorization hit a numerically singular pivot.
    #[error("singular matrix: pivot magnitude {pivot:.3e} at column {col}")]
    Singular { col: usize, pivot: f64 },
}

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DnMatrix {
    /// Number of rows.
    pub rows: usize,
    /// Number of columns.
    pub cols: usize,
    data: Vec<C64>,
}

impl DnMatrix {
    /// All-zero matrix.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DnMatrix { rows, cols, data: vec![ZERO; rows * cols] }
    }

    /// Identity matrix of size `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    /// Build from a row-major data vector; `data.len()` must be `rows·cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch(format!(
                "data length {} for {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(DnMatrix { rows, cols, data })
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: C64) {
        self.data[r * self.cols + c] = v;
    }

    /// Contiguous row slice.
    #[inline]
    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [C64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Full backing slice (row-major).
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> DnMatrix {
        let mut out = DnMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            let row = self.row(r);
            for (c, v) in row.iter().enumerate() {
                out.data[c * self.rows + r] = v.conj();
            }
        }
        out
    }

    /// Trace (square matrices).
    pub fn trace(&self) -> C64 {
        debug_assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self.data[i * self.cols + i]).sum()
    }

    /// self += c · other (elementwise).
    pub fn add_scaled(&mut self, c: C64, other: &DnMatrix) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (y, x) in self.data.iter_mut().zip(other.data.iter()) {
            *y += c * x;
        }
    }

    /// self *= c (elementwise).
    pub fn scale(&mut self, c: C64) {
        for y in self.data.iter_mut() {
            *y *= c;
        }
    }

    /// Kronecker product self ⊗ other. Row-major block layout: entry
    /// ((i·p+k), (j·q+l)) = self[i,j]·other[k,l] for other of shape p×q,
    /// matching the index convention of a composite Fock space whose
    /// first factor is `self`'s space.
    pub fn kron(&self, other: &DnMatrix) -> DnMatrix {
        let (p, q) = (other.rows, other.cols);
        let mut out = DnMatrix::zeros(self.rows * p, self.cols * q);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.data[i * self.cols + j];
                if a == ZERO {
                    continue;
                }
                for k in 0..p {
                    let dst = (i * p + k) * out.cols + j * q;
                    let src = &other.data[k * q..(k + 1) * q];
                    for (o, b) in out.data[dst..dst + q].iter_mut().zip(src.iter()) {
                        *o += a * b;
                    }
                }
            }
        }
        out
    }

    /// Dense product self · other (naive triple loop; small matrices only).
    pub fn matmul(&self, other: &DnMatrix) -> DnMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = DnMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let orow = other.row(k);
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(orow.iter()) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Largest |self − other| entry.
    pub fn max_abs_diff(&self, other: &DnMatrix) -> f64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(other.data.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Hermiticity defect max|A − A†| (square matrices).
    pub fn hermiticity_defect(&self) -> f64 {
        debug_assert_eq!(self.rows, self.cols);
        let mut worst = 0.0f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                let d = (self.data[r * self.cols + c] - self.data[c * self.cols + r].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Induced 1-norm: max over columns of the column's absolute sum.
    pub fn one_norm(&self) -> f64 {
        let mut sums = vec![0.0f64; self.cols];
        for r in 0..self.rows {
            for (c, v) in self.row(r).iter().enumerate() {
                sums[c] += v.norm();
            }
        }
        sums.iter().fold(0.0, |m, s| m.max(*s))
    }

    /// Replace self by (self + self†)/2.
    pub fn hermitize(&mut self) {
        self.hermitize_measuring();
    }

    /// Replace self by (self + self†)/2; returns the max entrywise defect
    /// |self − self†| seen before the projection.
    pub fn hermitize_measuring(&mut self) -> f64 {
        debug_assert_eq!(self.rows, self.cols);
        let n = self.cols;
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                let a = self.data[r * n + c];
                let b = self.data[c * n + r];
                worst = worst.max((a - b.conj()).norm());
                let m = 0.5 * (a + b.conj());
                self.data[r * n + c] = m;
                self.data[c * n + r] = m.conj();
            }
        }
        worst
    }
}

/// Solve A·x = b by LU with partial pivoting; consumes a copy of `a`.
pub fn lu_solve(a: &DnMatrix, b: &[C64]) -> Result<Vec<C64>, LinalgError> {
    let n = a.rows;
    if a.cols != n || b.len() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "lu_solve: {}x{} with rhs length {}",
            a.rows,
            a.cols,
            b.len()
        )));
    }
    let mut lu = a.data.clone();
    let mut x: Vec<C64> = b.to_vec();
    let mut scale_ref = 0.0f64;
    for v in lu.iter() {
        scale_ref = scale_ref.max(v.norm());
    }
    for col in 0..n {
        // Partial pivot.
        let mut best = col;
        let mut best_mag = lu[col * n + col].norm();
        for r in (col + 1)..n {
            let mag = lu[r * n + col].norm();
            if mag > best_mag {
                best = r;
                best_mag = mag;
            }
        }
        if best_mag <= scale_ref * 1e-300 || best_mag == 0.0 {
            return Err(LinalgError::Singular { col, pivot: best_mag });
        }
        if best != col {
            for c in 0..n {
                lu.swap(col * n + c, best * n + c);
            }
            x.swap(col, best);
        }
        let pivot = lu[col * n + col];
        for r in (col + 1)..n {
            let factor = lu[r * n + col] / pivot;
            if factor == ZERO {
                continue;
            }
            lu[r * n + col] = factor;
            for c in (col + 1)..n {
                let sub = factor * lu[col * n + c];
                lu[r * n + c] -= sub;
            }
            let sub_x = factor * x[col];
            x[r] -= sub_x;
        }
    }
    // Back substitution.
    for col in (0..n).rev() {
        x[col] /= lu[col * n + col];
        let xc = x[col];
        for r in 0..col {
            let sub = lu[r * n + col] * xc;
            x[r] -= sub;
        }
    }
    Ok(x)
}

/// Eigendecomposition of a real symmetric 2×2 matrix.
///
/// Returns eigenvalues ascending and the corresponding unit eigenvectors as
/// rows. Used for covariance ellipses.
pub fn eig_sym_2x2(m: [[f64; 2]; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
    let (a, b, c) = (m[0][0], m[0][1], m[1][1]);
    let tr = a + c;
    let disc = ((a - c) * 0.5).hypot(b);
    let l0 = 0.5 * tr - disc;
    let l1 = 0.5 * tr + disc;
    let v1 = if b.abs() > 1e-300 {
        let mut v = [l1 - c, b];
        let n = v[0].hypot(v[1]);
        v[0] /= n;
        v[1] /= n;
        v
    } else if a >= c {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    let v0 = [-v1[1], v1[0]];
    ([l0, l1], [v0, v1])
}

/// Eigenvalues of a small real symmetric matrix (cyclic Jacobi), ascending.
///
/// `a` is row-major n×n and assumed symmetric; only small n (rate matrices,
/// covariance blocks) is intended. A complex Hermitian matrix H can be fed
/// through the real embedding [[Re H, −Im H], [Im H, Re H]], whose spectrum
/// is that of H with every eigenvalue doubled.
pub fn sym_eigenvalues(n: usize, a_in: &[f64]) -> Vec<f64> {
    assert_eq!(a_in.len(), n * n, "sym_eigenvalues needs an n×n input");
    if n == 0 {
        return Vec::new();
    }
    let mut a = a_in.to_vec();
    for _sweep in 0..200 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0f64, f64::max).max(1.0);
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                // Rotation angle zeroing a[p][q]: t solves t² + 2θt − 1 = 0.
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let api = a[p * n + i];
                    let aqi = a[q * n + i];
                    a[p * n + i] = c * api - s * aqi;
                    a[q * n + i] = s * api + c * aqi;
                }
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    eigs
}

/// Uhlmann fidelity F(ρ, σ) = (Tr√(√ρ σ √ρ))² for 2×2 density matrices.
///
/// Uses the closed form F = Tr(ρσ) + 2√(det ρ · det σ), valid for qubits;
/// the result is clamped to [0, 1] against rounding.
pub fn uhlmann_fidelity_2x2(rho: &DnMatrix, sigma: &DnMatrix) -> Result<f64, LinalgError> {
    if rho.rows != 2 || rho.cols != 2 || sigma.rows != 2 || sigma.cols != 2 {
        return Err(LinalgError::DimensionMismatch("uhlmann_fidelity_2x2 expects 2x2".into()));
    }
    let tr_rs = (rho.get(0, 0) * sigma.get(0, 0)
        + rho.get(0, 1) * sigma.get(1, 0)
        + rho.get(1, 0) * sigma.get(0, 1)
        + rho.get(1, 1) * sigma.get(1, 1))
    .re;
    let det = |m: &DnMatrix| (m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0)).re.max(0.0);
    let f = tr_rs + 2.0 * (det(rho) * det(sigma)).sqrt();
    Ok(f.clamp(0.0, 1.0))
}
