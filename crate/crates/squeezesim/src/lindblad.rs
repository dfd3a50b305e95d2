//! Lindblad master-equation engine: generalized dissipators, fixed and
//! adaptive integrators, and steady-state solvers.
//!
//! The equation of motion is
//!
//!   dρ/dt = −i[Ĥ(t), ρ] + Σ_jk γ_jk (L̂_j ρ L̂_k† − ½{L̂_k† L̂_j, ρ}),
//!
//! with Ĥ(t) = Ĥ_static + Σ_m (A_m e^{−iω_m t} Ô_m + h.c.) and a Hermitian
//! positive-semidefinite rate matrix γ. Internally the right-hand side is
//! evaluated as −i(Ĝρ − (Ĝρ)†) + feed terms, where Ĝ = Ĥ(t) − (i/2)Σγ_jk
//! L̂_k†L̂_j is held in one sparse matrix whose pattern is precomputed and
//! whose values are refreshed per evaluation; this is exact for Hermitian ρ
//! and keeps every step Hermiticity-preserving by construction.
//!
//! Jump operators that are single-diagonal in the Fock basis (every row has
//! at most one entry, all on a common diagonal offset, e.g. embedded ladder
//! operators) combine with a diagonal γ into elementwise O(dim²) feed
//! kernels; anything else falls back to a general sparse-dense path.

use crate::fock::{FockError, FockSpace, Operator};
use crate::linalg::{lu_solve, sym_eigenvalues, DnMatrix, LinalgError};
use crate::{C64, ONE, ZERO};
use thiserror::Error;

/// Errors from model construction and time evolution.
#[derive(Debug, Error)]
pub enum LindbladError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("{what} is not Hermitian: defect {defect:.3e}")]
    NotHermitian { what: &'static str, defect: f64 },
    #[error("rate matrix is not Hermitian: defect {defect:.3e}")]
    GammaNotHermitian { defect: f64 },
    #[error("rate matrix is not positive semidefinite: min eigenvalue {min_eig:.3e}")]
    GammaNotPsd { min_eig: f64 },
    #[error("rate matrix must be {jumps}x{jumps} for {jumps} jump operators, got {len} entries")]
    GammaShape { jumps: usize, len: usize },
    #[error("negative decay rate {0}")]
    NegativeRate(f64),
    #[error("steady state requested for a time-dependent model")]
    TimeDependentSteadyState,
    #[error("step {dt:.3e} exceeds the drive-resolving limit {limit:.3e} (2π/ω_max)/20")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("state became non-finite at t = {t:.6e}")]
    NonFiniteState { t: f64 },
    #[error("trace drifted by {drift:.3e} at t = {t:.6e}")]
    TraceDrift { t: f64, drift: f64 },
    #[error("adaptive step underflow at t = {t:.6e} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("dimension {dim} too large for the dense steady-state solver (max {max})")]
    DimensionTooLarge { dim: usize, max: usize },
    #[error("invalid options: {0}")]
    BadOptions(String),
}

/// One Hermitian drive pair: A·e^{−iωt}·Ô + A*·e^{+iωt}·Ô†.
#[derive(Clone, Debug)]
pub struct ToneTerm {
    /// Operator the tone multiplies (need not be Hermitian).
    pub op: Operator,
    /// Complex amplitude A.
    pub amplitude: C64,
    /// Angular frequency ω (rad per unit time).
    pub frequency: f64,
}

/// Jump operators with a Hermitian PSD rate matrix γ.
#[derive(Clone, Debug)]
pub struct DissipatorSet {
    jumps: Vec<Operator>,
    /// Row-major J×J rate matrix; dissipator is Σ_jk γ_jk (L_j ρ L_k† − …).
    gamma: Vec<C64>,
}

impl DissipatorSet {
    /// Empty dissipator (closed-system evolution).
    pub fn none() -> Self {
        DissipatorSet { jumps: Vec::new(), gamma: Vec::new() }
    }

    /// General rate matrix over the given jump operators.
    pub fn new(jumps: Vec<Operator>, gamma: &[C64]) -> Result<Self, LindbladError> {
        let j = jumps.len();
        if gamma.len() != j * j {
            return Err(LindbladError::GammaShape { jumps: j, len: gamma.len() });
        }
        if j > 1 {
            for a in 1..j {
                if jumps[a].space() != jumps[0].space() {
                    return Err(FockError::SpaceMismatch.into());
                }
            }
        }
        let scale = gamma.iter().fold(0.0f64, |m, v| m.max(v.norm())).max(1.0);
        let mut herm_defect = 0.0f64;
        for r in 0..j {
            for c in 0..j {
                herm_defect = herm_defect.max((gamma[r * j + c] - gamma[c * j + r].conj()).norm());
            }
        }
        if herm_defect > 1e-12 * scale {
            return Err(LindbladError::GammaNotHermitian { defect: herm_defect });
        }
        // PSD via the real-symmetric embedding [[Re, −Im], [Im, Re]].
        if j > 0 {
            let n = 2 * j;
            let mut emb = vec![0.0f64; n * n];
            for r in 0..j {
                for c in 0..j {
                    let g = gamma[r * j + c];
                    emb[r * n + c] = g.re;
                    emb[r * n + (c + j)] = -g.im;
                    emb[(r + j) * n + c] = g.im;
                    emb[(r + j) * n + (c + j)] = g.re;
                }
            }
            let eigs = sym_eigenvalues(n, &emb);
            if eigs[0] < -1e-10 * scale {
                return Err(LindbladError::GammaNotPsd { min_eig: eigs[0] });
            }
        }
        Ok(DissipatorSet { jumps, gamma: gamma.to_vec() })
    }

    /// Independent decay channels: γ = diag(rates).
    pub fn diagonal(pairs: Vec<(Operator, f64)>) -> Result<Self, LindbladError> {
        for (_, rate) in &pairs {
            if *rate < 0.0 || !rate.is_finite() {
                return Err(LindbladError::NegativeRate(*rate));
            }
        }
        let j = pairs.len();
        let mut gamma = vec![ZERO; j * j];
        let mut jumps = Vec::with_capacity(j);
        for (i, (op, rate)) in pairs.into_iter().enumerate() {
            gamma[i * j + i] = C64::new(rate, 0.0);
            jumps.push(op);
        }
        Self::new(jumps, &gamma)
    }

    pub fn jumps(&self) -> &[Operator] {
        &self.jumps
    }

    pub fn gamma(&self) -> &[C64] {
        &self.gamma
    }

    fn is_diagonal(&self) -> bool {
        let j = self.jumps.len();
        for r in 0..j {
            for c in 0..j {
                if r != c && self.gamma[r * j + c] != ZERO {
                    return false;
                }
            }
        }
        true
    }
}

/// Feed kernel for one single-diagonal jump with diagonal γ.
#[derive(Clone, Debug)]
struct StridedJump {
    /// Column offset: the jump has entries only at (r, r + stride).
    stride: isize,
    /// √γ_jj · value per row (zero where the jump has no entry).
    coeff: Vec<C64>,
    /// Conjugate of `coeff`, precomputed for the inner loop.
    conj_coeff: Vec<C64>,
}

#[derive(Clone, Debug)]
enum DissKernel {
    /// Elementwise feeds; empty vec = no dissipation.
    Fast(Vec<StridedJump>),
    /// Sparse-dense products with the full γ.
    General,
}

/// If `op` has at most one entry per row, all on one diagonal offset,
/// return (offset, per-row values).
fn detect_single_diagonal(op: &Operator) -> Option<(isize, Vec<C64>)> {
    let dim = op.space().total_dim();
    let (ptr, cols, vals) = op.csr();
    let mut stride: Option<isize> = None;
    let mut coeff = vec![ZERO; dim];
    for r in 0..dim {
        let nnz = ptr[r + 1] - ptr[r];
        if nnz == 0 {
            continue;
        }
        if nnz > 1 {
            return None;
        }
        let i = ptr[r];
        let s = cols[i] as isize - r as isize;
        match stride {
            None => stride = Some(s),
            Some(prev) if prev != s => return None,
            _ => {}
        }
        coeff[r] = vals[i];
    }
    stride.map(|s| (s, coeff))
}

/// Scratch buffers reused across right-hand-side evaluations.
pub struct RhsScratch {
    b: DnMatrix,
    values: Vec<C64>,
    p: Vec<DnMatrix>,
    m: DnMatrix,
}

/// A complete open-system model ready for integration.
pub struct LindbladModel {
    space: FockSpace,
    tones: Vec<ToneTerm>,
    tone_adjoints: Vec<Operator>,
    /// Per tone: union-pattern index of each op / adjoint-op nonzero.
    tone_maps: Vec<(Vec<usize>, Vec<usize>)>,
    dissipators: DissipatorSet,
    /// Shared sparsity pattern of Ĝ(t) = Ĥ(t) − (i/2)·Σγ_jk L̂_k†L̂_j.
    union_ptr: Vec<usize>,
    union_cols: Vec<usize>,
    /// Values of the time-independent part of Ĝ on the union pattern.
    base_values: Vec<C64>,
    kernel: DissKernel,
    max_tone_frequency: f64,
    /// Adaptive-step ceiling keeping hλ inside the explicit-pair stability
    /// region for every generator eigenvalue λ (norm-bound estimate).
    stability_h_cap: f64,
}

/// Build the union sparsity pattern of several operators.
fn pattern_union(dim: usize, ops: &[&Operator]) -> (Vec<usize>, Vec<usize>) {
    let mut ptr = vec![0usize; dim + 1];
    let mut cols = Vec::new();
    let mut row: Vec<usize> = Vec::new();
    for r in 0..dim {
        row.clear();
        for op in ops {
            let (p, c, _) = op.csr();
            row.extend_from_slice(&c[p[r]..p[r + 1]]);
        }
        row.sort_unstable();
        row.dedup();
        cols.extend_from_slice(&row);
        ptr[r + 1] = cols.len();
    }
    (ptr, cols)
}

/// Map each nonzero of `op` to its position in the union pattern.
fn map_into_union(op: &Operator, ptr: &[usize], cols: &[usize]) -> Vec<usize> {
    let (p, c, _) = op.csr();
    let dim = p.len() - 1;
    let mut map = Vec::with_capacity(op.nnz());
    for r in 0..dim {
        let seg = &cols[ptr[r]..ptr[r + 1]];
        for i in p[r]..p[r + 1] {
            let pos = seg.binary_search(&c[i]).expect("union pattern covers constituents");
            map.push(ptr[r] + pos);
        }
    }
    map
}

/// y += α·x (complex α), elementwise over equal-length slices.
fn axpy_c(alpha: C64, x: &[C64], y: &mut [C64]) {
    let (ar, ai) = (alpha.re, alpha.im);
    for (yv, xv) in y.iter_mut().zip(x) {
        let re = ar * xv.re - ai * xv.im;
        let im = ar * xv.im + ai * xv.re;
        yv.re += re;
        yv.im += im;
    }
}

/// y += a·x (real a).
fn axpy_r(a: f64, x: &[C64], y: &mut [C64]) {
    for (yv, xv) in y.iter_mut().zip(x) {
        yv.re += a * xv.re;
        yv.im += a * xv.im;
    }
}

/// out = CSR(vals on ptr/cols) · rho, rows accumulated as axpys over
/// contiguous rho rows.
fn csr_mul_dense(ptr: &[usize], cols: &[usize], vals: &[C64], rho: &DnMatrix, out: &mut DnMatrix) {
    let dim = rho.rows;
    let rdata = rho.as_slice();
    let odata = out.as_mut_slice();
    odata.fill(ZERO);
    for r in 0..dim {
        let (lo, hi) = (ptr[r], ptr[r + 1]);
        if lo == hi {
            continue;
        }
        let orow = &mut odata[r * dim..(r + 1) * dim];
        for i in lo..hi {
            let v = vals[i];
            if v == ZERO {
                continue;
            }
            let src = &rdata[cols[i] * dim..(cols[i] + 1) * dim];
            axpy_c(v, src, orow);
        }
    }
}

/// out = −i·B + i·B† (tiled transpose pass). Exact Hermitian output.
fn assemble_commutator(b: &DnMatrix, out: &mut DnMatrix) {
    const TILE: usize = 64;
    let dim = b.rows;
    let bd = b.as_slice();
    let od = out.as_mut_slice();
    let mut rb = 0;
    while rb < dim {
        let rend = (rb + TILE).min(dim);
        let mut cb = 0;
        while cb < dim {
            let cend = (cb + TILE).min(dim);
            for r in rb..rend {
                let base = r * dim;
                for c in cb..cend {
                    let x = bd[base + c];
                    let u = bd[c * dim + r];
                    od[base + c] = C64::new(x.im + u.im, u.re - x.re);
                }
            }
            cb = cend;
        }
        rb = rend;
    }
}

/// out[r][c] += coeff[r]·conj_coeff[c]·rho[r+s][c+s] over the valid square.
fn strided_feed(jump: &StridedJump, rho: &DnMatrix, out: &mut DnMatrix) {
    let dim = rho.rows;
    let s = jump.stride;
    let lo = if s < 0 { (-s) as usize } else { 0 };
    let hi = if s > 0 { dim - s as usize } else { dim };
    if lo >= hi {
        return;
    }
    let rdata = rho.as_slice();
    let odata = out.as_mut_slice();
    for r in lo..hi {
        let wr = jump.coeff[r];
        if wr == ZERO {
            continue;
        }
        let src_row = (r as isize + s) as usize;
        let src = &rdata[src_row * dim + (lo as isize + s) as usize..];
        let dst = &mut odata[r * dim + lo..r * dim + hi];
        let cc = &jump.conj_coeff[lo..hi];
        let (wr_re, wr_im) = (wr.re, wr.im);
        for i in 0..dst.len() {
            // t = wr·cc[i]; dst += t·src
            let c = cc[i];
            let tre = wr_re * c.re - wr_im * c.im;
            let tim = wr_re * c.im + wr_im * c.re;
            let s_ = src[i];
            dst[i].re += tre * s_.re - tim * s_.im;
            dst[i].im += tre * s_.im + tim * s_.re;
        }
    }
}

/// out += M · L† for CSR L (column-scatter; used only on the general path).
fn dense_mul_csr_adjoint_acc(m: &DnMatrix, l: &Operator, out: &mut DnMatrix) {
    let dim = m.rows;
    let (ptr, cols, vals) = l.csr();
    let md = m.as_slice();
    let od = out.as_mut_slice();
    for c in 0..dim {
        for i in ptr[c]..ptr[c + 1] {
            let p = cols[i];
            let v = vals[i].conj();
            let (vr, vi) = (v.re, v.im);
            for r in 0..dim {
                let mv = md[r * dim + p];
                od[r * dim + c].re += vr * mv.re - vi * mv.im;
                od[r * dim + c].im += vr * mv.im + vi * mv.re;
            }
        }
    }
}

impl LindbladModel {
    /// Assemble and validate a model.
    ///
    /// `h_static` must be Hermitian; tones and jumps must live on its space.
    pub fn new(
        h_static: Operator,
        tones: Vec<ToneTerm>,
        dissipators: DissipatorSet,
    ) -> Result<Self, LindbladError> {
        let space = h_static.space().clone();
        let h_defect = h_static.hermiticity_defect();
        if h_defect > 1e-10 * h_static.max_abs().max(1.0) {
            return Err(LindbladError::NotHermitian { what: "static Hamiltonian", defect: h_defect });
        }
        for tone in &tones {
            if tone.op.space() != &space {
                return Err(FockError::SpaceMismatch.into());
            }
            if !tone.frequency.is_finite() || !tone.amplitude.is_finite() {
                return Err(LindbladError::BadOptions("non-finite tone parameters".into()));
            }
        }
        for jump in dissipators.jumps() {
            if jump.space() != &space {
                return Err(FockError::SpaceMismatch.into());
            }
        }
        // A = Σ_jk γ_jk L_k†L_j.
        let jn = dissipators.jumps().len();
        let mut a_terms: Vec<(C64, Operator)> = Vec::new();
        for j in 0..jn {
            for k in 0..jn {
                let g = dissipators.gamma()[j * jn + k];
                if g == ZERO {
                    continue;
                }
                let prod = dissipators.jumps()[k].adjoint().matmul(&dissipators.jumps()[j])?;
                a_terms.push((g, prod));
            }
        }
        let a_refs: Vec<(C64, &Operator)> = a_terms.iter().map(|(c, o)| (*c, o)).collect();
        let a_op = Operator::sum(&space, &a_refs)?;
        let a_defect = a_op.hermiticity_defect();
        if a_defect > 1e-10 * a_op.max_abs().max(1.0) {
            return Err(LindbladError::NotHermitian { what: "dissipator anticommutator", defect: a_defect });
        }

        let tone_adjoints: Vec<Operator> = tones.iter().map(|t| t.op.adjoint()).collect();
        let mut pattern_ops: Vec<&Operator> = vec![&h_static, &a_op];
        for t in &tones {
            pattern_ops.push(&t.op);
        }
        for t in &tone_adjoints {
            pattern_ops.push(t);
        }
        let (union_ptr, union_cols) = pattern_union(space.total_dim(), &pattern_ops);
        let mut base_values = vec![ZERO; union_cols.len()];
        let h_map = map_into_union(&h_static, &union_ptr, &union_cols);
        let (_, _, hv) = h_static.csr();
        for (i, &u) in h_map.iter().enumerate() {
            base_values[u] += hv[i];
        }
        let a_map = map_into_union(&a_op, &union_ptr, &union_cols);
        let (_, _, av) = a_op.csr();
        let half_i = C64::new(0.0, -0.5);
        for (i, &u) in a_map.iter().enumerate() {
            base_values[u] += half_i * av[i];
        }
        let tone_maps: Vec<(Vec<usize>, Vec<usize>)> = tones
            .iter()
            .zip(tone_adjoints.iter())
            .map(|(t, adj)| {
                (
                    map_into_union(&t.op, &union_ptr, &union_cols),
                    map_into_union(adj, &union_ptr, &union_cols),
                )
            })
            .collect();

        // Fast feeds need a diagonal γ and single-diagonal jumps.
        let kernel = if dissipators.is_diagonal() {
            let mut feeds = Vec::with_capacity(jn);
            let mut ok = true;
            for j in 0..jn {
                let g = dissipators.gamma()[j * jn + j].re.max(0.0);
                match detect_single_diagonal(&dissipators.jumps()[j]) {
                    Some((stride, mut coeff)) => {
                        let sg = g.sqrt();
                        for v in coeff.iter_mut() {
                            *v *= sg;
                        }
                        let conj_coeff: Vec<C64> = coeff.iter().map(|v| v.conj()).collect();
                        feeds.push(StridedJump { stride, coeff, conj_coeff });
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                DissKernel::Fast(feeds)
            } else {
                DissKernel::General
            }
        } else {
            DissKernel::General
        };

        let max_tone_frequency =
            tones.iter().map(|t| t.frequency.abs()).fold(0.0f64, f64::max);

        // Spectral-radius bound on the generator, for the adaptive stepper's
        // stability ceiling. Split Ĝ into diagonal D and off-diagonal O:
        //   ‖−i(Ĝρ − ρĜ†)‖∞ ≤ max_{r,c}|d_r − d̄_c| + ‖O‖∞ + ‖O‖₁,
        // tones count as off-diagonal, and the sandwich feeds add
        // Σ|γ_jk|·‖L_j‖∞·‖L_k†‖∞.
        let dim = space.total_dim();
        let mut diag = vec![ZERO; dim];
        let mut od_row = vec![0.0f64; dim];
        let mut od_col = vec![0.0f64; dim];
        for r in 0..dim {
            for u in union_ptr[r]..union_ptr[r + 1] {
                let c = union_cols[u];
                let mag = base_values[u].norm();
                if c == r {
                    diag[r] = base_values[u];
                } else {
                    od_row[r] += mag;
                    od_col[c] += mag;
                }
            }
        }
        let mut pair_max = 0.0f64;
        for r in 0..dim {
            for c in 0..dim {
                pair_max = pair_max.max((diag[r] - diag[c].conj()).norm());
            }
        }
        let od_inf = od_row.iter().fold(0.0f64, |m, &s| m.max(s));
        let od_one = od_col.iter().fold(0.0f64, |m, &s| m.max(s));
        let tone_norm: f64 = tones
            .iter()
            .zip(tone_adjoints.iter())
            .map(|(t, adj)| t.amplitude.norm() * (t.op.inf_norm() + adj.inf_norm()))
            .sum();
        let jump_inf: Vec<f64> = dissipators.jumps().iter().map(|l| l.inf_norm()).collect();
        let jump_one: Vec<f64> =
            dissipators.jumps().iter().map(|l| l.adjoint().inf_norm()).collect();
        let mut feed = 0.0f64;
        for j in 0..jn {
            for k in 0..jn {
                feed += dissipators.gamma()[j * jn + k].norm() * jump_inf[j] * jump_one[k];
            }
        }
        let bound = pair_max + od_inf + od_one + 2.0 * tone_norm + feed;
        let stability_h_cap = if bound > 0.0 { DP5_STABILITY_SPAN / bound } else { f64::INFINITY };

        Ok(LindbladModel {
            space,
            tones,
            tone_adjoints,
            tone_maps,
            dissipators,
            union_ptr,
            union_cols,
            base_values,
            kernel,
            max_tone_frequency,
            stability_h_cap,
        })
    }

    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn dissipators(&self) -> &DissipatorSet {
        &self.dissipators
    }

    /// True when no tones are present (autonomous generator).
    pub fn is_time_independent(&self) -> bool {
        self.tones.is_empty()
    }

    /// Largest drive frequency, 0 if undriven.
    pub fn max_tone_frequency(&self) -> f64 {
        self.max_tone_frequency
    }

    /// Step ceiling keeping an explicit Runge–Kutta pass stable for this
    /// generator (norm-bound estimate; infinite for a zero generator).
    /// Fixed-step integration must respect this in addition to the
    /// tone-resolution limit.
    pub fn stability_step_cap(&self) -> f64 {
        self.stability_h_cap
    }

    /// Allocate the scratch buffers for repeated RHS evaluation.
    pub fn make_scratch(&self) -> RhsScratch {
        let dim = self.space.total_dim();
        let general = matches!(self.kernel, DissKernel::General);
        let jn = if general { self.dissipators.jumps().len() } else { 0 };
        RhsScratch {
            b: DnMatrix::zeros(dim, dim),
            values: vec![ZERO; self.base_values.len()],
            p: (0..jn).map(|_| DnMatrix::zeros(dim, dim)).collect(),
            m: if general { DnMatrix::zeros(dim, dim) } else { DnMatrix::zeros(0, 0) },
        }
    }

    /// dρ/dt at time `t` for Hermitian ρ, written into `out`.
    pub fn rhs(&self, t: f64, rho: &DnMatrix, out: &mut DnMatrix, ws: &mut RhsScratch) {
        let vals: &[C64] = if self.tones.is_empty() {
            &self.base_values
        } else {
            ws.values.copy_from_slice(&self.base_values);
            for (ti, tone) in self.tones.iter().enumerate() {
                let c = tone.amplitude * C64::new(0.0, -tone.frequency * t).exp();
                let (map_op, map_adj) = &self.tone_maps[ti];
                let (_, _, ov) = tone.op.csr();
                for (i, &u) in map_op.iter().enumerate() {
                    ws.values[u] += c * ov[i];
                }
                let cc = c.conj();
                let (_, _, adv) = self.tone_adjoints[ti].csr();
                for (i, &u) in map_adj.iter().enumerate() {
                    ws.values[u] += cc * adv[i];
                }
            }
            &ws.values
        };
        csr_mul_dense(&self.union_ptr, &self.union_cols, vals, rho, &mut ws.b);
        assemble_commutator(&ws.b, out);
        match &self.kernel {
            DissKernel::Fast(feeds) => {
                for jump in feeds {
                    strided_feed(jump, rho, out);
                }
            }
            DissKernel::General => {
                let jn = self.dissipators.jumps().len();
                for j in 0..jn {
                    let (ptr, cols, vals_l) = self.dissipators.jumps()[j].csr();
                    csr_mul_dense(ptr, cols, vals_l, rho, &mut ws.p[j]);
                }
                for k in 0..jn {
                    ws.m.as_mut_slice().fill(ZERO);
                    for j in 0..jn {
                        let g = self.dissipators.gamma()[j * jn + k];
                        if g != ZERO {
                            axpy_c(g, ws.p[j].as_slice(), ws.m.as_mut_slice());
                        }
                    }
                    dense_mul_csr_adjoint_acc(&ws.m, &self.dissipators.jumps()[k], out);
                }
            }
        }
    }

    /// Allocating convenience wrapper around [`Self::rhs`].
    pub fn rhs_dense(&self, t: f64, rho: &DnMatrix) -> DnMatrix {
        let dim = self.space.total_dim();
        let mut out = DnMatrix::zeros(dim, dim);
        let mut ws = self.make_scratch();
        self.rhs(t, rho, &mut out, &mut ws);
        out
    }

    /// ‖dρ/dt‖₁ at (t, ρ): the steady-state residual.
    pub fn residual_one_norm(&self, t: f64, rho: &DnMatrix) -> f64 {
        self.rhs_dense(t, rho).one_norm()
    }

    fn validate_initial_state(&self, rho0: &DnMatrix) -> Result<DnMatrix, LindbladError> {
        let dim = self.space.total_dim();
        if rho0.rows != dim || rho0.cols != dim {
            return Err(LindbladError::BadOptions(format!(
                "initial state is {}x{}, model dimension is {dim}",
                rho0.rows, rho0.cols
            )));
        }
        let defect = rho0.hermiticity_defect();
        if defect > 1e-10 * rho0.max_abs().max(1.0) {
            return Err(LindbladError::NotHermitian { what: "initial state", defect });
        }
        let tr = rho0.trace();
        if (tr - ONE).norm() > 1e-8 {
            return Err(LindbladError::BadOptions(format!(
                "initial state trace {} must be 1",
                tr.re
            )));
        }
        let mut rho = rho0.clone();
        rho.hermitize();
        Ok(rho)
    }

    /// Fixed-step RK4 evolution over `t_span`, recording observables every
    /// `record_stride` steps.
    ///
    /// Precondition when tones are present: dt ≤ (2π/ω_max)/20 so the
    /// fastest drive is resolved by at least 20 samples per period.
    pub fn evolve_fixed(
        &self,
        rho0: &DnMatrix,
        opts: &FixedStepOptions,
        observables: &[(String, Operator)],
    ) -> Result<Trajectory, LindbladError> {
        let (t0, t1) = opts.t_span;
        if !(t1 > t0) || !opts.dt.is_finite() || opts.dt <= 0.0 {
            return Err(LindbladError::BadOptions("need t1 > t0 and dt > 0".into()));
        }
        if self.max_tone_frequency > 0.0 {
            let limit = (2.0 * std::f64::consts::PI / self.max_tone_frequency) / 20.0;
            if opts.dt > limit {
                return Err(LindbladError::StepTooLarge { dt: opts.dt, limit });
            }
        }
        let span = t1 - t0;
        let steps = (span / opts.dt).ceil().max(1.0) as usize;
        if steps > 100_000_000 {
            return Err(LindbladError::BadOptions(format!("{steps} steps requested")));
        }
        let h = span / steps as f64;
        let dim = self.space.total_dim();
        let mut rho = self.validate_initial_state(rho0)?;
        let mut ws = self.make_scratch();
        let mut k1 = DnMatrix::zeros(dim, dim);
        let mut k2 = DnMatrix::zeros(dim, dim);
        let mut k3 = DnMatrix::zeros(dim, dim);
        let mut k4 = DnMatrix::zeros(dim, dim);
        let mut stage = DnMatrix::zeros(dim, dim);
        let mut traj = Trajectory::new(observables, dim);
        let stride = opts.record_stride.max(1);
        let hermitize_every = opts.hermitize_every.max(1);
        traj.record(t0, &rho, observables)?;
        for step in 0..steps {
            let t = t0 + step as f64 * h;
            self.rhs(t, &rho, &mut k1, &mut ws);
            stage.as_mut_slice().copy_from_slice(rho.as_slice());
            axpy_r(0.5 * h, k1.as_slice(), stage.as_mut_slice());
            self.rhs(t + 0.5 * h, &stage, &mut k2, &mut ws);
            stage.as_mut_slice().copy_from_slice(rho.as_slice());
            axpy_r(0.5 * h, k2.as_slice(), stage.as_mut_slice());
            self.rhs(t + 0.5 * h, &stage, &mut k3, &mut ws);
            stage.as_mut_slice().copy_from_slice(rho.as_slice());
            axpy_r(h, k3.as_slice(), stage.as_mut_slice());
            self.rhs(t + h, &stage, &mut k4, &mut ws);
            let rs = rho.as_mut_slice();
            axpy_r(h / 6.0, k1.as_slice(), rs);
            axpy_r(h / 3.0, k2.as_slice(), rs);
            axpy_r(h / 3.0, k3.as_slice(), rs);
            axpy_r(h / 6.0, k4.as_slice(), rs);
            let done = step + 1;
            if done % hermitize_every == 0 {
                traj.hermiticity_drift = traj.hermiticity_drift.max(rho.hermiticity_defect());
                rho.hermitize();
            }
            if done % stride == 0 || done == steps {
                let t_now = t0 + done as f64 * h;
                if !rho.max_abs().is_finite() {
                    return Err(LindbladError::NonFiniteState { t: t_now });
                }
                traj.record(t_now, &rho, observables)?;
            }
        }
        traj.accepted_steps = steps;
        traj.final_time = t1;
        traj.final_state = rho;
        Ok(traj)
    }

    /// Adaptive Dormand–Prince 5(4) evolution with PI step control.
    pub fn evolve_adaptive(
        &self,
        rho0: &DnMatrix,
        opts: &AdaptiveOptions,
        observables: &[(String, Operator)],
    ) -> Result<Trajectory, LindbladError> {
        let (t0, t1) = opts.t_span;
        if !(t1 > t0) {
            return Err(LindbladError::BadOptions("need t1 > t0".into()));
        }
        let rho = self.validate_initial_state(rho0)?;
        let mut stepper = Dp5::new(self, rho, t0, opts.clone())?;
        let mut traj = Trajectory::new(observables, self.space.total_dim());
        traj.record(t0, &stepper.y, observables)?;
        let stride = opts.record_stride.max(1);
        while stepper.t < t1 {
            let accepted = stepper.step(Some(t1))?;
            if accepted {
                let end = stepper.t >= t1 - 1e-14 * (t1 - t0).abs();
                if stepper.accepted % stride == 0 || end {
                    traj.record(stepper.t, &stepper.y, observables)?;
                }
            }
        }
        traj.hermiticity_drift = stepper.max_herm_defect;
        traj.accepted_steps = stepper.accepted;
        traj.rejected_steps = stepper.rejected;
        traj.final_time = stepper.t;
        traj.final_state = stepper.y;
        Ok(traj)
    }

    /// Integrate an autonomous model until ‖dρ/dt‖₁ stays below
    /// `opts.residual_tol` for `opts.consecutive` accepted steps.
    pub fn relax_to_steady_state(
        &self,
        rho0: &DnMatrix,
        opts: &SteadyOptions,
    ) -> Result<SteadyState, LindbladError> {
        if !self.is_time_independent() {
            return Err(LindbladError::TimeDependentSteadyState);
        }
        if !(opts.t_cap > 0.0) {
            return Err(LindbladError::BadOptions("t_cap must be positive".into()));
        }
        let rho = self.validate_initial_state(rho0)?;
        let adaptive = AdaptiveOptions {
            t_span: (0.0, opts.t_cap),
            rtol: opts.rtol,
            atol: opts.atol,
            h_init: None,
            max_steps: opts.max_steps,
            record_stride: 1,
        };
        let mut stepper = Dp5::new(self, rho, 0.0, adaptive)?;
        let mut run = 0usize;
        let mut residual = f64::INFINITY;
        let mut converged = false;
        while stepper.t < opts.t_cap {
            let accepted = stepper.step(Some(opts.t_cap))?;
            if !accepted {
                continue;
            }
            // FSAL: k[0] is dρ/dt at the new (t, ρ).
            residual = stepper.k[0].one_norm();
            if residual < opts.residual_tol {
                run += 1;
                if run >= opts.consecutive {
                    converged = true;
                    break;
                }
            } else {
                run = 0;
            }
        }
        let mut rho = stepper.y;
        rho.hermitize();
        let tr = rho.trace().re;
        if (tr - 1.0).abs() > 1e-6 {
            return Err(LindbladError::TraceDrift { t: stepper.t, drift: (tr - 1.0).abs() });
        }
        rho.scale(C64::new(1.0 / tr, 0.0));
        Ok(SteadyState {
            rho,
            t_reached: stepper.t,
            residual_one_norm: residual,
            accepted_steps: stepper.accepted,
            converged,
        })
    }

    /// Steady state by direct dense null-space solve of the generator
    /// (autonomous models, total dimension ≤ [`MAX_DIRECT_STEADY_DIM`]).
    pub fn steady_state_direct(&self) -> Result<DnMatrix, LindbladError> {
        if !self.is_time_independent() {
            return Err(LindbladError::TimeDependentSteadyState);
        }
        let dim = self.space.total_dim();
        if dim > MAX_DIRECT_STEADY_DIM {
            return Err(LindbladError::DimensionTooLarge { dim, max: MAX_DIRECT_STEADY_DIM });
        }
        let d2 = dim * dim;
        let mut m = DnMatrix::zeros(d2, d2);
        // vec(ρ) is row-major: index i·dim + j for ρ[i][j].
        // −i·Ĝρ  → M[(i,j),(k,j)] −= i·G[i][k]
        // +i·ρĜ† → M[(i,j),(i,l)] += i·conj(G[j][l])
        for r in 0..dim {
            for u in self.union_ptr[r]..self.union_ptr[r + 1] {
                let k = self.union_cols[u];
                let g = self.base_values[u];
                let mi = C64::new(0.0, -1.0) * g;
                for j in 0..dim {
                    let v = m.get(r * dim + j, k * dim + j) + mi;
                    m.set(r * dim + j, k * dim + j, v);
                }
                let pi = C64::new(0.0, 1.0) * g.conj();
                for i in 0..dim {
                    let v = m.get(i * dim + r, i * dim + k) + pi;
                    m.set(i * dim + r, i * dim + k, v);
                }
            }
        }
        // Feeds Σ_jk γ_jk L_j ρ L_k†: M[(i,c),(p,q)] += γ·Lj[i][p]·conj(Lk[c][q]).
        let jn = self.dissipators.jumps().len();
        for j in 0..jn {
            for kk in 0..jn {
                let g = self.dissipators.gamma()[j * jn + kk];
                if g == ZERO {
                    continue;
                }
                let (pj, cj, vj) = self.dissipators.jumps()[j].csr();
                let (pk, ck, vk) = self.dissipators.jumps()[kk].csr();
                for i in 0..dim {
                    for a in pj[i]..pj[i + 1] {
                        let p = cj[a];
                        let va = g * vj[a];
                        for c in 0..dim {
                            for b in pk[c]..pk[c + 1] {
                                let q = ck[b];
                                let add = va * vk[b].conj();
                                let cur = m.get(i * dim + c, p * dim + q) + add;
                                m.set(i * dim + c, p * dim + q, cur);
                            }
                        }
                    }
                }
            }
        }
        // Replace the first row with the trace constraint Tr ρ = 1.
        for col in 0..d2 {
            m.set(0, col, ZERO);
        }
        for d in 0..dim {
            m.set(0, d * dim + d, ONE);
        }
        let mut rhs_vec = vec![ZERO; d2];
        rhs_vec[0] = ONE;
        let x = lu_solve(&m, &rhs_vec)?;
        let mut rho = DnMatrix::from_vec(dim, dim, x)?;
        rho.hermitize();
        let tr = rho.trace().re;
        rho.scale(C64::new(1.0 / tr, 0.0));
        Ok(rho)
    }
}

/// Cap for [`LindbladModel::steady_state_direct`] (the dense generator is
/// dim²×dim²).
pub const MAX_DIRECT_STEADY_DIM: usize = 64;

/// Options for [`LindbladModel::evolve_fixed`].
#[derive(Clone, Debug)]
pub struct FixedStepOptions {
    /// Integration window (t0, t1).
    pub t_span: (f64, f64),
    /// Step ceiling; the actual step divides the span evenly.
    pub dt: f64,
    /// Record observables every this many steps.
    pub record_stride: usize,
    /// Re-symmetrize ρ every this many steps.
    pub hermitize_every: usize,
}

impl FixedStepOptions {
    pub fn new(t_span: (f64, f64), dt: f64) -> Self {
        FixedStepOptions { t_span, dt, record_stride: 1, hermitize_every: 64 }
    }
}

/// Options for [`LindbladModel::evolve_adaptive`].
#[derive(Clone, Debug)]
pub struct AdaptiveOptions {
    pub t_span: (f64, f64),
    /// Relative tolerance on each density-matrix element.
    pub rtol: f64,
    /// Absolute tolerance floor.
    pub atol: f64,
    /// Initial step; estimated from the first derivative when `None`.
    pub h_init: Option<f64>,
    /// Hard cap on accepted + rejected steps.
    pub max_steps: usize,
    /// Record observables every this many accepted steps.
    pub record_stride: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            t_span: (0.0, 1.0),
            rtol: 1e-8,
            atol: 1e-10,
            h_init: None,
            max_steps: 50_000_000,
            record_stride: 1,
        }
    }
}

/// Options for [`LindbladModel::relax_to_steady_state`].
#[derive(Clone, Debug)]
pub struct SteadyOptions {
    /// Stop when ‖dρ/dt‖₁ stays below this …
    pub residual_tol: f64,
    /// … for this many consecutive accepted steps.
    pub consecutive: usize,
    /// Give up (converged = false) beyond this time.
    pub t_cap: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl SteadyOptions {
    pub fn new(t_cap: f64) -> Self {
        // The integrator holds the state inside a band of width ≈ rtol·‖ρ‖
        // around the fixed point, so ‖dρ/dt‖₁ plateaus near ‖𝓛‖·rtol·‖ρ‖.
        // The defaults keep that plateau well below `residual_tol`.
        SteadyOptions {
            residual_tol: 1e-10,
            consecutive: 3,
            t_cap,
            rtol: 1e-11,
            atol: 1e-13,
            max_steps: 50_000_000,
        }
    }
}

/// Steady-state result with convergence metadata.
pub struct SteadyState {
    pub rho: DnMatrix,
    pub t_reached: f64,
    pub residual_one_norm: f64,
    pub accepted_steps: usize,
    /// False when the time cap was hit before the residual settled.
    pub converged: bool,
}

/// Recorded time series from an evolution.
pub struct Trajectory {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    /// values[observable][sample], aligned with `times`.
    pub values: Vec<Vec<C64>>,
    /// Max |Tr ρ − 1| seen at record points.
    pub trace_drift: f64,
    /// Max Hermiticity defect seen before re-symmetrization.
    pub hermiticity_drift: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub final_time: f64,
    pub final_state: DnMatrix,
}

impl Trajectory {
    fn new(observables: &[(String, Operator)], dim: usize) -> Self {
        Trajectory {
            times: Vec::new(),
            names: observables.iter().map(|(n, _)| n.clone()).collect(),
            values: vec![Vec::new(); observables.len()],
            trace_drift: 0.0,
            hermiticity_drift: 0.0,
            accepted_steps: 0,
            rejected_steps: 0,
            final_time: 0.0,
            final_state: DnMatrix::zeros(dim, dim),
        }
    }

    fn record(
        &mut self,
        t: f64,
        rho: &DnMatrix,
        observables: &[(String, Operator)],
    ) -> Result<(), LindbladError> {
        let tr = rho.trace();
        let drift = (tr - ONE).norm();
        self.trace_drift = self.trace_drift.max(drift);
        if drift > 1e-6 {
            return Err(LindbladError::TraceDrift { t, drift });
        }
        self.times.push(t);
        for (i, (_, op)) in observables.iter().enumerate() {
            self.values[i].push(op.expectation(rho));
        }
        Ok(())
    }

    /// Series by observable name.
    pub fn series(&self, name: &str) -> Option<&[C64]> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i].as_slice())
    }
}

/// Conservative radius of the Dormand–Prince 5(4) stability region (the
/// real-axis extent is ≈ 3.3; the margin absorbs norm-bound slack).
const DP5_STABILITY_SPAN: f64 = 2.5;

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// FSAL Dormand–Prince stepper bound to one model.
struct Dp5<'m> {
    model: &'m LindbladModel,
    y: DnMatrix,
    t: f64,
    h: f64,
    /// k[0] holds f(t, y) (FSAL), k[6] becomes f(t+h, y₁) on each attempt.
    k: Vec<DnMatrix>,
    y1: DnMatrix,
    stage: DnMatrix,
    ws: RhsScratch,
    opts: AdaptiveOptions,
    err_prev: f64,
    accepted: usize,
    rejected: usize,
    /// Max |y − y†| seen before the per-step Hermitian projection.
    max_herm_defect: f64,
    h_max: f64,
}

impl<'m> Dp5<'m> {
    fn new(
        model: &'m LindbladModel,
        y: DnMatrix,
        t0: f64,
        opts: AdaptiveOptions,
    ) -> Result<Self, LindbladError> {
        if !(opts.rtol > 0.0) || !(opts.atol > 0.0) {
            return Err(LindbladError::BadOptions("tolerances must be positive".into()));
        }
        let dim = model.space().total_dim();
        let mut ws = model.make_scratch();
        let mut k: Vec<DnMatrix> = (0..7).map(|_| DnMatrix::zeros(dim, dim)).collect();
        model.rhs(t0, &y, &mut k[0], &mut ws);
        // Resolve the fastest tone by ≥ 10 samples per period even when the
        // error estimator would allow longer steps, and never leave the
        // stability region: beyond it the error estimate can stay small for
        // several steps while stiff modes inflate, which traps the controller
        // in a reject/regrow limit cycle near fixed points.
        let tone_cap = if model.max_tone_frequency() > 0.0 {
            (2.0 * std::f64::consts::PI / model.max_tone_frequency()) / 10.0
        } else {
            f64::INFINITY
        };
        let h_max = tone_cap.min(model.stability_h_cap);
        let span = opts.t_span.1 - opts.t_span.0;
        let h = opts
            .h_init
            .unwrap_or_else(|| {
                let d0 = y.max_abs().max(opts.atol);
                let d1 = k[0].max_abs().max(1e-300);
                (0.01 * d0 / d1).min(span / 10.0)
            })
            .min(h_max)
            .min(span);
        if !(h > 0.0) || !h.is_finite() {
            return Err(LindbladError::BadOptions("initial step must be positive".into()));
        }
        Ok(Dp5 {
            model,
            y,
            t: t0,
            h,
            k,
            y1: DnMatrix::zeros(dim, dim),
            stage: DnMatrix::zeros(dim, dim),
            ws,
            opts,
            err_prev: 1.0,
            accepted: 0,
            rejected: 0,
            max_herm_defect: 0.0,
            h_max,
        })
    }

    /// Attempt one step (clamped to `t_end`); returns whether it was accepted.
    fn step(&mut self, t_end: Option<f64>) -> Result<bool, LindbladError> {
        if self.accepted + self.rejected >= self.opts.max_steps {
            return Err(LindbladError::BadOptions(format!(
                "step budget {} exhausted at t = {:.6e}",
                self.opts.max_steps, self.t
            )));
        }
        let mut h = self.h.min(self.h_max);
        if let Some(te) = t_end {
            h = h.min(te - self.t);
        }
        if !(h > 0.0) || h < 1e-14 * self.t.abs().max(1.0) {
            return Err(LindbladError::StepUnderflow { t: self.t, h });
        }
        let t = self.t;
        // Stages 2..6.
        {
            let (head, tail) = self.k.split_at_mut(1);
            self.stage.as_mut_slice().copy_from_slice(self.y.as_slice());
            axpy_r(h * A21, head[0].as_slice(), self.stage.as_mut_slice());
            self.model.rhs(t + C2 * h, &self.stage, &mut tail[0], &mut self.ws);
        }
        {
            let (head, tail) = self.k.split_at_mut(2);
            self.stage.as_mut_slice().copy_from_slice(self.y.as_slice());
            axpy_r(h * A31, head[0].as_slice(), self.stage.as_mut_slice());
            axpy_r(h * A32, head[1].as_slice(), self.stage.as_mut_slice());
            self.model.rhs(t + C3 * h, &self.stage, &mut tail[0], &mut self.ws);
        }
        {
            let (head, tail) = self.k.split_at_mut(3);
            self.stage.as_mut_slice().copy_from_slice(self.y.as_slice());
            axpy_r(h * A41, head[0].as_slice(), self.stage.as_mut_slice());
            axpy_r(h * A42, head[1].as_slice(), self.stage.as_mut_slice());
            axpy_r(h * A43, head[2].as_slice(), self.stage.as_mut_slice());
            self.model.rhs(t + C4 * h, &self.stage, &mut tail[0], &mut self.ws);
        }
        {
            let (head, tail) = self.k.split_at_mut(4);
            self.stage.as_mut_slice().copy_from_slice(self.y.as_slice());
            axpy_r(h * A51, head[0].as_slice(), self.stage.as_mut_slice());
            axpy_r(h * A52, head[1].as_slice(), self.stage.as_mut_slice());
            axpy_r(h * A53, head[2].as_slice(), self.stage.as_mut_slice());
            axpy_r(h * A54, head[3].as_slice(), self.stage.as_mut_slice());
            self.model.rhs(t + C5 * h, &self.stage, &mut tail[0], &mut self.ws);
        }
        {
            let (head, tail) = self.k.split_at_mut(5);
            self.stage.as_mut_slice().copy_from_slice(self.y.as_slice());
            axpy_r(h * A61, head[0].as_slice(), self.stage.as_mut_slice());
            axpy_r(h * A62, head[1].as_slice(), self.stage.as_mut_slice());
            axpy_r(h * A63, head[2].as_slice(), self.stage.as_mut_slice());
            axpy_r(h * A64, head[3].as_slice(), self.stage.as_mut_slice());
            axpy_r(h * A65, head[4].as_slice(), self.stage.as_mut_slice());
            self.model.rhs(t + h, &self.stage, &mut tail[0], &mut self.ws);
        }
        // 5th-order solution.
        self.y1.as_mut_slice().copy_from_slice(self.y.as_slice());
        axpy_r(h * B1, self.k[0].as_slice(), self.y1.as_mut_slice());
        axpy_r(h * B3, self.k[2].as_slice(), self.y1.as_mut_slice());
        axpy_r(h * B4, self.k[3].as_slice(), self.y1.as_mut_slice());
        axpy_r(h * B5, self.k[4].as_slice(), self.y1.as_mut_slice());
        axpy_r(h * B6, self.k[5].as_slice(), self.y1.as_mut_slice());
        // Project onto the Hermitian subspace before the FSAL stage: the RHS
        // is only the physical generator there, and the general dissipator
        // path seeds roundoff-size defects whose fictitious companion
        // dynamics is unstable for amplifying dissipators.
        let defect = self.y1.hermitize_measuring();
        self.max_herm_defect = self.max_herm_defect.max(defect);
        {
            let (head, tail) = self.k.split_at_mut(6);
            let _ = &head;
            self.model.rhs(t + h, &self.y1, &mut tail[0], &mut self.ws);
        }
        // Scaled RMS error over elements.
        let n = self.y.as_slice().len();
        let (atol, rtol) = (self.opts.atol, self.opts.rtol);
        let mut sum = 0.0f64;
        {
            let y0 = self.y.as_slice();
            let y1 = self.y1.as_slice();
            let k1 = self.k[0].as_slice();
            let k3 = self.k[2].as_slice();
            let k4 = self.k[3].as_slice();
            let k5 = self.k[4].as_slice();
            let k6 = self.k[5].as_slice();
            let k7 = self.k[6].as_slice();
            for i in 0..n {
                let e_re = h
                    * (E1 * k1[i].re
                        + E3 * k3[i].re
                        + E4 * k4[i].re
                        + E5 * k5[i].re
                        + E6 * k6[i].re
                        + E7 * k7[i].re);
                let e_im = h
                    * (E1 * k1[i].im
                        + E3 * k3[i].im
                        + E4 * k4[i].im
                        + E5 * k5[i].im
                        + E6 * k6[i].im
                        + E7 * k7[i].im);
                let mag0 = y0[i].norm();
                let mag1 = y1[i].norm();
                let sc = atol + rtol * mag0.max(mag1);
                let e = (e_re * e_re + e_im * e_im).sqrt() / sc;
                sum += e * e;
            }
        }
        let err = (sum / n as f64).sqrt();
        if !err.is_finite() {
            // Non-finite stage: shrink hard and retry.
            self.rejected += 1;
            self.h = h * 0.1;
            if self.h < 1e-14 {
                return Err(LindbladError::NonFiniteState { t: self.t });
            }
            return Ok(false);
        }
        if err <= 1.0 {
            std::mem::swap(&mut self.y, &mut self.y1);
            self.k.swap(0, 6); // FSAL: f(t+h, y₁) becomes next k₁.
            self.t = t + h;
            self.accepted += 1;
            let err_clamped = err.max(1e-10);
            let factor =
                (0.9 * err_clamped.powf(-0.7 / 5.0) * self.err_prev.powf(0.4 / 5.0)).clamp(0.2, 5.0);
            self.err_prev = err_clamped;
            self.h = (h * factor).min(self.h_max);
            Ok(true)
        } else {
            self.rejected += 1;
            self.h = h * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            Ok(false)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{squeezed_vacuum_state, StateVector};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Deterministic pseudo-random Hermitian density matrix.
    fn random_density(dim: usize, seed: &mut u64) -> DnMatrix {
        let mut next = || {
            *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((*seed >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut a = DnMatrix::zeros(dim, dim);
        for r in 0..dim {
            for cc in 0..dim {
                a.set(r, cc, c(next(), next()));
            }
        }
        // ρ = A A† / Tr(A A†): Hermitian, PSD, unit trace.
        let aa = a.matmul(&a.adjoint());
        let tr = aa.trace().re;
        let mut rho = aa;
        rho.scale(c(1.0 / tr, 0.0));
        rho.hermitize();
        rho
    }

    /// Textbook dense evaluation of the master equation for cross-checks.
    fn brute_force_rhs(
        h: &DnMatrix,
        jumps: &[DnMatrix],
        gamma: &[C64],
        rho: &DnMatrix,
    ) -> DnMatrix {
        let dim = rho.rows;
        let jn = jumps.len();
        let mut out = DnMatrix::zeros(dim, dim);
        let hr = h.matmul(rho);
        let rh = rho.matmul(h);
        for r in 0..dim {
            for cc in 0..dim {
                let v = C64::new(0.0, -1.0) * (hr.get(r, cc) - rh.get(r, cc));
                out.set(r, cc, v);
            }
        }
        for j in 0..jn {
            for k in 0..jn {
                let g = gamma[j * jn + k];
                if g == ZERO {
                    continue;
                }
                let lk_dag = jumps[k].adjoint();
                let feed = jumps[j].matmul(rho).matmul(&lk_dag);
                let aa = lk_dag.matmul(&jumps[j]);
                let anti1 = aa.matmul(rho);
                let anti2 = rho.matmul(&aa);
                for r in 0..dim {
                    for cc in 0..dim {
                        let v = out.get(r, cc)
                            + g * (feed.get(r, cc)
                                - (anti1.get(r, cc) + anti2.get(r, cc)).scale(0.5));
                        out.set(r, cc, v);
                    }
                }
            }
        }
        out
    }

    #[test]
    fn decaying_cavity_matches_exponential() {
        let sp = FockSpace::single("m", 6).unwrap();
        let kappa = 0.7;
        let a = Operator::annihilation(&sp, "m").unwrap();
        let model = LindbladModel::new(
            Operator::zero(&sp),
            vec![],
            DissipatorSet::diagonal(vec![(a.clone(), kappa)]).unwrap(),
        )
        .unwrap();
        let rho0 = StateVector::basis_state(&sp, &[2]).unwrap().density_matrix();
        let n_op = Operator::number(&sp, "m").unwrap();
        let obs = vec![("n".to_string(), n_op)];
        let traj = model
            .evolve_fixed(&rho0, &FixedStepOptions::new((0.0, 1.0), 1e-3), &obs)
            .unwrap();
        let series = traj.series("n").unwrap();
        for (i, &t) in traj.times.iter().enumerate() {
            let expect = 2.0 * (-kappa * t).exp();
            assert!(
                (series[i].re - expect).abs() < 1e-9,
                "t = {t}: {} vs {expect}",
                series[i].re
            );
        }
        // Adaptive integration agrees.
        let traj2 = model
            .evolve_adaptive(
                &rho0,
                &AdaptiveOptions { t_span: (0.0, 1.0), ..Default::default() },
                &obs,
            )
            .unwrap();
        let s2 = traj2.series("n").unwrap();
        let t_last = *traj2.times.last().unwrap();
        assert!((t_last - 1.0).abs() < 1e-12);
        assert!((s2.last().unwrap().re - 2.0 * (-kappa).exp()).abs() < 1e-7);
        assert!(traj2.trace_drift < 1e-9);
    }

    #[test]
    fn tone_at_zero_frequency_equals_static_drive() {
        let sp = FockSpace::single("q", 2).unwrap();
        let omega = 0.8;
        let sm = Operator::sigma_minus(&sp, "q").unwrap();
        let sp_op = sm.adjoint();
        let h_static = Operator::sum(
            &sp,
            &[(c(omega, 0.0), &sm), (c(omega, 0.0), &sp_op)],
        )
        .unwrap();
        let model_a =
            LindbladModel::new(h_static, vec![], DissipatorSet::none()).unwrap();
        let model_b = LindbladModel::new(
            Operator::zero(&sp),
            vec![ToneTerm { op: sp_op.clone(), amplitude: c(omega, 0.0), frequency: 0.0 }],
            DissipatorSet::none(),
        )
        .unwrap();
        let rho0 = StateVector::basis_state(&sp, &[0]).unwrap().density_matrix();
        let pe = Operator::from_triplets(&sp, &[(1, 1, ONE)]).unwrap();
        let obs = vec![("pe".to_string(), pe)];
        let opts = FixedStepOptions::new((0.0, 2.0), 5e-4);
        let ta = model_a.evolve_fixed(&rho0, &opts, &obs).unwrap();
        let tb = model_b.evolve_fixed(&rho0, &opts, &obs).unwrap();
        let (sa, sb) = (ta.series("pe").unwrap(), tb.series("pe").unwrap());
        for i in 0..sa.len() {
            assert!((sa[i] - sb[i]).norm() < 1e-12);
            let expect = (omega * ta.times[i]).sin().powi(2);
            assert!((sa[i].re - expect).abs() < 1e-8);
        }
    }

    #[test]
    fn detuned_tone_reproduces_rabi_formula() {
        // H(t) = Δ|e⟩⟨e| + Ω(e^{−iωt}σ₊ + e^{+iωt}σ₋) with δ = Δ − ω:
        // P_e(t) = Ω²/Ω_R² · sin²(Ω_R t), Ω_R = √(Ω² + (δ/2)²).
        let sp = FockSpace::single("q", 2).unwrap();
        let delta_e = 2.0;
        let omega_drive = 1.6;
        let rabi = 0.5;
        let det = delta_e - omega_drive;
        let pe_op = Operator::from_triplets(&sp, &[(1, 1, ONE)]).unwrap();
        let h_static = pe_op.scaled(c(delta_e, 0.0));
        let sp_op = Operator::sigma_minus(&sp, "q").unwrap().adjoint();
        let model = LindbladModel::new(
            h_static,
            vec![ToneTerm { op: sp_op, amplitude: c(rabi, 0.0), frequency: omega_drive }],
            DissipatorSet::none(),
        )
        .unwrap();
        let rho0 = StateVector::basis_state(&sp, &[0]).unwrap().density_matrix();
        let obs = vec![("pe".to_string(), pe_op.clone())];
        let traj = model
            .evolve_fixed(&rho0, &FixedStepOptions::new((0.0, 6.0), 2e-3), &obs)
            .unwrap();
        let s = traj.series("pe").unwrap();
        let omega_r = (rabi * rabi + 0.25 * det * det).sqrt();
        for (i, &t) in traj.times.iter().enumerate() {
            let expect = (rabi / omega_r).powi(2) * (omega_r * t).sin().powi(2);
            assert!((s[i].re - expect).abs() < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn gamma_validation() {
        let sp = FockSpace::single("m", 4).unwrap();
        let a = Operator::annihilation(&sp, "m").unwrap();
        let adag = a.adjoint();
        // Non-Hermitian rejected.
        let bad = [c(1.0, 0.0), c(0.5, 0.0), c(0.4, 0.0), c(1.0, 0.0)];
        assert!(matches!(
            DissipatorSet::new(vec![a.clone(), adag.clone()], &bad),
            Err(LindbladError::GammaNotHermitian { .. })
        ));
        // Indefinite rejected.
        let indef = [c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)];
        assert!(matches!(
            DissipatorSet::new(vec![a.clone(), adag.clone()], &indef),
            Err(LindbladError::GammaNotPsd { .. })
        ));
        // Quasi-mode rate matrix (rank 1, PSD) accepted.
        let r = 0.4f64;
        let kappa = 0.9;
        let g = [
            c(kappa * r.cosh().powi(2), 0.0),
            c(-0.5 * kappa * (2.0 * r).sinh(), 0.0),
            c(-0.5 * kappa * (2.0 * r).sinh(), 0.0),
            c(kappa * r.sinh().powi(2), 0.0),
        ];
        assert!(DissipatorSet::new(vec![a.clone(), adag], &g).is_ok());
        assert!(matches!(
            DissipatorSet::diagonal(vec![(a, -0.1)]),
            Err(LindbladError::NegativeRate(_))
        ));
    }

    #[test]
    fn quasimode_dissipator_equals_plain_decay() {
        // Jump set {β̂, β̂†} with γ = κ[[cosh²r, −½sinh2r],[−½sinh2r, sinh²r]]
        // is algebraically identical to plain κ·D[â] at any truncation.
        let sp = FockSpace::single("m", 12).unwrap();
        let kappa = 0.8;
        let r = 0.35f64;
        let a = Operator::annihilation(&sp, "m").unwrap();
        let beta = crate::fock::bogoliubov_operator(&sp, "m", r).unwrap();
        let beta_dag = beta.adjoint();
        let gamma = [
            c(kappa * r.cosh().powi(2), 0.0),
            c(-0.5 * kappa * (2.0 * r).sinh(), 0.0),
            c(-0.5 * kappa * (2.0 * r).sinh(), 0.0),
            c(kappa * r.sinh().powi(2), 0.0),
        ];
        let plain = LindbladModel::new(
            Operator::zero(&sp),
            vec![],
            DissipatorSet::diagonal(vec![(a, kappa)]).unwrap(),
        )
        .unwrap();
        let quasi = LindbladModel::new(
            Operator::zero(&sp),
            vec![],
            DissipatorSet::new(vec![beta, beta_dag], &gamma).unwrap(),
        )
        .unwrap();
        let mut seed = 42u64;
        for _ in 0..3 {
            let rho = random_density(12, &mut seed);
            let d1 = plain.rhs_dense(0.0, &rho);
            let d2 = quasi.rhs_dense(0.0, &rho);
            let scale = d1.max_abs().max(1.0);
            assert!(
                d1.max_abs_diff(&d2) < 1e-12 * scale,
                "defect {}",
                d1.max_abs_diff(&d2)
            );
        }
    }

    #[test]
    fn fast_and_general_paths_match_brute_force() {
        let sp = FockSpace::single("m", 9).unwrap();
        let kappa = 0.6;
        let a = Operator::annihilation(&sp, "m").unwrap();
        let n = Operator::number(&sp, "m").unwrap();
        let drive = Operator::sum(&sp, &[(c(0.3, 0.0), &a), (c(0.3, 0.0), &a.adjoint())]).unwrap();
        let h = Operator::sum(&sp, &[(c(0.9, 0.0), &n), (ONE, &drive)]).unwrap();
        let mut seed = 7u64;
        let rho = random_density(9, &mut seed);
        // Fast path: diagonal γ, ladder jump.
        let fast = LindbladModel::new(
            h.clone(),
            vec![],
            DissipatorSet::diagonal(vec![(a.clone(), kappa)]).unwrap(),
        )
        .unwrap();
        assert!(matches!(fast.kernel, DissKernel::Fast(_)));
        let brute = brute_force_rhs(&h.to_dense(), &[a.to_dense()], &[c(kappa, 0.0)], &rho);
        let got = fast.rhs_dense(0.0, &rho);
        assert!(got.max_abs_diff(&brute) < 1e-13 * brute.max_abs().max(1.0));
        // General path: quasi-mode pair with off-diagonal γ.
        let r = 0.25f64;
        let beta = crate::fock::bogoliubov_operator(&sp, "m", r).unwrap();
        let beta_dag = beta.adjoint();
        let gamma = [
            c(kappa * r.cosh().powi(2), 0.0),
            c(-0.5 * kappa * (2.0 * r).sinh(), 0.0),
            c(-0.5 * kappa * (2.0 * r).sinh(), 0.0),
            c(kappa * r.sinh().powi(2), 0.0),
        ];
        let general = LindbladModel::new(
            h.clone(),
            vec![],
            DissipatorSet::new(vec![beta.clone(), beta_dag.clone()], &gamma).unwrap(),
        )
        .unwrap();
        assert!(matches!(general.kernel, DissKernel::General));
        let brute2 = brute_force_rhs(
            &h.to_dense(),
            &[beta.to_dense(), beta_dag.to_dense()],
            &gamma,
            &rho,
        );
        let got2 = general.rhs_dense(0.0, &rho);
        assert!(got2.max_abs_diff(&brute2) < 1e-13 * brute2.max_abs().max(1.0));
        // Tone path against brute force at one fixed probe time.
        let t_probe = 0.37;
        let tone_op = a.adjoint();
        let amp = c(0.2, 0.1);
        let freq = 2.5;
        let toned = LindbladModel::new(
            h.clone(),
            vec![ToneTerm { op: tone_op.clone(), amplitude: amp, frequency: freq }],
            DissipatorSet::diagonal(vec![(a.clone(), kappa)]).unwrap(),
        )
        .unwrap();
        let phase = amp * C64::new(0.0, -freq * t_probe).exp();
        let mut h_t = h.to_dense();
        let tone_dense = tone_op.to_dense();
        let tone_dag_dense = tone_op.adjoint().to_dense();
        for rr in 0..9 {
            for cc2 in 0..9 {
                let v = h_t.get(rr, cc2)
                    + phase * tone_dense.get(rr, cc2)
                    + phase.conj() * tone_dag_dense.get(rr, cc2);
                h_t.set(rr, cc2, v);
            }
        }
        let brute3 = brute_force_rhs(&h_t, &[a.to_dense()], &[c(kappa, 0.0)], &rho);
        let got3 = toned.rhs_dense(t_probe, &rho);
        assert!(got3.max_abs_diff(&brute3) < 1e-13 * brute3.max_abs().max(1.0));
    }

    #[test]
    fn fixed_step_rejects_unresolved_tone() {
        let sp = FockSpace::single("q", 2).unwrap();
        let sp_op = Operator::sigma_minus(&sp, "q").unwrap().adjoint();
        let model = LindbladModel::new(
            Operator::zero(&sp),
            vec![ToneTerm { op: sp_op, amplitude: ONE, frequency: 10.0 }],
            DissipatorSet::none(),
        )
        .unwrap();
        let rho0 = StateVector::basis_state(&sp, &[0]).unwrap().density_matrix();
        // Limit is (2π/10)/20 ≈ 0.0314.
        let res = model.evolve_fixed(&rho0, &FixedStepOptions::new((0.0, 1.0), 0.05), &[]);
        assert!(matches!(res, Err(LindbladError::StepTooLarge { .. })));
        assert!(model
            .evolve_fixed(&rho0, &FixedStepOptions::new((0.0, 0.2), 0.03), &[])
            .is_ok());
    }

    #[test]
    fn driven_cavity_steady_state_direct_vs_relaxed() {
        // H = Δ â†â + ℰ(â + â†), κ·D[â]: ⟨â⟩_ss = −iℰ/(iΔ + κ/2).
        let sp = FockSpace::single("m", 12).unwrap();
        let (delta, eps, kappa) = (0.3, 0.2, 1.0);
        let a = Operator::annihilation(&sp, "m").unwrap();
        let n = Operator::number(&sp, "m").unwrap();
        let drive = Operator::sum(&sp, &[(c(eps, 0.0), &a), (c(eps, 0.0), &a.adjoint())]).unwrap();
        let h = Operator::sum(&sp, &[(c(delta, 0.0), &n), (ONE, &drive)]).unwrap();
        let model = LindbladModel::new(
            h,
            vec![],
            DissipatorSet::diagonal(vec![(a.clone(), kappa)]).unwrap(),
        )
        .unwrap();
        let direct = model.steady_state_direct().unwrap();
        let vacuum = StateVector::vacuum(&sp).density_matrix();
        let relaxed = model
            .relax_to_steady_state(&vacuum, &SteadyOptions::new(200.0))
            .unwrap();
        assert!(relaxed.converged, "residual {}", relaxed.residual_one_norm);
        assert!(
            direct.max_abs_diff(&relaxed.rho) < 1e-7,
            "direct vs relaxed {}",
            direct.max_abs_diff(&relaxed.rho)
        );
        let alpha = C64::new(0.0, -eps) / (C64::new(kappa / 2.0, delta));
        let got = a.expectation(&direct);
        assert!((got - alpha).norm() < 1e-6, "⟨a⟩ = {got} vs {alpha}");
        // The generator annihilates the direct solution.
        assert!(model.residual_one_norm(0.0, &direct) < 1e-10);
    }

    #[test]
    fn steady_state_requires_autonomy() {
        let sp = FockSpace::single("m", 4).unwrap();
        let a = Operator::annihilation(&sp, "m").unwrap();
        let model = LindbladModel::new(
            Operator::zero(&sp),
            vec![ToneTerm { op: a.adjoint(), amplitude: ONE, frequency: 1.0 }],
            DissipatorSet::diagonal(vec![(a, 1.0)]).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            model.steady_state_direct(),
            Err(LindbladError::TimeDependentSteadyState)
        ));
        let rho0 = StateVector::vacuum(&sp).density_matrix();
        assert!(matches!(
            model.relax_to_steady_state(&rho0, &SteadyOptions::new(10.0)),
            Err(LindbladError::TimeDependentSteadyState)
        ));
    }

    #[test]
    fn squeezed_relaxation_toward_quasimode_vacuum() {
        // With only the quasi-mode dissipator (H = 0), the system relaxes to
        // the squeezed vacuum annihilated by β̂.
        let sp = FockSpace::single("m", 24).unwrap();
        let r = 0.3f64;
        let kappa = 1.0;
        let beta = crate::fock::bogoliubov_operator(&sp, "m", r).unwrap();
        let model = LindbladModel::new(
            Operator::zero(&sp),
            vec![],
            DissipatorSet::diagonal(vec![(beta, kappa)]).unwrap(),
        )
        .unwrap();
        let vac = StateVector::vacuum(&sp).density_matrix();
        let out = model
            .relax_to_steady_state(&vac, &SteadyOptions::new(400.0))
            .unwrap();
        assert!(out.converged);
        let target = squeezed_vacuum_state(&sp, "m", r).unwrap().density_matrix();
        assert!(
            out.rho.max_abs_diff(&target) < 1e-6,
            "distance {}",
            out.rho.max_abs_diff(&target)
        );
    }

    #[test]
    fn adaptive_matches_fixed_on_driven_cavity() {
        let sp = FockSpace::single("m", 10).unwrap();
        let a = Operator::annihilation(&sp, "m").unwrap();
        let n = Operator::number(&sp, "m").unwrap();
        let model = LindbladModel::new(
            n.scaled(c(0.4, 0.0)),
            vec![ToneTerm { op: a.adjoint(), amplitude: c(0.3, 0.0), frequency: 1.2 }],
            DissipatorSet::diagonal(vec![(a, 0.8)]).unwrap(),
        )
        .unwrap();
        let rho0 = StateVector::vacuum(&sp).density_matrix();
        let obs = vec![("n".to_string(), n)];
        let fixed = model
            .evolve_fixed(&rho0, &FixedStepOptions::new((0.0, 5.0), 5e-4), &obs)
            .unwrap();
        let adaptive = model
            .evolve_adaptive(
                &rho0,
                &AdaptiveOptions { t_span: (0.0, 5.0), ..Default::default() },
                &obs,
            )
            .unwrap();
        let nf = fixed.series("n").unwrap().last().unwrap().re;
        let na = adaptive.series("n").unwrap().last().unwrap().re;
        assert!((nf - na).abs() < 1e-6, "fixed {nf} vs adaptive {na}");
        assert!(adaptive.rejected_steps < adaptive.accepted_steps.max(20));
        assert!(fixed.trace_drift < 1e-10);
        assert!(fixed.hermiticity_drift < 1e-10);
    }

    #[test]
    #[ignore]
    fn kernel_throughput_smoke() {
        // Rough single-thread RHS cost at production size; run with
        // --ignored to calibrate runtimes.
        let sp = FockSpace::new(&[("p", 38), ("s", 19)]).unwrap();
        let dim = sp.total_dim();
        let ap = Operator::annihilation(&sp, "p").unwrap();
        let as_ = Operator::annihilation(&sp, "s").unwrap();
        let np = Operator::number(&sp, "p").unwrap();
        let ns = Operator::number(&sp, "s").unwrap();
        let as2 = as_.matmul(&as_).unwrap();
        let coupling = as2.matmul(&ap.adjoint()).unwrap();
        let h = Operator::sum(
            &sp,
            &[
                (c(1.0, 0.0), &np),
                (c(2.0, 0.0), &ns),
                (c(0.05, 0.0), &as2),
                (c(0.05, 0.0), &as2.adjoint()),
                (c(0.1, 0.0), &coupling),
                (c(0.1, 0.0), &coupling.adjoint()),
            ],
        )
        .unwrap();
        let model = LindbladModel::new(
            h,
            vec![
                ToneTerm { op: as_.adjoint(), amplitude: c(0.3, 0.1), frequency: 30.0 },
                ToneTerm { op: as_.adjoint(), amplitude: c(0.2, -0.1), frequency: 33.0 },
            ],
            DissipatorSet::diagonal(vec![(as_.clone(), 0.2), (ap.clone(), 0.9)]).unwrap(),
        )
        .unwrap();
        let mut seed = 3u64;
        let rho = random_density(dim, &mut seed);
        let mut out = DnMatrix::zeros(dim, dim);
        let mut ws = model.make_scratch();
        let reps = 40;
        let start = std::time::Instant::now();
        for i in 0..reps {
            model.rhs(i as f64 * 1e-3, &rho, &mut out, &mut ws);
        }
        let dt = start.elapsed().as_secs_f64();
        println!(
            "dim = {dim}: {:.2} ms/rhs ({} reps in {:.3} s)",
            1e3 * dt / reps as f64,
            reps,
            dt
        );
    }
}
