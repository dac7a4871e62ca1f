//! Exact many-body layer on the `2^M` occupation-number space.

use crate::error::{Error, Result};
use crate::linalg::{c, eigh, CMatrix, C64, I, ZERO};
use crate::modes::{BasisCatalog, Branch, ModeLabel};
use crate::onebody::{Envelope, OneBodyDrive};

pub const DEFAULT_FOCK_CAP: usize = 14;
/// Largest mode count accepted by the dense spectrum check.
pub const SPECTRUM_CAP: usize = 10;

/// Compressed-sparse-row complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets, summing duplicates and
    /// dropping exact zeros.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, col, _)| (r, col));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, col, v) in triplets {
            if last == Some((r, col)) {
                *vals.last_mut().expect("duplicate follows an entry") += v;
            } else {
                cols.push(col);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, col));
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut m = Self { dim, row_ptr, cols, vals };
        m.prune();
        m
    }

    fn prune(&mut self) {
        if self.vals.iter().all(|v| *v != ZERO) {
            return;
        }
        let mut triplets = Vec::with_capacity(self.vals.len());
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                if self.vals[k] != ZERO {
                    triplets.push((r, self.cols[k], self.vals[k]));
                }
            }
        }
        *self = Self::from_triplets(self.dim, triplets);
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, row_ptr: (0..=dim).collect(), cols: (0..dim).collect(), vals: vec![c(1.0); dim] }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, row_ptr: vec![0; dim + 1], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k])))
    }

    pub fn get(&self, r: usize, col: usize) -> C64 {
        let row = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        match row.binary_search(&col) {
            Ok(k) => self.vals[self.row_ptr[r] + k],
            Err(_) => ZERO,
        }
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[C64], y: &mut [C64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *out = acc;
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.dim];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, col, v)| (col, r, v.conj())).collect())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let mut triplets = Vec::new();
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let mid = self.cols[k];
                for l in other.row_ptr[mid]..other.row_ptr[mid + 1] {
                    triplets.push((r, other.cols[l], self.vals[k] * other.vals[l]));
                }
            }
        }
        Self::from_triplets(self.dim, triplets)
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &Self, factor: C64) -> Self {
        let triplets = self.triplets().chain(other.triplets().map(|(r, col, v)| (r, col, v * factor))).collect();
        Self::from_triplets(self.dim, triplets)
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= factor);
        out.prune();
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |acc, v| acc.max(v.norm()))
    }

    /// Largest absolute row sum, an upper bound on the spectral norm.
    pub fn inf_norm(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.vals[self.row_ptr[r]..self.row_ptr[r + 1]].iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (r, col, v) in self.triplets() {
            out[(r, col)] += v;
        }
        out
    }
}

/// Occupation basis of `M` modes; state `s` has mode `i` filled when bit `i`
/// is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockBasis {
    modes: usize,
}

impl FockBasis {
    pub fn new(modes: usize, cap: usize) -> Result<Self> {
        if modes > cap {
            return Err(Error::FockCapExceeded { modes, cap });
        }
        Ok(Self { modes })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        1 << self.modes
    }
}

/// Number of occupied modes below `i`: the Jordan-Wigner sign exponent.
fn occupied_below(s: usize, i: usize) -> u32 {
    (s & ((1usize << i) - 1)).count_ones()
}

fn parity(n: u32) -> f64 {
    if n.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `c_i^dagger c_j |s> = sign |t>`, or `None` when it vanishes.
fn hop(s: usize, i: usize, j: usize) -> Option<(usize, f64)> {
    if s & (1 << j) == 0 {
        return None;
    }
    let mid = s & !(1 << j);
    if mid & (1 << i) != 0 {
        return None;
    }
    Some((mid | (1 << i), parity(occupied_below(s, j) + occupied_below(mid, i))))
}

/// Annihilators `c_i` for every catalog mode. Electron operators are
/// `b = c` on positive modes; positron operators are `d = c^dagger` on
/// negative modes.
#[derive(Debug, Clone)]
pub struct LadderSet {
    basis: FockBasis,
    annihilators: Vec<SparseMatrix>,
    creators: Vec<SparseMatrix>,
    branches: Vec<Branch>,
}

fn annihilator(basis: FockBasis, i: usize, signed: bool) -> SparseMatrix {
    let triplets = (0..basis.dim())
        .filter(|s| s & (1 << i) != 0)
        .map(|s| {
            let sign = if signed { parity(occupied_below(s, i)) } else { 1.0 };
            (s & !(1 << i), s, c(sign))
        })
        .collect();
    SparseMatrix::from_triplets(basis.dim(), triplets)
}

fn ladders_from(branches: Vec<Branch>, cap: usize, signed: bool) -> Result<LadderSet> {
    let basis = FockBasis::new(branches.len(), cap)?;
    let annihilators: Vec<SparseMatrix> = (0..branches.len()).map(|i| annihilator(basis, i, signed)).collect();
    let creators = annihilators.iter().map(SparseMatrix::adjoint).collect();
    Ok(LadderSet { basis, annihilators, creators, branches })
}

fn catalog_branches(catalog: &BasisCatalog) -> Vec<Branch> {
    catalog.modes().iter().map(|md| md.label.branch).collect()
}

pub fn build_ladders(catalog: &BasisCatalog) -> Result<LadderSet> {
    ladders_from(catalog_branches(catalog), DEFAULT_FOCK_CAP, true)
}

pub fn build_ladders_with_cap(catalog: &BasisCatalog, cap: usize) -> Result<LadderSet> {
    ladders_from(catalog_branches(catalog), cap, true)
}

/// Ladders for `modes` abstract modes with no catalog behind them, all
/// labelled as electron modes.
pub fn bare_ladders(modes: usize) -> Result<LadderSet> {
    ladders_from(vec![Branch::Positive; modes], DEFAULT_FOCK_CAP, true)
}

/// Ladders with the sign strings left out. Modes then commute instead of
/// anticommuting; used as a negative control for the algebra checks.
#[doc(hidden)]
pub fn build_ladders_without_sign_strings(catalog: &BasisCatalog) -> Result<LadderSet> {
    ladders_from(catalog_branches(catalog), DEFAULT_FOCK_CAP, false)
}

impl LadderSet {
    pub fn basis(&self) -> FockBasis {
        self.basis
    }

    pub fn modes(&self) -> usize {
        self.basis.modes()
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn c(&self, i: usize) -> &SparseMatrix {
        &self.annihilators[i]
    }

    pub fn c_dag(&self, i: usize) -> &SparseMatrix {
        &self.creators[i]
    }

    pub fn branch(&self, i: usize) -> Branch {
        self.branches[i]
    }

    /// `b` for a positive mode, `d = c^dagger` for a negative mode.
    pub fn particle_annihilator(&self, i: usize) -> &SparseMatrix {
        match self.branches[i] {
            Branch::Positive => &self.annihilators[i],
            Branch::Negative => &self.creators[i],
        }
    }

    /// Largest residual of `{c_i, c_j^dagger} = delta_ij` and
    /// `{c_i, c_j} = 0` over all pairs.
    pub fn car_residual(&self) -> f64 {
        let id = SparseMatrix::identity(self.dim());
        let mut worst = 0.0f64;
        for i in 0..self.modes() {
            for j in i..self.modes() {
                let mixed = self.c(i).matmul(self.c_dag(j)).add_scaled(&self.c_dag(j).matmul(self.c(i)), c(1.0));
                let mixed = if i == j { mixed.add_scaled(&id, c(-1.0)) } else { mixed };
                let pure = self.c(i).matmul(self.c(j)).add_scaled(&self.c(j).matmul(self.c(i)), c(1.0));
                worst = worst.max(mixed.max_abs()).max(pure.max_abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    amplitudes: Vec<C64>,
}

impl FockState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let state = Self { amplitudes };
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter { name: "amplitudes", reason: format!("norm {norm} differs from 1") });
        }
        Ok(state)
    }

    pub fn basis_state(dim: usize, s: usize) -> Self {
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[s] = c(1.0);
        Self { amplitudes }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// `C_ij = <c_i^dagger c_j>`.
    pub fn correlation(&self) -> CMatrix {
        let modes = self.dim().trailing_zeros() as usize;
        let mut out = CMatrix::zeros(modes, modes);
        for (s, amp) in self.amplitudes.iter().enumerate() {
            if *amp == ZERO {
                continue;
            }
            for j in (0..modes).filter(|j| s & (1 << j) != 0) {
                for i in 0..modes {
                    if let Some((t, sign)) = hop(s, i, j) {
                        out[(i, j)] += self.amplitudes[t].conj() * amp * sign;
                    }
                }
            }
        }
        out
    }
}

/// Filled sea: every negative mode occupied, every positive mode empty.
pub fn vacuum_state(ladders: &LadderSet) -> FockState {
    let s = (0..ladders.modes()).filter(|&i| ladders.branch(i) == Branch::Negative).fold(0usize, |acc, i| acc | (1 << i));
    FockState::basis_state(ladders.dim(), s)
}

/// `(b_1^dagger + b_2^dagger)|0> / sqrt(2)` for two distinct positive modes.
pub fn omega0_state(catalog: &BasisCatalog, ladders: &LadderSet, mode1: ModeLabel, mode2: ModeLabel) -> Result<FockState> {
    let (i1, i2) = electron_pair(catalog, mode1, mode2)?;
    let vac = vacuum_state(ladders);
    let a = ladders.c_dag(i1).mul_vec(vac.amplitudes());
    let b = ladders.c_dag(i2).mul_vec(vac.amplitudes());
    let s = 0.5f64.sqrt();
    FockState::new(a.iter().zip(&b).map(|(x, y)| (x + y) * s).collect())
}

/// Catalog indices of two distinct positive-branch modes.
pub fn electron_pair(catalog: &BasisCatalog, mode1: ModeLabel, mode2: ModeLabel) -> Result<(usize, usize)> {
    if mode1 == mode2 {
        return Err(Error::InvalidModes(format!("identical modes {mode1}")));
    }
    for md in [mode1, mode2] {
        if md.branch != Branch::Positive {
            return Err(Error::InvalidModes(format!("{md} is not a positive-energy mode")));
        }
    }
    Ok((catalog.index_of(&mode1)?, catalog.index_of(&mode2)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManyBodyOperator {
    matrix: SparseMatrix,
    hermitian: bool,
}

impl ManyBodyOperator {
    pub fn new(matrix: SparseMatrix) -> Self {
        let scale = matrix.max_abs().max(1.0);
        let hermitian = matrix.add_scaled(&matrix.adjoint(), c(-1.0)).max_abs() <= 1e-12 * scale;
        Self { matrix, hermitian }
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// `sum_ij h_ij c_i^dagger c_j`, assembled directly from occupation
/// bitstrings.
pub fn quantize(h: &CMatrix, ladders: &LadderSet) -> Result<ManyBodyOperator> {
    let m = ladders.modes();
    if h.nrows() != m || h.ncols() != m {
        return Err(Error::DimensionMismatch { expected: m, found: h.nrows() });
    }
    let pairs: Vec<(usize, usize, C64)> = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .filter(|&(i, j)| h[(i, j)] != ZERO)
        .map(|(i, j)| (i, j, h[(i, j)]))
        .collect();
    let mut triplets = Vec::new();
    for s in 0..ladders.dim() {
        for &(i, j, v) in &pairs {
            if let Some((t, sign)) = hop(s, i, j) {
                triplets.push((t, s, v * sign));
            }
        }
    }
    Ok(ManyBodyOperator::new(SparseMatrix::from_triplets(ladders.dim(), triplets)))
}

/// `max_i |[H, c_i] + sum_j h_ij c_j|` with `H = quantize(h)`.
pub fn commutator_identity_check(h: &CMatrix, ladders: &LadderSet) -> Result<f64> {
    let big = quantize(h, ladders)?;
    let hm = big.matrix();
    let mut worst = 0.0f64;
    for i in 0..ladders.modes() {
        let ci = ladders.c(i);
        let mut r = hm.matmul(ci).add_scaled(&ci.matmul(hm), c(-1.0));
        for j in 0..ladders.modes() {
            if h[(i, j)] != ZERO {
                r = r.add_scaled(ladders.c(j), h[(i, j)]);
            }
        }
        worst = worst.max(r.max_abs());
    }
    Ok(worst)
}

pub fn expectation(state: &FockState, op: &ManyBodyOperator) -> Result<C64> {
    if state.dim() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), found: state.dim() });
    }
    let y = op.matrix().mul_vec(state.amplitudes());
    Ok(state.amplitudes().iter().zip(&y).map(|(a, b)| a.conj() * b).sum())
}

/// Quantized `h(t) = static + sum_k g_k(t) H_k`.
#[derive(Debug, Clone)]
pub struct ManyBodyDrive {
    static_part: ManyBodyOperator,
    terms: Vec<(ManyBodyOperator, Envelope)>,
}

impl ManyBodyDrive {
    pub fn new(static_part: ManyBodyOperator, terms: Vec<(ManyBodyOperator, Envelope)>) -> Result<Self> {
        for op in std::iter::once(&static_part).chain(terms.iter().map(|(op, _)| op)) {
            if !op.is_hermitian() {
                return Err(Error::NotHermitian(op.matrix().add_scaled(&op.matrix().adjoint(), c(-1.0)).max_abs()));
            }
        }
        Ok(Self { static_part, terms })
    }

    pub fn quantized(drive: &OneBodyDrive, ladders: &LadderSet) -> Result<Self> {
        let static_part = quantize(drive.static_part(), ladders)?;
        let terms = drive
            .terms()
            .iter()
            .map(|(mat, env)| Ok((quantize(mat, ladders)?, env.clone())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(static_part, terms)
    }

    pub fn dim(&self) -> usize {
        self.static_part.dim()
    }

    fn apply(&self, t: f64, x: &[C64], y: &mut [C64], scratch: &mut [C64]) {
        self.static_part.matrix().mul_vec_into(x, y);
        for (op, env) in &self.terms {
            let g = env.value(t);
            if g == 0.0 {
                continue;
            }
            op.matrix().mul_vec_into(x, scratch);
            for (yi, si) in y.iter_mut().zip(scratch.iter()) {
                *yi += si * g;
            }
        }
    }

    fn norm_bound(&self, t: f64) -> f64 {
        self.static_part.matrix().inf_norm() + self.terms.iter().map(|(op, env)| op.matrix().inf_norm() * env.value(t).abs()).sum::<f64>()
    }
}

/// States sampled along a Schrödinger evolution.
#[derive(Debug, Clone)]
pub struct FockTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<FockState>,
}

/// `x <- exp(-i dt H) x` by a scaled Taylor series, with the action of `H`
/// supplied by `apply`.
fn taylor_exp_action(apply: &mut dyn FnMut(&[C64], &mut [C64]), norm: f64, dt: f64, x: &mut [C64]) {
    let substeps = ((norm * dt.abs()) / 0.5).ceil().max(1.0) as usize;
    let tau = dt / substeps as f64;
    let dim = x.len();
    let mut term = vec![ZERO; dim];
    let mut next = vec![ZERO; dim];
    for _ in 0..substeps {
        term.copy_from_slice(x);
        let scale = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        for k in 1..=60 {
            apply(&term, &mut next);
            let factor = -I * tau / k as f64;
            let mut size = 0.0f64;
            for (ti, ni) in term.iter_mut().zip(&next) {
                *ti = ni * factor;
                size = size.max(ti.norm());
            }
            for (xi, ti) in x.iter_mut().zip(&term) {
                *xi += ti;
            }
            if size <= 1e-18 * scale {
                break;
            }
        }
    }
}

fn evolve(
    state: &FockState,
    t0: f64,
    t1: f64,
    n_steps: usize,
    stride: usize,
    mut step: impl FnMut(f64, f64, &mut [C64]) -> Result<()>,
) -> Result<FockTrajectory> {
    if n_steps == 0 || stride == 0 {
        return Err(Error::InvalidParameter { name: "steps", reason: "steps and stride must be >= 1".into() });
    }
    let dt = (t1 - t0) / n_steps as f64;
    let mut x = state.amplitudes().to_vec();
    let mut times = vec![t0];
    let mut states = vec![state.clone()];
    for k in 0..n_steps {
        step(t0 + (k as f64 + 0.5) * dt, dt, &mut x)?;
        if (k + 1) % stride == 0 || k + 1 == n_steps {
            times.push(t0 + (k + 1) as f64 * dt);
            states.push(FockState { amplitudes: x.clone() });
        }
    }
    Ok(FockTrajectory { times, states })
}

/// Midpoint-exponential Schrödinger stepping `|psi> <- exp(-i H(t + dt/2) dt)|psi>`
/// for an arbitrary generator. States are kept every `stride` steps and at
/// the end.
pub fn evolve_schrodinger(
    state: &FockState,
    h: impl Fn(f64) -> ManyBodyOperator,
    t0: f64,
    t1: f64,
    n_steps: usize,
    stride: usize,
) -> Result<FockTrajectory> {
    evolve(state, t0, t1, n_steps, stride, |t, dt, x| {
        let op = h(t);
        if !op.is_hermitian() {
            return Err(Error::NotHermitian(op.matrix().add_scaled(&op.matrix().adjoint(), c(-1.0)).max_abs()));
        }
        if op.dim() != x.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), found: op.dim() });
        }
        taylor_exp_action(&mut |a, b| op.matrix().mul_vec_into(a, b), op.matrix().inf_norm(), dt, x);
        Ok(())
    })
}

/// As [`evolve_schrodinger`] for a quantized drive, applying the terms
/// without assembling their sum.
pub fn evolve_driven(state: &FockState, drive: &ManyBodyDrive, t0: f64, t1: f64, n_steps: usize, stride: usize) -> Result<FockTrajectory> {
    if drive.dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: drive.dim(), found: state.dim() });
    }
    let mut scratch = vec![ZERO; state.dim()];
    evolve(state, t0, t1, n_steps, stride, |t, dt, x| {
        let norm = drive.norm_bound(t);
        taylor_exp_action(&mut |a, b| drive.apply(t, a, b, &mut scratch), norm, dt, x);
        Ok(())
    })
}

/// Exact-diagonalization check of the free-field energy operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    /// `-sum E_p` over the sea.
    pub vacuum_energy: f64,
    pub min_eigenvalue: f64,
    /// Diagonal entry of the vacuum bitstring.
    pub vacuum_diagonal: f64,
    /// Largest off-diagonal entry in the occupation basis.
    pub off_diagonal_max: f64,
    /// Number of eigenvalues within tolerance of the minimum.
    pub ground_multiplicity: usize,
    /// Second distinct eigenvalue minus the minimum.
    pub gap: f64,
    pub lightest_mode_energy: f64,
}

impl SpectrumReport {
    pub const TOL: f64 = 1e-10;

    /// Largest deviation from the expected structure; zero when it holds.
    pub fn residual(&self) -> f64 {
        let mut r = (self.min_eigenvalue - self.vacuum_energy).abs().max((self.vacuum_diagonal - self.min_eigenvalue).abs()).max(self.off_diagonal_max);
        r = r.max((self.lightest_mode_energy - self.gap).max(0.0));
        if self.ground_multiplicity != 1 {
            r = r.max(1.0);
        }
        r
    }

    pub fn passed(&self) -> bool {
        self.residual() <= Self::TOL
    }
}

pub fn h0_spectrum_check(ladders: &LadderSet, catalog: &BasisCatalog) -> Result<SpectrumReport> {
    if ladders.modes() > SPECTRUM_CAP {
        return Err(Error::FockCapExceeded { modes: ladders.modes(), cap: SPECTRUM_CAP });
    }
    let h0 = crate::onebody::h0_matrix(catalog);
    let dense = quantize(h0.entries(), ladders)?.matrix().to_dense();
    let vac = vacuum_state(ladders);
    let vac_index = vac.amplitudes().iter().position(|a| *a != ZERO).expect("vacuum is a basis state");
    let mut off_diagonal_max = 0.0f64;
    for r in 0..dense.nrows() {
        for col in 0..dense.ncols() {
            if r != col {
                off_diagonal_max = off_diagonal_max.max(dense[(r, col)].norm());
            }
        }
    }
    let (values, _) = eigh(&dense);
    let min = values[0];
    let ground_multiplicity = values.iter().filter(|v| (*v - min).abs() <= SpectrumReport::TOL).count();
    let gap = values.iter().find(|v| **v - min > SpectrumReport::TOL).map(|v| v - min).unwrap_or(0.0);
    let lightest_mode_energy = catalog.modes().iter().map(|md| md.energy).fold(f64::INFINITY, f64::min);
    Ok(SpectrumReport {
        vacuum_energy: catalog.vacuum_energy(),
        min_eigenvalue: min,
        vacuum_diagonal: dense[(vac_index, vac_index)].re,
        off_diagonal_max,
        ground_multiplicity,
        gap,
        lightest_mode_energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::modes::{build_catalog, MomentumGrid, Spin};
    use crate::onebody::h0_matrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn catalog(n_min: i32, n_max: i32) -> BasisCatalog {
        build_catalog(&MomentumGrid::window(2.0 * PI, 1, n_min, n_max).unwrap(), 1.0).unwrap()
    }

    fn random_hermitian(m: usize, seed: u64) -> CMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = CMatrix::from_fn(m, m, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        (&a + a.adjoint()) * c(0.5)
    }

    /// `sum h_ij c_i^dagger c_j` by explicit sparse products.
    fn quantize_by_products(h: &CMatrix, ladders: &LadderSet) -> SparseMatrix {
        let mut acc = SparseMatrix::zeros(ladders.dim());
        for i in 0..ladders.modes() {
            for j in 0..ladders.modes() {
                acc = acc.add_scaled(&ladders.c_dag(i).matmul(ladders.c(j)), h[(i, j)]);
            }
        }
        acc
    }

    #[test]
    fn sparse_basics() {
        let a = SparseMatrix::from_triplets(3, vec![(0, 1, c(2.0)), (2, 0, I), (0, 1, c(1.0)), (1, 1, ZERO)]);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 1), c(3.0));
        assert_eq!(a.adjoint().get(0, 2), -I);
        assert_eq!(a.mul_vec(&[c(1.0), c(1.0), c(1.0)]), vec![c(3.0), ZERO, I]);
        let dense = a.to_dense();
        assert!(max_abs(&(a.matmul(&a.adjoint()).to_dense() - &dense * dense.adjoint())) < 1e-15);
    }

    #[test]
    fn two_mode_car() {
        let ladders = build_ladders(&catalog(0, 0)).unwrap();
        let id = SparseMatrix::identity(ladders.dim());
        let anti = ladders.c(0).matmul(ladders.c_dag(0)).add_scaled(&ladders.c_dag(0).matmul(ladders.c(0)), c(1.0));
        assert_eq!(anti, id);
        assert_eq!(ladders.c(0).matmul(ladders.c(0)).nnz(), 0);
    }

    #[test]
    fn car_holds_at_eight_modes() {
        let ladders = build_ladders(&catalog(0, 1)).unwrap();
        assert_eq!(ladders.modes(), 8);
        assert!(ladders.car_residual() <= 1e-12);
    }

    #[test]
    fn missing_sign_strings_break_car() {
        let ladders = build_ladders_without_sign_strings(&catalog(0, 1)).unwrap();
        assert!(ladders.car_residual() > 0.5);
    }

    #[test]
    fn bare_ladders_have_empty_vacuum() {
        let ladders = bare_ladders(6).unwrap();
        assert_eq!((ladders.modes(), ladders.dim()), (6, 64));
        assert!(ladders.car_residual() <= 1e-12);
        let vac = vacuum_state(&ladders);
        for i in 0..6 {
            assert!(ladders.c(i).mul_vec(vac.amplitudes()).iter().all(|a| *a == ZERO));
        }
        assert!(bare_ladders(DEFAULT_FOCK_CAP + 1).is_err());
    }

    #[test]
    fn cap_enforced() {
        let cat = catalog(-1, 1);
        assert!(matches!(build_ladders_with_cap(&cat, 10), Err(Error::FockCapExceeded { modes: 12, cap: 10 })));
    }

    #[test]
    fn vacuum_is_annihilated() {
        let cat = catalog(-1, 1);
        let ladders = build_ladders(&cat).unwrap();
        let vac = vacuum_state(&ladders);
        assert_eq!(vac.norm(), 1.0);
        for i in 0..ladders.modes() {
            let out = ladders.particle_annihilator(i).mul_vec(vac.amplitudes());
            assert!(out.iter().all(|a| *a == ZERO));
        }
    }

    #[test]
    fn quantized_h0_and_identity_on_vacuum() {
        let cat = catalog(-1, 1);
        let ladders = build_ladders(&cat).unwrap();
        let vac = vacuum_state(&ladders);
        let h0 = quantize(h0_matrix(&cat).entries(), &ladders).unwrap();
        assert!((expectation(&vac, &h0).unwrap() - c(cat.vacuum_energy())).norm() < 1e-12);
        let id = quantize(&CMatrix::identity(12, 12), &ladders).unwrap();
        assert!((expectation(&vac, &id).unwrap() - c(6.0)).norm() < 1e-12);
        let ones = ManyBodyOperator::new(SparseMatrix::identity(ladders.dim()));
        assert_eq!(expectation(&vac, &ones).unwrap(), c(1.0));
    }

    #[test]
    fn quantize_dimension_checked() {
        let ladders = build_ladders(&catalog(0, 0)).unwrap();
        assert!(matches!(quantize(&CMatrix::zeros(3, 3), &ladders), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn commutator_identity_examples() {
        let cat = catalog(0, 0);
        let ladders = build_ladders(&cat).unwrap();
        assert_eq!(commutator_identity_check(&CMatrix::zeros(4, 4), &ladders).unwrap(), 0.0);
        let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.3), c(-1.2), c(2.0), c(0.1)]));
        assert!(commutator_identity_check(&diag, &ladders).unwrap() <= 1e-14);
    }

    #[test]
    fn omega0_properties() {
        let cat = catalog(-1, 1);
        let ladders = build_ladders(&cat).unwrap();
        let m1 = ModeLabel::electron(Spin::Up, [0, 0, 0]);
        let m2 = ModeLabel::electron(Spin::Up, [0, 0, 1]);
        let omega = omega0_state(&cat, &ladders, m1, m2).unwrap();
        assert!((omega.norm() - 1.0).abs() < 1e-15);
        assert_eq!(omega.inner(&vacuum_state(&ladders)), ZERO);
        let h0 = quantize(h0_matrix(&cat).entries(), &ladders).unwrap();
        let rel = expectation(&omega, &h0).unwrap().re - cat.vacuum_energy();
        assert!((rel - (1.0 + 2f64.sqrt()) / 2.0).abs() < 1e-12);
        assert!(omega0_state(&cat, &ladders, m1, m1).is_err());
        let neg = ModeLabel::new(Branch::Negative, Spin::Up, [0, 0, 0]);
        assert!(omega0_state(&cat, &ladders, m1, neg).is_err());
    }

    #[test]
    fn fock_correlation_of_omega0() {
        let cat = catalog(0, 1);
        let ladders = build_ladders(&cat).unwrap();
        let m1 = ModeLabel::electron(Spin::Up, [0, 0, 0]);
        let m2 = ModeLabel::electron(Spin::Down, [0, 0, 1]);
        let (i1, i2) = electron_pair(&cat, m1, m2).unwrap();
        let corr = omega0_state(&cat, &ladders, m1, m2).unwrap().correlation();
        assert!((corr[(i1, i2)] - c(0.5)).norm() < 1e-15);
        assert!((corr.trace() - c(5.0)).norm() < 1e-14);
    }

    #[test]
    fn free_evolution_matches_closed_form() {
        let cat = catalog(-1, 1);
        let ladders = build_ladders(&cat).unwrap();
        let m1 = ModeLabel::electron(Spin::Up, [0, 0, 0]);
        let m2 = ModeLabel::electron(Spin::Up, [0, 0, 1]);
        let (i1, i2) = electron_pair(&cat, m1, m2).unwrap();
        let omega = omega0_state(&cat, &ladders, m1, m2).unwrap();
        let h0 = quantize(h0_matrix(&cat).entries(), &ladders).unwrap();
        let traj = evolve_schrodinger(&omega, |_| h0.clone(), 0.0, 1.0, 1000, 100).unwrap();
        let vac = vacuum_state(&ladders).amplitudes().to_vec();
        let (e1, e2) = (cat.mode(i1).energy, cat.mode(i2).energy);
        let evac = cat.vacuum_energy();
        for (t, st) in traj.times.iter().zip(&traj.states) {
            assert!((st.norm() - 1.0).abs() <= 1e-10);
            let a = ladders.c_dag(i1).mul_vec(&vac);
            let b = ladders.c_dag(i2).mul_vec(&vac);
            let phase = (-I * evac * t).exp() * 0.5f64.sqrt();
            let expect: Vec<C64> = a.iter().zip(&b).map(|(x, y)| (x * (-I * e1 * t).exp() + y * (-I * e2 * t).exp()) * phase).collect();
            let overlap = st.amplitudes().iter().zip(&expect).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(overlap < 1e-10);
        }
    }

    #[test]
    fn vacuum_is_stationary() {
        let cat = catalog(0, 1);
        let ladders = build_ladders(&cat).unwrap();
        let vac = vacuum_state(&ladders);
        let h0 = quantize(h0_matrix(&cat).entries(), &ladders).unwrap();
        let traj = evolve_schrodinger(&vac, |_| h0.clone(), 0.0, 2.0, 50, 10).unwrap();
        for st in &traj.states {
            assert!((st.inner(&vac).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn non_hermitian_generator_rejected() {
        let cat = catalog(0, 0);
        let ladders = build_ladders(&cat).unwrap();
        let mut h = CMatrix::zeros(4, 4);
        h[(0, 1)] = c(1.0);
        let op = quantize(&h, &ladders).unwrap();
        assert!(!op.is_hermitian());
        let err = evolve_schrodinger(&vacuum_state(&ladders), |_| op.clone(), 0.0, 1.0, 4, 1);
        assert!(matches!(err, Err(Error::NotHermitian(_))));
    }

    #[test]
    fn spectrum_of_rest_modes() {
        let cat = catalog(0, 0);
        let ladders = build_ladders(&cat).unwrap();
        let report = h0_spectrum_check(&ladders, &cat).unwrap();
        assert!((report.min_eigenvalue + 2.0).abs() < 1e-12);
        assert!((report.gap - 1.0).abs() < 1e-12);
        assert_eq!(report.off_diagonal_max, 0.0);
        assert!(report.passed());
        let big = build_ladders(&catalog(-1, 1)).unwrap();
        assert!(h0_spectrum_check(&big, &catalog(-1, 1)).is_err());
    }

    #[test]
    fn driven_and_closure_evolution_agree() {
        use crate::onebody::{complete_reality, Envelope, OneBodyDrive, PotentialSpec, PotentialTerm};
        use std::collections::BTreeMap;
        let cat = catalog(0, 1);
        let ladders = build_ladders(&cat).unwrap();
        let term = PotentialTerm {
            a0: complete_reality(&[([0, 0, 1], C64::new(0.3, 0.2))]).unwrap(),
            a: BTreeMap::new(),
            envelope: Envelope::ramp(1.0, PI).unwrap(),
        };
        let drive = OneBodyDrive::dirac(&cat, &PotentialSpec::new(vec![term], 1).unwrap(), 1.0).unwrap();
        let many = ManyBodyDrive::quantized(&drive, &ladders).unwrap();
        let start = vacuum_state(&ladders);
        let a = evolve_driven(&start, &many, 0.0, 1.0, 40, 40).unwrap();
        let b = evolve_schrodinger(&start, |t| quantize(drive.at(t).entries(), &ladders).unwrap(), 0.0, 1.0, 40, 40).unwrap();
        let d = a.states[1].amplitudes().iter().zip(b.states[1].amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(d < 1e-13);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn prop_quantize_matches_ladder_products(seed in 0u64..10_000) {
            let ladders = build_ladders(&catalog(0, 0)).unwrap();
            let h = random_hermitian(4, seed);
            let direct = quantize(&h, &ladders).unwrap();
            prop_assert!(direct.is_hermitian());
            let products = quantize_by_products(&h, &ladders);
            prop_assert!(max_abs(&(direct.matrix().to_dense() - products.to_dense())) < 1e-14);
        }

        #[test]
        fn prop_commutator_identity(seed in 0u64..10_000) {
            let cat = build_catalog(&MomentumGrid::window(2.0 * PI, 1, 0, 0).unwrap(), 1.0).unwrap();
            let ladders = build_ladders(&cat).unwrap();
            prop_assert!(commutator_identity_check(&random_hermitian(4, seed), &ladders).unwrap() <= 1e-12);
        }

        #[test]
        fn prop_quantize_is_linear(seed in 0u64..10_000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let ladders = build_ladders(&catalog(0, 0)).unwrap();
            let h1 = random_hermitian(4, seed);
            let h2 = random_hermitian(4, seed + 1);
            let lhs = quantize(&(&h1 * c(a) + &h2 * c(b)), &ladders).unwrap();
            let rhs = quantize(&h1, &ladders).unwrap().matrix().scaled(c(a)).add_scaled(quantize(&h2, &ladders).unwrap().matrix(), c(b));
            prop_assert!(max_abs(&(lhs.matrix().to_dense() - rhs.to_dense())) < 1e-13);
        }

        #[test]
        fn prop_energy_bounded_by_vacuum(seed in 0u64..10_000) {
            let cat = catalog(0, 1);
            let ladders = build_ladders(&cat).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let raw: Vec<C64> = (0..ladders.dim()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            let n = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            let st = FockState::new(raw.iter().map(|a| a / n).collect()).unwrap();
            let h0 = quantize(h0_matrix(&cat).entries(), &ladders).unwrap();
            prop_assert!(expectation(&st, &h0).unwrap().re - cat.vacuum_energy() >= -1e-9);
        }
    }
}
