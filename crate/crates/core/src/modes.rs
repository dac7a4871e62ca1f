//! Truncated single-particle basis: momentum grid, Dirac spinors and the
//! deterministic mode catalog.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::linalg::{c, C64, I, ZERO};

pub type Spinor = Vector4<C64>;
pub type Dirac = Matrix4<C64>;

/// Integer wave-vector index `n`; the physical momentum is `2π n / L`.
pub type WaveIndex = [i32; 3];

/// Sign of the single-particle energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Positive,
    Negative,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
        }
    }
}

/// Spin projection along the z axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn value(self) -> f64 {
        match self {
            Spin::Up => 0.5,
            Spin::Down => -0.5,
        }
    }

    fn two_spinor(self) -> [C64; 2] {
        match self {
            Spin::Up => [c(1.0), ZERO],
            Spin::Down => [ZERO, c(1.0)],
        }
    }
}

/// Periodic box of side `L` in `d` dimensions with a per-axis window
/// `n_min..=n_max` of allowed wave indices. In one dimension momenta point
/// along z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumGrid {
    box_length: f64,
    dim: usize,
    n_min: i32,
    n_max: i32,
}

impl MomentumGrid {
    /// Symmetric grid `|n_i| <= n_max`.
    pub fn new(box_length: f64, dim: usize, n_max: i32) -> Result<Self> {
        if n_max < 0 {
            return Err(Error::InvalidParameter { name: "n_max", reason: format!("must be >= 0, got {n_max}") });
        }
        Self::window(box_length, dim, -n_max, n_max)
    }

    /// Asymmetric window `n_min <= n_i <= n_max`.
    pub fn window(box_length: f64, dim: usize, n_min: i32, n_max: i32) -> Result<Self> {
        if !(box_length > 0.0 && box_length.is_finite()) {
            return Err(Error::InvalidParameter { name: "box_length", reason: format!("must be positive, got {box_length}") });
        }
        if dim != 1 && dim != 3 {
            return Err(Error::InvalidParameter { name: "dim", reason: format!("must be 1 or 3, got {dim}") });
        }
        if n_min > n_max {
            return Err(Error::InvalidParameter { name: "n_min", reason: format!("{n_min} exceeds n_max = {n_max}") });
        }
        Ok(Self { box_length, dim, n_min, n_max })
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_min(&self) -> i32 {
        self.n_min
    }

    pub fn n_max(&self) -> i32 {
        self.n_max
    }

    pub fn volume(&self) -> f64 {
        self.box_length.powi(self.dim as i32)
    }

    /// `2π / L`.
    pub fn unit(&self) -> f64 {
        2.0 * PI / self.box_length
    }

    /// Axes that carry momentum: z only in one dimension.
    pub fn active_axes(&self) -> &'static [usize] {
        if self.dim == 1 {
            &[2]
        } else {
            &[0, 1, 2]
        }
    }

    /// Largest wave-index difference between two grid momenta per axis.
    pub fn span(&self) -> i32 {
        self.n_max - self.n_min
    }

    pub fn points_per_axis(&self) -> usize {
        (self.n_max - self.n_min + 1) as usize
    }

    pub fn contains(&self, n: WaveIndex) -> bool {
        (0..3).all(|axis| {
            if self.active_axes().contains(&axis) {
                (self.n_min..=self.n_max).contains(&n[axis])
            } else {
                n[axis] == 0
            }
        })
    }

    /// Whether `n` is a wave index available to this grid's geometry
    /// (nonzero components only on active axes).
    pub fn is_aligned(&self, n: WaveIndex) -> bool {
        (0..3).all(|axis| self.active_axes().contains(&axis) || n[axis] == 0)
    }

    pub fn momentum(&self, n: WaveIndex) -> [f64; 3] {
        n.map(|ni| self.unit() * ni as f64)
    }

    /// Converts a physical wave vector into a grid index, rejecting vectors
    /// that are not integer multiples of `2π / L`.
    pub fn wave_index(&self, k: [f64; 3]) -> Result<WaveIndex> {
        let mut n = [0i32; 3];
        for axis in 0..3 {
            let ratio = k[axis] / self.unit();
            let rounded = ratio.round();
            if (ratio - rounded).abs() > 1e-9 * ratio.abs().max(1.0) {
                return Err(Error::NonCommensurate(k));
            }
            n[axis] = rounded as i32;
        }
        if !self.is_aligned(n) {
            return Err(Error::NonCommensurate(k));
        }
        Ok(n)
    }

    /// All wave indices of the grid in lexicographic order.
    pub fn indices(&self) -> Vec<WaveIndex> {
        let range: Vec<i32> = (self.n_min..=self.n_max).collect();
        if self.dim == 1 {
            return range.iter().map(|&nz| [0, 0, nz]).collect();
        }
        let mut out = Vec::with_capacity(range.len().pow(3));
        for &nx in &range {
            for &ny in &range {
                for &nz in &range {
                    out.push([nx, ny, nz]);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeLabel {
    pub branch: Branch,
    pub spin: Spin,
    pub n: WaveIndex,
}

impl ModeLabel {
    pub fn new(branch: Branch, spin: Spin, n: WaveIndex) -> Self {
        Self { branch, spin, n }
    }

    pub fn electron(spin: Spin, n: WaveIndex) -> Self {
        Self::new(Branch::Positive, spin, n)
    }

    /// Catalog sort key: positive branch first, then `n` lexicographic, then
    /// spin up before spin down.
    fn sort_key(&self) -> (Branch, WaveIndex, Spin) {
        (self.branch, self.n, self.spin)
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lam = match self.branch {
            Branch::Positive => "+",
            Branch::Negative => "-",
        };
        let s = match self.spin {
            Spin::Up => "up",
            Spin::Down => "down",
        };
        write!(f, "(lambda={lam}, s={s}, n={:?})", self.n)
    }
}

/// A plane-wave Dirac mode `u e^{ip.x} / sqrt(V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorMode {
    pub label: ModeLabel,
    pub momentum: [f64; 3],
    pub u: Spinor,
    pub energy: f64,
    pub grid: MomentumGrid,
}

impl SpinorMode {
    /// `lambda * E_p`.
    pub fn signed_energy(&self) -> f64 {
        self.label.branch.sign() * self.energy
    }
}

fn pauli(i: usize) -> [[C64; 2]; 2] {
    match i {
        0 => [[ZERO, c(1.0)], [c(1.0), ZERO]],
        1 => [[ZERO, -I], [I, ZERO]],
        _ => [[c(1.0), ZERO], [ZERO, c(-1.0)]],
    }
}

/// Dirac-representation `alpha_i = [[0, sigma_i], [sigma_i, 0]]`.
pub fn alpha(i: usize) -> Dirac {
    let s = pauli(i);
    let mut a = Dirac::zeros();
    for r in 0..2 {
        for col in 0..2 {
            a[(r, col + 2)] = s[r][col];
            a[(r + 2, col)] = s[r][col];
        }
    }
    a
}

/// `beta = diag(1, 1, -1, -1)`.
pub fn beta() -> Dirac {
    Dirac::from_diagonal(&Spinor::new(c(1.0), c(1.0), c(-1.0), c(-1.0)))
}

/// Free Dirac Hamiltonian `alpha.p + beta m` at fixed momentum.
pub fn dirac_hamiltonian(p: [f64; 3], m: f64) -> Dirac {
    (0..3).fold(beta() * c(m), |acc, i| acc + alpha(i) * c(p[i]))
}

/// `sigma . p` applied to a two-spinor.
fn sigma_dot(p: [f64; 3], chi: [C64; 2]) -> [C64; 2] {
    let mut out = [ZERO; 2];
    for (i, &pi) in p.iter().enumerate() {
        let s = pauli(i);
        for r in 0..2 {
            out[r] += s[r][0] * chi[0] * pi + s[r][1] * chi[1] * pi;
        }
    }
    out
}

pub fn mode_energy(p: [f64; 3], m: f64) -> Result<f64> {
    if m < 0.0 || m.is_nan() {
        return Err(Error::NegativeMass(m));
    }
    Ok((p.iter().map(|x| x * x).sum::<f64>() + m * m).sqrt())
}

/// Unit spinor of `alpha.p + beta m` with eigenvalue `lambda E_p`. The
/// nonvanishing upper (positive branch) or lower (negative branch) component
/// is real and positive.
pub fn dirac_spinor(label: ModeLabel, grid: &MomentumGrid, m: f64) -> Result<SpinorMode> {
    if !grid.contains(label.n) {
        return Err(Error::UnknownMode(label.to_string()));
    }
    let p = grid.momentum(label.n);
    let energy = mode_energy(p, m)?;
    if energy == 0.0 {
        return Err(Error::DegenerateSpinor);
    }
    let norm = c(((energy + m) / (2.0 * energy)).sqrt());
    let chi = label.spin.two_spinor();
    let small = sigma_dot(p, chi).map(|z| z / (energy + m));
    let u = match label.branch {
        Branch::Positive => Spinor::new(chi[0], chi[1], small[0], small[1]),
        Branch::Negative => Spinor::new(-small[0], -small[1], chi[0], chi[1]),
    } * norm;
    Ok(SpinorMode { label, momentum: p, u, energy, grid: *grid })
}

/// Ordered list of all modes on a grid with a label-to-index map.
#[derive(Debug, Clone)]
pub struct BasisCatalog {
    grid: MomentumGrid,
    mass: f64,
    modes: Vec<SpinorMode>,
    index: HashMap<ModeLabel, usize>,
    by_momentum: HashMap<WaveIndex, Vec<usize>>,
}

pub fn build_catalog(grid: &MomentumGrid, m: f64) -> Result<BasisCatalog> {
    let mut labels = Vec::new();
    for branch in [Branch::Positive, Branch::Negative] {
        for n in grid.indices() {
            for spin in [Spin::Up, Spin::Down] {
                labels.push(ModeLabel::new(branch, spin, n));
            }
        }
    }
    labels.sort_by_key(ModeLabel::sort_key);
    let modes = labels
        .into_iter()
        .map(|label| dirac_spinor(label, grid, m))
        .collect::<Result<Vec<_>>>()?;
    let index = modes.iter().enumerate().map(|(i, md)| (md.label, i)).collect();
    let mut by_momentum: HashMap<WaveIndex, Vec<usize>> = HashMap::new();
    for (i, md) in modes.iter().enumerate() {
        by_momentum.entry(md.label.n).or_default().push(i);
    }
    Ok(BasisCatalog { grid: *grid, mass: m, modes, index, by_momentum })
}

impl BasisCatalog {
    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[SpinorMode] {
        &self.modes
    }

    pub fn mode(&self, i: usize) -> &SpinorMode {
        &self.modes[i]
    }

    pub fn label(&self, i: usize) -> ModeLabel {
        self.modes[i].label
    }

    pub fn index_of(&self, label: &ModeLabel) -> Result<usize> {
        self.index.get(label).copied().ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    /// Catalog indices of the four modes at wave index `n`, empty when `n`
    /// is off the grid.
    pub fn modes_at(&self, n: WaveIndex) -> &[usize] {
        self.by_momentum.get(&n).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn negative_modes(&self) -> impl Iterator<Item = usize> + '_ {
        self.modes.iter().enumerate().filter(|(_, md)| md.label.branch == Branch::Negative).map(|(i, _)| i)
    }

    /// `-sum E_p` over the negative-branch modes: the filled-sea energy.
    pub fn vacuum_energy(&self) -> f64 {
        self.negative_modes().map(|i| -self.modes[i].energy).sum()
    }
}

/// `<a|b>` in box normalization: `u_a^dagger u_b` when the momenta agree,
/// zero otherwise.
pub fn mode_overlap(a: &SpinorMode, b: &SpinorMode) -> Result<C64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    if a.label.n != b.label.n {
        return Ok(ZERO);
    }
    Ok(a.u.dotc(&b.u))
}
