//! Charge and current densities, spectral derivatives, closed-form two-mode
//! oracles and free-field energy expectations.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fock::{expectation, FockState, ManyBodyOperator};
use crate::gaussian::{bilinear_expectation, CorrelationMatrix};
use crate::linalg::{unitarity_residual, CMatrix, C64, I, ZERO};
use crate::modes::{alpha, BasisCatalog, Dirac, MomentumGrid, SpinorMode, Spinor, WaveIndex};
use crate::onebody::{h0_matrix, GaugeFunction};

/// Uniform sample points in `[0, L)^d`. With `2B + 1` points per axis,
/// fields of band `B` are resolved exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    grid: MomentumGrid,
    per_axis: usize,
    points: Vec<[f64; 3]>,
}

impl SpatialGrid {
    /// `2 (n_max - n_min) + 1` points per axis, enough for every bilinear
    /// of grid modes.
    pub fn for_grid(grid: &MomentumGrid) -> Self {
        Self::uniform(grid, 2 * grid.span() as usize + 1)
    }

    pub fn uniform(grid: &MomentumGrid, per_axis: usize) -> Self {
        let step = grid.box_length() / per_axis as f64;
        let coords: Vec<f64> = (0..per_axis).map(|i| i as f64 * step).collect();
        let points = if grid.dim() == 1 {
            coords.iter().map(|&z| [0.0, 0.0, z]).collect()
        } else {
            let mut pts = Vec::with_capacity(per_axis.pow(3));
            for &x in &coords {
                for &y in &coords {
                    for &z in &coords {
                        pts.push([x, y, z]);
                    }
                }
            }
            pts
        };
        Self { grid: *grid, per_axis, points }
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn grid(&self) -> &MomentumGrid {
        &self.grid
    }

    /// Largest band resolved without aliasing.
    pub fn band(&self) -> i32 {
        ((self.per_axis - 1) / 2) as i32
    }

    /// Wave indices `-B..=B` on active axes.
    fn frequencies(&self) -> Vec<WaveIndex> {
        let b = self.band();
        let range: Vec<i32> = (-b..=b).collect();
        if self.grid.dim() == 1 {
            range.iter().map(|&k| [0, 0, k]).collect()
        } else {
            let mut out = Vec::new();
            for &kx in &range {
                for &ky in &range {
                    for &kz in &range {
                        out.push([kx, ky, kz]);
                    }
                }
            }
            out
        }
    }
}

fn check_point(grid: &MomentumGrid, x: [f64; 3]) -> Result<()> {
    let inside = grid.active_axes().iter().all(|&ax| (0.0..grid.box_length()).contains(&x[ax]));
    if inside {
        Ok(())
    } else {
        Err(Error::OutsideBox(x))
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Mode functions `u_j e^{ip_j.x} / sqrt(V)` at a point.
fn mode_values(catalog: &BasisCatalog, x: [f64; 3]) -> Vec<Spinor> {
    let norm = 1.0 / catalog.grid().volume().sqrt();
    catalog.modes().iter().map(|md| md.u * ((I * dot(md.momentum, x)).exp() * norm)).collect()
}

/// `Q_ab = sum_ij conj(phi_i,a) C_ij phi_j,b`, the local spinor density
/// matrix.
fn local_density_matrix(corr: &CMatrix, catalog: &BasisCatalog, x: [f64; 3]) -> Dirac {
    let w = mode_values(catalog, x);
    let mut q = Dirac::zeros();
    for (i, wi) in w.iter().enumerate() {
        let mut y = Spinor::zeros();
        for (j, wj) in w.iter().enumerate() {
            let cij = corr[(i, j)];
            if cij != ZERO {
                y += wj * cij;
            }
        }
        q += wi.conjugate() * y.transpose();
    }
    q
}

/// Where the correlation matrix of a density evaluation comes from.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    Gaussian(&'a CorrelationMatrix),
    Fock(&'a FockState),
}

impl Source<'_> {
    fn correlation(&self) -> CMatrix {
        match self {
            Source::Gaussian(corr) => corr.matrix().clone(),
            Source::Fock(state) => state.correlation(),
        }
    }
}

fn check_source(corr: &CMatrix, catalog: &BasisCatalog) -> Result<()> {
    if corr.nrows() != catalog.len() {
        return Err(Error::DimensionMismatch { expected: catalog.len(), found: corr.nrows() });
    }
    Ok(())
}

/// `rho(x) = e <psi^dagger(x) psi(x)>` including the filled sea.
pub fn charge_density(source: Source<'_>, catalog: &BasisCatalog, x: [f64; 3], e: f64) -> Result<f64> {
    check_point(catalog.grid(), x)?;
    let corr = source.correlation();
    check_source(&corr, catalog)?;
    Ok(e * local_density_matrix(&corr, catalog, x).trace().re)
}

/// `J(x) = e <psi^dagger(x) alpha psi(x)>`.
pub fn current_density(source: Source<'_>, catalog: &BasisCatalog, x: [f64; 3], e: f64) -> Result<[f64; 3]> {
    check_point(catalog.grid(), x)?;
    let corr = source.correlation();
    check_source(&corr, catalog)?;
    let q = local_density_matrix(&corr, catalog, x);
    Ok(current_from(&q, e))
}

fn current_from(q: &Dirac, e: f64) -> [f64; 3] {
    [0, 1, 2].map(|n| e * alpha(n).component_mul(q).sum().re)
}

/// Density and current at every point of a spatial grid.
pub fn sample_fields(corr: &CMatrix, catalog: &BasisCatalog, grid: &SpatialGrid, e: f64) -> Result<(Vec<f64>, Vec<[f64; 3]>)> {
    check_source(corr, catalog)?;
    let mut rho = Vec::with_capacity(grid.points.len());
    let mut current = Vec::with_capacity(grid.points.len());
    for &x in &grid.points {
        let q = local_density_matrix(corr, catalog, x);
        rho.push(e * q.trace().re);
        current.push(current_from(&q, e));
    }
    Ok((rho, current))
}

/// Real band-limited field `sum_k f_k e^{ik.x}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierField {
    pub grid: MomentumGrid,
    pub coefficients: BTreeMap<WaveIndex, C64>,
}

impl FourierField {
    pub fn value_at(&self, x: [f64; 3]) -> f64 {
        self.coefficients.iter().map(|(k, v)| (v * (I * dot(self.grid.momentum(*k), x)).exp()).re).sum()
    }

    /// `integral f g dx = V sum_k f_k g_{-k}`.
    pub fn integral_product(&self, other: &BTreeMap<WaveIndex, C64>) -> f64 {
        let v = self.grid.volume();
        self.coefficients
            .iter()
            .filter_map(|(k, f)| other.get(&k.map(|x| -x)).map(|g| f * g))
            .sum::<C64>()
            .re
            * v
    }

    pub fn band(&self) -> i32 {
        self.coefficients.keys().flat_map(|k| k.iter().map(|x| x.abs())).max().unwrap_or(0)
    }
}

/// Exact Fourier content of the density and of the current divergence.
#[derive(Debug, Clone)]
pub struct DensityModes {
    pub rho: FourierField,
    pub divj: FourierField,
}

pub fn density_modes(corr: &CMatrix, catalog: &BasisCatalog, e: f64) -> Result<DensityModes> {
    check_source(corr, catalog)?;
    let grid = *catalog.grid();
    let scale = e / grid.volume();
    let mut rho: BTreeMap<WaveIndex, C64> = BTreeMap::new();
    let mut divj: BTreeMap<WaveIndex, C64> = BTreeMap::new();
    let alphas = [alpha(0), alpha(1), alpha(2)];
    for (i, a) in catalog.modes().iter().enumerate() {
        for (j, b) in catalog.modes().iter().enumerate() {
            let cij = corr[(i, j)];
            if cij == ZERO {
                continue;
            }
            let k = [0, 1, 2].map(|ax| b.label.n[ax] - a.label.n[ax]);
            let kp = grid.momentum(k);
            *rho.entry(k).or_insert(ZERO) += cij * a.u.dotc(&b.u) * scale;
            let div: C64 = (0..3).map(|n| a.u.dotc(&(alphas[n] * b.u)) * (I * kp[n])).sum();
            *divj.entry(k).or_insert(ZERO) += cij * div * scale;
        }
    }
    Ok(DensityModes { rho: FourierField { grid, coefficients: rho }, divj: FourierField { grid, coefficients: divj } })
}

/// `div J(x)` from the mode sum, differentiated analytically.
pub fn divergence_mode_sum(corr: &CMatrix, catalog: &BasisCatalog, x: [f64; 3], e: f64) -> Result<f64> {
    check_point(catalog.grid(), x)?;
    Ok(density_modes(corr, catalog, e)?.divj.value_at(x))
}

/// Divergence of a sampled current by discrete Fourier differentiation;
/// exact when the current's band fits the grid.
pub fn spectral_divergence(grid: &SpatialGrid, current: &[[f64; 3]]) -> Result<Vec<f64>> {
    if current.len() != grid.points.len() {
        return Err(Error::DimensionMismatch { expected: grid.points.len(), found: current.len() });
    }
    let freqs = grid.frequencies();
    let count = grid.points.len() as f64;
    let mut div = vec![0.0; grid.points.len()];
    for k in freqs {
        let kp = grid.grid.momentum(k);
        let mut coeff = [ZERO; 3];
        for (x, j) in grid.points.iter().zip(current) {
            let ph = (-I * dot(kp, *x)).exp();
            for a in 0..3 {
                coeff[a] += ph * j[a];
            }
        }
        let weight: C64 = (0..3).map(|a| coeff[a] * I * kp[a]).sum::<C64>() / count;
        for (d, x) in div.iter_mut().zip(&grid.points) {
            *d += (weight * (I * dot(kp, *x)).exp()).re;
        }
    }
    Ok(div)
}

/// `rho(x, t)` and `J(x, t)` sampled on a spatial grid at increasing times.
#[derive(Debug, Clone)]
pub struct FieldSeries {
    pub grid: SpatialGrid,
    pub times: Vec<f64>,
    pub rho: Vec<Vec<f64>>,
    pub current: Vec<Vec<[f64; 3]>>,
    pub energies: Vec<f64>,
    pub backend: String,
}

impl FieldSeries {
    pub fn new(grid: SpatialGrid, backend: impl Into<String>) -> Self {
        Self { grid, times: Vec::new(), rho: Vec::new(), current: Vec::new(), energies: Vec::new(), backend: backend.into() }
    }

    pub fn push(&mut self, t: f64, rho: Vec<f64>, current: Vec<[f64; 3]>, energy: f64) -> Result<()> {
        let n = self.grid.points.len();
        if rho.len() != n || current.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: rho.len().min(current.len()) });
        }
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(Error::InvalidParameter { name: "times", reason: format!("{t} does not follow {last}") });
            }
        }
        self.times.push(t);
        self.rho.push(rho);
        self.current.push(current);
        self.energies.push(energy);
        Ok(())
    }

    /// Centered time derivative of `rho` at interior sample `k`.
    pub fn drho_dt(&self, k: usize) -> Vec<f64> {
        let dt = self.times[k + 1] - self.times[k - 1];
        self.rho[k + 1].iter().zip(&self.rho[k - 1]).map(|(a, b)| (a - b) / dt).collect()
    }

    /// `integral rho dx` per sample by the trapezoid rule on the periodic grid
    /// (exact for band-limited fields).
    pub fn total_charge(&self) -> Vec<f64> {
        let cell = self.grid.grid.volume() / self.grid.points.len() as f64;
        self.rho.iter().map(|r| r.iter().sum::<f64>() * cell).collect()
    }
}

/// `max |drho/dt + div J|` over interior samples, with a centered time
/// difference and a spectral divergence.
pub fn continuity_residual(series: &FieldSeries) -> Result<f64> {
    if series.times.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, found: series.times.len() });
    }
    let mut worst = 0.0f64;
    for k in 1..series.times.len() - 1 {
        let div = spectral_divergence(&series.grid, &series.current[k])?;
        for (a, b) in series.drho_dt(k).iter().zip(&div) {
            worst = worst.max((a + b).abs());
        }
    }
    Ok(worst)
}

/// Whether the pair's cross term is static (same energy and a real spinor
/// overlap), making both oracles vanish identically.
pub fn is_degenerate_pair(a: &SpinorMode, b: &SpinorMode) -> bool {
    a.label.n == b.label.n && (a.energy - b.energy).abs() < 1e-15
}

fn check_pair(a: &SpinorMode, b: &SpinorMode) -> Result<()> {
    if a.label == b.label {
        return Err(Error::InvalidModes(format!("identical modes {}", a.label)));
    }
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

fn cross_phase(a: &SpinorMode, b: &SpinorMode, x: [f64; 3], t: f64) -> C64 {
    let dp = [0, 1, 2].map(|i| b.momentum[i] - a.momentum[i]);
    (I * (dot(dp, x) - (b.energy - a.energy) * t)).exp()
}

/// `d rho / dt` of the two-mode superposition, differentiated in closed form:
/// `(e/V) (E2 - E1) Im(u1^dagger u2 e^{i((p2 - p1).x - (E2 - E1) t)})`.
pub fn drho_dt_oracle(x: [f64; 3], t: f64, a: &SpinorMode, b: &SpinorMode, e: f64, volume: f64) -> Result<f64> {
    check_pair(a, b)?;
    let w = a.u.dotc(&b.u);
    Ok(e / volume * (b.energy - a.energy) * (w * cross_phase(a, b, x, t)).im)
}

/// `div J` of the two-mode superposition in closed form:
/// `-(e/V) Im((p2 - p1).(u1^dagger alpha u2) e^{i(...)})`.
pub fn divj_oracle(x: [f64; 3], t: f64, a: &SpinorMode, b: &SpinorMode, e: f64, volume: f64) -> Result<f64> {
    check_pair(a, b)?;
    let w: C64 = (0..3).map(|n| a.u.dotc(&(alpha(n) * b.u)) * (b.momentum[n] - a.momentum[n])).sum();
    Ok(-e / volume * (w * cross_phase(a, b, x, t)).im)
}

fn pair_coefficients(a: &SpinorMode, b: &SpinorMode, amp: C64) -> BTreeMap<WaveIndex, C64> {
    let k = [0, 1, 2].map(|ax| b.label.n[ax] - a.label.n[ax]);
    let mut out = BTreeMap::new();
    *out.entry(k).or_insert(ZERO) += amp;
    *out.entry(k.map(|x| -x)).or_insert(ZERO) += amp.conj();
    out
}

/// Fourier coefficients of [`drho_dt_oracle`] at time `t`.
pub fn drho_dt_profile(t: f64, a: &SpinorMode, b: &SpinorMode, e: f64) -> Result<FourierField> {
    check_pair(a, b)?;
    let de = b.energy - a.energy;
    let amp = -I * de * a.u.dotc(&b.u) * (-I * de * t).exp() * (e / (2.0 * a.grid.volume()));
    Ok(FourierField { grid: a.grid, coefficients: pair_coefficients(a, b, amp) })
}

/// Fourier coefficients of [`divj_oracle`] at time `t`.
pub fn divj_profile(t: f64, a: &SpinorMode, b: &SpinorMode, e: f64) -> Result<FourierField> {
    check_pair(a, b)?;
    let de = b.energy - a.energy;
    let w: C64 = (0..3).map(|n| a.u.dotc(&(alpha(n) * b.u)) * (b.momentum[n] - a.momentum[n])).sum();
    let amp = I * w * (-I * de * t).exp() * (e / (2.0 * a.grid.volume()));
    Ok(FourierField { grid: a.grid, coefficients: pair_coefficients(a, b, amp) })
}

/// `<psi|H0|psi>` for the fixed free-field energy operator.
pub fn free_energy_schrodinger(state: &FockState, h0: &ManyBodyOperator) -> Result<f64> {
    Ok(expectation(state, h0)?.re)
}

/// `<sum (u^dagger h0 u)_ij c_i^dagger c_j>` in the fixed initial state: the
/// Heisenberg-picture free-field energy.
pub fn free_energy_heisenberg(initial: &CorrelationMatrix, u: &CMatrix, catalog: &BasisCatalog) -> Result<f64> {
    let r = unitarity_residual(u);
    if r > 1e-10 {
        return Err(Error::NotUnitary(r));
    }
    let h0 = h0_matrix(catalog).into_entries();
    Ok(bilinear_expectation(initial, &(u.adjoint() * h0 * u))?.re)
}

/// `(E_1 + E_2) / 2`.
pub fn delta_xi(a: &SpinorMode, b: &SpinorMode) -> f64 {
    0.5 * (a.energy + b.energy)
}

/// `delta_xi + integral chi(x, t) div J(x, t) dx`, with the integral taken
/// exactly by Fourier pairing.
pub fn energy_identity_rhs(chi: &GaugeFunction, t: f64, divj: &FourierField, delta_xi: f64) -> Result<f64> {
    if chi.band() > divj.grid.span() {
        return Err(Error::BandLimit { k: [chi.band(); 3], band: divj.grid.span() });
    }
    let g = chi.envelope().value(t);
    let scaled: BTreeMap<WaveIndex, C64> = chi.coefficients().iter().map(|(k, v)| (*k, v * g)).collect();
    Ok(delta_xi + divj.integral_product(&scaled))
}

/// Expected uniform vacuum density `e (M/2) / V`.
pub fn vacuum_density(catalog: &BasisCatalog, e: f64) -> f64 {
    e * (catalog.len() as f64 / 2.0) / catalog.grid().volume()
}
