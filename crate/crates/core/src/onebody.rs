//! First-quantized layer: matrices of H0, the potential coupling, gauge
//! functions and their phases over a catalog, plus the time-ordered
//! one-body propagator.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::{c, expm_hermitian, hermiticity_residual, max_abs, unitarity_residual, CMatrix, C64, I, ZERO};
use crate::modes::{alpha, BasisCatalog, Dirac, MomentumGrid, WaveIndex};

const HERMITIAN_TOL: f64 = 1e-12;

/// An `M x M` matrix over the catalog. The hermitian flag is only set after
/// the residual has been checked.
#[derive(Debug, Clone, PartialEq)]
pub struct OneBodyOperator {
    entries: CMatrix,
    hermitian: bool,
}

impl OneBodyOperator {
    pub fn new(entries: CMatrix) -> Self {
        let scale = max_abs(&entries).max(1.0);
        let hermitian = entries.is_square() && hermiticity_residual(&entries) <= HERMITIAN_TOL * scale;
        Self { entries, hermitian }
    }

    /// Wraps a matrix that must be hermitian.
    pub fn hermitian(entries: CMatrix) -> Result<Self> {
        let op = Self::new(entries);
        if !op.hermitian {
            return Err(Error::NotHermitian(hermiticity_residual(&op.entries)));
        }
        Ok(op)
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(CMatrix::zeros(dim, dim))
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

/// One term `a cos(wt) + b sin(wt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub omega: f64,
    pub cos: f64,
    pub sin: f64,
}

/// Scalar time profile: a constant plus harmonics. Closed under
/// differentiation, so a gauge function's `g'` is again an `Envelope`.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub constant: f64,
    pub harmonics: Vec<Harmonic>,
}

impl Envelope {
    pub fn constant(value: f64) -> Self {
        Self { constant: value, harmonics: Vec::new() }
    }

    /// `(1 - cos(wt)) / (1 - cos(w t_f))`, which vanishes with zero slope at
    /// `t = 0` and reaches one at `t_f`.
    pub fn ramp(t_final: f64, omega: f64) -> Result<Self> {
        let denom = 1.0 - (omega * t_final).cos();
        if denom.abs() < 1e-12 || !denom.is_finite() {
            return Err(Error::InvalidParameter {
                name: "omega",
                reason: format!("cos(omega * t_final) = 1 makes the ramp unnormalizable (omega = {omega})"),
            });
        }
        Ok(Self { constant: 1.0 / denom, harmonics: vec![Harmonic { omega, cos: -1.0 / denom, sin: 0.0 }] })
    }

    pub fn value(&self, t: f64) -> f64 {
        self.constant + self.harmonics.iter().map(|h| h.cos * (h.omega * t).cos() + h.sin * (h.omega * t).sin()).sum::<f64>()
    }

    pub fn derivative(&self) -> Self {
        Self {
            constant: 0.0,
            harmonics: self
                .harmonics
                .iter()
                .map(|h| Harmonic { omega: h.omega, cos: h.omega * h.sin, sin: -h.omega * h.cos })
                .collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            constant: self.constant * factor,
            harmonics: self.harmonics.iter().map(|h| Harmonic { omega: h.omega, cos: h.cos * factor, sin: h.sin * factor }).collect(),
        }
    }
}

fn negate(n: WaveIndex) -> WaveIndex {
    n.map(|x| -x)
}

fn band_of<'a>(keys: impl Iterator<Item = &'a WaveIndex>) -> i32 {
    keys.flat_map(|n| n.iter().map(|x| x.abs())).max().unwrap_or(0)
}

fn check_reality<T, F>(map: &BTreeMap<WaveIndex, T>, conj_close: F) -> Result<()>
where
    F: Fn(&T, &T) -> bool,
{
    for (k, v) in map {
        match map.get(&negate(*k)) {
            Some(w) if conj_close(v, w) => {}
            _ => return Err(Error::Reality(*k)),
        }
    }
    Ok(())
}

fn scalar_conj_close(a: &C64, b: &C64) -> bool {
    (a - b.conj()).norm() <= 1e-12 * a.norm().max(1.0)
}

fn vector_conj_close(a: &[C64; 3], b: &[C64; 3]) -> bool {
    a.iter().zip(b).all(|(x, y)| scalar_conj_close(x, y))
}

/// Adds missing `-k` entries as conjugates; rejects explicit entries that
/// disagree with their partner.
pub fn complete_reality(entries: &[(WaveIndex, C64)]) -> Result<BTreeMap<WaveIndex, C64>> {
    let mut map: BTreeMap<WaveIndex, C64> = BTreeMap::new();
    for &(k, v) in entries {
        if map.insert(k, v).is_some() {
            return Err(Error::Reality(k));
        }
    }
    let explicit = map.clone();
    for (k, v) in &explicit {
        let mk = negate(*k);
        match explicit.get(&mk) {
            Some(w) if !scalar_conj_close(v, w) => return Err(Error::Reality(*k)),
            Some(_) => {}
            None if *k == mk => {
                if v.im.abs() > 1e-12 * v.norm().max(1.0) {
                    return Err(Error::Reality(*k));
                }
            }
            None => {
                map.insert(mk, v.conj());
            }
        }
    }
    Ok(map)
}

/// Fourier amplitudes of `(A0, A)` sharing one time envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialTerm {
    pub a0: BTreeMap<WaveIndex, C64>,
    pub a: BTreeMap<WaveIndex, [C64; 3]>,
    pub envelope: Envelope,
}

impl PotentialTerm {
    fn validate(&self) -> Result<()> {
        check_reality(&self.a0, scalar_conj_close)?;
        check_reality(&self.a, vector_conj_close)
    }

    fn band(&self) -> i32 {
        band_of(self.a0.keys()).max(band_of(self.a.keys()))
    }
}

/// A real, band-limited potential written as a sum of terms, each with its
/// own envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    terms: Vec<PotentialTerm>,
    band: i32,
}

impl PotentialSpec {
    pub fn new(terms: Vec<PotentialTerm>, band: i32) -> Result<Self> {
        for term in &terms {
            term.validate()?;
            if term.band() > band {
                let k = term.a0.keys().chain(term.a.keys()).find(|n| n.iter().any(|x| x.abs() > band)).copied().unwrap_or_default();
                return Err(Error::BandLimit { k, band });
            }
        }
        Ok(Self { terms, band })
    }

    pub fn zero(band: i32) -> Self {
        Self { terms: Vec::new(), band }
    }

    pub fn terms(&self) -> &[PotentialTerm] {
        &self.terms
    }

    pub fn band(&self) -> i32 {
        self.band
    }

    /// Fourier coefficients of `E = -dA/dt - grad A0` at time `t`.
    pub fn electric_field(&self, grid: &MomentumGrid, t: f64) -> BTreeMap<WaveIndex, [C64; 3]> {
        let mut out: BTreeMap<WaveIndex, [C64; 3]> = BTreeMap::new();
        for term in &self.terms {
            let g = term.envelope.value(t);
            let gd = term.envelope.derivative().value(t);
            for (k, a) in &term.a {
                let e = out.entry(*k).or_insert([ZERO; 3]);
                for i in 0..3 {
                    e[i] -= a[i] * gd;
                }
            }
            for (k, a0) in &term.a0 {
                let kp = grid.momentum(*k);
                let e = out.entry(*k).or_insert([ZERO; 3]);
                for i in 0..3 {
                    e[i] -= I * kp[i] * a0 * g;
                }
            }
        }
        out
    }

    /// Fourier coefficients of `B = curl A` at time `t`.
    pub fn magnetic_field(&self, grid: &MomentumGrid, t: f64) -> BTreeMap<WaveIndex, [C64; 3]> {
        let mut out: BTreeMap<WaveIndex, [C64; 3]> = BTreeMap::new();
        for term in &self.terms {
            let g = term.envelope.value(t);
            for (k, a) in &term.a {
                let kp = grid.momentum(*k);
                let b = out.entry(*k).or_insert([ZERO; 3]);
                for (i, bi) in b.iter_mut().enumerate() {
                    let (j, l) = ((i + 1) % 3, (i + 2) % 3);
                    *bi += I * (a[l] * kp[j] - a[j] * kp[l]) * g;
                }
            }
        }
        out
    }
}

/// `chi(x, t) = g(t) sum_k chi_k e^{ik.x}` with `g(0) = g'(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeFunction {
    chi: BTreeMap<WaveIndex, C64>,
    envelope: Envelope,
}

impl GaugeFunction {
    pub fn new(chi: BTreeMap<WaveIndex, C64>, envelope: Envelope) -> Result<Self> {
        check_reality(&chi, scalar_conj_close)?;
        let value = envelope.value(0.0);
        let slope = envelope.derivative().value(0.0);
        if value.abs() > 1e-12 || slope.abs() > 1e-12 {
            return Err(Error::EnvelopeInitialCondition { value, slope });
        }
        Ok(Self { chi, envelope })
    }

    pub fn zero(envelope: Envelope) -> Result<Self> {
        Self::new(BTreeMap::new(), envelope)
    }

    pub fn coefficients(&self) -> &BTreeMap<WaveIndex, C64> {
        &self.chi
    }

    pub fn envelope(&self) -> &Envelope {
        &self.envelope
    }

    pub fn band(&self) -> i32 {
        band_of(self.chi.keys())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { chi: self.chi.iter().map(|(k, v)| (*k, v * factor)).collect(), envelope: self.envelope.clone() }
    }
}

fn check_band(grid: &MomentumGrid, band: i32) -> Result<()> {
    if band > grid.span() {
        return Err(Error::BandLimit { k: [band; 3], band: grid.span() });
    }
    Ok(())
}

/// Matrix with element `u_i^dagger K(n_i - n_j) u_j`: the catalog matrix of a
/// multiplication operator whose Fourier kernel at wave index `k` is `K(k)`.
/// Couplings that leave the grid are simply absent (hard cutoff).
pub fn fourier_operator(catalog: &BasisCatalog, kernel: impl Fn(WaveIndex) -> Option<Dirac>) -> CMatrix {
    let m = catalog.len();
    let mut out = CMatrix::zeros(m, m);
    let mut cache: BTreeMap<WaveIndex, Option<Dirac>> = BTreeMap::new();
    for i in 0..m {
        let a = catalog.mode(i);
        for j in 0..m {
            let b = catalog.mode(j);
            let k = [0, 1, 2].map(|ax| a.label.n[ax] - b.label.n[ax]);
            let kern = cache.entry(k).or_insert_with(|| kernel(k));
            if let Some(kern) = kern {
                out[(i, j)] = a.u.dotc(&(*kern * b.u));
            }
        }
    }
    out
}

pub fn h0_matrix(catalog: &BasisCatalog) -> OneBodyOperator {
    let m = catalog.len();
    let mut h = CMatrix::zeros(m, m);
    for (i, md) in catalog.modes().iter().enumerate() {
        h[(i, i)] = c(md.signed_energy());
    }
    OneBodyOperator { entries: h, hermitian: true }
}

fn coupling_kernel(a0: Option<&C64>, a: Option<&[C64; 3]>, e: f64) -> Option<Dirac> {
    if a0.is_none() && a.is_none() {
        return None;
    }
    let mut kern = Dirac::identity() * (a0.copied().unwrap_or(ZERO) * e);
    if let Some(a) = a {
        for (i, ai) in a.iter().enumerate() {
            kern -= alpha(i) * (ai * e);
        }
    }
    Some(kern)
}

/// Catalog matrices of `-e alpha.A + e A0` per potential term, each paired
/// with its envelope.
pub fn interaction_terms(catalog: &BasisCatalog, pot: &PotentialSpec, e: f64) -> Result<Vec<(CMatrix, Envelope)>> {
    check_band(catalog.grid(), pot.band)?;
    Ok(pot
        .terms
        .iter()
        .map(|term| {
            let mat = fourier_operator(catalog, |k| coupling_kernel(term.a0.get(&k), term.a.get(&k), e));
            (mat, term.envelope.clone())
        })
        .collect())
}

pub fn interaction_matrix(catalog: &BasisCatalog, pot: &PotentialSpec, t: f64, e: f64) -> Result<OneBodyOperator> {
    let m = catalog.len();
    let sum = interaction_terms(catalog, pot, e)?
        .into_iter()
        .fold(CMatrix::zeros(m, m), |acc, (mat, env)| acc + mat * c(env.value(t)));
    OneBodyOperator::hermitian(sum)
}

/// Matrix of the spatial profile `sum_k chi_k e^{ik.x}` (no envelope).
pub fn chi_profile_matrix(catalog: &BasisCatalog, chi: &GaugeFunction) -> Result<CMatrix> {
    check_band(catalog.grid(), chi.band())?;
    Ok(fourier_operator(catalog, |k| chi.chi.get(&k).map(|v| Dirac::identity() * *v)))
}

/// Matrix of `alpha . grad` of the spatial profile (no envelope).
pub fn grad_chi_profile_matrix(catalog: &BasisCatalog, chi: &GaugeFunction) -> Result<CMatrix> {
    check_band(catalog.grid(), chi.band())?;
    let grid = *catalog.grid();
    Ok(fourier_operator(catalog, |k| {
        chi.chi.get(&k).map(|v| {
            let kp = grid.momentum(k);
            (0..3).fold(Dirac::zeros(), |acc, i| acc + alpha(i) * (I * kp[i] * v))
        })
    }))
}

/// `X(t)`, the matrix of the multiplication operator `chi(x, t)`.
pub fn chi_matrix(catalog: &BasisCatalog, chi: &GaugeFunction, t: f64) -> Result<OneBodyOperator> {
    let x = chi_profile_matrix(catalog, chi)? * c(chi.envelope.value(t));
    OneBodyOperator::hermitian(x)
}

/// `exp(-i e X)`.
pub fn gauge_phase(x: &OneBodyOperator, e: f64) -> Result<OneBodyOperator> {
    if !x.is_hermitian() {
        return Err(Error::NotHermitian(hermiticity_residual(&x.entries)));
    }
    Ok(OneBodyOperator { entries: expm_hermitian(&x.entries, e), hermitian: false })
}

/// `(A0, A) -> (A0 + dchi/dt, A - grad chi)`, realized as two extra terms
/// carrying the envelopes `g'` and `g`.
pub fn gauge_transform(pot: &PotentialSpec, chi: &GaugeFunction, grid: &MomentumGrid) -> Result<PotentialSpec> {
    if chi.band() > pot.band {
        let k = chi.chi.keys().find(|n| n.iter().any(|x| x.abs() > pot.band)).copied().unwrap_or_default();
        return Err(Error::BandLimit { k, band: pot.band });
    }
    let mut terms = pot.terms.clone();
    if !chi.chi.is_empty() {
        let grad = chi
            .chi
            .iter()
            .map(|(k, v)| {
                let kp = grid.momentum(*k);
                (*k, kp.map(|ki| -I * ki * v))
            })
            .collect();
        terms.push(PotentialTerm { a0: BTreeMap::new(), a: grad, envelope: chi.envelope.clone() });
        terms.push(PotentialTerm { a0: chi.chi.clone(), a: BTreeMap::new(), envelope: chi.envelope.derivative() });
    }
    PotentialSpec::new(terms, pot.band)
}

/// `h(t) = static + sum_k g_k(t) H_k` with hermitian parts.
#[derive(Debug, Clone)]
pub struct OneBodyDrive {
    static_part: CMatrix,
    terms: Vec<(CMatrix, Envelope)>,
}

impl OneBodyDrive {
    pub fn new(static_part: CMatrix, terms: Vec<(CMatrix, Envelope)>) -> Result<Self> {
        OneBodyOperator::hermitian(static_part.clone())?;
        for (mat, _) in &terms {
            OneBodyOperator::hermitian(mat.clone())?;
        }
        Ok(Self { static_part, terms })
    }

    /// `h0 - e alpha.A + e A0` for a potential.
    pub fn dirac(catalog: &BasisCatalog, pot: &PotentialSpec, e: f64) -> Result<Self> {
        Self::new(h0_matrix(catalog).into_entries(), interaction_terms(catalog, pot, e)?)
    }

    pub fn static_part(&self) -> &CMatrix {
        &self.static_part
    }

    pub fn terms(&self) -> &[(CMatrix, Envelope)] {
        &self.terms
    }

    pub fn at(&self, t: f64) -> OneBodyOperator {
        let entries = self.terms.iter().fold(self.static_part.clone(), |acc, (mat, env)| acc + mat * c(env.value(t)));
        OneBodyOperator { entries, hermitian: true }
    }
}

/// Unitaries `u(t_k)` on a uniform time grid with `u(t_0) = I`.
#[derive(Debug, Clone)]
pub struct OneBodyPropagator {
    times: Vec<f64>,
    unitaries: Vec<CMatrix>,
}

impl OneBodyPropagator {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn unitaries(&self) -> &[CMatrix] {
        &self.unitaries
    }

    pub fn at(&self, step: usize) -> &CMatrix {
        &self.unitaries[step]
    }

    pub fn last(&self) -> &CMatrix {
        self.unitaries.last().expect("propagator always holds u(t0)")
    }
}

/// Midpoint-exponential stepping `u <- exp(-i h(t + dt/2) dt) u`.
pub fn propagate(h: impl Fn(f64) -> OneBodyOperator, t0: f64, t1: f64, n_steps: usize) -> Result<OneBodyPropagator> {
    if n_steps == 0 {
        return Err(Error::InvalidParameter { name: "steps", reason: "must be >= 1".into() });
    }
    let dt = (t1 - t0) / n_steps as f64;
    let first = h(t0);
    let m = first.dim();
    let mut u = CMatrix::identity(m, m);
    let mut times = vec![t0];
    let mut unitaries = vec![u.clone()];
    for step in 0..n_steps {
        let mid = h(t0 + (step as f64 + 0.5) * dt);
        if !mid.is_hermitian() {
            return Err(Error::NotHermitian(hermiticity_residual(mid.entries())));
        }
        if mid.dim() != m {
            return Err(Error::DimensionMismatch { expected: m, found: mid.dim() });
        }
        u = expm_hermitian(mid.entries(), dt) * u;
        times.push(t0 + (step + 1) as f64 * dt);
        unitaries.push(u.clone());
    }
    Ok(OneBodyPropagator { times, unitaries })
}

/// Whether wave index `n` lies within `band` of the window centre and at
/// least `band` inside the cutoff. This row set is fixed as the cutoff grows,
/// so truncation effects on it shrink with the distance to the boundary.
pub fn is_interior(grid: &MomentumGrid, n: WaveIndex, band: i32) -> bool {
    grid.active_axes().iter().all(|&ax| {
        let centre = 0.5 * (grid.n_min() + grid.n_max()) as f64;
        let inside = n[ax] - band >= grid.n_min() && n[ax] + band <= grid.n_max();
        inside && (n[ax] as f64 - centre).abs() <= band as f64
    })
}

/// Checks `H0 e^{-ieX} = e^{-ieX} (-e G + H0)` in the truncated basis, with
/// `G` the matrix of `alpha . grad chi`. Returns the largest residual over
/// interior rows (see [`is_interior`]) and over all rows.
pub fn gauge_identity_residual(catalog: &BasisCatalog, chi: &GaugeFunction, t: f64, e: f64) -> Result<(f64, f64)> {
    let h0 = h0_matrix(catalog).into_entries();
    let x = chi_matrix(catalog, chi, t)?;
    let g = grad_chi_profile_matrix(catalog, chi)? * c(chi.envelope.value(t));
    let w = gauge_phase(&x, e)?.into_entries();
    let r = &h0 * &w - &w * (g * c(-e) + &h0);
    let grid = catalog.grid();
    let band = chi.band();
    let mut interior = 0.0f64;
    let mut boundary = 0.0f64;
    for i in 0..catalog.len() {
        let row = r.row(i).iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
        boundary = boundary.max(row);
        if is_interior(grid, catalog.label(i).n, band) {
            interior = interior.max(row);
        }
    }
    Ok((interior, boundary))
}

/// Largest `|u^dagger u - I|` over a propagator.
pub fn propagator_unitarity(prop: &OneBodyPropagator) -> f64 {
    prop.unitaries.iter().map(unitarity_residual).fold(0.0, f64::max)
}
