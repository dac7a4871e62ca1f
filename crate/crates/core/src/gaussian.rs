//! Correlation-matrix backend for bilinear expectation values.

use crate::error::{Error, Result};
use crate::fock::electron_pair;
use crate::linalg::{c, conj, eigh, hermiticity_residual, unitarity_residual, CMatrix, C64};
use crate::modes::{BasisCatalog, ModeLabel};

/// `C_ij = <c_i^dagger c_j>`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    c: CMatrix,
}

impl CorrelationMatrix {
    /// Wraps a matrix, checking hermiticity and that the spectrum lies in
    /// `[0, 1]`.
    pub fn new(c: CMatrix) -> Result<Self> {
        if !c.is_square() {
            return Err(Error::DimensionMismatch { expected: c.nrows(), found: c.ncols() });
        }
        let herm = hermiticity_residual(&c);
        if herm > 1e-12 {
            return Err(Error::NotHermitian(herm));
        }
        let (values, _) = eigh(&c);
        if values.iter().any(|&v| !(-1e-10..=1.0 + 1e-10).contains(&v)) {
            return Err(Error::InvalidParameter { name: "correlation", reason: "eigenvalues outside [0, 1]".into() });
        }
        Ok(Self { c })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.c
    }

    pub fn dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.c).0
    }
}

/// Projector onto the negative-energy modes.
pub fn vacuum_correlation(catalog: &BasisCatalog) -> CorrelationMatrix {
    let m = catalog.len();
    let mut c0 = CMatrix::zeros(m, m);
    for i in catalog.negative_modes() {
        c0[(i, i)] = c(1.0);
    }
    CorrelationMatrix { c: c0 }
}

/// Vacuum plus `1/2 (e_1 + e_2)(e_1 + e_2)^dagger` on two electron modes.
pub fn omega0_correlation(catalog: &BasisCatalog, mode1: ModeLabel, mode2: ModeLabel) -> Result<CorrelationMatrix> {
    let (i1, i2) = electron_pair(catalog, mode1, mode2)?;
    let mut out = vacuum_correlation(catalog).c;
    for a in [i1, i2] {
        for b in [i1, i2] {
            out[(a, b)] += c(0.5);
        }
    }
    Ok(CorrelationMatrix { c: out })
}

/// `C(t) = conj(u) C u^T`: the correlation matrix after one-body evolution
/// `u`, so that `bilinear_expectation(C(t), h)` equals the Schrödinger
/// expectation of `quantize(h)` in the evolved state.
pub fn evolve_correlation(corr: &CorrelationMatrix, u: &CMatrix) -> Result<CorrelationMatrix> {
    if u.nrows() != corr.dim() || u.ncols() != corr.dim() {
        return Err(Error::DimensionMismatch { expected: corr.dim(), found: u.nrows() });
    }
    let r = unitarity_residual(u);
    if r > 1e-10 {
        return Err(Error::NotUnitary(r));
    }
    let out = conj(u) * &corr.c * u.transpose();
    Ok(CorrelationMatrix { c: (&out + out.adjoint()) * c(0.5) })
}

/// `<sum_ij h_ij c_i^dagger c_j> = sum_ij h_ij C_ij`.
pub fn bilinear_expectation(corr: &CorrelationMatrix, h: &CMatrix) -> Result<C64> {
    if h.nrows() != corr.dim() || h.ncols() != corr.dim() {
        return Err(Error::DimensionMismatch { expected: corr.dim(), found: h.nrows() });
    }
    Ok(h.iter().zip(corr.c.iter()).map(|(a, b)| a * b).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_ladders, evolve_schrodinger, expectation, omega0_state, quantize, vacuum_state};
    use crate::linalg::{max_abs, ZERO};
    use crate::modes::{build_catalog, MomentumGrid, Spin};
    use crate::onebody::{h0_matrix, propagate, OneBodyOperator};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn catalog(n_min: i32, n_max: i32) -> BasisCatalog {
        build_catalog(&MomentumGrid::window(2.0 * PI, 1, n_min, n_max).unwrap(), 1.0).unwrap()
    }

    fn random_hermitian(m: usize, rng: &mut impl Rng) -> CMatrix {
        let a = CMatrix::from_fn(m, m, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        (&a + a.adjoint()) * c(0.5)
    }

    fn modes() -> (ModeLabel, ModeLabel) {
        (ModeLabel::electron(Spin::Up, [0, 0, 0]), ModeLabel::electron(Spin::Up, [0, 0, 1]))
    }

    #[test]
    fn vacuum_projector() {
        let cat = catalog(-2, 2);
        let vac = vacuum_correlation(&cat);
        assert!(max_abs(&(vac.matrix() * vac.matrix() - vac.matrix())) < 1e-12);
        assert_eq!(vac.matrix().trace(), c(10.0));
        for i in 0..cat.len() {
            let neg = cat.mode(i).label.branch == crate::modes::Branch::Negative;
            assert_eq!(vac.matrix()[(i, i)], c(if neg { 1.0 } else { 0.0 }));
        }
        let h0 = h0_matrix(&cat);
        assert!((bilinear_expectation(&vac, h0.entries()).unwrap() - c(cat.vacuum_energy())).norm() < 1e-12);
        assert_eq!(bilinear_expectation(&vac, &CMatrix::identity(20, 20)).unwrap(), c(10.0));
    }

    #[test]
    fn omega0_structure() {
        let cat = catalog(0, 1);
        let (m1, m2) = modes();
        let corr = omega0_correlation(&cat, m1, m2).unwrap();
        assert_eq!(corr.matrix().trace(), c(5.0));
        for v in corr.eigenvalues() {
            assert!(v.abs() < 1e-12 || (v - 1.0).abs() < 1e-12);
        }
        let ladders = build_ladders(&cat).unwrap();
        let fock = omega0_state(&cat, &ladders, m1, m2).unwrap().correlation();
        assert!(max_abs(&(fock - corr.matrix())) < 1e-12);
        assert!(omega0_correlation(&cat, m1, m1).is_err());
    }

    #[test]
    fn identity_evolution_is_trivial() {
        let cat = catalog(0, 1);
        let (m1, m2) = modes();
        let corr = omega0_correlation(&cat, m1, m2).unwrap();
        assert_eq!(&evolve_correlation(&corr, &CMatrix::identity(8, 8)).unwrap(), &corr);
        let mut bad = CMatrix::identity(8, 8);
        bad[(0, 0)] = c(2.0);
        assert!(matches!(evolve_correlation(&corr, &bad), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn matches_fock_under_random_drive() {
        let cat = catalog(0, 1);
        let ladders = build_ladders(&cat).unwrap();
        let (m1, m2) = modes();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let drive = random_hermitian(8, &mut rng) * c(0.5) + h0_matrix(&cat).into_entries();
        let h = |_t: f64| OneBodyOperator::hermitian(drive.clone()).unwrap();
        let u = propagate(h, 0.0, 0.8, 40).unwrap();
        let corr = evolve_correlation(&omega0_correlation(&cat, m1, m2).unwrap(), u.last()).unwrap();
        let big = quantize(&drive, &ladders).unwrap();
        let traj = evolve_schrodinger(&omega0_state(&cat, &ladders, m1, m2).unwrap(), |_| big.clone(), 0.0, 0.8, 40, 40).unwrap();
        let psi = traj.states.last().unwrap();
        for _ in 0..5 {
            let obs = random_hermitian(8, &mut rng);
            let fock = expectation(psi, &quantize(&obs, &ladders).unwrap()).unwrap();
            let gauss = bilinear_expectation(&corr, &obs).unwrap();
            assert!((fock - gauss).norm() < 1e-8, "{fock} vs {gauss}");
        }
        assert!(max_abs(&(psi.correlation() - corr.matrix())) < 1e-8);
    }

    #[test]
    fn dimension_checked() {
        let cat = catalog(0, 0);
        let vac = vacuum_correlation(&cat);
        assert!(bilinear_expectation(&vac, &CMatrix::zeros(3, 3)).is_err());
        let ladders = build_ladders(&cat).unwrap();
        assert_eq!(vacuum_state(&ladders).correlation(), *vac.matrix());
        let _ = ZERO;
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn prop_evolution_preserves_spectrum(seed in 0u64..10_000) {
            let cat = catalog(-1, 1);
            let (m1, m2) = modes();
            let corr = omega0_correlation(&cat, m1, m2).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let u = crate::linalg::expm_hermitian(&random_hermitian(12, &mut rng), 1.0);
            let evolved = evolve_correlation(&corr, &u).unwrap();
            let before = corr.eigenvalues();
            let after = evolved.eigenvalues();
            for (a, b) in before.iter().zip(&after) {
                prop_assert!((a - b).abs() < 1e-10);
            }
            prop_assert!(after.iter().all(|v| (-1e-9..=1.0 + 1e-9).contains(v)));
            prop_assert!(bilinear_expectation(&evolved, &random_hermitian(12, &mut rng)).unwrap().im.abs() < 1e-12);
        }
    }
}
