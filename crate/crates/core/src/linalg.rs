//! Small dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMatrix::identity(n, n)))
}

/// Eigendecomposition of a hermitian matrix: ascending eigenvalues and the
/// matching orthonormal eigenvectors as columns.
pub fn eigh(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    // symmetrize so roundoff in the input cannot leak an anti-hermitian part
    let sym = (h + h.adjoint()) * c(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(h.nrows(), h.ncols(), |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

/// `exp(-i * scale * h)` for hermitian `h`, exactly unitary up to roundoff.
pub fn expm_hermitian(h: &CMatrix, scale: f64) -> CMatrix {
    let (values, vectors) = eigh(h);
    let phases = values.iter().map(|&e| (-I * scale * e).exp());
    let mut scaled = vectors.clone();
    for (mut col, ph) in scaled.column_iter_mut().zip(phases) {
        col *= ph;
    }
    scaled * vectors.adjoint()
}

/// Entrywise complex conjugate.
pub fn conj(m: &CMatrix) -> CMatrix {
    m.map(|z| z.conj())
}

/// Row-sum (infinity) norm, an upper bound for the spectral norm of a
/// hermitian matrix.
pub fn inf_norm(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}
