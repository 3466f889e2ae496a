//! Dense complex matrices and labeled multi-register states.
//!
//! Matrices are plain `nalgebra` dynamic matrices over `Complex<f64>`. The
//! spectral helpers here symmetrize their input, order eigenvalues from
//! largest to smallest and snap tiny eigenvalues to zero, which is what the
//! entropy and fidelity code upstream relies on.

mod labeled;
pub mod random;

pub use labeled::{Layout, Projection, Radix, State, StateBody};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Eigenvalues with absolute value below this are treated as exact zeros.
pub const ZERO_CUTOFF: f64 = 1e-12;
/// Slack allowed on negative eigenvalues and traces above one.
pub const PSD_SLACK: f64 = 1e-10;
/// Largest tolerated anti-Hermitian part before spectral routines refuse.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(values.len(), values.iter().map(|&v| cr(v))))
}

/// Rank-one projector `|v><v|` (not normalized).
pub fn outer(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// Computational basis vector `|i>` in dimension `d`.
pub fn basis(d: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(d);
    v[i] = cr(1.0);
    v
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    a.kronecker(b)
}

pub fn trace(m: &CMat) -> C64 {
    m.trace()
}

/// Largest entry of `|m - m^dag|`.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn ensure_square(m: &CMat) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues come back in descending order and the columns of the returned
/// matrix are the matching orthonormal eigenvectors.
pub fn hermitian_eig(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    ensure_square(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMat::zeros(0, 0)));
    }
    let scale = m.iter().fold(1.0f64, |acc, z| acc.max(z.norm()));
    let defect = hermiticity_defect(m);
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(defect));
    }
    let sym = (m + m.adjoint()) * cr(0.5);
    let eig = nalgebra::SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Eigenvalues only, descending.
pub fn hermitian_eigenvalues(m: &CMat) -> Result<Vec<f64>> {
    ensure_square(m)?;
    let n = m.nrows();
    let scale = m.iter().fold(1.0f64, |acc, z| acc.max(z.norm()));
    let defect = hermiticity_defect(m);
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(defect));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let sym = (m + m.adjoint()) * cr(0.5);
    let mut v: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

/// Rebuild `U diag(values) U^dag`.
pub fn from_spectrum(values: &[f64], vectors: &CMat) -> CMat {
    let mut scaled = vectors.clone();
    for (j, &v) in values.iter().enumerate() {
        let mut col = scaled.column_mut(j);
        col *= cr(v);
    }
    scaled * vectors.adjoint()
}

/// Apply `f` to the spectrum of a PSD matrix.
///
/// Eigenvalues below [`ZERO_CUTOFF`] are exact zeros. With `support_only`
/// they stay zero regardless of `f`, which gives pseudo-inverses and
/// support-restricted logarithms. Otherwise `f(0)` must be finite or the
/// call reports a support violation.
pub fn matrix_function_psd(m: &CMat, f: impl Fn(f64) -> f64, support_only: bool) -> Result<CMat> {
    let (values, vectors) = hermitian_eig(m)?;
    let scale = values.first().copied().unwrap_or(0.0).abs().max(1.0);
    let mut mapped = Vec::with_capacity(values.len());
    for &v in &values {
        if v < -PSD_SLACK * scale {
            return Err(Error::NotPsd(v));
        }
        if v.abs() < ZERO_CUTOFF {
            if support_only {
                mapped.push(0.0);
                continue;
            }
            let y = f(0.0);
            if !y.is_finite() {
                return Err(Error::SupportViolation(v));
            }
            mapped.push(y);
        } else {
            let y = f(v.max(0.0));
            if !y.is_finite() {
                return Err(Error::SupportViolation(v));
            }
            mapped.push(y);
        }
    }
    Ok(from_spectrum(&mapped, &vectors))
}

pub fn sqrt_psd(m: &CMat) -> Result<CMat> {
    matrix_function_psd(m, f64::sqrt, false)
}

/// `m^{-1/2}` on the support of `m`, zero elsewhere.
pub fn inv_sqrt_psd(m: &CMat) -> Result<CMat> {
    matrix_function_psd(m, |x| 1.0 / x.sqrt(), true)
}

/// Projector onto the kernel of a PSD matrix.
pub fn kernel_projector(m: &CMat) -> Result<CMat> {
    let (values, vectors) = hermitian_eig(m)?;
    let mask: Vec<f64> = values.iter().map(|&v| if v.abs() < ZERO_CUTOFF { 1.0 } else { 0.0 }).collect();
    Ok(from_spectrum(&mask, &vectors))
}

/// Singular values, descending.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Sum of singular values.
pub fn trace_norm(m: &CMat) -> f64 {
    singular_values(m).iter().sum()
}

/// The unitary `U` maximizing `Re tr(U k)`.
///
/// With `k = W S V^dag`, `U = V W^dag` gives `tr(U k) = tr S`. On rank
/// deficient input the null-space columns of the SVD factors are completed
/// to an orthonormal basis, so the result is always unitary.
pub fn polar_unitary(k: &CMat) -> Result<CMat> {
    ensure_square(k)?;
    let n = k.nrows();
    if n == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let svd = k.clone().svd(true, true);
    let w = svd.u.expect("requested u");
    let v = svd.v_t.expect("requested v_t").adjoint();
    let w = complete_unitary(&w);
    let v = complete_unitary(&v);
    Ok(v * w.adjoint())
}

/// Re-orthonormalize the columns of a nearly unitary matrix, replacing
/// degenerate columns by fresh directions (Gram-Schmidt against the basis).
pub fn complete_unitary(m: &CMat) -> CMat {
    let n = m.nrows();
    let mut out: Vec<CVec> = Vec::with_capacity(n);
    let mut candidates: Vec<CVec> = (0..m.ncols()).map(|j| m.column(j).into_owned()).collect();
    candidates.extend((0..n).map(|i| basis(n, i)));
    for mut v in candidates {
        if out.len() == n {
            break;
        }
        for _ in 0..2 {
            for u in &out {
                let proj = u.dotc(&v);
                v -= u * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            out.push(v / cr(norm));
        }
    }
    let mut u = CMat::zeros(n, n);
    for (j, col) in out.iter().enumerate() {
        u.set_column(j, col);
    }
    u
}

/// Largest entry of `|U^dag U - I|`.
pub fn unitarity_defect(u: &CMat) -> f64 {
    let g = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - cr(target)).norm());
        }
    }
    worst
}

/// Spectral norm of a Hermitian matrix.
pub fn hermitian_norm(m: &CMat) -> Result<f64> {
    let v = hermitian_eigenvalues(m)?;
    Ok(v.iter().fold(0.0f64, |acc, x| acc.max(x.abs())))
}

/// Max-abs entry difference between two matrices.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).fold(0.0f64, |acc, (x, y)| acc.max((x - y).norm()))
}
