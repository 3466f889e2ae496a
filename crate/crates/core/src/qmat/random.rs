//! Seeded random matrices and states for tests, benches and the battery.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{c, cr, CMat, CVec};

pub type TestRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-random unitary via QR of a Ginibre matrix with the phase fix.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMat {
    let g = ginibre(rng, d, d);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let z = r[(j, j)];
        let phase = if z.norm() > 0.0 { z / cr(z.norm()) } else { cr(1.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// Haar-random isometry from dimension `d_in` into `d_out`.
pub fn haar_isometry<R: Rng + ?Sized>(rng: &mut R, d_in: usize, d_out: usize) -> CMat {
    assert!(d_out >= d_in, "isometry needs d_out >= d_in");
    haar_unitary(rng, d_out).columns(0, d_in).into_owned()
}

/// Uniformly random unit vector.
pub fn random_pure<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CVec {
    let g = ginibre(rng, d, 1);
    let v = g.column(0).into_owned();
    let n = v.norm();
    v / cr(n)
}

/// Random density matrix of the given rank (induced measure).
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> CMat {
    let g = ginibre(rng, d, rank.max(1));
    let m = &g * g.adjoint();
    let t = m.trace().re;
    m / cr(t)
}

/// Random probability vector (flat Dirichlet).
pub fn random_distribution<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = v.iter().sum();
    for x in &mut v {
        *x /= s;
    }
    v
}

/// Random Hermitian matrix with entries of unit scale.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMat {
    let g = ginibre(rng, d, d);
    (&g + g.adjoint()) * cr(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::unitarity_defect;

    #[test]
    fn haar_is_unitary() {
        let mut rng = rng_from_seed(1);
        for d in 1..6 {
            assert!(unitarity_defect(&haar_unitary(&mut rng, d)) < 1e-12);
        }
    }

    #[test]
    fn isometry_columns_orthonormal() {
        let mut rng = rng_from_seed(2);
        let v = haar_isometry(&mut rng, 2, 5);
        let g = v.adjoint() * &v;
        assert!((g - CMat::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn density_has_unit_trace() {
        let mut rng = rng_from_seed(3);
        let r = random_density(&mut rng, 4, 2);
        assert!((r.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distribution_sums_to_one() {
        let mut rng = rng_from_seed(4);
        let p = random_distribution(&mut rng, 7);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x >= 0.0));
    }
}
