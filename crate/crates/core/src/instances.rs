//! Random and fixed problem instances.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::matrixkit::{dot, Matrix};
use crate::math;
use crate::rng;
use crate::{Error, Result};

/// `rows × cols` matrix of i.i.d. standard normal entries.
pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let mut data = vec![0.0; rows * cols];
    rng::fill_normal(rng, &mut data);
    Matrix::from_vec(rows, cols, data).expect("normal draws are finite")
}

/// `n × k` matrix with orthonormal columns, `k ≤ n`.
///
/// Gaussian columns orthonormalized by Gram–Schmidt with one
/// reorthogonalization pass.
pub fn orthonormal_columns<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Matrix> {
    if k > n {
        return Err(Error::InvalidArgument("cannot fit more orthonormal columns than rows"));
    }
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    while cols.len() < k {
        let mut v = vec![0.0; n];
        rng::fill_normal(rng, &mut v);
        for _ in 0..2 {
            for c in &cols {
                let p = dot(c, &v);
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= p * ci;
                }
            }
        }
        let norm = math::sqrt(dot(&v, &v));
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            cols.push(v);
        }
    }
    Ok(Matrix::from_fn(n, k, |i, j| cols[j][i]))
}

/// Haar-like random orthogonal `n × n` matrix.
pub fn orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix {
    orthonormal_columns(n, n, rng).expect("square request")
}

/// Random symmetric matrix `(G + Gᵀ)/2` with Gaussian `G`.
pub fn symmetric<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Matrix {
    let g = gaussian(n, n, rng);
    Matrix::from_fn(n, n, |i, j| 0.5 * (g[(i, j)] + g[(j, i)]))
}

/// Random PSD matrix `G Gᵀ / k` with `G` of shape `n × k`.
pub fn psd<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Matrix {
    let g = gaussian(n, k, rng);
    let p = g.matmul_t(&g).expect("shapes agree").scale(1.0 / k.max(1) as f64);
    Matrix::from_fn(n, n, |i, j| 0.5 * (p[(i, j)] + p[(j, i)]))
}

/// `W diag(s) Yᵀ` with random orthonormal `W` (`d1 × k`) and `Y` (`d2 × k`),
/// where `k = s.len() ≤ min(d1, d2)`.
pub fn with_singular_values<R: Rng + ?Sized>(
    d1: usize,
    d2: usize,
    s: &[f64],
    rng: &mut R,
) -> Result<Matrix> {
    let w = orthonormal_columns(d1, s.len(), rng)?;
    let y = orthonormal_columns(d2, s.len(), rng)?;
    w.scale_columns(s).matmul_t(&y)
}

/// `W diag(s) Wᵀ` with random orthonormal `W`.
pub fn with_eigenvalues<R: Rng + ?Sized>(d: usize, s: &[f64], rng: &mut R) -> Result<Matrix> {
    let w = orthonormal_columns(d, s.len(), rng)?;
    let p = w.scale_columns(s).matmul_t(&w)?;
    Ok(Matrix::from_fn(d, d, |i, j| 0.5 * (p[(i, j)] + p[(j, i)])))
}

/// Default decay length `τ = min(d1, d2)/6`.
pub fn default_tau(d1: usize, d2: usize) -> f64 {
    d1.min(d2) as f64 / 6.0
}

/// Exponentially decaying spectrum `exp(−i/τ)` for `i = 1, …, k`.
pub fn exponential_spectrum(k: usize, tau: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument("decay length must be positive"));
    }
    Ok((1..=k).map(|i| math::exp(-(i as f64) / tau)).collect())
}

/// Generated `d1 × d2` target with singular values `exp(−i/τ)` and random
/// singular bases drawn from `seed`.
pub fn exponential_target(d1: usize, d2: usize, tau: Option<f64>, seed: u64) -> Result<Matrix> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::InvalidArgument("dimensions must be positive"));
    }
    let tau = tau.unwrap_or_else(|| default_tau(d1, d2));
    let s = exponential_spectrum(d1.min(d2), tau)?;
    let mut rng = rng::stream(seed, rng::domain::INSTANCE, 0);
    with_singular_values(d1, d2, &s, &mut rng)
}

/// Symmetric PSD `d × d` target with eigenvalues `exp(−i/τ)`.
pub fn exponential_target_psd(d: usize, tau: Option<f64>, seed: u64) -> Result<Matrix> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive"));
    }
    let tau = tau.unwrap_or_else(|| default_tau(d, d));
    let s = exponential_spectrum(d, tau)?;
    let mut rng = rng::stream(seed, rng::domain::INSTANCE, 1);
    with_eigenvalues(d, &s, &mut rng)
}

/// Fixed small targets: 2×2 and 3×2 matrices covering diagonal, rank-one,
/// flat-spectrum, non-symmetric and negative-entry cases.
pub fn small_corpus() -> Vec<Matrix> {
    vec![
        Matrix::diag(&[3.0, 1.0]),
        Matrix::diag(&[2.0, 2.0]),
        Matrix::diag(&[1.0, 0.0]),
        Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]),
        Matrix::from_rows(&[&[0.5, -1.5], &[2.0, 0.25]]),
        Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]),
        Matrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]),
        Matrix::from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]),
        Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 2.0], &[1.0, 1.0]]),
        Matrix::from_rows(&[&[3.0, -1.0], &[0.5, 0.5], &[-2.0, 1.0]]),
        Matrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]),
        Matrix::from_rows(&[&[0.2, 0.0], &[0.0, 0.1], &[0.0, 0.0]]),
    ]
}
