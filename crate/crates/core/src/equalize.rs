//! Orthogonal equalizers.
//!
//! A rotation `Q` equalizes `U` when every column of `UQ` has the same norm,
//! i.e. when `Qᵀ (UᵀU) Q` has a constant diagonal. Since `‖U‖_F` is rotation
//! invariant, that common squared norm is `‖U‖_F² / r`.

use alloc::vec::Vec;

use crate::matrixkit::{svd_compact, sym_eig, Matrix};
use crate::math;
use crate::objective::FactorPair;
use crate::{Error, Result};

/// Largest universal equalizer [`universal_equalizer`] will build.
pub const UNIVERSAL_MAX_SIZE: usize = 1 << 12;

#[derive(Debug, Clone, PartialEq)]
pub struct EqualizeResult {
    /// `r × r` orthogonal equalizer.
    pub q: Matrix,
    /// Max minus min squared column norm of the rotated matrix.
    pub residual: f64,
}

/// Spread of squared column norms, `max − min`.
pub fn column_norm_spread(u: &Matrix) -> f64 {
    let norms = u.column_norms_sq();
    let max = norms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
    if norms.is_empty() {
        0.0
    } else {
        max - min
    }
}

/// Equalizer of a tied autoencoder `U` (`d × r`).
///
/// Works on the traceless Gram matrix `G₁ = UᵀU − (tr/r) I`. At each step the
/// unit vector `w = n^{-1/2} Σ v_j` built from the eigenvectors of the current
/// `n × n` trailing block has `wᵀ G₁ w = tr(block)/n = 0`; a Householder
/// reflection with first column `w` moves that zero onto the diagonal and the
/// recursion continues on the trailing `(n−1) × (n−1)` block. The product of
/// the embedded reflections zeroes the whole diagonal of `QᵀG₁Q`.
pub fn eqz(u: &Matrix) -> Result<EqualizeResult> {
    let r = u.cols();
    if r == 0 {
        return Err(Error::InvalidArgument("equalizer needs at least one column"));
    }
    let gram = u.gram();
    let shift = gram.trace() / r as f64;
    let mut block = Matrix::from_fn(r, r, |i, j| {
        let g = 0.5 * (gram[(i, j)] + gram[(j, i)]);
        if i == j {
            g - shift
        } else {
            g
        }
    });
    let mut q = Matrix::identity(r);

    for step in 0..r.saturating_sub(1) {
        let n = r - step;
        let eig = sym_eig(&block)?;
        let mut w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| eig.eigvecs[(i, j)]).sum()).collect();
        let norm = math::sqrt(w.iter().map(|x| x * x).sum());
        for x in w.iter_mut() {
            *x /= norm;
        }
        let h = reflector_with_first_column(&w);

        let rotated = h.t_matmul(&block)?.matmul(&h)?;
        block = Matrix::from_fn(n - 1, n - 1, |i, j| {
            0.5 * (rotated[(i + 1, j + 1)] + rotated[(j + 1, i + 1)])
        });

        // Q ← Q · diag(I_step, H)
        let mut next = q.clone();
        for row in 0..r {
            for col in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += q[(row, step + k)] * h[(k, col)];
                }
                next[(row, step + col)] = s;
            }
        }
        q = next;
    }

    let residual = column_norm_spread(&u.matmul(&q)?);
    Ok(EqualizeResult { q, residual })
}

/// Orthogonal symmetric-up-to-sign matrix whose first column is the unit
/// vector `w`, built from one Householder reflection.
fn reflector_with_first_column(w: &[f64]) -> Matrix {
    let n = w.len();
    let s = if w[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut v = w.to_vec();
    v[0] += s;
    let vtv: f64 = v.iter().map(|x| x * x).sum();
    // P = I − 2 v vᵀ / vᵀv maps e₁ to −s w; negate by −s to get w.
    Matrix::from_fn(n, n, |i, j| {
        let p = if i == j { 1.0 } else { 0.0 } - 2.0 * v[i] * v[j] / vtv;
        -s * p
    })
}

/// `Z_k`, the `2^{k−1} × 2^{k−1}` normalized Hadamard matrix
/// `Z_1 = [1]`, `Z_k ∝ [[Z, Z], [−Z, Z]]`.
///
/// For every diagonal `D`, `Z_kᵀ D Z_k` has constant diagonal `tr(D)/2^{k−1}`.
pub fn universal_equalizer(k: u32) -> Result<Matrix> {
    if k == 0 {
        return Err(Error::InvalidArgument("universal equalizer index starts at 1"));
    }
    let exponent = k - 1;
    if exponent >= usize::BITS - 1 || (1usize << exponent) > UNIVERSAL_MAX_SIZE {
        return Err(Error::SizeOverflow { exponent, cap: UNIVERSAL_MAX_SIZE });
    }
    let n = 1usize << exponent;
    let scale = math::sqrt(1.0 / n as f64);
    Ok(Matrix::from_fn(n, n, |i, j| {
        // block recursion puts the minus sign on (bottom, left) at every level
        if (i & !j).count_ones() % 2 == 1 {
            -scale
        } else {
            scale
        }
    }))
}

/// Equalizer `Q = V Z_k` for `U` with `r = 2^{k−1}` columns, where `V` holds
/// the right singular vectors of `U` (eigenvectors of `UᵀU`).
pub fn universal_equalize(u: &Matrix) -> Result<EqualizeResult> {
    let r = u.cols();
    if r == 0 || !r.is_power_of_two() {
        return Err(Error::InvalidArgument("universal equalizer needs a power-of-two width"));
    }
    let z = universal_equalizer(r.trailing_zeros() + 1)?;
    let v = sym_eig(&u.gram())?.eigvecs;
    let q = v.matmul(&z)?;
    let residual = column_norm_spread(&u.matmul(&q)?);
    Ok(EqualizeResult { q, residual })
}

/// Jointly equalized pair computing the same map as `f`.
///
/// With `UVᵀ = W Σ Yᵀ`, the balanced factors `W Σ^{1/2}` and `Y Σ^{1/2}`
/// (zero-padded to `r` columns) share the Gram matrix `Σ`, so the single
/// equalizer of the first also equalizes the second. Every column of the
/// result has squared norm `‖UVᵀ‖_* / r`.
pub fn joint_equalize(f: &FactorPair) -> Result<(FactorPair, Matrix)> {
    let r = f.width();
    let svd = svd_compact(&f.product())?;
    let k = svd.rank().min(r);
    let roots: Vec<f64> = svd.singulars[..k].iter().map(|&s| math::sqrt(s)).collect();
    let u_bal = svd.left.leading_columns(k).scale_columns(&roots).pad_columns(r);
    let v_bal = svd.right.leading_columns(k).scale_columns(&roots).pad_columns(r);
    let eq = eqz(&u_bal)?;
    let factors = FactorPair::new(u_bal.matmul(&eq.q)?, v_bal.matmul(&eq.q)?)?;
    Ok((factors, eq.q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn equalized_norms(u: &Matrix) -> Vec<f64> {
        let q = eqz(u).unwrap().q;
        u.matmul(&q).unwrap().column_norms_sq()
    }

    #[test]
    fn identity_stays_equalized() {
        for n in equalized_norms(&Matrix::identity(2)) {
            assert_abs_diff_eq!(n, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn single_mass_column_is_split() {
        let u = Matrix::from_rows(&[&[2.0, 0.0], &[0.0, 0.0]]);
        for n in equalized_norms(&u) {
            assert_abs_diff_eq!(n, 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn unequal_diagonal() {
        let u = Matrix::diag(&[3.0_f64.sqrt(), 1.0]);
        for n in equalized_norms(&u) {
            assert_abs_diff_eq!(n, 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn single_column_is_trivial() {
        let u = Matrix::from_rows(&[&[1.0], &[2.0]]);
        let e = eqz(&u).unwrap();
        assert_eq!(e.q, Matrix::identity(1));
        assert_eq!(e.residual, 0.0);
    }

    #[test]
    fn universal_small_cases() {
        assert_eq!(universal_equalizer(1).unwrap(), Matrix::identity(1));
        let h = core::f64::consts::FRAC_1_SQRT_2;
        let z2 = universal_equalizer(2).unwrap();
        assert_eq!(z2, Matrix::from_rows(&[&[h, h], &[-h, h]]));
        let d = z2.t_matmul(&Matrix::diag(&[4.0, 0.0])).unwrap().matmul(&z2).unwrap();
        assert_abs_diff_eq!(d[(0, 0)], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d[(1, 1)], 2.0, epsilon = 1e-15);
        assert!(matches!(universal_equalizer(14), Err(Error::SizeOverflow { .. })));
        assert!(matches!(universal_equalizer(200), Err(Error::SizeOverflow { .. })));
        assert!(universal_equalizer(0).is_err());
    }

    #[test]
    fn universal_equalize_rejects_odd_width() {
        assert!(universal_equalize(&Matrix::zeros(3, 3)).is_err());
        let u = Matrix::from_rows(&[&[3.0, 0.0, 1.0, 0.0], &[0.0, 1.0, 0.0, 2.0]]);
        let e = universal_equalize(&u).unwrap();
        assert!(e.residual < 1e-13);
    }

    #[test]
    fn joint_examples() {
        let (fb, _) = joint_equalize(&FactorPair::new(Matrix::identity(2), Matrix::identity(2)).unwrap()).unwrap();
        for n in fb.u.column_norms_sq().into_iter().chain(fb.v.column_norms_sq()) {
            assert_abs_diff_eq!(n, 1.0, epsilon = 1e-14);
        }
        let f = FactorPair::new(Matrix::diag(&[3.0, 1.0]), Matrix::identity(2)).unwrap();
        let (fb, q) = joint_equalize(&f).unwrap();
        assert!(q.orthogonality_defect() < 1e-14);
        for n in fb.u.column_norms_sq().into_iter().chain(fb.v.column_norms_sq()) {
            assert_abs_diff_eq!(n, 2.0, epsilon = 1e-13);
        }
        assert!(fb.product().sub(&f.product()).unwrap().frobenius() < 1e-13);
    }

    #[test]
    fn joint_zero_product() {
        let f = FactorPair::new(Matrix::zeros(3, 2), Matrix::identity(2)).unwrap();
        let (fb, _) = joint_equalize(&f).unwrap();
        assert_eq!(fb.product().frobenius(), 0.0);
    }
}
