use alloc::vec::Vec;

use super::{canonical_sign, Matrix};
use crate::math;
use crate::{Error, Result};

/// Sweep cap for the cyclic Jacobi eigensolver.
pub const EIG_MAX_SWEEPS: usize = 64;

/// `A = V diag(λ) Vᵀ` with eigenvalues sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomp {
    /// Orthonormal eigenvectors, one per column.
    pub eigvecs: Matrix,
    pub eigvals: Vec<f64>,
}

impl SpectralDecomp {
    pub fn reconstruct(&self) -> Matrix {
        self.eigvecs
            .scale_columns(&self.eigvals)
            .matmul_t(&self.eigvecs)
            .expect("square factors")
    }

    pub fn min_eigval(&self) -> f64 {
        self.eigvals.last().copied().unwrap_or(0.0)
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps run in row-cyclic order until the off-diagonal Frobenius mass drops
/// below `1e-12 ‖A‖_F`. Each eigenvector is signed so that its
/// largest-magnitude entry is positive, so identical inputs give identical
/// bits.
pub fn sym_eig(a: &Matrix) -> Result<SpectralDecomp> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("eigendecomposition needs a square matrix"));
    }
    let n = a.rows();
    let norm = a.frobenius();
    let asym = a.asymmetry().unwrap_or(0.0);
    if asym > 1e-10 * (1.0 + norm) {
        return Err(Error::NonSymmetric { asymmetry: asym });
    }

    let mut w = Matrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let mut v = Matrix::identity(n);
    let threshold = 1e-12 * norm;

    let mut converged = false;
    for _ in 0..EIG_MAX_SWEEPS {
        if off_diagonal(&w) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut w, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal(&w) > threshold {
        return Err(Error::NoConvergence { sweeps: EIG_MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable sort: equal eigenvalues keep their index order
    order.sort_by(|&i, &j| w[(j, j)].total_cmp(&w[(i, i)]));

    let eigvals = order.iter().map(|&i| w[(i, i)]).collect();
    let mut eigvecs = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = v.column(src);
        let s = canonical_sign(&col);
        for i in 0..n {
            eigvecs[(i, dst)] = s * col[i];
        }
    }
    Ok(SpectralDecomp { eigvecs, eigvals })
}

fn off_diagonal(w: &Matrix) -> f64 {
    let n = w.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += w[(i, j)] * w[(i, j)];
            }
        }
    }
    math::sqrt(s)
}

/// Annihilates `w[p][q]` with one plane rotation and accumulates it into `v`.
fn rotate(w: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = w[(p, q)];
    if apq == 0.0 {
        return;
    }
    let n = w.rows();
    let theta = (w[(q, q)] - w[(p, p)]) / (2.0 * apq);
    let t = {
        let t = 1.0 / (math::abs(theta) + math::hypot(theta, 1.0));
        if theta < 0.0 {
            -t
        } else {
            t
        }
    };
    let c = 1.0 / math::hypot(t, 1.0);
    let s = t * c;

    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = w[(k, p)];
        let akq = w[(k, q)];
        let new_p = c * akp - s * akq;
        let new_q = s * akp + c * akq;
        w[(k, p)] = new_p;
        w[(p, k)] = new_p;
        w[(k, q)] = new_q;
        w[(q, k)] = new_q;
    }
    w[(p, p)] -= t * apq;
    w[(q, q)] += t * apq;
    w[(p, q)] = 0.0;
    w[(q, p)] = 0.0;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_has_unit_spectrum() {
        let d = sym_eig(&Matrix::identity(3)).unwrap();
        assert_eq!(d.eigvals, alloc::vec![1.0, 1.0, 1.0]);
        assert_eq!(d.eigvecs, Matrix::identity(3));
    }

    #[test]
    fn diagonal_input_is_sorted_with_signed_permutation() {
        let d = sym_eig(&Matrix::diag(&[1.0, 3.0, 2.0])).unwrap();
        assert_eq!(d.eigvals, alloc::vec![3.0, 2.0, 1.0]);
        let expected = Matrix::from_rows(&[&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        assert_eq!(d.eigvecs, expected);
    }

    #[test]
    fn two_by_two_closed_form() {
        let a = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let d = sym_eig(&a).unwrap();
        assert_abs_diff_eq!(d.eigvals[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.eigvals[1], 1.0, epsilon = 1e-14);
        let h = core::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(d.eigvecs[(0, 0)], h, epsilon = 1e-14);
        assert_abs_diff_eq!(d.eigvecs[(1, 0)], h, epsilon = 1e-14);
    }

    #[test]
    fn rejects_asymmetric_and_rectangular() {
        let a = Matrix::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(matches!(sym_eig(&a), Err(Error::NonSymmetric { .. })));
        assert!(matches!(sym_eig(&Matrix::zeros(2, 3)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn zero_matrix() {
        let d = sym_eig(&Matrix::zeros(3, 3)).unwrap();
        assert_eq!(d.eigvals, alloc::vec![0.0; 3]);
    }
}
