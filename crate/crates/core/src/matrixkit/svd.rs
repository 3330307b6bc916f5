use alloc::vec;
use alloc::vec::Vec;

use super::matrix::dot;
use super::{canonical_sign, Matrix};
use crate::math;
use crate::{Error, Result};

/// Sweep cap for the one-sided Jacobi SVD.
pub const SVD_MAX_SWEEPS: usize = 64;

/// Singular values at or below `RANK_CUTOFF * σ_max` are dropped from the
/// compact decomposition.
pub const RANK_CUTOFF: f64 = 1e-10;

/// Compact SVD `A = left · diag(singulars) · rightᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdDecomp {
    pub left: Matrix,
    /// Descending, strictly positive.
    pub singulars: Vec<f64>,
    pub right: Matrix,
}

impl SvdDecomp {
    pub fn rank(&self) -> usize {
        self.singulars.len()
    }

    pub fn reconstruct(&self) -> Matrix {
        self.left
            .scale_columns(&self.singulars)
            .matmul_t(&self.right)
            .expect("compatible factors")
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.singulars.iter().sum()
    }
}

/// Full one-sided Jacobi result: all `min(m, n)` singular values, unsorted.
struct RawSvd {
    /// Orthogonalized columns (`A V`), one `Vec` per column.
    columns: Vec<Vec<f64>>,
    right: Matrix,
}

/// One-sided (Hestenes) Jacobi on the columns of a tall matrix.
fn one_sided_jacobi(tall: &Matrix) -> Result<RawSvd> {
    let (m, n) = tall.shape();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| tall.column(j)).collect();
    let mut v = Matrix::identity(n);
    let tol = (m.max(1) as f64) * f64::EPSILON;

    for _ in 0..SVD_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if alpha == 0.0 || beta == 0.0 || math::abs(gamma) <= tol * math::sqrt(alpha * beta)
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = {
                    let t = 1.0 / (math::abs(zeta) + math::hypot(zeta, 1.0));
                    if zeta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / math::hypot(t, 1.0);
                let s = c * t;
                let (head, tail) = cols.split_at_mut(q);
                for (xp, xq) in head[p].iter_mut().zip(tail[0].iter_mut()) {
                    let a = *xp;
                    let b = *xq;
                    *xp = c * a - s * b;
                    *xq = s * a + c * b;
                }
                for k in 0..n {
                    let a = v[(k, p)];
                    let b = v[(k, q)];
                    v[(k, p)] = c * a - s * b;
                    v[(k, q)] = s * a + c * b;
                }
            }
        }
        if !rotated {
            return Ok(RawSvd { columns: cols, right: v });
        }
    }
    Err(Error::NoConvergence { sweeps: SVD_MAX_SWEEPS })
}

/// All `min(m, n)` singular values of `a`, descending, including zeros.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    let tall = if a.rows() >= a.cols() { a.clone() } else { a.transpose() };
    let raw = one_sided_jacobi(&tall)?;
    let mut s: Vec<f64> = raw.columns.iter().map(|c| math::sqrt(dot(c, c))).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    Ok(s)
}

/// Compact SVD by one-sided Jacobi on the taller orientation of `a`.
///
/// The numerical rank is the number of singular values above
/// `RANK_CUTOFF * σ_max`; a zero matrix yields rank 0 and empty factors.
/// Each pair of singular vectors is signed so that the left vector's
/// largest-magnitude entry is positive.
pub fn svd_compact(a: &Matrix) -> Result<SvdDecomp> {
    let transposed = a.rows() < a.cols();
    let tall = if transposed { a.transpose() } else { a.clone() };
    let raw = one_sided_jacobi(&tall)?;
    let (m, n) = tall.shape();

    let norms: Vec<f64> = raw.columns.iter().map(|c| math::sqrt(dot(c, c))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let sigma_max = order.first().map_or(0.0, |&i| norms[i]);
    let rank = order.iter().take_while(|&&i| norms[i] > RANK_CUTOFF * sigma_max).count();

    // u_j = (A v_j) / σ_j lives in the tall space, v_j in the short one
    let mut tall_vecs = Matrix::zeros(m, rank);
    let mut short_vecs = Matrix::zeros(n, rank);
    let mut singulars = vec![0.0; rank];
    for (dst, &src) in order.iter().take(rank).enumerate() {
        let sigma = norms[src];
        singulars[dst] = sigma;
        for i in 0..m {
            tall_vecs[(i, dst)] = raw.columns[src][i] / sigma;
        }
        for i in 0..n {
            short_vecs[(i, dst)] = raw.right[(i, src)];
        }
    }

    let (mut left, mut right) =
        if transposed { (short_vecs, tall_vecs) } else { (tall_vecs, short_vecs) };
    for j in 0..rank {
        if canonical_sign(&left.column(j)) < 0.0 {
            for i in 0..left.rows() {
                left[(i, j)] = -left[(i, j)];
            }
            for i in 0..right.rows() {
                right[(i, j)] = -right[(i, j)];
            }
        }
    }
    Ok(SvdDecomp { left, singulars, right })
}
