//! Dense linear algebra used by the rest of the crate: a row-major matrix,
//! cyclic Jacobi for symmetric eigenproblems, one-sided Jacobi SVD and the
//! singular-value shrinkage operator.

mod eig;
mod matrix;
mod svd;
mod svt;

pub use eig::{sym_eig, SpectralDecomp, EIG_MAX_SWEEPS};
pub use matrix::Matrix;
pub use svd::{singular_values, svd_compact, SvdDecomp, RANK_CUTOFF, SVD_MAX_SWEEPS};
pub use svt::{svt, svt_truncated};
pub(crate) use matrix::dot;

use crate::math;

/// Sign convention shared by eigen and singular vectors: flip `v` so that its
/// largest-magnitude entry is positive (first index wins ties).
pub(crate) fn canonical_sign(v: &[f64]) -> f64 {
    let mut best = 0usize;
    let mut best_abs = -1.0;
    for (i, &x) in v.iter().enumerate() {
        let a = math::abs(x);
        if a > best_abs {
            best_abs = a;
            best = i;
        }
    }
    if v.is_empty() || v[best] >= 0.0 {
        1.0
    } else {
        -1.0
    }
}
