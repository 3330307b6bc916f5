use super::{svd_compact, Matrix};
use crate::{Error, Result};

/// Singular-value shrinkage-thresholding `S_α(A) = W (Σ − αI)₊ Yᵀ`.
pub fn svt(a: &Matrix, alpha: f64) -> Result<Matrix> {
    svt_truncated(a, alpha, usize::MAX)
}

/// `S_α` restricted to the leading `max_rank` singular triplets: singular
/// values past `max_rank` are set to zero before shrinking.
pub fn svt_truncated(a: &Matrix, alpha: f64, max_rank: usize) -> Result<Matrix> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument("shrinkage level must be nonnegative"));
    }
    let d = svd_compact(a)?;
    let shrunk: alloc::vec::Vec<f64> = d
        .singulars
        .iter()
        .enumerate()
        .map(|(i, &s)| if i < max_rank { (s - alpha).max(0.0) } else { 0.0 })
        .collect();
    d.left.scale_columns(&shrunk).matmul_t(&d.right)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let a = Matrix::diag(&[3.0, 1.0]);
        assert_eq!(svt(&a, 1.0).unwrap(), Matrix::diag(&[2.0, 0.0]));
        assert_eq!(svt(&a, 0.0).unwrap(), a);
        assert_eq!(svt(&a, 3.0).unwrap(), Matrix::zeros(2, 2));
        assert_eq!(svt(&a, 7.5).unwrap(), Matrix::zeros(2, 2));
        assert_eq!(svt_truncated(&a, 0.5, 1).unwrap(), Matrix::diag(&[2.5, 0.0]));
        assert!(svt(&a, -1.0).is_err());
    }
}
