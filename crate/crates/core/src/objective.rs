//! The dropout objective and its pieces.
//!
//! For `y = M x` with `E[x xᵀ] = I`, dropping each hidden unit independently
//! with probability `1 − θ` and rescaling by `1/θ` gives
//!
//! ```text
//! E_{b,x} ‖y − (1/θ) U diag(b) Vᵀ x‖²  =  ‖M − U Vᵀ‖_F²  +  λ Σ_i ‖u_i‖² ‖v_i‖²,   λ = (1 − θ)/θ.
//! ```
//!
//! [`mc_objective`] estimates the left side by sampling; [`loss`] and
//! [`regularizer`] evaluate the right side.

use alloc::vec;
use alloc::vec::Vec;

use crate::matrixkit::Matrix;
use crate::math;
use crate::rng;
use crate::{Error, Result};

/// Retain probability `θ` and the induced regularization strength
/// `λ = (1 − θ)/θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropoutConfig {
    theta: f64,
    lambda: f64,
}

impl DropoutConfig {
    pub fn from_theta(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= 1.0) {
            return Err(Error::InvalidArgument("retain probability must lie in (0, 1]"));
        }
        Ok(Self { theta, lambda: (1.0 - theta) / theta })
    }

    /// `θ = 1/(1 + λ)`; the given `λ` is stored as is.
    pub fn from_lambda(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument("regularization strength must be finite and nonnegative"));
        }
        Ok(Self { theta: 1.0 / (1.0 + lambda), lambda })
    }

    #[inline]
    pub fn theta(&self) -> f64 {
        self.theta
    }

    #[inline]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// No units are ever dropped.
    pub fn is_unregularized(&self) -> bool {
        self.theta == 1.0
    }
}

/// Weights of `x -> U Vᵀ x`: `u` is `d1 × r`, `v` is `d2 × r`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    pub u: Matrix,
    pub v: Matrix,
}

impl FactorPair {
    pub fn new(u: Matrix, v: Matrix) -> Result<Self> {
        if u.cols() != v.cols() || u.cols() == 0 {
            return Err(Error::DimensionMismatch("factors need the same positive number of columns"));
        }
        Ok(Self { u, v })
    }

    /// Tied autoencoder weights, `V = U`.
    pub fn tied(u: Matrix) -> Result<Self> {
        Self::new(u.clone(), u)
    }

    /// Hidden width `r`.
    pub fn width(&self) -> usize {
        self.u.cols()
    }

    pub fn product(&self) -> Matrix {
        self.u.matmul_t(&self.v).expect("factor widths agree")
    }

    fn check_target(&self, m: &Matrix) -> Result<()> {
        if m.rows() != self.u.rows() || m.cols() != self.v.rows() {
            return Err(Error::DimensionMismatch("target shape differs from U Vᵀ"));
        }
        Ok(())
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument("regularization strength must be finite and nonnegative"))
    }
}

/// Expected squared loss `‖M − UVᵀ‖_F²`.
pub fn loss(m: &Matrix, f: &FactorPair) -> Result<f64> {
    f.check_target(m)?;
    Ok(m.sub(&f.product())?.frobenius_sq())
}

/// Dropout penalty `λ Σ_i ‖u_i‖² ‖v_i‖²`.
pub fn regularizer(f: &FactorPair, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if f.u.cols() != f.v.cols() {
        return Err(Error::DimensionMismatch("factor widths differ"));
    }
    let nu = f.u.column_norms_sq();
    let nv = f.v.column_norms_sq();
    Ok(lambda * nu.iter().zip(&nv).map(|(a, b)| a * b).sum::<f64>())
}

/// Closed-form dropout objective `loss + regularizer`.
pub fn objective(m: &Matrix, f: &FactorPair, lambda: f64) -> Result<f64> {
    Ok(loss(m, f)? + regularizer(f, lambda)?)
}

/// Tied objective `‖M − UUᵀ‖_F² + λ Σ_i ‖u_i‖⁴`.
pub fn tied_objective(m: &Matrix, u: &Matrix, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if m.rows() != u.rows() || m.cols() != u.rows() {
        return Err(Error::DimensionMismatch("tied target must be d × d with U d × r"));
    }
    let fit = m.sub(&u.matmul_t(u)?)?.frobenius_sq();
    let reg: f64 = u.column_norms_sq().iter().map(|n| n * n).sum();
    Ok(fit + lambda * reg)
}

/// Path regularizer `ψ₂(U, V) = (Σ_{i,j,k} u_{ji}² v_{ki}²)^{1/2}`.
///
/// Evaluated by brute force over all input-to-output paths.
pub fn path_reg(f: &FactorPair) -> f64 {
    let (d1, r) = f.u.shape();
    let d2 = f.v.rows();
    let mut total = 0.0;
    for i in 0..r {
        for j in 0..d1 {
            let uji = f.u[(j, i)];
            for k in 0..d2 {
                let vki = f.v[(k, i)];
                total += uji * uji * vki * vki;
            }
        }
    }
    math::sqrt(total)
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_err: f64,
}

/// Monte Carlo estimate of `E_{b,x} ‖y − (1/θ) U diag(b) Vᵀ x‖²`.
///
/// Sample `i` draws `x ~ N(0, I)` and then the mask `b ~ Bernoulli(θ)^r`
/// from its own stream `(seed, i)`, so the estimate does not depend on how
/// samples are scheduled. With a single sample the standard error is
/// reported as infinite.
pub fn mc_objective(
    m: &Matrix,
    f: &FactorPair,
    cfg: DropoutConfig,
    n_samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    f.check_target(m)?;
    if n_samples == 0 {
        return Err(Error::InvalidArgument("need at least one Monte Carlo sample"));
    }
    let (d1, d2) = m.shape();
    let r = f.width();
    let inv_theta = 1.0 / cfg.theta();
    let mut x = vec![0.0; d2];
    let mut z = vec![0.0; r];

    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n_samples {
        let mut rng = rng::stream(seed, rng::domain::MONTE_CARLO, i);
        rng::fill_normal(&mut rng, &mut x);
        for (k, zk) in z.iter_mut().enumerate() {
            let keep = rng::bernoulli(&mut rng, cfg.theta());
            *zk = if keep {
                let mut s = 0.0;
                for (l, &xl) in x.iter().enumerate() {
                    s += f.v[(l, k)] * xl;
                }
                s * inv_theta
            } else {
                0.0
            };
        }
        let mut value = 0.0;
        for row in 0..d1 {
            let y: f64 = m.row(row).iter().zip(&x).map(|(a, b)| a * b).sum();
            let pred: f64 = f.u.row(row).iter().zip(&z).map(|(a, b)| a * b).sum();
            value += (y - pred) * (y - pred);
        }
        let count = (i + 1) as f64;
        let delta = value - mean;
        mean += delta / count;
        m2 += delta * (value - mean);
    }
    let std_err = if n_samples > 1 {
        math::sqrt(m2 / (n_samples - 1) as f64 / n_samples as f64)
    } else {
        f64::INFINITY
    };
    Ok(McEstimate { mean, std_err })
}

/// Per-unit importance scores and their spread.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceStats {
    /// `α_i = ‖u_i‖ ‖v_i‖`.
    pub scores: Vec<f64>,
    /// Population variance of the scores.
    pub variance: f64,
}

pub fn importance_stats(f: &FactorPair) -> ImportanceStats {
    let nu = f.u.column_norms_sq();
    let nv = f.v.column_norms_sq();
    let scores: Vec<f64> = nu.iter().zip(&nv).map(|(a, b)| math::sqrt(a * b)).collect();
    ImportanceStats { variance: population_variance(&scores), scores }
}

pub(crate) fn population_variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Gradient of the tied objective:
/// `4 (UUᵀ − M) U + 4 λ U diag(UᵀU)`.
pub fn grad_tied(m: &Matrix, u: &Matrix, lambda: f64) -> Result<Matrix> {
    check_lambda(lambda)?;
    if !m.is_square() || m.rows() != u.rows() {
        return Err(Error::DimensionMismatch("tied target must be d × d with U d × r"));
    }
    if !m.is_symmetric() {
        return Err(Error::NonSymmetric { asymmetry: m.asymmetry().unwrap_or(f64::NAN) });
    }
    let residual = u.matmul_t(u)?.sub(m)?;
    let fit = residual.matmul(u)?;
    let shrink = u.scale_columns(&u.column_norms_sq());
    Ok(fit.add(&shrink.scale(lambda))?.scale(4.0))
}

/// Gradient of the untied objective, `(∂f/∂U, ∂f/∂V)`:
/// `2 (UVᵀ − M) V + 2 λ U diag(VᵀV)` and `2 (VUᵀ − Mᵀ) U + 2 λ V diag(UᵀU)`.
pub fn grad_untied(m: &Matrix, f: &FactorPair, lambda: f64) -> Result<(Matrix, Matrix)> {
    check_lambda(lambda)?;
    f.check_target(m)?;
    let residual = f.product().sub(m)?;
    let nu = f.u.column_norms_sq();
    let nv = f.v.column_norms_sq();
    let gu = residual.matmul(&f.v)?.add(&f.u.scale_columns(&nv).scale(lambda))?.scale(2.0);
    let gv = residual.t_matmul(&f.u)?.add(&f.v.scale_columns(&nu).scale(lambda))?.scale(2.0);
    Ok((gu, gv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pair(u: Matrix, v: Matrix) -> FactorPair {
        FactorPair::new(u, v).unwrap()
    }

    #[test]
    fn dropout_config_invariants() {
        let c = DropoutConfig::from_theta(0.5).unwrap();
        assert_eq!(c.lambda(), 1.0);
        let c = DropoutConfig::from_theta(1.0).unwrap();
        assert_eq!(c.lambda(), 0.0);
        assert!(c.is_unregularized());
        let c = DropoutConfig::from_lambda(0.5).unwrap();
        assert_abs_diff_eq!(c.theta(), 2.0 / 3.0, epsilon = 1e-15);
        assert!(DropoutConfig::from_theta(0.0).is_err());
        assert!(DropoutConfig::from_theta(1.5).is_err());
        assert!(DropoutConfig::from_lambda(-0.1).is_err());
    }

    #[test]
    fn loss_examples() {
        let m = Matrix::diag(&[3.0, 1.0]);
        let exact = pair(Matrix::diag(&[3.0, 1.0]), Matrix::identity(2));
        assert_eq!(loss(&m, &exact).unwrap(), 0.0);
        let shrunk = pair(Matrix::diag(&[2.0, 0.0]), Matrix::identity(2));
        assert_eq!(loss(&m, &shrunk).unwrap(), 2.0);
        let zero = pair(Matrix::zeros(2, 2), Matrix::identity(2));
        assert_eq!(loss(&m, &zero).unwrap(), m.frobenius_sq());
        let wrong = pair(Matrix::zeros(3, 2), Matrix::identity(2));
        assert!(matches!(loss(&m, &wrong), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn regularizer_and_path_examples() {
        let f = pair(Matrix::identity(2), Matrix::identity(2));
        assert_eq!(regularizer(&f, 0.0).unwrap(), 0.0);
        assert_eq!(regularizer(&f, 1.0).unwrap(), 2.0);
        assert_abs_diff_eq!(path_reg(&f), 2.0_f64.sqrt(), epsilon = 1e-15);
        let zero = pair(Matrix::zeros(2, 3), Matrix::zeros(4, 3));
        assert_eq!(path_reg(&zero), 0.0);
        assert!(regularizer(&f, -1.0).is_err());
    }

    #[test]
    fn importance_examples() {
        let f = pair(Matrix::diag(&[2.0, 1.0]), Matrix::diag(&[2.0, 1.0]));
        let s = importance_stats(&f);
        assert_eq!(s.scores, vec![4.0, 1.0]);
        assert_abs_diff_eq!(s.variance, 2.25, epsilon = 1e-15);
        let one = pair(Matrix::from_rows(&[&[3.0], &[1.0]]), Matrix::from_rows(&[&[2.0]]));
        assert_eq!(importance_stats(&one).variance, 0.0);
        let eq = pair(Matrix::identity(2), Matrix::identity(2));
        assert_eq!(importance_stats(&eq).variance, 0.0);
    }

    #[test]
    fn scalar_tied_gradient() {
        let g = grad_tied(&Matrix::scalar(2.0), &Matrix::scalar(1.0), 0.0).unwrap();
        assert_eq!(g, Matrix::scalar(-4.0));
        let bad = Matrix::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(matches!(grad_tied(&bad, &Matrix::zeros(2, 1), 0.0), Err(Error::NonSymmetric { .. })));
    }

    #[test]
    fn mc_degenerate_cases() {
        let m = Matrix::from_rows(&[&[1.0, -2.0], &[0.5, 3.0]]);
        let zero_u = pair(Matrix::zeros(2, 1), Matrix::from_rows(&[&[1.0], &[1.0]]));
        let est = mc_objective(&m, &zero_u, DropoutConfig::from_theta(0.5).unwrap(), 20_000, 3).unwrap();
        assert!((est.mean - m.frobenius_sq()).abs() <= 4.0 * est.std_err);
        let once = mc_objective(&m, &zero_u, DropoutConfig::from_theta(0.5).unwrap(), 1, 3).unwrap();
        assert!(once.std_err.is_infinite());
        assert!(mc_objective(&m, &zero_u, DropoutConfig::from_theta(0.5).unwrap(), 0, 3).is_err());
    }
}
