//! Closed-form global optima of the dropout objective.
//!
//! With spectrum `s_1 ≥ s_2 ≥ …` of the target and `h_j = s_1 + … + s_j`,
//! the shrinkage level is the largest `ρ ≤ r` with `s_ρ > λ h_ρ / (r + λρ)`.
//! The optimal product keeps the top `ρ` singular directions and shrinks each
//! of their singular values by `α = λ h_ρ / (r + λρ)`; jointly equalizing the
//! balanced factors of that product gives optimal weights.

use alloc::vec::Vec;

use crate::equalize::eqz;
use crate::matrixkit::{svd_compact, sym_eig, Matrix};
use crate::math;
use crate::objective::FactorPair;
use crate::{Error, Result};

/// Eigenvalues in `[-PSD_CLIP * λ_max, 0)` are treated as zero by
/// [`solve_tied`].
pub const PSD_CLIP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrinkLevel {
    /// Number of surviving singular values, `0 ≤ ρ ≤ r`.
    pub rho: usize,
    /// Mean of the top-`ρ` spectrum (0 when `ρ = 0`).
    pub kappa_rho: f64,
    /// Shrinkage threshold `λ ρ κ_ρ / (r + λ ρ)`.
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalOptimum {
    /// Optimal weights; for the tied problem `v` equals `u`.
    pub factors: FactorPair,
    pub level: ShrinkLevel,
    /// `U Vᵀ`.
    pub product: Matrix,
    /// Optimal objective value.
    pub value: f64,
}

#[inline]
fn entry(spectrum: &[f64], j: usize) -> f64 {
    spectrum.get(j).copied().unwrap_or(0.0).max(0.0)
}

/// Shrinkage level for a descending nonnegative spectrum; entries past the
/// end of `spectrum` count as zero.
///
/// The admissible set uses a strict inequality, so a spectrum sitting exactly
/// on the threshold excludes that index.
pub fn shrink_level(spectrum: &[f64], r: usize, lambda: f64) -> ShrinkLevel {
    let mut prefix = 0.0;
    let mut best = ShrinkLevel { rho: 0, kappa_rho: 0.0, alpha: 0.0 };
    for j in 1..=r {
        let s = entry(spectrum, j - 1);
        prefix += s;
        let threshold = lambda * prefix / (r as f64 + lambda * j as f64);
        if s > threshold {
            best = ShrinkLevel { rho: j, kappa_rho: prefix / j as f64, alpha: threshold };
        }
    }
    best
}

/// `g(ρ) = λ h_ρ² / (r + λρ) + Σ_{i>ρ} s_i²` for a given `ρ`.
pub fn value_at_level(spectrum: &[f64], r: usize, lambda: f64, rho: usize) -> f64 {
    let head: f64 = (0..rho).map(|i| entry(spectrum, i)).sum();
    let tail: f64 = (rho..spectrum.len()).map(|i| entry(spectrum, i).powi(2)).sum();
    lambda * head * head / (r as f64 + lambda * rho as f64) + tail
}

/// Optimal objective value `g(ρ)` at the shrinkage level.
pub fn optimal_value(spectrum: &[f64], r: usize, lambda: f64) -> f64 {
    value_at_level(spectrum, r, lambda, shrink_level(spectrum, r, lambda).rho)
}

/// Largest `λ` covered by the no-spurious-minima guarantee for the tied
/// problem: `r s_r / (Σ_{i≤r} s_i − r s_r)`.
///
/// Returns 0 when `s_r = 0` and `+∞` when the top-`r` spectrum is flat.
pub fn strict_saddle_bound(spectrum: &[f64], r: usize) -> f64 {
    if r == 0 {
        return 0.0;
    }
    let sr = entry(spectrum, r - 1);
    if sr == 0.0 {
        return 0.0;
    }
    let top: f64 = (0..r).map(|i| entry(spectrum, i)).sum();
    let denom = top - r as f64 * sr;
    if denom <= 0.0 {
        f64::INFINITY
    } else {
        r as f64 * sr / denom
    }
}

fn check_args(r: usize, lambda: f64) -> Result<()> {
    if r == 0 {
        return Err(Error::InvalidArgument("hidden width must be positive"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument("regularization strength must be finite and nonnegative"));
    }
    Ok(())
}

/// Global optimum of the tied problem `min_U ‖M − UUᵀ‖² + λ Σ ‖u_i‖⁴` for a
/// symmetric positive semidefinite `M`.
pub fn solve_tied(m: &Matrix, r: usize, lambda: f64) -> Result<GlobalOptimum> {
    check_args(r, lambda)?;
    if !m.is_square() {
        return Err(Error::DimensionMismatch("tied target must be square"));
    }
    let eig = sym_eig(m)?;
    let top = eig.eigvals.first().copied().unwrap_or(0.0).max(0.0);
    let min = eig.min_eigval();
    if min < -PSD_CLIP * top {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let spectrum: Vec<f64> = eig.eigvals.iter().map(|&x| x.max(0.0)).collect();
    let level = shrink_level(&spectrum, r, lambda);

    let roots: Vec<f64> =
        spectrum[..level.rho].iter().map(|&s| math::sqrt(s - level.alpha)).collect();
    let balanced = eig.eigvecs.leading_columns(level.rho).scale_columns(&roots).pad_columns(r);
    let q = eqz(&balanced)?.q;
    let u = balanced.matmul(&q)?;
    let product = u.matmul_t(&u)?;
    Ok(GlobalOptimum {
        factors: FactorPair::tied(u)?,
        level,
        product,
        value: optimal_value(&spectrum, r, lambda),
    })
}

/// Global optimum of `min_{U,V} ‖M − UVᵀ‖² + λ Σ ‖u_i‖² ‖v_i‖²`.
///
/// Shrink, re-decompose the shrunk target, split its singular values evenly
/// between the two factors, then rotate both by the equalizer of the first.
pub fn solve_general(m: &Matrix, r: usize, lambda: f64) -> Result<GlobalOptimum> {
    check_args(r, lambda)?;
    let svd = svd_compact(m)?;
    let level = shrink_level(&svd.singulars, r, lambda);

    let shrunk: Vec<f64> = svd.singulars[..level.rho].iter().map(|&s| s - level.alpha).collect();
    let target = svd
        .left
        .leading_columns(level.rho)
        .scale_columns(&shrunk)
        .matmul_t(&svd.right.leading_columns(level.rho))?;

    let inner = svd_compact(&target)?;
    let k = inner.rank().min(r);
    let roots: Vec<f64> = inner.singulars[..k].iter().map(|&s| math::sqrt(s)).collect();
    let u_bal = inner.left.leading_columns(k).scale_columns(&roots).pad_columns(r);
    let v_bal = inner.right.leading_columns(k).scale_columns(&roots).pad_columns(r);
    let q = eqz(&u_bal)?.q;
    let factors = FactorPair::new(u_bal.matmul(&q)?, v_bal.matmul(&q)?)?;
    let product = factors.product();
    Ok(GlobalOptimum { factors, level, product, value: optimal_value(&svd.singulars, r, lambda) })
}
