//! Numeric checks of the facts behind the closed-form optima.
//!
//! Every check returns a [`CheckReport`] whose `passed` flag is exactly
//! `max_violation <= tolerance`. All tolerances live in [`Tolerances`].

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::instances;
use crate::matrixkit::{sym_eig, Matrix};
use crate::math;
use crate::objective::{
    grad_tied, loss, mc_objective, regularizer, tied_objective, DropoutConfig, FactorPair,
};
use crate::rng;
use crate::solver::{optimal_value, solve_tied, strict_saddle_bound, value_at_level};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed Monte Carlo deviation in standard errors.
    pub mc_sigmas: f64,
    pub woodbury: f64,
    pub monotone: f64,
    pub rayleigh: f64,
    /// Gradient norm below which a point counts as critical.
    pub critical_grad: f64,
    /// Allowed negative eigenvalue of `M − UUᵀ` at a critical point.
    pub dominance: f64,
    /// Column-norm gap above which a point counts as not equalized.
    pub equalized_gap: f64,
    /// Curvature must be below `-curvature_margin`.
    pub curvature_margin: f64,
    /// Relative agreement of analytic and finite-difference curvature.
    pub curvature_fd: f64,
    /// Step of the central second difference along the rotation curve.
    pub curvature_step: f64,
    /// Relative error of the analytic gradient against finite differences.
    pub gradient_fd: f64,
    pub gradient_step: f64,
    /// Excess of a descent run over the optimal value.
    pub multistart: f64,
}

impl Tolerances {
    pub const DEFAULT: Self = Self {
        mc_sigmas: 4.0,
        woodbury: 1e-12,
        monotone: 1e-12,
        rayleigh: 1e-10,
        critical_grad: 1e-6,
        dominance: 1e-8,
        equalized_gap: 1e-6,
        curvature_margin: 1e-8,
        curvature_fd: 1e-4,
        curvature_step: 1e-3,
        gradient_fd: 1e-5,
        gradient_step: 1e-5,
        multistart: 1e-4,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

const TOL: Tolerances = Tolerances::DEFAULT;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub max_violation: f64,
    pub tolerance: f64,
    pub details: String,
}

impl CheckReport {
    pub fn new(name: &str, max_violation: f64, tolerance: f64, details: String) -> Self {
        Self { name: name.into(), passed: max_violation <= tolerance, max_violation, tolerance, details }
    }
}

fn rng_for(seed: u64, index: u64) -> rand_xoshiro::SplitMix64 {
    rng::stream(seed, rng::domain::VERIFY, index)
}

fn below(rng: &mut impl Rng, lo: usize, hi: usize) -> usize {
    rng.random_range(lo..=hi)
}

/// Closed-form objective against its Monte Carlo estimate on random
/// instances (`d1, d2 ≤ 6`, `r ≤ 4`, `θ` cycling through 0.3, 0.5, 0.9).
///
/// The violation is the largest studentized deviation. With `inject_fault`
/// the closed form is shifted by 1, which must make the check fail.
pub fn check_mc_equivalence(trials: usize, n_samples: u64, seed: u64, inject_fault: bool) -> CheckReport {
    const THETAS: [f64; 3] = [0.3, 0.5, 0.9];
    let mut worst: f64 = 0.0;
    let mut worst_trial = 0;
    for trial in 0..trials {
        let mut g = rng_for(seed, trial as u64);
        let (d1, d2, r) = (below(&mut g, 1, 6), below(&mut g, 1, 6), below(&mut g, 1, 4));
        let m = instances::gaussian(d1, d2, &mut g);
        let u = instances::gaussian(d1, r, &mut g).scale(0.7);
        let v = instances::gaussian(d2, r, &mut g).scale(0.7);
        let f = FactorPair::new(u, v).expect("widths agree");
        let cfg = DropoutConfig::from_theta(THETAS[trial % THETAS.len()]).expect("valid theta");
        let mut closed = closed_form(&m, &f, cfg.lambda());
        if inject_fault {
            closed += 1.0;
        }
        let est = mc_objective(&m, &f, cfg, n_samples, rng::derive_seed(seed, rng::domain::MONTE_CARLO, trial as u64))
            .expect("instance shapes agree");
        let z = studentized(est.mean - closed, est.std_err, closed);
        if z > worst || z.is_nan() {
            worst = z;
            worst_trial = trial;
        }
    }
    CheckReport::new(
        "mc_equivalence",
        worst,
        TOL.mc_sigmas,
        format!("{trials} instances, {n_samples} samples each; worst deviation {worst:.3} standard errors (instance {worst_trial})"),
    )
}

fn closed_form(m: &Matrix, f: &FactorPair, lambda: f64) -> f64 {
    loss(m, f).expect("shapes agree") + regularizer(f, lambda).expect("valid lambda")
}

fn studentized(diff: f64, std_err: f64, scale: f64) -> f64 {
    if std_err > 0.0 {
        math::abs(diff) / std_err
    } else if math::abs(diff) <= 1e-12 * (1.0 + math::abs(scale)) {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `‖(I + (λ/r) 11ᵀ)(I − (λ/(r + λρ)) 11ᵀ) − I‖_F` with `ρ × ρ` blocks.
pub fn woodbury_residual(rho: usize, r: usize, lambda: f64) -> Result<f64> {
    if r == 0 || rho > r {
        return Err(Error::InvalidArgument("need 0 <= rho <= r with r >= 1"));
    }
    let a = lambda / r as f64;
    let b = lambda / (r as f64 + lambda * rho as f64);
    let left = Matrix::from_fn(rho, rho, |i, j| if i == j { 1.0 + a } else { a });
    let right = Matrix::from_fn(rho, rho, |i, j| if i == j { 1.0 - b } else { -b });
    Ok(left.matmul(&right)?.sub(&Matrix::identity(rho))?.frobenius())
}

pub fn check_woodbury(rho: usize, r: usize, lambda: f64) -> Result<CheckReport> {
    let residual = woodbury_residual(rho, r, lambda)?;
    Ok(CheckReport::new(
        "woodbury",
        residual,
        TOL.woodbury,
        format!("rho = {rho}, r = {r}, lambda = {lambda}: residual {residual:.3e}"),
    ))
}

/// Woodbury residual over random `(ρ, r, λ)` with `r ≤ 16`, `λ ∈ [0, 10)`.
pub fn check_woodbury_random(trials: usize, seed: u64) -> CheckReport {
    let mut worst: f64 = 0.0;
    let mut g = rng_for(seed, 0);
    for _ in 0..trials {
        let r = below(&mut g, 1, 16);
        let rho = below(&mut g, 0, r);
        let lambda = rng::uniform(&mut g, 0.0, 10.0);
        worst = worst.max(woodbury_residual(rho, r, lambda).expect("rho <= r"));
    }
    CheckReport::new("woodbury", worst, TOL.woodbury, format!("{trials} random triples; worst residual {worst:.3e}"))
}

/// Largest increase `g(j+1) − g(j)` over `j < r` and all spectra (0 when
/// the sequence never increases).
pub fn monotone_violation(spectra: &[Vec<f64>], r: usize, lambda: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for s in spectra {
        for j in 1..r {
            let step = value_at_level(s, r, lambda, j + 1) - value_at_level(s, r, lambda, j);
            worst = worst.max(step);
        }
    }
    worst
}

pub fn check_monotone_g(spectra: &[Vec<f64>], r: usize, lambda: f64) -> CheckReport {
    let worst = monotone_violation(spectra, r, lambda);
    CheckReport::new(
        "monotone_g",
        worst,
        TOL.monotone,
        format!("{} spectra, r = {r}, lambda = {lambda}: largest increase {worst:.3e}", spectra.len()),
    )
}

/// Monotonicity over random descending spectra of length up to 12 with
/// random `r` and `λ`.
pub fn check_monotone_g_random(trials: usize, seed: u64) -> CheckReport {
    let mut worst: f64 = 0.0;
    let mut g = rng_for(seed, 0);
    for _ in 0..trials {
        let len = below(&mut g, 1, 12);
        let mut s: Vec<f64> = (0..len).map(|_| rng::uniform(&mut g, 0.0, 5.0)).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        let r = below(&mut g, 1, 12);
        let lambda = rng::uniform(&mut g, 0.0, 5.0);
        worst = worst.max(monotone_violation(&[s], r, lambda));
    }
    CheckReport::new("monotone_g", worst, TOL.monotone, format!("{trials} random spectra; largest increase {worst:.3e}"))
}

/// Rayleigh quotient of `G₁ = G − (tr G / r) I` at `w = r^{-1/2} Σ v_i`,
/// the sum of all eigenvectors of `G₁`. Violation combines
/// `|wᵀ G₁ w| / (1 + ‖G‖_F)` and `|‖w‖ − 1|`.
pub fn check_rayleigh(g: &Matrix) -> Result<CheckReport> {
    let r = g.rows();
    if !g.is_square() || r == 0 {
        return Err(Error::DimensionMismatch("Gram matrix must be square and nonempty"));
    }
    let shifted = g.sub(&Matrix::identity(r).scale(g.trace() / r as f64))?;
    let eig = sym_eig(&shifted)?;
    let mut w = vec![0.0; r];
    for j in 0..r {
        for (i, wi) in w.iter_mut().enumerate() {
            *wi += eig.eigvecs[(i, j)];
        }
    }
    let inv = 1.0 / math::sqrt(r as f64);
    w.iter_mut().for_each(|x| *x *= inv);
    let gw = shifted.mul_vec(&w)?;
    let quotient: f64 = w.iter().zip(&gw).map(|(a, b)| a * b).sum();
    let norm = math::sqrt(w.iter().map(|x| x * x).sum());
    let violation = (math::abs(quotient) / (1.0 + g.frobenius())).max(math::abs(norm - 1.0));
    Ok(CheckReport::new(
        "rayleigh",
        violation,
        TOL.rayleigh,
        format!("{r} x {r}: quotient {quotient:.3e}, |w| - 1 = {:.3e}", norm - 1.0),
    ))
}

/// Rayleigh check over random symmetric matrices up to 16 × 16.
pub fn check_rayleigh_random(trials: usize, seed: u64) -> Result<CheckReport> {
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let mut g = rng_for(seed, trial as u64);
        let n = below(&mut g, 1, 16);
        let a = instances::symmetric(n, &mut g);
        worst = worst.max(check_rayleigh(&a)?.max_violation);
    }
    Ok(CheckReport::new("rayleigh", worst, TOL.rayleigh, format!("{trials} random symmetric matrices; worst {worst:.3e}")))
}

fn require_critical(m: &Matrix, u: &Matrix, lambda: f64) -> Result<()> {
    let grad_norm = grad_tied(m, u, lambda)?.frobenius();
    if grad_norm > TOL.critical_grad {
        return Err(Error::NotCritical { grad_norm });
    }
    Ok(())
}

/// At a critical point of the tied objective, `M − UUᵀ` is PSD.
pub fn check_critical_dominance(u: &Matrix, m: &Matrix, lambda: f64) -> Result<CheckReport> {
    require_critical(m, u, lambda)?;
    let gap = m.sub(&u.matmul_t(u)?)?;
    let min = sym_eig(&gap)?.min_eigval();
    Ok(CheckReport::new(
        "critical_dominance",
        (-min).max(0.0),
        TOL.dominance,
        format!("smallest eigenvalue of M - UU^T: {min:.3e}"),
    ))
}

/// Curvature of the tied objective along a rotation of two columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curvature {
    /// Column with the largest norm.
    pub first: usize,
    /// Column with the smallest norm.
    pub second: usize,
    /// `λ (16 p² + 8ab − 4a² − 4b²)` with `a, b` the squared norms and `p`
    /// the inner product of the two columns.
    pub analytic: f64,
    /// Central second difference of the objective along the curve.
    pub numeric: f64,
}

impl Curvature {
    pub fn relative_error(&self) -> f64 {
        if self.analytic == 0.0 {
            math::abs(self.numeric)
        } else {
            math::abs(self.numeric - self.analytic) / math::abs(self.analytic)
        }
    }
}

fn rotate_pair(u: &Matrix, i: usize, j: usize, t: f64) -> Matrix {
    let (s, c) = (math::sin(t), math::cos(t));
    let mut out = u.clone();
    for row in 0..u.rows() {
        let (a, b) = (u[(row, i)], u[(row, j)]);
        out[(row, i)] = c * a + s * b;
        out[(row, j)] = -s * a + c * b;
    }
    out
}

/// Second derivative of `t -> f(U G(t))`, where `G(t)` rotates the largest
/// and smallest columns of `U` into each other. `UUᵀ` is constant along the
/// curve, so only the regularizer contributes.
pub fn saddle_curvature(u: &Matrix, m: &Matrix, lambda: f64) -> Result<Curvature> {
    require_critical(m, u, lambda)?;
    let norms = u.column_norms_sq();
    let (mut first, mut second) = (0, 0);
    for (k, &n) in norms.iter().enumerate() {
        if n > norms[first] {
            first = k;
        }
        if n < norms[second] {
            second = k;
        }
    }
    let gap = math::sqrt(norms[first]) - math::sqrt(norms[second]);
    if gap <= TOL.equalized_gap {
        return Err(Error::AlreadyEqualized { gap });
    }
    let (a, b) = (norms[first], norms[second]);
    let p: f64 = (0..u.rows()).map(|row| u[(row, first)] * u[(row, second)]).sum();
    let analytic = lambda * (16.0 * p * p + 8.0 * a * b - 4.0 * a * a - 4.0 * b * b);

    let h = TOL.curvature_step;
    let f = |t: f64| tied_objective(m, &rotate_pair(u, first, second, t), lambda).expect("shapes agree");
    let numeric = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
    Ok(Curvature { first, second, analytic, numeric })
}

/// A critical, non-equalized point of the tied objective has negative
/// curvature along the column rotation. The violation is the relative
/// finite-difference error when the curvature is negative, and exceeds the
/// tolerance otherwise.
pub fn saddle_probe(u: &Matrix, m: &Matrix, lambda: f64) -> Result<CheckReport> {
    let c = saddle_curvature(u, m, lambda)?;
    Ok(curvature_report("saddle_probe", &c))
}

fn curvature_report(name: &str, c: &Curvature) -> CheckReport {
    let rel = c.relative_error();
    let violation = if c.analytic < -TOL.curvature_margin { rel } else { 1.0 + rel + c.analytic.max(0.0) };
    CheckReport::new(
        name,
        violation,
        TOL.curvature_fd,
        format!(
            "columns {} and {}: analytic curvature {:.9}, finite difference {:.9}",
            c.first, c.second, c.analytic, c.numeric
        ),
    )
}

/// Non-equalized critical point of the tied objective for a PSD `M`: column
/// `k` is `c_k w_{π(k)}` with eigenpairs `(s_i, w_i)` of `M` and
/// `c_k² = s_{π(k)} / (1 + λ)`, or zero. Each column then satisfies
/// `(M − UUᵀ) u_k = λ ‖u_k‖² u_k`.
pub fn column_critical_point(m: &Matrix, lambda: f64, assignment: &[Option<usize>]) -> Result<Matrix> {
    let eig = sym_eig(m)?;
    let mut u = Matrix::zeros(m.rows(), assignment.len());
    for (k, slot) in assignment.iter().enumerate() {
        if let Some(i) = *slot {
            if i >= m.rows() {
                return Err(Error::InvalidArgument("eigen index out of range"));
            }
            let c = math::sqrt(eig.eigvals[i].max(0.0) / (1.0 + lambda));
            let col: Vec<f64> = eig.eigvecs.column(i).iter().map(|x| c * x).collect();
            u.set_column(k, &col);
        }
    }
    Ok(u)
}

/// Saddle probe on random non-equalized critical points.
pub fn check_saddle_family(trials: usize, seed: u64) -> Result<CheckReport> {
    let mut worst: f64 = 0.0;
    let mut most_negative = f64::NEG_INFINITY;
    for trial in 0..trials {
        let mut g = rng_for(seed, trial as u64);
        let d = below(&mut g, 2, 6);
        let r = below(&mut g, 2, d);
        let mut spectrum: Vec<f64> = (0..d).map(|_| rng::uniform(&mut g, 0.5, 4.0)).collect();
        spectrum.sort_by(|a, b| b.total_cmp(a));
        let m = instances::with_eigenvalues(d, &spectrum, &mut g)?;
        let lambda = rng::uniform(&mut g, 0.2, 2.0);
        let nonzero = below(&mut g, 1, r - 1);
        let assignment: Vec<Option<usize>> = (0..r).map(|k| if k < nonzero { Some(k) } else { None }).collect();
        let u = column_critical_point(&m, lambda, &assignment)?;
        let c = saddle_curvature(&u, &m, lambda)?;
        most_negative = most_negative.max(c.analytic);
        worst = worst.max(curvature_report("saddle_family", &c).max_violation);
    }
    Ok(CheckReport::new(
        "saddle_family",
        worst,
        TOL.curvature_fd,
        format!("{trials} constructed critical points; largest curvature {most_negative:.3e}, worst violation {worst:.3e}"),
    ))
}

/// Objective of the scalar tied problem with two hidden units on a square
/// grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeGrid {
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
    /// `values[i * n + j] = f(x_i, x_j)` with `x_k = lo + k (hi − lo)/(n − 1)`.
    pub values: Vec<f64>,
    pub argmin: (usize, usize),
}

impl LandscapeGrid {
    pub fn coord(&self, k: usize) -> f64 {
        self.lo + k as f64 * self.spacing()
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn min(&self) -> f64 {
        self.values[self.argmin.0 * self.n + self.argmin.1]
    }

    pub fn argmin_point(&self) -> (f64, f64) {
        (self.coord(self.argmin.0), self.coord(self.argmin.1))
    }
}

/// `f(u₁, u₂) = (m − u₁² − u₂²)² + λ (u₁⁴ + u₂⁴)` on an `n × n` grid over
/// `[lo, hi]²`. The first minimal cell in row-major order is the argmin.
pub fn landscape_grid(m: f64, lambda: f64, lo: f64, hi: f64, n: usize) -> Result<LandscapeGrid> {
    if n < 2 {
        return Err(Error::InvalidArgument("grid needs at least two points per axis"));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() || !m.is_finite() {
        return Err(Error::InvalidArgument("grid range must be finite with lo < hi"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument("regularization strength must be finite and nonnegative"));
    }
    let mut grid = LandscapeGrid { n, lo, hi, values: Vec::with_capacity(n * n), argmin: (0, 0) };
    let mut best = f64::INFINITY;
    for i in 0..n {
        let a = grid.coord(i);
        for j in 0..n {
            let b = grid.coord(j);
            let (a2, b2) = (a * a, b * b);
            let fit = m - a2 - b2;
            let value = fit * fit + lambda * (a2 * a2 + b2 * b2);
            if value < best {
                best = value;
                grid.argmin = (i, j);
            }
            grid.values.push(value);
        }
    }
    Ok(grid)
}

/// Grid minimum of the scalar landscape against the analytic optimum; the
/// tolerance is one grid spacing.
pub fn check_landscape(m: f64, lambda: f64, n: usize) -> Result<CheckReport> {
    let reach = 1.5 * math::sqrt(math::abs(m)).max(1.0);
    let grid = landscape_grid(m, lambda, -reach, reach, n)?;
    let opt = optimal_value(&[m.max(0.0)], 2, lambda);
    let err = math::abs(grid.min() - opt);
    let (a, b) = grid.argmin_point();
    Ok(CheckReport::new(
        "landscape",
        err,
        grid.spacing(),
        format!("m = {m}, lambda = {lambda}, n = {n}: grid min {:.6} at ({a:.4}, {b:.4}), optimum {opt:.6}", grid.min()),
    ))
}

/// Gradient descent with backtracking on the tied objective. Stops when the
/// gradient norm drops below `grad_tol` or after `max_iter` iterations.
pub fn descend_tied(m: &Matrix, mut u: Matrix, lambda: f64, max_iter: usize, grad_tol: f64) -> Result<(Matrix, f64)> {
    let mut value = tied_objective(m, &u, lambda)?;
    let mut step = 1e-2;
    for _ in 0..max_iter {
        let g = grad_tied(m, &u, lambda)?;
        let gn2 = g.frobenius_sq();
        if math::sqrt(gn2) <= grad_tol {
            break;
        }
        step *= 2.0;
        loop {
            let trial = u.sub(&g.scale(step))?;
            let tv = tied_objective(m, &trial, lambda)?;
            if tv <= value - 0.5 * step * gn2 {
                u = trial;
                value = tv;
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                return Ok((u, value));
            }
        }
    }
    Ok((u, value))
}

/// No spurious local minima when `λ` is below the strict-saddle bound:
/// random PSD targets with `λ` at half the bound (capped at 4), each probed
/// by `starts` descent runs from random initializations.
pub fn check_no_spurious_minima(trials: usize, starts: usize, seed: u64) -> Result<CheckReport> {
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let mut g = rng_for(seed, trial as u64);
        let d = below(&mut g, 2, 5);
        let r = below(&mut g, 1, d);
        let mut spectrum: Vec<f64> = (0..d).map(|_| rng::uniform(&mut g, 0.2, 3.0)).collect();
        spectrum.sort_by(|a, b| b.total_cmp(a));
        let m = instances::with_eigenvalues(d, &spectrum, &mut g)?;
        let lambda = (0.5 * strict_saddle_bound(&spectrum, r)).min(4.0);
        let opt = solve_tied(&m, r, lambda)?.value;
        for _ in 0..starts {
            let u0 = Matrix::from_fn(d, r, |_, _| rng::uniform(&mut g, -1.0, 1.0));
            let (_, value) = descend_tied(&m, u0, lambda, 20_000, 1e-8)?;
            worst = worst.max(value - opt);
        }
    }
    Ok(CheckReport::new(
        "no_spurious_minima",
        worst,
        TOL.multistart,
        format!("{trials} targets x {starts} starts below the strict-saddle bound; worst excess {worst:.3e}"),
    ))
}

/// Largest entrywise error of the tied gradient against central differences,
/// relative to `max(1, |difference quotient|)`.
pub fn gradient_error(m: &Matrix, u: &Matrix, lambda: f64) -> Result<f64> {
    let grad = grad_tied(m, u, lambda)?;
    let h = TOL.gradient_step;
    let mut worst: f64 = 0.0;
    let mut probe = u.clone();
    for i in 0..u.rows() {
        for j in 0..u.cols() {
            let x = u[(i, j)];
            probe[(i, j)] = x + h;
            let up = tied_objective(m, &probe, lambda)?;
            probe[(i, j)] = x - h;
            let down = tied_objective(m, &probe, lambda)?;
            probe[(i, j)] = x;
            let fd = (up - down) / (2.0 * h);
            worst = worst.max(math::abs(grad[(i, j)] - fd) / math::abs(fd).max(1.0));
        }
    }
    Ok(worst)
}

pub fn check_gradient(trials: usize, seed: u64) -> Result<CheckReport> {
    let mut worst: f64 = 0.0;
    for trial in 0..trials {
        let mut g = rng_for(seed, trial as u64);
        let d = below(&mut g, 1, 6);
        let r = below(&mut g, 1, 4);
        let m = instances::symmetric(d, &mut g);
        let u = instances::gaussian(d, r, &mut g);
        let lambda = rng::uniform(&mut g, 0.0, 2.0);
        worst = worst.max(gradient_error(&m, &u, lambda)?);
    }
    Ok(CheckReport::new("gradient", worst, TOL.gradient_fd, format!("{trials} random instances; worst relative error {worst:.3e}")))
}

/// Named checks of the suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Check {
    McEquivalence,
    Woodbury,
    MonotoneG,
    Rayleigh,
    CriticalDominance,
    SaddleProbe,
    SaddleFamily,
    Landscape,
    NoSpuriousMinima,
    Gradient,
}

impl Check {
    pub const ALL: [Check; 10] = [
        Check::McEquivalence,
        Check::Woodbury,
        Check::MonotoneG,
        Check::Rayleigh,
        Check::CriticalDominance,
        Check::SaddleProbe,
        Check::SaddleFamily,
        Check::Landscape,
        Check::NoSpuriousMinima,
        Check::Gradient,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::McEquivalence => "mc_equivalence",
            Check::Woodbury => "woodbury",
            Check::MonotoneG => "monotone_g",
            Check::Rayleigh => "rayleigh",
            Check::CriticalDominance => "critical_dominance",
            Check::SaddleProbe => "saddle_probe",
            Check::SaddleFamily => "saddle_family",
            Check::Landscape => "landscape",
            Check::NoSpuriousMinima => "no_spurious_minima",
            Check::Gradient => "gradient",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub mc_trials: usize,
    pub mc_samples: u64,
    /// Shift the closed form in the Monte Carlo check by 1.
    pub inject_fault: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { seed: 0, mc_trials: 20, mc_samples: 1_000_000, inject_fault: false }
    }
}

/// Runs one check with its own seed derived from the suite seed. Errors
/// surface as failed reports.
pub fn run_check(check: Check, cfg: &SuiteConfig) -> CheckReport {
    let seed = rng::derive_seed(cfg.seed, rng::domain::VERIFY, check as u64);
    let result = match check {
        Check::McEquivalence => Ok(check_mc_equivalence(cfg.mc_trials, cfg.mc_samples, seed, cfg.inject_fault)),
        Check::Woodbury => Ok(check_woodbury_random(100, seed)),
        Check::MonotoneG => Ok(check_monotone_g_random(100, seed)),
        Check::Rayleigh => check_rayleigh_random(100, seed),
        Check::CriticalDominance => solve_tied(&Matrix::diag(&[3.0, 1.0]), 2, 1.0)
            .and_then(|opt| check_critical_dominance(&opt.factors.u, &Matrix::diag(&[3.0, 1.0]), 1.0)),
        Check::SaddleProbe => {
            let u = Matrix::from_rows(&[&[math::sqrt(1.5), 0.0], &[0.0, 0.0]]);
            saddle_probe(&u, &Matrix::diag(&[3.0, 1.0]), 1.0)
        }
        Check::SaddleFamily => check_saddle_family(20, seed),
        Check::Landscape => check_landscape(2.0, 0.6, 256),
        Check::NoSpuriousMinima => check_no_spurious_minima(10, 50, seed),
        Check::Gradient => check_gradient(50, seed),
    };
    result.unwrap_or_else(|e| {
        let mut report = CheckReport::new(check.name(), f64::INFINITY, 0.0, format!("error: {e}"));
        report.passed = false;
        report
    })
}

/// Runs the given checks in order.
pub fn run_suite(checks: &[Check], cfg: &SuiteConfig) -> Vec<CheckReport> {
    checks.iter().map(|&c| run_check(c, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn woodbury_examples() {
        assert_eq!(woodbury_residual(2, 2, 1.0).unwrap(), 0.0);
        assert_eq!(woodbury_residual(3, 5, 0.0).unwrap(), 0.0);
        assert!(check_woodbury(2, 2, 1.0).unwrap().passed);
        assert!(woodbury_residual(3, 2, 1.0).is_err());
        assert!(check_woodbury_random(100, 1).passed);
    }

    #[test]
    fn monotone_examples() {
        let s = vec![vec![3.0, 1.0]];
        assert_eq!(value_at_level(&s[0], 2, 1.0, 1), 4.0);
        assert_eq!(value_at_level(&s[0], 2, 1.0, 2), 4.0);
        assert!(check_monotone_g(&s, 2, 1.0).passed);
        let flat = [vec![1.0; 4]];
        let g: Vec<f64> = (1..=4).map(|j| value_at_level(&flat[0], 4, 0.5, j)).collect();
        assert!(g.windows(2).all(|w| w[1] < w[0]));
        let single = [vec![2.0, 0.0, 0.0]];
        let g: Vec<f64> = (1..=3).map(|j| value_at_level(&single[0], 3, 0.5, j)).collect();
        assert!(g[1] <= g[0] && g[2] <= g[1]);
        assert!(check_monotone_g_random(100, 2).passed);
    }

    #[test]
    fn rayleigh_examples() {
        assert!(check_rayleigh(&Matrix::diag(&[1.0, -1.0])).unwrap().passed);
        assert!(check_rayleigh(&Matrix::identity(3).scale(2.5)).unwrap().passed);
        let asym = Matrix::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(matches!(check_rayleigh(&asym), Err(Error::NonSymmetric { .. })));
    }

    #[test]
    fn dominance_examples() {
        let m = Matrix::diag(&[3.0, 1.0]);
        let opt = solve_tied(&m, 2, 1.0).unwrap();
        assert!(check_critical_dominance(&opt.factors.u, &m, 1.0).unwrap().passed);
        assert!(check_critical_dominance(&Matrix::zeros(2, 2), &m, 1.0).unwrap().passed);
        let u = Matrix::from_rows(&[&[0.3, 0.1], &[0.2, -0.4]]);
        assert!(matches!(check_critical_dominance(&u, &m, 1.0), Err(Error::NotCritical { .. })));
    }

    #[test]
    fn saddle_probe_example() {
        let m = Matrix::diag(&[3.0, 1.0]);
        let u = Matrix::from_rows(&[&[math::sqrt(1.5), 0.0], &[0.0, 0.0]]);
        let c = saddle_curvature(&u, &m, 1.0).unwrap();
        assert_abs_diff_eq!(c.analytic, -9.0, epsilon = 1e-12);
        assert!(c.relative_error() < 1e-4);
        assert!(saddle_probe(&u, &m, 1.0).unwrap().passed);

        let eq = solve_tied(&m, 2, 1.0).unwrap().factors.u;
        assert!(matches!(saddle_probe(&eq, &m, 1.0), Err(Error::AlreadyEqualized { .. })));
    }

    #[test]
    fn constructed_points_are_critical() {
        let m = Matrix::diag(&[4.0, 2.0, 1.0]);
        let u = column_critical_point(&m, 0.5, &[Some(0), None, Some(2)]).unwrap();
        assert!(grad_tied(&m, &u, 0.5).unwrap().frobenius() < 1e-12);
    }

    #[test]
    fn landscape_examples() {
        let grid = landscape_grid(2.0, 0.0, -2.0, 2.0, 101).unwrap();
        assert_eq!(grid.values.len(), 101 * 101);
        let (a, b) = grid.argmin_point();
        assert!((a * a + b * b - 2.0).abs() < 0.1);
        assert!(grid.min() < 1e-2);
        assert!(landscape_grid(2.0, 0.6, -2.0, 2.0, 1).is_err());
        assert!(check_landscape(2.0, 0.6, 256).unwrap().passed);
    }

    #[test]
    fn fault_injection_fails() {
        assert!(!check_mc_equivalence(3, 20_000, 5, true).passed);
        assert!(check_mc_equivalence(3, 20_000, 5, false).passed);
    }

    #[test]
    fn names_round_trip() {
        for c in Check::ALL {
            assert_eq!(Check::from_name(c.name()), Some(c));
        }
        assert_eq!(Check::from_name("nope"), None);
    }
}
