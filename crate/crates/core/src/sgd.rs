//! Dropout with stochastic gradient descent.
//!
//! Each step draws `x ~ N(0, I)`, sets `y = M x`, draws a mask
//! `b ~ Bernoulli(θ)^r` and applies
//!
//! ```text
//! U ← U − η ((1/θ) U B Vᵀ x − y) xᵀ V B
//! V ← V − η x ((1/θ) xᵀ V B Uᵀ − yᵀ) U B
//! ```
//!
//! with `B = diag(b)`. In expectation this is a step of size `ηθ/2` on the
//! closed-form objective. Step `t` reads its sample from the stream
//! `(seed, t)`, so a run is reproducible from its seed alone.

use alloc::vec;
use alloc::vec::Vec;

use crate::matrixkit::Matrix;
use crate::objective::{importance_stats, objective, tied_objective, DropoutConfig, FactorPair};
use crate::rng;
use crate::{Error, Result};

/// Maximum number of recorded trace points (plus the final step).
pub const MAX_RECORDS: u64 = 2000;

/// A run stops with [`Error::Diverged`] once the objective exceeds this
/// multiple of its initial value.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    /// Base learning rate `η`.
    pub eta: f64,
    /// Number of updates `T`.
    pub steps: u64,
    pub seed: u64,
    /// Initial entries are uniform in `[-init_scale, init_scale]`.
    pub init_scale: f64,
    /// Retain probability `θ`.
    pub theta: f64,
    /// With `Some(t0)` the rate at step `t` is `η / (1 + t/t0)`.
    pub decay: Option<f64>,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self { eta: 1e-2, steps: 10_000, seed: 0, init_scale: 0.5, theta: 1.0, decay: None }
    }
}

impl SgdConfig {
    /// Defaults with the retain probability matching `λ`.
    pub fn with_lambda(lambda: f64) -> Result<Self> {
        Ok(Self { theta: DropoutConfig::from_lambda(lambda)?.theta(), ..Self::default() })
    }

    pub fn dropout(&self) -> Result<DropoutConfig> {
        DropoutConfig::from_theta(self.theta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be positive"));
        }
        if self.steps == 0 {
            return Err(Error::InvalidArgument("need at least one step"));
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return Err(Error::InvalidArgument("init scale must be positive"));
        }
        if let Some(t0) = self.decay {
            if !(t0 > 0.0) {
                return Err(Error::InvalidArgument("decay horizon must be positive"));
            }
        }
        self.dropout().map(|_| ())
    }

    /// Learning rate used for update `t` (0-based).
    pub fn rate(&self, t: u64) -> f64 {
        match self.decay {
            Some(t0) => self.eta / (1.0 + t as f64 / t0),
            None => self.eta,
        }
    }

    pub fn record_stride(&self) -> u64 {
        (self.steps / MAX_RECORDS).max(1)
    }
}

/// Closed-form objective and importance-score variance along a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainTrace {
    /// Number of updates applied before each record; starts at 0 and ends
    /// at `T`.
    pub steps: Vec<u64>,
    pub objective: Vec<f64>,
    pub importance_variance: Vec<f64>,
    pub record_stride: u64,
}

impl TrainTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.objective.last().copied()
    }

    pub fn final_variance(&self) -> Option<f64> {
        self.importance_variance.last().copied()
    }

    fn push(&mut self, step: u64, value: f64, variance: f64) -> Result<()> {
        let limit = DIVERGENCE_FACTOR * self.objective.first().copied().unwrap_or(value).max(f64::EPSILON);
        if !value.is_finite() || !variance.is_finite() || value > limit {
            return Err(Error::Diverged { step });
        }
        self.steps.push(step);
        self.objective.push(value);
        self.importance_variance.push(variance);
        Ok(())
    }
}

/// Sample `t` of the data stream: `x ~ N(0, I)` and `y = M x`.
pub fn data_oracle(m: &Matrix, seed: u64, t: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = rng::stream(seed, rng::domain::DATA, t);
    let mut x = vec![0.0; m.cols()];
    rng::fill_normal(&mut rng, &mut x);
    let y = m.mul_vec(&x).expect("x has m.cols() entries");
    (x, y)
}

/// Draws sample `t` and its dropout mask into the given buffers.
fn draw_step(m: &Matrix, cfg: &SgdConfig, t: u64, x: &mut [f64], y: &mut [f64], mask: &mut [bool]) {
    let mut rng = rng::stream(cfg.seed, rng::domain::DATA, t);
    rng::fill_normal(&mut rng, x);
    for (i, yi) in y.iter_mut().enumerate() {
        *yi = m.row(i).iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    }
    for b in mask.iter_mut() {
        *b = rng::bernoulli(&mut rng, cfg.theta);
    }
}

fn uniform_init(rows: usize, cols: usize, scale: f64, rng: &mut impl rand::Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng::uniform(rng, -scale, scale))
}

/// Initial weights of an untied run.
pub fn initial_factors(d1: usize, d2: usize, r: usize, cfg: &SgdConfig) -> Result<FactorPair> {
    let mut rng = rng::stream(cfg.seed, rng::domain::INIT, 0);
    let u = uniform_init(d1, r, cfg.init_scale, &mut rng);
    let v = uniform_init(d2, r, cfg.init_scale, &mut rng);
    FactorPair::new(u, v)
}

/// Initial weights of a tied run.
pub fn initial_tied(d: usize, r: usize, cfg: &SgdConfig) -> Matrix {
    let mut rng = rng::stream(cfg.seed, rng::domain::INIT, 0);
    uniform_init(d, r, cfg.init_scale, &mut rng)
}

/// Masked projection `B Wᵀ v`.
fn masked_project(w: &Matrix, v: &[f64], mask: &[bool], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (i, &vi) in v.iter().enumerate() {
        for ((o, &wik), &keep) in out.iter_mut().zip(w.row(i)).zip(mask) {
            if keep {
                *o += wik * vi;
            }
        }
    }
}

/// `e = (1/θ) W z − y`.
fn residual(w: &Matrix, z: &[f64], inv_theta: f64, y: &[f64], e: &mut [f64]) {
    for (i, ei) in e.iter_mut().enumerate() {
        let pred: f64 = w.row(i).iter().zip(z).map(|(a, b)| a * b).sum();
        *ei = inv_theta * pred - y[i];
    }
}

/// `W ← W − η a bᵀ`.
fn rank_one_update(w: &mut Matrix, eta: f64, a: &[f64], b: &[f64]) {
    let cols = w.cols();
    for (row, &ai) in w.as_mut_slice().chunks_mut(cols.max(1)).zip(a) {
        for (wij, &bj) in row.iter_mut().zip(b) {
            *wij -= eta * ai * bj;
        }
    }
}

/// Runs dropout SGD on the untied network `x -> U Vᵀ x` from the seeded
/// initialization.
pub fn dropout_sgd(m: &Matrix, r: usize, cfg: &SgdConfig) -> Result<(FactorPair, TrainTrace)> {
    cfg.validate()?;
    if r == 0 {
        return Err(Error::InvalidArgument("hidden width must be positive"));
    }
    let f = initial_factors(m.rows(), m.cols(), r, cfg)?;
    dropout_sgd_from(m, f, cfg)
}

/// Runs dropout SGD from the given weights.
pub fn dropout_sgd_from(m: &Matrix, f: FactorPair, cfg: &SgdConfig) -> Result<(FactorPair, TrainTrace)> {
    cfg.validate()?;
    let lambda = cfg.dropout()?.lambda();
    let (d1, d2) = m.shape();
    let r = f.width();
    let FactorPair { mut u, mut v } = f;
    if u.rows() != d1 || v.rows() != d2 {
        return Err(Error::DimensionMismatch("target shape differs from U Vᵀ"));
    }
    let inv_theta = 1.0 / cfg.theta;
    let stride = cfg.record_stride();
    let (mut x, mut y, mut mask) = (vec![0.0; d2], vec![0.0; d1], vec![false; r]);
    let (mut bz, mut e, mut c) = (vec![0.0; r], vec![0.0; d1], vec![0.0; r]);

    let mut trace = TrainTrace { record_stride: stride, ..TrainTrace::default() };
    let record = |trace: &mut TrainTrace, step: u64, u: &Matrix, v: &Matrix| -> Result<()> {
        let f = FactorPair::new(u.clone(), v.clone())?;
        trace.push(step, objective(m, &f, lambda)?, importance_stats(&f).variance)
    };
    record(&mut trace, 0, &u, &v)?;
    for t in 0..cfg.steps {
        draw_step(m, cfg, t, &mut x, &mut y, &mut mask);
        masked_project(&v, &x, &mask, &mut bz);
        residual(&u, &bz, inv_theta, &y, &mut e);
        masked_project(&u, &e, &mask, &mut c);
        let eta = cfg.rate(t);
        rank_one_update(&mut u, eta, &e, &bz);
        rank_one_update(&mut v, eta, &x, &c);
        let done = t + 1;
        if done % stride == 0 || done == cfg.steps {
            record(&mut trace, done, &u, &v)?;
        }
    }
    Ok((FactorPair::new(u, v)?, trace))
}

/// Runs dropout SGD on the tied autoencoder `x -> U Uᵀ x`.
///
/// The update is the untied rule with `V = U`, both contributions applied
/// to the single weight matrix; its expectation is a step of size `ηθ/2`
/// on the tied closed-form objective.
pub fn dropout_sgd_tied(m: &Matrix, r: usize, cfg: &SgdConfig) -> Result<(Matrix, TrainTrace)> {
    cfg.validate()?;
    if r == 0 {
        return Err(Error::InvalidArgument("hidden width must be positive"));
    }
    if !m.is_square() {
        return Err(Error::DimensionMismatch("tied target must be square"));
    }
    let eig = crate::matrixkit::sym_eig(m)?;
    let top = eig.eigvals.first().copied().unwrap_or(0.0).max(0.0);
    if eig.min_eigval() < -crate::solver::PSD_CLIP * top {
        return Err(Error::NotPsd { min_eigenvalue: eig.min_eigval() });
    }
    let u = initial_tied(m.rows(), r, cfg);
    dropout_sgd_tied_from(m, u, cfg)
}

/// Tied dropout SGD from the given weights.
pub fn dropout_sgd_tied_from(m: &Matrix, mut u: Matrix, cfg: &SgdConfig) -> Result<(Matrix, TrainTrace)> {
    cfg.validate()?;
    let lambda = cfg.dropout()?.lambda();
    let d = m.rows();
    if !m.is_square() || u.rows() != d || u.cols() == 0 {
        return Err(Error::DimensionMismatch("tied target must be d × d with U d × r"));
    }
    let r = u.cols();
    let inv_theta = 1.0 / cfg.theta;
    let stride = cfg.record_stride();
    let (mut x, mut y, mut mask) = (vec![0.0; d], vec![0.0; d], vec![false; r]);
    let (mut bz, mut e, mut c) = (vec![0.0; r], vec![0.0; d], vec![0.0; r]);

    let mut trace = TrainTrace { record_stride: stride, ..TrainTrace::default() };
    let record = |trace: &mut TrainTrace, step: u64, u: &Matrix| -> Result<()> {
        let variance = importance_stats(&FactorPair::tied(u.clone())?).variance;
        trace.push(step, tied_objective(m, u, lambda)?, variance)
    };
    record(&mut trace, 0, &u)?;
    for t in 0..cfg.steps {
        draw_step(m, cfg, t, &mut x, &mut y, &mut mask);
        masked_project(&u, &x, &mask, &mut bz);
        residual(&u, &bz, inv_theta, &y, &mut e);
        masked_project(&u, &e, &mask, &mut c);
        let eta = cfg.rate(t);
        rank_one_update(&mut u, eta, &e, &bz);
        rank_one_update(&mut u, eta, &x, &c);
        let done = t + 1;
        if done % stride == 0 || done == cfg.steps {
            record(&mut trace, done, &u)?;
        }
    }
    Ok((u, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn oracle_is_deterministic_and_exact() {
        let m = Matrix::from_rows(&[&[1.0, 2.0, 0.5], &[-1.0, 0.0, 3.0]]);
        let (x, y) = data_oracle(&m, 7, 11);
        assert_eq!((x.clone(), y.clone()), data_oracle(&m, 7, 11));
        assert_eq!(y, m.mul_vec(&x).unwrap());
        assert_ne!(x, data_oracle(&m, 7, 12).0);
    }

    #[test]
    fn oracle_second_moment() {
        let m = Matrix::identity(3);
        let n = 100_000;
        let mut acc = [[0.0; 3]; 3];
        for t in 0..n {
            let (x, _) = data_oracle(&m, 3, t);
            for i in 0..3 {
                for j in 0..3 {
                    acc[i][j] += x[i] * x[j];
                }
            }
        }
        for (i, row) in acc.iter().enumerate() {
            for (j, a) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((a / n as f64 - target).abs() < 0.05);
            }
        }
    }

    #[test]
    fn trace_layout() {
        let cfg = SgdConfig { steps: 4001, ..SgdConfig::default() };
        let (_, trace) = dropout_sgd(&Matrix::scalar(2.0), 2, &cfg).unwrap();
        assert_eq!(trace.record_stride, 2);
        assert_eq!(trace.steps[0], 0);
        assert_eq!(*trace.steps.last().unwrap(), 4001);
        assert_eq!(trace.len(), 2002);
        assert_eq!(trace.objective.len(), trace.importance_variance.len());
    }

    #[test]
    fn same_seed_same_trace() {
        let m = Matrix::from_rows(&[&[1.0, 0.5], &[0.0, 2.0], &[1.0, 1.0]]);
        let cfg = SgdConfig { steps: 3000, theta: 0.7, seed: 9, ..SgdConfig::default() };
        assert_eq!(dropout_sgd(&m, 2, &cfg).unwrap(), dropout_sgd(&m, 2, &cfg).unwrap());
    }

    #[test]
    fn divergence_is_reported() {
        let cfg = SgdConfig { eta: 5.0, steps: 1000, ..SgdConfig::default() };
        let err = dropout_sgd(&Matrix::diag(&[3.0, 1.0]), 2, &cfg).unwrap_err();
        assert!(matches!(err, Error::Diverged { .. }));
    }

    #[test]
    fn tied_unregularized_fit() {
        let cfg = SgdConfig { eta: 1e-2, steps: 10_000, theta: 1.0, ..SgdConfig::default() };
        let (u, trace) = dropout_sgd_tied(&Matrix::scalar(2.0), 2, &cfg).unwrap();
        let l = tied_objective(&Matrix::scalar(2.0), &u, 0.0).unwrap();
        assert!(l <= 1e-3, "final loss {l}");
        assert_abs_diff_eq!(trace.final_objective().unwrap(), l, epsilon = 0.0);
    }

    #[test]
    fn tied_rejects_indefinite() {
        let cfg = SgdConfig::default();
        assert!(matches!(
            dropout_sgd_tied(&Matrix::diag(&[1.0, -1.0]), 1, &cfg),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(SgdConfig { eta: 0.0, ..SgdConfig::default() }.validate().is_err());
        assert!(SgdConfig { steps: 0, ..SgdConfig::default() }.validate().is_err());
        assert!(SgdConfig { theta: 0.0, ..SgdConfig::default() }.validate().is_err());
        assert!(SgdConfig { decay: Some(-1.0), ..SgdConfig::default() }.validate().is_err());
        let c = SgdConfig { decay: Some(100.0), ..SgdConfig::default() };
        assert_eq!(c.rate(100), 5e-3);
    }
}
