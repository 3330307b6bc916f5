//! Dropout-regularized single-hidden-layer linear networks.
//!
//! Dropout with retain probability `theta` on the hidden layer of `x -> U Vᵀ x`
//! is, in expectation, plain squared loss plus the penalty
//! `lambda * sum_i |u_i|^2 |v_i|^2` with `lambda = (1 - theta) / theta`.
//! This crate evaluates that objective (both by Monte Carlo and in closed
//! form), computes its global optima through singular-value shrinkage and
//! rotation equalizers, simulates dropout SGD, and carries numeric checks for
//! the landscape facts the optima rely on.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, plotting and
//! the command line live in the `eqdrop` crate.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
mod math;

pub mod equalize;
pub mod instances;
pub mod matrixkit;
pub mod objective;
pub mod rng;
pub mod sgd;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use matrixkit::{Matrix, SpectralDecomp, SvdDecomp};
pub use objective::{DropoutConfig, FactorPair};
