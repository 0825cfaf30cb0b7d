//! Numerical information geometry on finite sample spaces and finite-dimensional
//! matrix algebras.
//!
//! The crate is `no_std` and needs only `alloc`. It covers:
//!
//! - [`spectral`]: Hermitian eigendecomposition, matrix functions and
//!   eigenbasis kernel application (the workhorse of every quantum formula).
//! - [`classical`]: faithful distributions, exponential families, the
//!   Fisher-Rao metric, Massieu/entropy Legendre pair, α-connections,
//!   geodesics and ±1 parallel transports.
//! - [`estimation`]: Fisher information of parametric families, unbiasedness,
//!   the matrix Cramer-Rao bound, max-entropy fitting and seeded sampling.
//! - [`quantum`]: density matrices, GNS and BKM metrics, logarithmic
//!   derivatives, quantum Cramer-Rao bounds and quantum max-entropy.
//! - [`monotonicity`]: stochastic and unital-CP maps and contraction audits.
//! - [`kubo`]: simplex-integrated Kubo n-point functions and the perturbative
//!   expansion of `log Z`.
//! - [`projection`]: the rolling max-entropy projection of exact dynamics.
//!
//! File formats, JSON reports and the command line live in the companion
//! `infogeo` crate.

#![no_std]
// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops mirror the tensor index notation of the formulas.
#![allow(clippy::needless_range_loop)]
// Float math comes from `num_traits::Float` (libm). Whenever std is linked
// into the build graph its inherent float methods take precedence, so those
// imports carry a local `allow(unused_imports)`.

extern crate alloc;

pub mod classical;
pub mod error;
pub mod estimation;
pub mod kubo;
pub mod linalg;
pub mod monotonicity;
pub mod projection;
pub mod quantum;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
