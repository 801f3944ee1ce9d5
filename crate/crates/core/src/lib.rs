//! Finite-dimensional simulation and verification of random operator
//! semigroups.
//!
//! The crate builds, on dense matrices, every constructive object of the
//! strong-law-of-large-numbers story for products of random semigroups:
//!
//! - [`linalg`]: matrices, matrix exponentials (scaling-and-squaring Pade),
//!   and lp norm machinery (exact for p in {1, 2, inf}, certified lower
//!   bounds otherwise);
//! - [`ensemble`]: random generator models `L = L0 + B` with `E B = 0` and
//!   `|B| <= C`, the constants `(M, beta, C)` and `gamma = max(beta + M C, 1)`,
//!   seeded reproducible sampling, and exact finite-mixture expectations;
//! - [`semigroup`]: triangular products `exp(-L1 t/n) ... exp(-Ln t/n)`,
//!   Chernoff approximants `F(t/n)^n` with `F(t) = E exp(-L t)`, and
//!   sup-over-time convergence experiments;
//! - [`martingale`]: the product-minus-mean decomposition into interleaved
//!   terms, its martingale increments, and numerical audits of every
//!   quantitative bound, plus Burkholder-moment and tail-decay probes;
//! - [`geometry`]: probes of uniform smoothness and the p-smooth inequality
//!   on lp coordinate spaces;
//! - [`depolarize`]: quantum depolarizing channels, random channel
//!   compositions, their closed-form coefficients, and the almost-sure limit
//!   channel.
//!
//! Core linear algebra is generic over [`scalar::Scalar`] (f32, f64, and
//! their complex extensions); the aliases below fix the concrete types used
//! by the experiment modules.

pub mod depolarize;
pub mod ensemble;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod martingale;
pub mod semigroup;
pub mod stats;

mod scalar;
mod seeding;

pub use error::{Error, Result};
pub use scalar::{RealScalar, Scalar, ScalarKind};

pub type Complex64 = num_complex::Complex<f64>;

/// Default working matrix type for all real-valued experiments.
pub type Operator = linalg::Matrix<f64>;
pub type Operator32 = linalg::Matrix<f32>;
pub type ComplexOperator = linalg::Matrix<Complex64>;

pub type RealVector = linalg::Vector<f64>;
pub type ComplexVector = linalg::Vector<Complex64>;
