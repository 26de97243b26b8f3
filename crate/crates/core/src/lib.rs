//! Explicit splittings behind the noncommutative Khintchine and Paley
//! inequalities, at finite matrix dimension and finite grid resolution.
//!
//! The crate is organised bottom-up:
//!
//! - [`matrix`]: dense complex matrices and Schatten norms;
//! - [`opfunc`]: operator-valued functions on the dyadic grid and the
//!   discrete circle, with coefficients and partial inner products;
//! - [`seqnorm`]: column, row and splitting norms of operator sequences;
//! - [`factorize`]: pointwise factorization `f = h*·g`;
//! - [`construct`]: module-closed subspaces, projection chains and the three
//!   splitting constructions;
//! - [`harness`]: instance generation, experiment runs and reports.

pub mod construct;
pub mod error;
pub mod factorize;
pub mod harness;
pub mod matrix;
pub mod opfunc;
pub mod sample;
pub mod seqnorm;

pub use error::{Error, Result};
