//! Factorization of monic matrix polynomials (λ-matrices)
//! `A(λ) = Iλ^l + A_1 λ^{l-1} + ... + A_l` into linear spectral factors,
//! computation of right and left solvents, conversions between the two
//! descriptions, and decoupling controller design for matrix fraction
//! descriptions `N(λ) D(λ)^{-1}`.

// Index loops mirror the textbook kernels; negated comparisons make NaN
// fail every tolerance gate.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod decoupler;
pub mod error;
pub mod horner;
pub mod io;
pub mod linalg;
pub mod pipeline;
pub mod poly;
pub mod qd;
pub mod transforms;

pub use error::{Error, Result};
pub use linalg::{CMatrix, Matrix};
pub use poly::{MatrixPolynomial, Side, SolventSet, SpectralFactorChain};
