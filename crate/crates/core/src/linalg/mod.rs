//! Dense real and complex matrices plus the handful of factorizations the
//! solvers need: pivoted LU, Kronecker products, column-stacking `vec`, and
//! eigenvalues through Hessenberg reduction and Francis double-shift QR.

mod complex;
mod eigen;
mod lu;
mod matrix;

pub use complex::CMatrix;
pub use eigen::eigvals;
pub use lu::{Lu, DEFAULT_PIVOT_TOL};
pub use matrix::{kron, unvec, vec, Matrix};
