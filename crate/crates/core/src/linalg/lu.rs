use super::Matrix;
use crate::error::{Error, Result};

/// Pivots smaller than this multiple of `‖A‖_F` count as zero.
pub const DEFAULT_PIVOT_TOL: f64 = 1e-12;

/// LU factorization with partial pivoting, `P A = L U`, stored compactly.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: Matrix,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    /// Factors `a` with the default relative pivot threshold.
    pub fn new(a: &Matrix) -> Result<Self> {
        Self::with_relative_tol(a, DEFAULT_PIVOT_TOL)
    }

    pub fn with_relative_tol(a: &Matrix, rel: f64) -> Result<Self> {
        Self::factor(a, rel * a.frob_norm())
    }

    /// Factors `a`, failing when a pivot magnitude is `<= abs_tol` (or zero).
    pub fn factor(a: &Matrix, abs_tol: f64) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                expected: (a.rows(), a.rows()),
                found: a.shape(),
            });
        }
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let (p, mag) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if mag <= abs_tol || mag == 0.0 || !mag.is_finite() {
                return Err(Error::SingularMatrix {
                    pivot: k,
                    magnitude: mag.max(0.0),
                });
            }
            if p != k {
                for j in 0..n {
                    let t = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = t;
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= f * u;
                    }
                }
            }
        }
        Ok(Self { lu, perm, sign })
    }

    pub fn det(&self) -> f64 {
        (0..self.lu.rows()).fold(self.sign, |d, i| d * self.lu[(i, i)])
    }

    /// Smallest pivot magnitude divided by the largest.
    pub fn pivot_ratio(&self) -> f64 {
        let piv: Vec<f64> = (0..self.lu.rows()).map(|i| self.lu[(i, i)].abs()).collect();
        let max = piv.iter().cloned().fold(0.0, f64::max);
        let min = piv.iter().cloned().fold(f64::INFINITY, f64::min);
        if max == 0.0 {
            0.0
        } else {
            min / max
        }
    }

    pub fn solve(&self, rhs: &Matrix) -> Result<Matrix> {
        let n = self.lu.rows();
        if rhs.rows() != n {
            return Err(Error::DimensionMismatch {
                expected: (n, rhs.cols()),
                found: rhs.shape(),
            });
        }
        let mut x = Matrix::zeros(n, rhs.cols());
        for c in 0..rhs.cols() {
            let mut y: Vec<f64> = self.perm.iter().map(|&p| rhs[(p, c)]).collect();
            for i in 0..n {
                let mut s = y[i];
                for j in 0..i {
                    s -= self.lu[(i, j)] * y[j];
                }
                y[i] = s;
            }
            for i in (0..n).rev() {
                let mut s = y[i];
                for j in i + 1..n {
                    s -= self.lu[(i, j)] * y[j];
                }
                y[i] = s / self.lu[(i, i)];
            }
            for i in 0..n {
                x[(i, c)] = y[i];
            }
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Matrix> {
        self.solve(&Matrix::identity(self.lu.rows()))
    }
}
