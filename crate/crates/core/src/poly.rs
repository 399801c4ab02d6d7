//! Monic λ-matrices, spectral factor chains and solvent sets.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigvals, CMatrix, Lu, Matrix};

/// Which side a solvent or evaluation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Right,
    Left,
}

/// `A(λ) = A_0 λ^l + A_1 λ^{l-1} + ... + A_l` with square `m x m`
/// coefficients stored leading coefficient first.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPolynomial {
    coeffs: Vec<Matrix>,
}

impl MatrixPolynomial {
    pub fn new(coeffs: Vec<Matrix>) -> Result<Self> {
        let first = coeffs
            .first()
            .ok_or_else(|| Error::InvalidInput("polynomial needs at least one coefficient".into()))?;
        let m = first.rows();
        for (i, c) in coeffs.iter().enumerate() {
            if c.shape() != (m, m) {
                return Err(Error::InvalidInput(format!(
                    "coefficient {i} has shape {:?}, expected ({m}, {m})",
                    c.shape()
                )));
            }
            if !c.is_finite() {
                return Err(Error::InvalidInput(format!("coefficient {i} is not finite")));
            }
        }
        if m == 0 {
            return Err(Error::InvalidInput("coefficients must be non-empty".into()));
        }
        Ok(Self { coeffs })
    }

    /// Monic polynomial `Iλ^l + tail[0] λ^{l-1} + ... + tail[l-1]`.
    pub fn monic(tail: Vec<Matrix>) -> Result<Self> {
        let m = tail
            .first()
            .map(Matrix::rows)
            .ok_or_else(|| Error::InvalidInput("monic polynomial needs degree >= 1".into()))?;
        let mut coeffs = Vec::with_capacity(tail.len() + 1);
        coeffs.push(Matrix::identity(m));
        coeffs.extend(tail);
        Self::new(coeffs)
    }

    pub fn order(&self) -> usize {
        self.coeffs[0].rows()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Matrix] {
        &self.coeffs
    }

    /// `A_i`, the coefficient of `λ^{l-i}`.
    pub fn coeff(&self, i: usize) -> &Matrix {
        &self.coeffs[i]
    }

    pub fn leading(&self) -> &Matrix {
        &self.coeffs[0]
    }

    /// `A_l`, the constant term.
    pub fn trailing(&self) -> &Matrix {
        &self.coeffs[self.degree()]
    }

    pub fn is_monic(&self) -> bool {
        *self.leading() == Matrix::identity(self.order())
    }

    pub fn require_monic(&self) -> Result<()> {
        if self.is_monic() {
            Ok(())
        } else {
            Err(Error::NotMonic)
        }
    }

    /// Drops exactly-zero leading coefficients (keeping at least one).
    pub fn trimmed(mut self) -> Self {
        while self.coeffs.len() > 1 && self.coeffs[0].max_abs() == 0.0 {
            self.coeffs.remove(0);
        }
        self
    }

    /// `M · A(λ)`.
    pub fn premultiply(&self, m: &Matrix) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| m * c).collect(),
        }
    }

    /// `A(λ) · B(λ)`.
    pub fn mul(&self, rhs: &MatrixPolynomial) -> Self {
        let n = self.order();
        let deg = self.degree() + rhs.degree();
        let mut coeffs = vec![Matrix::zeros(n, n); deg + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += &(a * b);
            }
        }
        Self { coeffs }
    }

    /// Scale used for relative residuals: `‖A_l‖_F`, or 1 if `A_l = O`.
    pub fn residual_scale(&self) -> f64 {
        let s = self.trailing().frob_norm();
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    /// Right evaluation `A_R(X) = A_0 X^l + A_1 X^{l-1} + ... + A_l`.
    pub fn eval_right(&self, x: &Matrix) -> Matrix {
        let mut b = self.coeffs[0].clone();
        for a in &self.coeffs[1..] {
            b = a + &(&b * x);
        }
        b
    }

    /// Left evaluation `A_L(X) = X^l A_0 + X^{l-1} A_1 + ... + A_l`.
    pub fn eval_left(&self, x: &Matrix) -> Matrix {
        let mut b = self.coeffs[0].clone();
        for a in &self.coeffs[1..] {
            b = a + &(x * &b);
        }
        b
    }

    pub fn eval(&self, x: &Matrix, side: Side) -> Matrix {
        match side {
            Side::Right => self.eval_right(x),
            Side::Left => self.eval_left(x),
        }
    }

    /// `‖A_R(X)‖_F / ‖A_l‖_F` (or the left analogue).
    pub fn relative_residual(&self, x: &Matrix, side: Side) -> f64 {
        self.eval(x, side).frob_norm() / self.residual_scale()
    }

    /// `A(λ)` for a scalar `λ`.
    pub fn eval_scalar(&self, lambda: Complex64) -> CMatrix {
        let mut b = CMatrix::from_real(&self.coeffs[0]);
        for a in &self.coeffs[1..] {
            b = &b.scale(lambda) + &CMatrix::from_real(a);
        }
        b
    }

    /// Right synthetic division `A(λ) = Q(λ)(λI - X) + A_R(X)`.
    ///
    /// Returns the quotient `Q(λ) = B_0 λ^{l-1} + ... + B_{l-1}` with
    /// `B_0 = A_0`, `B_k = A_k + B_{k-1} X`, and the remainder `B_l`.
    pub fn synthetic_div_right(&self, x: &Matrix) -> Result<(MatrixPolynomial, Matrix)> {
        self.synthetic_div(x, Side::Right)
    }

    /// Left synthetic division `A(λ) = (λI - X) Q(λ) + A_L(X)`.
    pub fn synthetic_div_left(&self, x: &Matrix) -> Result<(MatrixPolynomial, Matrix)> {
        self.synthetic_div(x, Side::Left)
    }

    pub fn synthetic_div(&self, x: &Matrix, side: Side) -> Result<(MatrixPolynomial, Matrix)> {
        if self.degree() == 0 {
            return Err(Error::DegreeTooLow { degree: 0 });
        }
        self.check_square(x)?;
        let mut b = vec![self.coeffs[0].clone()];
        for a in &self.coeffs[1..] {
            let prev = b.last().unwrap();
            let next = match side {
                Side::Right => a + &(prev * x),
                Side::Left => a + &(x * prev),
            };
            b.push(next);
        }
        let rem = b.pop().unwrap();
        Ok((MatrixPolynomial { coeffs: b }, rem))
    }

    pub(crate) fn check_square(&self, x: &Matrix) -> Result<()> {
        let m = self.order();
        if x.shape() != (m, m) {
            return Err(Error::DimensionMismatch {
                expected: (m, m),
                found: x.shape(),
            });
        }
        Ok(())
    }

    fn companion_shell(&self) -> Result<(usize, usize, Matrix)> {
        self.require_monic()?;
        let (m, l) = (self.order(), self.degree());
        if l == 0 {
            return Err(Error::DegreeTooLow { degree: 0 });
        }
        Ok((m, l, Matrix::zeros(m * l, m * l)))
    }

    /// Block companion with identities on the superdiagonal and bottom block
    /// row `[-A_l, -A_{l-1}, ..., -A_1]`.
    pub fn companion_right(&self) -> Result<Matrix> {
        let (m, l, mut c) = self.companion_shell()?;
        let eye = Matrix::identity(m);
        for i in 0..l - 1 {
            c.set_block(i * m, (i + 1) * m, &eye);
        }
        for j in 0..l {
            c.set_block((l - 1) * m, j * m, &-&self.coeffs[l - j]);
        }
        Ok(c)
    }

    /// Block transpose of [`companion_right`](Self::companion_right):
    /// identities on the block subdiagonal and last block column
    /// `[-A_l; -A_{l-1}; ...; -A_1]`.
    pub fn companion_left(&self) -> Result<Matrix> {
        let (m, l, mut c) = self.companion_shell()?;
        let eye = Matrix::identity(m);
        for i in 0..l - 1 {
            c.set_block((i + 1) * m, i * m, &eye);
        }
        for i in 0..l {
            c.set_block(i * m, (l - 1) * m, &-&self.coeffs[l - i]);
        }
        Ok(c)
    }

    /// Companion with first block column `[-A_1; ...; -A_l]` and identities
    /// on the block superdiagonal.
    pub fn companion_c3(&self) -> Result<Matrix> {
        let (m, l, mut c) = self.companion_shell()?;
        let eye = Matrix::identity(m);
        for i in 0..l {
            c.set_block(i * m, 0, &-&self.coeffs[i + 1]);
            if i + 1 < l {
                c.set_block(i * m, (i + 1) * m, &eye);
            }
        }
        Ok(c)
    }

    /// The `l·m` latent roots, i.e. eigenvalues of the block companion.
    pub fn latent_roots(&self) -> Result<Vec<Complex64>> {
        eigvals(&self.companion_right()?)
    }
}

/// Linear factors `(λI - Q_l) ... (λI - Q_2)(λI - Q_1)` stored rightmost
/// first, so `factors[0] = Q_1` is a right solvent of the product and the
/// last entry is a left solvent.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFactorChain {
    factors: Vec<Matrix>,
}

impl SpectralFactorChain {
    pub fn new(factors: Vec<Matrix>) -> Result<Self> {
        let m = factors
            .first()
            .map(Matrix::rows)
            .ok_or_else(|| Error::InvalidInput("chain needs at least one factor".into()))?;
        for (i, q) in factors.iter().enumerate() {
            if q.shape() != (m, m) {
                return Err(Error::InvalidInput(format!(
                    "factor {i} has shape {:?}, expected ({m}, {m})",
                    q.shape()
                )));
            }
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    pub fn into_factors(self) -> Vec<Matrix> {
        self.factors
    }

    pub fn order(&self) -> usize {
        self.factors[0].rows()
    }

    pub fn degree(&self) -> usize {
        self.factors.len()
    }

    pub fn rightmost(&self) -> &Matrix {
        &self.factors[0]
    }

    pub fn leftmost(&self) -> &Matrix {
        self.factors.last().unwrap()
    }

    /// Multiplies the factors back into a monic polynomial.
    pub fn reconstruct(&self) -> MatrixPolynomial {
        let m = self.order();
        let mut coeffs = vec![Matrix::identity(m)];
        for q in &self.factors {
            // (λI - Q) P(λ): c_0 = P_0, c_i = P_i - Q P_{i-1}, c_{d+1} = -Q P_d.
            let mut next = Vec::with_capacity(coeffs.len() + 1);
            next.push(coeffs[0].clone());
            for i in 1..coeffs.len() {
                next.push(&coeffs[i] - &(q * &coeffs[i - 1]));
            }
            next.push(-(q * coeffs.last().unwrap()));
            coeffs = next;
        }
        MatrixPolynomial { coeffs }
    }

    pub fn spectra(&self) -> Result<Vec<Vec<Complex64>>> {
        self.factors.iter().map(eigvals).collect()
    }
}

/// Convenience: reconstruct a monic polynomial from a chain.
pub fn reconstruct(chain: &SpectralFactorChain) -> MatrixPolynomial {
    chain.reconstruct()
}

/// A collection of right or left solvents.
#[derive(Debug, Clone, PartialEq)]
pub struct SolventSet {
    pub side: Side,
    pub solvents: Vec<Matrix>,
}

impl SolventSet {
    pub fn new(side: Side, solvents: Vec<Matrix>) -> Self {
        Self { side, solvents }
    }

    pub fn len(&self) -> usize {
        self.solvents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solvents.is_empty()
    }
}

/// Block Vandermonde matrix. Right: block `(i, j) = R_j^i`. Left: block
/// `(i, j) = L_i^j`.
pub fn block_vandermonde(set: &SolventSet) -> Result<Matrix> {
    let l = set.len();
    let m = set
        .solvents
        .first()
        .map(Matrix::rows)
        .ok_or_else(|| Error::InvalidInput("empty solvent set".into()))?;
    let mut v = Matrix::zeros(l * m, l * m);
    for (k, s) in set.solvents.iter().enumerate() {
        for (p, power) in s.powers(l - 1).iter().enumerate() {
            match set.side {
                Side::Right => v.set_block(p * m, k * m, power),
                Side::Left => v.set_block(k * m, p * m, power),
            }
        }
    }
    Ok(v)
}

/// Greedy nearest-neighbour pairing of two spectra. Returns the largest
/// paired distance relative to `max(1, |b|)`, or infinity if the lengths
/// differ.
pub fn spectrum_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let best = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm() / y.norm().max(1.0)))
            .min_by(|p, q| p.1.partial_cmp(&q.1).unwrap());
        match best {
            Some((j, d)) => {
                used[j] = true;
                worst = worst.max(d);
            }
            None => return f64::INFINITY,
        }
    }
    worst
}

/// Outcome of [`is_complete_set`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletenessReport {
    pub spectrum_union_matches: bool,
    pub pairwise_disjoint: bool,
    pub spectrum_error: f64,
    pub min_separation: f64,
    pub vandermonde_det: f64,
    pub vandermonde_cond: f64,
}

impl CompletenessReport {
    pub fn complete(&self) -> bool {
        self.spectrum_union_matches && self.pairwise_disjoint && self.vandermonde_det != 0.0
    }
}

/// Checks that the union of the solvent spectra equals the latent roots,
/// that the individual spectra are disjoint, and reports the conditioning
/// of the block Vandermonde matrix.
pub fn is_complete_set(p: &MatrixPolynomial, set: &SolventSet, tol: f64) -> Result<CompletenessReport> {
    let latent = p.latent_roots()?;
    let spectra: Vec<Vec<Complex64>> = set.solvents.iter().map(eigvals).collect::<Result<_>>()?;
    let union: Vec<Complex64> = spectra.iter().flatten().cloned().collect();
    let spectrum_error = spectrum_distance(&union, &latent);
    let mut min_separation = f64::INFINITY;
    for i in 0..spectra.len() {
        for j in i + 1..spectra.len() {
            for a in &spectra[i] {
                for b in &spectra[j] {
                    min_separation = min_separation.min((a - b).norm() / a.norm().max(b.norm()).max(1.0));
                }
            }
        }
    }
    let v = block_vandermonde(set)?;
    let (vandermonde_det, vandermonde_cond) = match Lu::factor(&v, 0.0) {
        Ok(lu) => {
            let cond = lu
                .inverse()
                .map(|inv| v.frob_norm() * inv.frob_norm())
                .unwrap_or(f64::INFINITY);
            (lu.det(), cond)
        }
        Err(_) => (0.0, f64::INFINITY),
    };
    Ok(CompletenessReport {
        spectrum_union_matches: spectrum_error <= tol,
        pairwise_disjoint: min_separation > tol,
        spectrum_error,
        min_separation,
        vandermonde_det,
        vandermonde_cond,
    })
}
