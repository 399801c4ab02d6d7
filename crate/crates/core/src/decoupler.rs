//! Block decoupling of a right matrix fraction description
//! `H(λ) = N(λ) D(λ)^{-1}` by state feedback in block controller form.
//!
//! With `N(λ) = N_k Ñ(λ)` and `Ñ` monic, the desired denominator is
//! `D_d(λ) = N_k^{-1} (λI - J_1)...(λI - J_{l-k}) N_k Ñ(λ)`, so that
//! `N(λ) D_d(λ)^{-1} N_k^{-1} = (λI - J_{l-k})^{-1} ... (λI - J_1)^{-1}`,
//! which is diagonal for diagonal `J_i`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Matrix};
use crate::pipeline::{full_factorize, PipelineConfig};
use crate::poly::{MatrixPolynomial, SpectralFactorChain};

/// `H(λ) = N(λ) D(λ)^{-1}` with monic `D` of degree `l` and `N` of degree
/// `k < l`, both stored leading coefficient first.
#[derive(Debug, Clone, PartialEq)]
pub struct MfdSystem {
    numerator: MatrixPolynomial,
    denominator: MatrixPolynomial,
}

impl MfdSystem {
    pub fn new(numerator: MatrixPolynomial, denominator: MatrixPolynomial) -> Result<Self> {
        let numerator = numerator.trimmed();
        denominator.require_monic()?;
        if numerator.order() != denominator.order() {
            return Err(Error::InvalidInput(format!(
                "numerator order {} differs from denominator order {}",
                numerator.order(),
                denominator.order()
            )));
        }
        if numerator.degree() >= denominator.degree() {
            return Err(Error::InvalidInput(format!(
                "numerator degree {} must be below denominator degree {}",
                numerator.degree(),
                denominator.degree()
            )));
        }
        Ok(Self {
            numerator,
            denominator,
        })
    }

    pub fn numerator(&self) -> &MatrixPolynomial {
        &self.numerator
    }

    pub fn denominator(&self) -> &MatrixPolynomial {
        &self.denominator
    }

    pub fn order(&self) -> usize {
        self.denominator.order()
    }

    /// `N_i`, the coefficient of `λ^i` (zero above the numerator degree).
    pub fn numerator_ascending(&self, i: usize) -> Matrix {
        let k = self.numerator.degree();
        if i <= k {
            self.numerator.coeff(k - i).clone()
        } else {
            Matrix::zeros(self.order(), self.order())
        }
    }

    /// `D_i`, the coefficient of `λ^i`.
    pub fn denominator_ascending(&self, i: usize) -> &Matrix {
        self.denominator.coeff(self.denominator.degree() - i)
    }

    /// `N(λ) D(λ)^{-1}` at a scalar point.
    pub fn transfer(&self, lambda: Complex64) -> Result<CMatrix> {
        let d = self
            .denominator
            .eval_scalar(lambda)
            .inverse()
            .map_err(|_| Error::SingularAtLambda { re: lambda.re, im: lambda.im })?;
        Ok(&self.numerator.eval_scalar(lambda) * &d)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecouplingResult {
    /// Input transform `F = N_k^{-1}`.
    pub f: Matrix,
    /// Block zeros of the normalized numerator, rightmost first.
    pub numerator_chain: Option<SpectralFactorChain>,
    /// Factors of `D_d`, rightmost first: the numerator zeros followed by
    /// `N_k^{-1} J_i N_k` for `i = l-k, ..., 1`.
    pub desired_chain: SpectralFactorChain,
    pub dd: MatrixPolynomial,
    /// `K_{c0}, ..., K_{c,l-1}` with `K_{ci} = D_{di} - D_i`.
    pub kc_blocks: Vec<Matrix>,
    pub j_blocks: Vec<Matrix>,
    pub warnings: Vec<String>,
}

impl DecouplingResult {
    /// `D_{di}`, the coefficient of `λ^i` in the desired denominator.
    pub fn dd_ascending(&self, i: usize) -> &Matrix {
        self.dd.coeff(self.dd.degree() - i)
    }

    /// The gain row `[K_{c0}, ..., K_{c,l-1}]` as one `m x lm` matrix.
    pub fn kc(&self) -> Matrix {
        let m = self.f.rows();
        let mut k = Matrix::zeros(m, m * self.kc_blocks.len());
        for (i, b) in self.kc_blocks.iter().enumerate() {
            k.set_block(0, i * m, b);
        }
        k
    }

    /// Gain `K = K_c T_c` in the coordinates of a plant related to the
    /// controller form by `x_c = T_c x`.
    pub fn gain_in_original_basis(&self, tc: &Matrix) -> Result<Matrix> {
        let kc = self.kc();
        if tc.rows() != kc.cols() {
            return Err(Error::DimensionMismatch {
                expected: (kc.cols(), tc.cols()),
                found: tc.shape(),
            });
        }
        Ok(&kc * tc)
    }
}

/// Designs `F` and `K_c` so that the closed loop becomes
/// `(λI - J_{l-k})^{-1} ... (λI - J_1)^{-1}`.
pub fn design_decoupling(
    sys: &MfdSystem,
    modes: &[Matrix],
    cfg: &PipelineConfig,
) -> Result<DecouplingResult> {
    let (m, l, k) = (sys.order(), sys.denominator.degree(), sys.numerator.degree());
    if modes.len() != l - k {
        return Err(Error::InvalidInput(format!(
            "{} mode blocks supplied, {} required",
            modes.len(),
            l - k
        )));
    }
    let mut warnings = Vec::new();
    for (i, j) in modes.iter().enumerate() {
        if j.shape() != (m, m) || !j.is_diagonal() {
            return Err(Error::InvalidInput(format!("mode block {} must be a diagonal {m}x{m} matrix", i + 1)));
        }
        if j.diagonal().iter().any(|v| *v >= 0.0) {
            let msg = format!("mode block {} has a non-negative entry {:?}", i + 1, j.diagonal());
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    let nk = sys.numerator.leading();
    let f = nk.inverse().map_err(|_| Error::SingularLeadingCoefficient)?;
    let mut normalized: Vec<Matrix> = sys.numerator.coeffs().iter().map(|c| &f * c).collect();
    normalized[0] = Matrix::identity(m);
    let normalized = MatrixPolynomial::new(normalized)?;

    let numerator_chain = if k == 0 {
        None
    } else {
        let fact = full_factorize(&normalized, cfg)
            .map_err(|e| Error::NumeratorFactorizationFailed(Box::new(e)))?;
        warnings.extend(fact.warnings);
        Some(fact.chain)
    };

    let mut desired: Vec<Matrix> = numerator_chain
        .as_ref()
        .map(|c| c.factors().to_vec())
        .unwrap_or_default();
    for j in modes.iter().rev() {
        desired.push(f.matmul(&(j * nk)));
    }
    let desired_chain = SpectralFactorChain::new(desired)?;
    let dd = desired_chain.reconstruct();
    let kc_blocks = (0..l)
        .map(|i| dd.coeff(l - i) - sys.denominator_ascending(i))
        .collect();
    Ok(DecouplingResult {
        f,
        numerator_chain,
        desired_chain,
        dd,
        kc_blocks,
        j_blocks: modes.to_vec(),
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    /// `N(λ) D_d(λ)^{-1} F`
    pub closed: CMatrix,
    /// `Π (λI - J_i)^{-1}`
    pub target: CMatrix,
}

impl ClosedLoop {
    pub fn deviation(&self) -> f64 {
        (&self.closed - &self.target).frob_norm()
    }
}

pub fn closed_loop_eval(sys: &MfdSystem, res: &DecouplingResult, lambda: Complex64) -> Result<ClosedLoop> {
    let singular = || Error::SingularAtLambda { re: lambda.re, im: lambda.im };
    let dd_inv = res.dd.eval_scalar(lambda).inverse().map_err(|_| singular())?;
    let closed = &(&sys.numerator.eval_scalar(lambda) * &dd_inv) * &CMatrix::from_real(&res.f);
    let m = sys.order();
    let mut target = CMatrix::identity(m);
    for j in &res.j_blocks {
        for (i, v) in j.diagonal().iter().enumerate() {
            let d = lambda - v;
            if d.norm() == 0.0 {
                return Err(singular());
            }
            target[(i, i)] /= d;
        }
    }
    Ok(ClosedLoop { closed, target })
}

/// Block controller realization `(A_c, B_c, C_c)` of `N(λ) D(λ)^{-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerForm {
    pub a: Matrix,
    pub b: Matrix,
    pub c: Matrix,
}

impl ControllerForm {
    /// `C (λI - A)^{-1} B`.
    pub fn transfer(&self, lambda: Complex64) -> Result<CMatrix> {
        let n = self.a.rows();
        let shifted = &CMatrix::identity(n).scale(lambda) - &CMatrix::from_real(&self.a);
        let inv = shifted
            .inverse()
            .map_err(|_| Error::SingularAtLambda { re: lambda.re, im: lambda.im })?;
        Ok(&(&CMatrix::from_real(&self.c) * &inv) * &CMatrix::from_real(&self.b))
    }

    /// `A_c - B_c K_c`.
    pub fn closed_loop_matrix(&self, kc: &Matrix) -> Matrix {
        &self.a - &(&self.b * kc)
    }
}

pub fn controller_form(sys: &MfdSystem) -> Result<ControllerForm> {
    let (m, l) = (sys.order(), sys.denominator.degree());
    let a = sys.denominator.companion_right()?;
    let mut b = Matrix::zeros(m * l, m);
    b.set_block((l - 1) * m, 0, &Matrix::identity(m));
    let mut c = Matrix::zeros(m, m * l);
    for i in 0..l {
        c.set_block(0, i * m, &sys.numerator_ascending(i));
    }
    Ok(ControllerForm { a, b, c })
}
