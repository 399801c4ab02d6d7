//! Iterative extraction of a single right solvent (the rightmost linear
//! factor) of a monic λ-matrix.
//!
//! All solvers share one stopping rule: the step size
//! `δ_k = 100·‖X_{k+1} - X_k‖_F / ‖X_k‖_F` (percent) must fall to `eta`
//! *and* the relative residual `‖A_R(X)‖_F / ‖A_l‖_F` must be below
//! `residual_tol`. A small step with a large residual is reported as
//! [`Error::StagnantWithoutResidual`] instead of being accepted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{kron, unvec, vec, Lu, Matrix};
use crate::poly::MatrixPolynomial;

#[derive(Debug, Clone, PartialEq)]
pub struct IterConfig {
    /// Starting guess; [`default_initial_guess`] when absent.
    pub x0: Option<Matrix>,
    /// Step threshold in percent.
    pub eta: f64,
    pub max_iterations: usize,
    pub residual_tol: f64,
    /// Seed for the jitter of the default guess.
    pub seed: u64,
}

impl Default for IterConfig {
    fn default() -> Self {
        Self {
            x0: None,
            eta: 1e-8,
            max_iterations: 500,
            residual_tol: 1e-8,
            seed: 0,
        }
    }
}

impl IterConfig {
    pub fn starting_at(x0: Matrix) -> Self {
        Self {
            x0: Some(x0),
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if [self.eta, self.residual_tol].iter().any(|v| v.is_nan() || *v <= 0.0) {
            return Err(Error::InvalidInput("eta and residual_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Iterates `X_0, X_1, ...` with their step sizes and residuals.
///
/// `iterates` and `residuals` have one entry per iterate, `deltas` one per
/// step and `ratios` one per pair of consecutive steps (`δ_{k+1} / δ_k`).
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConvergenceTrace {
    pub method: String,
    #[serde(skip)]
    pub iterates: Vec<Matrix>,
    pub deltas: Vec<f64>,
    /// `‖A_R(X_k)‖_F`, absolute.
    pub residuals: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Residual scale `‖A_l‖_F` used for the relative test.
    pub scale: f64,
}

impl ConvergenceTrace {
    pub fn iterations(&self) -> usize {
        self.deltas.len()
    }

    pub fn last(&self) -> Option<&Matrix> {
        self.iterates.last()
    }

    pub fn relative_residuals(&self) -> Vec<f64> {
        self.residuals.iter().map(|r| r / self.scale).collect()
    }
}

/// `(-trace(A_1) / (l·m))·I` plus a deterministic jitter of relative size
/// `1e-3`.
pub fn default_initial_guess(p: &MatrixPolynomial, seed: u64) -> Matrix {
    let (m, l) = (p.order(), p.degree().max(1));
    let c = -p.coeff(1.min(p.degree())).trace() / (l * m) as f64;
    let amp = 1e-3 * c.abs().max(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Matrix::scalar(m, c);
    for v in x.data_mut() {
        *v += amp * rng.gen_range(-1.0..1.0);
    }
    x
}

fn start(p: &MatrixPolynomial, cfg: &IterConfig) -> Result<Matrix> {
    p.require_monic()?;
    cfg.validate()?;
    if p.degree() == 0 {
        return Err(Error::DegreeTooLow { degree: 0 });
    }
    let x0 = cfg
        .x0
        .clone()
        .unwrap_or_else(|| default_initial_guess(p, cfg.seed));
    p.check_square(&x0)?;
    Ok(x0)
}

/// Shared driver: applies `step` until the stopping rule fires.
fn drive(
    p: &MatrixPolynomial,
    cfg: &IterConfig,
    method: &'static str,
    mut step: impl FnMut(usize, &Matrix) -> Result<Matrix>,
) -> Result<(Matrix, ConvergenceTrace)> {
    let mut x = start(p, cfg)?;
    let scale = p.residual_scale();
    let mut trace = ConvergenceTrace {
        method: method.to_string(),
        iterates: vec![x.clone()],
        residuals: vec![p.eval_right(&x).frob_norm()],
        scale,
        ..Default::default()
    };
    for k in 0..cfg.max_iterations {
        let next = step(k, &x)?;
        if !next.is_finite() {
            break;
        }
        let diff = (&next - &x).frob_norm();
        let base = x.frob_norm();
        let delta = if base > 0.0 { 100.0 * diff / base } else { 100.0 * diff };
        let residual = p.eval_right(&next).frob_norm();
        if let Some(prev) = trace.deltas.last() {
            trace.ratios.push(if *prev > 0.0 { delta / prev } else { 0.0 });
        }
        trace.deltas.push(delta);
        trace.residuals.push(residual);
        trace.iterates.push(next.clone());
        x = next;
        if delta <= cfg.eta {
            if residual / scale <= cfg.residual_tol {
                return Ok((x, trace));
            }
            return Err(Error::StagnantWithoutResidual {
                iteration: k + 1,
                residual: residual / scale,
            });
        }
    }
    Err(Error::NoConvergence {
        method,
        iterations: trace.iterations(),
        trace: Box::new(trace),
    })
}

/// `B_0, ..., B_{l-1}` of the right synthetic division by `(λI - X)`, plus
/// the remainder `B_l = A_R(X)`.
fn horner_table(p: &MatrixPolynomial, x: &Matrix) -> (Vec<Matrix>, Matrix) {
    let mut b = vec![p.coeff(0).clone()];
    for a in &p.coeffs()[1..] {
        let next = a + &(b.last().unwrap() * x);
        b.push(next);
    }
    let rem = b.pop().unwrap();
    (b, rem)
}

/// Plain block Horner fixed-point iteration
/// `X_{k+1} = -B_{l-1}(X_k)^{-1} A_l`, which equals
/// `X_k [A_l - A_R(X_k)]^{-1} A_l` whenever `X_k` is invertible.
pub fn horner_iterate(p: &MatrixPolynomial, cfg: &IterConfig) -> Result<(Matrix, ConvergenceTrace)> {
    let a_last = p.trailing().clone();
    drive(p, cfg, "horner", |k, x| {
        let (b, _) = horner_table(p, x);
        let lu = Lu::new(b.last().unwrap()).map_err(|_| Error::SingularStep { iteration: k })?;
        Ok(-lu.solve(&a_last)?)
    })
}

/// Matrix `J` with `vec(dA_R(X; H)) = J vec(H)`:
/// `J = Σ_i Σ_j (X^{l-i-1-j})ᵀ ⊗ A_i X^j`.
pub fn frechet_matrix(p: &MatrixPolynomial, x: &Matrix) -> Result<Matrix> {
    p.check_square(x)?;
    let (m, l) = (p.order(), p.degree());
    let pw = x.powers(l.saturating_sub(1));
    let pw_t: Vec<Matrix> = pw.iter().map(Matrix::transpose).collect();
    let mut j = Matrix::zeros(m * m, m * m);
    for i in 0..l {
        for jj in 0..l - i {
            j += &kron(&pw_t[l - i - 1 - jj], &(p.coeff(i) * &pw[jj]));
        }
    }
    Ok(j)
}

/// Newton's method on `A_R(X) = O`: `X_{k+1} = X_k - unvec(J(X_k)^{-1} vec(A_R(X_k)))`
/// with `A_R` from the Horner table. Converges quadratically near a solvent
/// with nonsingular Fréchet derivative.
pub fn newton_horner(p: &MatrixPolynomial, cfg: &IterConfig) -> Result<(Matrix, ConvergenceTrace)> {
    let m = p.order();
    drive(p, cfg, "newton-horner", |k, x| {
        let (_, r) = horner_table(p, x);
        let j = frechet_matrix(p, x)?;
        let lu = Lu::new(&j).map_err(|_| Error::SingularFrechet { iteration: k })?;
        let step = unvec(&lu.solve(&vec(&r))?, m, m);
        Ok(x - &step)
    })
}

/// The composite update `X_{k+1} = X_k + (X_k - J^{-1}A_R(X_k)) A_l^{-1} A_R(X_k)`,
/// a Horner fixed-point step taken from a Newton-corrected point. Its
/// convergence is linear, like plain Horner.
pub fn newton_horner_composite(
    p: &MatrixPolynomial,
    cfg: &IterConfig,
) -> Result<(Matrix, ConvergenceTrace)> {
    let m = p.order();
    let a_last_inv = Lu::new(p.trailing())
        .and_then(|lu| lu.inverse())
        .map_err(|_| Error::SingularALast)?;
    drive(p, cfg, "newton-horner-composite", |k, x| {
        let (_, r) = horner_table(p, x);
        let j = frechet_matrix(p, x)?;
        let lu = Lu::new(&j).map_err(|_| Error::SingularFrechet { iteration: k })?;
        let newton = unvec(&lu.solve(&vec(&r))?, m, m);
        Ok(x + &(&(&(x - &newton) * &a_last_inv) * &r))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TwoStageVariant {
    /// Second synthetic division `C_k = B_k + C_{k-1} X`.
    QChain,
    /// `Δ(X) = l X^{l-1} + (l-1) A_1 X^{l-2} + ... + A_{l-1}`.
    DeltaForm,
}

/// Two-stage block Horner: `X_{k+1} = X_k - A_R(X_k) C(X_k)^{-1}`, with
/// `C` from a second synthetic division or the explicit `Δ` form. The two
/// forms are algebraically identical.
pub fn two_stage(
    p: &MatrixPolynomial,
    cfg: &IterConfig,
    variant: TwoStageVariant,
) -> Result<(Matrix, ConvergenceTrace)> {
    let l = p.degree();
    let method = match variant {
        TwoStageVariant::QChain => "two-stage",
        TwoStageVariant::DeltaForm => "two-stage-delta",
    };
    drive(p, cfg, method, |k, x| {
        let (b, r) = horner_table(p, x);
        let c = match variant {
            TwoStageVariant::QChain => {
                let mut c = b[0].clone();
                for bk in &b[1..] {
                    c = bk + &(&c * x);
                }
                c
            }
            TwoStageVariant::DeltaForm => {
                let pw = x.powers(l - 1);
                (0..l).fold(Matrix::zeros(x.rows(), x.rows()), |acc, i| {
                    &acc + &(p.coeff(i) * &pw[l - 1 - i]).scale((l - i) as f64)
                })
            }
        };
        let step = c
            .solve_right(&r)
            .map_err(|_| Error::SingularStep { iteration: k })?;
        Ok(x - &step)
    })
}

/// Residual sandwich and error-ratio diagnostics for a plain Horner trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    /// `‖A_l^{-1}‖_F`
    pub gamma: f64,
    /// `‖A_l‖_F`
    pub a_last_norm: f64,
    /// `sup ‖X_k‖_F` over the tail
    pub sup_x: f64,
    /// `sup ‖X_k^{-1}‖_F` over the tail
    pub sup_x_inv: f64,
    pub tail_start: usize,
    pub lower: Vec<f64>,
    pub residual: Vec<f64>,
    pub upper: Vec<f64>,
    pub holds: Vec<bool>,
    /// Mean of the last few successive-step ratios.
    pub ratio_trend: f64,
}

impl BoundsReport {
    pub fn sandwich_holds(&self) -> bool {
        self.holds.iter().all(|h| *h)
    }
}

/// Checks `ξ_k / (γ M) ≤ ‖A_R(X_k)‖ ≤ ‖A_l‖ N ξ_k` with `ξ_k = ‖X_{k+1} - X_k‖`
/// over the second half of the trace. Both sides follow from
/// `X_{k+1} - X_k = X_{k+1} A_l^{-1} A_R(X_k)`, so a small rounding slack
/// proportional to `‖X‖` is allowed.
pub fn convergence_bounds_check(p: &MatrixPolynomial, trace: &ConvergenceTrace) -> Result<BoundsReport> {
    const NEEDED: usize = 5;
    let n = trace.iterates.len();
    if n < NEEDED {
        return Err(Error::InsufficientTrace { len: n, needed: NEEDED });
    }
    let a_last = p.trailing();
    let gamma = a_last
        .inverse()
        .map_err(|_| Error::SingularALast)?
        .frob_norm();
    let a_last_norm = a_last.frob_norm();
    let tail_start = n / 2;
    let tail = &trace.iterates[tail_start..];
    let sup_x = tail.iter().map(Matrix::frob_norm).fold(0.0, f64::max);
    let sup_x_inv = tail
        .iter()
        .map(|x| x.inverse().map(|i| i.frob_norm()).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max);
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut residual = Vec::new();
    let mut holds = Vec::new();
    for k in tail_start..n - 1 {
        let xi = (&trace.iterates[k + 1] - &trace.iterates[k]).frob_norm();
        let r = p.eval_right(&trace.iterates[k]).frob_norm();
        let lo = xi / (gamma * sup_x);
        let hi = a_last_norm * sup_x_inv * xi;
        let slack = 1e3 * f64::EPSILON * (sup_x.max(1.0)) * a_last_norm.max(1.0);
        holds.push(lo <= r + slack && r <= hi + slack);
        lower.push(lo);
        upper.push(hi);
        residual.push(r);
    }
    let tail_ratios: Vec<f64> = trace.ratios.iter().rev().take(5).cloned().collect();
    let ratio_trend = if tail_ratios.is_empty() {
        f64::NAN
    } else {
        tail_ratios.iter().sum::<f64>() / tail_ratios.len() as f64
    };
    Ok(BoundsReport {
        gamma,
        a_last_norm,
        sup_x,
        sup_x_inv,
        tail_start,
        lower,
        residual,
        upper,
        holds,
        ratio_trend,
    })
}
