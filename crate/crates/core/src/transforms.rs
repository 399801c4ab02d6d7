//! Similarity-transform conversions between spectral factor chains, right
//! solvents and left solvents, plus exact deflation.
//!
//! Index convention: for a chain `A(λ) = (λI - Q_l)...(λI - Q_1)` stored
//! rightmost first, the solvent sets produced here are aligned with the
//! chain, so `right[k]` and `left[k]` are similar to `chain[k]`. The
//! inverse conversions expect the same alignment.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{eigvals, kron, unvec, vec, Lu, Matrix};
use crate::poly::{MatrixPolynomial, Side, SolventSet, SpectralFactorChain};

#[derive(Debug, Clone, PartialEq)]
pub struct TransformConfig {
    /// Largest relative residual accepted for inputs that must be solvents
    /// or exact divisors.
    pub gate: f64,
    /// Pivots below `rank_tol·‖T‖_F` mark a transformer as rank deficient.
    pub rank_tol: f64,
    /// Minimum relative distance between eigenvalues of different factors.
    pub overlap_tol: f64,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self {
            gate: 1e-6,
            rank_tol: 1e-10,
            overlap_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformResult<T> {
    pub output: T,
    /// Similarity matrices used, one per produced block.
    pub transformers: Vec<Matrix>,
    pub rank_ok: bool,
    /// Largest relative evaluation residual of the output.
    pub residual: f64,
    /// Largest `‖K‖_F ‖K^{-1}‖_F` over the Kronecker systems solved.
    pub condition: f64,
}

fn solve_kronecker(k: &Matrix, m: usize, rank_tol: f64) -> Option<(Matrix, f64)> {
    let lu = Lu::with_relative_tol(k, rank_tol).ok()?;
    let cond = lu.inverse().map(|inv| inv.frob_norm() * k.frob_norm()).unwrap_or(f64::INFINITY);
    let x = lu.solve(&vec(&Matrix::identity(m))).ok()?;
    Some((unvec(&x, m, m), cond))
}

fn full_rank(t: &Matrix, rank_tol: f64) -> Option<Lu> {
    Lu::with_relative_tol(t, rank_tol).ok()
}

/// `T^{-1} X T`.
fn conjugate(t_lu: &Lu, x: &Matrix, t: &Matrix) -> Result<Matrix> {
    t_lu.solve(&(x * t))
}

/// Left solvent with the same spectrum as the right solvent `r`:
/// solves `Σ R^{l-1-i} Q B_i = I` for `Q`, where `B_i` are the quotient
/// coefficients of `A(λ)(λI - R)^{-1}`, and returns `L = Q^{-1} R Q`.
pub fn right_to_left_solvent(
    p: &MatrixPolynomial,
    r: &Matrix,
    cfg: &TransformConfig,
) -> Result<TransformResult<Matrix>> {
    p.require_monic()?;
    p.check_square(r)?;
    let input = p.relative_residual(r, Side::Right);
    if !(input <= cfg.gate) {
        return Err(Error::InputNotSolvent { residual: input });
    }
    let (m, l) = (p.order(), p.degree());
    let (quot, _) = p.synthetic_div_right(r)?;
    let pw = r.powers(l - 1);
    let mut k = Matrix::zeros(m * m, m * m);
    for i in 0..l {
        k += &kron(&quot.coeff(i).transpose(), &pw[l - 1 - i]);
    }
    let (q, condition) = solve_kronecker(&k, m, cfg.rank_tol).ok_or(Error::SingularKroneckerSystem)?;
    let q_lu = full_rank(&q, cfg.rank_tol).ok_or(Error::RankDeficientQ)?;
    let left = conjugate(&q_lu, r, &q)?;
    Ok(TransformResult {
        residual: p.relative_residual(&left, Side::Left),
        output: left,
        transformers: vec![q],
        rank_ok: true,
        condition,
    })
}

fn check_set(p: &MatrixPolynomial, s: &SolventSet, side: Side) -> Result<()> {
    p.require_monic()?;
    if s.side != side {
        return Err(Error::InvalidInput(format!(
            "expected a {side:?} solvent set, got {:?}",
            s.side
        )));
    }
    if s.len() != p.degree() {
        return Err(Error::IncompleteSet {
            expected: p.degree(),
            found: s.len(),
        });
    }
    s.solvents.iter().try_for_each(|x| p.check_square(x))
}

fn chain_residual(p: &MatrixPolynomial, chain: &SpectralFactorChain) -> f64 {
    let recon = chain.reconstruct();
    coefficient_error(p, &recon)
}

/// Largest coefficientwise relative difference between two polynomials of
/// equal degree; infinity when the degrees differ.
pub fn coefficient_error(p: &MatrixPolynomial, q: &MatrixPolynomial) -> f64 {
    if p.degree() != q.degree() || p.order() != q.order() {
        return f64::INFINITY;
    }
    let floor = 1e-12 * p.coeffs().iter().map(Matrix::frob_norm).fold(0.0, f64::max);
    p.coeffs()
        .iter()
        .zip(q.coeffs())
        .map(|(a, b)| (a - b).frob_norm() / a.frob_norm().max(floor).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

/// Builds the chain from a complete right solvent set, processing solvents
/// in set order: `Q_k = N_{k-1}(R_k) R_k N_{k-1}(R_k)^{-1}` with
/// `N_k(R_j) = N_{k-1}(R_j) R_j - Q_k N_{k-1}(R_j)` and `N_0 = I`.
pub fn right_solvents_to_chain(
    p: &MatrixPolynomial,
    s: &SolventSet,
    cfg: &TransformConfig,
) -> Result<TransformResult<SpectralFactorChain>> {
    check_set(p, s, Side::Right)?;
    let m = p.order();
    let mut partial: Vec<Matrix> = vec![Matrix::identity(m); s.len()];
    let mut factors = Vec::with_capacity(s.len());
    let mut transformers = Vec::with_capacity(s.len());
    for k in 0..s.len() {
        let n = partial[k].clone();
        full_rank(&n, cfg.rank_tol).ok_or(Error::RankDeficientTransformer(k + 1))?;
        let q = n.solve_right(&(&n * &s.solvents[k]))?;
        for j in k + 1..s.len() {
            partial[j] = &(&partial[j] * &s.solvents[j]) - &(&q * &partial[j]);
        }
        factors.push(q);
        transformers.push(n);
    }
    let chain = SpectralFactorChain::new(factors)?;
    Ok(TransformResult {
        residual: chain_residual(p, &chain),
        output: chain,
        transformers,
        rank_ok: true,
        condition: f64::NAN,
    })
}

/// Mirror of [`right_solvents_to_chain`]: builds the chain from the left,
/// starting with the solvent aligned to the leftmost factor,
/// `Q = M^{-1} L M` with `M_k(L_j) = L_j M_{k-1}(L_j) - M_{k-1}(L_j) Q_k`.
pub fn left_solvents_to_chain(
    p: &MatrixPolynomial,
    s: &SolventSet,
    cfg: &TransformConfig,
) -> Result<TransformResult<SpectralFactorChain>> {
    check_set(p, s, Side::Left)?;
    let (m, l) = (p.order(), s.len());
    let order: Vec<usize> = (0..l).rev().collect();
    let mut partial: Vec<Matrix> = vec![Matrix::identity(m); l];
    let mut factors = vec![Matrix::zeros(m, m); l];
    let mut transformers = vec![Matrix::zeros(m, m); l];
    for (step, &k) in order.iter().enumerate() {
        let mk = partial[k].clone();
        let lu = full_rank(&mk, cfg.rank_tol).ok_or(Error::RankDeficientTransformer(step + 1))?;
        let q = conjugate(&lu, &s.solvents[k], &mk)?;
        for &j in &order[step + 1..] {
            partial[j] = &(&s.solvents[j] * &partial[j]) - &(&partial[j] * &q);
        }
        factors[k] = q;
        transformers[k] = mk;
    }
    let chain = SpectralFactorChain::new(factors)?;
    Ok(TransformResult {
        residual: chain_residual(p, &chain),
        output: chain,
        transformers,
        rank_ok: true,
        condition: f64::NAN,
    })
}

fn check_chain(p: &MatrixPolynomial, chain: &SpectralFactorChain, cfg: &TransformConfig) -> Result<()> {
    p.require_monic()?;
    if chain.degree() != p.degree() {
        return Err(Error::IncompleteSet {
            expected: p.degree(),
            found: chain.degree(),
        });
    }
    chain.factors().iter().try_for_each(|q| p.check_square(q))?;
    let spectra: Vec<Vec<Complex64>> = chain.spectra()?;
    for i in 0..spectra.len() {
        for j in i + 1..spectra.len() {
            let close = spectra[i].iter().any(|a| {
                spectra[j]
                    .iter()
                    .any(|b| (a - b).norm() <= cfg.overlap_tol * a.norm().max(b.norm()).max(1.0))
            });
            if close {
                return Err(Error::SpectrumOverlap { first: i, second: j });
            }
        }
    }
    Ok(())
}

/// Complete right solvent set from a chain. The chain is deflated from the
/// left; for the `i`-th step with leftmost factor `U` and remaining
/// quotient `N_i(λ) = Σ A_{ji} λ^{l-i-j}`, `P` solves
/// `Σ_j A_{ji} P U^{l-i-j} = I` and `R = P U P^{-1}`.
pub fn chain_to_right_solvents(
    p: &MatrixPolynomial,
    chain: &SpectralFactorChain,
    cfg: &TransformConfig,
) -> Result<TransformResult<SolventSet>> {
    check_chain(p, chain, cfg)?;
    let (m, l) = (p.order(), p.degree());
    let scale = p.residual_scale();
    let mut current = p.clone();
    let mut out = vec![Matrix::zeros(m, m); l];
    let mut transformers = vec![Matrix::zeros(m, m); l];
    let mut condition: f64 = 0.0;
    for i in 1..=l {
        let idx = l - i;
        let u = &chain.factors()[idx];
        let (quot, rem) = current.synthetic_div_left(u)?;
        let residual = rem.frob_norm() / scale;
        if !(residual <= cfg.gate) {
            return Err(Error::DeflationResidualLarge { step: i, residual });
        }
        let d = quot.degree();
        let pw = u.powers(d);
        let mut g = Matrix::zeros(m * m, m * m);
        for j in 0..=d {
            g += &kron(&pw[d - j].transpose(), quot.coeff(j));
        }
        let (pm, cond) = solve_kronecker(&g, m, cfg.rank_tol).ok_or(Error::RankDeficientG(i))?;
        condition = condition.max(cond);
        full_rank(&pm, cfg.rank_tol).ok_or(Error::RankDeficientG(i))?;
        let r = pm.solve_right(&(&pm * u))?;
        out[idx] = r;
        transformers[idx] = pm;
        current = quot;
    }
    let residual = out
        .iter()
        .map(|r| p.relative_residual(r, Side::Right))
        .fold(0.0, f64::max);
    Ok(TransformResult {
        output: SolventSet::new(Side::Right, out),
        transformers,
        rank_ok: true,
        residual,
        condition,
    })
}

/// Complete left solvent set from a chain, deflating from the right: with
/// rightmost factor `U` and quotient `M_i(λ) = Σ A_{ji} λ^{l-i-j}`, `S`
/// solves `Σ_j U^{l-i-j} S A_{ji} = I` and `L = S^{-1} U S`.
pub fn chain_to_left_solvents(
    p: &MatrixPolynomial,
    chain: &SpectralFactorChain,
    cfg: &TransformConfig,
) -> Result<TransformResult<SolventSet>> {
    check_chain(p, chain, cfg)?;
    let (m, l) = (p.order(), p.degree());
    let scale = p.residual_scale();
    let mut current = p.clone();
    let mut out = Vec::with_capacity(l);
    let mut transformers = Vec::with_capacity(l);
    let mut condition: f64 = 0.0;
    for (i, u) in chain.factors().iter().enumerate() {
        let (quot, rem) = current.synthetic_div_right(u)?;
        let residual = rem.frob_norm() / scale;
        if !(residual <= cfg.gate) {
            return Err(Error::DeflationResidualLarge { step: i + 1, residual });
        }
        let d = quot.degree();
        let pw = u.powers(d);
        let mut h = Matrix::zeros(m * m, m * m);
        for j in 0..=d {
            h += &kron(&quot.coeff(j).transpose(), &pw[d - j]);
        }
        let (sm, cond) = solve_kronecker(&h, m, cfg.rank_tol).ok_or(Error::RankDeficientG(i + 1))?;
        condition = condition.max(cond);
        let lu = full_rank(&sm, cfg.rank_tol).ok_or(Error::RankDeficientG(i + 1))?;
        out.push(conjugate(&lu, u, &sm)?);
        transformers.push(sm);
        current = quot;
    }
    let residual = out
        .iter()
        .map(|x| p.relative_residual(x, Side::Left))
        .fold(0.0, f64::max);
    Ok(TransformResult {
        output: SolventSet::new(Side::Left, out),
        transformers,
        rank_ok: true,
        residual,
        condition,
    })
}

/// Divides out the right factor `(λI - q)`, returning the monic quotient and
/// the relative norm of the discarded remainder.
pub fn deflate_right(p: &MatrixPolynomial, q: &Matrix, gate: f64) -> Result<(MatrixPolynomial, f64)> {
    p.require_monic()?;
    let (quot, rem) = p.synthetic_div_right(q)?;
    let residual = rem.frob_norm() / p.residual_scale();
    if !(residual <= gate) {
        return Err(Error::ResidualTooLarge { residual });
    }
    Ok((quot, residual))
}

/// Eigenvalues of each member of a solvent set or chain.
pub fn spectra(blocks: &[Matrix]) -> Result<Vec<Vec<Complex64>>> {
    blocks.iter().map(eigvals).collect()
}
