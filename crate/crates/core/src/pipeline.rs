//! Global-then-local factorization: the quotient-difference table supplies
//! a seed for every factor, each seed is refined on the current deflated
//! polynomial, and the refined factor is divided out before moving on.

use std::fmt;
use std::str::FromStr;

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::horner::{
    default_initial_guess, horner_iterate, newton_horner, two_stage, ConvergenceTrace, IterConfig,
    TwoStageVariant,
};
use crate::linalg::Matrix;
use crate::poly::{is_complete_set, CompletenessReport, MatrixPolynomial, Side, SolventSet, SpectralFactorChain};
use crate::qd::{qd_iterate, QdConfig, QdOutcome};
use crate::transforms::{
    chain_to_left_solvents, chain_to_right_solvents, coefficient_error, deflate_right, TransformConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RefineMethod {
    Horner,
    NewtonHorner,
    TwoStageQChain,
    TwoStageDelta,
}

impl RefineMethod {
    pub const ALL: [RefineMethod; 4] = [
        RefineMethod::Horner,
        RefineMethod::NewtonHorner,
        RefineMethod::TwoStageQChain,
        RefineMethod::TwoStageDelta,
    ];

    pub fn run(self, p: &MatrixPolynomial, cfg: &IterConfig) -> Result<(Matrix, ConvergenceTrace)> {
        match self {
            RefineMethod::Horner => horner_iterate(p, cfg),
            RefineMethod::NewtonHorner => newton_horner(p, cfg),
            RefineMethod::TwoStageQChain => two_stage(p, cfg, TwoStageVariant::QChain),
            RefineMethod::TwoStageDelta => two_stage(p, cfg, TwoStageVariant::DeltaForm),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RefineMethod::Horner => "horner",
            RefineMethod::NewtonHorner => "newton-horner",
            RefineMethod::TwoStageQChain => "two-stage",
            RefineMethod::TwoStageDelta => "two-stage-delta",
        }
    }
}

impl fmt::Display for RefineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RefineMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        RefineMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown refinement method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub refine_method: RefineMethod,
    pub qd: QdConfig,
    /// Stopping rule for refinement; `x0` is ignored.
    pub iter: IterConfig,
    pub verify_tol: f64,
    pub transform: TransformConfig,
    /// Seeds to use instead of running the quotient-difference table.
    pub seed_chain: Option<SpectralFactorChain>,
    /// Default-guess starts tried per stage when no table seeds exist.
    pub fallback_starts: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            refine_method: RefineMethod::NewtonHorner,
            qd: QdConfig::default(),
            iter: IterConfig::default(),
            verify_tol: 1e-8,
            transform: TransformConfig::default(),
            seed_chain: None,
            fallback_starts: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub stage: usize,
    #[serde(skip)]
    pub seed: Option<Matrix>,
    #[serde(skip)]
    pub factor: Matrix,
    pub trace: ConvergenceTrace,
    /// Relative remainder discarded when dividing the factor out.
    pub deflation_remainder: f64,
}

#[derive(Debug, Clone)]
pub struct Factorization {
    pub chain: SpectralFactorChain,
    pub report: VerificationReport,
    pub qd: Option<QdOutcome>,
    pub stages: Vec<StageRecord>,
    pub warnings: Vec<String>,
}

/// Residual summary for a factorization or solvent sets. All residuals are
/// relative, `‖A(X)‖_F / ‖A_l‖_F`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerificationReport {
    /// Remainder of dividing out each factor in turn from the right.
    pub per_factor_residuals: Vec<f64>,
    pub rightmost_residual: Option<f64>,
    pub leftmost_residual: Option<f64>,
    /// Right solvent residuals.
    pub per_solvent_residuals: Vec<f64>,
    pub per_left_solvent_residuals: Vec<f64>,
    pub completeness: Option<CompletenessReport>,
    pub left_completeness: Option<CompletenessReport>,
    /// Largest coefficientwise relative error of the reconstructed product.
    pub reconstruction_error: Option<f64>,
    /// `(‖Z*‖ - ‖Z‖) / ‖Z*‖` against supplied reference factors.
    pub reference_norm_errors: Option<Vec<f64>>,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyInput<'a> {
    pub chain: Option<&'a SpectralFactorChain>,
    pub right: Option<&'a SolventSet>,
    pub left: Option<&'a SolventSet>,
    pub references: Option<&'a [Matrix]>,
}

/// Computes every residual applicable to the supplied data. Never fails;
/// checks that cannot be evaluated are left empty.
pub fn verify(p: &MatrixPolynomial, input: &VerifyInput<'_>, tol: f64) -> VerificationReport {
    let scale = p.residual_scale();
    let mut report = VerificationReport {
        tolerance: tol,
        ..Default::default()
    };
    let mut worst: f64 = 0.0;
    if let Some(chain) = input.chain {
        let mut current = p.clone();
        for q in chain.factors() {
            match current.synthetic_div_right(q) {
                Ok((quot, rem)) => {
                    report.per_factor_residuals.push(rem.frob_norm() / scale);
                    current = quot;
                }
                Err(_) => break,
            }
        }
        if chain.order() == p.order() {
            report.rightmost_residual = Some(p.relative_residual(chain.rightmost(), Side::Right));
            report.leftmost_residual = Some(p.relative_residual(chain.leftmost(), Side::Left));
        }
        let recon = coefficient_error(p, &chain.reconstruct());
        report.reconstruction_error = Some(recon);
        worst = worst.max(recon);
        worst = report.per_factor_residuals.iter().cloned().fold(worst, f64::max);
        if report.per_factor_residuals.len() != chain.degree() {
            worst = f64::INFINITY;
        }
        if let Some(refs) = input.references {
            report.reference_norm_errors = Some(
                refs.iter()
                    .zip(chain.factors())
                    .map(|(z_ref, z)| (z_ref.frob_norm() - z.frob_norm()) / z_ref.frob_norm())
                    .collect(),
            );
        }
    }
    if let Some(set) = input.right {
        report.per_solvent_residuals = set
            .solvents
            .iter()
            .map(|x| p.relative_residual(x, Side::Right))
            .collect();
        worst = report.per_solvent_residuals.iter().cloned().fold(worst, f64::max);
        report.completeness = is_complete_set(p, set, 1e-6).ok();
    }
    if let Some(set) = input.left {
        report.per_left_solvent_residuals = set
            .solvents
            .iter()
            .map(|x| p.relative_residual(x, Side::Left))
            .collect();
        worst = report
            .per_left_solvent_residuals
            .iter()
            .cloned()
            .fold(worst, f64::max);
        report.left_completeness = is_complete_set(p, set, 1e-6).ok();
    }
    report.passed = worst <= tol;
    report
}

fn linear_factor(p: &MatrixPolynomial) -> Matrix {
    -p.coeff(1)
}

/// Refines each seed on the current deflated polynomial and divides the
/// result out. `seeds[k] = None` uses multi-start default guesses.
fn refine_and_deflate(
    p: &MatrixPolynomial,
    seeds: &[Option<Matrix>],
    method: RefineMethod,
    iter: &IterConfig,
    qd: &QdConfig,
    gate: f64,
    fallback_starts: u64,
) -> Result<(Vec<Matrix>, Vec<StageRecord>)> {
    let mut current = p.clone();
    let mut factors = Vec::with_capacity(p.degree());
    let mut stages = Vec::with_capacity(p.degree());
    for (k, seed) in seeds.iter().enumerate() {
        let stage = k + 1;
        let (factor, trace) = if current.degree() == 1 {
            let x = linear_factor(&current);
            let trace = ConvergenceTrace {
                method: "linear".into(),
                ..seed_trace(&current, &x, method)
            };
            (x, trace)
        } else {
            // Plain Horner is repelled by solvents carrying the larger latent
            // roots, so its seed is polished by the table on the deflated
            // polynomial and kept once it passes.
            let seed = match seed {
                Some(x0) if method == RefineMethod::Horner => Some(polish_seed(&current, x0, qd, iter.residual_tol)),
                other => other.clone(),
            };
            let result = match &seed {
                Some(x0)
                    if method == RefineMethod::Horner
                        && current.relative_residual(x0, Side::Right) <= iter.residual_tol =>
                {
                    Ok((x0.clone(), seed_trace(&current, x0, method)))
                }
                Some(x0) => method.run(&current, &IterConfig { x0: Some(x0.clone()), ..iter.clone() }),
                None => multi_start(&current, method, iter, fallback_starts),
            };
            result.map_err(|e| e.at_stage(stage))?
        };
        let (next, remainder) = deflate_right(&current, &factor, gate).map_err(|e| e.at_stage(stage))?;
        stages.push(StageRecord {
            stage,
            seed: seed.clone(),
            factor: factor.clone(),
            trace,
            deflation_remainder: remainder,
        });
        factors.push(factor);
        current = next;
    }
    Ok((factors, stages))
}

/// Rightmost factor of a fresh table run on `p` when it beats `x0`.
fn polish_seed(p: &MatrixPolynomial, x0: &Matrix, qd: &QdConfig, tol: f64) -> Matrix {
    let before = p.relative_residual(x0, Side::Right);
    if before <= tol {
        return x0.clone();
    }
    // Run the table down to its rounding floor rather than the seeding
    // tolerance; the stall detector ends the run.
    let tight = QdConfig {
        e_tol: qd.e_tol.min(1e-15),
        ..qd.clone()
    };
    match qd_iterate(p, &tight) {
        Ok(out) => {
            let x = out.tableau.chain().rightmost().clone();
            if p.relative_residual(&x, Side::Right) < before {
                x
            } else {
                x0.clone()
            }
        }
        Err(_) => x0.clone(),
    }
}

/// Trace for a seed accepted as-is because it already meets the residual
/// tolerance.
fn seed_trace(p: &MatrixPolynomial, x0: &Matrix, method: RefineMethod) -> ConvergenceTrace {
    ConvergenceTrace {
        method: method.name().to_string(),
        iterates: vec![x0.clone()],
        residuals: vec![p.eval_right(x0).frob_norm()],
        scale: p.residual_scale(),
        ..Default::default()
    }
}

fn multi_start(
    p: &MatrixPolynomial,
    method: RefineMethod,
    iter: &IterConfig,
    starts: u64,
) -> Result<(Matrix, ConvergenceTrace)> {
    let mut last = None;
    for s in 0..starts.max(1) {
        let seed = iter.seed.wrapping_add(s);
        let mut x0 = default_initial_guess(p, seed);
        if s % 2 == 1 {
            // Alternate starts on the other side of the origin.
            x0 = -&x0;
        }
        match method.run(p, &IterConfig { x0: Some(x0), ..iter.clone() }) {
            Ok(found) => return Ok(found),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one start"))
}

/// Full factorization seeded by the quotient-difference table (or by
/// `cfg.seed_chain`). Falls back to multi-start refinement with warnings
/// when the table cannot be formed.
pub fn full_factorize(p: &MatrixPolynomial, cfg: &PipelineConfig) -> Result<Factorization> {
    p.require_monic()?;
    if !(cfg.verify_tol > 0.0) {
        return Err(Error::InvalidInput("verify_tol must be positive".into()));
    }
    let l = p.degree();
    if l == 0 {
        return Err(Error::DegreeTooLow { degree: 0 });
    }
    let mut warnings = Vec::new();
    let mut qd = None;
    let seeds: Vec<Option<Matrix>> = if let Some(chain) = &cfg.seed_chain {
        if chain.degree() != l || chain.order() != p.order() {
            return Err(Error::InvalidInput("seed chain does not match the polynomial".into()));
        }
        chain.factors().iter().cloned().map(Some).collect()
    } else if l == 1 {
        vec![None]
    } else {
        match qd_iterate(p, &cfg.qd) {
            Ok(out) => {
                if !out.converged() {
                    let msg = format!(
                        "quotient-difference table stopped ({:?}) after {} sweeps; using its rows as seeds",
                        out.stop, out.tableau.sweep
                    );
                    warn!("{msg}");
                    warnings.push(msg);
                }
                let seeds = out.tableau.q_row.iter().cloned().map(Some).collect();
                qd = Some(out);
                seeds
            }
            Err(e @ (Error::SingularCoefficient(_) | Error::SingularPivot { .. })) => {
                let msg = format!("{e}; falling back to multi-start refinement");
                warn!("{msg}");
                warnings.push(msg);
                vec![None; l]
            }
            Err(e) => return Err(e.at_stage(0)),
        }
    };
    let (factors, stages) = refine_and_deflate(
        p,
        &seeds,
        cfg.refine_method,
        &cfg.iter,
        &cfg.qd,
        cfg.transform.gate,
        cfg.fallback_starts,
    )?;
    let chain = SpectralFactorChain::new(factors)?;
    let report = verify(
        p,
        &VerifyInput {
            chain: Some(&chain),
            ..Default::default()
        },
        cfg.verify_tol,
    );
    Ok(Factorization {
        chain,
        report,
        qd,
        stages,
        warnings,
    })
}

/// Repeated extraction and deflation from default initial guesses, without
/// the quotient-difference table.
pub fn sequential_factorize(
    p: &MatrixPolynomial,
    method: RefineMethod,
    iter: &IterConfig,
    cfg: &PipelineConfig,
) -> Result<Factorization> {
    p.require_monic()?;
    let l = p.degree();
    if l == 0 {
        return Err(Error::DegreeTooLow { degree: 0 });
    }
    let seeds: Vec<Option<Matrix>> = match &iter.x0 {
        Some(x0) => std::iter::once(Some(x0.clone())).chain(std::iter::repeat(None)).take(l).collect(),
        None => vec![None; l],
    };
    let iter = IterConfig { x0: None, ..iter.clone() };
    let (factors, stages) = refine_and_deflate(p, &seeds, method, &iter, &cfg.qd, cfg.transform.gate, cfg.fallback_starts)?;
    let chain = SpectralFactorChain::new(factors)?;
    let report = verify(
        p,
        &VerifyInput {
            chain: Some(&chain),
            ..Default::default()
        },
        cfg.verify_tol,
    );
    Ok(Factorization {
        chain,
        report,
        qd: None,
        stages,
        warnings: Vec::new(),
    })
}

#[derive(Debug, Clone)]
pub struct SolventSets {
    pub factorization: Factorization,
    pub right: SolventSet,
    pub left: SolventSet,
    pub report: VerificationReport,
}

/// Factorizes and converts the chain into complete right and left solvent
/// sets aligned with the chain.
pub fn full_solvent_sets(p: &MatrixPolynomial, cfg: &PipelineConfig) -> Result<SolventSets> {
    let factorization = full_factorize(p, cfg)?;
    let right = chain_to_right_solvents(p, &factorization.chain, &cfg.transform)?.output;
    let left = chain_to_left_solvents(p, &factorization.chain, &cfg.transform)?.output;
    let report = verify(
        p,
        &VerifyInput {
            chain: Some(&factorization.chain),
            right: Some(&right),
            left: Some(&left),
            references: None,
        },
        cfg.verify_tol,
    );
    Ok(SolventSets {
        factorization,
        right,
        left,
        report,
    })
}
