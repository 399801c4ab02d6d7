use std::path::Path;

use blockroots::decoupler::{closed_loop_eval, design_decoupling, MfdSystem};
use blockroots::horner::{ConvergenceTrace, IterConfig};
use blockroots::io::{format_float, read_json, to_json_string, FactorsFile, MfdFile, PolynomialFile, SolventsFile};
use blockroots::pipeline::{
    full_factorize, sequential_factorize, verify, Factorization, PipelineConfig, RefineMethod, VerificationReport,
    VerifyInput,
};
use blockroots::qd::{qd_iterate, QdStop};
use blockroots::transforms::{
    chain_to_left_solvents, chain_to_right_solvents, left_solvents_to_chain, right_solvents_to_chain,
    right_to_left_solvent, TransformConfig,
};
use blockroots::{Error, Matrix, MatrixPolynomial, Side, SolventSet, SpectralFactorChain};
use log::warn;
use num_complex::Complex64;
use serde::Serialize;

use crate::output::{Manifest, RunDir};
use crate::{Command, ConvertArgs, DecoupleArgs, Direction, Failure, FactorizeArgs, Method, VerifyArgs};

pub fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Replay(args) => {
            let manifest: Manifest = read_json(&args.manifest)?;
            let mut invocation = manifest.invocation;
            if let Some(out) = args.out {
                set_out(&mut invocation, out)?;
            }
            if matches!(invocation, Command::Replay(_)) {
                return Err(Failure::Input("a manifest cannot record a replay".into()));
            }
            run(invocation)
        }
        command => {
            let command = absolute_paths(command)?;
            match &command {
                Command::Factorize(a) => factorize(a, &command),
                Command::Convert(a) => convert(a, &command),
                Command::Decouple(a) => decouple(a, &command),
                Command::Verify(a) => verify_cmd(a),
                Command::Replay(_) => unreachable!(),
            }
        }
    }
}

fn set_out(c: &mut Command, out: std::path::PathBuf) -> Result<(), Failure> {
    match c {
        Command::Factorize(a) => a.out = out,
        Command::Convert(a) => a.out = out,
        Command::Decouple(a) => a.out = out,
        Command::Verify(a) => a.out = Some(out),
        Command::Replay(_) => return Err(Failure::Input("a manifest cannot record a replay".into())),
    }
    Ok(())
}

/// Makes input paths absolute so a recorded manifest replays from any
/// working directory.
fn absolute_paths(mut c: Command) -> Result<Command, Failure> {
    let abs = |p: &mut std::path::PathBuf| -> Result<(), Failure> {
        *p = std::path::absolute(&*p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?;
        Ok(())
    };
    match &mut c {
        Command::Factorize(a) => {
            abs(&mut a.input)?;
            if let Some(r) = &mut a.references {
                abs(r)?;
            }
        }
        Command::Convert(a) => {
            abs(&mut a.input)?;
            abs(&mut a.poly)?;
        }
        Command::Decouple(a) => abs(&mut a.input)?,
        Command::Verify(a) => {
            abs(&mut a.input)?;
            abs(&mut a.against)?;
        }
        Command::Replay(a) => abs(&mut a.manifest)?,
    }
    Ok(c)
}

fn read_chain(path: &Path) -> Result<SpectralFactorChain, Failure> {
    Ok(read_json::<FactorsFile>(path)?.to_chain()?)
}

#[derive(Serialize)]
struct StageSummary {
    stage: usize,
    method: String,
    iterations: usize,
    final_residual: Option<f64>,
    deflation_remainder: f64,
}

#[derive(Serialize)]
struct FactorizeReport<'a> {
    method: String,
    qd_sweeps: Option<usize>,
    qd_stop: Option<QdStop>,
    stages: Vec<StageSummary>,
    warnings: &'a [String],
    verification: &'a VerificationReport,
}

fn refine_method(m: Method, fallback: RefineMethod) -> RefineMethod {
    match m {
        Method::Horner => RefineMethod::Horner,
        Method::NewtonHorner => RefineMethod::NewtonHorner,
        Method::TwoStage => RefineMethod::TwoStageQChain,
        Method::TwoStageDelta => RefineMethod::TwoStageDelta,
        Method::Qd | Method::Pipeline => fallback,
    }
}

fn method_name(m: Method, refine: RefineMethod) -> String {
    match m {
        Method::Qd => "qd".into(),
        Method::Pipeline => format!("pipeline+{refine}"),
        other => refine_method(other, refine).to_string(),
    }
}

/// Stage number and trace carried by an iteration failure, if any.
fn failure_trace(e: &Error) -> Option<(usize, &ConvergenceTrace)> {
    match e {
        Error::Stage { stage, source } => failure_trace(source).map(|(_, t)| (*stage, t)),
        Error::NoConvergence { trace, .. } => Some((1, trace)),
        _ => None,
    }
}

fn factorize(a: &FactorizeArgs, invocation: &Command) -> Result<(), Failure> {
    let file: PolynomialFile = read_json(&a.input)?;
    let p = file.to_polynomial()?;
    let refine: RefineMethod = a.refine.parse()?;
    let mut cfg = PipelineConfig {
        refine_method: refine,
        ..PipelineConfig::default()
    };
    cfg.iter.seed = a.seed;
    if let Some(n) = a.max_iter {
        cfg.iter.max_iterations = n;
        cfg.qd.max_iterations = n;
    }
    if let Some(t) = a.tol {
        cfg.iter.residual_tol = t;
        cfg.verify_tol = t;
    }
    if let Some(eta) = a.eta {
        cfg.iter.eta = eta;
    }
    let references = a.references.as_deref().map(read_chain).transpose()?;
    let dir = RunDir::create(&a.out)?;
    dir.manifest(&a.input, Some(a.seed), invocation)?;
    let method = method_name(a.method, refine);

    let result: Result<Factorization, Error> = match a.method {
        Method::Qd => factorize_qd(&p, &cfg, &dir)?,
        Method::Pipeline => full_factorize(&p, &cfg),
        m => {
            let iter = IterConfig {
                x0: file.initial_guess()?,
                ..cfg.iter.clone()
            };
            sequential_factorize(&p, refine_method(m, refine), &iter, &cfg)
        }
    };
    let f = match result {
        Ok(f) => f,
        Err(e) => {
            if let Some((stage, trace)) = failure_trace(&e) {
                dir.trace_csv(&[(stage, trace)])?;
            }
            if let Error::QdNoConvergence { trace, .. } = &e {
                dir.qd_trace_csv(trace)?;
            }
            return Err(e.into());
        }
    };
    for w in &f.warnings {
        warn!("{w}");
    }
    dir.json("factors.json", &FactorsFile::from_chain(&f.chain))?;
    let traces: Vec<(usize, &ConvergenceTrace)> = f.stages.iter().map(|s| (s.stage, &s.trace)).collect();
    dir.trace_csv(&traces)?;
    if let Some(qd) = &f.qd {
        dir.qd_trace_csv(&qd.trace)?;
    }

    let tcfg = TransformConfig::default();
    let (right, left) = if a.solvents {
        let right = chain_to_right_solvents(&p, &f.chain, &tcfg)?.output;
        let left = chain_to_left_solvents(&p, &f.chain, &tcfg)?.output;
        dir.json("solvents_right.json", &SolventsFile::from_set(&right))?;
        dir.json("solvents_left.json", &SolventsFile::from_set(&left))?;
        (Some(right), Some(left))
    } else {
        (None, None)
    };
    let report = verify(
        &p,
        &VerifyInput {
            chain: Some(&f.chain),
            right: right.as_ref(),
            left: left.as_ref(),
            references: references.as_ref().map(|c| c.factors()),
        },
        cfg.verify_tol,
    );
    let stages = f
        .stages
        .iter()
        .map(|s| StageSummary {
            stage: s.stage,
            method: s.trace.method.clone(),
            iterations: s.trace.iterations(),
            final_residual: s.trace.relative_residuals().last().copied(),
            deflation_remainder: s.deflation_remainder,
        })
        .collect();
    dir.json(
        "report.json",
        &FactorizeReport {
            method,
            qd_sweeps: f.qd.as_ref().map(|q| q.tableau.sweep),
            qd_stop: f.qd.as_ref().map(|q| q.stop),
            stages,
            warnings: &f.warnings,
            verification: &report,
        },
    )?;
    if let Some(qd) = &f.qd {
        if a.method == Method::Qd && !qd.converged() {
            return Err(Failure::Numerical(format!(
                "table stopped ({:?}) after {} sweeps; partial factors written",
                qd.stop, qd.tableau.sweep
            )));
        }
    }
    if !report.passed {
        return Err(Failure::Numerical(format!(
            "verification failed at tolerance {:e}; see report.json",
            report.tolerance
        )));
    }
    Ok(())
}

/// Runs the table alone and packages its chain as a factorization. Only
/// singular coefficients or pivots are returned as errors.
fn factorize_qd(p: &MatrixPolynomial, cfg: &PipelineConfig, dir: &RunDir) -> Result<Result<Factorization, Error>, Failure> {
    let out = match qd_iterate(p, &cfg.qd) {
        Ok(out) => out,
        Err(e) => return Ok(Err(e)),
    };
    dir.qd_trace_csv(&out.trace)?;
    let chain = out.chain();
    let report = verify(
        p,
        &VerifyInput {
            chain: Some(&chain),
            ..Default::default()
        },
        cfg.verify_tol,
    );
    Ok(Ok(Factorization {
        chain,
        report,
        qd: Some(out),
        stages: Vec::new(),
        warnings: Vec::new(),
    }))
}

#[derive(Serialize)]
struct ConvertReport {
    direction: Direction,
    rank_ok: bool,
    residual: f64,
    condition: f64,
    verification: VerificationReport,
}

fn convert(a: &ConvertArgs, invocation: &Command) -> Result<(), Failure> {
    let p = blockroots::io::read_polynomial(&a.poly)?;
    let tcfg = TransformConfig::default();
    let dir = RunDir::create(&a.out)?;
    dir.manifest(&a.input, None, invocation)?;
    let read_set = |side: Side| -> Result<SolventSet, Failure> {
        let set = read_json::<SolventsFile>(&a.input)?.to_set()?;
        if set.side != side {
            return Err(Failure::Input(format!("expected {side:?} solvents in {}", a.input.display())));
        }
        Ok(set)
    };
    let (rank_ok, residual, condition, input) = match a.direction {
        Direction::ChainToRight | Direction::ChainToLeft => {
            let chain = read_chain(&a.input)?;
            let (res, name) = if a.direction == Direction::ChainToRight {
                (chain_to_right_solvents(&p, &chain, &tcfg)?, "solvents_right.json")
            } else {
                (chain_to_left_solvents(&p, &chain, &tcfg)?, "solvents_left.json")
            };
            dir.json(name, &SolventsFile::from_set(&res.output))?;
            let input = match res.output.side {
                Side::Right => (Some(chain), Some(res.output), None),
                Side::Left => (Some(chain), None, Some(res.output)),
            };
            (res.rank_ok, res.residual, res.condition, input)
        }
        Direction::RightToLeft => {
            let right = read_set(Side::Right)?;
            let mut left = Vec::with_capacity(right.len());
            let (mut rank_ok, mut residual, mut condition) = (true, 0.0f64, 0.0f64);
            for r in &right.solvents {
                let res = right_to_left_solvent(&p, r, &tcfg)?;
                rank_ok &= res.rank_ok;
                residual = residual.max(res.residual);
                condition = condition.max(res.condition);
                left.push(res.output);
            }
            let left = SolventSet::new(Side::Left, left);
            dir.json("solvents_left.json", &SolventsFile::from_set(&left))?;
            (rank_ok, residual, condition, (None, None, Some(left)))
        }
        Direction::RightToChain | Direction::LeftToChain => {
            let res = if a.direction == Direction::RightToChain {
                right_solvents_to_chain(&p, &read_set(Side::Right)?, &tcfg)?
            } else {
                left_solvents_to_chain(&p, &read_set(Side::Left)?, &tcfg)?
            };
            dir.json("factors.json", &FactorsFile::from_chain(&res.output))?;
            (res.rank_ok, res.residual, res.condition, (Some(res.output), None, None))
        }
    };
    let (chain, right, left) = input;
    let verification = verify(
        &p,
        &VerifyInput {
            chain: chain.as_ref(),
            right: right.as_ref(),
            left: left.as_ref(),
            references: None,
        },
        PipelineConfig::default().verify_tol,
    );
    let passed = verification.passed;
    dir.json(
        "report.json",
        &ConvertReport {
            direction: a.direction,
            rank_ok,
            residual,
            condition,
            verification,
        },
    )?;
    if !rank_ok {
        return Err(Failure::Numerical("rank gate failed; see report.json".into()));
    }
    if !passed {
        return Err(Failure::Numerical("converted blocks fail verification; see report.json".into()));
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, Failure> {
    s.split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Failure::Input(format!("cannot parse {what} '{t}'"))))
        .collect()
}

#[derive(Serialize)]
struct DecoupleOutput {
    input_transform: Vec<Vec<f64>>,
    /// Normalized numerator factors, rightmost first.
    numerator_zeros: Vec<Vec<Vec<f64>>>,
    /// Factors of the desired denominator, rightmost first.
    desired_factors: Vec<Vec<Vec<f64>>>,
    /// Desired denominator, leading coefficient first.
    desired_denominator: Vec<Vec<Vec<f64>>>,
    /// `K_c0, ..., K_c(l-1)`.
    gain_blocks: Vec<Vec<Vec<f64>>>,
    gain: Vec<Vec<f64>>,
    mode_blocks: Vec<Vec<Vec<f64>>>,
    closed_loop: Vec<ClosedLoopSample>,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct ClosedLoopSample {
    lambda: [f64; 2],
    deviation: f64,
}

fn rows_of(ms: &[Matrix]) -> Vec<Vec<Vec<f64>>> {
    ms.iter().map(Matrix::to_rows).collect()
}

fn decouple(a: &DecoupleArgs, invocation: &Command) -> Result<(), Failure> {
    let (n, d) = read_json::<MfdFile>(&a.input)?.to_polynomials()?;
    let sys = MfdSystem::new(n, d)?;
    let modes = a
        .modes
        .iter()
        .map(|s| parse_list::<f64>(s, "mode").map(|v| Matrix::diag(&v)))
        .collect::<Result<Vec<_>, _>>()?;
    let points: Vec<Complex64> = match &a.eval {
        Some(s) => parse_list(s, "evaluation point")?,
        None => Vec::new(),
    };
    let dir = RunDir::create(&a.out)?;
    dir.manifest(&a.input, None, invocation)?;
    let res = design_decoupling(&sys, &modes, &PipelineConfig::default())?;
    for w in &res.warnings {
        warn!("{w}");
    }
    let mut csv = String::from("lambda_re,lambda_im,deviation");
    let m = sys.order();
    for i in 0..m {
        for j in 0..m {
            csv.push_str(&format!(",h{i}{j}_re,h{i}{j}_im"));
        }
    }
    csv.push('\n');
    let mut samples = Vec::with_capacity(points.len());
    let mut worst = 0.0f64;
    for lam in points {
        let cl = closed_loop_eval(&sys, &res, lam)?;
        let dev = cl.deviation();
        worst = worst.max(dev);
        csv.push_str(&[lam.re, lam.im, dev].map(format_float).join(","));
        for i in 0..m {
            for j in 0..m {
                let h = cl.closed[(i, j)];
                csv.push_str(&format!(",{},{}", format_float(h.re), format_float(h.im)));
            }
        }
        csv.push('\n');
        samples.push(ClosedLoopSample {
            lambda: [lam.re, lam.im],
            deviation: dev,
        });
    }
    dir.text("closed_loop.csv", &csv)?;
    let out = DecoupleOutput {
        input_transform: res.f.to_rows(),
        numerator_zeros: res.numerator_chain.as_ref().map_or_else(Vec::new, |c| rows_of(c.factors())),
        desired_factors: rows_of(res.desired_chain.factors()),
        desired_denominator: rows_of(res.dd.coeffs()),
        gain_blocks: rows_of(&res.kc_blocks),
        gain: res.kc().to_rows(),
        mode_blocks: rows_of(&res.j_blocks),
        closed_loop: samples,
        warnings: res.warnings.clone(),
    };
    dir.json("decoupling.json", &out)?;
    let tol = 1e-6;
    if worst > tol {
        return Err(Failure::Numerical(format!(
            "closed loop deviates from the diagonal target by {worst:e}"
        )));
    }
    Ok(())
}

fn verify_cmd(a: &VerifyArgs) -> Result<(), Failure> {
    let p = blockroots::io::read_polynomial(&a.input)?;
    let chain = read_chain(&a.against)?;
    let tol = a.tol.unwrap_or(PipelineConfig::default().verify_tol);
    let report = verify(
        &p,
        &VerifyInput {
            chain: Some(&chain),
            ..Default::default()
        },
        tol,
    );
    match &a.out {
        Some(dir) => RunDir::create(dir)?.json("report.json", &report)?,
        None => print!("{}", to_json_string(&report)?),
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Numerical("factors fail verification".into()))
    }
}
