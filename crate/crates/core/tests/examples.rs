//! Worked examples: fixtures with published reference matrices.

mod support;

use blockroots::horner::{convergence_bounds_check, horner_iterate, newton_horner, two_stage, IterConfig, TwoStageVariant};
use blockroots::io::{read_json, PolynomialFile};
use blockroots::pipeline::{full_factorize, full_solvent_sets, sequential_factorize, PipelineConfig, RefineMethod};
use blockroots::poly::is_complete_set;
use blockroots::qd::{qd_iterate, qd_run, QdConfig};
use blockroots::transforms::coefficient_error;
use blockroots::{Error, Matrix, MatrixPolynomial, Side, SpectralFactorChain};
use support::*;

#[test]
fn linear_factor_vanishes_at_its_root() {
    let c = m2(1.0, 2.0, 3.0, 4.0);
    let p = MatrixPolynomial::monic(vec![-&c]).unwrap();
    assert_eq!(p.eval_right(&c), Matrix::zeros(2, 2));
    assert_eq!(p.eval_left(&c), Matrix::zeros(2, 2));
}

#[test]
fn scalar_quadratic_fixture() {
    let p = fixture("scalar_quadratic.json");
    assert_eq!(p.eval_right(&Matrix::from_rows(&[[2.0]])), Matrix::zeros(1, 1));
    let (chain, _) = qd_run(&p, &QdConfig::default()).unwrap();
    assert!((chain.factors()[0][(0, 0)] - 2.0).abs() < 1e-9);
    assert!((chain.factors()[1][(0, 0)] - 1.0).abs() < 1e-9);
}

#[test]
fn example1_solvent_sets_match_printed_values() {
    let p = fixture("example1.json");
    let sets = full_solvent_sets(&p, &PipelineConfig::default()).unwrap();
    let (r, l) = (example1::r(), example1::l());
    for i in 0..3 {
        assert!(rel_err(&sets.right.solvents[2 - i], &r[i]) < 1e-2, "R{}", i + 1);
        assert!(rel_err(&sets.left.solvents[2 - i], &l[i]) < 1e-2, "L{}", i + 1);
    }
    assert!(sets.report.completeness.as_ref().unwrap().complete());
    assert!(sets.report.passed);
}

#[test]
fn example1_outer_factors_match_printed_values() {
    let p = fixture("example1.json");
    let f = full_factorize(&p, &PipelineConfig::default()).unwrap();
    let s = example1::s();
    assert!(rel_err(f.chain.rightmost(), &s[0]) < 1e-2);
    assert!(rel_err(f.chain.leftmost(), &s[2]) < 1e-2);
    assert!(p.relative_residual(f.chain.rightmost(), Side::Right) < 1e-8);
}

#[test]
fn example1_printed_factors_reproduce_the_coefficients() {
    let p = fixture("example1.json");
    let printed = SpectralFactorChain::new(example1::s().to_vec()).unwrap();
    assert!(coefficient_error(&p, &printed.reconstruct()) < 1e-3);
}

#[test]
fn example1_verbatim_coefficient_breaks_the_table() {
    let p = fixture("example1_as_printed.json");
    let out = qd_iterate(&p, &QdConfig::default()).unwrap();
    assert!(!out.converged());
}

#[test]
fn example1_printed_left_solvent_has_small_residual() {
    let p = fixture("example1.json");
    assert!(p.relative_residual(&example1::l()[0], Side::Left) < 1e-2);
}

#[test]
fn example2_repeated_extraction_reconstructs() {
    let p = fixture("example2.json");
    let f = sequential_factorize(&p, RefineMethod::Horner, &IterConfig::default(), &PipelineConfig::default()).unwrap();
    assert_eq!(f.chain.degree(), 3);
    assert!(coefficient_error(&p, &f.chain.reconstruct()) < 1e-6);
    assert!(f.report.passed);
}

#[test]
fn example3_latent_roots_are_doubled() {
    let p = fixture("example3.json");
    let roots = p.latent_roots().unwrap();
    assert_eq!(roots.len(), 4);
    let w = blockroots::linalg::eigvals(&example3::w()).unwrap();
    // A defective fourfold root moves like the fourth root of the 1e-4
    // rounding in the printed data.
    for r in &roots {
        assert!(w.iter().any(|x| (x - r).norm() < 0.1), "{r}");
    }
}

#[test]
fn example3_horner_reaches_a_solvent_and_bounds_hold() {
    let p = fixture("example3.json");
    let cfg = IterConfig {
        max_iterations: 2000,
        ..IterConfig::default()
    };
    let (x, trace) = horner_iterate(&p, &cfg).unwrap();
    assert!(p.relative_residual(&x, Side::Right) <= 1e-8);
    let report = convergence_bounds_check(&p, &trace).unwrap();
    assert!(report.sandwich_holds());
}

#[test]
fn example4_two_stage_after_fifteen_iterations() {
    let p = fixture("example4.json");
    let cfg = IterConfig {
        max_iterations: 15,
        ..IterConfig::starting_at(fixture_guess("example4.json"))
    };
    let trace = match two_stage(&p, &cfg, TwoStageVariant::QChain) {
        Err(Error::NoConvergence { trace, .. }) => *trace,
        other => panic!("unexpected {other:?}"),
    };
    assert_eq!(trace.iterations(), 15);
    assert!(*trace.residuals.last().unwrap() <= 0.05);
}

#[test]
fn example4_newton_from_the_same_start_converges() {
    let p = fixture("example4.json");
    let cfg = IterConfig::starting_at(fixture_guess("example4.json"));
    let (x, _) = newton_horner(&p, &cfg).unwrap();
    assert!(p.relative_residual(&x, Side::Right) <= 1e-8);
}

#[test]
fn fixtures_roundtrip_through_json() {
    for name in ["example1.json", "example2.json", "example3.json", "example4.json"] {
        let file: PolynomialFile = read_json(&fixture_path(name)).unwrap();
        let p = file.to_polynomial().unwrap();
        let again = PolynomialFile::from_polynomial(&p).to_polynomial().unwrap();
        assert_eq!(p, again, "{name}");
    }
}

#[test]
fn example1_right_set_is_complete() {
    let p = fixture("example1.json");
    let set = blockroots::SolventSet::new(Side::Right, example1::r().to_vec());
    let report = is_complete_set(&p, &set, 1e-2).unwrap();
    assert!(report.pairwise_disjoint);
    assert!(report.vandermonde_det.abs() > 0.0);
}
