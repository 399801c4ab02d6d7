mod support;

use blockroots::horner::{horner_iterate, two_stage, IterConfig, TwoStageVariant};
use blockroots::linalg::{eigvals, kron, unvec, vec};
use blockroots::pipeline::{full_factorize, PipelineConfig};
use blockroots::poly::spectrum_distance;
use blockroots::qd::{qd_init, qd_step};
use blockroots::transforms::{
    chain_to_left_solvents, chain_to_right_solvents, coefficient_error, right_solvents_to_chain,
    right_to_left_solvent, TransformConfig,
};
use blockroots::{CMatrix, Matrix, MatrixPolynomial, Side};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=3, 1usize..=3)
}

fn cmat_err(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).frob_norm() / b.frob_norm().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vec_of_product_is_kronecker_action(seed in any::<u64>(), m in 1usize..=4) {
        let mut r = rng(seed);
        let (a, x, b) = (random_matrix(&mut r, m), random_matrix(&mut r, m), random_matrix(&mut r, m));
        let lhs = vec(&(&(&a * &x) * &b));
        let rhs = &kron(&b.transpose(), &a) * &vec(&x);
        prop_assert!((&lhs - &rhs).frob_norm() <= 1e-12 * (1.0 + lhs.frob_norm()));
        prop_assert_eq!(unvec(&vec(&x), m, m), x);
    }

    #[test]
    fn division_identity_holds_at_scalar_points(seed in any::<u64>(), (m, l) in dims(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let mut r = rng(seed);
        let p = random_monic(&mut r, m, l);
        let x = random_matrix(&mut r, m);
        let lam = Complex64::new(re, im);
        for side in [Side::Right, Side::Left] {
            let (q, rem) = p.synthetic_div(&x, side).unwrap();
            let lin = &CMatrix::identity(m).scale(lam) - &CMatrix::from_real(&x);
            let prod = match side {
                Side::Right => &q.eval_scalar(lam) * &lin,
                Side::Left => &lin * &q.eval_scalar(lam),
            };
            let rebuilt = &prod + &CMatrix::from_real(&rem);
            prop_assert!(cmat_err(&rebuilt, &p.eval_scalar(lam)) < 1e-8);
            prop_assert_eq!(q.degree(), l - 1);
            prop_assert!(q.is_monic());
        }
    }

    #[test]
    fn remainder_is_the_evaluation(seed in any::<u64>(), (m, l) in dims()) {
        let mut r = rng(seed);
        let p = random_monic(&mut r, m, l);
        let x = random_matrix(&mut r, m);
        let (_, rem) = p.synthetic_div_right(&x).unwrap();
        prop_assert!((&rem - &p.eval_right(&x)).frob_norm() <= 1e-12 * (1.0 + rem.frob_norm()));
        let (_, rem) = p.synthetic_div_left(&x).unwrap();
        prop_assert!((&rem - &p.eval_left(&x)).frob_norm() <= 1e-12 * (1.0 + rem.frob_norm()));
    }

    #[test]
    fn rightmost_factor_is_a_right_solvent(seed in any::<u64>()) {
        let chain = random_chain(&mut rng(seed));
        let p = chain.reconstruct();
        prop_assert!(p.relative_residual(chain.rightmost(), Side::Right) < 1e-10);
        prop_assert!(p.relative_residual(chain.leftmost(), Side::Left) < 1e-10);
    }

    #[test]
    fn latent_roots_are_the_union_of_factor_spectra(seed in any::<u64>()) {
        let chain = random_chain(&mut rng(seed));
        let roots = chain.reconstruct().latent_roots().unwrap();
        let union: Vec<Complex64> = chain.spectra().unwrap().into_iter().flatten().collect();
        prop_assert!(spectrum_distance(&roots, &union) < 1e-6);
    }

    #[test]
    fn table_sweeps_conserve_the_factor_sum(seed in any::<u64>(), (m, l) in dims()) {
        let p = random_monic(&mut rng(seed), m, l);
        let Ok(mut t) = qd_init(&p) else { return Ok(()) };
        let target = -p.coeff(1);
        for _ in 0..5 {
            let sum = t.q_row.iter().fold(Matrix::zeros(m, m), |acc, q| &acc + q);
            let scale = t.q_row.iter().map(Matrix::frob_norm).fold(1.0, f64::max);
            prop_assert!((&sum - &target).frob_norm() <= 1e-9 * scale);
            match qd_step(&t) {
                Ok(next) => t = next,
                Err(_) => break,
            }
        }
    }

    #[test]
    fn solvent_at_start_is_a_horner_fixed_point(seed in any::<u64>()) {
        let chain = random_chain(&mut rng(seed));
        let p = chain.reconstruct();
        let s = chain.rightmost().clone();
        let (x, trace) = horner_iterate(&p, &IterConfig::starting_at(s.clone())).unwrap();
        prop_assert!(rel_err(&x, &s) < 1e-12);
        prop_assert!(trace.deltas[0] < 1e-10);
    }

    #[test]
    fn factorization_reconstructs_its_input(seed in any::<u64>()) {
        let chain = random_chain(&mut rng(seed));
        let p = chain.reconstruct();
        let f = full_factorize(&p, &PipelineConfig::default()).unwrap();
        prop_assert!(coefficient_error(&p, &f.chain.reconstruct()) < 1e-8);
        for (k, st) in f.stages.iter().enumerate() {
            prop_assert_eq!(st.stage, k + 1);
        }
    }

    #[test]
    fn solvent_conversions_roundtrip(seed in any::<u64>()) {
        let chain = random_chain(&mut rng(seed));
        let p = chain.reconstruct();
        let cfg = TransformConfig::default();
        let right = chain_to_right_solvents(&p, &chain, &cfg).unwrap();
        prop_assert!(right.rank_ok);
        for x in &right.output.solvents {
            prop_assert!(p.relative_residual(x, Side::Right) < 1e-8);
        }
        let back = right_solvents_to_chain(&p, &right.output, &cfg).unwrap().output;
        prop_assert!(coefficient_error(&p, &back.reconstruct()) < 1e-8);
        let left = chain_to_left_solvents(&p, &chain, &cfg).unwrap().output;
        for x in &left.solvents {
            prop_assert!(p.relative_residual(x, Side::Left) < 1e-8);
        }
    }

    #[test]
    fn right_to_left_conversion_is_a_similarity(seed in any::<u64>()) {
        let chain = random_chain(&mut rng(seed));
        let p = chain.reconstruct();
        let r = chain.rightmost();
        let Ok(res) = right_to_left_solvent(&p, r, &TransformConfig::default()) else { return Ok(()) };
        prop_assert!(p.relative_residual(&res.output, Side::Left) < 1e-8);
        prop_assert!(spectrum_distance(&eigvals(&res.output).unwrap(), &eigvals(r).unwrap()) < 1e-8);
    }

    #[test]
    fn scalar_horner_step_matches_the_scalar_formula(c in prop::collection::vec(-5.0f64..5.0, 2..5), x in 0.5f64..3.0) {
        let mut coeffs = vec![1.0];
        coeffs.extend(c);
        let p = scalar_poly(&coeffs);
        let a_l = *coeffs.last().unwrap();
        let px: f64 = coeffs.iter().fold(0.0, |acc, a| acc * x + a);
        prop_assume!(a_l.abs() > 0.1 && (a_l - px).abs() > 0.1);
        prop_assert_eq!(p.eval_right(&Matrix::from_rows(&[[x]]))[(0, 0)], px);
        let cfg = IterConfig { max_iterations: 1, ..IterConfig::starting_at(Matrix::from_rows(&[[x]])) };
        let trace = match horner_iterate(&p, &cfg) {
            Ok((_, t)) => t,
            Err(blockroots::Error::NoConvergence { trace, .. }) => *trace,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let next = trace.iterates[1][(0, 0)];
        let want = x * a_l / (a_l - px);
        prop_assert!((next - want).abs() <= 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn scalar_two_stage_matches_newton(c in prop::collection::vec(-5.0f64..5.0, 2..5), x in 0.5f64..3.0) {
        let mut coeffs = vec![1.0];
        coeffs.extend(c);
        let p = scalar_poly(&coeffs);
        let px: f64 = coeffs.iter().fold(0.0, |acc, a| acc * x + a);
        let n = coeffs.len() - 1;
        let dpx: f64 = coeffs[..n].iter().enumerate().fold(0.0, |acc, (i, a)| acc * x + a * (n - i) as f64);
        prop_assume!(dpx.abs() > 0.1 && px.abs() > 1e-6);
        let cfg = IterConfig { max_iterations: 1, ..IterConfig::starting_at(Matrix::from_rows(&[[x]])) };
        for variant in [TwoStageVariant::QChain, TwoStageVariant::DeltaForm] {
            let next = match two_stage(&p, &cfg, variant) {
                Ok((_, t)) => t.iterates[1][(0, 0)],
                Err(blockroots::Error::NoConvergence { trace, .. }) => trace.iterates[1][(0, 0)],
                Err(_) => continue,
            };
            let want = x - px / dpx;
            prop_assert!((next - want).abs() <= 1e-12 * want.abs().max(1.0), "{next} vs {want}");
        }
    }

    #[test]
    fn scalar_evaluation_sides_agree(c in prop::collection::vec(-5.0f64..5.0, 1..6), x in -3.0f64..3.0) {
        let mut coeffs = vec![1.0];
        coeffs.extend(c);
        let p: MatrixPolynomial = scalar_poly(&coeffs);
        let xm = Matrix::from_rows(&[[x]]);
        prop_assert_eq!(p.eval_right(&xm), p.eval_left(&xm));
    }
}
