//! Shared helpers for the integration tests: fixture loading, printed
//! reference matrices and comparison utilities.
#![allow(dead_code)]

use std::path::PathBuf;

use blockroots::decoupler::MfdSystem;
use blockroots::io::{read_json, MfdFile, PolynomialFile};
use blockroots::{Matrix, MatrixPolynomial, SpectralFactorChain};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn fixture(name: &str) -> MatrixPolynomial {
    read_json::<PolynomialFile>(&fixture_path(name))
        .and_then(|f| f.to_polynomial())
        .unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

pub fn fixture_guess(name: &str) -> Matrix {
    read_json::<PolynomialFile>(&fixture_path(name))
        .unwrap()
        .initial_guess()
        .unwrap()
        .expect("fixture has an initial guess")
}

pub fn mfd_fixture(name: &str) -> MfdSystem {
    let (n, d) = read_json::<MfdFile>(&fixture_path(name))
        .and_then(|f| f.to_polynomials())
        .unwrap();
    MfdSystem::new(n, d).unwrap()
}

pub fn m2(a: f64, b: f64, c: f64, d: f64) -> Matrix {
    Matrix::from_rows(&[[a, b], [c, d]])
}

/// `‖a - b‖_F / ‖b‖_F`
pub fn rel_err(a: &Matrix, reference: &Matrix) -> f64 {
    (a - reference).frob_norm() / reference.frob_norm()
}

pub fn scalar_poly(coeffs: &[f64]) -> MatrixPolynomial {
    MatrixPolynomial::new(coeffs.iter().map(|&c| Matrix::from_rows(&[[c]])).collect()).unwrap()
}

/// Monic scalar polynomial with the given roots, leading coefficient first.
pub fn poly_from_roots(roots: &[f64]) -> Vec<f64> {
    let mut c = vec![1.0];
    for r in roots {
        let mut next = c.clone();
        next.push(0.0);
        for i in 1..next.len() {
            next[i] -= r * c[i - 1];
        }
        c = next;
    }
    c
}

pub mod example1 {
    use super::m2;
    use blockroots::Matrix;

    pub fn s() -> [Matrix; 3] {
        [
            m2(3.0, 2.0, -90.0, -15.0),
            m2(-8.2908, 0.7118, -16.84, 8.1248),
            m2(32.4434, -3.5284, 286.6226, -31.2773),
        ]
    }

    pub fn r() -> [Matrix; 3] {
        [
            m2(0.3637, -4.5495, -0.8183, 0.8024),
            m2(7.2354, 1.4024, 1.2995, -7.4015),
            m2(3.0, 2.0, -90.0, -15.0),
        ]
    }

    pub fn l() -> [Matrix; 3] {
        [
            m2(32.443, -3.5284, 286.622, -31.2773),
            m2(25.1323, -2.8370, 204.5931, -25.2983),
            m2(21.0123, -4.6531, 178.0910, -33.0123),
        ]
    }
}

pub mod example3 {
    use super::m2;
    use blockroots::Matrix;

    pub fn w() -> Matrix {
        m2(-7.1230, -6.3246, 5.9279, 5.1230)
    }
}

pub mod gas_turbine {
    use super::m2;
    use blockroots::Matrix;

    pub fn z() -> [Matrix; 2] {
        [
            m2(24.7235, 23.1394, -27.4494, -24.9281),
            m2(-18.5711, -16.0841, 16.1166, 13.4353),
        ]
    }

    /// Printed `D_d2, D_d1, D_d0`.
    pub fn dd() -> [Matrix; 3] {
        [
            m2(-13.5596, -14.6249, 21.7809, 21.8999),
            m2(-126.4282, -121.5061, 161.6710, 152.4741),
            m2(-178.9732, -164.0512, 223.2851, 202.6227),
        ]
    }
}

pub fn random_matrix(rng: &mut ChaCha8Rng, m: usize) -> Matrix {
    let mut x = Matrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            x[(i, j)] = rng.gen_range(-1.0..1.0);
        }
    }
    x
}

/// Factor with eigenvalue moduli in `[base, 1.2·base]`, built from real
/// diagonal entries and rotation blocks, then conjugated by a random
/// well-conditioned matrix.
pub fn banded_factor(rng: &mut ChaCha8Rng, m: usize, base: f64) -> Matrix {
    let mut core = Matrix::zeros(m, m);
    let mut i = 0;
    while i < m {
        let r = base * rng.gen_range(1.0..1.2);
        if i + 1 < m && rng.gen_bool(0.5) {
            let t: f64 = rng.gen_range(0.3..2.8);
            core[(i, i)] = r * t.cos();
            core[(i + 1, i + 1)] = r * t.cos();
            core[(i, i + 1)] = -r * t.sin();
            core[(i + 1, i)] = r * t.sin();
            i += 2;
        } else {
            core[(i, i)] = if rng.gen_bool(0.5) { r } else { -r };
            i += 1;
        }
    }
    let t = &Matrix::identity(m) + &random_matrix(rng, m).scale(0.4);
    t.solve_right(&(&t * &core)).unwrap()
}

pub fn random_chain(rng: &mut ChaCha8Rng) -> SpectralFactorChain {
    let m = rng.gen_range(1..=3);
    let l = rng.gen_range(1..=3);
    let mut base = rng.gen_range(0.5..2.0);
    let mut bands = Vec::new();
    for _ in 0..l {
        bands.push(base);
        base *= 1.2 * 1.5 * rng.gen_range(1.0..1.3);
    }
    // Arbitrary (not dominance) order in the product.
    let mut factors: Vec<Matrix> = bands.iter().map(|b| banded_factor(rng, m, *b)).collect();
    for i in (1..factors.len()).rev() {
        let j = rng.gen_range(0..=i);
        factors.swap(i, j);
    }
    SpectralFactorChain::new(factors).unwrap()
}

pub fn random_monic(rng: &mut ChaCha8Rng, m: usize, l: usize) -> MatrixPolynomial {
    MatrixPolynomial::monic((0..l).map(|_| random_matrix(rng, m)).collect()).unwrap()
}

