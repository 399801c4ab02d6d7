//! Scalar table sweeps checked against an exact rational recurrence.

mod support;

use blockroots::qd::{qd_init, qd_step};
use num_bigint::BigInt;
use num_rational::BigRational;
use support::*;

type Q = BigRational;

fn q(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

/// Exact progressive sweeps for a monic integer polynomial, leading first.
fn exact_rows(coeffs: &[i64], sweeps: usize) -> Vec<Vec<Q>> {
    let l = coeffs.len() - 1;
    let mut qs = vec![q(0); l];
    qs[0] = -q(coeffs[1]);
    let mut es = vec![q(0); l + 1];
    for k in 1..l {
        es[k] = q(coeffs[k + 1]) / q(coeffs[k]);
    }
    let mut rows = vec![qs.clone()];
    for _ in 0..sweeps {
        let next: Vec<Q> = (0..l).map(|i| &qs[i] + &es[i + 1] - &es[i]).collect();
        for k in 1..l {
            es[k] = &next[k] * &es[k] / &next[k - 1];
        }
        qs = next;
        rows.push(qs.clone());
    }
    rows
}

fn to_f64(v: &Q) -> f64 {
    let (n, d) = (v.numer().to_string(), v.denom().to_string());
    n.parse::<f64>().unwrap() / d.parse::<f64>().unwrap()
}

fn check(coeffs: &[i64], sweeps: usize) {
    let exact = exact_rows(coeffs, sweeps);
    let p = scalar_poly(&coeffs.iter().map(|&c| c as f64).collect::<Vec<_>>());
    let mut t = qd_init(&p).unwrap();
    for (s, row) in exact.iter().enumerate() {
        for (k, want) in row.iter().enumerate() {
            let got = t.q_row[k][(0, 0)];
            let want = to_f64(want);
            assert!(
                (got - want).abs() <= 1e-10 * want.abs().max(1.0),
                "sweep {s} q_{}: {got} vs {want}",
                k + 1
            );
        }
        if s < sweeps {
            t = qd_step(&t).unwrap();
        }
    }
}

#[test]
fn quadratic_with_roots_one_and_two() {
    check(&[1, -3, 2], 12);
}

#[test]
fn cubic_with_roots_one_two_four() {
    check(&[1, -7, 14, -8], 12);
}

#[test]
fn quartic_with_mixed_sign_roots() {
    // (x - 1)(x + 3)(x - 6)(x + 10)
    check(&[1, 6, -55, -132, 180], 10);
}

#[test]
fn first_sweeps_of_the_quadratic_are_exact_fractions() {
    let rows = exact_rows(&[1, -3, 2], 2);
    assert_eq!(rows[1], vec![q(7) / q(3), q(2) / q(3)]);
    assert_eq!(rows[2][0], q(45) / q(21));
}
