//! Block quotient-difference iteration.
//!
//! The table is started from `Q = [-A_1, O, ..., O]` and
//! `E_k = A_{k+1} A_k^{-1}` and swept in progressive form
//!
//! ```text
//! Q_k' = Q_k + E_k - E_{k-1}          (old E, E_0 = E_l = O)
//! E_k' = Q_{k+1}' E_k (Q_k')^{-1}     (new Q)
//! ```
//!
//! When the latent roots split into `l` groups of strictly decreasing
//! modulus, the E blocks vanish and `Q_1, ..., Q_l` converge to spectral
//! factors in order of decreasing dominance. `Q_1` carries the largest
//! roots and is the rightmost factor: `A(λ) = (λI - Q_l) ... (λI - Q_1)`.
//! The sum `Q_1 + ... + Q_l = -A_1` is preserved by every sweep.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{Lu, Matrix, DEFAULT_PIVOT_TOL};
use crate::poly::{MatrixPolynomial, SpectralFactorChain};

#[derive(Debug, Clone, PartialEq)]
pub struct QdConfig {
    pub max_iterations: usize,
    /// Stop once `max_k ‖E_k‖_F / ‖Q_k‖_F` falls below this.
    pub e_tol: f64,
    /// Give up when the metric has not reached a new minimum for this many
    /// consecutive sweeps.
    pub stall_window: usize,
    /// On a singular pivot, shift it by `1e-8·‖Q‖_F·I` and carry on.
    pub jitter_on_singular: bool,
}

impl Default for QdConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            e_tol: 1e-10,
            stall_window: 20,
            jitter_on_singular: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QdTableau {
    pub q_row: Vec<Matrix>,
    /// `E_0, ..., E_l`; both ends stay zero.
    pub e_row: Vec<Matrix>,
    pub sweep: usize,
}

impl QdTableau {
    pub fn degree(&self) -> usize {
        self.q_row.len()
    }

    /// `‖E_k‖_F` for the interior blocks `k = 1..l-1`.
    pub fn e_norms(&self) -> Vec<f64> {
        let l = self.degree();
        (1..l).map(|k| self.e_row[k].frob_norm()).collect()
    }

    /// `max_k ‖E_k‖_F / ‖Q_k‖_F`, zero for a single block.
    pub fn max_relative_e(&self) -> f64 {
        let l = self.degree();
        (1..l)
            .map(|k| {
                let q = self.q_row[k - 1].frob_norm();
                let e = self.e_row[k].frob_norm();
                if q > 0.0 {
                    e / q
                } else if e == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn chain(&self) -> SpectralFactorChain {
        SpectralFactorChain::new(self.q_row.clone()).expect("tableau has at least one block")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QdSweep {
    pub sweep: usize,
    pub e_norms: Vec<f64>,
    pub max_relative_e: f64,
    /// Percent change of the Q row in Frobenius norm.
    pub q_change_pct: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct QdTrace {
    pub sweeps: Vec<QdSweep>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QdStop {
    Converged,
    BudgetExhausted,
    Stalled,
}

#[derive(Debug, Clone)]
pub struct QdOutcome {
    pub tableau: QdTableau,
    pub trace: QdTrace,
    pub stop: QdStop,
}

impl QdOutcome {
    pub fn chain(&self) -> SpectralFactorChain {
        self.tableau.chain()
    }

    pub fn converged(&self) -> bool {
        self.stop == QdStop::Converged
    }
}

pub fn qd_init(p: &MatrixPolynomial) -> Result<QdTableau> {
    p.require_monic()?;
    let (m, l) = (p.order(), p.degree());
    if l == 0 {
        return Err(Error::DegreeTooLow { degree: 0 });
    }
    let mut q_row = vec![Matrix::zeros(m, m); l];
    q_row[0] = -p.coeff(1);
    let mut e_row = vec![Matrix::zeros(m, m); l + 1];
    for k in 1..l {
        let ak = p.coeff(k);
        let inv = Lu::new(ak)
            .and_then(|lu| lu.inverse())
            .map_err(|_| Error::SingularCoefficient(k))?;
        e_row[k] = p.coeff(k + 1) * &inv;
    }
    Ok(QdTableau {
        q_row,
        e_row,
        sweep: 0,
    })
}

/// One progressive sweep. Fails with [`Error::SingularPivot`] when a new
/// `Q_k` that must be inverted is singular.
pub fn qd_step(t: &QdTableau) -> Result<QdTableau> {
    step(t, false)
}

fn step(t: &QdTableau, jitter: bool) -> Result<QdTableau> {
    let l = t.degree();
    let sweep = t.sweep + 1;
    let q_row: Vec<Matrix> = (0..l)
        .map(|i| &(&t.q_row[i] + &t.e_row[i + 1]) - &t.e_row[i])
        .collect();
    let mut q_row = q_row;
    let mut e_row = t.e_row.clone();
    for k in 1..l {
        let inv = match Lu::new(&q_row[k - 1]) {
            Ok(lu) => lu.inverse()?,
            Err(_) if jitter => {
                let shift = 1e-8 * q_row[k - 1].frob_norm().max(1.0);
                log::warn!("sweep {sweep}: pivot Q_{k} singular, shifting by {shift:e}");
                let n = q_row[k - 1].rows();
                q_row[k - 1] += &Matrix::scalar(n, shift);
                Lu::with_relative_tol(&q_row[k - 1], DEFAULT_PIVOT_TOL)
                    .and_then(|lu| lu.inverse())
                    .map_err(|_| Error::SingularPivot { sweep, block: k })?
            }
            Err(_) => return Err(Error::SingularPivot { sweep, block: k }),
        };
        e_row[k] = &(&q_row[k] * &t.e_row[k]) * &inv;
    }
    Ok(QdTableau { q_row, e_row, sweep })
}

/// Runs sweeps until convergence, stall or budget exhaustion and returns
/// the final table either way. Only singular pivots and bad input are
/// errors.
pub fn qd_iterate(p: &MatrixPolynomial, cfg: &QdConfig) -> Result<QdOutcome> {
    let mut t = qd_init(p)?;
    let mut trace = QdTrace::default();
    let mut best = t.max_relative_e();
    let mut since_best = 0usize;
    if best <= cfg.e_tol {
        return Ok(QdOutcome {
            tableau: t,
            trace,
            stop: QdStop::Converged,
        });
    }
    let stop = loop {
        if t.sweep >= cfg.max_iterations {
            break QdStop::BudgetExhausted;
        }
        let next = step(&t, cfg.jitter_on_singular)?;
        let before: f64 = t.q_row.iter().map(|q| q.frob_norm().powi(2)).sum::<f64>().sqrt();
        let diff: f64 = next
            .q_row
            .iter()
            .zip(&t.q_row)
            .map(|(a, b)| (a - b).frob_norm().powi(2))
            .sum::<f64>()
            .sqrt();
        t = next;
        let metric = t.max_relative_e();
        trace.sweeps.push(QdSweep {
            sweep: t.sweep,
            e_norms: t.e_norms(),
            max_relative_e: metric,
            q_change_pct: if before > 0.0 { 100.0 * diff / before } else { f64::INFINITY },
        });
        if !metric.is_finite() {
            break QdStop::Stalled;
        }
        if metric <= cfg.e_tol {
            break QdStop::Converged;
        }
        if metric < best {
            best = metric;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.stall_window {
                break QdStop::Stalled;
            }
        }
    };
    Ok(QdOutcome {
        tableau: t,
        trace,
        stop,
    })
}

/// Runs the iteration to convergence and returns the factor chain, rightmost
/// (most dominant) first.
pub fn qd_run(p: &MatrixPolynomial, cfg: &QdConfig) -> Result<(SpectralFactorChain, QdTrace)> {
    let out = qd_iterate(p, cfg)?;
    if out.converged() {
        Ok((out.chain(), out.trace))
    } else {
        Err(Error::QdNoConvergence {
            sweeps: out.tableau.sweep,
            trace: Box::new(out.trace),
        })
    }
}

/// Upper block-bidiagonal factor `R_0` of the block LR decomposition of the
/// first-column companion: diagonal `-A_1, -A_2 A_1^{-1}, ..., -A_l A_{l-1}^{-1}`
/// and identities on the superdiagonal. Its diagonal equals the starting Q
/// row minus the starting E row.
pub fn lr_decompose_c3(p: &MatrixPolynomial) -> Result<Matrix> {
    let t = qd_init(p)?;
    let (m, l) = (p.order(), p.degree());
    let mut r = Matrix::zeros(m * l, m * l);
    let eye = Matrix::identity(m);
    for k in 0..l {
        r.set_block(k * m, k * m, &(&t.q_row[k] - &t.e_row[k]));
        if k + 1 < l {
            r.set_block(k * m, (k + 1) * m, &eye);
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(coeffs: &[f64]) -> MatrixPolynomial {
        MatrixPolynomial::new(coeffs.iter().map(|&c| Matrix::from_rows(&[[c]])).collect()).unwrap()
    }

    #[test]
    fn init_of_scalar_quadratic() {
        let t = qd_init(&scalar(&[1.0, -3.0, 2.0])).unwrap();
        assert_eq!(t.q_row[0][(0, 0)], 3.0);
        assert_eq!(t.q_row[1][(0, 0)], 0.0);
        assert!((t.e_row[1][(0, 0)] + 2.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn first_sweeps_of_scalar_quadratic() {
        let t1 = qd_step(&qd_init(&scalar(&[1.0, -3.0, 2.0])).unwrap()).unwrap();
        assert!((t1.q_row[0][(0, 0)] - 7.0 / 3.0).abs() < 1e-15);
        assert!((t1.q_row[1][(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
        assert!((t1.e_row[1][(0, 0)] + 4.0 / 21.0).abs() < 1e-15);
        let t2 = qd_step(&t1).unwrap();
        assert!((t2.q_row[0][(0, 0)] - 45.0 / 21.0).abs() < 1e-14);
        assert!((t2.q_row[1][(0, 0)] - 18.0 / 21.0).abs() < 1e-14);
    }

    #[test]
    fn scalar_quadratic_converges_in_dominance_order() {
        let (chain, _) = qd_run(&scalar(&[1.0, -3.0, 2.0]), &QdConfig::default()).unwrap();
        assert!((chain.factors()[0][(0, 0)] - 2.0).abs() < 1e-9);
        assert!((chain.factors()[1][(0, 0)] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_middle_coefficient_is_rejected() {
        assert!(matches!(
            qd_init(&scalar(&[1.0, 0.0, 1.0])),
            Err(Error::SingularCoefficient(1))
        ));
    }

    #[test]
    fn equal_modulus_roots_do_not_converge() {
        // λ² - 2λ + 5 has roots 1 ± 2i.
        let r = qd_run(&scalar(&[1.0, -2.0, 5.0]), &QdConfig::default());
        assert!(matches!(
            r,
            Err(Error::QdNoConvergence { .. }) | Err(Error::SingularPivot { .. })
        ));
    }

    #[test]
    fn lr_factor_of_scalar_quadratic() {
        let r = lr_decompose_c3(&scalar(&[1.0, -3.0, 2.0])).unwrap();
        let expected = Matrix::from_rows(&[[3.0, 1.0], [0.0, 2.0 / 3.0]]);
        assert!((&r - &expected).frob_norm() < 1e-15);
    }

    #[test]
    fn lr_factor_reproduces_companion_for_quadratic() {
        let a1 = Matrix::from_rows(&[[2.0, 1.0], [0.5, 3.0]]);
        let a2 = Matrix::from_rows(&[[1.0, -1.0], [2.0, 0.5]]);
        let p = MatrixPolynomial::monic(vec![a1.clone(), a2.clone()]).unwrap();
        let r = lr_decompose_c3(&p).unwrap();
        let mut lower = Matrix::identity(4);
        lower.set_block(2, 0, &(&a2 * &a1.inverse().unwrap()));
        let c3 = p.companion_c3().unwrap();
        assert!((&(&lower * &r) - &c3).frob_norm() < 1e-13);
    }
}
