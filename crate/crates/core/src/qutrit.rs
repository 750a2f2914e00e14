//! Three-level (qutrit) relaxation: closed-form rate-equation model and a
//! Levenberg-Marquardt fitter for the decay rates.
//!
//! The Markovian model for a qutrit prepared in |2> is
//!   dP2/dt = -(Γ21+Γ20) P2
//!   dP1/dt = Γ21 P2 - Γ10 P1
//!   dP0/dt = Γ20 P2 + Γ10 P1
//! with P2(0) = 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::solve_real;

/// Relaxation rates in 1/µs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct QutritRates {
    pub gamma_10: f64,
    pub gamma_21: f64,
    pub gamma_20: f64,
}

impl QutritRates {
    pub fn new(gamma_10: f64, gamma_21: f64, gamma_20: f64) -> Result<Self> {
        for g in [gamma_10, gamma_21, gamma_20] {
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "rates must be positive and finite, got {g}"
                )));
            }
        }
        Ok(QutritRates {
            gamma_10,
            gamma_21,
            gamma_20,
        })
    }

    /// Rates from inverse lifetimes in µs (the usual reporting unit).
    pub fn from_inverse_us(t10: f64, t21: f64, t20: f64) -> Result<Self> {
        Self::new(1.0 / t10, 1.0 / t21, 1.0 / t20)
    }

    pub fn inverse_us(&self) -> (f64, f64, f64) {
        (
            1.0 / self.gamma_10,
            1.0 / self.gamma_21,
            1.0 / self.gamma_20,
        )
    }
}

/// Measured relaxation trace: populations (P0, P1, P2) per delay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QutritTrace {
    pub delays_us: Vec<f64>,
    pub populations: Vec<[f64; 3]>,
}

impl QutritTrace {
    pub fn validate(&self) -> Result<()> {
        if self.delays_us.len() != self.populations.len() {
            return Err(Error::DimensionMismatch {
                expected: self.delays_us.len(),
                got: self.populations.len(),
            });
        }
        for p in &self.populations {
            let sum: f64 = p.iter().sum();
            if (sum - 1.0).abs() > 1e-9 || p.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(Error::InvalidState(format!(
                    "population triple {p:?} is not a distribution"
                )));
            }
        }
        Ok(())
    }

    /// Noise-free synthetic trace from known rates.
    pub fn synthetic(rates: &QutritRates, delays_us: &[f64]) -> Self {
        let populations = delays_us
            .iter()
            .map(|&t| {
                let (p0, p1, p2) = qutrit_populations(t, rates);
                [p0, p1, p2]
            })
            .collect();
        QutritTrace {
            delays_us: delays_us.to_vec(),
            populations,
        }
    }
}

/// `(e^{a t} - 1) / a`, stable as `a -> 0`.
fn expm1_over(a: f64, t: f64) -> f64 {
    let x = a * t;
    if x.abs() < 1e-8 {
        t * (1.0 + x / 2.0 + x * x / 6.0)
    } else {
        x.exp_m1() / a
    }
}

/// Closed-form populations at time `t` (µs) for the initial state |2>.
/// The degenerate case Γ21+Γ20 = Γ10 uses the limit expression.
pub fn qutrit_populations(t: f64, rates: &QutritRates) -> (f64, f64, f64) {
    assert!(t >= 0.0, "time must be non-negative");
    let g2 = rates.gamma_21 + rates.gamma_20;
    let g10 = rates.gamma_10;
    let p2 = (-g2 * t).exp();
    // P1(t) = Γ21 e^{-Γ10 t} * (e^{(Γ10-Γ2)t} - 1)/(Γ10-Γ2)
    let p1 = rates.gamma_21 * (-g10 * t).exp() * expm1_over(g10 - g2, t);
    let p0 = (1.0 - p1 - p2).clamp(0.0, 1.0);
    (p0, p1.max(0.0), p2)
}

/// Fit result with covariance-derived one-sigma errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QutritFit {
    pub rates: QutritRates,
    pub stderr: [f64; 3],
    pub residual_sum_squares: f64,
    pub iterations: usize,
}

fn residuals(trace: &QutritTrace, rates: &QutritRates) -> Vec<f64> {
    let mut r = Vec::with_capacity(trace.delays_us.len() * 3);
    for (&t, p) in trace.delays_us.iter().zip(&trace.populations) {
        let (m0, m1, m2) = qutrit_populations(t, rates);
        r.push(p[0] - m0);
        r.push(p[1] - m1);
        r.push(p[2] - m2);
    }
    r
}

/// Initial guess from the tail slopes of P2 and P1.
fn initial_guess(trace: &QutritTrace) -> QutritRates {
    let mut g2 = 0.02;
    // Log-linear fit of P2 over points with appreciable population.
    let pts: Vec<(f64, f64)> = trace
        .delays_us
        .iter()
        .zip(&trace.populations)
        .filter(|(_, p)| p[2] > 0.02)
        .map(|(&t, p)| (t, p[2].ln()))
        .collect();
    if pts.len() >= 2 {
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let denom = n * sxx - sx * sx;
        if denom.abs() > 1e-12 {
            let slope = (n * sxy - sx * sy) / denom;
            if slope < -1e-9 {
                g2 = -slope;
            }
        }
    }
    // Early-time rise of P1: dP1/dt(0) = Γ21.
    let g21 = trace
        .delays_us
        .iter()
        .zip(&trace.populations)
        .find(|(&t, p)| t > 0.0 && p[1] > 1e-6)
        .map(|(&t, p)| (p[1] / t).min(g2 * 0.95))
        .unwrap_or(g2 / 2.0)
        .max(g2 * 0.05);
    let g20 = (g2 - g21).max(g2 * 0.05);
    QutritRates {
        gamma_10: g2 * 0.8,
        gamma_21: g21,
        gamma_20: g20,
    }
}

/// Nonlinear least squares over (Γ10, Γ21, Γ20), Levenberg-Marquardt in
/// log-rate space so positivity is built in. Requires at least six distinct
/// delays.
pub fn fit_qutrit_rates(trace: &QutritTrace) -> Result<QutritFit> {
    trace.validate()?;
    let mut distinct: Vec<f64> = trace.delays_us.clone();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if distinct.len() < 6 {
        return Err(Error::InvalidArgument(format!(
            "need at least 6 distinct delays, got {}",
            distinct.len()
        )));
    }

    let guess = initial_guess(trace);
    let mut u = [
        guess.gamma_10.ln(),
        guess.gamma_21.ln(),
        guess.gamma_20.ln(),
    ];
    let rates_of = |u: &[f64; 3]| QutritRates {
        gamma_10: u[0].exp(),
        gamma_21: u[1].exp(),
        gamma_20: u[2].exp(),
    };

    let m = trace.delays_us.len() * 3;
    let mut lambda = 1e-3;
    let mut r = residuals(trace, &rates_of(&u));
    let mut ssr: f64 = r.iter().map(|x| x * x).sum();
    let mut iterations = 0;
    let max_iterations = 300;
    let mut converged = false;

    while iterations < max_iterations {
        iterations += 1;
        // Numeric Jacobian in log-rate space.
        let mut jac = vec![[0.0; 3]; m];
        let h = 1e-6;
        for k in 0..3 {
            let mut up = u;
            up[k] += h;
            let mut dn = u;
            dn[k] -= h;
            let rp = residuals(trace, &rates_of(&up));
            let rn = residuals(trace, &rates_of(&dn));
            for i in 0..m {
                jac[i][k] = (rp[i] - rn[i]) / (2.0 * h);
            }
        }
        // Normal equations with LM damping.
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for i in 0..m {
            for a in 0..3 {
                jtr[a] += jac[i][a] * r[i];
                for b in 0..3 {
                    jtj[a][b] += jac[i][a] * jac[i][b];
                }
            }
        }
        let grad_norm = jtr.iter().map(|x| x * x).sum::<f64>().sqrt();
        if grad_norm < 1e-12 && ssr < 1e-18 {
            converged = true;
            break;
        }
        let mut a = vec![vec![0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] = jtj[i][j];
            }
            a[i][i] += lambda * jtj[i][i].max(1e-12);
        }
        let step = match solve_real(a, jtr.to_vec()) {
            Ok(s) => s,
            Err(_) => {
                return Err(Error::NonConvergence(format!(
                    "singular normal equations at iteration {iterations}, residual {ssr:.3e}"
                )))
            }
        };
        // Gauss-Newton direction is -(JᵀJ)⁻¹ Jᵀr.
        let trial = [u[0] - step[0], u[1] - step[1], u[2] - step[2]];
        if trial.iter().any(|&x| !(-25.0..25.0).contains(&x)) {
            return Err(Error::NonConvergence(format!(
                "rates diverged (log-rate {trial:?}), residual {ssr:.3e}; \
                 the trace may not identify all three rates"
            )));
        }
        let r_trial = residuals(trace, &rates_of(&trial));
        let ssr_trial: f64 = r_trial.iter().map(|x| x * x).sum();
        if ssr_trial < ssr {
            let improvement = (ssr - ssr_trial) / ssr.max(1e-300);
            u = trial;
            r = r_trial;
            ssr = ssr_trial;
            lambda = (lambda * 0.3).max(1e-12);
            if improvement < 1e-12 || ssr < 1e-20 {
                converged = true;
                break;
            }
        } else {
            lambda *= 2.5;
            if lambda > 1e12 {
                converged = ssr < 1e-6 * m as f64;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::NonConvergence(format!(
            "no convergence after {iterations} iterations, residual {ssr:.3e}"
        )));
    }

    let rates = rates_of(&u);
    // Covariance of the log-rates from the final Jacobian.
    let mut jac = vec![[0.0; 3]; m];
    let h = 1e-6;
    for k in 0..3 {
        let mut up = u;
        up[k] += h;
        let mut dn = u;
        dn[k] -= h;
        let rp = residuals(trace, &rates_of(&up));
        let rn = residuals(trace, &rates_of(&dn));
        for i in 0..m {
            jac[i][k] = (rp[i] - rn[i]) / (2.0 * h);
        }
    }
    let mut jtj = vec![vec![0.0; 3]; 3];
    for i in 0..m {
        for a in 0..3 {
            for b in 0..3 {
                jtj[a][b] += jac[i][a] * jac[i][b];
            }
        }
    }
    let dof = (m as f64 - 3.0).max(1.0);
    let sigma2 = ssr / dof;
    let mut stderr = [0.0; 3];
    for k in 0..3 {
        // k-th diagonal of (JᵀJ)^(-1) via unit solves.
        let mut e = vec![0.0; 3];
        e[k] = 1.0;
        if let Ok(col) = solve_real(jtj.clone(), e) {
            let var_log = (sigma2 * col[k]).max(0.0);
            // Delta method back to the rate scale.
            let g = [rates.gamma_10, rates.gamma_21, rates.gamma_20][k];
            stderr[k] = g * var_log.sqrt();
        } else {
            stderr[k] = f64::INFINITY;
        }
    }

    Ok(QutritFit {
        rates,
        stderr,
        residual_sum_squares: ssr,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_rates() -> QutritRates {
        QutritRates::from_inverse_us(44.4, 35.0, 69.2).unwrap()
    }

    #[test]
    fn initial_condition_and_fixed_point() {
        let rates = reference_rates();
        let (p0, p1, p2) = qutrit_populations(0.0, &rates);
        assert!((p0, p1, p2) == (0.0, 0.0, 1.0));
        let (p0, p1, p2) = qutrit_populations(1e5, &rates);
        assert!((p0 - 1.0).abs() < 1e-9);
        assert!(p1 < 1e-9 && p2 < 1e-9);
    }

    #[test]
    fn p2_matches_direct_exponential() {
        let rates = reference_rates();
        let t = 35.0;
        let (_, _, p2) = qutrit_populations(t, &rates);
        let expected = (-(1.0 / 35.0 + 1.0 / 69.2) * t).exp();
        assert!((p2 - expected).abs() < 1e-12);
    }

    #[test]
    fn populations_conserve_probability() {
        let rates = reference_rates();
        for i in 0..200 {
            let t = i as f64 * 1.7;
            let (p0, p1, p2) = qutrit_populations(t, &rates);
            assert!((p0 + p1 + p2 - 1.0).abs() < 1e-9);
            assert!(p0 >= 0.0 && p1 >= 0.0 && p2 >= 0.0);
        }
    }

    #[test]
    fn closed_form_agrees_with_rk4_integrator() {
        // Independent oracle: integrate the rate equations numerically.
        let rates = reference_rates();
        let mut p = [0.0f64, 0.0, 1.0];
        let dt = 1e-4;
        let deriv = |p: &[f64; 3]| {
            let g2 = rates.gamma_21 + rates.gamma_20;
            [
                rates.gamma_20 * p[2] + rates.gamma_10 * p[1],
                rates.gamma_21 * p[2] - rates.gamma_10 * p[1],
                -g2 * p[2],
            ]
        };
        let mut t = 0.0;
        let t_end = 50.0;
        let steps = (t_end / dt) as usize;
        for _ in 0..steps {
            let k1 = deriv(&p);
            let p2arr = [
                p[0] + 0.5 * dt * k1[0],
                p[1] + 0.5 * dt * k1[1],
                p[2] + 0.5 * dt * k1[2],
            ];
            let k2 = deriv(&p2arr);
            let p3 = [
                p[0] + 0.5 * dt * k2[0],
                p[1] + 0.5 * dt * k2[1],
                p[2] + 0.5 * dt * k2[2],
            ];
            let k3 = deriv(&p3);
            let p4 = [p[0] + dt * k3[0], p[1] + dt * k3[1], p[2] + dt * k3[2]];
            let k4 = deriv(&p4);
            for i in 0..3 {
                p[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t += dt;
        }
        let (c0, c1, c2) = qutrit_populations(t, &rates);
        assert!((p[0] - c0).abs() < 1e-8);
        assert!((p[1] - c1).abs() < 1e-8);
        assert!((p[2] - c2).abs() < 1e-8);
    }

    #[test]
    fn degenerate_rates_use_limit_expression() {
        // Γ10 exactly equal to Γ21 + Γ20.
        let rates = QutritRates::new(0.05, 0.03, 0.02).unwrap();
        let (p0, p1, p2) = qutrit_populations(10.0, &rates);
        assert!(p1.is_finite() && p0.is_finite() && p2.is_finite());
        // Limit form: P1 = Γ21 t e^{-Γ2 t}.
        let expected = 0.03 * 10.0 * (-0.05f64 * 10.0).exp();
        assert!((p1 - expected).abs() < 1e-9);
    }

    #[test]
    fn noiseless_fit_recovers_reference_rates_within_one_percent() {
        let rates = reference_rates();
        let delays: Vec<f64> = (0..40).map(|i| i as f64 * 5.0 + 0.5).collect();
        let trace = QutritTrace::synthetic(&rates, &delays);
        let fit = fit_qutrit_rates(&trace).unwrap();
        let (t10, t21, t20) = fit.rates.inverse_us();
        assert!((t10 - 44.4).abs() / 44.4 < 0.01, "t10 = {t10}");
        assert!((t21 - 35.0).abs() / 35.0 < 0.01, "t21 = {t21}");
        assert!((t20 - 69.2).abs() / 69.2 < 0.01, "t20 = {t20}");
    }

    #[test]
    fn constant_trace_fails_to_converge() {
        let delays: Vec<f64> = (0..10).map(|i| i as f64 * 3.0).collect();
        let populations = vec![[0.0, 0.0, 1.0]; delays.len()];
        let trace = QutritTrace {
            delays_us: delays,
            populations,
        };
        assert!(fit_qutrit_rates(&trace).is_err());
    }

    #[test]
    fn too_few_delays_is_an_error() {
        let rates = reference_rates();
        let trace = QutritTrace::synthetic(&rates, &[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(
            fit_qutrit_rates(&trace),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn fitted_lifetimes_reproduce_expected_ordering() {
        let rates = reference_rates();
        let (t10, t21, t20) = rates.inverse_us();
        assert!(t10 > t21);
        assert!(t20 > t10 && t20 > t21);
    }
}
