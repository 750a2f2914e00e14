//! Jones polynomials of three-strand braid closures via the Temperley-Lieb
//! representation, with quantum trace estimation on a purified maximally
//! mixed state.
//!
//! For `A = e^{iθ}` and `δ = -A² - A⁻²` the representation
//! `ρ(σᵢ) = A·I + A⁻¹·Uᵢ` is unitary whenever `δ² ≥ 1`. The Kauffman
//! bracket of a closed 3-strand braid `b` is
//! `(1/δ)(tr ρ(b) + A^{w(b)} (δ² − 2))` and the Jones value multiplies it
//! by `(-A³)^{-w(b)}`.

use ndarray::array;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qstar_core::backend::Backend;
use qstar_core::circuit::{Circuit, Gate};
use qstar_core::error::{Error, Result};
use qstar_core::math::{cr, frobenius_norm, identity, CMat, ZERO};
use qstar_core::mitigation::{
    apply_rem, bootstrap_stderr, calibrate_rem_for_wires, fold_global, pauli_twirl_cz,
    zne_extrapolate, MitigatedValue, MitigationTag, RemMode,
};
use qstar_core::rng::derive_seed;
use qstar_core::sim::Counts;
use qstar_core::transpiler::{transpile, NativeCircuit, Topology};

use crate::report::MitigationConfig;

/// A braid word over the generators σ₁, σ₂ of the three-strand group:
/// letters are ±1 or ±2, applied left to right (first letter first).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BraidWord {
    pub letters: Vec<i8>,
}

impl BraidWord {
    pub fn new(letters: Vec<i8>) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::InvalidArgument(
                "braid word must be non-empty".to_string(),
            ));
        }
        if letters.iter().any(|&l| !matches!(l.abs(), 1 | 2)) {
            return Err(Error::InvalidArgument(
                "letters must be ±1 or ±2".to_string(),
            ));
        }
        Ok(BraidWord { letters })
    }

    /// Parse a comma-separated list of signed generator indices, e.g.
    /// `1,1,1` for σ₁³ or `1,-2` for σ₁σ₂⁻¹.
    pub fn parse(text: &str) -> Result<Self> {
        let letters = text
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<i8>()
                    .map_err(|_| Error::Parse(format!("bad braid letter `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        BraidWord::new(letters)
    }

    pub fn hopf_link() -> Self {
        BraidWord::new(vec![1, 1]).unwrap()
    }

    pub fn trefoil() -> Self {
        BraidWord::new(vec![1, 1, 1]).unwrap()
    }

    /// Writhe: the sum of the exponent signs.
    pub fn writhe(&self) -> i64 {
        self.letters.iter().map(|&l| l.signum() as i64).sum()
    }
}

/// Temperley-Lieb representation data at a given θ.
#[derive(Debug, Clone)]
pub struct TlRep {
    pub theta: f64,
    pub a: Complex64,
    pub delta: f64,
    pub u1: CMat,
    pub u2: CMat,
    pub rho_sigma1: CMat,
    pub rho_sigma2: CMat,
}

/// Is θ in the admissible set (δ² ≥ 1)?
pub fn is_admissible(theta: f64) -> bool {
    let delta = -2.0 * (2.0 * theta).cos();
    delta * delta >= 1.0 - 1e-9
}

/// Construct the TL generators and braid representation at θ; errors when
/// δ² < 1 (the representation would not be unitary).
pub fn tl_generators(theta: f64) -> Result<TlRep> {
    let a = Complex64::from_polar(1.0, theta);
    let delta = -2.0 * (2.0 * theta).cos();
    if delta * delta < 1.0 - 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "θ = {theta} is inadmissible: δ² = {} < 1",
            delta * delta
        )));
    }
    let u1 = array![[cr(delta), ZERO], [ZERO, ZERO]];
    let inv = 1.0 / delta;
    let off = (1.0 - inv * inv).max(0.0).sqrt();
    let u2 = array![[cr(inv), cr(off)], [cr(off), cr(delta - inv)]];
    let a_inv = a.conj();
    let rho_sigma1 = identity(2).mapv(|z| z * a) + u1.mapv(|z| z * a_inv);
    let rho_sigma2 = identity(2).mapv(|z| z * a) + u2.mapv(|z| z * a_inv);

    let rep = TlRep {
        theta,
        a,
        delta,
        u1,
        u2,
        rho_sigma1,
        rho_sigma2,
    };
    rep.validate()?;
    Ok(rep)
}

impl TlRep {
    /// Check the TL relations and unitarity of the representation.
    pub fn validate(&self) -> Result<()> {
        let tol = 1e-10;
        let checks = [
            (&self.u1.dot(&self.u1) - &self.u1.mapv(|z| z * cr(self.delta)), "U1² = δU1"),
            (&self.u2.dot(&self.u2) - &self.u2.mapv(|z| z * cr(self.delta)), "U2² = δU2"),
            (
                &self.u1.dot(&self.u2).dot(&self.u1) - &self.u1,
                "U1U2U1 = U1",
            ),
            (
                &self.u2.dot(&self.u1).dot(&self.u2) - &self.u2,
                "U2U1U2 = U2",
            ),
        ];
        for (diff, label) in checks {
            if frobenius_norm(&diff) > tol {
                return Err(Error::InvalidState(format!(
                    "TL relation {label} violated at θ = {}",
                    self.theta
                )));
            }
        }
        qstar_core::math::check_unitary(&self.rho_sigma1, tol)?;
        qstar_core::math::check_unitary(&self.rho_sigma2, tol)?;
        Ok(())
    }

    fn letter_matrix(&self, letter: i8) -> CMat {
        // ρ(σᵢ⁻¹) = A⁻¹·I + A·Uᵢ.
        let u = if letter.abs() == 1 { &self.u1 } else { &self.u2 };
        if letter > 0 {
            identity(2).mapv(|z| z * self.a) + u.mapv(|z| z * self.a.conj())
        } else {
            identity(2).mapv(|z| z * self.a.conj()) + u.mapv(|z| z * self.a)
        }
    }
}

/// Ordered product of the representation, first letter applied first.
pub fn braid_matrix(rep: &TlRep, word: &BraidWord) -> CMat {
    let mut m = identity(2);
    for &letter in &word.letters {
        m = rep.letter_matrix(letter).dot(&m);
    }
    m
}

/// Kauffman bracket of the braid closure:
/// `(1/δ)(tr ρ(b) + A^{w} (δ² − 2))`.
pub fn kauffman_bracket_closure(rep: &TlRep, word: &BraidWord) -> Complex64 {
    let m = braid_matrix(rep, word);
    let trace = m[(0, 0)] + m[(1, 1)];
    let w = word.writhe();
    let a_pow_w = rep.a.powi(w as i32);
    (trace + a_pow_w * cr(rep.delta * rep.delta - 2.0)) / cr(rep.delta)
}

/// Jones value `(-A³)^{-w} × bracket`.
pub fn jones_value(rep: &TlRep, word: &BraidWord) -> Complex64 {
    let bracket = kauffman_bracket_closure(rep, word);
    let minus_a_cubed = -rep.a.powi(3);
    bracket * minus_a_cubed.powi(-(word.writhe() as i32))
}

/// Closed forms for the Hopf link and the trefoil, as functions of A.
pub fn trefoil_bracket_closed_form(a: Complex64) -> Complex64 {
    -a.powi(5) - a.powi(-3) + a.powi(-7)
}

pub fn hopf_bracket_closed_form(a: Complex64) -> Complex64 {
    -a.powi(4) - a.powi(-4)
}

/// `V_trefoil(t) = -t⁴ + t³ + t` at `t = A⁻⁴`.
pub fn trefoil_jones_closed_form(a: Complex64) -> Complex64 {
    let t = a.powi(-4);
    -t.powi(4) + t.powi(3) + t
}

/// `V_Hopf = -A⁻¹⁰ - A⁻²`.
pub fn hopf_jones_closed_form(a: Complex64) -> Complex64 {
    -a.powi(-10) - a.powi(-2)
}

/// Three-qubit circuit estimating `tr u` of a single-qubit unitary: the
/// middle qubit is purified into a maximally mixed state by a Bell pair
/// with the bottom qubit, and `E(X₁) = ½ Re tr u`, `E(Y₁) = ½ Im tr u`.
pub fn trace_circuit(u: &CMat) -> Result<Circuit> {
    qstar_core::math::check_unitary(u, 1e-10)?;
    let mut circuit = Circuit::new(3);
    circuit.h(0);
    circuit.h(1);
    circuit.cnot(1, 2);
    // Controlled-u from qubit 0 onto qubit 1.
    let mut controlled: CMat = ndarray::Array2::zeros((4, 4));
    controlled[(0, 0)] = cr(1.0);
    controlled[(1, 1)] = cr(1.0);
    for r in 0..2 {
        for c_ in 0..2 {
            controlled[(2 + r, 2 + c_)] = u[(r, c_)];
        }
    }
    circuit.push(Gate::U4 {
        a: 0,
        b: 1,
        matrix: controlled,
    })?;
    Ok(circuit)
}

/// Which basis of the ancilla is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TraceBasis {
    X,
    Y,
}

/// Estimates of Re tr u and Im tr u (already scaled by 2 from E(X), E(Y)).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceEstimate {
    pub re: MitigatedValue,
    pub im: MitigatedValue,
}

/// Per-θ knot report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnotPoint {
    pub theta: f64,
    pub writhe: i64,
    /// tr ρ(b) from the matrix product.
    pub trace_theory: [f64; 2],
    pub kauffman_theory: [f64; 2],
    pub jones_theory: [f64; 2],
    pub raw: TraceEstimate,
    pub rem: Option<TraceEstimate>,
    pub rc_zne: Option<TraceEstimate>,
}

/// The experiment's default mitigation stack: readout mitigation plus 30
/// randomized compilations per circuit, extrapolated over fold scales
/// 1, 3, 5.
pub fn default_mitigation() -> MitigationConfig {
    MitigationConfig {
        rem: true,
        rc: 30,
        zne: vec![1, 3, 5],
        ..MitigationConfig::default()
    }
}

/// Default θ grid: 24 points distributed over the admissible intervals
/// proportionally to their lengths.
pub fn default_theta_grid(points: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    let intervals: [(f64, f64); 5] = [
        (0.0, PI / 6.0),
        (PI / 3.0, 2.0 * PI / 3.0),
        (5.0 * PI / 6.0, 7.0 * PI / 6.0),
        (4.0 * PI / 3.0, 5.0 * PI / 3.0),
        (11.0 * PI / 6.0, 2.0 * PI),
    ];
    let total: f64 = intervals.iter().map(|(a, b)| b - a).sum();
    let mut grid = Vec::with_capacity(points);
    for &(a, b) in &intervals {
        let share = ((b - a) / total * points as f64).round() as usize;
        let share = share.max(1);
        for k in 0..share {
            // Interior sampling avoids duplicating shared endpoints.
            let t = a + (b - a) * (k as f64 + 0.5) / share as f64;
            grid.push(t);
        }
    }
    grid.truncate(points);
    grid
}

struct TraceRun {
    native: NativeCircuit,
    measured_wire: usize,
}

fn build_trace_run(u: &CMat, basis: TraceBasis, topology: &Topology) -> Result<TraceRun> {
    let mut circuit = trace_circuit(u)?;
    match basis {
        TraceBasis::X => {
            circuit.h(0);
        }
        TraceBasis::Y => {
            circuit.sdg(0).h(0);
        }
    }
    circuit.push(Gate::Measure { qubits: vec![0] })?;
    let native = transpile(&circuit, topology)?;
    let measured_wire = native.layout[0];
    Ok(TraceRun {
        native,
        measured_wire,
    })
}

fn z_expectation_from_counts(counts: &Counts) -> f64 {
    counts.frequency("0") - counts.frequency("1")
}

fn z_expectation_from_probs(probs: &[f64]) -> f64 {
    probs[0] - probs[1]
}

/// Estimate the knot trace over a θ grid with the configured mitigation
/// stack: raw counts, readout-mitigated (REM), and REM with randomized
/// compiling plus zero-noise extrapolation.
pub fn estimate_knot_trace(
    word: &BraidWord,
    thetas: &[f64],
    shots: u64,
    mitigation: &MitigationConfig,
    backend: &Backend,
    seed: u64,
) -> Result<Vec<KnotPoint>> {
    mitigation.validate()?;
    for &t in thetas {
        if !is_admissible(t) {
            return Err(Error::InvalidArgument(format!(
                "θ = {t} is not admissible"
            )));
        }
    }
    let topology = Topology::default_star5();

    thetas
        .par_iter()
        .enumerate()
        .map(|(idx, &theta)| {
            let theta_seed = derive_seed(seed, idx as u64);
            let rep = tl_generators(theta)?;
            let u = braid_matrix(&rep, word);
            let trace = u[(0, 0)] + u[(1, 1)];
            let bracket = kauffman_bracket_closure(&rep, word);
            let jones = jones_value(&rep, word);

            let mut estimates: Vec<(MitigatedValue, Option<MitigatedValue>, Option<MitigatedValue>)> =
                Vec::with_capacity(2);
            for (basis_idx, basis) in [TraceBasis::X, TraceBasis::Y].into_iter().enumerate() {
                let run = build_trace_run(&u, basis, &topology)?;
                let basis_seed = derive_seed(theta_seed, basis_idx as u64);
                let rem_cal = if mitigation.rem || !mitigation.zne.is_empty() {
                    Some(calibrate_rem_for_wires(
                        run.native.circuit.num_qubits,
                        &[run.measured_wire],
                        RemMode::Correlated,
                        mitigation.rem_shots_per_state,
                        backend,
                        derive_seed(basis_seed, 0xCA11),
                    )?)
                } else {
                    None
                };

                // Raw estimate.
                let counts = backend.run(&run.native.circuit, shots, basis_seed)?;
                let raw_value = 2.0 * z_expectation_from_counts(&counts);
                let raw_stderr = 2.0 * bootstrap_stderr(
                    &counts,
                    z_expectation_from_counts,
                    mitigation.bootstrap,
                    derive_seed(basis_seed, 0xB007),
                )?;
                let raw = MitigatedValue::raw(raw_value, raw_stderr);

                // REM-only estimate.
                let rem = match &rem_cal {
                    Some(cal) if mitigation.rem => {
                        let probs = apply_rem(&counts, cal)?;
                        let stderr = 2.0 * bootstrap_stderr(
                            &counts,
                            |resampled| match apply_rem(resampled, cal) {
                                Ok(p) => z_expectation_from_probs(&p),
                                Err(_) => f64::NAN,
                            },
                            mitigation.bootstrap.min(200),
                            derive_seed(basis_seed, 0xB008),
                        )?;
                        Some(MitigatedValue {
                            value: 2.0 * z_expectation_from_probs(&probs),
                            stderr,
                            method_tags: vec![MitigationTag::Rem],
                        })
                    }
                    _ => None,
                };

                // REM + RC + ZNE estimate.
                let rc_zne = if !mitigation.zne.is_empty() && mitigation.rc > 0 {
                    let cal = rem_cal.as_ref().expect("calibrated above");
                    let mut points = Vec::with_capacity(mitigation.zne.len());
                    for (scale_idx, &scale) in mitigation.zne.iter().enumerate() {
                        let folded = fold_global(&run.native, scale)?;
                        let variants = pauli_twirl_cz(
                            &folded,
                            mitigation.rc,
                            derive_seed(basis_seed, 0x7C0 + scale_idx as u64),
                        )?;
                        let mut values = Vec::with_capacity(variants.len());
                        for (v_idx, variant) in variants.iter().enumerate() {
                            let counts = backend.run(
                                &variant.circuit,
                                shots,
                                derive_seed(basis_seed, 0x9000 + (scale_idx * 64 + v_idx) as u64),
                            )?;
                            let probs = apply_rem(&counts, cal)?;
                            values.push(2.0 * z_expectation_from_probs(&probs));
                        }
                        let mean = values.iter().sum::<f64>() / values.len() as f64;
                        let var = values
                            .iter()
                            .map(|v| (v - mean) * (v - mean))
                            .sum::<f64>()
                            / (values.len().max(2) - 1) as f64;
                        let stderr = (var / values.len() as f64).sqrt();
                        points.push((scale as f64, mean, stderr));
                    }
                    let mut extrapolated = zne_extrapolate(&points)?;
                    extrapolated.method_tags =
                        vec![MitigationTag::Rem, MitigationTag::Rc, MitigationTag::Zne];
                    Some(extrapolated)
                } else {
                    None
                };
                estimates.push((raw, rem, rc_zne));
            }

            let (raw_x, rem_x, zne_x) = estimates[0].clone();
            let (raw_y, rem_y, zne_y) = estimates[1].clone();
            Ok(KnotPoint {
                theta,
                writhe: word.writhe(),
                trace_theory: [trace.re, trace.im],
                kauffman_theory: [bracket.re, bracket.im],
                jones_theory: [jones.re, jones.im],
                raw: TraceEstimate { re: raw_x, im: raw_y },
                rem: rem_x.zip(rem_y).map(|(re, im)| TraceEstimate { re, im }),
                rc_zne: zne_x.zip(zne_y).map(|(re, im)| TraceEstimate { re, im }),
            })
        })
        .collect()
}

/// CSV columns per θ: raw, REM, RC+ZNE estimates of Re/Im tr with errors,
/// plus the theory values.
pub fn to_csv(points: &[KnotPoint]) -> String {
    let mut out = String::from(
        "theta,re_raw,re_raw_err,im_raw,im_raw_err,re_rem,im_rem,re_rczne,im_rczne,re_theory,im_theory\n",
    );
    for p in points {
        let opt = |e: &Option<TraceEstimate>, f: fn(&TraceEstimate) -> f64| -> String {
            e.as_ref().map(|v| f(v).to_string()).unwrap_or_default()
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            p.theta,
            p.raw.re.value,
            p.raw.re.stderr,
            p.raw.im.value,
            p.raw.im.stderr,
            opt(&p.rem, |e| e.re.value),
            opt(&p.rem, |e| e.im.value),
            opt(&p.rc_zne, |e| e.re.value),
            opt(&p.rc_zne, |e| e.im.value),
            p.trace_theory[0],
            p.trace_theory[1],
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use qstar_core::math::distance_up_to_phase;
    use qstar_core::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn tl_generators_at_theta_zero() {
        let rep = tl_generators(0.0).unwrap();
        assert!((rep.delta + 2.0).abs() < 1e-12);
        assert!((rep.u1[(0, 0)].re + 2.0).abs() < 1e-12);
        assert!(rep.u1[(1, 1)].norm() < 1e-12);
    }

    #[test]
    fn boundary_theta_is_admissible_and_quarter_pi_is_not() {
        // θ = π/6 gives δ = -1, δ² = 1: accepted.
        assert!(tl_generators(std::f64::consts::PI / 6.0).is_ok());
        // θ = π/4 gives δ = 0: rejected.
        assert!(tl_generators(std::f64::consts::PI / 4.0).is_err());
    }

    fn random_admissible_theta(rng: &mut impl Rng) -> f64 {
        loop {
            let t = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            if is_admissible(t) {
                return t;
            }
        }
    }

    #[test]
    fn braid_group_relations_hold() {
        let mut rng = rng_from_seed(1234);
        for _ in 0..20 {
            let theta = random_admissible_theta(&mut rng);
            let rep = tl_generators(theta).unwrap();
            // σ1 σ1⁻¹ = identity.
            let id = braid_matrix(&rep, &BraidWord::new(vec![1, -1]).unwrap());
            assert!(distance_up_to_phase(&id, &identity(2)) < 1e-12);
            let id = braid_matrix(&rep, &BraidWord::new(vec![2, -2]).unwrap());
            assert!(distance_up_to_phase(&id, &identity(2)) < 1e-12);
            // σ1 σ2 σ1 = σ2 σ1 σ2.
            let lhs = braid_matrix(&rep, &BraidWord::new(vec![1, 2, 1]).unwrap());
            let rhs = braid_matrix(&rep, &BraidWord::new(vec![2, 1, 2]).unwrap());
            assert!(frobenius_norm(&(&lhs - &rhs)) < 1e-10, "θ = {theta}");
        }
    }

    #[test]
    fn representation_is_a_homomorphism() {
        let mut rng = rng_from_seed(4321);
        for _ in 0..200 {
            let theta = random_admissible_theta(&mut rng);
            let rep = tl_generators(theta).unwrap();
            let len_a = rng.gen_range(1..5);
            let len_b = rng.gen_range(1..5);
            let mut letters_a = Vec::new();
            let mut letters_b = Vec::new();
            for _ in 0..len_a {
                letters_a.push(*[1i8, -1, 2, -2].iter().nth(rng.gen_range(0..4)).unwrap());
            }
            for _ in 0..len_b {
                letters_b.push(*[1i8, -1, 2, -2].iter().nth(rng.gen_range(0..4)).unwrap());
            }
            let word_a = BraidWord::new(letters_a.clone()).unwrap();
            let word_b = BraidWord::new(letters_b.clone()).unwrap();
            let mut combined = letters_a.clone();
            combined.extend_from_slice(&letters_b);
            let word_ab = BraidWord::new(combined).unwrap();
            // Concatenation applies word_a first: ρ(ab) = ρ(b)ρ(a) in matrix
            // order.
            let lhs = braid_matrix(&rep, &word_ab);
            let rhs = braid_matrix(&rep, &word_b).dot(&braid_matrix(&rep, &word_a));
            assert!(frobenius_norm(&(&lhs - &rhs)) < 1e-10);
        }
    }

    #[test]
    fn trefoil_matrix_matches_direct_power() {
        let rep = tl_generators(std::f64::consts::PI / 10.0).unwrap();
        let m = braid_matrix(&rep, &BraidWord::trefoil());
        let direct = rep
            .rho_sigma1
            .dot(&rep.rho_sigma1)
            .dot(&rep.rho_sigma1);
        assert!(frobenius_norm(&(&m - &direct)) < 1e-12);
    }

    #[test]
    fn writhe_values() {
        assert_eq!(BraidWord::hopf_link().writhe(), 2);
        assert_eq!(BraidWord::trefoil().writhe(), 3);
        assert_eq!(BraidWord::new(vec![1, -2, -1]).unwrap().writhe(), -1);
    }

    #[test]
    fn brackets_match_closed_form_polynomials_on_a_grid() {
        let mut rng = rng_from_seed(777);
        for _ in 0..50 {
            let theta = random_admissible_theta(&mut rng);
            let rep = tl_generators(theta).unwrap();
            let trefoil = kauffman_bracket_closure(&rep, &BraidWord::trefoil());
            let expected = trefoil_bracket_closed_form(rep.a);
            assert!((trefoil - expected).norm() < 1e-9, "trefoil at θ = {theta}");
            let hopf = kauffman_bracket_closure(&rep, &BraidWord::hopf_link());
            let expected = hopf_bracket_closed_form(rep.a);
            assert!((hopf - expected).norm() < 1e-9, "hopf at θ = {theta}");
        }
    }

    #[test]
    fn jones_values_match_closed_form_polynomials() {
        let mut rng = rng_from_seed(778);
        for _ in 0..50 {
            let theta = random_admissible_theta(&mut rng);
            let rep = tl_generators(theta).unwrap();
            let v = jones_value(&rep, &BraidWord::trefoil());
            assert!((v - trefoil_jones_closed_form(rep.a)).norm() < 1e-9);
            let v = jones_value(&rep, &BraidWord::hopf_link());
            assert!((v - hopf_jones_closed_form(rep.a)).norm() < 1e-9);
        }
    }

    #[test]
    fn unknot_brackets_and_jones_normalization() {
        // σ1 closes to a positively kinked unknot: the closure formula
        // gives -A³ (and -A⁻³ for σ1⁻¹); in both cases the writhe
        // correction normalizes the Jones value to exactly 1.
        let mut rng = rng_from_seed(779);
        for _ in 0..10 {
            let theta = random_admissible_theta(&mut rng);
            let rep = tl_generators(theta).unwrap();
            let positive = BraidWord::new(vec![1]).unwrap();
            let bracket = kauffman_bracket_closure(&rep, &positive);
            assert!((bracket - -rep.a.powi(3)).norm() < 1e-9);
            assert!((jones_value(&rep, &positive) - cr(1.0)).norm() < 1e-9);

            let negative = BraidWord::new(vec![-1]).unwrap();
            let bracket = kauffman_bracket_closure(&rep, &negative);
            assert!((bracket - -rep.a.powi(-3)).norm() < 1e-9);
            assert!((jones_value(&rep, &negative) - cr(1.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn trace_circuit_expectations_match_half_trace() {
        use qstar_core::pauli::PauliString;
        use qstar_core::sim::run_statevector;
        let mut rng = rng_from_seed(31337);
        for trial in 0..20 {
            let u = qstar_core::math::haar_random_unitary(2, &mut rng);
            let circuit = trace_circuit(&u).unwrap();
            let state = run_statevector(&circuit).unwrap();
            let x = PauliString::parse("XII").unwrap().expectation(&state).unwrap();
            let y = PauliString::parse("YII").unwrap().expectation(&state).unwrap();
            let trace = u[(0, 0)] + u[(1, 1)];
            assert!((x - 0.5 * trace.re).abs() < 1e-9, "trial {trial}");
            assert!((y - 0.5 * trace.im).abs() < 1e-9, "trial {trial}");
        }
    }

    #[test]
    fn trace_circuit_reproduces_trefoil_trace_at_pi_tenth() {
        use qstar_core::pauli::PauliString;
        use qstar_core::sim::run_statevector;
        let rep = tl_generators(std::f64::consts::PI / 10.0).unwrap();
        let u = braid_matrix(&rep, &BraidWord::trefoil());
        let state = run_statevector(&trace_circuit(&u).unwrap()).unwrap();
        let x = PauliString::parse("XII").unwrap().expectation(&state).unwrap();
        let y = PauliString::parse("YII").unwrap().expectation(&state).unwrap();
        let trace = u[(0, 0)] + u[(1, 1)];
        assert!((x - 0.5 * trace.re).abs() < 1e-9);
        assert!((y - 0.5 * trace.im).abs() < 1e-9);
    }

    #[test]
    fn trace_circuit_identity_and_traceless_cases() {
        use qstar_core::pauli::PauliString;
        use qstar_core::sim::run_statevector;
        let state = run_statevector(&trace_circuit(&identity(2)).unwrap()).unwrap();
        let x = PauliString::parse("XII").unwrap().expectation(&state).unwrap();
        assert!((x - 1.0).abs() < 1e-12);

        let z = Gate::Z { qubit: 0 }.matrix_1q().unwrap();
        let state = run_statevector(&trace_circuit(&z).unwrap()).unwrap();
        let x = PauliString::parse("XII").unwrap().expectation(&state).unwrap();
        assert!(x.abs() < 1e-12);
    }

    #[test]
    fn theta_grid_is_admissible_and_proportional() {
        let grid = default_theta_grid(24);
        assert_eq!(grid.len(), 24);
        for &t in &grid {
            assert!(is_admissible(t), "θ = {t}");
        }
    }
}
