//! Five-qubit GHZ state: preparation, tomographic entanglement entropies,
//! and the Mermin polynomial estimate.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qstar_core::backend::Backend;
use qstar_core::circuit::Circuit;
use qstar_core::error::Result;
use qstar_core::math::{cr, CMat};
use qstar_core::mitigation::{calibrate_rem, MitigatedValue};
use qstar_core::pauli::{estimate_observable, EstimateOptions, Observable, PauliOp, PauliString};
use qstar_core::rng::derive_seed;
use qstar_core::sim::{partial_trace, run_statevector, state_fidelity, QuantumState};
use qstar_core::tomography::{project_to_physical, state_tomography, von_neumann_entropy};

use crate::report::MitigationConfig;

/// Circuit preparing `(|00000> + |11111>)/√2`: H on the first qubit, then
/// CNOTs fanning out (the transpiler re-anchors them on the star center).
pub fn ghz5_circuit() -> Circuit {
    let mut circuit = Circuit::new(5);
    circuit.h(0);
    for k in 1..5 {
        circuit.cnot(0, k);
    }
    circuit
}

/// The ideal GHZ statevector.
pub fn ghz5_state() -> QuantumState {
    run_statevector(&ghz5_circuit()).expect("ideal GHZ")
}

/// Analytic density matrices for the entropy table: the full state and the
/// two complementary reductions.
pub fn analytic_reduced_12() -> CMat {
    let mut m: CMat = Array2::zeros((4, 4));
    m[(0, 0)] = cr(0.5);
    m[(3, 3)] = cr(0.5);
    m
}

pub fn analytic_reduced_345() -> CMat {
    let mut m: CMat = Array2::zeros((8, 8));
    m[(0, 0)] = cr(0.5);
    m[(7, 7)] = cr(0.5);
    m
}

/// Entropy experiment output (entropies in bits).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GhzEntropyReport {
    pub shots_per_setting: u64,
    pub settings_executed: usize,
    /// Entropy of the tomographic 5-qubit state.
    pub s_full: f64,
    /// Entropy of the reduced state of qubits {1,2} (first two).
    pub s_12: f64,
    /// Entropy of the reduced state of qubits {3,4,5} (last three).
    pub s_345: f64,
    /// Theory values: (0, 1, 1).
    pub theory: [f64; 3],
    /// Uniformly mixed upper bounds: (5, 2, 3).
    pub upper_bounds: [f64; 3],
    /// Fidelity of the tomographic state to the ideal GHZ.
    pub fidelity: f64,
}

/// Full 5-qubit tomography of the GHZ state (3^5 = 243 settings); the
/// reduced entropies come from partial traces of the raw linear-inversion
/// estimate, each projected to a physical state before taking the entropy.
pub fn entropy_experiment(
    shots_per_setting: u64,
    mitigation: &MitigationConfig,
    backend: &Backend,
    seed: u64,
) -> Result<GhzEntropyReport> {
    mitigation.validate()?;
    let prep = ghz5_circuit();
    // Tomography uses local readout error mitigation when enabled.
    let rem = if mitigation.rem {
        Some(calibrate_rem(
            5,
            qstar_core::mitigation::RemMode::Local,
            mitigation.rem_shots_per_state,
            backend,
            derive_seed(seed, 0xCA11),
        )?)
    } else {
        None
    };
    let result = state_tomography(
        &prep,
        &[0, 1, 2, 3, 4],
        shots_per_setting,
        backend,
        seed,
        rem.as_ref(),
    )?;

    let s_full = von_neumann_entropy(&result.rho)?;
    let raw_state = QuantumState::Density {
        num_qubits: 5,
        matrix: hermitize(&result.rho_raw),
    };
    let rho12 = partial_trace(&raw_state, &[0, 1])?;
    let rho345 = partial_trace(&raw_state, &[2, 3, 4])?;
    let s_12 = von_neumann_entropy(&project_to_physical(rho12.density().unwrap())?)?;
    let s_345 = von_neumann_entropy(&project_to_physical(rho345.density().unwrap())?)?;

    let tomographic = QuantumState::from_density(result.rho.clone())?;
    let fidelity = state_fidelity(&ghz5_state(), &tomographic)?;

    Ok(GhzEntropyReport {
        shots_per_setting,
        settings_executed: result.settings_used.len(),
        s_full,
        s_12,
        s_345,
        theory: [0.0, 1.0, 1.0],
        upper_bounds: [5.0, 2.0, 3.0],
        fidelity,
    })
}

fn hermitize(m: &CMat) -> CMat {
    (m + &qstar_core::math::dagger(m)).mapv(|z| z * cr(0.5))
}

/// GHZ preparation fidelity under a backend: the transpiled circuit is
/// executed (noisily, if configured) and compared with its ideal output.
/// This is the calibration-set comparison figure of merit.
pub fn ghz_preparation_fidelity(backend: &Backend) -> Result<f64> {
    let native = qstar_core::transpiler::transpile(
        &ghz5_circuit(),
        &qstar_core::transpiler::Topology::default_star5(),
    )?;
    let ideal = run_statevector(&native.circuit)?;
    let prepared = backend.final_state(&native.circuit)?;
    state_fidelity(&ideal, &prepared)
}

/// The 16 Mermin monomials with their aggregation signs: XXXXX, minus the
/// ten YYXXX permutations, plus the five YYYYX permutations.
pub fn mermin_monomials() -> Vec<(f64, PauliString)> {
    let mut monomials = Vec::with_capacity(16);
    monomials.push((1.0, PauliString::parse("XXXXX").unwrap()));
    // Two Y's in all C(5,2) = 10 positions.
    for i in 0..5 {
        for j in (i + 1)..5 {
            let mut ops = vec![PauliOp::X; 5];
            ops[i] = PauliOp::Y;
            ops[j] = PauliOp::Y;
            monomials.push((-1.0, PauliString { ops }));
        }
    }
    // Four Y's in all C(5,4) = 5 positions.
    for x_pos in (0..5).rev() {
        let mut ops = vec![PauliOp::Y; 5];
        ops[x_pos] = PauliOp::X;
        monomials.push((1.0, PauliString { ops }));
    }
    monomials
}

/// Ideal monomial expectation on the GHZ state: +1, -1, +1 by Y count.
pub fn mermin_monomial_theory(pauli: &PauliString) -> f64 {
    let y_count = pauli.ops.iter().filter(|&&op| op == PauliOp::Y).count();
    match y_count {
        0 | 4 => 1.0,
        2 => -1.0,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MerminMonomial {
    pub pauli: String,
    pub sign: f64,
    pub estimate: MitigatedValue,
    pub theory: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MerminReport {
    pub monomials: Vec<MerminMonomial>,
    pub m5: MitigatedValue,
    pub m5_theory: f64,
    pub classical_bound: f64,
    pub quantum_bound: f64,
    /// Estimate exceeds the local-realism bound E(M5) <= 4.
    pub violates_classical_bound: bool,
}

/// Estimate the Mermin polynomial `M5` by measuring all 16 monomials
/// separately with `shots_per_monomial` each.
pub fn mermin_estimate(
    shots_per_monomial: u64,
    mitigation: &MitigationConfig,
    backend: &Backend,
    seed: u64,
) -> Result<MerminReport> {
    mitigation.validate()?;
    let prep = ghz5_circuit();
    let rem = if mitigation.rem {
        Some(calibrate_rem(
            5,
            mitigation.rem_mode,
            mitigation.rem_shots_per_state,
            backend,
            derive_seed(seed, 0xCA11),
        )?)
    } else {
        None
    };
    let monomials = mermin_monomials();
    let results: Result<Vec<MerminMonomial>> = monomials
        .par_iter()
        .enumerate()
        .map(|(idx, (sign, pauli))| {
            let obs = Observable::new(vec![(1.0, pauli.clone())])?;
            let mut options =
                EstimateOptions::new(shots_per_monomial, derive_seed(seed, idx as u64));
            options.bootstrap_resamples = mitigation.bootstrap;
            options.rem = rem.clone();
            let estimate = estimate_observable(backend, &prep, &obs, &options)?;
            Ok(MerminMonomial {
                pauli: pauli.to_string(),
                sign: *sign,
                estimate,
                theory: mermin_monomial_theory(pauli),
            })
        })
        .collect();
    let results = results?;

    let value: f64 = results.iter().map(|m| m.sign * m.estimate.value).sum();
    let stderr: f64 = results
        .iter()
        .map(|m| m.estimate.stderr * m.estimate.stderr)
        .sum::<f64>()
        .sqrt();
    let tags = results
        .first()
        .map(|m| m.estimate.method_tags.clone())
        .unwrap_or_default();
    let m5 = MitigatedValue {
        value,
        stderr,
        method_tags: tags,
    };
    Ok(MerminReport {
        violates_classical_bound: m5.value > 4.0 + 3.0 * m5.stderr,
        monomials: results,
        m5,
        m5_theory: 16.0,
        classical_bound: 4.0,
        quantum_bound: 16.0,
    })
}

/// CSV emission: per-monomial rows plus an aggregate row.
pub fn mermin_to_csv(report: &MerminReport) -> String {
    let mut out = String::from("observable,sign,estimate,stderr,theory\n");
    for m in &report.monomials {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            m.pauli, m.sign, m.estimate.value, m.estimate.stderr, m.theory
        ));
    }
    out.push_str(&format!(
        "M5,,{},{},{}\n",
        report.m5.value, report.m5.stderr, report.m5_theory
    ));
    out
}
