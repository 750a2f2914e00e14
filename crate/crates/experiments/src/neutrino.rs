//! Two-qubit simulation of three-flavor neutrino oscillation.
//!
//! The flavor state ν_μ evolves as `U_PMNS · diag(1, e^{-iφ21}, e^{-iφ31},
//! e^{-iφ'}) · U_PMNS†` with phases `φ_k1 = 2.534 · Δm²_k1 · L/E`. Two
//! fictitious states (ν_X, ν₄) pad the system to two qubits and stay
//! decoupled. Outcomes map as 00 → ν_e, 01 → ν_μ, 10 → ν_τ, 11 → ν_X.

use ndarray::array;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qstar_core::backend::Backend;
use qstar_core::circuit::{Circuit, Gate};
use qstar_core::error::{Error, Result};
use qstar_core::math::{c, cr, dagger, operator_norm, polar_unitary, CMat, ZERO};
use qstar_core::mitigation::{bootstrap_stderr, calibrate_rem_for_wires, RemCalibration};
use qstar_core::rng::derive_seed;
use qstar_core::transpiler::{transpile, Topology};

use crate::report::MitigationConfig;

/// Mass splittings and the phase conversion constant
/// `φ_k1 = 2.534 · Δm²_k1 [eV²] · L/E [km/GeV]`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MassSplittings {
    pub dm21_sq_ev2: f64,
    pub dm31_sq_ev2: f64,
    pub conversion: f64,
}

impl Default for MassSplittings {
    fn default() -> Self {
        MassSplittings {
            dm21_sq_ev2: 7.39e-5,
            dm31_sq_ev2: 2.45e-3,
            conversion: 2.534,
        }
    }
}

/// The 4x4 flavor-mass mixing matrix, with entries tabulated to four
/// decimals and the exact unitary obtained by polar decomposition.
#[derive(Debug, Clone)]
pub struct PmnsMatrix {
    pub tabulated: CMat,
    pub exact: CMat,
    /// Operator-norm distance between the tabulated and repaired matrices.
    pub deviation: f64,
}

pub fn pmns_tabulated() -> CMat {
    array![
        [cr(0.8255), cr(0.5445), c(-0.142, 0.0434), ZERO],
        [c(-0.2709, 0.02739), c(0.6057, 0.0181), cr(0.7475), ZERO],
        [c(0.4938, 0.0237), c(-0.5798, 0.0157), cr(0.6475), ZERO],
        [ZERO, ZERO, ZERO, cr(1.0)]
    ]
}

impl PmnsMatrix {
    pub fn standard() -> Result<Self> {
        let tabulated = pmns_tabulated();
        let exact = polar_unitary(&tabulated)?;
        let deviation = operator_norm(&(&tabulated - &exact));
        Ok(PmnsMatrix {
            tabulated,
            exact,
            deviation,
        })
    }
}

/// Oscillation phases `(φ21, φ31)` in radians.
pub fn evolution_phases(l_over_e: f64, splittings: &MassSplittings) -> Result<(f64, f64)> {
    if l_over_e < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "L/E must be non-negative, got {l_over_e}"
        )));
    }
    Ok((
        splittings.conversion * splittings.dm21_sq_ev2 * l_over_e,
        splittings.conversion * splittings.dm31_sq_ev2 * l_over_e,
    ))
}

/// Two-qubit oscillation circuit: prepare ν_μ = |01>, rotate to the mass
/// basis with U†, apply the diagonal evolution S₁ ⊗ S₂, rotate back.
pub fn oscillation_circuit(
    l_over_e: f64,
    pmns: &PmnsMatrix,
    splittings: &MassSplittings,
) -> Result<Circuit> {
    let (phi21, phi31) = evolution_phases(l_over_e, splittings)?;
    let mut circuit = Circuit::new(2);
    circuit.x(1);
    circuit.push(Gate::U4 {
        a: 0,
        b: 1,
        matrix: dagger(&pmns.exact),
    })?;
    let s1 = array![
        [cr(1.0), ZERO],
        [ZERO, Complex64::from_polar(1.0, -phi31)]
    ];
    let s2 = array![
        [cr(1.0), ZERO],
        [ZERO, Complex64::from_polar(1.0, -phi21)]
    ];
    circuit.push(Gate::U2 { qubit: 0, matrix: s1 })?;
    circuit.push(Gate::U2 { qubit: 1, matrix: s2 })?;
    circuit.push(Gate::U4 {
        a: 0,
        b: 1,
        matrix: pmns.exact.clone(),
    })?;
    circuit.measure_all();
    Ok(circuit)
}

/// Closed-form detection probabilities `(p_e, p_mu, p_tau)` from the exact
/// matrix product.
pub fn theoretical_probabilities(
    l_over_e: f64,
    pmns: &PmnsMatrix,
    splittings: &MassSplittings,
) -> Result<[f64; 3]> {
    let (phi21, phi31) = evolution_phases(l_over_e, splittings)?;
    let mut evolution: CMat = ndarray::Array2::zeros((4, 4));
    evolution[(0, 0)] = cr(1.0);
    evolution[(1, 1)] = Complex64::from_polar(1.0, -phi21);
    evolution[(2, 2)] = Complex64::from_polar(1.0, -phi31);
    evolution[(3, 3)] = cr(1.0);
    let full = pmns.exact.dot(&evolution).dot(&dagger(&pmns.exact));
    // Initial state ν_μ is the second flavor basis vector.
    let mut out = [0.0; 3];
    for (alpha, slot) in out.iter_mut().enumerate() {
        *slot = full[(alpha, 1)].norm_sqr();
    }
    Ok(out)
}

/// One scanned point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OscillationPoint {
    pub l_over_e: f64,
    pub p_e: f64,
    pub p_mu: f64,
    pub p_tau: f64,
    pub p_x: f64,
    pub stderr: [f64; 3],
    pub theory: [f64; 3],
}

/// Scan L/E points: per point the circuit is transpiled to the star,
/// executed with `shots`, optionally readout-mitigated, and compared with
/// the closed form.
pub fn oscillation_scan(
    points: &[f64],
    shots: u64,
    mitigation: &MitigationConfig,
    backend: &Backend,
    seed: u64,
) -> Result<Vec<OscillationPoint>> {
    mitigation.validate()?;
    let pmns = PmnsMatrix::standard()?;
    let splittings = MassSplittings::default();
    let topology = Topology::default_star5();

    // All points share the circuit structure, so they transpile to the
    // same layout; calibrate readout on the physical wires actually
    // measured.
    let natives = points
        .iter()
        .map(|&l_over_e| {
            let circuit = oscillation_circuit(l_over_e, &pmns, &splittings)?;
            transpile(&circuit, &topology)
        })
        .collect::<Result<Vec<_>>>()?;
    let rem: Option<RemCalibration> = if mitigation.rem {
        let wires = natives
            .first()
            .map(|n| n.circuit.measured_qubits())
            .unwrap_or_default();
        for native in &natives {
            if native.circuit.measured_qubits() != wires {
                return Err(qstar_core::error::Error::InvalidState(
                    "scan points landed on different measurement wires".to_string(),
                ));
            }
        }
        Some(calibrate_rem_for_wires(
            topology.num_qubits,
            &wires,
            mitigation.rem_mode,
            mitigation.rem_shots_per_state,
            backend,
            derive_seed(seed, 0xCA11),
        )?)
    } else {
        None
    };
    natives
        .par_iter()
        .enumerate()
        .map(|(idx, native)| {
            let l_over_e = points[idx];
            let point_seed = derive_seed(seed, idx as u64);
            let counts = backend.run(&native.circuit, shots, point_seed)?;
            let probs = match &rem {
                Some(cal) => qstar_core::mitigation::apply_rem(&counts, cal)?,
                None => counts.to_probability_vector(),
            };
            let mut stderr = [0.0; 3];
            for (alpha, slot) in stderr.iter_mut().enumerate() {
                let key = qstar_core::sim::format_bits(alpha, 2);
                *slot = bootstrap_stderr(
                    &counts,
                    |resampled| resampled.frequency(&key),
                    mitigation.bootstrap,
                    derive_seed(point_seed, 0x2000 + alpha as u64),
                )?;
            }
            Ok(OscillationPoint {
                l_over_e,
                p_e: probs[0],
                p_mu: probs[1],
                p_tau: probs[2],
                p_x: probs[3],
                stderr,
                theory: theoretical_probabilities(l_over_e, &pmns, &splittings)?,
            })
        })
        .collect()
}

/// Uniform scan grid `[0, l_max]`.
pub fn default_scan_grid(points: usize, l_max: f64) -> Vec<f64> {
    (0..points)
        .map(|k| l_max * k as f64 / (points.max(2) - 1) as f64)
        .collect()
}

/// CSV columns: `L_over_E, p_e, p_mu, p_tau, stderr_e, stderr_mu,
/// stderr_tau, theory_e, theory_mu, theory_tau`.
pub fn to_csv(points: &[OscillationPoint]) -> String {
    let mut out =
        String::from("L_over_E,p_e,p_mu,p_tau,stderr_e,stderr_mu,stderr_tau,theory_e,theory_mu,theory_tau\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            p.l_over_e,
            p.p_e,
            p.p_mu,
            p.p_tau,
            p.stderr[0],
            p.stderr[1],
            p.stderr[2],
            p.theory[0],
            p.theory[1],
            p.theory[2]
        ));
    }
    out
}
