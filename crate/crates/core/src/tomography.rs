//! Full state tomography by linear inversion over all 3^n Pauli bases,
//! with projection to the nearest PSD unit-trace matrix, plus the von
//! Neumann entropy.

use crate::backend::Backend;
use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::math::{cr, hermitian_eigen, CMat};
use crate::mitigation::{apply_rem, RemCalibration};
use crate::pauli::{
    expectation_from_counts, expectation_from_probabilities, PauliOp, PauliString,
};
use crate::rng::derive_seed;

/// Linear-inversion tomography result.
#[derive(Debug, Clone)]
pub struct TomographyResult {
    /// Physical estimate: PSD, unit trace.
    pub rho: CMat,
    /// Raw linear-inversion estimate (Hermitian, unit trace, possibly not
    /// PSD). Partial traces of this are less biased than partial traces of
    /// the projected full-register state.
    pub rho_raw: CMat,
    pub settings_used: Vec<String>,
    pub shots_per_setting: u64,
}

fn setting_string(digits: &[u8]) -> PauliString {
    PauliString {
        ops: digits
            .iter()
            .map(|&d| match d {
                0 => PauliOp::X,
                1 => PauliOp::Y,
                _ => PauliOp::Z,
            })
            .collect(),
    }
}

/// Reconstruct the state of `qubits` (at most 5) prepared by `prep`.
///
/// All 3^k Pauli-basis settings are executed with `shots_per_setting`
/// shots; every Pauli expectation is averaged over the settings compatible
/// with it, then the linear-inversion estimate is projected to the nearest
/// PSD unit-trace matrix by eigenvalue clipping with trace renormalization.
/// Local readout mitigation may be supplied for the measured subset.
pub fn state_tomography(
    prep: &Circuit,
    qubits: &[usize],
    shots_per_setting: u64,
    backend: &Backend,
    seed: u64,
    rem: Option<&RemCalibration>,
) -> Result<TomographyResult> {
    let k = qubits.len();
    if k == 0 || k > 5 {
        return Err(Error::InvalidArgument(format!(
            "tomography supports 1..=5 qubits, got {k}"
        )));
    }
    for &q in qubits {
        if q >= prep.num_qubits {
            return Err(Error::QubitOutOfRange {
                index: q,
                num_qubits: prep.num_qubits,
            });
        }
    }
    if let Some(cal) = rem {
        if cal.num_qubits != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: cal.num_qubits,
            });
        }
    }

    let num_settings = 3usize.pow(k as u32);
    // Accumulated <P> sums and multiplicities, base-4 encoded Pauli index.
    let mut sums = vec![0.0; 4usize.pow(k as u32)];
    let mut hits = vec![0u32; 4usize.pow(k as u32)];
    let mut settings_used = Vec::with_capacity(num_settings);

    for setting_idx in 0..num_settings {
        let mut digits = vec![0u8; k];
        let mut rem_idx = setting_idx;
        for d in digits.iter_mut() {
            *d = (rem_idx % 3) as u8;
            rem_idx /= 3;
        }
        let setting = setting_string(&digits);
        settings_used.push(setting.to_string());

        let mut circuit = prep.clone();
        for (pos, &q) in qubits.iter().enumerate() {
            match setting.ops[pos] {
                PauliOp::X => {
                    circuit.h(q);
                }
                PauliOp::Y => {
                    circuit.sdg(q).h(q);
                }
                _ => {}
            }
        }
        circuit.push(Gate::Measure {
            qubits: qubits.to_vec(),
        })?;
        let counts = backend.run(
            &circuit,
            shots_per_setting,
            derive_seed(seed, setting_idx as u64),
        )?;
        let probs = match rem {
            Some(cal) => Some(apply_rem(&counts, cal)?),
            None => None,
        };

        // Every sub-Pauli of this setting is measurable from the same counts.
        for mask in 0..(1usize << k) {
            let mut pauli_idx = 0usize;
            let mut sub = PauliString::identity(k);
            for pos in 0..k {
                if (mask >> pos) & 1 == 1 {
                    sub.ops[pos] = setting.ops[pos];
                    let digit = match setting.ops[pos] {
                        PauliOp::X => 1,
                        PauliOp::Y => 2,
                        PauliOp::Z => 3,
                        PauliOp::I => unreachable!(),
                    };
                    pauli_idx += digit << (2 * pos);
                }
            }
            let value = match &probs {
                Some(p) => expectation_from_probabilities(p, &sub)?,
                None => expectation_from_counts(&counts, &sub)?,
            };
            sums[pauli_idx] += value;
            hits[pauli_idx] += 1;
        }
    }

    // Assemble rho = (1/2^k) sum_P <P> P.
    let dim = 1usize << k;
    let mut rho: CMat = ndarray::Array2::zeros((dim, dim));
    for (pauli_idx, (&sum, &count)) in sums.iter().zip(&hits).enumerate() {
        if count == 0 {
            continue;
        }
        let mean = sum / count as f64;
        if mean == 0.0 {
            continue;
        }
        let mut ops = Vec::with_capacity(k);
        for pos in 0..k {
            ops.push(match (pauli_idx >> (2 * pos)) & 3 {
                0 => PauliOp::I,
                1 => PauliOp::X,
                2 => PauliOp::Y,
                _ => PauliOp::Z,
            });
        }
        let p = PauliString { ops };
        rho = rho + p.matrix().mapv(|z| z * cr(mean / dim as f64));
    }

    let projected = project_to_physical(&rho)?;
    Ok(TomographyResult {
        rho: projected,
        rho_raw: rho,
        settings_used,
        shots_per_setting,
    })
}

/// Project a Hermitian matrix to the nearest PSD unit-trace matrix
/// (Frobenius metric): the eigenvalue vector is clipped and renormalized by
/// Euclidean projection onto the probability simplex, eigenvectors kept.
pub fn project_to_physical(rho: &CMat) -> Result<CMat> {
    let (values, vectors) = hermitian_eigen(rho)?;
    let clipped = crate::math::project_to_simplex(&values);
    let dim = rho.nrows();
    let mut d: CMat = ndarray::Array2::zeros((dim, dim));
    for (i, &w) in clipped.iter().enumerate() {
        d[(i, i)] = cr(w);
    }
    Ok(vectors.dot(&d).dot(&crate::math::dagger(&vectors)))
}

/// Von Neumann entropy `S(ρ) = -tr ρ log₂ ρ` in bits, with 0·log 0 = 0.
pub fn von_neumann_entropy(rho: &CMat) -> Result<f64> {
    let (values, _) = hermitian_eigen(rho)?;
    let mut s = 0.0;
    for &w in &values {
        if w > 1e-15 {
            s -= w * w.log2();
        }
    }
    Ok(s.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::frobenius_norm;
    use crate::sim::{partial_trace, run_statevector, state_fidelity, QuantumState};

    #[test]
    fn entropy_of_pure_and_mixed_states() {
        // Pure state.
        let mut c = Circuit::new(2);
        c.h(0).cnot(0, 1);
        let rho = run_statevector(&c).unwrap().into_density();
        assert!(von_neumann_entropy(rho.density().unwrap()).unwrap() < 1e-9);

        // (1/2) diag(1, 0, 0, 1) has entropy 1 bit.
        let mut m: CMat = ndarray::Array2::zeros((4, 4));
        m[(0, 0)] = cr(0.5);
        m[(3, 3)] = cr(0.5);
        assert!((von_neumann_entropy(&m).unwrap() - 1.0).abs() < 1e-12);

        // Maximally mixed on 5 qubits: entropy 5 bits.
        let dim = 32;
        let mut m: CMat = ndarray::Array2::zeros((dim, dim));
        for i in 0..dim {
            m[(i, i)] = cr(1.0 / dim as f64);
        }
        assert!((von_neumann_entropy(&m).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_rejects_non_hermitian() {
        let mut m: CMat = ndarray::Array2::zeros((2, 2));
        m[(0, 1)] = cr(1.0);
        assert!(von_neumann_entropy(&m).is_err());
    }

    #[test]
    fn projection_clips_and_renormalizes() {
        let mut m: CMat = ndarray::Array2::zeros((2, 2));
        m[(0, 0)] = cr(1.1);
        m[(1, 1)] = cr(-0.1);
        let p = project_to_physical(&m).unwrap();
        assert!((p[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(p[(1, 1)].re.abs() < 1e-12);
        // Already-physical states are fixed points.
        let mut m: CMat = ndarray::Array2::zeros((2, 2));
        m[(0, 0)] = cr(0.7);
        m[(1, 1)] = cr(0.3);
        let p = project_to_physical(&m).unwrap();
        assert!((p[(0, 0)].re - 0.7).abs() < 1e-12);
    }

    #[test]
    fn tomography_of_zero_state() {
        let prep = Circuit::new(1);
        let result =
            state_tomography(&prep, &[0], 3000, &Backend::Ideal, 17, None).unwrap();
        assert_eq!(result.settings_used.len(), 3);
        // diag(1, 0) within shot noise.
        assert!((result.rho[(0, 0)].re - 1.0).abs() < 0.05);
        assert!(result.rho[(1, 1)].re < 0.05);
    }

    #[test]
    fn tomography_of_bell_state_has_high_fidelity() {
        let mut prep = Circuit::new(2);
        prep.h(0).cnot(0, 1);
        let result =
            state_tomography(&prep, &[0, 1], 3500, &Backend::Ideal, 23, None).unwrap();
        assert_eq!(result.settings_used.len(), 9);
        let ideal = run_statevector(&prep).unwrap();
        let rho_state = QuantumState::from_density(result.rho.clone()).unwrap();
        let f = state_fidelity(&ideal, &rho_state).unwrap();
        assert!(f > 0.99, "fidelity {f}");
    }

    #[test]
    fn tomography_marginal_matches_partial_trace() {
        // GHZ on 3 qubits, tomograph qubits {0, 1}: should match the
        // analytic reduced state (1/2) diag(1, 0, 0, 1).
        let mut prep = Circuit::new(3);
        prep.h(0).cnot(0, 1).cnot(0, 2);
        let result =
            state_tomography(&prep, &[0, 1], 4000, &Backend::Ideal, 29, None).unwrap();
        let ideal = partial_trace(&run_statevector(&prep).unwrap(), &[0, 1]).unwrap();
        let diff = &result.rho - ideal.density().unwrap();
        assert!(frobenius_norm(&diff) < 0.08);
    }

    #[test]
    fn tomography_validates_arguments() {
        let prep = Circuit::new(2);
        assert!(state_tomography(&prep, &[], 100, &Backend::Ideal, 0, None).is_err());
        assert!(state_tomography(&prep, &[5], 100, &Backend::Ideal, 0, None).is_err());
    }
}
