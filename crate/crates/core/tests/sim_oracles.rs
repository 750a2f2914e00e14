//! Simulator oracles: the statevector engine must agree with the dense
//! matrix product of the gate unitaries, and sampling must follow the
//! Born distribution.

use ndarray::Array1;
use qstar_core::circuit::{Circuit, Gate};
use qstar_core::math::{cr, haar_random_unitary, CVec};
use qstar_core::rng::{derive_seed, rng_from_seed};
use qstar_core::sim::{partial_trace, run_statevector, sample_counts, state_fidelity, QuantumState};
use rand::Rng;

fn random_circuit(num_qubits: usize, length: usize, seed: u64) -> Circuit {
    let mut rng = rng_from_seed(seed);
    let mut circuit = Circuit::new(num_qubits);
    for _ in 0..length {
        let q = rng.gen_range(0..num_qubits);
        match rng.gen_range(0..12) {
            0 => circuit.h(q),
            1 => circuit.x(q),
            2 => circuit.y(q),
            3 => circuit.z(q),
            4 => circuit.s(q),
            5 => circuit.r(q, rng.gen_range(0.0..6.28), rng.gen_range(0.0..6.28)),
            6 => circuit.rz(q, rng.gen_range(-3.14..3.14)),
            7 => circuit.ry(q, rng.gen_range(-3.14..3.14)),
            8 => {
                let m = haar_random_unitary(2, &mut rng);
                circuit.push(Gate::U2 { qubit: q, matrix: m }).unwrap();
                &mut circuit
            }
            9 if num_qubits > 1 => {
                let other = (q + rng.gen_range(1..num_qubits)) % num_qubits;
                circuit.cz(q, other)
            }
            10 if num_qubits > 1 => {
                let other = (q + rng.gen_range(1..num_qubits)) % num_qubits;
                circuit.cnot(q, other)
            }
            11 if num_qubits > 1 => {
                let other = (q + rng.gen_range(1..num_qubits)) % num_qubits;
                let m = haar_random_unitary(4, &mut rng);
                circuit
                    .push(Gate::U4 {
                        a: q,
                        b: other,
                        matrix: m,
                    })
                    .unwrap();
                &mut circuit
            }
            _ => circuit.h(q),
        };
    }
    circuit
}

#[test]
fn statevector_agrees_with_dense_unitary_product() {
    for n in 1..=4usize {
        for trial in 0..25u64 {
            let circuit = random_circuit(n, 3 * n + 4, derive_seed(0xABCDEF, n as u64 * 100 + trial));
            let state = run_statevector(&circuit).unwrap();
            let u = circuit.unitary().unwrap();
            let expected: CVec = u.column(0).to_owned();
            let amps = state.amplitudes().unwrap();
            let diff: f64 = amps
                .iter()
                .zip(expected.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(diff < 1e-9, "n={n} trial={trial}: deviation {diff}");
        }
    }
}

#[test]
fn norm_is_preserved_through_long_circuits() {
    let circuit = random_circuit(4, 200, 77);
    let state = run_statevector(&circuit).unwrap();
    assert!((state.norm() - 1.0).abs() < 1e-9);
}

#[test]
fn ghz5_circuit_amplitudes() {
    let mut circuit = Circuit::new(5);
    circuit.h(0);
    for k in 1..5 {
        circuit.cnot(0, k);
    }
    let state = run_statevector(&circuit).unwrap();
    let amps = state.amplitudes().unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    assert!((amps[0] - cr(s)).norm() < 1e-12);
    assert!((amps[31] - cr(s)).norm() < 1e-12);
    for i in 1..31 {
        assert!(amps[i].norm() < 1e-12);
    }
}

#[test]
fn ghz5_partial_traces_match_analytic_forms() {
    let mut circuit = Circuit::new(5);
    circuit.h(0);
    for k in 1..5 {
        circuit.cnot(0, k);
    }
    let state = run_statevector(&circuit).unwrap();

    // Qubits {1, 2} (0-based {0, 1}): (1/2) diag(1, 0, 0, 1).
    let rho12 = partial_trace(&state, &[0, 1]).unwrap();
    let m = rho12.density().unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let expected = if (i, j) == (0, 0) || (i, j) == (3, 3) {
                0.5
            } else {
                0.0
            };
            assert!((m[(i, j)] - cr(expected)).norm() < 1e-12);
        }
    }

    // Qubits {3, 4, 5} (0-based {2, 3, 4}): (1/2) diag(1, 0, ..., 0, 1).
    let rho345 = partial_trace(&state, &[2, 3, 4]).unwrap();
    let m = rho345.density().unwrap();
    for i in 0..8 {
        let expected = if i == 0 || i == 7 { 0.5 } else { 0.0 };
        assert!((m[(i, i)] - cr(expected)).norm() < 1e-12);
    }
}

#[test]
fn partial_trace_of_everything_is_identity_and_trace_one() {
    let circuit = random_circuit(3, 12, 999);
    let state = run_statevector(&circuit).unwrap();
    let full = partial_trace(&state, &[0, 1, 2]).unwrap();
    let rho_direct = state.clone().into_density();
    let d = full.density().unwrap() - rho_direct.density().unwrap();
    assert!(qstar_core::math::frobenius_norm(&d) < 1e-9);

    for keep in [vec![0], vec![1, 2], vec![0, 2]] {
        let reduced = partial_trace(&state, &keep).unwrap();
        let trace: f64 = reduced.density().unwrap().diag().iter().map(|z| z.re).sum();
        assert!((trace - 1.0).abs() < 1e-9);
    }
}

#[test]
fn ghz_fidelity_with_maximally_mixed_is_one_over_32() {
    let mut circuit = Circuit::new(5);
    circuit.h(0);
    for k in 1..5 {
        circuit.cnot(0, k);
    }
    let ghz = run_statevector(&circuit).unwrap();
    let dim = 32;
    let mut mixed: qstar_core::math::CMat = ndarray::Array2::zeros((dim, dim));
    for i in 0..dim {
        mixed[(i, i)] = cr(1.0 / dim as f64);
    }
    let mixed = QuantumState::from_density(mixed).unwrap();
    let f = state_fidelity(&ghz, &mixed).unwrap();
    assert!((f - 1.0 / 32.0).abs() < 1e-12);
}

#[test]
fn ghz_sampling_concentrates_on_the_two_branches() {
    let mut circuit = Circuit::new(5);
    circuit.h(0);
    for k in 1..5 {
        circuit.cnot(0, k);
    }
    let state = run_statevector(&circuit).unwrap();
    let counts = sample_counts(&state, 100_000, 12).unwrap();
    let f0 = counts.frequency("00000");
    let f1 = counts.frequency("11111");
    assert!((f0 + f1 - 1.0).abs() < 1e-12);
    assert!((f0 - 0.5).abs() < 0.01);
}

#[test]
fn pure_state_round_trip_through_density() {
    let circuit = random_circuit(3, 15, 4242);
    let state = run_statevector(&circuit).unwrap();
    let as_density = state.clone().into_density();
    let f = state_fidelity(&state, &as_density).unwrap();
    assert!((f - 1.0).abs() < 1e-9);
}

#[test]
fn invalid_statevector_is_rejected() {
    let amps: CVec = Array1::from_vec(vec![cr(1.0), cr(1.0)]);
    assert!(QuantumState::from_vector(amps).is_err());
    let amps: CVec = Array1::from_vec(vec![cr(1.0), cr(0.0), cr(0.0)]);
    assert!(QuantumState::from_vector(amps).is_err());
}
