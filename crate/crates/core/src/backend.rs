//! Circuit execution: ideal or noisy runs producing shot counts.
//!
//! A run owns its state exclusively; distinct runs are independent, so
//! callers may execute circuits in parallel with per-task derived seeds.

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::noise::{apply_gate_noise, apply_readout_confusion, NoiseProfile};
use crate::rng::derive_seed;
use crate::sim::{sample_counts, Counts, QuantumState};

/// Execution backend: exact simulation, optionally with an attached noise
/// profile. Density-matrix evolution is selected automatically whenever a
/// stochastic channel is configured.
#[derive(Debug, Clone)]
pub enum Backend {
    Ideal,
    Noisy(NoiseProfile),
}

impl Backend {
    pub fn noise_profile(&self) -> Option<&NoiseProfile> {
        match self {
            Backend::Ideal => None,
            Backend::Noisy(p) => Some(p),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Backend::Ideal => "noiseless".to_string(),
            Backend::Noisy(p) => p.label.clone(),
        }
    }

    /// Final state of the unitary part of `circuit` (measurements ignored).
    pub fn final_state(&self, circuit: &Circuit) -> Result<QuantumState> {
        let unitary_part = circuit.without_measurements();
        match self {
            Backend::Ideal => crate::sim::run_statevector(&unitary_part),
            Backend::Noisy(profile) => {
                profile.validate()?;
                if profile.has_stochastic_noise() {
                    let mut state = QuantumState::zero_density(circuit.num_qubits);
                    for gate in &unitary_part.gates {
                        if matches!(gate, Gate::Barrier) {
                            continue;
                        }
                        apply_gate_noise(&mut state, gate, profile)?;
                    }
                    Ok(state)
                } else {
                    // Purely coherent noise keeps a statevector representation.
                    let mut state = QuantumState::zero(circuit.num_qubits);
                    for gate in &unitary_part.gates {
                        if matches!(gate, Gate::Barrier) {
                            continue;
                        }
                        apply_gate_noise(&mut state, gate, profile)?;
                    }
                    Ok(state)
                }
            }
        }
    }

    /// Execute with `shots` repetitions and return counts over the measured
    /// qubits (in measurement order). Measurements must be terminal per
    /// wire; readout confusion is applied per shot.
    pub fn run(&self, circuit: &Circuit, shots: u64, seed: u64) -> Result<Counts> {
        if shots == 0 {
            return Err(Error::InvalidArgument("shots must be >= 1".to_string()));
        }
        let measured = circuit.measured_qubits();
        if measured.is_empty() {
            return Err(Error::MissingMeasurement);
        }
        let mut done = vec![false; circuit.num_qubits];
        for gate in &circuit.gates {
            match gate {
                Gate::Measure { qubits } => {
                    for &q in qubits {
                        done[q] = true;
                    }
                }
                g => {
                    if g.qubits().iter().any(|&q| done[q]) {
                        return Err(Error::InvalidArgument(
                            "gate acts on a wire after its measurement".to_string(),
                        ));
                    }
                }
            }
        }
        let state = self.final_state(circuit)?;
        let full = sample_counts(&state, shots, derive_seed(seed, 0))?;
        let marginal = marginalize(&full, circuit.num_qubits, &measured);
        match self.noise_profile() {
            Some(profile) if profile.has_readout_noise() => {
                apply_readout_confusion(&marginal, &measured, profile, derive_seed(seed, 1))
            }
            _ => Ok(marginal),
        }
    }

    /// Exact Born probabilities over the measured qubits, including gate
    /// noise but excluding readout confusion and shot noise.
    pub fn probabilities(&self, circuit: &Circuit) -> Result<Vec<f64>> {
        let measured = circuit.measured_qubits();
        if measured.is_empty() {
            return Err(Error::MissingMeasurement);
        }
        let state = self.final_state(circuit)?;
        let full = state.probabilities();
        let n = circuit.num_qubits;
        let k = measured.len();
        let mut out = vec![0.0; 1 << k];
        for (idx, &p) in full.iter().enumerate() {
            let mut sub = 0usize;
            for (pos, &q) in measured.iter().enumerate() {
                let bit = (idx >> (n - 1 - q)) & 1;
                sub |= bit << (k - 1 - pos);
            }
            out[sub] += p;
        }
        Ok(out)
    }
}

/// Marginalize full-register counts onto the measured qubits, preserving
/// measurement order.
fn marginalize(full: &Counts, num_qubits: usize, measured: &[usize]) -> Counts {
    if measured.len() == num_qubits && measured.iter().enumerate().all(|(i, &q)| i == q) {
        return full.clone();
    }
    let mut out = Counts::new(measured.len());
    for (bits, &count) in &full.table {
        let bytes = bits.as_bytes();
        let sub: String = measured
            .iter()
            .map(|&q| bytes[q] as char)
            .collect();
        *out.table.entry(sub).or_insert(0) += count;
        out.shots += count;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_run_of_bell_circuit() {
        let mut c = Circuit::new(2);
        c.h(0).cnot(0, 1).measure_all();
        let counts = Backend::Ideal.run(&c, 10_000, 5).unwrap();
        assert_eq!(counts.shots, 10_000);
        let f00 = counts.frequency("00");
        let f11 = counts.frequency("11");
        assert!((f00 - 0.5).abs() < 0.02);
        assert!((f00 + f11 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn run_requires_measurement() {
        let c = Circuit::new(1);
        assert!(matches!(
            Backend::Ideal.run(&c, 10, 0),
            Err(Error::MissingMeasurement)
        ));
    }

    #[test]
    fn gates_after_measurement_are_rejected() {
        let mut c = Circuit::new(2);
        c.h(0);
        c.push(Gate::Measure { qubits: vec![0] }).unwrap();
        c.x(0);
        assert!(Backend::Ideal.run(&c, 10, 0).is_err());

        // Gates on other wires after a measurement are fine.
        let mut c = Circuit::new(2);
        c.h(0);
        c.push(Gate::Measure { qubits: vec![0] }).unwrap();
        c.x(1);
        assert!(Backend::Ideal.run(&c, 10, 0).is_ok());
    }

    #[test]
    fn marginal_counts_respect_measurement_order() {
        let mut c = Circuit::new(3);
        c.x(2);
        c.push(Gate::Measure { qubits: vec![2, 0] }).unwrap();
        let counts = Backend::Ideal.run(&c, 100, 1).unwrap();
        assert_eq!(counts.table.get("10"), Some(&100));
    }

    #[test]
    fn noisy_run_uses_density_path_and_readout() {
        let mut profile = NoiseProfile::readout_only(1, 0.2);
        profile.depolarizing_1q = 0.01;
        let backend = Backend::Noisy(profile);
        let mut c = Circuit::new(1);
        c.measure_all();
        let counts = backend.run(&c, 50_000, 7).unwrap();
        // |0> with 20% flips: about 20% ones.
        assert!((counts.frequency("1") - 0.2).abs() < 0.02);
    }

    #[test]
    fn probabilities_marginalize_correctly() {
        let mut c = Circuit::new(2);
        c.h(0);
        c.push(Gate::Measure { qubits: vec![0] }).unwrap();
        let p = Backend::Ideal.probabilities(&c).unwrap();
        assert_eq!(p.len(), 2);
        assert!((p[0] - 0.5).abs() < 1e-12);
    }
}
