//! Lowering of arbitrary circuits to the native gate set {R(θ,φ), CZ} on a
//! star-topology coupling map.
//!
//! The pipeline is route → decompose → virtual-Z absorption → merge. RZ
//! rotations are never emitted as physical gates: each wire carries a phase
//! frame that is commuted forward through R gates (`RZ(λ)·R(θ,φ) =
//! R(θ,φ+λ)·RZ(λ)`), dropped at Z-basis measurements, and reported in
//! [`NativeCircuit::final_rz`] for circuits that end without measurement.

mod routing;
mod single;
mod two;

pub use routing::{route, Routed, Topology};
pub use single::{decompose_1q, push_rz_through, Native1q};
pub use two::{decompose_2q, kak_decompose, KakDecomposition};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::math::{distance_up_to_phase, identity, CMat};

/// A circuit lowered to the native gate set, together with its layout.
#[derive(Debug, Clone)]
pub struct NativeCircuit {
    /// Gates restricted to {R, CZ, Measure, Barrier} on physical qubits.
    pub circuit: Circuit,
    /// Final logical → physical map (accounts for routing SWAPs).
    pub layout: Vec<usize>,
    /// Logical → physical map at circuit start.
    pub initial_layout: Vec<usize>,
    /// Per-physical-qubit RZ frame left over at the end of the circuit.
    /// Irrelevant to Z-basis measurement outcomes.
    pub final_rz: Vec<f64>,
}

impl NativeCircuit {
    /// Check the native-closure invariants: allowed kinds only, every CZ on
    /// a topology edge.
    pub fn validate(&self, topology: &Topology) -> Result<()> {
        for gate in &self.circuit.gates {
            match gate {
                Gate::R { .. } | Gate::Measure { .. } | Gate::Barrier => {}
                Gate::Cz { a, b } => {
                    if !topology.is_edge(*a, *b) {
                        return Err(Error::InvalidState(format!(
                            "CZ on ({a}, {b}) is not a topology edge"
                        )));
                    }
                }
                other => {
                    return Err(Error::InvalidState(format!(
                        "non-native gate `{}` in native circuit",
                        other.name()
                    )))
                }
            }
        }
        Ok(())
    }
}

/// How leftover RZ frames are handled at the end of a nativization pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RzOutput {
    /// Report frames in the result; emit no RZ gate.
    Frames,
    /// Materialize frames as trailing RZ gates.
    Explicit,
}

/// Forward pass that merges single-qubit runs into at most one R gate per
/// run while tracking RZ frames. Input gates must be single-qubit, CZ,
/// Measure or Barrier.
fn nativize(circuit: &Circuit, mode: RzOutput) -> Result<(Circuit, Vec<f64>)> {
    let n = circuit.num_qubits;
    let mut acc: Vec<Option<CMat>> = vec![None; n];
    let mut out = Circuit::new(n);
    out.metadata = circuit.metadata.clone();

    fn flush_r(out: &mut Circuit, acc: &mut [Option<CMat>], q: usize) -> Result<f64> {
        let Some(m) = acc[q].take() else {
            return Ok(0.0);
        };
        let mut lambda = 0.0;
        for native in single::decompose_1q(&m)? {
            match native {
                Native1q::R { theta, phi } => {
                    out.push(Gate::R {
                        qubit: q,
                        theta,
                        phi,
                    })?;
                }
                Native1q::Rz { lambda: l } => lambda = l,
            }
        }
        if lambda != 0.0 {
            acc[q] = Some(crate::circuit::rz_matrix(lambda));
        }
        Ok(lambda)
    }

    for gate in &circuit.gates {
        match gate {
            g if g.is_single_qubit() => {
                let q = g.qubits()[0];
                let m = g.matrix_1q().unwrap();
                let prev = acc[q].take().unwrap_or_else(|| identity(2));
                acc[q] = Some(m.dot(&prev));
            }
            Gate::Cz { a, b } => {
                // RZ frames commute with CZ exactly; only the R part flushes.
                flush_r(&mut out, &mut acc, *a)?;
                flush_r(&mut out, &mut acc, *b)?;
                out.push(Gate::Cz { a: *a, b: *b })?;
            }
            Gate::Measure { qubits } => {
                for &q in qubits {
                    flush_r(&mut out, &mut acc, q)?;
                    // A frame immediately before Z-measurement is unobservable.
                    acc[q] = None;
                }
                out.push(Gate::Measure {
                    qubits: qubits.clone(),
                })?;
            }
            Gate::Barrier => {
                for q in 0..n {
                    flush_r(&mut out, &mut acc, q)?;
                }
                out.push(Gate::Barrier)?;
            }
            other => {
                return Err(Error::InvalidArgument(format!(
                    "nativize expects lowered gates, found `{}`",
                    other.name()
                )))
            }
        }
    }

    let mut frames = vec![0.0; n];
    for q in 0..n {
        let lambda = flush_r(&mut out, &mut acc, q)?;
        match mode {
            RzOutput::Frames => frames[q] = lambda,
            RzOutput::Explicit => {
                if lambda != 0.0 {
                    out.push(Gate::Rz { qubit: q, lambda })?;
                }
            }
        }
    }
    Ok((out, frames))
}

/// Absorb a lowered circuit (single-qubit gates, CZ, Measure, Barrier) into
/// native form, returning the leftover RZ frames per qubit.
pub(crate) fn absorb_to_native(circuit: &Circuit) -> Result<(Circuit, Vec<f64>)> {
    nativize(circuit, RzOutput::Frames)
}

/// Merge runs of adjacent single-qubit gates. Each run collapses to at most
/// one R gate plus one trailing RZ; gate unitaries are preserved up to
/// global phase. Multi-qubit gates, measurements and barriers bound the
/// runs (RZ frames do commute through CZ and are carried across it).
pub fn merge_1q(circuit: &Circuit) -> Result<Circuit> {
    let n = circuit.num_qubits;
    let mut runs: Vec<Vec<Gate>> = vec![Vec::new(); n];
    let mut out = Circuit::new(n);
    out.metadata = circuit.metadata.clone();

    fn flush_full(out: &mut Circuit, runs: &mut [Vec<Gate>], q: usize) -> Result<()> {
        let run = std::mem::take(&mut runs[q]);
        if run.is_empty() {
            return Ok(());
        }
        let mut m = identity(2);
        for gate in &run {
            m = gate.matrix_1q().unwrap().dot(&m);
        }
        let natives = single::decompose_1q(&m)?;
        if natives.len() > run.len() {
            // Decomposing would grow the run (a lone H becomes R + RZ);
            // keep it untouched so a merge pass never increases the gate
            // count.
            for gate in run {
                out.push(gate)?;
            }
            return Ok(());
        }
        for native in natives {
            match native {
                Native1q::R { theta, phi } => out.push(Gate::R {
                    qubit: q,
                    theta,
                    phi,
                })?,
                Native1q::Rz { lambda } => out.push(Gate::Rz { qubit: q, lambda })?,
            };
        }
        Ok(())
    }

    for gate in &circuit.gates {
        match gate {
            g if g.is_single_qubit() => {
                let q = g.qubits()[0];
                runs[q].push(g.clone());
            }
            Gate::Measure { qubits } => {
                for &q in qubits {
                    flush_full(&mut out, &mut runs, q)?;
                }
                out.push(gate.clone())?;
            }
            Gate::Barrier => {
                for q in 0..n {
                    flush_full(&mut out, &mut runs, q)?;
                }
                out.push(Gate::Barrier)?;
            }
            g => {
                for q in g.qubits() {
                    flush_full(&mut out, &mut runs, q)?;
                }
                out.push(g.clone())?;
            }
        }
    }
    for q in 0..n {
        flush_full(&mut out, &mut runs, q)?;
    }
    Ok(out)
}

/// Lower `circuit` to the native gate set on `topology`.
///
/// The output is unitarily equivalent to the input up to global phase,
/// the layout permutation, and the reported final RZ frames.
pub fn transpile(circuit: &Circuit, topology: &Topology) -> Result<NativeCircuit> {
    let routed = route(circuit, topology)?;

    let mut lowered = Circuit::new(topology.num_qubits);
    lowered.metadata = circuit.metadata.clone();
    for gate in &routed.circuit.gates {
        match gate {
            g if g.is_single_qubit() => {
                lowered.push(g.clone())?;
            }
            Gate::Cz { .. } | Gate::Measure { .. } | Gate::Barrier => {
                lowered.push(gate.clone())?;
            }
            g if g.is_two_qubit() => {
                let qs = g.qubits();
                let fragment = decompose_2q(&g.matrix_2q().unwrap())?;
                for fg in &fragment.gates {
                    lowered.push(map_fragment_gate(fg, qs[0], qs[1]))?;
                }
            }
            other => {
                return Err(Error::InvalidArgument(format!(
                    "cannot transpile gate `{}`",
                    other.name()
                )))
            }
        }
    }

    let (native, frames) = nativize(&lowered, RzOutput::Frames)?;
    let result = NativeCircuit {
        circuit: native,
        layout: routed.final_layout,
        initial_layout: routed.initial_layout,
        final_rz: frames,
    };
    result.validate(topology)?;
    Ok(result)
}

/// Remap a two-qubit fragment gate from local wires (0, 1) onto (a, b).
fn map_fragment_gate(gate: &Gate, a: usize, b: usize) -> Gate {
    let map = |q: usize| if q == 0 { a } else { b };
    match gate {
        Gate::R { qubit, theta, phi } => Gate::R {
            qubit: map(*qubit),
            theta: *theta,
            phi: *phi,
        },
        Gate::Rz { qubit, lambda } => Gate::Rz {
            qubit: map(*qubit),
            lambda: *lambda,
        },
        Gate::Cz { a: x, b: y } => Gate::Cz {
            a: map(*x),
            b: map(*y),
        },
        other => panic!("unexpected fragment gate `{}`", other.name()),
    }
}

/// Statevector fidelity between the original circuit and its transpiled
/// form, undoing the layout permutation and reapplying final RZ frames.
/// Intended for equivalence oracles; both circuits must be measurement-free.
pub fn transpiled_fidelity(original: &Circuit, native: &NativeCircuit) -> Result<f64> {
    use crate::sim::run_statevector;

    let n_log = original.num_qubits;
    let n_phys = native.circuit.num_qubits;
    let logical = run_statevector(original)?;
    let mut physical = run_statevector(&native.circuit)?;
    for (q, &lambda) in native.final_rz.iter().enumerate() {
        if lambda != 0.0 {
            physical.apply_1q(&crate::circuit::rz_matrix(lambda), q)?;
        }
    }

    let log_amps = logical.amplitudes().unwrap();
    let phys_amps = physical.amplitudes().unwrap();
    let mut overlap = num_complex::Complex64::new(0.0, 0.0);
    for idx in 0..(1usize << n_log) {
        // Physical index of padded-logical basis state `idx`: logical qubit q
        // sits at physical position layout[q]; padding qubits stay |0>.
        let mut phys_idx = 0usize;
        for q in 0..n_log {
            let bit = (idx >> (n_log - 1 - q)) & 1;
            phys_idx |= bit << (n_phys - 1 - native.layout[q]);
        }
        overlap += log_amps[idx].conj() * phys_amps[phys_idx];
    }
    Ok(overlap.norm_sqr())
}

/// Equality of two circuits as unitaries up to global phase (dense check).
pub fn circuits_equivalent(a: &Circuit, b: &Circuit, tolerance: f64) -> Result<bool> {
    let ua = a.unitary()?;
    let ub = b.unitary()?;
    if ua.nrows() != ub.nrows() {
        return Ok(false);
    }
    Ok(distance_up_to_phase(&ua, &ub) < tolerance)
}
