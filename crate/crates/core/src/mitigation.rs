//! Error mitigation: readout error mitigation by assignment-matrix
//! inversion (correlated or local), randomized compiling of CZ gates by
//! Pauli twirling, zero-noise extrapolation by global folding, and
//! bootstrap error bars.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::backend::Backend;
use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::math::{project_to_simplex, solve_real};
use crate::rng::{derive_seed, rng_from_seed};
use crate::sim::{sample_multinomial, Counts};
use crate::transpiler::NativeCircuit;

/// Which mitigation steps produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MitigationTag {
    Rem,
    Rc,
    Zne,
}

/// A mitigated estimate with its standard error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MitigatedValue {
    pub value: f64,
    pub stderr: f64,
    pub method_tags: Vec<MitigationTag>,
}

impl MitigatedValue {
    pub fn raw(value: f64, stderr: f64) -> Self {
        MitigatedValue {
            value,
            stderr,
            method_tags: Vec::new(),
        }
    }
}

/// Readout calibration mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RemMode {
    /// Full 2^n x 2^n assignment matrix from 2^n basis-state preparations.
    Correlated,
    /// Per-qubit 2x2 confusion matrices fitted from the all-zeros and
    /// all-ones preparations.
    Local,
}

/// Calibrated assignment model: `observed = A · ideal` column-stochastic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemCalibration {
    pub mode: RemMode,
    pub num_qubits: usize,
    pub shots_per_state: u64,
    /// Column-stochastic assignment matrix, dense over bitstrings
    /// (materialized from per-qubit marginals in local mode).
    pub matrix: Vec<Vec<f64>>,
    /// Per-qubit confusion matrices (local mode only).
    pub local_matrices: Option<Vec<[[f64; 2]; 2]>>,
}

impl RemCalibration {
    pub fn identity(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        let mut matrix = vec![vec![0.0; dim]; dim];
        for (i, row) in matrix.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        RemCalibration {
            mode: RemMode::Correlated,
            num_qubits,
            shots_per_state: 0,
            matrix,
            local_matrices: None,
        }
    }

    pub fn dim(&self) -> usize {
        1usize << self.num_qubits
    }
}

fn preparation_circuit(device_qubits: usize, wires: &[usize], basis_state: usize) -> Circuit {
    let mut circuit = Circuit::new(device_qubits);
    for (pos, &q) in wires.iter().enumerate() {
        if (basis_state >> (wires.len() - 1 - pos)) & 1 == 1 {
            circuit.x(q);
        }
    }
    circuit
        .push(Gate::Measure {
            qubits: wires.to_vec(),
        })
        .expect("valid measure");
    circuit
}

/// Build the assignment matrix by preparing computational basis states and
/// recording their outcome distributions. The default experiment setting is
/// 10,000 shots per basis state.
pub fn calibrate_rem(
    num_qubits: usize,
    mode: RemMode,
    shots_per_state: u64,
    backend: &Backend,
    seed: u64,
) -> Result<RemCalibration> {
    let wires: Vec<usize> = (0..num_qubits).collect();
    calibrate_rem_for_wires(num_qubits, &wires, mode, shots_per_state, backend, seed)
}

/// Calibrate against the specific device wires an experiment measures, in
/// measurement order; `device_qubits` is the full register width.
pub fn calibrate_rem_for_wires(
    device_qubits: usize,
    wires: &[usize],
    mode: RemMode,
    shots_per_state: u64,
    backend: &Backend,
    seed: u64,
) -> Result<RemCalibration> {
    let num_qubits = wires.len();
    if shots_per_state == 0 {
        return Err(Error::InvalidArgument(
            "shots_per_state must be >= 1".to_string(),
        ));
    }
    let dim = 1usize << num_qubits;
    match mode {
        RemMode::Correlated => {
            let mut matrix = vec![vec![0.0; dim]; dim];
            for basis in 0..dim {
                let circuit = preparation_circuit(device_qubits, wires, basis);
                let counts = backend.run(&circuit, shots_per_state, derive_seed(seed, basis as u64))?;
                let probs = counts.to_probability_vector();
                for (observed, &p) in probs.iter().enumerate() {
                    matrix[observed][basis] = p;
                }
            }
            Ok(RemCalibration {
                mode,
                num_qubits,
                shots_per_state,
                matrix,
                local_matrices: None,
            })
        }
        RemMode::Local => {
            // Two preparations: |0...0> gives P(1|0) per qubit, |1...1>
            // gives P(0|1) per qubit, from the marginals.
            let zeros = backend.run(
                &preparation_circuit(device_qubits, wires, 0),
                shots_per_state,
                derive_seed(seed, 0),
            )?;
            let ones = backend.run(
                &preparation_circuit(device_qubits, wires, dim - 1),
                shots_per_state,
                derive_seed(seed, 1),
            )?;
            let mut locals = Vec::with_capacity(num_qubits);
            for q in 0..num_qubits {
                let p10 = marginal_one_frequency(&zeros, q);
                let p01 = 1.0 - marginal_one_frequency(&ones, q);
                locals.push([[1.0 - p10, p10], [p01, 1.0 - p01]]);
            }
            // Materialize the tensor product as the dense assignment matrix.
            let mut matrix = vec![vec![0.0; dim]; dim];
            for ideal in 0..dim {
                for observed in 0..dim {
                    let mut w = 1.0;
                    for (q, m) in locals.iter().enumerate() {
                        let bin = (ideal >> (num_qubits - 1 - q)) & 1;
                        let bout = (observed >> (num_qubits - 1 - q)) & 1;
                        w *= m[bin][bout];
                    }
                    matrix[observed][ideal] = w;
                }
            }
            Ok(RemCalibration {
                mode,
                num_qubits,
                shots_per_state,
                matrix,
                local_matrices: Some(locals),
            })
        }
    }
}

fn marginal_one_frequency(counts: &Counts, qubit: usize) -> f64 {
    let mut ones = 0u64;
    for (bits, &count) in &counts.table {
        if bits.as_bytes()[qubit] == b'1' {
            ones += count;
        }
    }
    ones as f64 / counts.shots.max(1) as f64
}

/// Invert the assignment model by constrained least squares: minimize
/// ‖A·p − f‖ over the probability simplex (projected gradient descent).
/// Raw matrix inversion would produce negative probabilities.
pub fn apply_rem(raw: &Counts, calibration: &RemCalibration) -> Result<Vec<f64>> {
    let dim = calibration.dim();
    if raw.num_bits != calibration.num_qubits {
        return Err(Error::DimensionMismatch {
            expected: calibration.num_qubits,
            got: raw.num_bits,
        });
    }
    if raw.shots == 0 {
        return Err(Error::InvalidArgument("zero-shot counts".to_string()));
    }
    let observed = raw.to_probability_vector();
    let a = &calibration.matrix;

    // Condition estimate via the Gram matrix: power iteration for the top
    // eigenvalue, Gaussian solves for the bottom one.
    let gram = {
        let mut g = vec![vec![0.0; dim]; dim];
        for i in 0..dim {
            for j in 0..dim {
                let mut s = 0.0;
                for k in 0..dim {
                    s += a[k][i] * a[k][j];
                }
                g[i][j] = s;
            }
        }
        g
    };
    let top = {
        let mut v = vec![1.0 / (dim as f64).sqrt(); dim];
        let mut lambda = 0.0;
        for _ in 0..100 {
            let mut w = vec![0.0; dim];
            for i in 0..dim {
                for j in 0..dim {
                    w[i] += gram[i][j] * v[j];
                }
            }
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-300 {
                break;
            }
            lambda = norm;
            for i in 0..dim {
                v[i] = w[i] / norm;
            }
        }
        lambda
    };
    let bottom = {
        // One inverse-power step from a random-ish vector.
        let mut v = vec![0.0; dim];
        for (i, item) in v.iter_mut().enumerate() {
            *item = 1.0 + (i as f64 * 0.7).sin();
        }
        let mut lambda_inv: f64 = 0.0;
        let mut ok = true;
        for _ in 0..30 {
            match solve_real(gram.clone(), v.clone()) {
                Ok(w) => {
                    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm < 1e-300 {
                        ok = false;
                        break;
                    }
                    lambda_inv = norm;
                    for i in 0..dim {
                        v[i] = w[i] / norm;
                    }
                }
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            1.0 / lambda_inv
        } else {
            0.0
        }
    };
    let condition = if bottom > 0.0 { (top / bottom).sqrt() } else { f64::INFINITY };
    if !condition.is_finite() || condition > 1e8 {
        return Err(Error::IllConditioned(condition));
    }

    // Projected gradient descent on ½‖Ap − f‖² with step 1/L, L = λmax(AᵀA).
    let step = 1.0 / top.max(1e-12);
    let mut p = project_to_simplex(&observed);
    for _ in 0..2000 {
        // gradient = Aᵀ(Ap - f)
        let mut ap = vec![0.0; dim];
        for (i, row) in a.iter().enumerate() {
            let mut s = 0.0;
            for j in 0..dim {
                s += row[j] * p[j];
            }
            ap[i] = s - observed[i];
        }
        let mut grad = vec![0.0; dim];
        for i in 0..dim {
            let mut s = 0.0;
            for (k, row) in a.iter().enumerate() {
                s += row[i] * ap[k];
            }
            grad[i] = s;
        }
        let next: Vec<f64> = p
            .iter()
            .zip(&grad)
            .map(|(&x, &g)| x - step * g)
            .collect();
        let next = project_to_simplex(&next);
        let delta: f64 = next
            .iter()
            .zip(&p)
            .map(|(a, b)| (a - b).abs())
            .sum();
        p = next;
        if delta < 1e-14 {
            break;
        }
    }
    Ok(p)
}

/// Wrap every CZ in `num_randomizations` independent uniformly random Pauli
/// pairs with exact compensating pairs, then merge the Paulis into adjacent
/// single-qubit gates. Each variant's ideal unitary equals the original up
/// to global phase.
pub fn pauli_twirl_cz(
    native: &NativeCircuit,
    num_randomizations: usize,
    rng_seed: u64,
) -> Result<Vec<NativeCircuit>> {
    let mut variants = Vec::with_capacity(num_randomizations);
    for variant_idx in 0..num_randomizations {
        let mut rng = rng_from_seed(derive_seed(rng_seed, variant_idx as u64));
        let mut twirled = Circuit::new(native.circuit.num_qubits);
        twirled.metadata = native.circuit.metadata.clone();
        for gate in &native.circuit.gates {
            match gate {
                Gate::Cz { a, b } => {
                    let pa: u8 = rng.gen_range(0..4);
                    let pb: u8 = rng.gen_range(0..4);
                    let (ca, cb) = cz_conjugated_pair(pa, pb);
                    push_pauli(&mut twirled, *a, pa)?;
                    push_pauli(&mut twirled, *b, pb)?;
                    twirled.push(Gate::Cz { a: *a, b: *b })?;
                    push_pauli(&mut twirled, *a, ca)?;
                    push_pauli(&mut twirled, *b, cb)?;
                }
                g => {
                    twirled.push(g.clone())?;
                }
            }
        }
        // Merge the inserted Paulis into neighbouring R gates and absorb
        // any new RZ into the per-qubit frames.
        let (merged, frames) = crate::transpiler::absorb_to_native(&twirled)?;
        let final_rz: Vec<f64> = native
            .final_rz
            .iter()
            .zip(&frames)
            .map(|(&old, &new)| old + new)
            .collect();
        variants.push(NativeCircuit {
            circuit: merged,
            layout: native.layout.clone(),
            initial_layout: native.initial_layout.clone(),
            final_rz,
        });
    }
    Ok(variants)
}

/// Pauli index encoding: 0 = I, 1 = X, 2 = Y, 3 = Z.
fn push_pauli(circuit: &mut Circuit, qubit: usize, pauli: u8) -> Result<()> {
    match pauli {
        0 => {}
        1 => {
            circuit.push(Gate::X { qubit })?;
        }
        2 => {
            circuit.push(Gate::Y { qubit })?;
        }
        3 => {
            circuit.push(Gate::Z { qubit })?;
        }
        _ => unreachable!(),
    }
    Ok(())
}

/// CZ conjugation on the Pauli group (phases dropped):
/// X₁ -> X₁Z₂, Y₁ -> Y₁Z₂, Z₁ -> Z₁ and symmetrically for qubit 2.
fn cz_conjugated_pair(pa: u8, pb: u8) -> (u8, u8) {
    // Represent as (x, z) bits per qubit.
    let to_xz = |p: u8| -> (u8, u8) {
        match p {
            0 => (0, 0),
            1 => (1, 0),
            2 => (1, 1),
            3 => (0, 1),
            _ => unreachable!(),
        }
    };
    let from_xz = |x: u8, z: u8| -> u8 {
        match (x, z) {
            (0, 0) => 0,
            (1, 0) => 1,
            (1, 1) => 2,
            (0, 1) => 3,
            _ => unreachable!(),
        }
    };
    let (xa, za) = to_xz(pa);
    let (xb, zb) = to_xz(pb);
    // CZ: z_a ^= x_b, z_b ^= x_a.
    let (za, zb) = (za ^ xb, zb ^ xa);
    (from_xz(xa, za), from_xz(xb, zb))
}

/// Global folding `C (C† C)^((scale-1)/2)`: the ideal unitary is unchanged
/// while the native gate count scales by `scale`. Trailing measurements are
/// kept at the end; `scale` must be odd.
pub fn fold_global(native: &NativeCircuit, scale: u64) -> Result<NativeCircuit> {
    if scale.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "folding scale must be odd, got {scale}"
        )));
    }
    // Split the unitary body from the measurements. Measurements are moved
    // to the end of the folded circuit, which is sound as long as no gate
    // acts on a wire after it has been measured.
    let mut body = Vec::new();
    let mut tail = Vec::new();
    let mut measured = vec![false; native.circuit.num_qubits];
    for gate in &native.circuit.gates {
        match gate {
            Gate::Measure { qubits } => {
                for &q in qubits {
                    measured[q] = true;
                }
                tail.push(gate.clone());
            }
            g => {
                if g.qubits().iter().any(|&q| measured[q]) {
                    return Err(Error::InvalidArgument(
                        "folding requires per-wire terminal measurements".to_string(),
                    ));
                }
                body.push(g.clone());
            }
        }
    }
    let mut folded = Circuit::new(native.circuit.num_qubits);
    folded.metadata = native.circuit.metadata.clone();
    for gate in &body {
        folded.push(gate.clone())?;
    }
    for _ in 0..(scale - 1) / 2 {
        for gate in body.iter().rev() {
            folded.push(gate.inverse()?)?;
        }
        for gate in &body {
            folded.push(gate.clone())?;
        }
    }
    for gate in tail {
        folded.push(gate)?;
    }
    Ok(NativeCircuit {
        circuit: folded,
        layout: native.layout.clone(),
        initial_layout: native.initial_layout.clone(),
        final_rz: native.final_rz.clone(),
    })
}

/// Weighted polynomial fit in the noise scale, evaluated at zero. The
/// degree is `min(len - 1, 2)`; the standard error comes from the fit
/// covariance under the reported per-point errors.
pub fn zne_extrapolate(points: &[(f64, f64, f64)]) -> Result<MitigatedValue> {
    let mut scales: Vec<f64> = points.iter().map(|p| p.0).collect();
    scales.sort_by(|a, b| a.partial_cmp(b).unwrap());
    scales.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if scales.len() < 2 {
        return Err(Error::InvalidArgument(
            "zero-noise extrapolation needs at least 2 distinct scales".to_string(),
        ));
    }
    let degree = (points.len() - 1).min(2);
    let n_coef = degree + 1;
    // Weighted normal equations for a Vandermonde design matrix.
    let weight = |stderr: f64| -> f64 {
        if stderr > 1e-12 {
            1.0 / (stderr * stderr)
        } else {
            1.0
        }
    };
    let mut xtx = vec![vec![0.0; n_coef]; n_coef];
    let mut xty = vec![0.0; n_coef];
    for &(s, v, e) in points {
        let w = weight(e);
        let mut pow = vec![1.0; n_coef];
        for k in 1..n_coef {
            pow[k] = pow[k - 1] * s;
        }
        for i in 0..n_coef {
            xty[i] += w * pow[i] * v;
            for j in 0..n_coef {
                xtx[i][j] += w * pow[i] * pow[j];
            }
        }
    }
    let coeffs = solve_real(xtx.clone(), xty)?;
    // Value at scale 0 is the intercept; its variance is [ (XᵀWX)^-1 ]_00.
    let mut e0 = vec![0.0; n_coef];
    e0[0] = 1.0;
    let var = solve_real(xtx, e0).map(|col| col[0].max(0.0))?;
    Ok(MitigatedValue {
        value: coeffs[0],
        stderr: var.sqrt(),
        method_tags: vec![MitigationTag::Zne],
    })
}

/// Standard deviation of `statistic` over multinomial resamples of the
/// empirical distribution in `counts`.
pub fn bootstrap_stderr(
    counts: &Counts,
    statistic: impl Fn(&Counts) -> f64,
    resamples: usize,
    rng_seed: u64,
) -> Result<f64> {
    if counts.shots == 0 {
        return Err(Error::InvalidArgument("zero-shot counts".to_string()));
    }
    if resamples < 100 {
        return Err(Error::InvalidArgument(format!(
            "need at least 100 bootstrap resamples, got {resamples}"
        )));
    }
    let keys: Vec<&String> = counts.table.keys().collect();
    let probs: Vec<f64> = keys
        .iter()
        .map(|k| counts.table[*k] as f64 / counts.shots as f64)
        .collect();
    let mut values = Vec::with_capacity(resamples);
    for r in 0..resamples {
        let draw = sample_multinomial(&probs, counts.shots, derive_seed(rng_seed, r as u64));
        let mut resampled = Counts::new(counts.num_bits);
        for (k, &n) in keys.iter().zip(&draw) {
            if n > 0 {
                resampled.table.insert((*k).clone(), n);
                resampled.shots += n;
            }
        }
        values.push(statistic(&resampled));
    }
    let mean = values.iter().sum::<f64>() / resamples as f64;
    let var = values
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / (resamples as f64 - 1.0);
    Ok(var.sqrt())
}
