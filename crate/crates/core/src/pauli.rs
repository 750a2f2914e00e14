//! Pauli strings, observables, basis changes, qubit-wise commuting
//! grouping, and expectation estimation from shots.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::backend::Backend;
use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::math::{kron, CMat};
use crate::mitigation::{bootstrap_stderr, MitigatedValue, MitigationTag, RemCalibration};
use crate::rng::derive_seed;
use crate::sim::{Counts, QuantumState};

/// One Pauli letter per qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PauliOp {
    I,
    X,
    Y,
    Z,
}

impl PauliOp {
    pub fn from_char(ch: char) -> Result<Self> {
        match ch {
            'I' | 'i' => Ok(PauliOp::I),
            'X' | 'x' => Ok(PauliOp::X),
            'Y' | 'y' => Ok(PauliOp::Y),
            'Z' | 'z' => Ok(PauliOp::Z),
            other => Err(Error::Parse(format!("invalid Pauli letter `{other}`"))),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            PauliOp::I => 'I',
            PauliOp::X => 'X',
            PauliOp::Y => 'Y',
            PauliOp::Z => 'Z',
        }
    }
}

/// A tensor product of Pauli letters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PauliString {
    pub ops: Vec<PauliOp>,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString {
            ops: vec![PauliOp::I; n],
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ops = text
            .chars()
            .map(PauliOp::from_char)
            .collect::<Result<Vec<_>>>()?;
        if ops.is_empty() {
            return Err(Error::Parse("empty Pauli string".to_string()));
        }
        Ok(PauliString { ops })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.ops.iter().all(|&op| op == PauliOp::I)
    }

    /// Qubits with a non-identity letter.
    pub fn support(&self) -> Vec<usize> {
        self.ops
            .iter()
            .enumerate()
            .filter(|(_, &op)| op != PauliOp::I)
            .map(|(q, _)| q)
            .collect()
    }

    /// Dense matrix (for oracles; 2^n x 2^n).
    pub fn matrix(&self) -> CMat {
        let mut m = crate::math::identity(1);
        for &op in &self.ops {
            let gate = match op {
                PauliOp::I => crate::math::identity(2),
                PauliOp::X => Gate::X { qubit: 0 }.matrix_1q().unwrap(),
                PauliOp::Y => Gate::Y { qubit: 0 }.matrix_1q().unwrap(),
                PauliOp::Z => Gate::Z { qubit: 0 }.matrix_1q().unwrap(),
            };
            m = kron(&m, &gate);
        }
        m
    }

    /// <state|P|state> without building the dense matrix.
    pub fn expectation(&self, state: &QuantumState) -> Result<f64> {
        let n = state.num_qubits();
        if self.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.len(),
            });
        }
        let mut x_mask = 0usize;
        let mut z_mask = 0usize;
        let mut y_count = 0u32;
        for (q, &op) in self.ops.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            match op {
                PauliOp::I => {}
                PauliOp::X => x_mask |= bit,
                PauliOp::Y => {
                    x_mask |= bit;
                    z_mask |= bit;
                    y_count += 1;
                }
                PauliOp::Z => z_mask |= bit,
            }
        }
        // P = i^y · X^{x_mask} Z^{z_mask} (per-qubit Y = i X Z), so
        // P|j> = i^y (-1)^{|j & z_mask|} |j ^ x_mask>.
        let phase_for = |j: usize| -> num_complex::Complex64 {
            let zpar = ((j & z_mask).count_ones() & 1) as i32;
            let mut phase = num_complex::Complex64::new(if zpar == 0 { 1.0 } else { -1.0 }, 0.0);
            phase *= num_complex::Complex64::new(0.0, 1.0).powu(y_count % 4);
            phase
        };
        let value = match state {
            QuantumState::Vector { amplitudes, .. } => {
                let mut acc = num_complex::Complex64::new(0.0, 0.0);
                for j in 0..amplitudes.len() {
                    let target = j ^ x_mask;
                    acc += amplitudes[target].conj() * phase_for(j) * amplitudes[j];
                }
                acc
            }
            QuantumState::Density { matrix, .. } => {
                // tr(P rho) = sum_j <j|P rho|j> = sum_j phase(j') rho[j', j] ...
                let mut acc = num_complex::Complex64::new(0.0, 0.0);
                let dim = matrix.nrows();
                for j in 0..dim {
                    let flipped = j ^ x_mask;
                    acc += phase_for(flipped) * matrix[(flipped, j)];
                }
                acc
            }
        };
        Ok(value.re)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for op in &self.ops {
            write!(f, "{}", op.as_char())?;
        }
        Ok(())
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        PauliString::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Real-weighted sum of Pauli strings. In config files an observable is a
/// list of `{"coefficient": c, "pauli": "XYZI"}` terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    pub terms: Vec<(f64, PauliString)>,
}

#[derive(Serialize, Deserialize)]
struct TermSpec {
    coefficient: f64,
    pauli: PauliString,
}

impl Serialize for Observable {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.terms.iter().map(|(c, s)| TermSpec {
            coefficient: *c,
            pauli: s.clone(),
        }))
    }
}

impl<'de> Deserialize<'de> for Observable {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let terms = Vec::<TermSpec>::deserialize(deserializer)?;
        Observable::new(
            terms
                .into_iter()
                .map(|t| (t.coefficient, t.pauli))
                .collect(),
        )
        .map_err(serde::de::Error::custom)
    }
}

impl Observable {
    pub fn new(terms: Vec<(f64, PauliString)>) -> Result<Self> {
        let obs = Observable { terms }.canonicalized()?;
        Ok(obs)
    }

    pub fn zero() -> Self {
        Observable { terms: Vec::new() }
    }

    /// Merge duplicate strings, drop zero coefficients, check finiteness.
    fn canonicalized(self) -> Result<Self> {
        let mut merged: BTreeMap<PauliString, f64> = BTreeMap::new();
        let mut width = None;
        for (coeff, string) in self.terms {
            if !coeff.is_finite() {
                return Err(Error::NonFiniteParameter(coeff));
            }
            if let Some(w) = width {
                if string.len() != w {
                    return Err(Error::DimensionMismatch {
                        expected: w,
                        got: string.len(),
                    });
                }
            } else {
                width = Some(string.len());
            }
            *merged.entry(string).or_insert(0.0) += coeff;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| c.abs() > 1e-15)
            .map(|(s, c)| (c, s))
            .collect();
        Ok(Observable { terms })
    }

    pub fn num_qubits(&self) -> Option<usize> {
        self.terms.first().map(|(_, s)| s.len())
    }

    /// Coefficient of the all-identity string.
    pub fn constant_term(&self) -> f64 {
        self.terms
            .iter()
            .find(|(_, s)| s.is_identity())
            .map(|(c, _)| *c)
            .unwrap_or(0.0)
    }

    /// Dense Hermitian matrix (oracle use).
    pub fn matrix(&self, num_qubits: usize) -> CMat {
        let dim = 1usize << num_qubits;
        let mut m: CMat = ndarray::Array2::zeros((dim, dim));
        for (coeff, string) in &self.terms {
            m = m + string.matrix().mapv(|z| z * crate::math::cr(*coeff));
        }
        m
    }

    /// Exact expectation on a state.
    pub fn expectation(&self, state: &QuantumState) -> Result<f64> {
        let mut acc = 0.0;
        for (coeff, string) in &self.terms {
            acc += coeff * string.expectation(state)?;
        }
        Ok(acc)
    }
}

/// Basis-change fragment mapping the Pauli's eigenbasis onto the Z basis:
/// H for X, H·S† for Y, nothing for Z or I.
pub fn basis_change(pauli: &PauliString) -> Circuit {
    let mut circuit = Circuit::new(pauli.len());
    for (q, &op) in pauli.ops.iter().enumerate() {
        match op {
            PauliOp::X => {
                circuit.h(q);
            }
            PauliOp::Y => {
                circuit.sdg(q).h(q);
            }
            PauliOp::I | PauliOp::Z => {}
        }
    }
    circuit
}

/// Mean of (-1)^(parity of bits on the support) over counts measured in the
/// basis produced by `basis_change(pauli)`.
pub fn expectation_from_counts(counts: &Counts, pauli: &PauliString) -> Result<f64> {
    if pauli.len() != counts.num_bits {
        return Err(Error::DimensionMismatch {
            expected: counts.num_bits,
            got: pauli.len(),
        });
    }
    if counts.shots == 0 {
        return Err(Error::InvalidArgument("zero-shot counts".to_string()));
    }
    let support = pauli.support();
    let mut acc = 0i64;
    for (bits, &count) in &counts.table {
        let bytes = bits.as_bytes();
        let parity = support
            .iter()
            .filter(|&&q| bytes[q] == b'1')
            .count()
            % 2;
        acc += if parity == 0 { count as i64 } else { -(count as i64) };
    }
    Ok(acc as f64 / counts.shots as f64)
}

/// Same estimator on a probability vector (used after readout mitigation).
pub fn expectation_from_probabilities(probs: &[f64], pauli: &PauliString) -> Result<f64> {
    let n = pauli.len();
    if probs.len() != 1usize << n {
        return Err(Error::DimensionMismatch {
            expected: 1usize << n,
            got: probs.len(),
        });
    }
    let support = pauli.support();
    let mut acc = 0.0;
    for (idx, &p) in probs.iter().enumerate() {
        let parity = support
            .iter()
            .filter(|&&q| (idx >> (n - 1 - q)) & 1 == 1)
            .count()
            % 2;
        acc += if parity == 0 { p } else { -p };
    }
    Ok(acc)
}

/// A measurement setting (one non-identity letter per qubit position used
/// by any assigned term) together with the indices of the terms it covers.
#[derive(Debug, Clone)]
pub struct MeasurementSetting {
    pub basis: PauliString,
    pub term_indices: Vec<usize>,
}

/// Greedy first-fit grouping into qubit-wise commuting settings. Every term
/// is assigned to exactly one setting.
pub fn group_qubitwise(observable: &Observable) -> Vec<MeasurementSetting> {
    let mut settings: Vec<MeasurementSetting> = Vec::new();
    for (idx, (_, string)) in observable.terms.iter().enumerate() {
        let mut placed = false;
        for setting in settings.iter_mut() {
            let compatible = string.ops.iter().zip(&setting.basis.ops).all(|(&t, &s)| {
                t == PauliOp::I || s == PauliOp::I || t == s
            });
            if compatible {
                for (slot, &t) in setting.basis.ops.iter_mut().zip(&string.ops) {
                    if t != PauliOp::I {
                        *slot = t;
                    }
                }
                setting.term_indices.push(idx);
                placed = true;
                break;
            }
        }
        if !placed {
            settings.push(MeasurementSetting {
                basis: string.clone(),
                term_indices: vec![idx],
            });
        }
    }
    settings
}

/// Options for shot-based observable estimation.
#[derive(Debug, Clone)]
pub struct EstimateOptions {
    pub shots: u64,
    pub seed: u64,
    pub bootstrap_resamples: usize,
    pub rem: Option<RemCalibration>,
}

impl EstimateOptions {
    pub fn new(shots: u64, seed: u64) -> Self {
        EstimateOptions {
            shots,
            seed,
            bootstrap_resamples: 1000,
            rem: None,
        }
    }
}

/// Estimate `observable` on the state prepared by `prep` by measuring each
/// qubit-wise commuting group once, with bootstrap error bars and optional
/// readout error mitigation.
pub fn estimate_observable(
    backend: &Backend,
    prep: &Circuit,
    observable: &Observable,
    options: &EstimateOptions,
) -> Result<MitigatedValue> {
    if let Some(width) = observable.num_qubits() {
        if width != prep.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: prep.num_qubits,
                got: width,
            });
        }
    }
    let settings = group_qubitwise(observable);
    let mut value = 0.0;
    let mut variance = 0.0;
    let mut tags = vec![];
    if options.rem.is_some() {
        tags.push(MitigationTag::Rem);
    }

    for (setting_idx, setting) in settings.iter().enumerate() {
        let coeffs: Vec<(f64, &PauliString)> = setting
            .term_indices
            .iter()
            .map(|&i| (observable.terms[i].0, &observable.terms[i].1))
            .collect();
        // A purely-constant group needs no circuit.
        if coeffs.iter().all(|(_, s)| s.is_identity()) {
            value += coeffs.iter().map(|(c, _)| c).sum::<f64>();
            continue;
        }

        let mut circuit = prep.clone();
        for gate in basis_change(&setting.basis).gates {
            circuit.push(gate)?;
        }
        circuit.measure_all();
        let seed = derive_seed(options.seed, setting_idx as u64);
        let counts = backend.run(&circuit, options.shots, seed)?;

        let group_value = |counts: &Counts| -> Result<f64> {
            let mut acc = 0.0;
            match &options.rem {
                Some(cal) => {
                    let probs = crate::mitigation::apply_rem(counts, cal)?;
                    for (c, s) in &coeffs {
                        if s.is_identity() {
                            acc += c;
                        } else {
                            acc += c * expectation_from_probabilities(&probs, s)?;
                        }
                    }
                }
                None => {
                    for (c, s) in &coeffs {
                        if s.is_identity() {
                            acc += c;
                        } else {
                            acc += c * expectation_from_counts(counts, s)?;
                        }
                    }
                }
            }
            Ok(acc)
        };

        value += group_value(&counts)?;
        let stderr = bootstrap_stderr(
            &counts,
            |resampled| group_value(resampled).unwrap_or(f64::NAN),
            options.bootstrap_resamples,
            derive_seed(options.seed, 0x8000_0000 | setting_idx as u64),
        )?;
        variance += stderr * stderr;
    }
    Ok(MitigatedValue {
        value,
        stderr: variance.sqrt(),
        method_tags: tags,
    })
}
