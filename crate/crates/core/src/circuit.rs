//! Circuits as ordered gate lists over indexed qubits.
//!
//! Qubit ordering convention: qubit 0 is the *first* qubit and maps to the
//! most significant bit of every basis-state index and bitstring. This is
//! the "top wire first" convention, opposite to Qiskit's. All I/O in the
//! crate follows it.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use ndarray::array;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{c, cr, identity, kron, CMat, I, ONE, ZERO};

/// A single circuit operation.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    /// `R(θ, φ) = exp[-iθ(cosφ·X + sinφ·Y)/2]`, the native single-qubit gate.
    R { qubit: usize, theta: f64, phi: f64 },
    /// `RZ(λ) = diag(e^{-iλ/2}, e^{iλ/2})`; virtual on hardware.
    Rz { qubit: usize, lambda: f64 },
    Ry { qubit: usize, theta: f64 },
    H { qubit: usize },
    S { qubit: usize },
    Sdg { qubit: usize },
    X { qubit: usize },
    Y { qubit: usize },
    Z { qubit: usize },
    Cz { a: usize, b: usize },
    Cnot { control: usize, target: usize },
    /// Embedded 2x2 unitary.
    U2 { qubit: usize, matrix: CMat },
    /// Embedded 4x4 unitary on an ordered qubit pair (first index = high bit).
    U4 { a: usize, b: usize, matrix: CMat },
    /// Z-basis measurement of the listed qubits, in listed order.
    Measure { qubits: Vec<usize> },
    /// Optimization barrier; blocks single-qubit gate merging.
    Barrier,
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::R { qubit, .. }
            | Gate::Rz { qubit, .. }
            | Gate::Ry { qubit, .. }
            | Gate::H { qubit }
            | Gate::S { qubit }
            | Gate::Sdg { qubit }
            | Gate::X { qubit }
            | Gate::Y { qubit }
            | Gate::Z { qubit }
            | Gate::U2 { qubit, .. } => vec![*qubit],
            Gate::Cz { a, b } => vec![*a, *b],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::U4 { a, b, .. } => vec![*a, *b],
            Gate::Measure { qubits } => qubits.clone(),
            Gate::Barrier => vec![],
        }
    }

    pub fn is_single_qubit(&self) -> bool {
        matches!(
            self,
            Gate::R { .. }
                | Gate::Rz { .. }
                | Gate::Ry { .. }
                | Gate::H { .. }
                | Gate::S { .. }
                | Gate::Sdg { .. }
                | Gate::X { .. }
                | Gate::Y { .. }
                | Gate::Z { .. }
                | Gate::U2 { .. }
        )
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cz { .. } | Gate::Cnot { .. } | Gate::U4 { .. })
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            Gate::R { theta, phi, .. } => vec![*theta, *phi],
            Gate::Rz { lambda, .. } => vec![*lambda],
            Gate::Ry { theta, .. } => vec![*theta],
            _ => vec![],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::R { .. } => "r",
            Gate::Rz { .. } => "rz",
            Gate::Ry { .. } => "ry",
            Gate::H { .. } => "h",
            Gate::S { .. } => "s",
            Gate::Sdg { .. } => "sdg",
            Gate::X { .. } => "x",
            Gate::Y { .. } => "y",
            Gate::Z { .. } => "z",
            Gate::Cz { .. } => "cz",
            Gate::Cnot { .. } => "cnot",
            Gate::U2 { .. } => "u2x2",
            Gate::U4 { .. } => "u4x4",
            Gate::Measure { .. } => "measure",
            Gate::Barrier => "barrier",
        }
    }

    /// Unitary matrix of a single-qubit gate.
    pub fn matrix_1q(&self) -> Option<CMat> {
        let m = match self {
            Gate::R { theta, phi, .. } => r_matrix(*theta, *phi),
            Gate::Rz { lambda, .. } => rz_matrix(*lambda),
            Gate::Ry { theta, .. } => r_matrix(*theta, FRAC_PI_2),
            Gate::H { .. } => {
                let s = cr(std::f64::consts::FRAC_1_SQRT_2);
                array![[s, s], [s, -s]]
            }
            Gate::S { .. } => array![[ONE, ZERO], [ZERO, I]],
            Gate::Sdg { .. } => array![[ONE, ZERO], [ZERO, -I]],
            Gate::X { .. } => array![[ZERO, ONE], [ONE, ZERO]],
            Gate::Y { .. } => array![[ZERO, -I], [I, ZERO]],
            Gate::Z { .. } => array![[ONE, ZERO], [ZERO, -ONE]],
            Gate::U2 { matrix, .. } => matrix.clone(),
            _ => return None,
        };
        Some(m)
    }

    /// Unitary matrix of a two-qubit gate in the order `(first, second)` of
    /// its qubit list, first qubit = high bit.
    pub fn matrix_2q(&self) -> Option<CMat> {
        let m = match self {
            Gate::Cz { .. } => {
                let mut m = identity(4);
                m[(3, 3)] = -ONE;
                m
            }
            Gate::Cnot { .. } => {
                let mut m: CMat = ndarray::Array2::zeros((4, 4));
                m[(0, 0)] = ONE;
                m[(1, 1)] = ONE;
                m[(2, 3)] = ONE;
                m[(3, 2)] = ONE;
                m
            }
            Gate::U4 { matrix, .. } => matrix.clone(),
            _ => return None,
        };
        Some(m)
    }

    /// Inverse gate, for circuit folding.
    pub fn inverse(&self) -> Result<Gate> {
        let g = match self {
            Gate::R { qubit, theta, phi } => Gate::R {
                qubit: *qubit,
                theta: -theta,
                phi: *phi,
            },
            Gate::Rz { qubit, lambda } => Gate::Rz {
                qubit: *qubit,
                lambda: -lambda,
            },
            Gate::Ry { qubit, theta } => Gate::Ry {
                qubit: *qubit,
                theta: -theta,
            },
            Gate::H { .. } | Gate::X { .. } | Gate::Y { .. } | Gate::Z { .. } => self.clone(),
            Gate::S { qubit } => Gate::Sdg { qubit: *qubit },
            Gate::Sdg { qubit } => Gate::S { qubit: *qubit },
            Gate::Cz { .. } | Gate::Cnot { .. } => self.clone(),
            Gate::U2 { qubit, matrix } => Gate::U2 {
                qubit: *qubit,
                matrix: crate::math::dagger(matrix),
            },
            Gate::U4 { a, b, matrix } => Gate::U4 {
                a: *a,
                b: *b,
                matrix: crate::math::dagger(matrix),
            },
            Gate::Barrier => Gate::Barrier,
            Gate::Measure { .. } => return Err(Error::UnexpectedMeasurement),
        };
        Ok(g)
    }
}

/// `R(θ, φ)` as a matrix.
pub fn r_matrix(theta: f64, phi: f64) -> CMat {
    let (ct, st) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let e_minus = C64::from_polar(1.0, -phi);
    let e_plus = C64::from_polar(1.0, phi);
    array![
        [cr(ct), -I * e_minus * cr(st)],
        [-I * e_plus * cr(st), cr(ct)]
    ]
}

/// `RZ(λ)` as a matrix.
pub fn rz_matrix(lambda: f64) -> CMat {
    array![
        [C64::from_polar(1.0, -lambda / 2.0), ZERO],
        [ZERO, C64::from_polar(1.0, lambda / 2.0)]
    ]
}

use num_complex::Complex64 as C64;

/// Ordered gate list over `num_qubits` named qubits.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
    pub metadata: BTreeMap<String, String>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        assert!(num_qubits > 0, "circuit needs at least one qubit");
        Circuit {
            num_qubits,
            gates: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    /// Push a gate after validating qubit indices and parameters.
    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        let qubits = gate.qubits();
        for &q in &qubits {
            if q >= self.num_qubits {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    num_qubits: self.num_qubits,
                });
            }
        }
        for (i, &q) in qubits.iter().enumerate() {
            if qubits[..i].contains(&q) {
                return Err(Error::DuplicateQubit(q));
            }
        }
        for p in gate.params() {
            if !p.is_finite() {
                return Err(Error::NonFiniteParameter(p));
            }
        }
        if let Gate::U2 { matrix, .. } = &gate {
            crate::math::check_unitary(matrix, 1e-10)?;
        }
        if let Gate::U4 { matrix, .. } = &gate {
            crate::math::check_unitary(matrix, 1e-10)?;
        }
        self.gates.push(gate);
        Ok(self)
    }

    // Chainable builders for the common gates.
    pub fn h(&mut self, q: usize) -> &mut Self {
        self.push(Gate::H { qubit: q }).expect("valid gate");
        self
    }
    pub fn x(&mut self, q: usize) -> &mut Self {
        self.push(Gate::X { qubit: q }).expect("valid gate");
        self
    }
    pub fn y(&mut self, q: usize) -> &mut Self {
        self.push(Gate::Y { qubit: q }).expect("valid gate");
        self
    }
    pub fn z(&mut self, q: usize) -> &mut Self {
        self.push(Gate::Z { qubit: q }).expect("valid gate");
        self
    }
    pub fn s(&mut self, q: usize) -> &mut Self {
        self.push(Gate::S { qubit: q }).expect("valid gate");
        self
    }
    pub fn sdg(&mut self, q: usize) -> &mut Self {
        self.push(Gate::Sdg { qubit: q }).expect("valid gate");
        self
    }
    pub fn r(&mut self, q: usize, theta: f64, phi: f64) -> &mut Self {
        self.push(Gate::R {
            qubit: q,
            theta,
            phi,
        })
        .expect("valid gate");
        self
    }
    pub fn rz(&mut self, q: usize, lambda: f64) -> &mut Self {
        self.push(Gate::Rz { qubit: q, lambda }).expect("valid gate");
        self
    }
    pub fn ry(&mut self, q: usize, theta: f64) -> &mut Self {
        self.push(Gate::Ry { qubit: q, theta }).expect("valid gate");
        self
    }
    pub fn cz(&mut self, a: usize, b: usize) -> &mut Self {
        self.push(Gate::Cz { a, b }).expect("valid gate");
        self
    }
    pub fn cnot(&mut self, control: usize, target: usize) -> &mut Self {
        self.push(Gate::Cnot { control, target }).expect("valid gate");
        self
    }
    pub fn measure_all(&mut self) -> &mut Self {
        let qubits = (0..self.num_qubits).collect();
        self.push(Gate::Measure { qubits }).expect("valid gate");
        self
    }

    pub fn has_measurement(&self) -> bool {
        self.gates.iter().any(|g| matches!(g, Gate::Measure { .. }))
    }

    /// Qubits measured, in measurement order across all Measure gates.
    pub fn measured_qubits(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for g in &self.gates {
            if let Gate::Measure { qubits } = g {
                out.extend_from_slice(qubits);
            }
        }
        out
    }

    /// Gates with all Measure operations removed.
    pub fn without_measurements(&self) -> Circuit {
        Circuit {
            num_qubits: self.num_qubits,
            gates: self
                .gates
                .iter()
                .filter(|g| !matches!(g, Gate::Measure { .. }))
                .cloned()
                .collect(),
            metadata: self.metadata.clone(),
        }
    }

    /// Number of gates excluding measurements and barriers.
    pub fn gate_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| !matches!(g, Gate::Measure { .. } | Gate::Barrier))
            .count()
    }

    pub fn count_of(&self, name: &str) -> usize {
        self.gates.iter().filter(|g| g.name() == name).count()
    }

    /// Full 2^n x 2^n unitary by dense multiplication, measurement-free
    /// circuits only. Intended for oracles and small n.
    pub fn unitary(&self) -> Result<CMat> {
        let dim = 1usize << self.num_qubits;
        let mut u = identity(dim);
        for gate in &self.gates {
            match gate {
                Gate::Measure { .. } => return Err(Error::UnexpectedMeasurement),
                Gate::Barrier => continue,
                g if g.is_single_qubit() => {
                    let m = embed_1q(&g.matrix_1q().unwrap(), g.qubits()[0], self.num_qubits);
                    u = m.dot(&u);
                }
                g => {
                    let qs = g.qubits();
                    let m = embed_2q(&g.matrix_2q().unwrap(), qs[0], qs[1], self.num_qubits);
                    u = m.dot(&u);
                }
            }
        }
        Ok(u)
    }
}

/// Embed a 2x2 matrix acting on `qubit` into the full register.
pub fn embed_1q(m: &CMat, qubit: usize, num_qubits: usize) -> CMat {
    let mut out = identity(1);
    for q in 0..num_qubits {
        let factor = if q == qubit { m.clone() } else { identity(2) };
        out = kron(&out, &factor);
    }
    out
}

/// Embed a 4x4 matrix acting on ordered `(a, b)` into the full register.
pub fn embed_2q(m: &CMat, a: usize, b: usize, num_qubits: usize) -> CMat {
    let dim = 1usize << num_qubits;
    let mut out: CMat = ndarray::Array2::zeros((dim, dim));
    let bit_a = num_qubits - 1 - a;
    let bit_b = num_qubits - 1 - b;
    for col in 0..dim {
        let ca = (col >> bit_a) & 1;
        let cb = (col >> bit_b) & 1;
        let mcol = (ca << 1) | cb;
        for (mrow, &value) in m.column(mcol).iter().enumerate().take(4) {
            let ra = (mrow >> 1) & 1;
            let rb = mrow & 1;
            let row = (col & !(1 << bit_a) & !(1 << bit_b)) | (ra << bit_a) | (rb << bit_b);
            if value != ZERO {
                out[(row, col)] += value;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// JSON interchange schema
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateSpec {
    kind: String,
    #[serde(default)]
    qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    params: Vec<f64>,
    /// Row-major complex matrix entries as `[re, im]` pairs, for `u2x2`/`u4x4`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<Vec<[f64; 2]>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitSpec {
    num_qubits: usize,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
    gates: Vec<GateSpec>,
}

fn matrix_to_spec(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    m.rows()
        .into_iter()
        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

fn matrix_from_spec(rows: &[Vec<[f64; 2]>], dim: usize) -> Result<CMat> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(Error::Parse(format!("matrix must be {dim}x{dim}")));
    }
    let mut m: CMat = ndarray::Array2::zeros((dim, dim));
    for (i, row) in rows.iter().enumerate() {
        for (j, &[re, im]) in row.iter().enumerate() {
            m[(i, j)] = c(re, im);
        }
    }
    Ok(m)
}

impl Circuit {
    pub fn to_json(&self) -> String {
        let spec = CircuitSpec {
            num_qubits: self.num_qubits,
            metadata: self.metadata.clone(),
            gates: self
                .gates
                .iter()
                .map(|g| {
                    let matrix = match g {
                        Gate::U2 { matrix, .. } | Gate::U4 { matrix, .. } => {
                            Some(matrix_to_spec(matrix))
                        }
                        _ => None,
                    };
                    GateSpec {
                        kind: g.name().to_string(),
                        qubits: g.qubits(),
                        params: g.params(),
                        matrix,
                    }
                })
                .collect(),
        };
        serde_json::to_string_pretty(&spec).expect("circuit serializes")
    }

    pub fn from_json(text: &str) -> Result<Circuit> {
        let spec: CircuitSpec =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut circuit = Circuit::new(spec.num_qubits);
        circuit.metadata = spec.metadata;
        for g in &spec.gates {
            let q = |i: usize| -> Result<usize> {
                g.qubits
                    .get(i)
                    .copied()
                    .ok_or_else(|| Error::Parse(format!("gate `{}` needs qubit {i}", g.kind)))
            };
            let p = |i: usize| -> Result<f64> {
                g.params
                    .get(i)
                    .copied()
                    .ok_or_else(|| Error::Parse(format!("gate `{}` needs parameter {i}", g.kind)))
            };
            let gate = match g.kind.as_str() {
                "r" => Gate::R {
                    qubit: q(0)?,
                    theta: p(0)?,
                    phi: p(1)?,
                },
                "rz" => Gate::Rz {
                    qubit: q(0)?,
                    lambda: p(0)?,
                },
                "ry" => Gate::Ry {
                    qubit: q(0)?,
                    theta: p(0)?,
                },
                "h" => Gate::H { qubit: q(0)? },
                "s" => Gate::S { qubit: q(0)? },
                "sdg" => Gate::Sdg { qubit: q(0)? },
                "x" => Gate::X { qubit: q(0)? },
                "y" => Gate::Y { qubit: q(0)? },
                "z" => Gate::Z { qubit: q(0)? },
                "cz" => Gate::Cz { a: q(0)?, b: q(1)? },
                "cnot" | "cx" => Gate::Cnot {
                    control: q(0)?,
                    target: q(1)?,
                },
                "u2x2" => Gate::U2 {
                    qubit: q(0)?,
                    matrix: matrix_from_spec(
                        g.matrix.as_deref().ok_or_else(|| {
                            Error::Parse("u2x2 requires a matrix".to_string())
                        })?,
                        2,
                    )?,
                },
                "u4x4" => Gate::U4 {
                    a: q(0)?,
                    b: q(1)?,
                    matrix: matrix_from_spec(
                        g.matrix.as_deref().ok_or_else(|| {
                            Error::Parse("u4x4 requires a matrix".to_string())
                        })?,
                        4,
                    )?,
                },
                "measure" => Gate::Measure {
                    qubits: g.qubits.clone(),
                },
                "barrier" => Gate::Barrier,
                other => return Err(Error::Parse(format!("unknown gate kind `{other}`"))),
            };
            circuit.push(gate)?;
        }
        Ok(circuit)
    }
}
