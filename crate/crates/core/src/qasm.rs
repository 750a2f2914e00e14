//! OpenQASM 2.0 interchange for the supported gate subset.
//!
//! The native `r(theta, phi)` gate is emitted with a definition in terms of
//! `u3`, so the output loads in stock QASM 2 toolchains. Circuits with
//! embedded `u2x2`/`u4x4` matrices cannot be exported as text and use the
//! JSON schema instead.

use std::f64::consts::PI;

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};

/// Serialize to OpenQASM 2.0 text.
pub fn to_qasm(circuit: &Circuit) -> Result<String> {
    let mut body = String::new();
    let mut uses_r = false;
    let mut creg_written = false;
    for gate in &circuit.gates {
        let line = match gate {
            Gate::R { qubit, theta, phi } => {
                uses_r = true;
                format!("r({theta:.17}, {phi:.17}) q[{qubit}];")
            }
            Gate::Rz { qubit, lambda } => format!("rz({lambda:.17}) q[{qubit}];"),
            Gate::Ry { qubit, theta } => format!("ry({theta:.17}) q[{qubit}];"),
            Gate::H { qubit } => format!("h q[{qubit}];"),
            Gate::S { qubit } => format!("s q[{qubit}];"),
            Gate::Sdg { qubit } => format!("sdg q[{qubit}];"),
            Gate::X { qubit } => format!("x q[{qubit}];"),
            Gate::Y { qubit } => format!("y q[{qubit}];"),
            Gate::Z { qubit } => format!("z q[{qubit}];"),
            Gate::Cz { a, b } => format!("cz q[{a}], q[{b}];"),
            Gate::Cnot { control, target } => format!("cx q[{control}], q[{target}];"),
            Gate::Measure { qubits } => {
                creg_written = true;
                let mut lines = Vec::new();
                for (i, q) in qubits.iter().enumerate() {
                    lines.push(format!("measure q[{q}] -> c[{i}];"));
                }
                lines.join("\n")
            }
            Gate::Barrier => "barrier q;".to_string(),
            Gate::U2 { .. } | Gate::U4 { .. } => {
                return Err(Error::InvalidArgument(
                    "embedded unitary matrices cannot be exported to QASM; use JSON".to_string(),
                ))
            }
        };
        body.push_str(&line);
        body.push('\n');
    }

    let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    if uses_r {
        out.push_str("gate r(theta, phi) a { u3(theta, phi - pi/2, pi/2 - phi) a; }\n");
    }
    out.push_str(&format!("qreg q[{}];\n", circuit.num_qubits));
    if creg_written {
        let n_bits = circuit.measured_qubits().len();
        out.push_str(&format!("creg c[{n_bits}];\n"));
    }
    out.push_str(&body);
    Ok(out)
}

/// Parse the supported OpenQASM 2.0 subset.
pub fn from_qasm(text: &str) -> Result<Circuit> {
    let mut circuit: Option<Circuit> = None;
    let mut measured: Vec<usize> = Vec::new();
    for raw_line in text.lines() {
        let line = raw_line.split("//").next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        // Skip directives and gate definitions at the line level; gate
        // bodies contain semicolons of their own.
        if line.starts_with("OPENQASM")
            || line.starts_with("include")
            || line.starts_with("creg")
            || line.starts_with("gate ")
        {
            continue;
        }
        for stmt in line.split(';') {
            let stmt = stmt.trim();
            if stmt.is_empty() {
                continue;
            }
            if let Some(rest) = stmt.strip_prefix("qreg") {
                let n = parse_bracket_index(rest)?;
                circuit = Some(Circuit::new(n));
                continue;
            }
            let circuit = circuit
                .as_mut()
                .ok_or_else(|| Error::Parse("gate before qreg declaration".to_string()))?;
            if let Some(rest) = stmt.strip_prefix("measure") {
                let q = parse_bracket_index(
                    rest.split("->")
                        .next()
                        .ok_or_else(|| Error::Parse(format!("bad measure: {stmt}")))?,
                )?;
                measured.push(q);
                continue;
            }
            if stmt.starts_with("barrier") {
                circuit.push(Gate::Barrier)?;
                continue;
            }
            let (head, args_part) = match stmt.find(" q[") {
                Some(idx) => (&stmt[..idx], &stmt[idx..]),
                None => return Err(Error::Parse(format!("unsupported statement: {stmt}"))),
            };
            let qubits = parse_qubit_list(args_part)?;
            let (name, params) = parse_head(head)?;
            let gate = match (name.as_str(), qubits.as_slice(), params.as_slice()) {
                ("r", [q], [theta, phi]) => Gate::R {
                    qubit: *q,
                    theta: *theta,
                    phi: *phi,
                },
                ("rz", [q], [lambda]) => Gate::Rz {
                    qubit: *q,
                    lambda: *lambda,
                },
                ("ry", [q], [theta]) => Gate::Ry {
                    qubit: *q,
                    theta: *theta,
                },
                ("h", [q], []) => Gate::H { qubit: *q },
                ("s", [q], []) => Gate::S { qubit: *q },
                ("sdg", [q], []) => Gate::Sdg { qubit: *q },
                ("x", [q], []) => Gate::X { qubit: *q },
                ("y", [q], []) => Gate::Y { qubit: *q },
                ("z", [q], []) => Gate::Z { qubit: *q },
                ("cz", [a, b], []) => Gate::Cz { a: *a, b: *b },
                ("cx" | "cnot", [c, t], []) => Gate::Cnot {
                    control: *c,
                    target: *t,
                },
                _ => {
                    return Err(Error::Parse(format!(
                        "unsupported gate `{name}` with {} qubits and {} params",
                        qubits.len(),
                        params.len()
                    )))
                }
            };
            circuit.push(gate)?;
        }
    }
    let mut circuit = circuit.ok_or_else(|| Error::Parse("missing qreg".to_string()))?;
    if !measured.is_empty() {
        circuit.push(Gate::Measure { qubits: measured })?;
    }
    Ok(circuit)
}

fn parse_bracket_index(text: &str) -> Result<usize> {
    let open = text
        .find('[')
        .ok_or_else(|| Error::Parse(format!("expected index in `{text}`")))?;
    let close = text
        .find(']')
        .ok_or_else(|| Error::Parse(format!("expected `]` in `{text}`")))?;
    text[open + 1..close]
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad index in `{text}`")))
}

fn parse_qubit_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(parse_bracket_index)
        .collect()
}

fn parse_head(head: &str) -> Result<(String, Vec<f64>)> {
    let head = head.trim();
    match head.find('(') {
        None => Ok((head.to_string(), Vec::new())),
        Some(open) => {
            let close = head
                .rfind(')')
                .ok_or_else(|| Error::Parse(format!("missing `)` in `{head}`")))?;
            let name = head[..open].trim().to_string();
            let params = head[open + 1..close]
                .split(',')
                .map(parse_angle)
                .collect::<Result<Vec<_>>>()?;
            Ok((name, params))
        }
    }
}

/// Parse an angle expression: a float, `pi`, `-pi/2`, `2*pi`, `pi/4`, etc.
fn parse_angle(text: &str) -> Result<f64> {
    let t = text.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let (sign, t) = match t.strip_prefix('-') {
        Some(rest) => (-1.0, rest.trim()),
        None => (1.0, t),
    };
    let value = if let Some((num, den)) = t.split_once('/') {
        parse_pi_product(num)? / parse_pi_product(den)?
    } else {
        parse_pi_product(t)?
    };
    Ok(sign * value)
}

fn parse_pi_product(text: &str) -> Result<f64> {
    let t = text.trim();
    if t == "pi" {
        return Ok(PI);
    }
    if let Some((a, b)) = t.split_once('*') {
        return Ok(parse_pi_product(a)? * parse_pi_product(b)?);
    }
    t.parse::<f64>()
        .map_err(|_| Error::Parse(format!("bad angle `{text}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qasm_round_trip() {
        let mut c = Circuit::new(3);
        c.h(0).cnot(0, 1).r(2, 0.25, 1.5).rz(1, -0.5).cz(1, 2);
        c.push(Gate::Measure {
            qubits: vec![0, 1, 2],
        })
        .unwrap();
        let text = to_qasm(&c).unwrap();
        assert!(text.contains("OPENQASM 2.0"));
        assert!(text.contains("gate r(theta, phi)"));
        let back = from_qasm(&text).unwrap();
        assert_eq!(back.num_qubits, 3);
        assert_eq!(back.gates.len(), c.gates.len());
        // Angles survive the text round trip.
        match (&back.gates[2], &c.gates[2]) {
            (
                Gate::R {
                    theta: t1, phi: p1, ..
                },
                Gate::R {
                    theta: t2, phi: p2, ..
                },
            ) => {
                assert!((t1 - t2).abs() < 1e-15);
                assert!((p1 - p2).abs() < 1e-15);
            }
            _ => panic!("expected R gates"),
        }
    }

    #[test]
    fn parses_pi_expressions() {
        assert!((parse_angle("pi").unwrap() - PI).abs() < 1e-15);
        assert!((parse_angle("-pi/2").unwrap() + PI / 2.0).abs() < 1e-15);
        assert!((parse_angle("2*pi").unwrap() - 2.0 * PI).abs() < 1e-15);
        assert!((parse_angle("0.5").unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn embedded_matrices_are_rejected() {
        let mut c = Circuit::new(1);
        c.push(Gate::U2 {
            qubit: 0,
            matrix: crate::math::identity(2),
        })
        .unwrap();
        assert!(to_qasm(&c).is_err());
    }

    #[test]
    fn unknown_gates_fail_to_parse() {
        let text = "OPENQASM 2.0;\nqreg q[1];\nfrobnicate q[0];\n";
        assert!(from_qasm(text).is_err());
    }
}
