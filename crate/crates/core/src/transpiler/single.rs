//! Single-qubit decomposition into the native form `R(θ,φ)` + virtual RZ.
//!
//! ZYZ Euler angles `U = e^{iδ} RZ(γ) RY(β) RZ(α)` are re-expressed as a
//! single `R(β, π/2 − α)` followed by a virtual `RZ(γ + α)`, using the frame
//! identity `RZ(λ)·R(θ,φ) = R(θ,φ+λ)·RZ(λ)`.

use crate::error::Result;
use crate::math::{check_unitary, normalize_angle, CMat};

const ANGLE_EPS: f64 = 1e-12;

/// A native single-qubit operation on an unnamed wire.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Native1q {
    R { theta: f64, phi: f64 },
    Rz { lambda: f64 },
}

/// Decompose a 2x2 unitary into at most one `R` plus one trailing `Rz`,
/// in application order. The product of the returned gates equals the
/// input up to global phase.
pub fn decompose_1q(u: &CMat) -> Result<Vec<Native1q>> {
    check_unitary(u, 1e-10)?;

    // Project to SU(2).
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let phase = det.sqrt();
    let a = u[(0, 0)] / phase;
    let b = u[(1, 0)] / phase;

    let beta = 2.0 * b.norm().atan2(a.norm());
    let sum = if a.norm() > 1e-14 { -2.0 * a.arg() } else { 0.0 }; // γ + α
    let diff = if b.norm() > 1e-14 { 2.0 * b.arg() } else { 0.0 }; // γ - α
    let alpha = (sum - diff) / 2.0;

    let mut gates = Vec::with_capacity(2);
    if beta.abs() > ANGLE_EPS {
        gates.push(Native1q::R {
            theta: beta,
            phi: normalize_angle(std::f64::consts::FRAC_PI_2 - alpha),
        });
    }
    let lambda = normalize_angle(sum);
    if lambda > ANGLE_EPS && (lambda - 2.0 * std::f64::consts::PI).abs() > ANGLE_EPS {
        gates.push(Native1q::Rz { lambda });
    }
    Ok(gates)
}

/// Commute a virtual RZ frame through an R gate:
/// `RZ(λ)·R(θ,φ) = R(θ, φ+λ)·RZ(λ)` exactly, so the R gate played after a
/// pending frame picks up a phase shift of the rotation axis.
pub fn push_rz_through(rz_angle: f64, theta: f64, phi: f64) -> (f64, f64) {
    (theta, normalize_angle(phi + rz_angle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{r_matrix, rz_matrix, Gate};
    use crate::math::{distance_up_to_phase, haar_random_unitary, identity};
    use crate::rng::rng_from_seed;

    fn rebuild(gates: &[Native1q]) -> CMat {
        let mut m = identity(2);
        for g in gates {
            let gm = match g {
                Native1q::R { theta, phi } => r_matrix(*theta, *phi),
                Native1q::Rz { lambda } => rz_matrix(*lambda),
            };
            m = gm.dot(&m);
        }
        m
    }

    #[test]
    fn identity_decomposes_to_nothing() {
        assert!(decompose_1q(&identity(2)).unwrap().is_empty());
    }

    #[test]
    fn native_r_gate_is_returned_unchanged() {
        let gates = decompose_1q(&r_matrix(0.3, 1.1)).unwrap();
        assert_eq!(gates.len(), 1);
        match gates[0] {
            Native1q::R { theta, phi } => {
                assert!((theta - 0.3).abs() < 1e-12);
                assert!((phi - 1.1).abs() < 1e-12);
            }
            _ => panic!("expected an R gate"),
        }
    }

    #[test]
    fn hadamard_decomposes_to_r_plus_rz() {
        let h = Gate::H { qubit: 0 }.matrix_1q().unwrap();
        let gates = decompose_1q(&h).unwrap();
        assert_eq!(gates.len(), 2);
        assert!(matches!(gates[0], Native1q::R { .. }));
        assert!(matches!(gates[1], Native1q::Rz { .. }));
        assert!(distance_up_to_phase(&rebuild(&gates), &h) < 1e-12);
    }

    #[test]
    fn random_unitaries_round_trip() {
        let mut rng = rng_from_seed(99);
        for _ in 0..200 {
            let u = haar_random_unitary(2, &mut rng);
            let gates = decompose_1q(&u).unwrap();
            assert!(gates.len() <= 2);
            assert!(distance_up_to_phase(&rebuild(&gates), &u) < 1e-9);
        }
    }

    #[test]
    fn push_rz_matches_matrix_identity() {
        for (lambda, theta, phi) in [
            (0.0, 0.4, 0.9),
            (std::f64::consts::PI, 0.4, 0.0),
            (std::f64::consts::FRAC_PI_2, std::f64::consts::PI, 0.0),
            (-1.3, 2.2, 4.0),
        ] {
            let (theta2, phi2) = push_rz_through(lambda, theta, phi);
            let lhs = rz_matrix(lambda).dot(&r_matrix(theta, phi));
            let rhs = r_matrix(theta2, phi2).dot(&rz_matrix(lambda));
            assert!(
                distance_up_to_phase(&lhs, &rhs) < 1e-12,
                "failed for λ={lambda}, θ={theta}, φ={phi}"
            );
        }
    }

    #[test]
    fn push_rz_zero_is_identity() {
        let (theta, phi) = push_rz_through(0.0, 1.0, 2.0);
        assert_eq!(theta, 1.0);
        assert!((phi - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_unitary_input() {
        let m = ndarray::array![
            [crate::math::cr(1.0), crate::math::cr(1.0)],
            [crate::math::cr(0.0), crate::math::cr(1.0)]
        ];
        assert!(decompose_1q(&m).is_err());
    }
}
