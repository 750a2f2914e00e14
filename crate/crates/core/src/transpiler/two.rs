//! Two-qubit decomposition into at most three CZ gates.
//!
//! The generic path is a Cartan (KAK) decomposition in the magic basis:
//! `U = (K1l ⊗ K1r) · exp[i(a XX + b YY + c ZZ)] · (K2l ⊗ K2r)` up to a
//! global phase. The canonical interaction is realized with exactly three
//! CZ gates via
//!
//! `exp[i(aXX+bYY+cZZ)] = [CNOT·CZ] · RX₀(2b) · CZ · RX₀(-2a)·RZ₁(-2c) · CNOT`
//!
//! where `CNOT·CZ = (S†⊗SH)·CZ·(I⊗HS†)` is itself locally equivalent to one
//! CZ. Controlled unitaries are detected first and synthesized with at most
//! two CZ (one when the eigenphase gap of the target unitary is π).

use ndarray::array;
use num_complex::Complex64;

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::math::{
    check_unitary, cr, dagger, determinant, distance_up_to_phase, frobenius_norm,
    hermitian_eigen, identity, CMat, I, ONE, ZERO,
};
use crate::rng::rng_from_seed;

use super::{nativize, RzOutput};

/// Magic basis: columns are the Bell-like states in which local unitaries
/// become real orthogonal matrices and XX/YY/ZZ are simultaneously diagonal.
fn magic_basis() -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    array![
        [cr(s), ZERO, ZERO, I * cr(s)],
        [ZERO, I * cr(s), cr(s), ZERO],
        [ZERO, I * cr(s), -cr(s), ZERO],
        [cr(s), ZERO, ZERO, -I * cr(s)]
    ]
}

/// Result of the Cartan decomposition.
#[derive(Debug, Clone)]
pub struct KakDecomposition {
    pub k1l: CMat,
    pub k1r: CMat,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub k2l: CMat,
    pub k2r: CMat,
    pub global_phase: Complex64,
}

impl KakDecomposition {
    /// Rebuild the 4x4 unitary this decomposition represents.
    pub fn reconstruct(&self) -> CMat {
        let k1 = crate::math::kron(&self.k1l, &self.k1r);
        let k2 = crate::math::kron(&self.k2l, &self.k2r);
        let canonical = canonical_matrix(self.a, self.b, self.c);
        k1.dot(&canonical).dot(&k2).mapv(|z| z * self.global_phase)
    }
}

/// `exp[i (a XX + b YY + c ZZ)]` as a dense matrix (for oracles).
pub fn canonical_matrix(a: f64, b: f64, c: f64) -> CMat {
    let m = magic_basis();
    let phases = [a - b + c, a + b - c, -a - b - c, -a + b + c];
    let mut d: CMat = ndarray::Array2::zeros((4, 4));
    for (j, &theta) in phases.iter().enumerate() {
        d[(j, j)] = Complex64::from_polar(1.0, theta);
    }
    m.dot(&d).dot(&dagger(&m))
}

/// Cartan decomposition of a 4x4 unitary.
pub fn kak_decompose(u: &CMat) -> Result<KakDecomposition> {
    check_unitary(u, 1e-10)?;
    let m = magic_basis();

    // Project to SU(4).
    let det = determinant(u);
    let phase_root = Complex64::from_polar(det.norm().powf(0.25), det.arg() / 4.0);
    let su = u.mapv(|z| z / phase_root);

    let um = dagger(&m).dot(&su).dot(&m);
    let x = um.t().to_owned().dot(&um); // complex symmetric unitary

    // Simultaneously diagonalize Re(x) and Im(x) with a real orthogonal P.
    let re = x.mapv(|z| cr(z.re));
    let im = x.mapv(|z| cr(z.im));
    let mut rng = rng_from_seed(0x5eed_cafe);
    let mut p_opt: Option<CMat> = None;
    for attempt in 0..24 {
        let t: f64 = if attempt == 0 {
            0.739_085_133_215_160_7
        } else {
            use rand::Rng;
            rng.gen_range(0.0..std::f64::consts::PI)
        };
        let mix = &re.mapv(|z| z * cr(t.cos())) + &im.mapv(|z| z * cr(t.sin()));
        let (_, vectors) = hermitian_eigen(&mix)?;
        // Eigenvectors of a real symmetric matrix stay real in this solver.
        let p = vectors.mapv(|z| cr(z.re));
        let candidate = p.t().to_owned().dot(&x).dot(&p);
        let mut off = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    off = off.max(candidate[(i, j)].norm());
                }
            }
        }
        if off < 1e-9 {
            p_opt = Some(p);
            break;
        }
    }
    let mut p = p_opt.ok_or_else(|| {
        Error::InvalidState("failed to diagonalize the magic-basis Gram matrix".to_string())
    })?;

    if determinant(&p).re < 0.0 {
        for k in 0..4 {
            p[(k, 0)] = -p[(k, 0)];
        }
    }

    let d2 = p.t().to_owned().dot(&x).dot(&p);
    let mut thetas: Vec<f64> = (0..4).map(|j| d2[(j, j)].arg() / 2.0).collect();

    let build_q = |thetas: &[f64], p: &CMat| -> CMat {
        let mut d_inv: CMat = ndarray::Array2::zeros((4, 4));
        for (j, &t) in thetas.iter().enumerate() {
            d_inv[(j, j)] = Complex64::from_polar(1.0, -t);
        }
        um.dot(p).dot(&d_inv)
    };

    let mut q = build_q(&thetas, &p);
    if determinant(&q).re < 0.0 {
        // Choose the other square root for one eigenvalue; d2 is unchanged
        // because e^{2i(θ+π)} = e^{2iθ}, while det(D) flips sign.
        thetas[0] += std::f64::consts::PI;
        q = build_q(&thetas, &p);
    }

    // Sanity: q must be real orthogonal.
    let q_imag: f64 = q.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if q_imag > 1e-7 {
        return Err(Error::InvalidState(format!(
            "KAK left factor is not real (imag {q_imag:.2e})"
        )));
    }
    let q = q.mapv(|z| cr(z.re));

    let h0: f64 = thetas.iter().sum::<f64>() / 4.0;
    let a = (thetas[0] + thetas[1] - thetas[2] - thetas[3]) / 4.0;
    let b = (-thetas[0] + thetas[1] - thetas[2] + thetas[3]) / 4.0;
    let c = (thetas[0] - thetas[1] - thetas[2] + thetas[3]) / 4.0;

    let k1 = m.dot(&q).dot(&dagger(&m));
    let k2 = m.dot(&p.t().to_owned()).dot(&dagger(&m));
    let (k1l, k1r) = kron_factor(&k1)?;
    let (k2l, k2r) = kron_factor(&k2)?;

    let decomposition = KakDecomposition {
        k1l,
        k1r,
        a,
        b,
        c,
        k2l,
        k2r,
        global_phase: phase_root * Complex64::from_polar(1.0, h0),
    };
    let residual = distance_up_to_phase(&decomposition.reconstruct(), u);
    if residual > 1e-8 {
        return Err(Error::InvalidState(format!(
            "KAK reconstruction residual {residual:.2e}"
        )));
    }
    Ok(decomposition)
}

/// Factor a 4x4 unitary that is (approximately) a tensor product `A ⊗ B`.
fn kron_factor(l: &CMat) -> Result<(CMat, CMat)> {
    let block = |r: usize, c_: usize| -> CMat {
        array![
            [l[(2 * r, 2 * c_)], l[(2 * r, 2 * c_ + 1)]],
            [l[(2 * r + 1, 2 * c_)], l[(2 * r + 1, 2 * c_ + 1)]]
        ]
    };
    let mut best = (0usize, 0usize);
    let mut best_norm = -1.0;
    for r in 0..2 {
        for c_ in 0..2 {
            let norm = frobenius_norm(&block(r, c_));
            if norm > best_norm {
                best_norm = norm;
                best = (r, c_);
            }
        }
    }
    let b_raw = block(best.0, best.1);
    let b_norm_sq = b_raw.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let mut a: CMat = ndarray::Array2::zeros((2, 2));
    for r in 0..2 {
        for c_ in 0..2 {
            let blk = block(r, c_);
            let overlap: Complex64 = b_raw
                .iter()
                .zip(blk.iter())
                .map(|(x, y)| x.conj() * y)
                .sum();
            a[(r, c_)] = overlap / cr(b_norm_sq);
        }
    }
    // Rescale so both factors are unitary: a unitary 2x2 has ‖·‖_F = √2.
    let s = (b_norm_sq / 2.0).sqrt();
    let b = b_raw.mapv(|z| z / cr(s));
    let a = a.mapv(|z| z * cr(s));
    let residual = distance_up_to_phase(&crate::math::kron(&a, &b), l);
    if residual > 1e-8 {
        return Err(Error::InvalidState(format!(
            "matrix is not a tensor product (residual {residual:.2e})"
        )));
    }
    Ok((a, b))
}

/// Gate stream realizing `exp[i(aXX+bYY+cZZ)]` with exactly three CZ on
/// local wires (0, 1).
fn canonical_stream(a: f64, b: f64, c: f64) -> Vec<Gate> {
    vec![
        // CNOT(0,1) = (I⊗H)·CZ·(I⊗H)
        Gate::H { qubit: 1 },
        Gate::Cz { a: 0, b: 1 },
        Gate::H { qubit: 1 },
        Gate::Rz {
            qubit: 1,
            lambda: -2.0 * c,
        },
        Gate::R {
            qubit: 0,
            theta: -2.0 * a,
            phi: 0.0,
        },
        Gate::Cz { a: 0, b: 1 },
        Gate::R {
            qubit: 0,
            theta: 2.0 * b,
            phi: 0.0,
        },
        // CNOT(0,1)·CZ = (S†⊗SH)·CZ·(I⊗HS†)
        Gate::Sdg { qubit: 1 },
        Gate::H { qubit: 1 },
        Gate::Cz { a: 0, b: 1 },
        Gate::Sdg { qubit: 0 },
        Gate::H { qubit: 1 },
        Gate::S { qubit: 1 },
    ]
}

/// Eigendecomposition of a 2x2 unitary: phases and an orthonormal
/// eigenvector matrix `V` with `u = V diag(e^{iξ1}, e^{iξ2}) V†`.
fn eig_unitary_2x2(u: &CMat) -> (f64, f64, CMat) {
    let tr = u[(0, 0)] + u[(1, 1)];
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let disc = (tr * tr - cr(4.0) * det).sqrt();
    let l1 = (tr + disc) / cr(2.0);
    let l2 = (tr - disc) / cr(2.0);

    if (l1 - l2).norm() < 1e-12 {
        return (l1.arg(), l2.arg(), identity(2));
    }
    // Null vector of (u - l1 I).
    let r1 = [u[(0, 0)] - l1, u[(0, 1)]];
    let r2 = [u[(1, 0)], u[(1, 1)] - l1];
    let v1 = if r1[0].norm() + r1[1].norm() > r2[0].norm() + r2[1].norm() {
        [-r1[1], r1[0]]
    } else {
        [-r2[1], r2[0]]
    };
    let norm = (v1[0].norm_sqr() + v1[1].norm_sqr()).sqrt();
    let v1 = [v1[0] / cr(norm), v1[1] / cr(norm)];
    // Unitaries are normal: the second eigenvector is the orthogonal complement.
    let v2 = [-v1[1].conj(), v1[0].conj()];
    let v = array![[v1[0], v2[0]], [v1[1], v2[1]]];
    (l1.arg(), l2.arg(), v)
}

/// Try to view `u` as a controlled unitary with control on local wire 0.
/// Returns `(control_active_low, target_unitary, control_phase)`.
fn as_controlled(u: &CMat) -> Option<(bool, CMat, f64)> {
    let block = |r: usize, c_: usize| -> CMat {
        array![
            [u[(2 * r, 2 * c_)], u[(2 * r, 2 * c_ + 1)]],
            [u[(2 * r + 1, 2 * c_)], u[(2 * r + 1, 2 * c_ + 1)]]
        ]
    };
    let off = frobenius_norm(&block(0, 1)) + frobenius_norm(&block(1, 0));
    if off > 1e-10 {
        return None;
    }
    let prop_identity = |m: &CMat| -> Option<Complex64> {
        if m[(0, 1)].norm() < 1e-10
            && m[(1, 0)].norm() < 1e-10
            && (m[(0, 0)] - m[(1, 1)]).norm() < 1e-10
        {
            Some(m[(0, 0)])
        } else {
            None
        }
    };
    let b00 = block(0, 0);
    let b11 = block(1, 1);
    if let Some(chi) = prop_identity(&b00) {
        let target = b11.mapv(|z| z / chi);
        return Some((false, target, 0.0));
    }
    if let Some(chi) = prop_identity(&b11) {
        let target = b00.mapv(|z| z / chi);
        return Some((true, target, 0.0));
    }
    None
}

/// Stream for a controlled-`u` with control on `ctrl` and target on `tgt`
/// (local wires), active on |1>. At most two CZ; one when the eigenphase
/// gap of `u` is π.
fn controlled_stream(ctrl: usize, tgt: usize, u: &CMat) -> Vec<Gate> {
    let (xi1, xi2, v) = eig_unitary_2x2(u);
    let delta = xi2 - xi1;
    let mut gates = Vec::new();
    gates.push(Gate::U2 {
        qubit: tgt,
        matrix: dagger(&v),
    });
    if xi1.abs() > 1e-12 {
        // diag(1, e^{iξ1}) on the control, up to global phase.
        gates.push(Gate::Rz {
            qubit: ctrl,
            lambda: xi1,
        });
    }
    let gap = (delta - std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI);
    if gap.min(2.0 * std::f64::consts::PI - gap) < 1e-12 {
        // Controlled-phase of exactly π is a CZ.
        gates.push(Gate::Cz { a: ctrl, b: tgt });
    } else if delta.rem_euclid(2.0 * std::f64::consts::PI).abs() > 1e-12 {
        // CP(Δ) = RZc(Δ/2)·RZt(Δ/2)·CNOT·RZt(-Δ/2)·CNOT up to phase.
        gates.push(Gate::H { qubit: tgt });
        gates.push(Gate::Cz { a: ctrl, b: tgt });
        gates.push(Gate::H { qubit: tgt });
        gates.push(Gate::Rz {
            qubit: tgt,
            lambda: -delta / 2.0,
        });
        gates.push(Gate::H { qubit: tgt });
        gates.push(Gate::Cz { a: ctrl, b: tgt });
        gates.push(Gate::H { qubit: tgt });
        gates.push(Gate::Rz {
            qubit: tgt,
            lambda: delta / 2.0,
        });
        gates.push(Gate::Rz {
            qubit: ctrl,
            lambda: delta / 2.0,
        });
    }
    gates.push(Gate::U2 {
        qubit: tgt,
        matrix: v,
    });
    gates
}

fn swap_wires(gates: Vec<Gate>) -> Vec<Gate> {
    gates
        .into_iter()
        .map(|g| match g {
            Gate::R { qubit, theta, phi } => Gate::R {
                qubit: 1 - qubit,
                theta,
                phi,
            },
            Gate::Rz { qubit, lambda } => Gate::Rz {
                qubit: 1 - qubit,
                lambda,
            },
            Gate::H { qubit } => Gate::H { qubit: 1 - qubit },
            Gate::S { qubit } => Gate::S { qubit: 1 - qubit },
            Gate::Sdg { qubit } => Gate::Sdg { qubit: 1 - qubit },
            Gate::X { qubit } => Gate::X { qubit: 1 - qubit },
            Gate::U2 { qubit, matrix } => Gate::U2 {
                qubit: 1 - qubit,
                matrix,
            },
            Gate::Cz { a, b } => Gate::Cz { a: 1 - a, b: 1 - b },
            other => other,
        })
        .collect()
}

fn swap_matrix() -> CMat {
    let mut m: CMat = ndarray::Array2::zeros((4, 4));
    m[(0, 0)] = ONE;
    m[(1, 2)] = ONE;
    m[(2, 1)] = ONE;
    m[(3, 3)] = ONE;
    m
}

/// Decompose a 4x4 unitary into a native fragment on local wires (0, 1)
/// with at most three CZ gates. The fragment contains only R, RZ and CZ
/// gates and equals `u` up to global phase.
pub fn decompose_2q(u: &CMat) -> Result<Circuit> {
    if u.dim() != (4, 4) {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: u.nrows(),
        });
    }
    check_unitary(u, 1e-10)?;

    let cz = Gate::Cz { a: 0, b: 1 }.matrix_2q().unwrap();
    let gates: Vec<Gate> = if distance_up_to_phase(u, &cz) < 1e-9 {
        vec![Gate::Cz { a: 0, b: 1 }]
    } else if let Ok((a_fac, b_fac)) = kron_factor(u) {
        vec![
            Gate::U2 {
                qubit: 0,
                matrix: a_fac,
            },
            Gate::U2 {
                qubit: 1,
                matrix: b_fac,
            },
        ]
    } else if let Some((active_low, target, _)) = as_controlled(u) {
        let mut gates = Vec::new();
        if active_low {
            gates.push(Gate::X { qubit: 0 });
            gates.extend(controlled_stream(0, 1, &target));
            gates.push(Gate::X { qubit: 0 });
        } else {
            gates.extend(controlled_stream(0, 1, &target));
        }
        gates
    } else {
        let swapped = swap_matrix().dot(u).dot(&swap_matrix());
        if let Some((active_low, target, _)) = as_controlled(&swapped) {
            // Control lives on wire 1.
            let mut gates = Vec::new();
            if active_low {
                gates.push(Gate::X { qubit: 0 });
                gates.extend(controlled_stream(0, 1, &target));
                gates.push(Gate::X { qubit: 0 });
            } else {
                gates.extend(controlled_stream(0, 1, &target));
            }
            swap_wires(gates)
        } else {
            let kak = kak_decompose(u)?;
            let mut gates = vec![
                Gate::U2 {
                    qubit: 0,
                    matrix: kak.k2l.clone(),
                },
                Gate::U2 {
                    qubit: 1,
                    matrix: kak.k2r.clone(),
                },
            ];
            gates.extend(canonical_stream(kak.a, kak.b, kak.c));
            gates.push(Gate::U2 {
                qubit: 0,
                matrix: kak.k1l.clone(),
            });
            gates.push(Gate::U2 {
                qubit: 1,
                matrix: kak.k1r.clone(),
            });
            gates
        }
    };

    let mut raw = Circuit::new(2);
    for g in gates {
        raw.push(g)?;
    }
    let (fragment, _) = nativize(&raw, RzOutput::Explicit)?;

    let rebuilt = fragment.unitary()?;
    let residual = distance_up_to_phase(&rebuilt, u);
    if residual > 1e-8 {
        return Err(Error::InvalidState(format!(
            "two-qubit decomposition residual {residual:.2e}"
        )));
    }
    Ok(fragment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::haar_random_unitary;
    use crate::rng::rng_from_seed;

    #[test]
    fn magic_basis_is_unitary() {
        assert!(crate::math::unitarity_deviation(&magic_basis()) < 1e-14);
    }

    #[test]
    fn canonical_matrix_matches_commuting_exponentials() {
        // exp[i(aXX+bYY+cZZ)] with b = c = 0 is cos(a) I + i sin(a) XX.
        let a = 0.37;
        let m = canonical_matrix(a, 0.0, 0.0);
        let xx = crate::math::kron(
            &Gate::X { qubit: 0 }.matrix_1q().unwrap(),
            &Gate::X { qubit: 0 }.matrix_1q().unwrap(),
        );
        let expected =
            identity(4).mapv(|z| z * cr(a.cos())) + xx.mapv(|z| z * I * cr(a.sin()));
        assert!(distance_up_to_phase(&m, &expected) < 1e-12);
    }

    #[test]
    fn canonical_stream_realizes_canonical_matrix() {
        let cases = [
            (0.3, 0.2, 0.1),
            (0.0, 0.0, 0.0),
            (std::f64::consts::FRAC_PI_4, 0.0, 0.0),
            (-0.4, 0.25, -0.6),
            (1.2, -1.0, 0.5),
        ];
        for (a, b, c_) in cases {
            let mut circuit = Circuit::new(2);
            for g in canonical_stream(a, b, c_) {
                circuit.push(g).unwrap();
            }
            let u = circuit.unitary().unwrap();
            let expected = canonical_matrix(a, b, c_);
            assert!(
                distance_up_to_phase(&u, &expected) < 1e-10,
                "canonical stream mismatch at ({a}, {b}, {c_})"
            );
        }
    }

    #[test]
    fn kak_round_trips_random_unitaries() {
        let mut rng = rng_from_seed(123);
        for _ in 0..50 {
            let u = haar_random_unitary(4, &mut rng);
            let kak = kak_decompose(&u).unwrap();
            assert!(distance_up_to_phase(&kak.reconstruct(), &u) < 1e-8);
        }
    }

    #[test]
    fn kak_handles_clifford_corner_cases() {
        for gate in [
            Gate::Cz { a: 0, b: 1 },
            Gate::Cnot {
                control: 0,
                target: 1,
            },
        ] {
            let u = gate.matrix_2q().unwrap();
            let kak = kak_decompose(&u).unwrap();
            assert!(distance_up_to_phase(&kak.reconstruct(), &u) < 1e-8);
        }
        let swap = swap_matrix();
        let kak = kak_decompose(&swap).unwrap();
        assert!(distance_up_to_phase(&kak.reconstruct(), &swap) < 1e-8);
    }

    #[test]
    fn cz_decomposes_to_exactly_one_cz() {
        let cz = Gate::Cz { a: 0, b: 1 }.matrix_2q().unwrap();
        let fragment = decompose_2q(&cz).unwrap();
        assert_eq!(fragment.gates.len(), 1);
        assert!(matches!(fragment.gates[0], Gate::Cz { .. }));
    }

    #[test]
    fn cnot_needs_one_cz_and_target_singles() {
        let cnot = Gate::Cnot {
            control: 0,
            target: 1,
        }
        .matrix_2q()
        .unwrap();
        let fragment = decompose_2q(&cnot).unwrap();
        assert_eq!(fragment.count_of("cz"), 1);
        // All single-qubit work sits on the target wire.
        for g in &fragment.gates {
            if g.is_single_qubit() {
                assert_eq!(g.qubits(), vec![1]);
            }
        }
    }

    #[test]
    fn random_unitaries_decompose_with_three_cz() {
        let mut rng = rng_from_seed(321);
        for _ in 0..25 {
            let u = haar_random_unitary(4, &mut rng);
            let fragment = decompose_2q(&u).unwrap();
            assert!(fragment.count_of("cz") <= 3);
            assert!(distance_up_to_phase(&fragment.unitary().unwrap(), &u) < 1e-8);
            for g in &fragment.gates {
                assert!(matches!(g, Gate::R { .. } | Gate::Rz { .. } | Gate::Cz { .. }));
            }
        }
    }

    #[test]
    fn controlled_unitaries_use_at_most_two_cz() {
        let mut rng = rng_from_seed(55);
        for _ in 0..10 {
            let target = haar_random_unitary(2, &mut rng);
            let mut u: CMat = identity(4);
            for i in 0..2 {
                for j in 0..2 {
                    u[(2 + i, 2 + j)] = target[(i, j)];
                    if i != j {
                        u[(2 + i, 2 + j - 2)] = ZERO;
                    }
                }
            }
            u[(2, 3)] = target[(0, 1)];
            u[(3, 2)] = target[(1, 0)];
            u[(2, 2)] = target[(0, 0)];
            u[(3, 3)] = target[(1, 1)];
            let fragment = decompose_2q(&u).unwrap();
            assert!(fragment.count_of("cz") <= 2, "controlled path must use ≤ 2 CZ");
            assert!(distance_up_to_phase(&fragment.unitary().unwrap(), &u) < 1e-8);
        }
    }

    #[test]
    fn control_on_second_wire_is_detected() {
        // CNOT with control 1, target 0.
        let mut u: CMat = ndarray::Array2::zeros((4, 4));
        u[(0, 0)] = ONE;
        u[(3, 1)] = ONE;
        u[(2, 2)] = ONE;
        u[(1, 3)] = ONE;
        let fragment = decompose_2q(&u).unwrap();
        assert!(fragment.count_of("cz") <= 2);
        assert!(distance_up_to_phase(&fragment.unitary().unwrap(), &u) < 1e-8);
    }

    #[test]
    fn local_product_needs_no_cz() {
        let mut rng = rng_from_seed(77);
        let a = haar_random_unitary(2, &mut rng);
        let b = haar_random_unitary(2, &mut rng);
        let u = crate::math::kron(&a, &b);
        let fragment = decompose_2q(&u).unwrap();
        assert_eq!(fragment.count_of("cz"), 0);
        assert!(distance_up_to_phase(&fragment.unitary().unwrap(), &u) < 1e-8);
    }

    #[test]
    fn eig_2x2_reconstructs() {
        let mut rng = rng_from_seed(11);
        for _ in 0..20 {
            let u = haar_random_unitary(2, &mut rng);
            let (xi1, xi2, v) = eig_unitary_2x2(&u);
            let mut d: CMat = ndarray::Array2::zeros((2, 2));
            d[(0, 0)] = Complex64::from_polar(1.0, xi1);
            d[(1, 1)] = Complex64::from_polar(1.0, xi2);
            let rebuilt = v.dot(&d).dot(&dagger(&v));
            assert!(distance_up_to_phase(&rebuilt, &u) < 1e-9);
        }
    }

    #[test]
    fn non_unitary_input_is_rejected() {
        let mut m = identity(4);
        m[(0, 0)] = cr(2.0);
        assert!(matches!(
            decompose_2q(&m),
            Err(Error::NotUnitary { .. })
        ));
    }
}
