//! Dense complex linear algebra used across the crate.
//!
//! Everything here targets small matrices (at most 32x32 for five qubits),
//! so the kernels favour robustness over asymptotic speed. The Hermitian
//! eigensolver is a cyclic Jacobi iteration; no external LAPACK backend is
//! required.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = Array2<C64>;
pub type CVec = Array1<C64>;

pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    Array2::eye(n)
}

pub fn dagger(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn frobenius_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Spectral norm via power iteration on `A†A`.
pub fn operator_norm(a: &CMat) -> f64 {
    let m = dagger(a).dot(a);
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut v: CVec = Array1::from_elem(n, cr(1.0 / (n as f64).sqrt()));
    let mut lambda = 0.0;
    for _ in 0..200 {
        let w = m.dot(&v);
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return 0.0;
        }
        let next = norm;
        v = w.mapv(|z| z / cr(norm));
        if (next - lambda).abs() <= 1e-14 * next.max(1.0) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt()
}

/// Deviation of `a` from unitarity in the spectral norm.
pub fn unitarity_deviation(a: &CMat) -> f64 {
    let n = a.nrows();
    let d = dagger(a).dot(a) - identity(n);
    operator_norm(&d)
}

pub fn check_unitary(a: &CMat, tolerance: f64) -> Result<()> {
    let deviation = unitarity_deviation(a);
    if deviation > tolerance {
        return Err(Error::NotUnitary {
            deviation,
            tolerance,
        });
    }
    Ok(())
}

pub fn hermiticity_deviation(a: &CMat) -> f64 {
    let d = a - &dagger(a);
    frobenius_norm(&d)
}

/// Distance between `a` and `b` modulo a global phase, in the spectral norm.
pub fn distance_up_to_phase(a: &CMat, b: &CMat) -> f64 {
    let overlap = dagger(b).dot(a).diag().sum();
    let phase = if overlap.norm() < 1e-14 {
        ONE
    } else {
        overlap / cr(overlap.norm())
    };
    let d = a - &b.mapv(|z| z * phase);
    operator_norm(&d)
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// the columns of a unitary matrix.
pub fn hermitian_eigen(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    let herm_dev = hermiticity_deviation(a);
    let scale = frobenius_norm(a).max(1.0);
    if herm_dev > 1e-8 * scale {
        return Err(Error::NotHermitian(herm_dev));
    }

    // Work on the Hermitian average to wash out representational noise.
    let mut m = (a + &dagger(a)).mapv(|z| z * cr(0.5));
    let mut v = identity(n);

    let off = |m: &CMat| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let tol = 1e-15 * scale;
    let max_sweeps = 100;
    let mut converged = false;
    for _ in 0..max_sweeps {
        if off(&m) <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.norm() <= tol / (n as f64) {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let abs = apq.norm();
                let phase = apq / cr(abs);
                // Rotation angle for the real symmetric 2x2 [app, |apq|; |apq|, aqq].
                let tau = (aqq - app) / (2.0 * abs);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cos = 1.0 / (1.0 + t * t).sqrt();
                let sin = t * cos;

                // Unitary J: columns p,q. J[p][p]=c, J[q][p]=-s*conj(phase),
                // J[p][q]=s*phase, J[q][q]=c; applied as m <- J† m J.
                let (cp, sp) = (cr(cos), cr(sin) * phase);
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * cp - mkq * sp.conj();
                    m[(k, q)] = mkp * sp + mkq * cp;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = mpk * cp - mqk * sp;
                    m[(q, k)] = mpk * sp.conj() + mqk * cp;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * cp - vkq * sp.conj();
                    v[(k, q)] = vkp * sp + vkq * cp;
                }
            }
        }
    }
    if !converged && off(&m) > 1e-10 * scale {
        return Err(Error::EigenFailure(max_sweeps));
    }

    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (m[(i, i)].re, i)).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let values: Vec<f64> = pairs.iter().map(|&(w, _)| w).collect();
    let mut vectors = Array2::zeros((n, n));
    for (new_col, &(_, old_col)) in pairs.iter().enumerate() {
        for k in 0..n {
            vectors[(k, new_col)] = v[(k, old_col)];
        }
    }
    Ok((values, vectors))
}

/// Hermitian matrix function: f applied to the eigenvalues.
pub fn hermitian_apply(a: &CMat, f: impl Fn(f64) -> f64) -> Result<CMat> {
    let (values, vectors) = hermitian_eigen(a)?;
    let n = a.nrows();
    let mut d = Array2::zeros((n, n));
    for (i, &w) in values.iter().enumerate() {
        d[(i, i)] = cr(f(w));
    }
    Ok(vectors.dot(&d).dot(&dagger(&vectors)))
}

/// Nearest unitary in the polar decomposition sense: `U = A (A†A)^(-1/2)`.
pub fn polar_unitary(a: &CMat) -> Result<CMat> {
    let gram = dagger(a).dot(a);
    let inv_sqrt = hermitian_apply(&gram, |w| {
        if w <= 1e-300 {
            0.0
        } else {
            1.0 / w.sqrt()
        }
    })?;
    Ok(a.dot(&inv_sqrt))
}

/// Solve the real linear system `a x = b` by Gaussian elimination with
/// partial pivoting. `a` is consumed as scratch space.
pub fn solve_real(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::IllConditioned(f64::INFINITY));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in (col + 1)..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut sum = b[row];
        for k in (row + 1)..n {
            sum -= a[row][k] * x[k];
        }
        x[row] = sum / a[row][row];
    }
    Ok(x)
}

/// Determinant by LU factorization with partial pivoting.
pub fn determinant(a: &CMat) -> C64 {
    let n = a.nrows();
    let mut m = a.clone();
    let mut det = ONE;
    for col in 0..n {
        let mut pivot = col;
        for row in (col + 1)..n {
            if m[(row, col)].norm() > m[(pivot, col)].norm() {
                pivot = row;
            }
        }
        if m[(pivot, col)].norm() < 1e-300 {
            return ZERO;
        }
        if pivot != col {
            for k in 0..n {
                let tmp = m[(col, k)];
                m[(col, k)] = m[(pivot, k)];
                m[(pivot, k)] = tmp;
            }
            det = -det;
        }
        det *= m[(col, col)];
        for row in (col + 1)..n {
            let factor = m[(row, col)] / m[(col, col)];
            for k in col..n {
                let sub = factor * m[(col, k)];
                m[(row, k)] -= sub;
            }
        }
    }
    det
}

/// Euclidean projection of `v` onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    let mut found = false;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (k as f64 + 1.0);
        if u - candidate > 0.0 {
            tau = candidate;
        } else {
            found = true;
            break;
        }
    }
    if !found {
        // All entries active.
        tau = (v.iter().sum::<f64>() - 1.0) / n as f64;
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Haar-distributed random unitary from a Ginibre matrix and Gram-Schmidt.
pub fn haar_random_unitary(n: usize, rng: &mut impl Rng) -> CMat {
    let mut columns: Vec<CVec> = Vec::with_capacity(n);
    for _ in 0..n {
        loop {
            let mut col: CVec = Array1::from_shape_fn(n, |_| {
                c(gaussian(rng), gaussian(rng))
            });
            for prev in &columns {
                let overlap: C64 = prev
                    .iter()
                    .zip(col.iter())
                    .map(|(p, c)| p.conj() * c)
                    .sum();
                col = &col - &prev.mapv(|z| z * overlap);
            }
            let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-8 {
                columns.push(col.mapv(|z| z / cr(norm)));
                break;
            }
        }
    }
    let mut u = Array2::zeros((n, n));
    for (j, col) in columns.iter().enumerate() {
        for i in 0..n {
            u[(i, j)] = col[i];
        }
    }
    u
}

/// Standard normal deviate (Box-Muller).
pub fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Normalize an angle to `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut t = theta.rem_euclid(two_pi);
    // Snap values that round to exactly 2π back to zero.
    if (t - two_pi).abs() < 1e-15 {
        t = 0.0;
    }
    t
}
