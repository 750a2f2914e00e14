//! Exact statevector and density-matrix simulation.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::math::{cr, dagger, hermitian_eigen, CMat, CVec, ZERO};
use crate::rng::rng_from_seed;

/// Pure or mixed quantum state of `num_qubits` qubits.
///
/// Qubit 0 is the most significant bit of the basis index.
#[derive(Debug, Clone)]
pub enum QuantumState {
    Vector { num_qubits: usize, amplitudes: CVec },
    Density { num_qubits: usize, matrix: CMat },
}

/// Dense simulation is the only backend; keep register sizes desk-scale.
pub const MAX_STATEVECTOR_QUBITS: usize = 20;
pub const MAX_DENSITY_QUBITS: usize = 10;

impl QuantumState {
    /// |0...0> as a statevector.
    pub fn zero(num_qubits: usize) -> Self {
        assert!(
            num_qubits <= MAX_STATEVECTOR_QUBITS,
            "dense statevector simulation is capped at {MAX_STATEVECTOR_QUBITS} qubits"
        );
        let dim = 1usize << num_qubits;
        let mut amplitudes: CVec = Array1::zeros(dim);
        amplitudes[0] = cr(1.0);
        QuantumState::Vector {
            num_qubits,
            amplitudes,
        }
    }

    /// |0...0><0...0| as a density matrix.
    pub fn zero_density(num_qubits: usize) -> Self {
        assert!(
            num_qubits <= MAX_DENSITY_QUBITS,
            "dense density-matrix simulation is capped at {MAX_DENSITY_QUBITS} qubits"
        );
        let dim = 1usize << num_qubits;
        let mut matrix: CMat = Array2::zeros((dim, dim));
        matrix[(0, 0)] = cr(1.0);
        QuantumState::Density { num_qubits, matrix }
    }

    pub fn from_vector(amplitudes: CVec) -> Result<Self> {
        let dim = amplitudes.len();
        let num_qubits = dim.trailing_zeros() as usize;
        if dim == 0 || dim != 1usize << num_qubits {
            return Err(Error::InvalidState(format!(
                "statevector length {dim} is not a power of two"
            )));
        }
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState(format!(
                "statevector norm {} is not 1",
                norm.sqrt()
            )));
        }
        Ok(QuantumState::Vector {
            num_qubits,
            amplitudes,
        })
    }

    pub fn from_density(matrix: CMat) -> Result<Self> {
        let dim = matrix.nrows();
        let num_qubits = dim.trailing_zeros() as usize;
        if dim == 0 || dim != 1usize << num_qubits || matrix.ncols() != dim {
            return Err(Error::InvalidState(format!(
                "density matrix shape {:?} is not 2^n x 2^n",
                matrix.dim()
            )));
        }
        let herm = crate::math::hermiticity_deviation(&matrix);
        if herm > 1e-8 {
            return Err(Error::NotHermitian(herm));
        }
        let trace: f64 = matrix.diag().iter().map(|z| z.re).sum();
        if (trace - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState(format!(
                "density matrix trace {trace} is not 1"
            )));
        }
        Ok(QuantumState::Density { num_qubits, matrix })
    }

    pub fn num_qubits(&self) -> usize {
        match self {
            QuantumState::Vector { num_qubits, .. } => *num_qubits,
            QuantumState::Density { num_qubits, .. } => *num_qubits,
        }
    }

    pub fn dim(&self) -> usize {
        1usize << self.num_qubits()
    }

    pub fn is_density(&self) -> bool {
        matches!(self, QuantumState::Density { .. })
    }

    /// Promote to a density matrix (no-op if already one).
    pub fn into_density(self) -> QuantumState {
        match self {
            QuantumState::Vector {
                num_qubits,
                amplitudes,
            } => {
                let dim = amplitudes.len();
                let mut matrix: CMat = Array2::zeros((dim, dim));
                for i in 0..dim {
                    for j in 0..dim {
                        matrix[(i, j)] = amplitudes[i] * amplitudes[j].conj();
                    }
                }
                QuantumState::Density { num_qubits, matrix }
            }
            density => density,
        }
    }

    /// Born-rule probabilities over the full computational basis.
    pub fn probabilities(&self) -> Vec<f64> {
        match self {
            QuantumState::Vector { amplitudes, .. } => {
                amplitudes.iter().map(|z| z.norm_sqr()).collect()
            }
            QuantumState::Density { matrix, .. } => {
                matrix.diag().iter().map(|z| z.re.max(0.0)).collect()
            }
        }
    }

    pub fn amplitudes(&self) -> Option<&CVec> {
        match self {
            QuantumState::Vector { amplitudes, .. } => Some(amplitudes),
            QuantumState::Density { .. } => None,
        }
    }

    pub fn density(&self) -> Option<&CMat> {
        match self {
            QuantumState::Density { matrix, .. } => Some(matrix),
            QuantumState::Vector { .. } => None,
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            QuantumState::Vector { amplitudes, .. } => {
                amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
            }
            QuantumState::Density { matrix, .. } => {
                matrix.diag().iter().map(|z| z.re).sum::<f64>()
            }
        }
    }

    /// Apply a unitary gate in place.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        match gate {
            Gate::Measure { .. } => Err(Error::UnexpectedMeasurement),
            Gate::Barrier => Ok(()),
            g if g.is_single_qubit() => {
                let m = g.matrix_1q().unwrap();
                let q = g.qubits()[0];
                self.apply_1q(&m, q)
            }
            g => {
                let m = g.matrix_2q().unwrap();
                let qs = g.qubits();
                self.apply_2q(&m, qs[0], qs[1])
            }
        }
    }

    pub fn apply_1q(&mut self, m: &CMat, qubit: usize) -> Result<()> {
        let n = self.num_qubits();
        if qubit >= n {
            return Err(Error::QubitOutOfRange {
                index: qubit,
                num_qubits: n,
            });
        }
        match self {
            QuantumState::Vector { amplitudes, .. } => {
                apply_1q_vec(amplitudes, m, qubit, n);
            }
            QuantumState::Density { matrix, .. } => {
                // rho -> U rho U†: transform every column, then every row.
                let dim = 1usize << n;
                for col in 0..dim {
                    apply_1q_view(matrix.column_mut(col), m, qubit, n);
                }
                let mconj = m.mapv(|z| z.conj());
                for row in 0..dim {
                    apply_1q_view(matrix.row_mut(row), &mconj, qubit, n);
                }
            }
        }
        Ok(())
    }

    pub fn apply_2q(&mut self, m: &CMat, a: usize, b: usize) -> Result<()> {
        let n = self.num_qubits();
        for &q in &[a, b] {
            if q >= n {
                return Err(Error::QubitOutOfRange {
                    index: q,
                    num_qubits: n,
                });
            }
        }
        if a == b {
            return Err(Error::DuplicateQubit(a));
        }
        match self {
            QuantumState::Vector { amplitudes, .. } => {
                apply_2q_vec(amplitudes, m, a, b, n);
            }
            QuantumState::Density { matrix, .. } => {
                let dim = 1usize << n;
                for col in 0..dim {
                    apply_2q_view(matrix.column_mut(col), m, a, b, n);
                }
                let mconj = m.mapv(|z| z.conj());
                for row in 0..dim {
                    apply_2q_view(matrix.row_mut(row), &mconj, a, b, n);
                }
            }
        }
        Ok(())
    }

    /// Apply a Kraus channel `rho -> sum_k K_k rho K_k†` on `qubits`.
    /// Density representation only.
    pub fn apply_kraus(&mut self, kraus: &[CMat], qubits: &[usize]) -> Result<()> {
        let n = self.num_qubits();
        let matrix = match self {
            QuantumState::Density { matrix, .. } => matrix,
            QuantumState::Vector { .. } => {
                return Err(Error::InvalidState(
                    "Kraus channels need a density-matrix state".to_string(),
                ))
            }
        };
        let dim = 1usize << n;
        let mut out: CMat = Array2::zeros((dim, dim));
        for k in kraus {
            let mut term = matrix.clone();
            match qubits.len() {
                1 => {
                    for col in 0..dim {
                        apply_1q_view(term.column_mut(col), k, qubits[0], n);
                    }
                    let kc = k.mapv(|z| z.conj());
                    for row in 0..dim {
                        apply_1q_view(term.row_mut(row), &kc, qubits[0], n);
                    }
                }
                2 => {
                    for col in 0..dim {
                        apply_2q_view(term.column_mut(col), k, qubits[0], qubits[1], n);
                    }
                    let kc = k.mapv(|z| z.conj());
                    for row in 0..dim {
                        apply_2q_view(term.row_mut(row), &kc, qubits[0], qubits[1], n);
                    }
                }
                len => {
                    return Err(Error::InvalidArgument(format!(
                        "Kraus channels support 1 or 2 qubits, got {len}"
                    )))
                }
            }
            out += &term;
        }
        *matrix = out;
        Ok(())
    }
}

fn apply_1q_vec(amplitudes: &mut CVec, m: &CMat, qubit: usize, n: usize) {
    apply_1q_view(amplitudes.view_mut(), m, qubit, n);
}

fn apply_1q_view(
    mut amps: ndarray::ArrayViewMut1<num_complex::Complex64>,
    m: &CMat,
    qubit: usize,
    n: usize,
) {
    let bit = n - 1 - qubit;
    let stride = 1usize << bit;
    let dim = amps.len();
    let (m00, m01, m10, m11) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let mut base = 0;
    while base < dim {
        for offset in 0..stride {
            let i0 = base + offset;
            let i1 = i0 + stride;
            let a0 = amps[i0];
            let a1 = amps[i1];
            amps[i0] = m00 * a0 + m01 * a1;
            amps[i1] = m10 * a0 + m11 * a1;
        }
        base += stride << 1;
    }
}

fn apply_2q_vec(amplitudes: &mut CVec, m: &CMat, a: usize, b: usize, n: usize) {
    apply_2q_view(amplitudes.view_mut(), m, a, b, n);
}

fn apply_2q_view(
    mut amps: ndarray::ArrayViewMut1<num_complex::Complex64>,
    m: &CMat,
    a: usize,
    b: usize,
    n: usize,
) {
    let bit_a = n - 1 - a;
    let bit_b = n - 1 - b;
    let mask_a = 1usize << bit_a;
    let mask_b = 1usize << bit_b;
    let dim = amps.len();
    for i in 0..dim {
        if i & mask_a != 0 || i & mask_b != 0 {
            continue;
        }
        let i00 = i;
        let i01 = i | mask_b;
        let i10 = i | mask_a;
        let i11 = i | mask_a | mask_b;
        let v = [amps[i00], amps[i01], amps[i10], amps[i11]];
        for (row, idx) in [i00, i01, i10, i11].into_iter().enumerate() {
            amps[idx] = m[(row, 0)] * v[0] + m[(row, 1)] * v[1] + m[(row, 2)] * v[2]
                + m[(row, 3)] * v[3];
        }
    }
}

/// Run a measurement-free circuit from |0...0> and return the exact final
/// statevector.
pub fn run_statevector(circuit: &Circuit) -> Result<QuantumState> {
    if circuit.has_measurement() {
        return Err(Error::UnexpectedMeasurement);
    }
    let mut state = QuantumState::zero(circuit.num_qubits);
    for gate in &circuit.gates {
        state.apply_gate(gate)?;
    }
    Ok(state)
}

/// Counts of measured bitstrings for a given shot budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counts {
    pub shots: u64,
    pub num_bits: usize,
    pub table: BTreeMap<String, u64>,
}

impl Counts {
    pub fn new(num_bits: usize) -> Self {
        Counts {
            shots: 0,
            num_bits,
            table: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, bits: &str) {
        debug_assert_eq!(bits.len(), self.num_bits);
        *self.table.entry(bits.to_string()).or_insert(0) += 1;
        self.shots += 1;
    }

    pub fn frequency(&self, bits: &str) -> f64 {
        if self.shots == 0 {
            return 0.0;
        }
        *self.table.get(bits).unwrap_or(&0) as f64 / self.shots as f64
    }

    /// Empirical distribution as a dense vector over all 2^k bitstrings.
    pub fn to_probability_vector(&self) -> Vec<f64> {
        let dim = 1usize << self.num_bits;
        let mut p = vec![0.0; dim];
        for (bits, &count) in &self.table {
            let idx = usize::from_str_radix(bits, 2).expect("binary key");
            p[idx] = count as f64 / self.shots.max(1) as f64;
        }
        p
    }

    pub fn from_probability_counts(num_bits: usize, raw: &[u64]) -> Self {
        let mut counts = Counts::new(num_bits);
        for (idx, &n) in raw.iter().enumerate() {
            if n > 0 {
                let bits = format_bits(idx, num_bits);
                counts.table.insert(bits, n);
                counts.shots += n;
            }
        }
        counts
    }
}

pub fn format_bits(index: usize, num_bits: usize) -> String {
    (0..num_bits)
        .map(|b| {
            if index >> (num_bits - 1 - b) & 1 == 1 {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

/// Multinomial sample of `shots` outcomes from the Born distribution of
/// `state`. Deterministic for a fixed seed.
pub fn sample_counts(state: &QuantumState, shots: u64, rng_seed: u64) -> Result<Counts> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be >= 1".to_string()));
    }
    let probs = state.probabilities();
    let n = state.num_qubits();
    let raw = sample_multinomial(&probs, shots, rng_seed);
    Ok(Counts::from_probability_counts(n, &raw))
}

/// Binomial draw: exact inverse-CDF walk when the mean is small, normal
/// approximation in the bulk regime (mean > 400 after the symmetry flip,
/// so the variance exceeds 200 and the approximation error sits far below
/// the crate's statistical tolerances).
pub fn sample_binomial(rng: &mut impl Rng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    if p > 0.5 {
        return n - sample_binomial(rng, n, 1.0 - p);
    }
    let mean = n as f64 * p;
    if mean > 400.0 {
        let variance = mean * (1.0 - p);
        let draw = mean + variance.sqrt() * crate::math::gaussian(rng);
        return draw.round().clamp(0.0, n as f64) as u64;
    }
    // Inverse CDF by the recurrence P(k+1)/P(k) = (n-k)/(k+1) · p/(1-p);
    // with mean <= 400 and p <= 1/2 the starting mass (1-p)^n >= ~1e-241.
    let mut u: f64 = rng.gen_range(0.0..1.0);
    let ratio = p / (1.0 - p);
    let mut pk = (1.0 - p).powf(n as f64);
    let mut k = 0u64;
    loop {
        if u <= pk || k >= n {
            return k;
        }
        u -= pk;
        pk *= (n - k) as f64 / (k + 1) as f64 * ratio;
        k += 1;
    }
}

/// Multinomial draw via sequential conditional binomials; distributionally
/// identical to drawing `shots` categorical samples and deterministic for
/// a fixed seed.
pub fn sample_multinomial(probs: &[f64], shots: u64, rng_seed: u64) -> Vec<u64> {
    let mut rng = rng_from_seed(rng_seed);
    let mut counts = vec![0u64; probs.len()];
    let total: f64 = probs
        .iter()
        .map(|&p| p.max(0.0))
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let mut remaining = shots;
    let mut rest = total;
    for (i, &p_raw) in probs.iter().enumerate() {
        if remaining == 0 || rest <= 1e-300 {
            break;
        }
        let p = p_raw.max(0.0);
        if i + 1 == probs.len() {
            counts[i] += remaining;
            remaining = 0;
            break;
        }
        let conditional = (p / rest).clamp(0.0, 1.0);
        let draw = sample_binomial(&mut rng, remaining, conditional);
        counts[i] += draw;
        remaining -= draw;
        rest -= p;
    }
    if remaining > 0 {
        // Probability mass exhausted early by floating-point error: give
        // the leftover shots to the most probable bucket.
        let argmax = probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
        counts[argmax] += remaining;
    }
    counts
}

/// Reduced density matrix over `keep` (strictly increasing qubit indices);
/// all other qubits are traced out.
pub fn partial_trace(state: &QuantumState, keep: &[usize]) -> Result<QuantumState> {
    let n = state.num_qubits();
    if keep.is_empty() {
        return Err(Error::InvalidArgument(
            "keep list must be non-empty".to_string(),
        ));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "keep list must be strictly increasing".to_string(),
        ));
    }
    if *keep.last().unwrap() >= n {
        return Err(Error::QubitOutOfRange {
            index: *keep.last().unwrap(),
            num_qubits: n,
        });
    }
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let k = keep.len();
    let kdim = 1usize << k;
    let edim = 1usize << traced.len();

    // Build a full basis index from (kept bits, traced bits).
    let build = |kept_idx: usize, env_idx: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &q) in keep.iter().enumerate() {
            let bit = (kept_idx >> (k - 1 - pos)) & 1;
            idx |= bit << (n - 1 - q);
        }
        for (pos, &q) in traced.iter().enumerate() {
            let bit = (env_idx >> (traced.len().saturating_sub(1 + pos))) & 1;
            idx |= bit << (n - 1 - q);
        }
        idx
    };

    let mut reduced: CMat = Array2::zeros((kdim, kdim));
    match state {
        QuantumState::Vector { amplitudes, .. } => {
            for r in 0..kdim {
                for c in 0..kdim {
                    let mut sum = ZERO;
                    for e in 0..edim {
                        sum += amplitudes[build(r, e)] * amplitudes[build(c, e)].conj();
                    }
                    reduced[(r, c)] = sum;
                }
            }
        }
        QuantumState::Density { matrix, .. } => {
            for r in 0..kdim {
                for c in 0..kdim {
                    let mut sum = ZERO;
                    for e in 0..edim {
                        sum += matrix[(build(r, e), build(c, e))];
                    }
                    reduced[(r, c)] = sum;
                }
            }
        }
    }
    Ok(QuantumState::Density {
        num_qubits: k,
        matrix: reduced,
    })
}

/// Uhlmann fidelity. Equals |<psi|phi>|^2 for pure inputs.
pub fn state_fidelity(a: &QuantumState, b: &QuantumState) -> Result<f64> {
    if a.num_qubits() != b.num_qubits() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    match (a, b) {
        (
            QuantumState::Vector {
                amplitudes: va, ..
            },
            QuantumState::Vector {
                amplitudes: vb, ..
            },
        ) => {
            let overlap: num_complex::Complex64 =
                va.iter().zip(vb.iter()).map(|(x, y)| x.conj() * y).sum();
            Ok(overlap.norm_sqr().min(1.0))
        }
        (QuantumState::Vector { amplitudes, .. }, QuantumState::Density { matrix, .. })
        | (QuantumState::Density { matrix, .. }, QuantumState::Vector { amplitudes, .. }) => {
            let rho_psi = matrix.dot(amplitudes);
            let val: num_complex::Complex64 = amplitudes
                .iter()
                .zip(rho_psi.iter())
                .map(|(x, y)| x.conj() * y)
                .sum();
            Ok(val.re.clamp(0.0, 1.0))
        }
        (QuantumState::Density { matrix: ra, .. }, QuantumState::Density { matrix: rb, .. }) => {
            // F = (tr sqrt(sqrt(ra) rb sqrt(ra)))^2
            let sqrt_a = crate::math::hermitian_apply(ra, |w| w.max(0.0).sqrt())?;
            let inner = sqrt_a.dot(rb).dot(&sqrt_a);
            let (values, _) = hermitian_eigen(&((&inner + &dagger(&inner)).mapv(|z| z * cr(0.5))))?;
            let trace_sqrt: f64 = values.iter().map(|&w| w.max(0.0).sqrt()).sum();
            Ok((trace_sqrt * trace_sqrt).clamp(0.0, 1.0))
        }
    }
}
