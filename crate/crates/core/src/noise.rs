//! Configurable noise injection emulating the NISQ device: gate
//! depolarizing, amplitude/phase damping, readout confusion, and a
//! coherent CZ overrotation knob used by the mitigation studies.

use ndarray::array;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::Gate;
use crate::error::{Error, Result};
use crate::math::{cr, identity, kron, CMat, ZERO};
use crate::rng::derive_seed;
use crate::sim::{format_bits, sample_multinomial, Counts, QuantumState};

/// Two-qubit depolarizing override for one coupler ("badly calibrated CZ").
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EdgeDepolarizing {
    pub qubits: (usize, usize),
    pub probability: f64,
}

/// Noise profile playing the role of a calibration set.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NoiseProfile {
    pub label: String,
    /// Depolarizing probability after every single-qubit gate.
    #[serde(default)]
    pub depolarizing_1q: f64,
    /// Depolarizing probability after every two-qubit gate.
    #[serde(default)]
    pub depolarizing_2q: f64,
    /// Per-edge overrides of `depolarizing_2q`.
    #[serde(default)]
    pub depolarizing_2q_overrides: Vec<EdgeDepolarizing>,
    /// Amplitude-damping probability per gate on each touched qubit.
    #[serde(default)]
    pub amplitude_damping: f64,
    /// Phase-flip probability per gate on each touched qubit.
    #[serde(default)]
    pub dephasing: f64,
    /// Coherent overrotation of every CZ: diag(1,1,1,e^{iε}) after the gate.
    #[serde(default)]
    pub cz_overrotation: f64,
    /// Per-qubit readout confusion rows `[[P(0|0), P(1|0)], [P(0|1), P(1|1)]]`.
    #[serde(default)]
    pub readout: Vec<[[f64; 2]; 2]>,
}

impl NoiseProfile {
    /// A noiseless profile.
    pub fn none() -> Self {
        NoiseProfile {
            label: "none".to_string(),
            depolarizing_1q: 0.0,
            depolarizing_2q: 0.0,
            depolarizing_2q_overrides: Vec::new(),
            amplitude_damping: 0.0,
            dephasing: 0.0,
            cz_overrotation: 0.0,
            readout: Vec::new(),
        }
    }

    /// Bundled sample profile: a well-calibrated five-qubit device.
    pub fn good_calibration() -> Self {
        NoiseProfile {
            label: "good calibration".to_string(),
            depolarizing_1q: 0.001,
            depolarizing_2q: 0.01,
            depolarizing_2q_overrides: Vec::new(),
            amplitude_damping: 0.0005,
            dephasing: 0.0005,
            cz_overrotation: 0.0,
            readout: vec![[[0.98, 0.02], [0.03, 0.97]]; 5],
        }
    }

    /// Bundled sample profile: same device with one badly calibrated CZ
    /// on the (1, 2) coupler.
    pub fn degraded_calibration() -> Self {
        let mut profile = Self::good_calibration();
        profile.label = "degraded calibration".to_string();
        profile.depolarizing_2q_overrides = vec![EdgeDepolarizing {
            qubits: (1, 2),
            probability: 0.12,
        }];
        profile
    }

    /// Uniform readout flip probability on `n` qubits, otherwise noiseless.
    pub fn readout_only(n: usize, flip: f64) -> Self {
        NoiseProfile {
            label: format!("readout flips {flip}"),
            readout: vec![[[1.0 - flip, flip], [flip, 1.0 - flip]]; n],
            ..Self::none()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for p in [
            self.depolarizing_1q,
            self.depolarizing_2q,
            self.amplitude_damping,
            self.dephasing,
        ] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::InvalidProbability(p));
            }
        }
        for o in &self.depolarizing_2q_overrides {
            if !(0.0..1.0).contains(&o.probability) {
                return Err(Error::InvalidProbability(o.probability));
            }
        }
        if !self.cz_overrotation.is_finite() {
            return Err(Error::NonFiniteParameter(self.cz_overrotation));
        }
        for m in &self.readout {
            for row in m {
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidConfusionRow(sum));
                }
                if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                    return Err(Error::InvalidProbability(row[0].min(row[1])));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let profile: NoiseProfile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        profile.validate()?;
        Ok(profile)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("profile serializes")
    }

    /// True when any stochastic channel is configured, which forces
    /// density-matrix simulation.
    pub fn has_stochastic_noise(&self) -> bool {
        self.depolarizing_1q > 0.0
            || self.depolarizing_2q > 0.0
            || self
                .depolarizing_2q_overrides
                .iter()
                .any(|o| o.probability > 0.0)
            || self.amplitude_damping > 0.0
            || self.dephasing > 0.0
    }

    pub fn has_readout_noise(&self) -> bool {
        self.readout
            .iter()
            .any(|m| (m[0][1]).abs() > 0.0 || (m[1][0]).abs() > 0.0)
    }

    pub fn depolarizing_2q_for(&self, a: usize, b: usize) -> f64 {
        for o in &self.depolarizing_2q_overrides {
            let (x, y) = o.qubits;
            if (x == a && y == b) || (x == b && y == a) {
                return o.probability;
            }
        }
        self.depolarizing_2q
    }

    pub fn confusion_for(&self, qubit: usize) -> Result<[[f64; 2]; 2]> {
        self.readout
            .get(qubit)
            .copied()
            .ok_or(Error::MissingConfusion(qubit))
    }
}

fn pauli_matrices() -> [CMat; 3] {
    use crate::math::{I, ONE};
    [
        array![[ZERO, ONE], [ONE, ZERO]],
        array![[ZERO, -I], [I, ZERO]],
        array![[ONE, ZERO], [ZERO, -ONE]],
    ]
}

/// Kraus operators of the single-qubit depolarizing channel
/// `rho -> (1-p) rho + p I/2`.
pub fn depolarizing_1q_kraus(p: f64) -> Vec<CMat> {
    let [x, y, z] = pauli_matrices();
    let keep = (1.0 - 0.75 * p).sqrt();
    let flip = (p / 4.0).sqrt();
    vec![
        identity(2).mapv(|v| v * cr(keep)),
        x.mapv(|v| v * cr(flip)),
        y.mapv(|v| v * cr(flip)),
        z.mapv(|v| v * cr(flip)),
    ]
}

/// Kraus operators of the two-qubit depolarizing channel
/// `rho -> (1-p) rho + p I/4`.
pub fn depolarizing_2q_kraus(p: f64) -> Vec<CMat> {
    let [x, y, z] = pauli_matrices();
    let singles = [identity(2), x, y, z];
    let mut kraus = Vec::with_capacity(16);
    for (i, a) in singles.iter().enumerate() {
        for (j, b) in singles.iter().enumerate() {
            let weight = if i == 0 && j == 0 {
                (1.0 - 15.0 * p / 16.0).sqrt()
            } else {
                (p / 16.0).sqrt()
            };
            kraus.push(kron(a, b).mapv(|v| v * cr(weight)));
        }
    }
    kraus
}

pub fn amplitude_damping_kraus(gamma: f64) -> Vec<CMat> {
    vec![
        array![[cr(1.0), ZERO], [ZERO, cr((1.0 - gamma).sqrt())]],
        array![[ZERO, cr(gamma.sqrt())], [ZERO, ZERO]],
    ]
}

pub fn dephasing_kraus(p: f64) -> Vec<CMat> {
    let [_, _, z] = pauli_matrices();
    vec![
        identity(2).mapv(|v| v * cr((1.0 - p).sqrt())),
        z.mapv(|v| v * cr(p.sqrt())),
    ]
}

/// Apply a gate followed by the profile's noise channels on the touched
/// qubits. Stochastic channels require a density-matrix state.
pub fn apply_gate_noise(
    state: &mut QuantumState,
    gate: &Gate,
    profile: &NoiseProfile,
) -> Result<()> {
    if profile.has_stochastic_noise() && !state.is_density() {
        return Err(Error::InvalidState(
            "stochastic noise channels require density-matrix simulation".to_string(),
        ));
    }
    match gate {
        Gate::Measure { .. } | Gate::Barrier => {
            return Err(Error::InvalidArgument(
                "apply_gate_noise expects a unitary gate".to_string(),
            ))
        }
        _ => {}
    }
    state.apply_gate(gate)?;

    if let Gate::Cz { a, b } = gate {
        if profile.cz_overrotation != 0.0 {
            let mut over = identity(4);
            over[(3, 3)] = Complex64::from_polar(1.0, profile.cz_overrotation);
            state.apply_2q(&over, *a, *b)?;
        }
    }

    if !profile.has_stochastic_noise() {
        return Ok(());
    }
    let qubits = gate.qubits();
    if qubits.len() == 2 {
        let p2 = profile.depolarizing_2q_for(qubits[0], qubits[1]);
        if p2 > 0.0 {
            state.apply_kraus(&depolarizing_2q_kraus(p2), &qubits)?;
        }
    } else if profile.depolarizing_1q > 0.0 {
        state.apply_kraus(&depolarizing_1q_kraus(profile.depolarizing_1q), &qubits)?;
    }
    for &q in &qubits {
        if profile.amplitude_damping > 0.0 {
            state.apply_kraus(&amplitude_damping_kraus(profile.amplitude_damping), &[q])?;
        }
        if profile.dephasing > 0.0 {
            state.apply_kraus(&dephasing_kraus(profile.dephasing), &[q])?;
        }
    }
    Ok(())
}

/// Flip each shot's bits independently according to the per-qubit confusion
/// matrices of the measured qubits. Deterministic for a fixed seed.
pub fn apply_readout_confusion(
    ideal: &Counts,
    measured_qubits: &[usize],
    profile: &NoiseProfile,
    rng_seed: u64,
) -> Result<Counts> {
    if !profile.has_readout_noise() {
        return Ok(ideal.clone());
    }
    if measured_qubits.len() != ideal.num_bits {
        return Err(Error::DimensionMismatch {
            expected: ideal.num_bits,
            got: measured_qubits.len(),
        });
    }
    let matrices: Vec<[[f64; 2]; 2]> = measured_qubits
        .iter()
        .map(|&q| profile.confusion_for(q))
        .collect::<Result<_>>()?;
    let k = ideal.num_bits;
    if k > 16 {
        return Err(Error::InvalidArgument(format!(
            "readout confusion supports up to 16 measured qubits, got {k}"
        )));
    }
    // Per input bitstring, the joint law of independently flipping each
    // shot's bits is a multinomial over the 2^k observed patterns with
    // product probabilities; sample it directly.
    let mut out = Counts::new(k);
    for (group, (bits, &count)) in ideal.table.iter().enumerate() {
        let input = usize::from_str_radix(bits, 2).expect("binary key");
        let dim = 1usize << k;
        let mut probs = vec![0.0; dim];
        for (observed, slot) in probs.iter_mut().enumerate() {
            let mut w = 1.0;
            for (q, m) in matrices.iter().enumerate() {
                let bit_in = (input >> (k - 1 - q)) & 1;
                let bit_out = (observed >> (k - 1 - q)) & 1;
                w *= m[bit_in][bit_out];
            }
            *slot = w;
        }
        let draw = sample_multinomial(&probs, count, derive_seed(rng_seed, group as u64));
        for (observed, &n) in draw.iter().enumerate() {
            if n > 0 {
                let key = format_bits(observed, k);
                *out.table.entry(key).or_insert(0) += n;
                out.shots += n;
            }
        }
    }
    Ok(out)
}

/// Exact convolution of a probability vector with the tensor-product
/// confusion model (oracle for tests and REM derivations).
pub fn convolve_readout(probs: &[f64], matrices: &[[[f64; 2]; 2]]) -> Vec<f64> {
    let n = matrices.len();
    let dim = probs.len();
    assert_eq!(dim, 1usize << n);
    let mut out = vec![0.0; dim];
    for (ideal, &p) in probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for observed in 0..dim {
            let mut w = p;
            for (q, m) in matrices.iter().enumerate() {
                let bit_in = (ideal >> (n - 1 - q)) & 1;
                let bit_out = (observed >> (n - 1 - q)) & 1;
                w *= m[bit_in][bit_out];
            }
            out[observed] += w;
        }
    }
    out
}
