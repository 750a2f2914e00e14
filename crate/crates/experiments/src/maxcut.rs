//! Maxcut by single-layer QAOA with the virtual-node qubit reduction, and
//! the Q-score benchmark on Erdős-Rényi graphs.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use qstar_core::backend::Backend;
use qstar_core::circuit::Circuit;
use qstar_core::error::{Error, Result};
use qstar_core::rng::{derive_seed, rng_from_seed};
use qstar_core::sim::Counts;

/// Unweighted simple graph on nodes `0..n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Graph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for &(a, b) in &edges {
            if a == b {
                return Err(Error::InvalidArgument(format!("self-loop on node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge ({a}, {b}) exceeds node count {n}"
                )));
            }
            seen.insert((a.min(b), a.max(b)));
        }
        Ok(Graph {
            n,
            edges: seen.into_iter().collect(),
        })
    }

    /// Parse a plain edge list, one pair of 1-based node labels per line.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut max_node = 0usize;
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let a: usize = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad edge line: {line}")))?;
            let b: usize = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad edge line: {line}")))?;
            if a == 0 || b == 0 {
                return Err(Error::Parse("node labels are 1-based".to_string()));
            }
            max_node = max_node.max(a).max(b);
            edges.push((a - 1, b - 1));
        }
        Graph::new(max_node, edges)
    }

    /// Erdős-Rényi G(n, p), resampled until at least one edge exists.
    pub fn random(n: usize, edge_probability: f64, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        loop {
            let mut edges = Vec::new();
            for a in 0..n {
                for b in (a + 1)..n {
                    if rng.gen_range(0.0..1.0) < edge_probability {
                        edges.push((a, b));
                    }
                }
            }
            if !edges.is_empty() {
                return Graph { n, edges };
            }
        }
    }
}

/// Ising problem after the virtual-node reduction: spins `0..num_spins`,
/// unit couplings on `couplings`, and fields from edges into the virtual
/// node (which is pinned to |1>).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsingProblem {
    pub num_spins: usize,
    pub couplings: Vec<(usize, usize)>,
    pub fields: Vec<f64>,
}

/// Fix the last node to |1>: `H' = Σ_{i<j<n-1} J_ij Z_i Z_j − Σ_i J_{i,n-1} Z_i`.
pub fn reduce_virtual_node(graph: &Graph) -> Result<IsingProblem> {
    if graph.n < 2 {
        return Err(Error::InvalidArgument(
            "virtual-node reduction needs at least 2 nodes".to_string(),
        ));
    }
    let virtual_node = graph.n - 1;
    let num_spins = graph.n - 1;
    let mut couplings = Vec::new();
    let mut fields = vec![0.0; num_spins];
    for &(a, b) in &graph.edges {
        if b == virtual_node {
            fields[a] -= 1.0;
        } else if a == virtual_node {
            fields[b] -= 1.0;
        } else {
            couplings.push((a, b));
        }
    }
    Ok(IsingProblem {
        num_spins,
        couplings,
        fields,
    })
}

impl IsingProblem {
    /// Ising energy of a bitstring (bit 0 -> spin +1).
    pub fn energy(&self, bits: &[u8]) -> f64 {
        let spin = |q: usize| -> f64 {
            if bits[q] == 0 {
                1.0
            } else {
                -1.0
            }
        };
        let mut e = 0.0;
        for &(a, b) in &self.couplings {
            e += spin(a) * spin(b);
        }
        for (i, &h) in self.fields.iter().enumerate() {
            e += h * spin(i);
        }
        e
    }
}

/// Single-layer QAOA ansatz: |+>^m, then exp(-iγH') via CNOT–RZ–CNOT for
/// couplings plus RZ for fields, then the mixer exp(-iβ Σ X) as R gates,
/// then measurement.
pub fn qaoa_circuit(problem: &IsingProblem, gamma: f64, beta: f64) -> Circuit {
    let m = problem.num_spins;
    let mut circuit = Circuit::new(m.max(1));
    for q in 0..m {
        circuit.h(q);
    }
    for &(a, b) in &problem.couplings {
        circuit.cnot(a, b);
        circuit.rz(b, 2.0 * gamma);
        circuit.cnot(a, b);
    }
    for (q, &h) in problem.fields.iter().enumerate() {
        if h != 0.0 {
            circuit.rz(q, 2.0 * gamma * h);
        }
    }
    for q in 0..m {
        circuit.r(q, 2.0 * beta, 0.0);
    }
    circuit.measure_all();
    circuit
}

/// Number of edges crossing the cut defined by `assignment` (one bit per
/// node, including the virtual node).
pub fn cut_value(graph: &Graph, assignment: &[u8]) -> Result<usize> {
    if assignment.len() != graph.n {
        return Err(Error::DimensionMismatch {
            expected: graph.n,
            got: assignment.len(),
        });
    }
    Ok(graph
        .edges
        .iter()
        .filter(|&&(a, b)| assignment[a] != assignment[b])
        .count())
}

/// Exact maximum cut over the 2^(n-1) assignments with the last node fixed
/// to group 1 (complement symmetry makes this lossless). n <= 24.
pub fn brute_force_maxcut(graph: &Graph) -> Result<(usize, Vec<u8>)> {
    if graph.n > 24 {
        return Err(Error::InvalidArgument(format!(
            "brute force supports up to 24 nodes, got {}",
            graph.n
        )));
    }
    let free = graph.n - 1;
    let mut best = 0usize;
    let mut best_bits = vec![0u8; graph.n];
    for mask in 0..(1usize << free) {
        let mut bits = vec![0u8; graph.n];
        for (q, bit) in bits.iter_mut().enumerate().take(free) {
            *bit = ((mask >> (free - 1 - q)) & 1) as u8;
        }
        bits[graph.n - 1] = 1;
        let cut = cut_value(graph, &bits)?;
        if cut > best {
            best = cut;
            best_bits = bits;
        }
    }
    Ok((best, best_bits))
}

/// Result of one QAOA optimization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QaoaOutcome {
    pub gamma: f64,
    pub beta: f64,
    pub energy: f64,
    pub evaluations: usize,
    /// Counts sampled at the optimum.
    pub counts: std::collections::BTreeMap<String, u64>,
    pub shots: u64,
}

fn energy_from_counts(problem: &IsingProblem, counts: &Counts) -> f64 {
    let mut e = 0.0;
    for (bits, &count) in &counts.table {
        let bytes: Vec<u8> = bits.bytes().map(|b| (b == b'1') as u8).collect();
        e += problem.energy(&bytes) * count as f64;
    }
    e / counts.shots.max(1) as f64
}

/// Coarse 16x16 grid over (γ, β) ∈ [0,π)×[0,π/2) followed by Nelder-Mead
/// refinement with at most 100 extra evaluations.
pub fn optimize_qaoa(
    problem: &IsingProblem,
    shots_per_step: u64,
    backend: &Backend,
    seed: u64,
) -> Result<QaoaOutcome> {
    if shots_per_step == 0 {
        return Err(Error::InvalidArgument("shots must be >= 1".to_string()));
    }
    let mut evaluations = 0usize;
    let mut cache_seed = 0u64;
    let mut evaluate = |gamma: f64, beta: f64| -> Result<f64> {
        let circuit = qaoa_circuit(problem, gamma, beta);
        cache_seed += 1;
        let counts = backend.run(&circuit, shots_per_step, derive_seed(seed, cache_seed))?;
        evaluations += 1;
        Ok(energy_from_counts(problem, &counts))
    };

    // Grid stage.
    let grid = 16usize;
    let mut best = (0.0f64, 0.0f64, f64::INFINITY);
    for gi in 0..grid {
        for bi in 0..grid {
            let gamma = std::f64::consts::PI * gi as f64 / grid as f64;
            let beta = std::f64::consts::FRAC_PI_2 * bi as f64 / grid as f64;
            let e = evaluate(gamma, beta)?;
            if e < best.2 {
                best = (gamma, beta, e);
            }
        }
    }

    // Nelder-Mead refinement.
    let step = std::f64::consts::PI / grid as f64;
    let mut simplex = [([best.0, best.1], best.2),
        ([best.0 + step, best.1], evaluate(best.0 + step, best.1)?),
        ([best.0, best.1 + step / 2.0], evaluate(best.0, best.1 + step / 2.0)?)];
    let max_refine = 100usize;
    let mut used = 2usize;
    while used < max_refine {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let spread = (simplex[2].1 - simplex[0].1).abs();
        let size = (simplex[1].0[0] - simplex[0].0[0]).abs()
            + (simplex[1].0[1] - simplex[0].0[1]).abs()
            + (simplex[2].0[0] - simplex[0].0[0]).abs()
            + (simplex[2].0[1] - simplex[0].0[1]).abs();
        if spread < 1e-4 && size < 1e-3 {
            break;
        }
        let centroid = [
            (simplex[0].0[0] + simplex[1].0[0]) / 2.0,
            (simplex[0].0[1] + simplex[1].0[1]) / 2.0,
        ];
        let worst = simplex[2];
        let reflect = [
            centroid[0] + (centroid[0] - worst.0[0]),
            centroid[1] + (centroid[1] - worst.0[1]),
        ];
        let f_reflect = evaluate(reflect[0], reflect[1])?;
        used += 1;
        if f_reflect < simplex[0].1 && used < max_refine {
            let expand = [
                centroid[0] + 2.0 * (centroid[0] - worst.0[0]),
                centroid[1] + 2.0 * (centroid[1] - worst.0[1]),
            ];
            let f_expand = evaluate(expand[0], expand[1])?;
            used += 1;
            simplex[2] = if f_expand < f_reflect {
                (expand, f_expand)
            } else {
                (reflect, f_reflect)
            };
        } else if f_reflect < simplex[1].1 {
            simplex[2] = (reflect, f_reflect);
        } else if used < max_refine {
            let contract = [
                centroid[0] + 0.5 * (worst.0[0] - centroid[0]),
                centroid[1] + 0.5 * (worst.0[1] - centroid[1]),
            ];
            let f_contract = evaluate(contract[0], contract[1])?;
            used += 1;
            if f_contract < worst.1 {
                simplex[2] = (contract, f_contract);
            } else {
                // Shrink towards the best vertex.
                for k in 1..3 {
                    let shrunk = [
                        simplex[0].0[0] + 0.5 * (simplex[k].0[0] - simplex[0].0[0]),
                        simplex[0].0[1] + 0.5 * (simplex[k].0[1] - simplex[0].0[1]),
                    ];
                    if used >= max_refine {
                        break;
                    }
                    let f = evaluate(shrunk[0], shrunk[1])?;
                    used += 1;
                    simplex[k] = (shrunk, f);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let (gamma, beta) = (simplex[0].0[0], simplex[0].0[1]);

    // Final sample at the optimum.
    let circuit = qaoa_circuit(problem, gamma, beta);
    let counts = backend.run(&circuit, shots_per_step, derive_seed(seed, 0xF1_7A1))?;
    Ok(QaoaOutcome {
        gamma,
        beta,
        energy: energy_from_counts(problem, &counts),
        evaluations,
        counts: counts.table.clone(),
        shots: counts.shots,
    })
}

/// Average cut over sampled assignments, with the virtual node appended.
pub fn average_cut_from_counts(graph: &Graph, counts: &std::collections::BTreeMap<String, u64>) -> Result<f64> {
    let mut total = 0.0;
    let mut shots = 0u64;
    for (bits, &count) in counts {
        let mut assignment: Vec<u8> = bits.bytes().map(|b| (b == b'1') as u8).collect();
        assignment.push(1);
        total += cut_value(graph, &assignment)? as f64 * count as f64;
        shots += count;
    }
    Ok(total / shots.max(1) as f64)
}

/// Q-score entry for one graph size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QScoreEntry {
    pub n: usize,
    pub beta: f64,
    pub instances: usize,
    pub excluded_degenerate: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QScoreReport {
    pub entries: Vec<QScoreEntry>,
    pub shots_per_step: u64,
    pub instances_per_size: usize,
    pub edge_probability: f64,
    pub threshold: f64,
}

/// Q-score approximation ratio `β(n) = (C_avg − C_rand)/(C_best − C_rand)`
/// with `C_rand = |E|/2` and `C_best` from brute force, averaged over
/// random instances; sizes pass above 0.2.
pub fn qscore_run(
    sizes: &[usize],
    instances_per_size: usize,
    shots_per_step: u64,
    edge_probability: f64,
    backend: &Backend,
    seed: u64,
) -> Result<QScoreReport> {
    let mut entries = Vec::new();
    for &n in sizes {
        if n < 2 {
            return Err(Error::InvalidArgument(
                "Q-score sizes must be at least 2".to_string(),
            ));
        }
        let betas: Result<Vec<Option<f64>>> = (0..instances_per_size)
            .into_par_iter()
            .map(|inst| {
                let instance_seed = derive_seed(seed, (n * 1000 + inst) as u64);
                let graph = Graph::random(n, edge_probability, instance_seed);
                let problem = reduce_virtual_node(&graph)?;
                let outcome =
                    optimize_qaoa(&problem, shots_per_step, backend, derive_seed(instance_seed, 1))?;
                let c_avg = average_cut_from_counts(&graph, &outcome.counts)?;
                let c_rand = graph.edges.len() as f64 / 2.0;
                let (c_best, _) = brute_force_maxcut(&graph)?;
                if (c_best as f64 - c_rand).abs() < 1e-9 {
                    return Ok(None); // degenerate instance, excluded
                }
                Ok(Some((c_avg - c_rand) / (c_best as f64 - c_rand)))
            })
            .collect();
        let betas = betas?;
        let excluded = betas.iter().filter(|b| b.is_none()).count();
        let used: Vec<f64> = betas.into_iter().flatten().collect();
        let beta = used.iter().sum::<f64>() / used.len().max(1) as f64;
        entries.push(QScoreEntry {
            n,
            beta,
            instances: used.len(),
            excluded_degenerate: excluded,
            pass: beta > 0.2,
        });
    }
    Ok(QScoreReport {
        entries,
        shots_per_step,
        instances_per_size,
        edge_probability,
        threshold: 0.2,
    })
}

pub fn qscore_to_csv(report: &QScoreReport) -> String {
    let mut out = String::from("n,beta,instances,excluded,pass\n");
    for e in &report.entries {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.n, e.beta, e.instances, e.excluded_degenerate, e.pass
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn complete_graph(n: usize) -> Graph {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                edges.push((a, b));
            }
        }
        Graph::new(n, edges).unwrap()
    }

    #[test]
    fn cut_values() {
        let k2 = complete_graph(2);
        assert_eq!(cut_value(&k2, &[0, 0]).unwrap(), 0);
        assert_eq!(cut_value(&k2, &[0, 1]).unwrap(), 1);
    }

    #[test]
    fn brute_force_known_graphs() {
        assert_eq!(brute_force_maxcut(&complete_graph(2)).unwrap().0, 1);
        assert_eq!(brute_force_maxcut(&complete_graph(4)).unwrap().0, 4);
        let c5 = Graph::new(5, vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        assert_eq!(brute_force_maxcut(&c5).unwrap().0, 4);
    }

    #[test]
    fn virtual_node_reduction_examples() {
        // Two nodes, one edge: single spin with field -1.
        let k2 = complete_graph(2);
        let p = reduce_virtual_node(&k2).unwrap();
        assert_eq!(p.num_spins, 1);
        assert!(p.couplings.is_empty());
        assert_eq!(p.fields, vec![-1.0]);

        // Star with the center as the last node: pure fields.
        let star = Graph::new(5, vec![(0, 4), (1, 4), (2, 4), (3, 4)]).unwrap();
        let p = reduce_virtual_node(&star).unwrap();
        assert_eq!(p.num_spins, 4);
        assert!(p.couplings.is_empty());
        assert_eq!(p.fields, vec![-1.0; 4]);

        // Six-node instance fits five spins.
        let g6 = Graph::random(6, 0.5, 99);
        let p = reduce_virtual_node(&g6).unwrap();
        assert_eq!(p.num_spins, 5);
    }

    #[test]
    fn energy_cut_duality_holds_exhaustively() {
        // cut = (|E| - sum_edges z_i z_j) / 2 for every assignment; checked
        // on random graphs up to 10 nodes (coupling part only).
        for trial in 0..10u64 {
            let n = 4 + (trial as usize % 7);
            let graph = Graph::random(n, 0.5, 1000 + trial);
            for mask in 0..(1usize << n) {
                let bits: Vec<u8> = (0..n).map(|q| ((mask >> q) & 1) as u8).collect();
                let cut = cut_value(&graph, &bits).unwrap();
                let zz: f64 = graph
                    .edges
                    .iter()
                    .map(|&(a, b)| {
                        let za = if bits[a] == 0 { 1.0 } else { -1.0 };
                        let zb = if bits[b] == 0 { 1.0 } else { -1.0 };
                        za * zb
                    })
                    .sum();
                let expected = (graph.edges.len() as f64 - zz) / 2.0;
                assert!((cut as f64 - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn virtual_node_reduction_is_sound() {
        // min over (n-1)-spin H' equals min over n-spin H with spin_n = -1.
        for trial in 0..50u64 {
            let n = 3 + (trial as usize % 8);
            let graph = Graph::random(n, 0.5, 2000 + trial);
            let problem = reduce_virtual_node(&graph).unwrap();
            let m = problem.num_spins;
            let mut min_reduced = f64::INFINITY;
            for mask in 0..(1usize << m) {
                let bits: Vec<u8> = (0..m).map(|q| ((mask >> q) & 1) as u8).collect();
                min_reduced = min_reduced.min(problem.energy(&bits));
            }
            // Full Hamiltonian with the last node fixed to |1>.
            let mut min_full = f64::INFINITY;
            for mask in 0..(1usize << m) {
                let mut bits: Vec<u8> = (0..m).map(|q| ((mask >> q) & 1) as u8).collect();
                bits.push(1);
                let mut e = 0.0;
                for &(a, b) in &graph.edges {
                    let za = if bits[a] == 0 { 1.0 } else { -1.0 };
                    let zb = if bits[b] == 0 { 1.0 } else { -1.0 };
                    e += za * zb;
                }
                min_full = min_full.min(e);
            }
            assert!((min_reduced - min_full).abs() < 1e-9, "trial {trial}");
        }
    }

    #[test]
    fn qaoa_zero_angles_is_uniform() {
        let graph = complete_graph(4);
        let problem = reduce_virtual_node(&graph).unwrap();
        let circuit = qaoa_circuit(&problem, 0.0, 0.0);
        let counts = Backend::Ideal.run(&circuit, 64_000, 3).unwrap();
        for idx in 0..(1usize << problem.num_spins) {
            let bits = qstar_core::sim::format_bits(idx, problem.num_spins);
            let f = counts.table.get(&bits).copied().unwrap_or(0) as f64 / 64_000.0;
            assert!((f - 0.125).abs() < 0.02, "{bits}: {f}");
        }
    }

    #[test]
    fn single_spin_field_problem_concentrates() {
        // One spin with field -1: H = -Z, minimized by spin +1 (bit 0).
        let problem = IsingProblem {
            num_spins: 1,
            couplings: vec![],
            fields: vec![-1.0],
        };
        let outcome = optimize_qaoa(&problem, 4000, &Backend::Ideal, 17).unwrap();
        let zeros = outcome.counts.get("0").copied().unwrap_or(0) as f64;
        assert!(
            zeros / outcome.shots as f64 >= 0.9,
            "distribution should concentrate on the optimal value, got {}",
            zeros / outcome.shots as f64
        );
    }

    #[test]
    fn triangle_plus_virtual_qaoa_finds_cut_two() {
        // Triangle 0-1-2 with node 3 as the virtual node: brute force over
        // the 8 assignments gives a maximum cut of 2.
        let graph = Graph::new(4, vec![(0, 1), (1, 2), (0, 2)]).unwrap();
        let (best, _) = brute_force_maxcut(&graph).unwrap();
        assert_eq!(best, 2);
        let problem = reduce_virtual_node(&graph).unwrap();
        let outcome = optimize_qaoa(&problem, 4000, &Backend::Ideal, 23).unwrap();
        let best_bits = outcome
            .counts
            .iter()
            .max_by_key(|(_, &c)| c)
            .map(|(k, _)| k.clone())
            .unwrap();
        let mut assignment: Vec<u8> = best_bits.bytes().map(|b| (b == b'1') as u8).collect();
        assignment.push(1);
        let cut = cut_value(&graph, &assignment).unwrap();
        assert_eq!(cut, best, "most probable bitstring should achieve the maximum cut");
    }

    #[test]
    fn edge_list_parsing_is_one_based() {
        let g = Graph::from_edge_list("1 2\n2 3\n# comment\n1 3\n").unwrap();
        assert_eq!(g.n, 3);
        assert_eq!(g.edges.len(), 3);
        assert!(Graph::from_edge_list("0 1\n").is_err());
    }
}
