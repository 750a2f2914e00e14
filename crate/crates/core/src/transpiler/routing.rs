//! Qubit placement and SWAP routing on a coupling map.

use std::collections::{BTreeSet, VecDeque};

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};

/// Hardware coupling map. The default device is a five-qubit star whose
/// center is qubit index 2 (qubit 3 in 1-based labels).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    pub num_qubits: usize,
    pub edges: BTreeSet<(usize, usize)>,
    pub center: Option<usize>,
}

impl Topology {
    pub fn new(num_qubits: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= num_qubits || b >= num_qubits {
                return Err(Error::QubitOutOfRange {
                    index: a.max(b),
                    num_qubits,
                });
            }
            if a == b {
                return Err(Error::DuplicateQubit(a));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Topology {
            num_qubits,
            edges: set,
            center: None,
        })
    }

    /// Star topology: `center` connected to every other qubit.
    pub fn star(num_qubits: usize, center: usize) -> Self {
        let edges = (0..num_qubits)
            .filter(|&q| q != center)
            .map(|q| (center.min(q), center.max(q)));
        let mut topo = Topology::new(num_qubits, edges).expect("valid star");
        topo.center = Some(center);
        topo
    }

    /// The five-qubit device star with the center at index 2.
    pub fn default_star5() -> Self {
        Topology::star(5, 2)
    }

    pub fn is_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn neighbors(&self, q: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == q {
                    Some(b)
                } else if b == q {
                    Some(a)
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn is_connected(&self) -> bool {
        if self.num_qubits == 0 {
            return true;
        }
        let mut seen = vec![false; self.num_qubits];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(q) = queue.pop_front() {
            for n in self.neighbors(q) {
                if !seen[n] {
                    seen[n] = true;
                    count += 1;
                    queue.push_back(n);
                }
            }
        }
        count == self.num_qubits
    }

    /// Shortest path between two physical qubits (BFS).
    pub fn shortest_path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        if from == to {
            return Some(vec![from]);
        }
        let mut prev = vec![usize::MAX; self.num_qubits];
        let mut queue = VecDeque::from([from]);
        prev[from] = from;
        while let Some(q) = queue.pop_front() {
            for n in self.neighbors(q) {
                if prev[n] == usize::MAX {
                    prev[n] = q;
                    if n == to {
                        let mut path = vec![to];
                        let mut cur = to;
                        while cur != from {
                            cur = prev[cur];
                            path.push(cur);
                        }
                        path.reverse();
                        return Some(path);
                    }
                    queue.push_back(n);
                }
            }
        }
        None
    }
}

/// Routing result: a physical-index circuit whose two-qubit gates all act
/// on topology edges, with the layout maps that relate logical to physical
/// qubits before and after the inserted SWAPs.
#[derive(Debug, Clone)]
pub struct Routed {
    pub circuit: Circuit,
    pub initial_layout: Vec<usize>,
    pub final_layout: Vec<usize>,
}

/// Greedy placement: the logical qubit participating in the most two-qubit
/// gates sits on the star center; everything else keeps index order.
fn initial_layout(circuit: &Circuit, topology: &Topology) -> Vec<usize> {
    let n = topology.num_qubits;
    let mut layout: Vec<usize> = (0..n).collect();
    let Some(center) = topology.center else {
        return layout;
    };
    let mut degree = vec![0usize; n];
    for gate in &circuit.gates {
        if gate.is_two_qubit() {
            for q in gate.qubits() {
                degree[q] += 1;
            }
        }
    }
    let Some((busiest, &max_degree)) = degree
        .iter()
        .enumerate()
        .max_by_key(|&(i, &d)| (d, std::cmp::Reverse(i)))
    else {
        return layout;
    };
    if max_degree == 0 {
        return layout;
    }
    // Place `busiest` at the center; fill the rest in index order.
    let mut physical: Vec<usize> = (0..n).filter(|&p| p != center).collect();
    layout = vec![usize::MAX; n];
    layout[busiest] = center;
    for l in (0..n).filter(|&l| l != busiest) {
        layout[l] = physical.remove(0);
    }
    layout
}

/// Route `circuit` onto `topology`, inserting SWAPs (as CNOT triples) along
/// shortest paths so that every two-qubit gate acts on an edge. On the star
/// this reduces to the swap-via-center rule.
pub fn route(circuit: &Circuit, topology: &Topology) -> Result<Routed> {
    let n_log = circuit.num_qubits;
    let n_phys = topology.num_qubits;
    if n_log > n_phys {
        return Err(Error::InvalidArgument(format!(
            "circuit has {n_log} qubits but the topology only {n_phys}"
        )));
    }
    let needs_routing = circuit.gates.iter().any(Gate::is_two_qubit);
    if needs_routing && !topology.is_connected() {
        return Err(Error::DisconnectedTopology);
    }

    let init = initial_layout(circuit, topology);
    let mut pos = init.clone(); // logical (padded) -> physical
    let mut occupant = vec![0usize; n_phys]; // physical -> logical
    for (l, &p) in pos.iter().enumerate() {
        occupant[p] = l;
    }

    let mut out = Circuit::new(n_phys);
    out.metadata = circuit.metadata.clone();

    let emit_swap = |out: &mut Circuit,
                         pos: &mut Vec<usize>,
                         occupant: &mut Vec<usize>,
                         p: usize,
                         q: usize|
     -> Result<()> {
        out.push(Gate::Cnot {
            control: p,
            target: q,
        })?;
        out.push(Gate::Cnot {
            control: q,
            target: p,
        })?;
        out.push(Gate::Cnot {
            control: p,
            target: q,
        })?;
        let (lp, lq) = (occupant[p], occupant[q]);
        occupant.swap(p, q);
        pos[lp] = q;
        pos[lq] = p;
        Ok(())
    };

    for gate in &circuit.gates {
        match gate {
            g if g.is_single_qubit() => {
                let q = g.qubits()[0];
                out.push(remap_gate(g, &[pos[q]]))?;
            }
            Gate::Measure { qubits } => {
                let mapped: Vec<usize> = qubits.iter().map(|&q| pos[q]).collect();
                out.push(Gate::Measure { qubits: mapped })?;
            }
            Gate::Barrier => {
                out.push(Gate::Barrier)?;
            }
            g if g.is_two_qubit() => {
                let qs = g.qubits();
                let (mut pa, pb) = (pos[qs[0]], pos[qs[1]]);
                if !topology.is_edge(pa, pb) {
                    let path = topology
                        .shortest_path(pa, pb)
                        .ok_or(Error::DisconnectedTopology)?;
                    // Walk the first operand down the path until adjacent.
                    for k in 0..path.len().saturating_sub(2) {
                        emit_swap(&mut out, &mut pos, &mut occupant, path[k], path[k + 1])?;
                        pa = path[k + 1];
                    }
                }
                out.push(remap_gate(g, &[pa, pb]))?;
            }
            other => {
                return Err(Error::InvalidArgument(format!(
                    "cannot route gate `{}`",
                    other.name()
                )))
            }
        }
    }

    Ok(Routed {
        circuit: out,
        initial_layout: init,
        final_layout: pos,
    })
}

fn remap_gate(gate: &Gate, mapped: &[usize]) -> Gate {
    match gate {
        Gate::R { theta, phi, .. } => Gate::R {
            qubit: mapped[0],
            theta: *theta,
            phi: *phi,
        },
        Gate::Rz { lambda, .. } => Gate::Rz {
            qubit: mapped[0],
            lambda: *lambda,
        },
        Gate::Ry { theta, .. } => Gate::Ry {
            qubit: mapped[0],
            theta: *theta,
        },
        Gate::H { .. } => Gate::H { qubit: mapped[0] },
        Gate::S { .. } => Gate::S { qubit: mapped[0] },
        Gate::Sdg { .. } => Gate::Sdg { qubit: mapped[0] },
        Gate::X { .. } => Gate::X { qubit: mapped[0] },
        Gate::Y { .. } => Gate::Y { qubit: mapped[0] },
        Gate::Z { .. } => Gate::Z { qubit: mapped[0] },
        Gate::U2 { matrix, .. } => Gate::U2 {
            qubit: mapped[0],
            matrix: matrix.clone(),
        },
        Gate::Cz { .. } => Gate::Cz {
            a: mapped[0],
            b: mapped[1],
        },
        Gate::Cnot { .. } => Gate::Cnot {
            control: mapped[0],
            target: mapped[1],
        },
        Gate::U4 { matrix, .. } => Gate::U4 {
            a: mapped[0],
            b: mapped[1],
            matrix: matrix.clone(),
        },
        Gate::Measure { .. } | Gate::Barrier => unreachable!("handled by caller"),
    }
}
