//! Periodic graphs as quotient multigraphs with integer edge labels.
//!
//! A `d`-periodic graph is stored through its finite quotient: `n` vertex
//! orbits and `m` edge orbits, each edge `(i, j, l)` standing for the bar from
//! `v_i` to `v_j + l` with `l ∈ Z^d`. The edge order is significant: it fixes
//! the coordinate order of every length vector and rigidity matrix row.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::IntMatrix;

pub const MAX_DIM: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LabeledEdge {
    pub tail: usize,
    pub head: usize,
    pub label: Vec<i64>,
}

impl LabeledEdge {
    pub fn new(tail: usize, head: usize, label: Vec<i64>) -> Self {
        Self { tail, head, label }
    }

    pub fn is_loop(&self) -> bool {
        self.tail == self.head
    }

    /// The same bar traversed backwards.
    pub fn reversed(&self) -> Self {
        Self { tail: self.head, head: self.tail, label: self.label.iter().map(|v| -v).collect() }
    }

    /// Representative of `{self, self.reversed()}`; equal for both orientations.
    pub fn canonical(&self) -> Self {
        let rev = self.reversed();
        if rev < *self { rev } else { self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct GraphDocument {
    d: usize,
    n: usize,
    edges: Vec<LabeledEdge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    names: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodicGraph {
    dim: usize,
    vertex_count: usize,
    edges: Vec<LabeledEdge>,
    names: Option<Vec<String>>,
}

/// Outcome of [`PeriodicGraph::validate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub connected: bool,
    pub label_lattice_rank: usize,
    /// Index of the cycle-label lattice in `Z^d`; `None` when infinite.
    pub label_lattice_index: Option<u64>,
    pub messages: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.connected && self.label_lattice_index == Some(1)
    }
}

/// Deterministic spanning tree of the quotient graph.
#[derive(Clone, Debug)]
pub struct SpanningTree {
    /// Edge indices in the tree, in increasing order.
    pub tree_edges: Vec<usize>,
    /// Non-tree edge indices, in increasing order.
    pub cotree_edges: Vec<usize>,
    /// Label sum along the tree path from vertex 0 to each vertex.
    pub potentials: Vec<Vec<i64>>,
    /// Tree edges ordered so that each one attaches a new vertex, starting from vertex 0.
    pub attach_order: Vec<usize>,
}

impl SpanningTree {
    /// Label of the fundamental cycle closed by edge `e`.
    pub fn cycle_label(&self, e: &LabeledEdge) -> Vec<i64> {
        (0..e.label.len())
            .map(|k| self.potentials[e.tail][k] + e.label[k] - self.potentials[e.head][k])
            .collect()
    }
}

impl PeriodicGraph {
    /// Builds a graph, checking the structural invariants that do not depend on
    /// connectivity (those are reported by [`validate`](Self::validate)).
    pub fn new(
        dim: usize,
        vertex_count: usize,
        edges: Vec<LabeledEdge>,
        names: Option<Vec<String>>,
    ) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGraph(format!("dimension {dim} outside [1, {MAX_DIM}]")));
        }
        if vertex_count == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex orbit".into()));
        }
        if edges.is_empty() {
            return Err(Error::InvalidGraph("graph needs at least one edge orbit".into()));
        }
        for (k, e) in edges.iter().enumerate() {
            if e.tail >= vertex_count || e.head >= vertex_count {
                return Err(Error::InvalidGraph(format!(
                    "edge {k}: vertex index out of range 0..{vertex_count}"
                )));
            }
            if e.label.len() != dim {
                return Err(Error::InvalidGraph(format!(
                    "edge {k}: label has {} entries, expected {dim}",
                    e.label.len()
                )));
            }
            if e.is_loop() && e.label.iter().all(|&v| v == 0) {
                return Err(Error::InvalidGraph(format!("edge {k}: loop with zero label")));
            }
        }
        if let Some(names) = &names {
            if names.len() != vertex_count {
                return Err(Error::InvalidGraph(format!(
                    "{} names given for {vertex_count} vertex orbits",
                    names.len()
                )));
            }
        }
        Ok(Self { dim, vertex_count, edges, names })
    }

    pub fn from_json(source: &str) -> Result<Self> {
        let doc: GraphDocument = serde_json::from_str(source)?;
        Self::new(doc.d, doc.n, doc.edges, doc.names).map_err(|e| match e {
            Error::InvalidGraph(msg) => Error::Parse(msg),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        let doc = GraphDocument {
            d: self.dim,
            n: self.vertex_count,
            edges: self.edges.clone(),
            names: self.names.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("graph serializes")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[LabeledEdge] {
        &self.edges
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Dimension of the placement parameter space, `d(n-1) + d(d+1)/2`.
    pub fn parameter_dim(&self) -> usize {
        let d = self.dim;
        d * (self.vertex_count - 1) + d * (d + 1) / 2
    }

    pub fn loop_count(&self) -> usize {
        self.edges.iter().filter(|e| e.is_loop()).count()
    }

    /// Spanning tree built by scanning edges in index order (lowest index wins).
    pub fn spanning_tree(&self) -> Result<SpanningTree> {
        let n = self.vertex_count;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut tree_edges = Vec::new();
        let mut cotree_edges = Vec::new();
        for (k, e) in self.edges.iter().enumerate() {
            let (a, b) = (find(&mut parent, e.tail), find(&mut parent, e.head));
            if a == b {
                cotree_edges.push(k);
            } else {
                parent[a] = b;
                tree_edges.push(k);
            }
        }
        if tree_edges.len() + 1 != n {
            return Err(Error::Disconnected);
        }
        let mut potentials = vec![vec![0; self.dim]; n];
        let mut seen = vec![false; n];
        let mut attach_order = Vec::with_capacity(tree_edges.len());
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            for &k in &tree_edges {
                let e = &self.edges[k];
                let (w, sign) = if e.tail == v {
                    (e.head, 1)
                } else if e.head == v {
                    (e.tail, -1)
                } else {
                    continue;
                };
                if seen[w] {
                    continue;
                }
                seen[w] = true;
                potentials[w] =
                    (0..self.dim).map(|i| potentials[v][i] + sign * e.label[i]).collect();
                attach_order.push(k);
                queue.push_back(w);
            }
        }
        Ok(SpanningTree { tree_edges, cotree_edges, potentials, attach_order })
    }

    pub fn is_quotient_connected(&self) -> bool {
        self.spanning_tree().is_ok()
    }

    /// `d × (m - n + 1)` matrix of fundamental cycle labels.
    pub fn cycle_label_matrix(&self) -> Result<IntMatrix> {
        let tree = self.spanning_tree()?;
        let columns: Vec<Vec<i64>> =
            tree.cotree_edges.iter().map(|&k| tree.cycle_label(&self.edges[k])).collect();
        Ok(IntMatrix::from_columns(self.dim, &columns))
    }

    pub fn validate(&self) -> ValidationReport {
        let mut messages = Vec::new();
        let Ok(cycles) = self.cycle_label_matrix() else {
            messages.push("quotient multigraph is disconnected".to_string());
            return ValidationReport {
                connected: false,
                label_lattice_rank: 0,
                label_lattice_index: None,
                messages,
            };
        };
        let invariants = cycles.smith_invariants();
        let rank = invariants.len();
        let index = if rank == self.dim {
            Some(invariants.iter().map(|&v| v as u64).product::<u64>())
        } else {
            None
        };
        match index {
            Some(1) => {}
            Some(k) => messages.push(format!(
                "cycle labels span a sublattice of index {k}: the periodic graph is disconnected"
            )),
            None => messages.push(format!(
                "cycle labels have rank {rank} < {}: the periodic graph is disconnected",
                self.dim
            )),
        }
        ValidationReport { connected: true, label_lattice_rank: rank, label_lattice_index: index, messages }
    }

    /// Errors unless [`validate`](Self::validate) passes.
    pub fn require_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else if !report.connected {
            Err(Error::Disconnected)
        } else {
            Err(Error::InvalidGraph(report.messages.join("; ")))
        }
    }

    /// Positions in the edge list of the bar `e`, matching either orientation.
    pub fn find_edges(&self, e: &LabeledEdge) -> Vec<usize> {
        let key = e.canonical();
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, f)| f.canonical() == key)
            .map(|(k, _)| k)
            .collect()
    }
}

/// Small catalogue of standard nets.
pub mod nets {
    use super::{LabeledEdge, PeriodicGraph};

    fn e(tail: usize, head: usize, label: &[i64]) -> LabeledEdge {
        LabeledEdge::new(tail, head, label.to_vec())
    }

    /// Square lattice: one vertex orbit, loops along both axes.
    pub fn square() -> PeriodicGraph {
        PeriodicGraph::new(2, 1, vec![e(0, 0, &[1, 0]), e(0, 0, &[0, 1])], None).unwrap()
    }

    /// Square lattice with one diagonal bar per cell.
    pub fn square_with_diagonal() -> PeriodicGraph {
        PeriodicGraph::new(2, 1, vec![e(0, 0, &[1, 0]), e(0, 0, &[0, 1]), e(0, 0, &[1, 1])], None)
            .unwrap()
    }

    pub fn honeycomb() -> PeriodicGraph {
        PeriodicGraph::new(2, 2, vec![e(0, 1, &[0, 0]), e(0, 1, &[1, 0]), e(0, 1, &[0, 1])], None)
            .unwrap()
    }

    /// Primitive cubic net.
    pub fn cubic() -> PeriodicGraph {
        PeriodicGraph::new(
            3,
            1,
            vec![e(0, 0, &[1, 0, 0]), e(0, 0, &[0, 1, 0]), e(0, 0, &[0, 0, 1])],
            None,
        )
        .unwrap()
    }

    /// Kagome net: three vertex orbits, six edge orbits.
    pub fn kagome() -> PeriodicGraph {
        PeriodicGraph::new(
            2,
            3,
            vec![
                e(0, 1, &[0, 0]),
                e(0, 2, &[0, 0]),
                e(1, 2, &[0, 0]),
                e(0, 1, &[-1, 0]),
                e(0, 2, &[0, -1]),
                e(1, 2, &[1, -1]),
            ],
            None,
        )
        .unwrap()
    }
}
