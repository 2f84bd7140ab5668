//! Communication topologies and the gossip matrix built from them.
//!
//! The network is an undirected, connected graph on `n` nodes. Information
//! mixes through multiplication by a gossip matrix `W` that is symmetric,
//! positive semidefinite, shares its sparsity pattern with the graph, and
//! whose kernel is exactly the consensus line (constant vectors). The
//! unnormalized Laplacian `W = D - Adj` satisfies all of that for a
//! connected graph, so it is the gossip matrix used here.
//!
//! Spectral quantities of `W` drive the communication schedule downstream:
//! the extreme nonzero eigenvalues set the Chebyshev window and the number
//! of gossip rounds per compressed multiplication.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Retry budget for rejection sampling of connected random graphs.
const MAX_SAMPLING_ATTEMPTS: usize = 1000;

/// Eigenvalues below `PSD_TOL_REL * lambda_max` count as zero when the
/// kernel of the gossip matrix is identified.
pub const PSD_TOL_REL: f64 = 1e-9;

/// Supported communication topologies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Path,
    Ring,
    Star,
    Complete,
    ErdosRenyi,
}

/// An undirected graph with a validated, sorted edge list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    connected: bool,
}

impl Graph {
    /// Build a graph from an edge list.
    ///
    /// Edges may arrive in any order and orientation; they are normalized
    /// to `(i, j)` with `i < j` and sorted. Self-loops, duplicates, and
    /// out-of-range endpoints are rejected.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParam("graph needs at least one node".into()));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b {
                return Err(Error::InvalidParam(format!("self-loop at node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::InvalidParam(format!(
                    "edge ({a}, {b}) out of range for {n} nodes"
                )));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        if normalized.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParam("duplicate edge".into()));
        }

        let mut adjacency = vec![Vec::new(); n];
        for &(i, j) in &normalized {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }

        let connected = is_connected(n, &normalized);
        Ok(Graph {
            n,
            edges: normalized,
            adjacency,
            connected,
        })
    }

    /// Number of nodes.
    #[must_use]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Sorted edge list, each edge as `(i, j)` with `i < j`.
    #[must_use]
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Neighbors of `node`, ascending.
    #[must_use]
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    /// Whether `i` and `j` share an edge.
    #[must_use]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    /// Whether the graph is connected.
    #[must_use]
    pub fn is_connected(&self) -> bool {
        self.connected
    }

    /// Node degrees.
    #[must_use]
    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }
}

fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    // Union-find with path halving; n is small here.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    let mut components = n;
    for &(i, j) in edges {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri] = rj;
            components -= 1;
        }
    }
    components == 1
}

/// Construct a graph of the requested topology.
///
/// `edge_prob` is consulted only for [`Topology::ErdosRenyi`], where each
/// pair becomes an edge independently with that probability and sampling
/// retries with a derived seed until the draw is connected. The retry
/// budget is 1000 attempts; identical inputs always produce the identical
/// edge set.
pub fn make_graph(
    topology: Topology,
    n: usize,
    edge_prob: Option<f64>,
    seed: u64,
) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParam(format!(
            "topology {topology:?} needs at least 2 nodes, got {n}"
        )));
    }
    match topology {
        Topology::Path => {
            let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
            Graph::new(n, &edges)
        }
        Topology::Ring => {
            if n < 3 {
                return Err(Error::InvalidParam(
                    "a ring needs at least 3 nodes".into(),
                ));
            }
            let mut edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
            edges.push((0, n - 1));
            Graph::new(n, &edges)
        }
        Topology::Star => {
            let edges: Vec<_> = (1..n).map(|i| (0, i)).collect();
            Graph::new(n, &edges)
        }
        Topology::Complete => {
            let mut edges = Vec::with_capacity(n * (n - 1) / 2);
            for i in 0..n {
                for j in i + 1..n {
                    edges.push((i, j));
                }
            }
            Graph::new(n, &edges)
        }
        Topology::ErdosRenyi => {
            let p = edge_prob.ok_or_else(|| {
                Error::InvalidParam("erdos_renyi requires an edge probability".into())
            })?;
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidParam(format!(
                    "edge probability must lie in (0, 1], got {p}"
                )));
            }
            for attempt in 0..MAX_SAMPLING_ATTEMPTS {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
                let mut edges = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        if rng.gen_bool(p) {
                            edges.push((i, j));
                        }
                    }
                }
                let graph = Graph::new(n, &edges)?;
                if graph.is_connected() {
                    return Ok(graph);
                }
            }
            Err(Error::UnconnectableGraph {
                attempts: MAX_SAMPLING_ATTEMPTS,
                edge_prob: p,
            })
        }
    }
}

/// The Laplacian gossip matrix of a connected graph, together with its
/// certified spectral quantities.
#[derive(Clone, Debug)]
pub struct GossipMatrix {
    w: DMatrix<f64>,
    lambda_max: f64,
    lambda_min_plus: f64,
}

impl GossipMatrix {
    /// The dense matrix.
    #[must_use]
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// Entry `(i, j)`.
    #[must_use]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.w[(i, j)]
    }

    /// Number of nodes.
    #[must_use]
    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    /// Largest eigenvalue.
    #[must_use]
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Smallest nonzero eigenvalue.
    #[must_use]
    pub fn lambda_min_plus(&self) -> f64 {
        self.lambda_min_plus
    }

    /// Upper bound on the squared spectrum: `lambda_max^2`.
    #[must_use]
    pub fn l_w(&self) -> f64 {
        self.lambda_max * self.lambda_max
    }

    /// Lower bound on the squared nonzero spectrum: `lambda_min_plus^2`.
    #[must_use]
    pub fn mu_w(&self) -> f64 {
        self.lambda_min_plus * self.lambda_min_plus
    }

    /// Spectral condition number `lambda_max / lambda_min_plus` of the
    /// restriction to the non-consensus subspace.
    #[must_use]
    pub fn kappa_w(&self) -> f64 {
        self.lambda_max / self.lambda_min_plus
    }
}

/// Build the unnormalized Laplacian `W = D - Adj` of a connected graph and
/// certify its gossip properties.
///
/// The certification runs a dense symmetric eigensolve and checks that the
/// spectrum is nonnegative (up to `PSD_TOL_REL` relative to the largest
/// eigenvalue) and that exactly one eigenvalue is zero at that tolerance.
/// A second zero eigenvalue means the graph is disconnected.
pub fn laplacian_gossip(graph: &Graph) -> Result<GossipMatrix> {
    if !graph.is_connected() {
        return Err(Error::NotConnected(format!(
            "{} nodes, {} edges",
            graph.n(),
            graph.edges().len()
        )));
    }
    let n = graph.n();
    let mut w = DMatrix::zeros(n, n);
    for &(i, j) in graph.edges() {
        w[(i, j)] = -1.0;
        w[(j, i)] = -1.0;
        w[(i, i)] += 1.0;
        w[(j, j)] += 1.0;
    }

    let eigenvalues = symmetric_eigenvalues_sorted(&w);
    let lambda_max = eigenvalues[n - 1];
    if lambda_max <= 0.0 {
        return Err(Error::NotConnected("graph has no edges".into()));
    }
    let zero_tol = PSD_TOL_REL * lambda_max;
    if eigenvalues[0] < -zero_tol {
        return Err(Error::BoundViolated {
            context: "gossip matrix must be positive semidefinite".into(),
            value: eigenvalues[0],
            bound: -zero_tol,
        });
    }
    let kernel_dim = eigenvalues.iter().filter(|&&ev| ev <= zero_tol).count();
    if kernel_dim != 1 {
        return Err(Error::NotConnected(format!(
            "Laplacian kernel has dimension {kernel_dim}"
        )));
    }
    let lambda_min_plus = eigenvalues
        .iter()
        .copied()
        .find(|&ev| ev > zero_tol)
        .expect("lambda_max > 0 guarantees a nonzero eigenvalue");

    Ok(GossipMatrix {
        w,
        lambda_max,
        lambda_min_plus,
    })
}

/// Eigenvalues of a symmetric matrix, ascending.
pub(crate) fn symmetric_eigenvalues_sorted(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalues are finite"));
    ev
}
