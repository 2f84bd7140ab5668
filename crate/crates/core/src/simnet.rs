//! Simulated compute network.
//!
//! Each node owns a store of named vector blocks. All progress happens
//! through synchronous rounds:
//!
//! * a gossip round mixes one named block across graph edges with the
//!   gossip matrix's weights;
//! * a multiplication round applies each node's constraint block (or its
//!   transpose) to one of that node's own blocks;
//! * a gradient round evaluates each node's cost gradient on one of that
//!   node's own blocks.
//!
//! The round counters are the single source of truth for cost
//! accounting: every gossip round is one unit of communication, every
//! multiplication round one unit of local matrix work, every gradient
//! round one gradient evaluation per node.
//!
//! Cross-node reads are funneled through one checkpoint that knows the
//! graph. In [`LocalityMode::Enforce`] a read from a non-neighbor fails;
//! in [`LocalityMode::AuditOnly`] it succeeds but is recorded, which is
//! useful for diagnosing where an algorithm would break locality.
//!
//! Block names starting with `__` are reserved for the `*_apply`
//! convenience wrappers.

use std::collections::BTreeMap;
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graphs::{laplacian_gossip, GossipMatrix, Graph};
use crate::linalg::BlockVec;
use crate::problems::ProblemInstance;

/// Node count at which rounds switch to parallel evaluation.
const PAR_THRESHOLD: usize = 64;

/// How cross-node reads are policed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalityMode {
    /// A read from a non-neighbor is an error.
    Enforce,
    /// A read from a non-neighbor succeeds but is recorded.
    AuditOnly,
}

/// Which way a multiplication round applies the constraint blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatDirection {
    /// `x_i -> A_i x_i`: variable space into constraint space.
    Forward,
    /// `q_i -> A_i' q_i`: constraint space back into variable space.
    Transpose,
}

/// Cumulative cost counters of a network.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RoundCounters {
    /// Gradient rounds (one gradient evaluation per node each).
    pub grad_calls: u64,
    /// Constraint-block multiplication rounds.
    pub matmul_rounds: u64,
    /// Gossip communication rounds.
    pub comm_rounds: u64,
}

/// The simulated network: a graph, its gossip matrix, per-node block
/// stores, and cost counters.
#[derive(Debug)]
pub struct SimNet {
    graph: Graph,
    gossip: GossipMatrix,
    /// Working copy of the gossip weights used by rounds; fault
    /// injection may perturb it while `gossip` stays pristine.
    w: DMatrix<f64>,
    mode: LocalityMode,
    store: Vec<BTreeMap<String, DVector<f64>>>,
    counters: RoundCounters,
    audit_log: Mutex<Vec<(usize, usize)>>,
}

impl SimNet {
    /// Build a network over `graph`, deriving the gossip matrix from its
    /// unnormalized Laplacian.
    pub fn new(graph: &Graph, mode: LocalityMode) -> Result<Self> {
        let gossip = laplacian_gossip(graph)?;
        let w = gossip.matrix().clone();
        Ok(SimNet {
            graph: graph.clone(),
            gossip,
            w,
            mode,
            store: vec![BTreeMap::new(); graph.n()],
            counters: RoundCounters::default(),
            audit_log: Mutex::new(Vec::new()),
        })
    }

    /// Number of nodes.
    #[must_use]
    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// The communication graph.
    #[must_use]
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// The certified gossip matrix (spectrum included).
    #[must_use]
    pub fn gossip(&self) -> &GossipMatrix {
        &self.gossip
    }

    /// Cumulative cost counters.
    #[must_use]
    pub fn counters(&self) -> RoundCounters {
        self.counters
    }

    /// Reset all cost counters to zero.
    pub fn reset_counters(&mut self) {
        self.counters = RoundCounters::default();
    }

    /// Non-neighbor reads recorded in [`LocalityMode::AuditOnly`], as
    /// `(reader, owner)` pairs.
    #[must_use]
    pub fn audit_violations(&self) -> Vec<(usize, usize)> {
        self.audit_log.lock().expect("audit log poisoned").clone()
    }

    /// Store a block under `name` on `node`.
    pub fn put_block(&mut self, node: usize, name: &str, value: DVector<f64>) -> Result<()> {
        if node >= self.n() {
            return Err(Error::InvalidParam(format!(
                "node {node} out of range for a {}-node network",
                self.n()
            )));
        }
        self.store[node].insert(name.to_string(), value);
        Ok(())
    }

    /// Read node `node`'s own block `name`.
    pub fn get_block(&self, node: usize, name: &str) -> Result<&DVector<f64>> {
        self.read_for(node, node, name)
    }

    /// Read `owner`'s block `name` on behalf of `reader`, policing
    /// locality.
    pub(crate) fn read_for(&self, reader: usize, owner: usize, name: &str) -> Result<&DVector<f64>> {
        if reader != owner && !self.graph.has_edge(reader, owner) {
            match self.mode {
                LocalityMode::Enforce => {
                    return Err(Error::LocalityViolation {
                        reader,
                        owner,
                    })
                }
                LocalityMode::AuditOnly => {
                    self.audit_log
                        .lock()
                        .expect("audit log poisoned")
                        .push((reader, owner));
                }
            }
        }
        self.store[owner].get(name).ok_or_else(|| Error::MissingBlock {
            node: owner,
            name: name.to_string(),
        })
    }

    fn check_uniform_width(&self, name: &str) -> Result<usize> {
        let width = self
            .store
            .first()
            .and_then(|s| s.get(name))
            .ok_or_else(|| Error::MissingBlock {
                node: 0,
                name: name.to_string(),
            })?
            .len();
        for (node, s) in self.store.iter().enumerate() {
            let block = s.get(name).ok_or_else(|| Error::MissingBlock {
                node,
                name: name.to_string(),
            })?;
            if block.len() != width {
                return Err(Error::ShapeMismatch(format!(
                    "gossip input \"{name}\" has width {} on node {node} but {width} on node 0",
                    block.len()
                )));
            }
        }
        Ok(width)
    }

    fn run_local_round<F>(&self, compute: F) -> Result<Vec<DVector<f64>>>
    where
        F: Fn(usize) -> Result<DVector<f64>> + Sync + Send,
    {
        let n = self.n();
        if n >= PAR_THRESHOLD {
            (0..n).into_par_iter().map(compute).collect()
        } else {
            (0..n).map(compute).collect()
        }
    }

    fn write_round_outputs(&mut self, name: &str, outputs: Vec<DVector<f64>>) {
        for (node, out) in outputs.into_iter().enumerate() {
            self.store[node].insert(name.to_string(), out);
        }
    }

    /// One gossip round: `output_i = sum_j W_ij input_j`.
    ///
    /// Every node reads only its own and its neighbors' blocks.
    /// Neighbor contributions accumulate in ascending node order, so the
    /// result is bit-identical whether the round runs sequentially or in
    /// parallel. Costs one communication round.
    pub fn gossip_round(&mut self, input: &str, output: &str) -> Result<()> {
        self.check_uniform_width(input)?;
        let outputs = self.run_local_round(|i| {
            let mut acc = self.read_for(i, i, input)? * self.w[(i, i)];
            for &j in self.graph.neighbors(i) {
                let w_ij = self.w[(i, j)];
                if w_ij != 0.0 {
                    acc.axpy(w_ij, self.read_for(i, j, input)?, 1.0);
                }
            }
            Ok(acc)
        })?;
        self.write_round_outputs(output, outputs);
        self.counters.comm_rounds += 1;
        Ok(())
    }

    /// One multiplication round: each node applies its constraint block
    /// (or its transpose) to its own block `input`. Costs one
    /// multiplication round; no communication happens.
    pub fn matmul_round(
        &mut self,
        direction: MatDirection,
        input: &str,
        output: &str,
        inst: &ProblemInstance,
    ) -> Result<()> {
        self.check_instance(inst)?;
        let outputs = self.run_local_round(|i| {
            let block = self.read_for(i, i, input)?;
            let a = inst.node(i).a();
            let expected = match direction {
                MatDirection::Forward => a.ncols(),
                MatDirection::Transpose => a.nrows(),
            };
            if block.len() != expected {
                return Err(Error::ShapeMismatch(format!(
                    "node {i} block \"{input}\" has width {}, expected {expected}",
                    block.len()
                )));
            }
            Ok(match direction {
                MatDirection::Forward => a * block,
                MatDirection::Transpose => a.transpose() * block,
            })
        })?;
        self.write_round_outputs(output, outputs);
        self.counters.matmul_rounds += 1;
        Ok(())
    }

    /// One gradient round: each node evaluates its cost gradient on its
    /// own block `input`. Costs one gradient round.
    pub fn grad_round(&mut self, input: &str, output: &str, inst: &ProblemInstance) -> Result<()> {
        self.check_instance(inst)?;
        let outputs =
            self.run_local_round(|i| inst.node(i).objective().grad(self.read_for(i, i, input)?))?;
        self.write_round_outputs(output, outputs);
        self.counters.grad_calls += 1;
        Ok(())
    }

    /// [`gossip_round`](Self::gossip_round) on a block vector.
    pub fn gossip_apply(&mut self, v: &BlockVec) -> Result<BlockVec> {
        self.scatter("__gossip_in", v)?;
        self.gossip_round("__gossip_in", "__gossip_out")?;
        self.gather("__gossip_out")
    }

    /// [`matmul_round`](Self::matmul_round) on a block vector.
    pub fn matmul_apply(
        &mut self,
        direction: MatDirection,
        v: &BlockVec,
        inst: &ProblemInstance,
    ) -> Result<BlockVec> {
        self.scatter("__mat_in", v)?;
        self.matmul_round(direction, "__mat_in", "__mat_out", inst)?;
        self.gather("__mat_out")
    }

    /// [`grad_round`](Self::grad_round) on a block vector.
    pub fn grad_apply(&mut self, v: &BlockVec, inst: &ProblemInstance) -> Result<BlockVec> {
        self.scatter("__grad_in", v)?;
        self.grad_round("__grad_in", "__grad_out", inst)?;
        self.gather("__grad_out")
    }

    /// Diagnostic fault injection: scale one direction of the first
    /// edge's gossip weight, silently breaking the symmetry every
    /// invariant of the method relies on. The certified spectrum in
    /// [`gossip`](Self::gossip) is left untouched, so downstream checks
    /// can demonstrate that they catch the fault.
    pub fn inject_gossip_asymmetry(&mut self, scale: f64) -> Result<()> {
        let &(i, j) = self
            .graph
            .edges()
            .first()
            .ok_or_else(|| Error::InvalidParam("graph has no edges".into()))?;
        self.w[(i, j)] *= scale;
        Ok(())
    }

    fn scatter(&mut self, name: &str, v: &BlockVec) -> Result<()> {
        if v.num_blocks() != self.n() {
            return Err(Error::ShapeMismatch(format!(
                "block vector has {} blocks for a {}-node network",
                v.num_blocks(),
                self.n()
            )));
        }
        for (node, block) in v.0.iter().enumerate() {
            self.store[node].insert(name.to_string(), block.clone());
        }
        Ok(())
    }

    fn gather(&self, name: &str) -> Result<BlockVec> {
        let mut blocks = Vec::with_capacity(self.n());
        for node in 0..self.n() {
            blocks.push(
                self.store[node]
                    .get(name)
                    .ok_or_else(|| Error::MissingBlock {
                        node,
                        name: name.to_string(),
                    })?
                    .clone(),
            );
        }
        Ok(BlockVec(blocks))
    }

    fn check_instance(&self, inst: &ProblemInstance) -> Result<()> {
        if inst.n() != self.n() {
            return Err(Error::ShapeMismatch(format!(
                "instance has {} nodes but the network has {}",
                inst.n(),
                self.n()
            )));
        }
        Ok(())
    }
}
