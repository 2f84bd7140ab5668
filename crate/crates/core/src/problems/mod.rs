//! Problem instances: local objectives, coupling blocks, and builders.
//!
//! An instance couples `n` node-local strongly convex costs through one
//! affine constraint: node `i` holds a cost `f_i` on its own variable
//! `x_i`, a constraint block `A_i` mapping `x_i` into the shared
//! constraint space of width `m`, and an offset `b_i`. The coupling
//! constraint is `sum_i (A_i x_i - b_i) = 0`.
//!
//! Construction certifies the properties the solver relies on: matching
//! shapes, strong convexity of every block, a connected communication
//! graph, and exact feasibility of the coupling constraint (checked by a
//! least-squares solve of the row-concatenated system).

mod generators;
mod io;
mod libsvm;
mod lower_bound;

pub use generators::{
    gen_conditioned, gen_resource_allocation, gen_synthetic_regression, gen_vfl,
};
pub use io::{load_instance, save_instance};
pub use libsvm::{parse_libsvm, Example, SparseExamples};
pub use lower_bound::{
    gen_lower_bound_instance, lower_bound_hats, lower_bound_q, verify_lower_bound_decay,
    DualDecayReport,
};

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graphs::Graph;
use crate::linalg::BlockVec;

/// Relative tolerance for the feasibility certificate: the least-squares
/// residual of the row-concatenated constraint system must not exceed
/// this times `1 + ||sum_i b_i||`.
pub const FEAS_CERT_TOL_REL: f64 = 1e-10;

/// Relative tolerance for symmetry of a quadratic cost matrix.
const SYMMETRY_TOL_REL: f64 = 1e-12;

/// Gradient callback for an externally defined cost.
pub type GradFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

/// Value callback for an externally defined cost.
pub type ValueFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;

/// One node's local cost.
///
/// Either an explicit strongly convex quadratic `f(x) = x' Q x / 2 + c' x`
/// or an external oracle supplying value and gradient callbacks together
/// with certified smoothness and strong-convexity constants.
#[derive(Clone)]
pub enum ObjectiveBlock {
    Quadratic {
        q: DMatrix<f64>,
        c: DVector<f64>,
        l_local: f64,
        mu_local: f64,
    },
    Oracle {
        dim: usize,
        l_local: f64,
        mu_local: f64,
        value: ValueFn,
        grad: GradFn,
    },
}

impl fmt::Debug for ObjectiveBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectiveBlock::Quadratic {
                q,
                l_local,
                mu_local,
                ..
            } => f
                .debug_struct("Quadratic")
                .field("dim", &q.nrows())
                .field("l_local", l_local)
                .field("mu_local", mu_local)
                .finish(),
            ObjectiveBlock::Oracle {
                dim,
                l_local,
                mu_local,
                ..
            } => f
                .debug_struct("Oracle")
                .field("dim", dim)
                .field("l_local", l_local)
                .field("mu_local", mu_local)
                .finish(),
        }
    }
}

impl ObjectiveBlock {
    /// Quadratic cost from its matrix and linear term.
    ///
    /// `q` must be symmetric and positive definite; the certified local
    /// smoothness and strong-convexity constants are its extreme
    /// eigenvalues, computed here.
    pub fn quadratic(q: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        if q.nrows() != q.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "cost matrix must be square, got {}x{}",
                q.nrows(),
                q.ncols()
            )));
        }
        if q.nrows() != c.len() {
            return Err(Error::ShapeMismatch(format!(
                "cost matrix is {}x{} but linear term has length {}",
                q.nrows(),
                q.ncols(),
                c.len()
            )));
        }
        let asym = (&q - q.transpose()).norm();
        if asym > SYMMETRY_TOL_REL * (1.0 + q.norm()) {
            return Err(Error::InvalidParam(format!(
                "cost matrix is not symmetric (asymmetry {asym:.3e})"
            )));
        }
        let q = (&q + q.transpose()) * 0.5;
        let eigenvalues = crate::graphs::symmetric_eigenvalues_sorted(&q);
        let mu_local = eigenvalues[0];
        let l_local = eigenvalues[eigenvalues.len() - 1];
        if mu_local <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "cost matrix must be positive definite, smallest eigenvalue {mu_local:.3e}"
            )));
        }
        Ok(ObjectiveBlock::Quadratic {
            q,
            c,
            l_local,
            mu_local,
        })
    }

    /// Externally defined cost with caller-certified constants.
    pub fn oracle(
        dim: usize,
        l_local: f64,
        mu_local: f64,
        value: ValueFn,
        grad: GradFn,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParam("oracle cost needs dim >= 1".into()));
        }
        if !(mu_local > 0.0 && l_local >= mu_local) {
            return Err(Error::InvalidParam(format!(
                "oracle cost needs 0 < mu <= L, got mu = {mu_local}, L = {l_local}"
            )));
        }
        Ok(ObjectiveBlock::Oracle {
            dim,
            l_local,
            mu_local,
            value,
            grad,
        })
    }

    /// Variable width.
    #[must_use]
    pub fn dim(&self) -> usize {
        match self {
            ObjectiveBlock::Quadratic { q, .. } => q.nrows(),
            ObjectiveBlock::Oracle { dim, .. } => *dim,
        }
    }

    /// Certified local smoothness constant.
    #[must_use]
    pub fn l_local(&self) -> f64 {
        match self {
            ObjectiveBlock::Quadratic { l_local, .. } => *l_local,
            ObjectiveBlock::Oracle { l_local, .. } => *l_local,
        }
    }

    /// Certified local strong-convexity constant.
    #[must_use]
    pub fn mu_local(&self) -> f64 {
        match self {
            ObjectiveBlock::Quadratic { mu_local, .. } => *mu_local,
            ObjectiveBlock::Oracle { mu_local, .. } => *mu_local,
        }
    }

    /// Cost value at `x`.
    pub fn value(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_width(x)?;
        Ok(match self {
            ObjectiveBlock::Quadratic { q, c, .. } => 0.5 * x.dot(&(q * x)) + c.dot(x),
            ObjectiveBlock::Oracle { value, .. } => value(x),
        })
    }

    /// Gradient at `x`.
    pub fn grad(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_width(x)?;
        Ok(match self {
            ObjectiveBlock::Quadratic { q, c, .. } => q * x + c,
            ObjectiveBlock::Oracle { grad, .. } => {
                let g = grad(x);
                if g.len() != x.len() {
                    return Err(Error::ShapeMismatch(format!(
                        "oracle gradient has length {}, expected {}",
                        g.len(),
                        x.len()
                    )));
                }
                g
            }
        })
    }

    /// Matrix and linear term for quadratic costs.
    #[must_use]
    pub fn quadratic_parts(&self) -> Option<(&DMatrix<f64>, &DVector<f64>)> {
        match self {
            ObjectiveBlock::Quadratic { q, c, .. } => Some((q, c)),
            ObjectiveBlock::Oracle { .. } => None,
        }
    }

    fn check_width(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "cost expects width {}, got {}",
                self.dim(),
                x.len()
            )));
        }
        Ok(())
    }
}

/// Everything one node owns: its cost, constraint block, and offset.
#[derive(Clone, Debug)]
pub struct NodeProblem {
    objective: ObjectiveBlock,
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl NodeProblem {
    /// Bundle a node's data, checking shapes.
    pub fn new(objective: ObjectiveBlock, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.ncols() != objective.dim() {
            return Err(Error::ShapeMismatch(format!(
                "constraint block has {} columns but the cost has width {}",
                a.ncols(),
                objective.dim()
            )));
        }
        if a.nrows() != b.len() {
            return Err(Error::ShapeMismatch(format!(
                "constraint block has {} rows but the offset has length {}",
                a.nrows(),
                b.len()
            )));
        }
        if a.nrows() == 0 {
            return Err(Error::ShapeMismatch(
                "constraint space must have width >= 1".into(),
            ));
        }
        Ok(NodeProblem { objective, a, b })
    }

    /// The node's cost.
    #[must_use]
    pub fn objective(&self) -> &ObjectiveBlock {
        &self.objective
    }

    /// The node's constraint block.
    #[must_use]
    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// The node's constraint offset.
    #[must_use]
    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }
}

/// A complete, certified problem instance.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    graph: Graph,
    nodes: Vec<NodeProblem>,
    m: usize,
    dims: Vec<usize>,
}

impl ProblemInstance {
    /// Assemble and certify an instance.
    ///
    /// Checks: one node problem per graph node, a connected graph, a
    /// common constraint width, and feasibility of the coupling
    /// constraint (the row-concatenated least-squares residual must stay
    /// below [`FEAS_CERT_TOL_REL`] relative to the offset magnitude).
    pub fn new(graph: Graph, nodes: Vec<NodeProblem>) -> Result<Self> {
        if nodes.len() != graph.n() {
            return Err(Error::ShapeMismatch(format!(
                "{} node problems for a graph on {} nodes",
                nodes.len(),
                graph.n()
            )));
        }
        if !graph.is_connected() {
            return Err(Error::NotConnected(
                "instances require a connected communication graph".into(),
            ));
        }
        let m = nodes[0].a.nrows();
        for (i, node) in nodes.iter().enumerate() {
            if node.a.nrows() != m {
                return Err(Error::ShapeMismatch(format!(
                    "node {i} has constraint width {}, expected {m}",
                    node.a.nrows()
                )));
            }
        }
        let dims: Vec<usize> = nodes.iter().map(|nd| nd.objective.dim()).collect();

        let inst = ProblemInstance {
            graph,
            nodes,
            m,
            dims,
        };
        inst.certify_feasibility()?;
        Ok(inst)
    }

    fn certify_feasibility(&self) -> Result<()> {
        let concat = self.row_concat_a();
        let target = self.sum_b();
        let tol = FEAS_CERT_TOL_REL * (1.0 + target.norm());
        let svd = concat.clone().svd(true, true);
        let solution = svd
            .solve(&target, 0.0)
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        let residual = (&concat * solution - &target).norm();
        if residual > tol {
            return Err(Error::Infeasible { residual, tol });
        }
        Ok(())
    }

    /// Number of nodes.
    #[must_use]
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// Constraint-space width.
    #[must_use]
    pub fn m(&self) -> usize {
        self.m
    }

    /// Per-node variable widths.
    #[must_use]
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// The communication graph.
    #[must_use]
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    /// All node problems, in node order.
    #[must_use]
    pub fn nodes(&self) -> &[NodeProblem] {
        &self.nodes
    }

    /// Node `i`'s problem.
    #[must_use]
    pub fn node(&self, i: usize) -> &NodeProblem {
        &self.nodes[i]
    }

    /// Total primal width `sum_i dim(x_i)`.
    #[must_use]
    pub fn total_primal_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    /// Width of a lifted iterate: primal width plus `n * m`.
    #[must_use]
    pub fn lifted_dim(&self) -> usize {
        self.total_primal_dim() + self.n() * self.m
    }

    /// Whether every cost is an explicit quadratic.
    #[must_use]
    pub fn is_all_quadratic(&self) -> bool {
        self.nodes
            .iter()
            .all(|nd| matches!(nd.objective, ObjectiveBlock::Quadratic { .. }))
    }

    /// Global smoothness constant: the largest local one.
    #[must_use]
    pub fn l_f(&self) -> f64 {
        self.nodes
            .iter()
            .map(|nd| nd.objective.l_local())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Global strong-convexity constant: the smallest local one.
    #[must_use]
    pub fn mu_f(&self) -> f64 {
        self.nodes
            .iter()
            .map(|nd| nd.objective.mu_local())
            .fold(f64::INFINITY, f64::min)
    }

    /// Objective condition number.
    #[must_use]
    pub fn kappa_f(&self) -> f64 {
        self.l_f() / self.mu_f()
    }

    /// Total cost `sum_i f_i(x_i)`.
    pub fn objective_value(&self, x: &BlockVec) -> Result<f64> {
        self.check_primal_layout(x)?;
        let mut total = 0.0;
        for (node, xi) in self.nodes.iter().zip(&x.0) {
            total += node.objective.value(xi)?;
        }
        Ok(total)
    }

    /// Coupling-constraint residual `||sum_i (A_i x_i - b_i)||`.
    pub fn feas_residual(&self, x: &BlockVec) -> Result<f64> {
        self.check_primal_layout(x)?;
        let mut sum = DVector::zeros(self.m);
        for (node, xi) in self.nodes.iter().zip(&x.0) {
            sum += &node.a * xi - &node.b;
        }
        Ok(sum.norm())
    }

    /// Constraint blocks side by side: the `m x total_primal_dim` matrix
    /// `[A_1 ... A_n]`.
    #[must_use]
    pub fn row_concat_a(&self) -> DMatrix<f64> {
        let d = self.total_primal_dim();
        let mut out = DMatrix::zeros(self.m, d);
        let mut at = 0;
        for node in &self.nodes {
            out.view_mut((0, at), (self.m, node.a.ncols()))
                .copy_from(&node.a);
            at += node.a.ncols();
        }
        out
    }

    /// Constraint blocks on the diagonal: the `n m x total_primal_dim`
    /// block-diagonal matrix `diag(A_1, ..., A_n)`.
    #[must_use]
    pub fn block_diag_a(&self) -> DMatrix<f64> {
        let d = self.total_primal_dim();
        let mut out = DMatrix::zeros(self.n() * self.m, d);
        let mut col = 0;
        for (i, node) in self.nodes.iter().enumerate() {
            out.view_mut((i * self.m, col), (self.m, node.a.ncols()))
                .copy_from(&node.a);
            col += node.a.ncols();
        }
        out
    }

    /// Sum of the offsets.
    #[must_use]
    pub fn sum_b(&self) -> DVector<f64> {
        let mut sum = DVector::zeros(self.m);
        for node in &self.nodes {
            sum += &node.b;
        }
        sum
    }

    /// Offsets stacked in node order.
    #[must_use]
    pub fn stacked_b(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.n() * self.m);
        for (i, node) in self.nodes.iter().enumerate() {
            out.rows_mut(i * self.m, self.m).copy_from(&node.b);
        }
        out
    }

    /// Constraint blocks as a list, for spectrum computations.
    #[must_use]
    pub fn a_blocks(&self) -> Vec<DMatrix<f64>> {
        self.nodes.iter().map(|nd| nd.a.clone()).collect()
    }

    fn check_primal_layout(&self, x: &BlockVec) -> Result<()> {
        if x.widths() != self.dims {
            return Err(Error::ShapeMismatch(
                "block vector layout does not match the instance".into(),
            ));
        }
        Ok(())
    }
}
