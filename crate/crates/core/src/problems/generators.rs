//! Instance builders for experiments and tests.
//!
//! All randomness is drawn from a counter-seeded ChaCha stream in a fixed
//! order, so a given `(generator, arguments, seed)` triple always produces
//! the identical instance, bit for bit. Generators that draw random
//! offsets repair them when the drawn coupling constraint is not exactly
//! satisfiable: the unreachable component is split evenly across nodes,
//! which keeps the constraint feasible without disturbing anything else.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{NodeProblem, ObjectiveBlock, ProblemInstance, SparseExamples, FEAS_CERT_TOL_REL};
use crate::error::{Error, Result};
use crate::graphs::Graph;

fn normal_vec(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_iterator(len, (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Row-major standard normal matrix, so the draw order is independent of
/// the storage layout.
fn normal_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    DMatrix::from_row_slice(rows, cols, &data)
}

/// Make `sum_i b_i` reachable by the drawn constraint blocks.
///
/// Computes the least-squares residual of `[A_1 ... A_n] x = sum_i b_i`
/// and, if it is not already negligible, adds an equal share of the
/// residual to every offset, which moves the target into the range of the
/// concatenated blocks.
fn repair_offsets(a_blocks: &[DMatrix<f64>], b_blocks: &mut [DVector<f64>]) -> Result<()> {
    let m = a_blocks[0].nrows();
    let d: usize = a_blocks.iter().map(DMatrix::ncols).sum();
    let mut concat = DMatrix::zeros(m, d);
    let mut at = 0;
    for a in a_blocks {
        concat.view_mut((0, at), (m, a.ncols())).copy_from(a);
        at += a.ncols();
    }
    let mut target = DVector::zeros(m);
    for b in b_blocks.iter() {
        target += b;
    }
    let svd = concat.clone().svd(true, true);
    let solution = svd
        .solve(&target, 0.0)
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    let residual = &concat * solution - &target;
    if residual.norm() > FEAS_CERT_TOL_REL * (1.0 + target.norm()) {
        let share = &residual / b_blocks.len() as f64;
        for b in b_blocks.iter_mut() {
            *b += &share;
        }
    }
    Ok(())
}

/// Random regression-style instance.
///
/// Every node draws a factor `C_i`, a data vector `d_i`, a constraint
/// block `A_i`, and an offset `b_i` with standard normal entries, and
/// keeps the cost `f_i(x) = x' (C_i' C_i + theta I) x / 2 - (C_i' d_i)' x`.
/// `theta > 0` keeps each cost strongly convex even when `C_i' C_i` is
/// singular.
pub fn gen_synthetic_regression(
    graph: &Graph,
    d_i: usize,
    m: usize,
    theta: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    synthetic_regression_scaled(graph, d_i, m, theta, seed, 1.0)
}

/// Implementation of [`gen_synthetic_regression`] with a scale on the
/// drawn factors; tests pass 0 to pin the cost matrix at `theta I`.
pub(crate) fn synthetic_regression_scaled(
    graph: &Graph,
    d_i: usize,
    m: usize,
    theta: f64,
    seed: u64,
    c_scale: f64,
) -> Result<ProblemInstance> {
    if d_i == 0 || m == 0 {
        return Err(Error::InvalidParam(
            "synthetic regression needs d_i >= 1 and m >= 1".into(),
        ));
    }
    if !(theta > 0.0) {
        return Err(Error::InvalidParam(format!(
            "regularizer theta must be positive, got {theta}"
        )));
    }
    let n = graph.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut objectives = Vec::with_capacity(n);
    let mut a_blocks = Vec::with_capacity(n);
    let mut b_blocks = Vec::with_capacity(n);
    for _ in 0..n {
        let c_factor = normal_mat(&mut rng, d_i, d_i) * c_scale;
        let data = normal_vec(&mut rng, d_i);
        let a = normal_mat(&mut rng, m, d_i);
        let b = normal_vec(&mut rng, m);
        let q = c_factor.transpose() * &c_factor + DMatrix::identity(d_i, d_i) * theta;
        let lin = -(c_factor.transpose() * data);
        objectives.push(ObjectiveBlock::quadratic(q, lin)?);
        a_blocks.push(a);
        b_blocks.push(b);
    }
    repair_offsets(&a_blocks, &mut b_blocks)?;

    let nodes = objectives
        .into_iter()
        .zip(a_blocks)
        .zip(b_blocks)
        .map(|((objective, a), b)| NodeProblem::new(objective, a, b))
        .collect::<Result<Vec<_>>>()?;
    ProblemInstance::new(graph.clone(), nodes)
}

/// Resource-allocation instance: each node pulls toward its own center
/// while the nodes jointly split a budget.
///
/// Node `i` keeps `f_i(x) = ||x - centers[i]||^2 / 2` with `A_i = I` and
/// `b_i = budget / n`, so the coupling constraint reads
/// `sum_i x_i = budget`. The minimizer is the closed form
/// `x_i = centers[i] - (sum_j centers[j] - budget) / n`.
pub fn gen_resource_allocation(
    graph: &Graph,
    centers: &[DVector<f64>],
    budget: &DVector<f64>,
) -> Result<ProblemInstance> {
    let n = graph.n();
    if centers.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "{} centers for {} nodes",
            centers.len(),
            n
        )));
    }
    let d = budget.len();
    if d == 0 {
        return Err(Error::InvalidParam("budget must have width >= 1".into()));
    }
    if centers.iter().any(|c| c.len() != d) {
        return Err(Error::ShapeMismatch(
            "every center must match the budget width".into(),
        ));
    }
    let share = budget / n as f64;
    let nodes = centers
        .iter()
        .map(|center| {
            NodeProblem::new(
                ObjectiveBlock::quadratic(DMatrix::identity(d, d), -center)?,
                DMatrix::identity(d, d),
                share.clone(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    ProblemInstance::new(graph.clone(), nodes)
}

/// Instance with exactly prescribed objective and constraint condition
/// numbers, for scaling studies.
///
/// Every node shares the diagonal cost spectrum `{1, sqrt(kappa_f),
/// kappa_f}` and the diagonal constraint block with squared singular
/// values `{1, sqrt(kappa_a), kappa_a}`, so the global constants are
/// exactly `mu_f = 1`, `L_f = kappa_f`, `mu_A = 1`, `L_A = kappa_a`.
/// Linear terms and offsets are random.
pub fn gen_conditioned(
    graph: &Graph,
    kappa_f: f64,
    kappa_a: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    if !(kappa_f >= 1.0) || !(kappa_a >= 1.0) {
        return Err(Error::InvalidParam(format!(
            "condition numbers must be >= 1, got kappa_f = {kappa_f}, kappa_a = {kappa_a}"
        )));
    }
    let n = graph.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = DMatrix::from_diagonal(&DVector::from_vec(vec![
        1.0,
        kappa_f.sqrt(),
        kappa_f,
    ]));
    let a = DMatrix::from_diagonal(&DVector::from_vec(vec![
        1.0,
        kappa_a.powf(0.25),
        kappa_a.sqrt(),
    ]));
    let mut a_blocks = Vec::with_capacity(n);
    let mut b_blocks = Vec::with_capacity(n);
    let mut linear_terms = Vec::with_capacity(n);
    for _ in 0..n {
        linear_terms.push(normal_vec(&mut rng, 3));
        a_blocks.push(a.clone());
        b_blocks.push(normal_vec(&mut rng, 3));
    }
    repair_offsets(&a_blocks, &mut b_blocks)?;
    let nodes = linear_terms
        .into_iter()
        .zip(a_blocks)
        .zip(b_blocks)
        .map(|((lin, a), b)| NodeProblem::new(ObjectiveBlock::quadratic(q.clone(), lin)?, a, b))
        .collect::<Result<Vec<_>>>()?;
    ProblemInstance::new(graph.clone(), nodes)
}

/// Vertically federated least squares: features are split by column
/// across nodes, labels live on node 0.
///
/// Node 0 owns `(w_0, z)` with cost `||z - labels||^2 / 2 +
/// lambda ||w_0||^2` and block `A_0 = [F_0, -I]`; node `i > 0` owns `w_i`
/// with cost `lambda ||w_i||^2` and block `F_i`. All offsets are zero, so
/// the coupling constraint pins `z = sum_i F_i w_i`: the network jointly
/// fits a ridge regression nobody could assemble alone.
pub fn gen_vfl(
    features: &SparseExamples,
    lambda: f64,
    graph: &Graph,
    column_split: &[usize],
) -> Result<ProblemInstance> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParam(format!(
            "ridge weight lambda must be positive, got {lambda}"
        )));
    }
    let n = graph.n();
    if column_split.len() != n {
        return Err(Error::SplitMismatch(format!(
            "{} split entries for {} nodes",
            column_split.len(),
            n
        )));
    }
    if column_split.contains(&0) {
        return Err(Error::SplitMismatch(
            "every node needs at least one feature column".into(),
        ));
    }
    let total: usize = column_split.iter().sum();
    if total != features.num_features() {
        return Err(Error::SplitMismatch(format!(
            "split covers {total} columns but the data has {}",
            features.num_features()
        )));
    }
    let m = features.num_examples();
    if m == 0 {
        return Err(Error::InvalidParam("feature data has no rows".into()));
    }
    let (f, labels) = features.to_dense();

    let mut nodes = Vec::with_capacity(n);
    let mut col = 0;
    for (i, &width) in column_split.iter().enumerate() {
        let f_i = f.view((0, col), (m, width)).into_owned();
        col += width;
        if i == 0 {
            // (w_0, z): ridge on w_0, squared loss on z.
            let dim = width + m;
            let mut q = DMatrix::zeros(dim, dim);
            for k in 0..width {
                q[(k, k)] = 2.0 * lambda;
            }
            for k in 0..m {
                q[(width + k, width + k)] = 1.0;
            }
            let mut c = DVector::zeros(dim);
            c.rows_mut(width, m).copy_from(&(-&labels));
            let mut a = DMatrix::zeros(m, dim);
            a.view_mut((0, 0), (m, width)).copy_from(&f_i);
            for k in 0..m {
                a[(k, width + k)] = -1.0;
            }
            nodes.push(NodeProblem::new(
                ObjectiveBlock::quadratic(q, c)?,
                a,
                DVector::zeros(m),
            )?);
        } else {
            let q = DMatrix::identity(width, width) * (2.0 * lambda);
            nodes.push(NodeProblem::new(
                ObjectiveBlock::quadratic(q, DVector::zeros(width))?,
                f_i,
                DVector::zeros(m),
            )?);
        }
    }
    ProblemInstance::new(graph.clone(), nodes)
}
