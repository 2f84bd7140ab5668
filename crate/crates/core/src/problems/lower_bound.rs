//! Worst-case instance family with prescribed objective and constraint
//! conditioning.
//!
//! The construction places `n = 3k` nodes on a path and splits them into
//! three consecutive groups whose constraint blocks interlock like a
//! chain: group one couples even coordinate pairs, group three couples
//! odd pairs, and the middle group pins the first coordinate. The dual
//! solution of such an instance decays geometrically along the chain
//! with a known ratio, which is what makes the family hard: information
//! about the linear term has to travel the whole chain before the far
//! coordinates move. [`verify_lower_bound_decay`] checks that the
//! instance actually exhibits the predicted decay.

use nalgebra::{DMatrix, DVector};

use super::{NodeProblem, ObjectiveBlock, ProblemInstance};
use crate::error::{Error, Result};
use crate::graphs::{make_graph, Topology};

/// Scaled coupling strengths `(l_hat, mu_hat)` that realize overall
/// constraint constants `(l_a, mu_a)`.
///
/// They satisfy `2 * l_hat + mu_hat = l_a` exactly (the largest block
/// eigenvalue) and `(2/3) * mu_hat = mu_a` (the averaged lower bound).
/// Requires `l_a > 1.5 * mu_a`, otherwise `l_hat` would not be positive.
pub fn lower_bound_hats(l_a: f64, mu_a: f64) -> Result<(f64, f64)> {
    if !(mu_a > 0.0) || !(l_a >= mu_a) {
        return Err(Error::InvalidParam(format!(
            "need 0 < mu_a <= l_a, got mu_a = {mu_a}, l_a = {l_a}"
        )));
    }
    let l_hat = l_a / 2.0 - 0.75 * mu_a;
    let mu_hat = 1.5 * mu_a;
    if !(l_hat > 0.0) {
        return Err(Error::InvalidParam(format!(
            "constraint conditioning too mild: need l_a > 1.5 * mu_a, got {l_a} vs {mu_a}"
        )));
    }
    Ok((l_hat, mu_hat))
}

/// Predicted geometric decay ratio of consecutive dual coordinates.
///
/// With `w = (mu_a * mu_f) / (l_a * l_f)`, the ratio is the root in
/// `(0, 1)` of `x^2 - (2 + 2w) x + 1 = 0`.
#[must_use]
pub fn lower_bound_q(l_f: f64, mu_f: f64, l_a: f64, mu_a: f64) -> f64 {
    let w = (mu_a * mu_f) / (l_a * l_f);
    1.0 + w - (w * (w + 2.0)).sqrt()
}

/// Pair-difference matrix: row `2k` holds `+1` at column `2k` and `-1`
/// at column `2k + 1` when `offset = 0`; shifting by `offset = 1` moves
/// the pattern to odd rows. Incomplete trailing pairs are dropped.
fn pair_difference(dim: usize, offset: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(dim, dim);
    let mut row = offset;
    while row + 1 < dim {
        e[(row, row)] = 1.0;
        e[(row, row + 1)] = -1.0;
        row += 2;
    }
    e
}

/// Horizontal concatenation `[left, right]`.
fn hcat(left: &DMatrix<f64>, right: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(left.nrows(), left.ncols() + right.ncols());
    out.view_mut((0, 0), left.shape()).copy_from(left);
    out.view_mut((0, left.ncols()), right.shape()).copy_from(right);
    out
}

/// Build the hard path instance.
///
/// `n` must be a positive multiple of 3 and `dim >= 2` is the coupling
/// constraint width; every node owns `2 * dim` variables. The middle
/// group carries the only linear term, with curvature `mu_f`; the outer
/// groups have curvature `l_f`. All offsets are zero, so the instance is
/// trivially feasible.
pub fn gen_lower_bound_instance(
    n: usize,
    l_f: f64,
    mu_f: f64,
    l_a: f64,
    mu_a: f64,
    dim: usize,
) -> Result<ProblemInstance> {
    if n == 0 || !n.is_multiple_of(3) {
        return Err(Error::InvalidParam(format!(
            "node count must be a positive multiple of 3, got {n}"
        )));
    }
    if dim < 2 {
        return Err(Error::InvalidParam(format!(
            "coupling width must be at least 2, got {dim}"
        )));
    }
    if !(mu_f > 0.0) || !(l_f >= mu_f) {
        return Err(Error::InvalidParam(format!(
            "need 0 < mu_f <= l_f, got mu_f = {mu_f}, l_f = {l_f}"
        )));
    }
    let (l_hat, mu_hat) = lower_bound_hats(l_a, mu_a)?;
    let graph = make_graph(Topology::Path, n, None, 0)?;

    let sqrt_l = l_hat.sqrt();
    let sqrt_mu = mu_hat.sqrt();
    let eye = DMatrix::identity(dim, dim);
    let zero = DMatrix::zeros(dim, dim);
    let e_even = pair_difference(dim, 0);
    let e_odd = pair_difference(dim, 1);
    let mut pin_first = DMatrix::zeros(dim, dim);
    pin_first[(0, 0)] = 1.0;

    let a_outer_even = hcat(&(e_even.transpose() * sqrt_l), &(&eye * sqrt_mu));
    let a_middle = hcat(&(&pin_first * sqrt_l), &zero);
    let a_outer_odd = hcat(&(e_odd.transpose() * sqrt_l), &(&eye * sqrt_mu));

    let group_size = n / 3;
    let width = 2 * dim;
    let mut middle_c = DVector::zeros(width);
    middle_c[0] = -sqrt_l / 2.0;

    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let (q_scale, c, a) = match i / group_size {
            0 => (l_f, DVector::zeros(width), a_outer_even.clone()),
            1 => (mu_f, middle_c.clone(), a_middle.clone()),
            _ => (l_f, DVector::zeros(width), a_outer_odd.clone()),
        };
        let q = DMatrix::identity(width, width) * q_scale;
        nodes.push(NodeProblem::new(
            ObjectiveBlock::quadratic(q, c)?,
            a,
            DVector::zeros(dim),
        )?);
    }
    ProblemInstance::new(graph, nodes)
}

/// Measured versus predicted dual decay for a hard path instance.
#[derive(Debug, Clone)]
pub struct DualDecayReport {
    /// Analytic decay ratio from [`lower_bound_q`].
    pub q_predicted: f64,
    /// Consecutive-coordinate ratios of the dual solution, first half of
    /// the chain only (boundary effects distort the tail).
    pub ratios: Vec<f64>,
    /// Largest relative deviation of a measured ratio from the
    /// prediction.
    pub max_rel_deviation: f64,
}

/// Solve the reduced dual system of a hard path instance and compare the
/// decay of its solution against the analytic ratio.
///
/// The chain matrix is recovered from the instance's averaged coupling
/// moment, so the check fails loudly if the blocks were tampered with.
pub fn verify_lower_bound_decay(
    instance: &ProblemInstance,
    l_a: f64,
    mu_a: f64,
) -> Result<DualDecayReport> {
    let (l_hat, mu_hat) = lower_bound_hats(l_a, mu_a)?;
    let dim = instance.m();
    let n = instance.n();
    let mut s = DMatrix::zeros(dim, dim);
    for node in instance.nodes() {
        s += node.a() * node.a().transpose();
    }
    s /= n as f64;
    let chain = (s * 3.0 - DMatrix::identity(dim, dim) * (2.0 * mu_hat)) / l_hat;

    let w = (mu_a * instance.mu_f()) / (l_a * instance.l_f());
    let system = &chain + DMatrix::identity(dim, dim) * (2.0 * w);
    let mut rhs = DVector::zeros(dim);
    rhs[0] = 1.0;
    let z = system.lu().solve(&rhs).ok_or(Error::SingularKkt)?;

    let q_predicted = lower_bound_q(instance.l_f(), instance.mu_f(), l_a, mu_a);
    let mut ratios = Vec::new();
    let mut max_rel_deviation: f64 = 0.0;
    for k in 0..dim / 2 {
        let ratio = z[k + 1] / z[k];
        max_rel_deviation = max_rel_deviation.max((ratio - q_predicted).abs() / q_predicted);
        ratios.push(ratio);
    }
    Ok(DualDecayReport {
        q_predicted,
        ratios,
        max_rel_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hats_satisfy_their_identities() {
        let (l_hat, mu_hat) = lower_bound_hats(2.0, 1.0).unwrap();
        assert_relative_eq!(l_hat, 0.25);
        assert_relative_eq!(mu_hat, 1.5);
        assert_relative_eq!(2.0 * l_hat + mu_hat, 2.0);
        assert_relative_eq!(mu_hat * 2.0 / 3.0, 1.0);
        assert!(lower_bound_hats(1.5, 1.0).is_err());
        assert!(lower_bound_hats(1.0, 2.0).is_err());
    }

    #[test]
    fn decay_ratio_closed_form() {
        // w = 1/4 makes the quadratic x^2 - 2.5 x + 1, whose small root
        // is exactly one half.
        assert_relative_eq!(lower_bound_q(2.0, 1.0, 2.0, 1.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn block_eigenvalue_identities_hold_exactly() {
        let inst = gen_lower_bound_instance(6, 2.0, 1.0, 2.0, 1.0, 8).unwrap();
        let mut max_block = 0.0f64;
        for node in inst.nodes() {
            let gram = node.a() * node.a().transpose();
            let eigs = crate::graphs::symmetric_eigenvalues_sorted(&gram);
            max_block = max_block.max(*eigs.last().unwrap());
        }
        assert_relative_eq!(max_block, 2.0, epsilon = 1e-10);

        let mut s = DMatrix::zeros(8, 8);
        for node in inst.nodes() {
            s += node.a() * node.a().transpose();
        }
        s /= inst.n() as f64;
        let eigs = crate::graphs::symmetric_eigenvalues_sorted(&s);
        let smallest = eigs[0];
        assert!(
            smallest >= 1.0 - 1e-10,
            "averaged moment fell below the guaranteed floor: {smallest}"
        );
    }

    #[test]
    fn dual_solution_decays_at_the_predicted_ratio() {
        let inst = gen_lower_bound_instance(6, 2.0, 1.0, 2.0, 1.0, 8).unwrap();
        let report = verify_lower_bound_decay(&inst, 2.0, 1.0).unwrap();
        assert_relative_eq!(report.q_predicted, 0.5, epsilon = 1e-15);
        assert!(
            report.max_rel_deviation < 0.05,
            "decay ratios {:?} stray from {}",
            report.ratios,
            report.q_predicted
        );
    }

    #[test]
    fn rejects_bad_shapes_and_orderings() {
        assert!(gen_lower_bound_instance(4, 2.0, 1.0, 2.0, 1.0, 8).is_err());
        assert!(gen_lower_bound_instance(0, 2.0, 1.0, 2.0, 1.0, 8).is_err());
        assert!(gen_lower_bound_instance(6, 2.0, 1.0, 2.0, 1.0, 1).is_err());
        assert!(gen_lower_bound_instance(6, 1.0, 2.0, 2.0, 1.0, 8).is_err());
    }

    #[test]
    fn groups_get_the_documented_curvatures() {
        let inst = gen_lower_bound_instance(6, 4.0, 1.0, 8.0, 1.0, 4).unwrap();
        assert_relative_eq!(inst.mu_f(), 1.0);
        assert_relative_eq!(inst.l_f(), 4.0);
        let (q, c) = inst.node(2).objective().quadratic_parts().unwrap();
        assert_relative_eq!(q[(0, 0)], 1.0);
        let (l_hat, _) = lower_bound_hats(8.0, 1.0).unwrap();
        assert_relative_eq!(c[0], -l_hat.sqrt() / 2.0);
        assert_relative_eq!(inst.node(0).objective().quadratic_parts().unwrap().0[(0, 0)], 4.0);
    }
}
