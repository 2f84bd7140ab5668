//! Dense reference computations.
//!
//! Everything here is deliberately independent of the iterative solver:
//! ground-truth minimizers come from a direct factorization of the
//! stationarity system, and the compressed operators are reproduced by
//! explicitly applying the scaled Chebyshev polynomial to dense
//! matrices. Tests compare the fast path against these references; the
//! two routes share no code beyond the polynomial definition itself.

use nalgebra::{DMatrix, DVector};

use crate::chebyshev::{
    apply_polynomial_dense, coupling_schedule, ChebyshevSchedule, COMPRESSION_UPPER,
};
use crate::error::{Error, Result};
use crate::graphs::GossipMatrix;
use crate::linalg::BlockVec;
use crate::problems::ProblemInstance;
use crate::spectral::DerivedConstants;

/// Relative residual the factored stationarity system must meet.
pub const KKT_RESIDUAL_TOL_REL: f64 = 1e-9;

/// Largest stationarity-system size the dense path will factor.
const MAX_KKT_DIM: usize = 5000;

/// Largest lifted dimension the dense operator builder accepts.
const MAX_DENSE_LIFTED_DIM: usize = 2000;

/// Relative threshold under which an eigenvalue counts as kernel when
/// applying polynomials densely.
const KERNEL_TOL_REL: f64 = 1e-9;

/// Ground-truth minimizer of an instance, from a direct solve.
#[derive(Clone, Debug)]
pub struct ReferenceSolution {
    /// The unique minimizer, split per node.
    pub x: BlockVec,
    /// A multiplier certifying stationarity of the coupling constraint.
    pub multiplier: DVector<f64>,
    /// Objective value at the minimizer.
    pub objective: f64,
}

/// Solve the stationarity system of an all-quadratic instance directly.
///
/// Factors the symmetric indefinite system
///
/// ```text
///   [ diag(Q_i)  Abar' ] [ x ]   [ -c    ]
///   [ Abar       0     ] [ l ] = [ sum b ]
/// ```
///
/// with `Abar = [A_1 ... A_n]`, then verifies the residual against
/// [`KKT_RESIDUAL_TOL_REL`]. The minimizer `x` is unique by strong
/// convexity even when the multiplier is not.
pub fn kkt_oracle(inst: &ProblemInstance) -> Result<ReferenceSolution> {
    if !inst.is_all_quadratic() {
        return Err(Error::InvalidParam(
            "direct reference solve needs explicit quadratic costs".into(),
        ));
    }
    let d = inst.total_primal_dim();
    let m = inst.m();
    let size = d + m;
    if size > MAX_KKT_DIM {
        return Err(Error::DimensionTooLarge(format!(
            "stationarity system is {size}x{size}, limit {MAX_KKT_DIM}"
        )));
    }

    let mut kkt = DMatrix::zeros(size, size);
    let mut rhs = DVector::zeros(size);
    let mut at = 0;
    for node in inst.nodes() {
        let (q, c) = node.objective().quadratic_parts().expect("checked above");
        let w = q.nrows();
        kkt.view_mut((at, at), (w, w)).copy_from(q);
        rhs.rows_mut(at, w).copy_from(&(-c));
        at += w;
    }
    let concat = inst.row_concat_a();
    kkt.view_mut((d, 0), (m, d)).copy_from(&concat);
    kkt.view_mut((0, d), (d, m)).copy_from(&concat.transpose());
    rhs.rows_mut(d, m).copy_from(&inst.sum_b());

    let solution = kkt.clone().lu().solve(&rhs).ok_or(Error::SingularKkt)?;
    let residual = (&kkt * &solution - &rhs).norm();
    if residual > KKT_RESIDUAL_TOL_REL * (1.0 + rhs.norm()) {
        return Err(Error::SingularKkt);
    }

    let x = BlockVec::from_stacked(inst.dims(), &solution.rows(0, d).into_owned())?;
    let multiplier = solution.rows(d, m).into_owned();
    let objective = inst.objective_value(&x)?;
    Ok(ReferenceSolution {
        x,
        multiplier,
        objective,
    })
}

/// Dense forms of the lifted operators, for verification.
#[derive(Clone, Debug)]
pub struct DenseLifted {
    /// Compressed gossip operator on the lifted space, `n m x n m`.
    pub w_prime: DMatrix<f64>,
    /// The lifted constraint operator `[diag(A_i), gamma W']`.
    pub b_op: DMatrix<f64>,
    /// Stacked offsets, the constraint right-hand side.
    pub rhs: DVector<f64>,
    /// The compression polynomial of the coupling operator applied to
    /// `B' B`, kernel flushed to exact zero.
    pub p_btb: DMatrix<f64>,
    /// Principal square root of [`p_btb`](Self::p_btb). Squaring it
    /// recovers the compressed coupling operator, and its kernel
    /// coincides with the kernel of [`b_op`](Self::b_op).
    pub k_op: DMatrix<f64>,
}

/// Principal square root of a symmetric positive semidefinite matrix.
///
/// Eigenvalues at or below `kernel_tol` are flushed to exact zero
/// before the root. That keeps roundoff negatives of order machine
/// epsilon from turning into NaN, and stops the root from amplifying
/// roundoff-sized positives (`sqrt` would lift `1e-15` to `3e-8`,
/// poisoning kernel comparisons).
fn symmetric_sqrt(mat: &DMatrix<f64>, kernel_tol: f64) -> DMatrix<f64> {
    let eig = mat.clone().symmetric_eigen();
    let roots = eig
        .eigenvalues
        .map(|ev| if ev <= kernel_tol { 0.0 } else { ev.sqrt() });
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Build the dense lifted operators of an instance.
///
/// Refuses problems whose lifted dimension exceeds a fixed cap, since
/// everything here is cubic in it.
pub fn dense_lifted_operators(
    inst: &ProblemInstance,
    dc: &DerivedConstants,
    gossip: &GossipMatrix,
) -> Result<DenseLifted> {
    let total = inst.lifted_dim();
    if total > MAX_DENSE_LIFTED_DIM {
        return Err(Error::DimensionTooLarge(format!(
            "lifted dimension {total}, limit {MAX_DENSE_LIFTED_DIM}"
        )));
    }
    if gossip.n() != inst.n() {
        return Err(Error::ShapeMismatch(format!(
            "gossip matrix is over {} nodes but the instance has {}",
            gossip.n(),
            inst.n()
        )));
    }
    let n = inst.n();
    let m = inst.m();
    let d = inst.total_primal_dim();

    let gossip_schedule =
        ChebyshevSchedule::new(gossip.lambda_max(), gossip.lambda_min_plus())?;
    let w_small = apply_polynomial_dense(
        gossip.matrix(),
        &gossip_schedule,
        KERNEL_TOL_REL * gossip.lambda_max(),
    );
    let w_prime = w_small.kronecker(&DMatrix::identity(m, m));

    let mut b_op = DMatrix::zeros(n * m, d + n * m);
    b_op.view_mut((0, 0), (n * m, d))
        .copy_from(&inst.block_diag_a());
    b_op.view_mut((0, d), (n * m, n * m))
        .copy_from(&(&w_prime * dc.gamma));

    let btb = b_op.transpose() * &b_op;
    let p_btb = apply_polynomial_dense(
        &btb,
        &coupling_schedule(dc)?,
        KERNEL_TOL_REL * dc.l_b,
    );

    let k_op = symmetric_sqrt(&p_btb, KERNEL_TOL_REL * COMPRESSION_UPPER);

    Ok(DenseLifted {
        w_prime,
        b_op,
        rhs: inst.stacked_b(),
        p_btb,
        k_op,
    })
}

/// Value of the lifted objective `F(x) + (r/2) ||B u - b||^2` at a
/// stacked lifted point.
pub fn dense_lifted_value(
    inst: &ProblemInstance,
    dc: &DerivedConstants,
    dense: &DenseLifted,
    u: &DVector<f64>,
) -> Result<f64> {
    let d = inst.total_primal_dim();
    if u.len() != inst.lifted_dim() {
        return Err(Error::ShapeMismatch(format!(
            "lifted point has length {}, expected {}",
            u.len(),
            inst.lifted_dim()
        )));
    }
    let x = BlockVec::from_stacked(inst.dims(), &u.rows(0, d).into_owned())?;
    let penalty = (&dense.b_op * u - &dense.rhs).norm_squared();
    Ok(inst.objective_value(&x)? + 0.5 * dc.r * penalty)
}

/// Central finite-difference gradient of `f` at `u`, with step
/// `1e-6 (1 + ||u||)`.
pub fn finite_diff_grad<F>(f: F, u: &DVector<f64>) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<f64>,
{
    let h = 1e-6 * (1.0 + u.norm());
    let mut grad = DVector::zeros(u.len());
    let mut probe = u.clone();
    for k in 0..u.len() {
        probe[k] = u[k] + h;
        let plus = f(&probe)?;
        probe[k] = u[k] - h;
        let minus = f(&probe)?;
        probe[k] = u[k];
        grad[k] = (plus - minus) / (2.0 * h);
    }
    Ok(grad)
}
