//! Chebyshev spectrum compression and the two compressed operators.
//!
//! Both communication (gossip) and the coupling constraint enter the
//! iteration through positive semidefinite operators whose nonzero
//! spectra can be badly spread out. Running a fixed-degree Chebyshev
//! iteration against such an operator is equivalent to applying a scaled
//! Chebyshev polynomial of it: with degree `ceil(sqrt(U / l))`, where
//! `[l, U]` brackets the nonzero spectrum, the polynomial vanishes at
//! zero and maps all of `[l, U]` into the fixed window
//! `[11/15, 19/15]`. The kernel stays put, everything else becomes
//! well-conditioned, and the price is a known, fixed number of operator
//! applications.
//!
//! Two instantiations are used:
//!
//! * [`mul_wprime`] - the compressed gossip operator. One call costs
//!   exactly `schedule.degree` communication rounds.
//! * [`k_chebyshev`] - the compressed coupling-constraint residual map on
//!   lifted iterates. One call costs `degree` multiplication rounds by
//!   the local blocks and by their transposes each, plus two compressed
//!   gossip calls per step.
//!
//! Neither ever materializes the compressed operator; both run the
//! three-term recurrence against the raw operator.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{BlockVec, LiftedVec, VecOps};
use crate::problems::ProblemInstance;
use crate::simnet::{MatDirection, SimNet};
use crate::spectral::DerivedConstants;

/// Upper edge of the compression window: the scaled Chebyshev polynomial
/// maps the bracketed spectrum into `[COMPRESSION_LOWER, COMPRESSION_UPPER]`.
pub const COMPRESSION_UPPER: f64 = 19.0 / 15.0;

/// Lower edge of the compression window.
pub const COMPRESSION_LOWER: f64 = 11.0 / 15.0;

/// Coefficients of one Chebyshev iteration: the spectrum bracket, the
/// derived recurrence constants, and the degree.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChebyshevSchedule {
    /// Upper bound on the operator's nonzero spectrum.
    pub upper: f64,
    /// Positive lower bound on the operator's nonzero spectrum.
    pub lower: f64,
    /// Polynomial degree: `ceil(sqrt(upper / lower))`.
    pub degree: usize,
    /// Recurrence constant `(upper - lower)^2 / 16`.
    pub rho: f64,
    /// Recurrence constant `(upper + lower) / 2`.
    pub nu: f64,
}

impl ChebyshevSchedule {
    /// Build the schedule for an operator whose nonzero spectrum lies in
    /// `[lower, upper]` with `0 < lower <= upper`.
    pub fn new(upper: f64, lower: f64) -> Result<Self> {
        if !(lower > 0.0 && upper >= lower) || !upper.is_finite() {
            return Err(Error::InvalidParam(format!(
                "spectrum bracket needs 0 < lower <= upper, got [{lower}, {upper}]"
            )));
        }
        let degree = (upper / lower).sqrt().ceil() as usize;
        let degree = degree.max(1);
        Ok(ChebyshevSchedule {
            upper,
            lower,
            degree,
            rho: (upper - lower) * (upper - lower) / 16.0,
            nu: (upper + lower) / 2.0,
        })
    }
}

/// Chebyshev polynomial of the first kind, `T_n(x)`.
///
/// Inside `[-1, 1]` the three-term recurrence is stable and is used
/// directly; outside, the recurrence amplifies roundoff and overflows for
/// large `n`, so the hyperbolic closed form is used instead.
fn chebyshev_t(n: usize, x: f64) -> f64 {
    if x.abs() <= 1.0 {
        let (mut prev, mut cur) = (1.0, x);
        if n == 0 {
            return 1.0;
        }
        for _ in 1..n {
            (prev, cur) = (cur, 2.0 * x * cur - prev);
        }
        cur
    } else {
        let sign = if x < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
        sign * (n as f64 * x.abs().acosh()).cosh()
    }
}

/// Evaluate the scaled Chebyshev polynomial the iteration realizes.
///
/// For a schedule over `[l, U]` with degree `n`, this is
///
/// ```text
///   P(t) = 1 - T_n((U + l - 2 t) / (U - l)) / T_n((U + l) / (U - l))
/// ```
///
/// with `P(0) = 0`, and `P(t)` in `[11/15, 19/15]` for `t` in `[l, U]`.
/// A degenerate bracket `l = U` collapses to the single Richardson step
/// `P(t) = t / U`.
#[must_use]
pub fn eval_scaled_chebyshev(t: f64, schedule: &ChebyshevSchedule) -> f64 {
    let (upper, lower) = (schedule.upper, schedule.lower);
    if upper == lower {
        return t / upper;
    }
    let arg = (upper + lower - 2.0 * t) / (upper - lower);
    let arg0 = (upper + lower) / (upper - lower);
    1.0 - chebyshev_t(schedule.degree, arg) / chebyshev_t(schedule.degree, arg0)
}

/// Run the Chebyshev recurrence and return the final inner iterate.
///
/// `apply` must implement `v -> M^T (M v - r)` for the operator `M` and
/// right-hand side `r` the caller has in mind; the schedule must bracket
/// the nonzero spectrum of `M^T M`. If `v0` is the input and `vn` the
/// returned iterate, then `v0 - vn = P(M^T M) (v0 - s)` for any solution
/// `s` of `M s = r`, with `P` as in [`eval_scaled_chebyshev`]. `apply` is
/// invoked exactly `schedule.degree` times.
pub(crate) fn chebyshev_recurrence<V, F>(
    v0: &V,
    mut apply: F,
    schedule: &ChebyshevSchedule,
) -> Result<V>
where
    V: VecOps,
    F: FnMut(&V) -> Result<V>,
{
    let (rho, nu) = (schedule.rho, schedule.nu);
    let mut p = apply(v0)?;
    p.scale_op(-1.0 / nu);
    let mut v = v0.clone();
    v.axpy_op(1.0, &p);
    let mut delta = -nu / 2.0;
    for _ in 1..schedule.degree {
        let beta = rho / delta;
        delta = -(nu + beta);
        let mut next = apply(&v)?;
        next.axpy_op(beta, &p);
        next.scale_op(1.0 / delta);
        p = next;
        v.axpy_op(1.0, &p);
    }
    Ok(v)
}

/// Schedule for the compressed gossip operator of `net`'s gossip matrix.
///
/// The gossip matrix plays the role of `M^T M` for its own square root,
/// so the bracket is `[lambda_min_plus, lambda_max]` and the degree is
/// `ceil(sqrt(kappa_W))`.
pub fn gossip_schedule(net: &SimNet) -> Result<ChebyshevSchedule> {
    ChebyshevSchedule::new(net.gossip().lambda_max(), net.gossip().lambda_min_plus())
}

/// Schedule for the compressed coupling operator, from the certified
/// bracket `[mu_B, L_B]`; the degree is `ceil(sqrt(kappa_B))`.
pub fn coupling_schedule(dc: &DerivedConstants) -> Result<ChebyshevSchedule> {
    ChebyshevSchedule::new(dc.l_b, dc.mu_b)
}

/// Multiply per-node constraint-space blocks by the compressed gossip
/// operator.
///
/// Consumes exactly `ceil(sqrt(kappa_W))` communication rounds on `net`.
/// The output lies in the range of the gossip operator, so its blocks sum
/// to zero; consensus input (all blocks equal) maps to zero.
pub fn mul_wprime(y: &BlockVec, net: &mut SimNet) -> Result<BlockVec> {
    let schedule = gossip_schedule(net)?;
    let vn = chebyshev_recurrence(y, |v| net.gossip_apply(v), &schedule)?;
    Ok(y.sub(&vn))
}

/// Apply the compressed constraint-residual map to a lifted iterate.
///
/// With `B u = A x + gamma * W' y` the lifted constraint operator and `b`
/// the stacked offsets, this computes `K^T (K u - b')`, where `K` is the
/// Chebyshev compression of `B` and `b'` the correspondingly transported
/// offset; the kernel of `B` is preserved and feasible iterates map to
/// zero. Neither `K` nor `b'` is ever formed.
///
/// Consumes exactly `ceil(sqrt(kappa_B))` multiplication rounds by the
/// local blocks and the same number by their transposes, plus
/// `2 * ceil(sqrt(kappa_B)) * ceil(sqrt(kappa_W))` communication rounds.
pub fn k_chebyshev(
    u: &LiftedVec,
    inst: &ProblemInstance,
    dc: &DerivedConstants,
    net: &mut SimNet,
) -> Result<LiftedVec> {
    let schedule = coupling_schedule(dc)?;
    let gamma = dc.gamma;
    let vn = chebyshev_recurrence(
        u,
        |v| {
            // q = A x + gamma * W' y - b, one constraint block per node.
            let mut q = net.matmul_apply(MatDirection::Forward, &v.x, inst)?;
            let wy = mul_wprime(&v.y, net)?;
            q.axpy(gamma, &wy);
            for (qi, node) in q.0.iter_mut().zip(inst.nodes()) {
                *qi -= node.b();
            }
            // Pull q back through the lifted operator's transpose.
            let x_part = net.matmul_apply(MatDirection::Transpose, &q, inst)?;
            let mut y_part = mul_wprime(&q, net)?;
            y_part.scale_mut(gamma);
            Ok(LiftedVec {
                x: x_part,
                y: y_part,
            })
        },
        &schedule,
    )?;
    Ok(u.sub(&vn))
}

/// Dense reference for the compressed gossip operator: apply the scaled
/// polynomial to a dense symmetric PSD matrix through its eigensystem,
/// flushing kernel eigenvalues to exact zero first.
pub(crate) fn apply_polynomial_dense(
    matrix: &nalgebra::DMatrix<f64>,
    schedule: &ChebyshevSchedule,
    zero_tol: f64,
) -> nalgebra::DMatrix<f64> {
    let eig = matrix.clone().symmetric_eigen();
    let mapped: DVector<f64> = eig.eigenvalues.map(|ev| {
        if ev.abs() <= zero_tol {
            0.0
        } else {
            eval_scaled_chebyshev(ev, schedule)
        }
    });
    &eig.eigenvectors * nalgebra::DMatrix::from_diagonal(&mapped) * eig.eigenvectors.transpose()
}
