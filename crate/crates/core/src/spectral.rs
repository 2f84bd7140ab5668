//! Spectral constants of an instance and dense certification of the
//! operator windows the solver relies on.
//!
//! Three layers of constants feed the solver:
//!
//! 1. raw constraint spectrum: `l_a` is the largest block eigenvalue
//!    `max_i lambda_max(A_i A_i')` and `mu_a` the smallest nonzero
//!    eigenvalue of the averaged moment `(1/n) sum_i A_i A_i'`;
//! 2. the fixed compression window `[11/15, 19/15]` that the Chebyshev
//!    iteration maps every bracketed spectrum into;
//! 3. derived constants of the lifted problem: penalty weight `r`,
//!    gossip weight `gamma`, curvature window `[mu_g, l_g]`, and the
//!    coupling-operator window `[mu_b, l_b]`.
//!
//! The formulas here are cheap closed forms. [`verify_curvature_window`]
//! and [`verify_coupling_window`] re-derive the windows the expensive
//! way, through dense eigendecompositions of the actual lifted
//! operators, and report how the observed extremes sit inside the
//! certified brackets.

use nalgebra::DMatrix;

use crate::chebyshev::{COMPRESSION_LOWER, COMPRESSION_UPPER};
use crate::error::{Error, Result};
use crate::graphs::GossipMatrix;
use crate::oracle::dense_lifted_operators;
use crate::problems::ProblemInstance;

/// Relative tolerance for the dense window certifications.
pub const SPECTRAL_TOL_REL: f64 = 1e-8;

/// Relative threshold under which an eigenvalue counts as kernel.
const KERNEL_TOL_REL: f64 = 1e-9;

/// Raw spectrum of the coupling blocks.
#[derive(Clone, Copy, Debug)]
pub struct ConstraintSpectrum {
    /// Largest per-block eigenvalue `max_i lambda_max(A_i A_i')`.
    pub l_a: f64,
    /// Smallest nonzero eigenvalue of `(1/n) sum_i A_i A_i'`.
    pub mu_a: f64,
}

impl ConstraintSpectrum {
    /// Constraint condition number `l_a / mu_a`.
    #[must_use]
    pub fn kappa_a(&self) -> f64 {
        self.l_a / self.mu_a
    }
}

/// Compute the raw constraint spectrum of a block list.
///
/// Fails with [`Error::DegenerateConstraints`] when every block is zero,
/// since then no constraint conditioning exists.
pub fn constraint_spectrum(blocks: &[DMatrix<f64>]) -> Result<ConstraintSpectrum> {
    if blocks.is_empty() {
        return Err(Error::InvalidParam("no constraint blocks".into()));
    }
    let m = blocks[0].nrows();
    if blocks.iter().any(|a| a.nrows() != m) {
        return Err(Error::ShapeMismatch(
            "constraint blocks have differing row counts".into(),
        ));
    }
    let mut l_a = 0.0f64;
    let mut moment = DMatrix::zeros(m, m);
    for a in blocks {
        let gram = a * a.transpose();
        let eigs = crate::graphs::symmetric_eigenvalues_sorted(&gram);
        l_a = l_a.max(*eigs.last().unwrap());
        moment += gram;
    }
    moment /= blocks.len() as f64;
    let eigs = crate::graphs::symmetric_eigenvalues_sorted(&moment);
    let top = *eigs.last().unwrap();
    let zero_tol = KERNEL_TOL_REL * top.max(f64::MIN_POSITIVE);
    let mu_a = eigs.iter().copied().find(|&ev| ev > zero_tol);
    match mu_a {
        Some(mu_a) => Ok(ConstraintSpectrum { l_a, mu_a }),
        None => Err(Error::DegenerateConstraints),
    }
}

/// Every constant of the lifted reformulation the solver needs.
///
/// The lifted problem minimizes `F(x) + (r/2) ||A x + gamma W' y - b||^2`
/// subject to `A x + gamma W' y = b`, where `W'` is the compressed
/// gossip operator. All fields are closed forms of `(l_f, mu_f)` and the
/// raw constraint spectrum; the compression window edges are fixed.
#[derive(Clone, Copy, Debug)]
pub struct DerivedConstants {
    /// Global objective smoothness.
    pub l_f: f64,
    /// Global objective strong convexity.
    pub mu_f: f64,
    /// Objective condition number.
    pub kappa_f: f64,
    /// Largest per-block constraint eigenvalue.
    pub l_a: f64,
    /// Smallest nonzero eigenvalue of the averaged constraint moment.
    pub mu_a: f64,
    /// Constraint condition number.
    pub kappa_a: f64,
    /// Penalty weight `mu_f / (2 l_a)` of the lifted objective.
    pub r: f64,
    /// Gossip weight: `gamma^2 = (mu_a + l_a) / mu_wp`.
    pub gamma: f64,
    /// Upper edge of the squared compression window, `(19/15)^2`.
    pub l_wp: f64,
    /// Lower edge of the squared compression window, `(11/15)^2`.
    pub mu_wp: f64,
    /// Upper edge of the compression window, `19/15`.
    pub l_k: f64,
    /// Lower edge of the compression window, `11/15`.
    pub mu_k: f64,
    /// Window condition number, `19/11`.
    pub kappa_k: f64,
    /// Strong convexity of the lifted objective.
    pub mu_g: f64,
    /// Smoothness of the lifted objective.
    pub l_g: f64,
    /// Exact lifted condition number `l_g / mu_g`.
    pub kappa_g: f64,
    /// Closed-form bound `4 max(1 + kappa_f, 8)` on `kappa_g`.
    pub kappa_g_bound: f64,
    /// Lower edge of the lifted coupling operator's nonzero spectrum.
    pub mu_b: f64,
    /// Upper edge of the lifted coupling operator's spectrum.
    pub l_b: f64,
    /// Coupling condition number `l_b / mu_b`.
    pub kappa_b: f64,
}

/// Derive every lifted constant from the objective constants and the raw
/// constraint spectrum.
pub fn derived_constants(
    l_f: f64,
    mu_f: f64,
    spectrum: &ConstraintSpectrum,
) -> Result<DerivedConstants> {
    if !(mu_f > 0.0) || !(l_f >= mu_f) || !l_f.is_finite() {
        return Err(Error::InvalidParam(format!(
            "objective constants need 0 < mu_f <= l_f, got mu_f = {mu_f}, l_f = {l_f}"
        )));
    }
    let (l_a, mu_a) = (spectrum.l_a, spectrum.mu_a);
    if !(mu_a > 0.0) || !(l_a >= mu_a) || !l_a.is_finite() {
        return Err(Error::InvalidParam(format!(
            "constraint spectrum needs 0 < mu_a <= l_a, got mu_a = {mu_a}, l_a = {l_a}"
        )));
    }
    let l_wp = COMPRESSION_UPPER * COMPRESSION_UPPER;
    let mu_wp = COMPRESSION_LOWER * COMPRESSION_LOWER;
    let window_ratio = l_wp / mu_wp;

    let kappa_f = l_f / mu_f;
    let r = mu_f / (2.0 * l_a);
    let gamma = ((mu_a + l_a) / mu_wp).sqrt();
    let mu_g = mu_f * 0.5f64.min((mu_a + l_a) / (4.0 * l_a));
    let l_g = (l_f + mu_f).max(mu_f * ((mu_a + l_a) / l_a) * window_ratio);
    let mu_b = mu_a / 2.0;
    let l_b = l_a + (l_a + mu_a) * window_ratio;

    Ok(DerivedConstants {
        l_f,
        mu_f,
        kappa_f,
        l_a,
        mu_a,
        kappa_a: l_a / mu_a,
        r,
        gamma,
        l_wp,
        mu_wp,
        l_k: COMPRESSION_UPPER,
        mu_k: COMPRESSION_LOWER,
        kappa_k: COMPRESSION_UPPER / COMPRESSION_LOWER,
        mu_g,
        l_g,
        kappa_g: l_g / mu_g,
        kappa_g_bound: 4.0 * (1.0 + kappa_f).max(8.0),
        mu_b,
        l_b,
        kappa_b: l_b / mu_b,
    })
}

/// Observed spectral extremes of an operator against its certified
/// window.
#[derive(Clone, Copy, Debug)]
pub struct WindowReport {
    /// Smallest observed (nonzero, where applicable) eigenvalue.
    pub observed_min: f64,
    /// Largest observed eigenvalue.
    pub observed_max: f64,
    /// Certified lower edge.
    pub lower: f64,
    /// Certified upper edge.
    pub upper: f64,
}

impl WindowReport {
    /// Whether the observed extremes sit inside the certified window up
    /// to a relative tolerance.
    #[must_use]
    pub fn within(&self, rel_tol: f64) -> bool {
        self.observed_min >= self.lower * (1.0 - rel_tol)
            && self.observed_max <= self.upper * (1.0 + rel_tol)
    }
}

/// Orthonormal basis of the all-ones complement in `R^n`: column `k`
/// (1-based) is `(1, ..., 1, -k, 0, ..., 0) / sqrt(k (k + 1))` with `k`
/// leading ones.
pub fn ones_complement_basis(n: usize) -> DMatrix<f64> {
    let mut u = DMatrix::zeros(n, n.saturating_sub(1));
    for k in 1..n {
        let scale = 1.0 / ((k * (k + 1)) as f64).sqrt();
        for row in 0..k {
            u[(row, k - 1)] = scale;
        }
        u[(k, k - 1)] = -(k as f64) * scale;
    }
    u
}

/// Basis of the subspace the solver's iterates live in: all of the
/// primal space, and only the zero-sum part of the lifted gossip space.
fn restricted_basis(inst: &ProblemInstance) -> DMatrix<f64> {
    let d = inst.total_primal_dim();
    let n = inst.n();
    let m = inst.m();
    let u = ones_complement_basis(n);
    let cols = d + (n - 1) * m;
    let mut basis = DMatrix::zeros(d + n * m, cols);
    for i in 0..d {
        basis[(i, i)] = 1.0;
    }
    for bi in 0..n {
        for bj in 0..n - 1 {
            let val = u[(bi, bj)];
            if val != 0.0 {
                for k in 0..m {
                    basis[(d + bi * m + k, d + bj * m + k)] = val;
                }
            }
        }
    }
    basis
}

/// Certify the curvature window of the lifted objective.
///
/// Builds the dense Hessian of `F(x) + (r/2) ||A x + gamma W' y - b||^2`,
/// restricts it to the subspace the iterates live in, and compares its
/// extreme eigenvalues against `[mu_g, l_g]`. Requires every cost to be
/// an explicit quadratic.
pub fn verify_curvature_window(
    inst: &ProblemInstance,
    dc: &DerivedConstants,
    gossip: &GossipMatrix,
) -> Result<WindowReport> {
    if !inst.is_all_quadratic() {
        return Err(Error::InvalidParam(
            "curvature certification needs explicit quadratic costs".into(),
        ));
    }
    let dense = dense_lifted_operators(inst, dc, gossip)?;
    let d = inst.total_primal_dim();
    let total = d + inst.n() * inst.m();

    let mut hessian = dense.b_op.transpose() * &dense.b_op * dc.r;
    let mut at = 0;
    for node in inst.nodes() {
        let (q, _) = node.objective().quadratic_parts().expect("checked above");
        let w = q.nrows();
        let mut block = hessian.view_mut((at, at), (w, w));
        block += q;
        at += w;
    }
    debug_assert_eq!(hessian.nrows(), total);

    let basis = restricted_basis(inst);
    let restricted = basis.transpose() * hessian * &basis;
    let eigs = crate::graphs::symmetric_eigenvalues_sorted(&restricted);
    Ok(WindowReport {
        observed_min: eigs[0],
        observed_max: *eigs.last().unwrap(),
        lower: dc.mu_g,
        upper: dc.l_g,
    })
}

/// Certify the spectral window of the lifted coupling operator.
///
/// Builds the dense `[A, gamma W']` operator, computes the eigenvalues
/// of its Gram matrix, flushes the kernel, and compares the surviving
/// extremes against `[mu_b, l_b]`.
pub fn verify_coupling_window(
    inst: &ProblemInstance,
    dc: &DerivedConstants,
    gossip: &GossipMatrix,
) -> Result<WindowReport> {
    let dense = dense_lifted_operators(inst, dc, gossip)?;
    let gram = &dense.b_op * dense.b_op.transpose();
    let eigs = crate::graphs::symmetric_eigenvalues_sorted(&gram);
    let top = *eigs.last().unwrap();
    let zero_tol = KERNEL_TOL_REL * top.max(f64::MIN_POSITIVE);
    let nonzero: Vec<f64> = eigs.into_iter().filter(|&ev| ev > zero_tol).collect();
    if nonzero.is_empty() {
        return Err(Error::DegenerateConstraints);
    }
    Ok(WindowReport {
        observed_min: nonzero[0],
        observed_max: *nonzero.last().unwrap(),
        lower: dc.mu_b,
        upper: dc.l_b,
    })
}
