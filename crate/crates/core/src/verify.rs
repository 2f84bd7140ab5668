//! Self-check suite: every pillar the solver stands on, re-verified at
//! runtime against independent dense references.
//!
//! [`run_suite`] builds small sampled problems and checks, in order: the
//! gossip spectrum, the compression window, both compressed operators
//! against their dense forms, the lifted gradient against finite
//! differences, both certified spectral windows, locality enforcement,
//! end-to-end convergence against a direct solve, exact cost
//! accounting, and conservation of the gossip blocks' zero sum.
//!
//! A [`Fault`] can be planted to demonstrate that the suite actually
//! catches real defects: an asymmetric gossip weight must trip the
//! gossip and drift checks, an oversized dual step must trip the
//! convergence check.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::chebyshev::{
    eval_scaled_chebyshev, k_chebyshev, mul_wprime, ChebyshevSchedule, COMPRESSION_LOWER,
    COMPRESSION_UPPER,
};
use crate::error::Result;
use crate::graphs::{make_graph, Topology};
use crate::linalg::{BlockVec, LiftedVec};
use crate::oracle::{dense_lifted_operators, dense_lifted_value, finite_diff_grad, kkt_oracle};
use crate::problems::{gen_synthetic_regression, ProblemInstance};
use crate::simnet::{LocalityMode, SimNet};
use crate::solver::{
    expected_counters, grad_g, solve, tuned_params, Limits, SolveOptions, SolverParams,
};
use crate::spectral::{
    constraint_spectrum, derived_constants, verify_coupling_window, verify_curvature_window,
    DerivedConstants, SPECTRAL_TOL_REL,
};

/// A defect planted on purpose, to prove the suite detects it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Run the suite honestly.
    None,
    /// Scale one direction of one gossip weight, breaking symmetry.
    AsymmetricGossip,
    /// Multiply the dual step size by ten, exceeding its stability
    /// margin.
    ThetaTimesTen,
}

/// Outcome of one check.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Observed numbers, or the error that interrupted the check.
    pub detail: String,
}

fn check<F>(name: &str, body: F) -> CheckResult
where
    F: FnOnce() -> Result<(bool, String)>,
{
    match body() {
        Ok((passed, detail)) => CheckResult {
            name: name.to_string(),
            passed,
            detail,
        },
        Err(e) => CheckResult {
            name: name.to_string(),
            passed: false,
            detail: format!("aborted: {e}"),
        },
    }
}

fn faulted_net(inst: &ProblemInstance, fault: Fault) -> Result<SimNet> {
    let mut net = SimNet::new(inst.graph(), LocalityMode::Enforce)?;
    if fault == Fault::AsymmetricGossip {
        net.inject_gossip_asymmetry(1.5)?;
    }
    Ok(net)
}

fn faulted_params(dc: &DerivedConstants, fault: Fault) -> SolverParams {
    let mut params = tuned_params(dc);
    if fault == Fault::ThetaTimesTen {
        params.theta *= 10.0;
    }
    params
}

fn sample_instance(seed: u64) -> Result<ProblemInstance> {
    let graph = make_graph(Topology::Ring, 5, None, 0)?;
    gen_synthetic_regression(&graph, 2, 2, 0.5, seed)
}

fn random_block_vec(rng: &mut ChaCha8Rng, n: usize, width: usize) -> BlockVec {
    BlockVec(
        (0..n)
            .map(|_| {
                DVector::from_iterator(width, (0..width).map(|_| rng.sample::<f64, _>(StandardNormal)))
            })
            .collect(),
    )
}

fn random_lifted(rng: &mut ChaCha8Rng, inst: &ProblemInstance) -> LiftedVec {
    LiftedVec {
        x: BlockVec(
            inst.dims()
                .iter()
                .map(|&d| {
                    DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)))
                })
                .collect(),
        ),
        y: random_block_vec(rng, inst.n(), inst.m()),
    }
}

/// Run every check. `seed` drives all sampled inputs; `fault` optionally
/// plants a defect first.
pub fn run_suite(seed: u64, fault: Fault) -> Vec<CheckResult> {
    let mut results = Vec::new();

    results.push(check("gossip spectrum", || {
        let path3 = make_graph(Topology::Path, 3, None, 0)?;
        let gossip = crate::graphs::laplacian_gossip(&path3)?;
        let eigs = crate::graphs::symmetric_eigenvalues_sorted(gossip.matrix());
        let expected = [0.0, 1.0, 3.0];
        let max_dev = eigs
            .iter()
            .zip(expected)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let er = make_graph(Topology::ErdosRenyi, 12, Some(0.4), seed)?;
        let er_gossip = crate::graphs::laplacian_gossip(&er)?;
        let ok = max_dev <= 1e-12 && er_gossip.lambda_min_plus() > 0.0;
        Ok((
            ok,
            format!(
                "path spectrum deviation {max_dev:.2e}, sampled graph lambda_min_plus {:.3e}",
                er_gossip.lambda_min_plus()
            ),
        ))
    }));

    results.push(check("compression window", || {
        let mut worst_zero = 0.0f64;
        let mut worst_out = 0.0f64;
        for (upper, lower) in [(9.0, 1.0), (400.0, 0.7), (1e6, 2.0)] {
            let s = ChebyshevSchedule::new(upper, lower)?;
            worst_zero = worst_zero.max(eval_scaled_chebyshev(0.0, &s).abs());
            for k in 0..=50 {
                let t = lower + (upper - lower) * (k as f64) / 50.0;
                let p = eval_scaled_chebyshev(t, &s);
                worst_out = worst_out
                    .max((COMPRESSION_LOWER - p).max(0.0))
                    .max((p - COMPRESSION_UPPER).max(0.0));
            }
        }
        Ok((
            worst_zero <= 1e-12 && worst_out <= 1e-12,
            format!("|P(0)| <= {worst_zero:.2e}, window overshoot <= {worst_out:.2e}"),
        ))
    }));

    results.push(check("compressed gossip", || {
        let inst = sample_instance(seed)?;
        let mut net = faulted_net(&inst, fault)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let y = random_block_vec(&mut rng, inst.n(), inst.m());
        let out = mul_wprime(&y, &mut net)?;
        let sum_rel = out.block_sum()?.norm() / (1.0 + out.norm());

        let consensus = BlockVec(vec![DVector::from_element(inst.m(), 1.25); inst.n()]);
        let consensus_out = mul_wprime(&consensus, &mut net)?.norm();

        let cs = constraint_spectrum(&inst.a_blocks())?;
        let dc = derived_constants(inst.l_f(), inst.mu_f(), &cs)?;
        let dense = dense_lifted_operators(&inst, &dc, net.gossip())?;
        let expected = &dense.w_prime * y.to_stacked();
        let dev = (out.to_stacked() - &expected).norm() / (1.0 + expected.norm());

        let ok = sum_rel <= 1e-10 && consensus_out <= 1e-12 && dev <= 1e-8;
        Ok((
            ok,
            format!(
                "block-sum {sum_rel:.2e}, consensus image {consensus_out:.2e}, dense deviation {dev:.2e}"
            ),
        ))
    }));

    results.push(check("coupling operator", || {
        let inst = sample_instance(seed)?;
        let mut net = faulted_net(&inst, fault)?;
        let cs = constraint_spectrum(&inst.a_blocks())?;
        let dc = derived_constants(inst.l_f(), inst.mu_f(), &cs)?;
        let dense = dense_lifted_operators(&inst, &dc, net.gossip())?;
        let particular = dense
            .b_op
            .clone()
            .svd(true, true)
            .solve(&dense.rhs, 0.0)
            .map_err(|e| crate::error::Error::ShapeMismatch(e.to_string()))?;

        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let u = random_lifted(&mut rng, &inst);
            let out = k_chebyshev(&u, &inst, &dc, &mut net)?;
            let expected = &dense.p_btb * (u.to_stacked() - &particular);
            let dev = (out.to_stacked() - &expected).norm() / (1.0 + expected.norm());
            worst = worst.max(dev);
        }
        Ok((worst <= 1e-8, format!("worst dense deviation {worst:.2e}")))
    }));

    results.push(check("lifted gradient", || {
        let inst = sample_instance(seed)?;
        let mut net = faulted_net(&inst, fault)?;
        let cs = constraint_spectrum(&inst.a_blocks())?;
        let dc = derived_constants(inst.l_f(), inst.mu_f(), &cs)?;
        let dense = dense_lifted_operators(&inst, &dc, net.gossip())?;

        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
        let mut worst = 0.0f64;
        for _ in 0..3 {
            let u = random_lifted(&mut rng, &inst);
            let fast = grad_g(&u, &inst, &dc, &mut net)?;
            let fd = finite_diff_grad(
                |v| {
                    let lifted = LiftedVec::from_stacked(inst.dims(), inst.n(), inst.m(), v)?;
                    dense_lifted_value(&inst, &dc, &dense, &lifted.to_stacked())
                },
                &u.to_stacked(),
            )?;
            let dev = (fast.to_stacked() - &fd).norm() / (1.0 + fd.norm());
            worst = worst.max(dev);
        }
        Ok((worst <= 1e-5, format!("worst finite-difference deviation {worst:.2e}")))
    }));

    results.push(check("curvature window", || {
        let inst = sample_instance(seed)?;
        let cs = constraint_spectrum(&inst.a_blocks())?;
        let dc = derived_constants(inst.l_f(), inst.mu_f(), &cs)?;
        let gossip = crate::graphs::laplacian_gossip(inst.graph())?;
        let report = verify_curvature_window(&inst, &dc, &gossip)?;
        Ok((
            report.within(SPECTRAL_TOL_REL),
            format!(
                "observed [{:.6e}, {:.6e}] inside [{:.6e}, {:.6e}]",
                report.observed_min, report.observed_max, report.lower, report.upper
            ),
        ))
    }));

    results.push(check("coupling window", || {
        let inst = sample_instance(seed)?;
        let cs = constraint_spectrum(&inst.a_blocks())?;
        let dc = derived_constants(inst.l_f(), inst.mu_f(), &cs)?;
        let gossip = crate::graphs::laplacian_gossip(inst.graph())?;
        let report = verify_coupling_window(&inst, &dc, &gossip)?;
        Ok((
            report.within(SPECTRAL_TOL_REL),
            format!(
                "observed [{:.6e}, {:.6e}] inside [{:.6e}, {:.6e}]",
                report.observed_min, report.observed_max, report.lower, report.upper
            ),
        ))
    }));

    results.push(check("locality enforcement", || {
        let path3 = make_graph(Topology::Path, 3, None, 0)?;
        let mut strict = SimNet::new(&path3, LocalityMode::Enforce)?;
        strict.put_block(2, "x", DVector::from_element(1, 1.0))?;
        let rejected = strict.read_for(0, 2, "x").is_err();

        let mut audit = SimNet::new(&path3, LocalityMode::AuditOnly)?;
        audit.put_block(2, "x", DVector::from_element(1, 1.0))?;
        let _ = audit.read_for(0, 2, "x")?;
        let recorded = audit.audit_violations() == vec![(0, 2)];
        Ok((
            rejected && recorded,
            format!("strict mode rejected: {rejected}, audit recorded: {recorded}"),
        ))
    }));

    let solve_outcome = check("solver convergence", || {
        let inst = sample_instance(seed)?;
        let mut net = faulted_net(&inst, fault)?;
        let cs = constraint_spectrum(&inst.a_blocks())?;
        let dc = derived_constants(inst.l_f(), inst.mu_f(), &cs)?;
        let reference = kkt_oracle(&inst)?;
        let options = SolveOptions {
            params: faulted_params(&dc, fault),
            limits: Limits {
                max_iters: 10_000,
                tol_dist: 1e-6,
                tol_feas: 1e-6,
            },
            reference: Some(&reference),
        };
        let result = solve(&inst, &dc, &mut net, &options)?;
        let err = result.x.sub(&reference.x).norm() / (1.0 + reference.x.norm());
        Ok((
            result.converged && err <= 1e-6,
            format!("{} iterations, relative error {err:.2e}", result.iters),
        ))
    });
    results.push(solve_outcome);

    results.push(check("cost accounting", || {
        let inst = sample_instance(seed)?;
        let mut net = faulted_net(&inst, fault)?;
        let cs = constraint_spectrum(&inst.a_blocks())?;
        let dc = derived_constants(inst.l_f(), inst.mu_f(), &cs)?;
        let options = SolveOptions {
            params: tuned_params(&dc),
            limits: Limits {
                max_iters: 5,
                tol_dist: 0.0,
                tol_feas: 0.0,
            },
            reference: None,
        };
        let result = solve(&inst, &dc, &mut net, &options)?;
        let expected = expected_counters(&dc, &net, 5)?;
        Ok((
            result.counters == expected,
            format!("spent {:?}, closed form {:?}", result.counters, expected),
        ))
    }));

    results.push(check("gossip drift", || {
        let inst = sample_instance(seed)?;
        let mut net = faulted_net(&inst, fault)?;
        let cs = constraint_spectrum(&inst.a_blocks())?;
        let dc = derived_constants(inst.l_f(), inst.mu_f(), &cs)?;
        let options = SolveOptions {
            params: tuned_params(&dc),
            limits: Limits {
                max_iters: 40,
                tol_dist: 0.0,
                tol_feas: 0.0,
            },
            reference: None,
        };
        let result = solve(&inst, &dc, &mut net, &options)?;
        let worst = result
            .trace
            .records
            .iter()
            .map(|r| r.y_sum_rel)
            .fold(0.0f64, f64::max);
        Ok((worst <= 1e-8, format!("worst relative block-sum drift {worst:.2e}")))
    }));

    results
}
