//! The four subcommands.
//!
//! Each command returns the process exit code: 0 for success, 1 when a
//! check or run failed in a way the command is designed to report, and
//! errors bubble up to become exit code 2 (usage or IO problems).

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

use coupled_decent::graphs::{laplacian_gossip, make_graph, Topology};
use coupled_decent::oracle::kkt_oracle;
use coupled_decent::problems::{gen_conditioned, save_instance, ProblemInstance};
use coupled_decent::simnet::{LocalityMode, SimNet};
use coupled_decent::solver::{solve, SolveOptions, SolveResult};
use coupled_decent::spectral::{constraint_spectrum, derived_constants};
use coupled_decent::verify::{run_suite, Fault};
use coupled_decent::Error;

use crate::config::{ReferenceChoice, RunConfig, SolverConfig, SweepSpec};

/// Build the instance named by the config, write it as JSON, and print
/// the spectral summary that characterizes its difficulty.
pub fn cmd_generate(config: &RunConfig, out: Option<&Path>, quiet: bool) -> Result<u8> {
    if config.generate.is_none() {
        bail!("generate needs a `generate` spec in the config");
    }
    let inst = config.realize_instance()?;
    let path = output_path(out, config, "instance.json");
    save_instance(&inst, path)
        .with_context(|| format!("cannot write instance {}", path.display()))?;
    if !quiet {
        print_spectral_summary(&inst)?;
        println!("wrote {}", path.display());
    }
    Ok(0)
}

fn print_spectral_summary(inst: &ProblemInstance) -> Result<()> {
    let spectrum = constraint_spectrum(&inst.a_blocks())?;
    let gossip = laplacian_gossip(inst.graph())?;
    println!(
        "n = {}, m = {}, total primal dim = {}",
        inst.n(),
        inst.m(),
        inst.total_primal_dim()
    );
    println!(
        "L_f = {:.6e}, mu_f = {:.6e}, kappa_f = {:.3}",
        inst.l_f(),
        inst.mu_f(),
        inst.kappa_f()
    );
    println!(
        "L_A = {:.6e}, mu_A = {:.6e}, kappa_A = {:.3}",
        spectrum.l_a,
        spectrum.mu_a,
        spectrum.kappa_a()
    );
    println!("kappa_W = {:.3}", gossip.kappa_w());
    Ok(())
}

/// Run the solver on the configured instance and write the trace CSV.
pub fn cmd_solve(config: &RunConfig, out: Option<&Path>, quiet: bool) -> Result<u8> {
    let inst = config.realize_instance()?;
    let reference = match config.reference {
        ReferenceChoice::Kkt => Some(kkt_oracle(&inst).context("cannot solve reference system")?),
        ReferenceChoice::None => None,
    };
    let outcome = run_solver(&inst, &config.solver, reference.as_ref());
    let result = match outcome {
        Ok(result) => result,
        Err(Error::NonFiniteIterate { iter }) => {
            eprintln!("solve diverged: iterate became non-finite at iteration {iter}");
            return Ok(1);
        }
        Err(e) => return Err(e.into()),
    };

    let path = output_path(out, config, "trace.csv");
    let mut file = fs::File::create(path)
        .with_context(|| format!("cannot create trace {}", path.display()))?;
    result
        .trace
        .write_csv(&mut file)
        .with_context(|| format!("cannot write trace {}", path.display()))?;

    if !quiet {
        println!("iters = {}, converged = {}", result.iters, result.converged);
        println!(
            "grad_calls = {}, matmul_rounds = {}, comm_rounds = {}",
            result.counters.grad_calls, result.counters.matmul_rounds, result.counters.comm_rounds
        );
        println!(
            "objective = {:.10e}, feas_residual = {:.6e}",
            result.objective, result.feas_residual
        );
        if let Some(dist) = result.trace.records.last().and_then(|r| r.dist_to_opt) {
            println!("dist_to_opt = {dist:.6e}");
        }
        println!("wrote {}", path.display());
    }
    Ok(0)
}

fn run_solver(
    inst: &ProblemInstance,
    solver: &SolverConfig,
    reference: Option<&coupled_decent::oracle::ReferenceSolution>,
) -> coupled_decent::Result<SolveResult> {
    let spectrum = constraint_spectrum(&inst.a_blocks())?;
    let dc = derived_constants(inst.l_f(), inst.mu_f(), &spectrum)?;
    let params = solver
        .build_params(inst, &dc)
        .map_err(|e| Error::InvalidParam(format!("{e:#}")))?;
    let mut net = SimNet::new(inst.graph(), LocalityMode::Enforce)?;
    let options = SolveOptions {
        params,
        limits: solver.limits(),
        reference,
    };
    solve(inst, &dc, &mut net, &options)
}

/// Run the invariant suite and print its pass/fail table.
pub fn cmd_verify(config: &RunConfig, out: Option<&Path>, quiet: bool) -> Result<u8> {
    let fault = config
        .fault
        .map_or(Fault::None, crate::config::FaultChoice::to_fault);
    let results = run_suite(config.seed, fault);
    let passed = results.iter().filter(|r| r.passed).count();

    let mut report = String::new();
    for result in &results {
        let tag = if result.passed { "PASS" } else { "FAIL" };
        report.push_str(&format!("[{tag}] {:<22} {}\n", result.name, result.detail));
    }
    report.push_str(&format!("{passed} of {} checks passed\n", results.len()));

    if let Some(path) = out.map(Path::new).or(config.output.as_deref()) {
        fs::write(path, &report)
            .with_context(|| format!("cannot write report {}", path.display()))?;
    }
    if !quiet {
        print!("{report}");
    }
    Ok(u8::from(passed != results.len()))
}

/// Sweep one condition number and record the cost counters each point
/// needs to reach the target relative error.
pub fn cmd_bench(config: &RunConfig, out: Option<&Path>, quiet: bool) -> Result<u8> {
    let sweep = config
        .sweep
        .as_ref()
        .context("bench needs a `sweep` spec in the config")?;

    let mut csv = format!(
        "{},iters,grad_calls,matmul_rounds,comm_rounds\n",
        sweep.column_name()
    );
    let mut all_converged = true;
    for &value in sweep.values() {
        let inst = sweep_instance(sweep, value, config.seed)?;
        let reference = kkt_oracle(&inst).context("cannot solve reference system")?;
        let result = run_solver(&inst, &config.solver, Some(&reference))
            .with_context(|| format!("sweep point {value} failed"))?;
        if !result.converged {
            eprintln!(
                "sweep point {value} missed the target error within {} iterations",
                result.iters
            );
            all_converged = false;
        }
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            value,
            result.iters,
            result.counters.grad_calls,
            result.counters.matmul_rounds,
            result.counters.comm_rounds
        ));
        if !quiet {
            println!(
                "{} = {}: iters = {}, grad = {}, matmul = {}, comm = {}",
                sweep.column_name(),
                value,
                result.iters,
                result.counters.grad_calls,
                result.counters.matmul_rounds,
                result.counters.comm_rounds
            );
        }
    }

    let path = output_path(out, config, "bench.csv");
    fs::write(path, &csv).with_context(|| format!("cannot write sweep {}", path.display()))?;
    if !quiet {
        println!("wrote {}", path.display());
    }
    Ok(u8::from(!all_converged))
}

fn sweep_instance(sweep: &SweepSpec, value: f64, seed: u64) -> Result<ProblemInstance> {
    match sweep {
        SweepSpec::KappaF { kappa_a, graph, .. } => {
            let graph = graph.build(seed)?;
            gen_conditioned(&graph, value, *kappa_a, seed).context("cannot generate sweep point")
        }
        SweepSpec::KappaA { kappa_f, graph, .. } => {
            let graph = graph.build(seed)?;
            gen_conditioned(&graph, *kappa_f, value, seed).context("cannot generate sweep point")
        }
        SweepSpec::KappaW { kappa_f, kappa_a, .. } => {
            if value.fract() != 0.0 || !(2.0..=100_000.0).contains(&value) {
                bail!("kappa_w sweep values are path lengths; {value} is not a valid node count");
            }
            let graph = make_graph(Topology::Path, value as usize, None, seed)?;
            gen_conditioned(&graph, *kappa_f, *kappa_a, seed).context("cannot generate sweep point")
        }
    }
}

fn output_path<'a>(out: Option<&'a Path>, config: &'a RunConfig, fallback: &'a str) -> &'a Path {
    out.or(config.output.as_deref())
        .unwrap_or_else(|| Path::new(fallback))
}
