//! Shared setup for the criterion benches: standard instances and their
//! derived state, built once per benchmark.

use coupled_decent::graphs::{make_graph, Topology};
use coupled_decent::problems::{gen_synthetic_regression, ProblemInstance};
use coupled_decent::simnet::{LocalityMode, SimNet};
use coupled_decent::spectral::{constraint_spectrum, derived_constants, DerivedConstants};

/// A ready-to-run benchmark subject.
pub struct BenchSetup {
    pub inst: ProblemInstance,
    pub dc: DerivedConstants,
    pub net: SimNet,
}

/// Random ring instance with `n` nodes, per-node width `d_i`, and
/// constraint width `m`.
#[must_use]
pub fn ring_setup(n: usize, d_i: usize, m: usize, seed: u64) -> BenchSetup {
    let graph = make_graph(Topology::Ring, n, None, 0).expect("ring graph");
    let inst = gen_synthetic_regression(&graph, d_i, m, 0.5, seed).expect("instance");
    let cs = constraint_spectrum(&inst.a_blocks()).expect("spectrum");
    let dc = derived_constants(inst.l_f(), inst.mu_f(), &cs).expect("constants");
    let net = SimNet::new(inst.graph(), LocalityMode::Enforce).expect("network");
    BenchSetup { inst, dc, net }
}
