//! Randomized checks of structural invariants across the public API.
//!
//! Each property pins behavior that must hold for every valid input:
//! exact communication costs, compressed spectra landing in the fixed
//! window, bit-exact persistence, and the derived constants respecting
//! their documented closed-form bounds.

use coupled_decent::chebyshev::{
    coupling_schedule, eval_scaled_chebyshev, gossip_schedule, k_chebyshev, mul_wprime,
    ChebyshevSchedule, COMPRESSION_LOWER, COMPRESSION_UPPER,
};
use coupled_decent::graphs::{laplacian_gossip, make_graph, Graph, Topology};
use coupled_decent::oracle::{dense_lifted_operators, kkt_oracle};
use coupled_decent::problems::{
    gen_synthetic_regression, load_instance, lower_bound_hats, lower_bound_q, parse_libsvm,
    save_instance, ProblemInstance,
};
use coupled_decent::simnet::{LocalityMode, RoundCounters, SimNet};
use coupled_decent::solver::{
    expected_counters, solve, tuned_params, ConvergenceTrace, Limits, SolveOptions, TraceRecord,
};
use coupled_decent::spectral::{constraint_spectrum, derived_constants, ConstraintSpectrum};
use coupled_decent::{BlockVec, LiftedVec};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Strategy over every topology the generator knows, sized small enough
/// that eigendecompositions stay cheap.
fn graph_strategy() -> impl Strategy<Value = Graph> {
    (0usize..5, 3usize..=10, 0.2f64..0.8, any::<u64>()).prop_map(|(kind, n, p, seed)| {
        let (topology, p) = match kind {
            0 => (Topology::Path, None),
            1 => (Topology::Ring, None),
            2 => (Topology::Star, None),
            3 => (Topology::Complete, None),
            _ => (Topology::ErdosRenyi, Some(p)),
        };
        make_graph(topology, n, p, seed).expect("all sampled parameters are valid")
    })
}

/// Log-uniform positive scalar, `10^lo ..= 10^hi`.
fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo..hi).prop_map(|e| 10f64.powf(e))
}

/// Deterministically filled blocks with the given widths.
fn filled_blocks(widths: &[usize], seed: u64) -> BlockVec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BlockVec(
        widths
            .iter()
            .map(|&w| DVector::from_fn(w, |_, _| rng.sample(StandardNormal)))
            .collect(),
    )
}

/// A small regression instance on the given graph.
fn small_instance(graph: &Graph, d: usize, m: usize, theta: f64, seed: u64) -> ProblemInstance {
    gen_synthetic_regression(graph, d, m, theta, seed).expect("sampled parameters are valid")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The derived constants respect their closed-form bounds, and the
    /// derivation is a pure function of its inputs.
    #[test]
    fn derived_constants_respect_their_bounds(
        mu_f in log_uniform(-4.0, 3.0),
        factor_f in log_uniform(0.0, 5.0),
        mu_a in log_uniform(-4.0, 3.0),
        factor_a in log_uniform(0.0, 5.0),
    ) {
        let spectrum = ConstraintSpectrum { l_a: mu_a * factor_a, mu_a };
        let dc = derived_constants(mu_f * factor_f, mu_f, &spectrum).unwrap();

        prop_assert!(dc.kappa_b <= 10.0 * dc.kappa_a + 8.0);
        prop_assert_eq!(dc.mu_b.to_bits(), (dc.mu_a / 2.0).to_bits());
        prop_assert!(dc.kappa_g <= dc.kappa_g_bound * (1.0 + 1e-12));
        prop_assert!(dc.l_g >= dc.mu_g);
        prop_assert!(dc.r > 0.0 && dc.gamma > 0.0);
        prop_assert!(dc.mu_g > 0.0 && dc.l_b > dc.mu_b);

        let again = derived_constants(mu_f * factor_f, mu_f, &spectrum).unwrap();
        prop_assert_eq!(format!("{dc:?}"), format!("{again:?}"));
    }

    /// The schedule degree is the ceiled square root of the bracket
    /// ratio, the polynomial vanishes at zero exactly, and the bracket
    /// maps into the window.
    #[test]
    fn schedules_compress_the_bracket(
        lower in log_uniform(-6.0, 3.0),
        ratio in log_uniform(0.0, 6.0),
    ) {
        let upper = lower * ratio;
        let s = ChebyshevSchedule::new(upper, lower).unwrap();

        let achieved = upper / lower;
        let slop = 1e-9 * (achieved + 1.0);
        let deg = s.degree as f64;
        prop_assert!(deg * deg + slop >= achieved, "degree too small");
        prop_assert!((deg - 1.0) * (deg - 1.0) < achieved + slop, "degree too large");

        prop_assert_eq!(eval_scaled_chebyshev(0.0, &s).to_bits(), 0.0f64.to_bits());
        for k in 0..=40 {
            let t = lower + (upper - lower) * (k as f64) / 40.0;
            let p = eval_scaled_chebyshev(t, &s);
            prop_assert!(
                (COMPRESSION_LOWER - 1e-9..=COMPRESSION_UPPER + 1e-9).contains(&p),
                "P({}) = {} escapes the window for [{}, {}]", t, p, lower, upper
            );
        }
    }

    /// The two hat constants reproduce the target spectrum edges through
    /// their defining identities, and the decay base stays in `(0, 1)`.
    #[test]
    fn lower_bound_constants_satisfy_their_identities(
        mu_a in log_uniform(-3.0, 3.0),
        factor in 1.6f64..200.0,
        kappa_f in 1.0f64..1e6,
    ) {
        let l_a = mu_a * factor;
        let (l_hat, mu_hat) = lower_bound_hats(l_a, mu_a).unwrap();
        prop_assert!(l_hat > 0.0 && mu_hat > 0.0);
        prop_assert!((2.0 * l_hat + mu_hat - l_a).abs() <= 1e-14 * l_a);
        prop_assert!((2.0 / 3.0 * mu_hat - mu_a).abs() <= 1e-14 * mu_a);

        let q = lower_bound_q(kappa_f, 1.0, l_a, mu_a);
        prop_assert!(q > 0.0 && q < 1.0, "decay base {} outside (0, 1)", q);
    }

    /// Stacking a block iterate and splitting it back is the identity,
    /// bit for bit, for arbitrary payloads.
    #[test]
    fn stacking_round_trips_bitwise(
        widths in prop::collection::vec(1usize..=4, 1..=6),
        values in prop::collection::vec(any::<f64>(), 24),
        m in 1usize..=3,
    ) {
        let total: usize = widths.iter().sum();
        let blocks = BlockVec(
            widths
                .iter()
                .scan(0usize, |at, &w| {
                    let b = DVector::from_fn(w, |r, _| values[(*at + r) % values.len()]);
                    *at += w;
                    Some(b)
                })
                .collect(),
        );
        let back = BlockVec::from_stacked(&widths, &blocks.to_stacked()).unwrap();
        prop_assert_eq!(blocks.num_blocks(), back.num_blocks());
        for (a, b) in blocks.0.iter().zip(&back.0) {
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }

        let n = widths.len();
        let mut lifted = LiftedVec::zeros(&widths, n, m);
        lifted.x = blocks;
        lifted.y = BlockVec(
            (0..n)
                .map(|i| DVector::from_fn(m, |r, _| values[(total + i * m + r) % values.len()]))
                .collect(),
        );
        let back = LiftedVec::from_stacked(&widths, n, m, &lifted.to_stacked()).unwrap();
        for (a, b) in lifted.x.0.iter().chain(&lifted.y.0).zip(back.x.0.iter().chain(&back.y.0)) {
            for (x, y) in a.iter().zip(b.iter()) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Every generated graph is connected, its edge list is normalized,
    /// and its gossip matrix is a symmetric Laplacian: off-diagonal
    /// support exactly on the edges, rows summing to zero exactly, one
    /// kernel direction, and a certified positive spectral gap.
    #[test]
    fn gossip_matrices_are_laplacians(graph in graph_strategy()) {
        prop_assert!(graph.is_connected());
        for window in graph.edges().windows(2) {
            prop_assert!(window[0] < window[1], "edge list not strictly sorted");
        }
        for &(i, j) in graph.edges() {
            prop_assert!(i < j && j < graph.n());
        }

        let gossip = laplacian_gossip(&graph).unwrap();
        let w = gossip.matrix();
        let n = graph.n();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(w[(i, j)].to_bits(), w[(j, i)].to_bits());
                if i != j {
                    let coupled = w[(i, j)] != 0.0;
                    prop_assert_eq!(coupled, graph.has_edge(i, j));
                }
            }
        }

        let ones = DVector::from_element(n, 1.0);
        prop_assert_eq!((w * &ones).norm().to_bits(), 0.0f64.to_bits());

        prop_assert!(gossip.lambda_min_plus() > 0.0);
        prop_assert!(gossip.lambda_max() >= gossip.lambda_min_plus());
        let eig = w.clone().symmetric_eigen();
        let kernel = eig
            .eigenvalues
            .iter()
            .filter(|ev| ev.abs() <= 1e-9 * gossip.lambda_max())
            .count();
        prop_assert_eq!(kernel, 1, "connected graph must have a one-dimensional kernel");
    }

    /// Graph generation is a pure function of its parameters.
    #[test]
    fn graph_generation_is_deterministic(
        kind in 0usize..5,
        n in 3usize..=10,
        p in 0.2f64..0.8,
        seed in any::<u64>(),
    ) {
        let (topology, p) = match kind {
            0 => (Topology::Path, None),
            1 => (Topology::Ring, None),
            2 => (Topology::Star, None),
            3 => (Topology::Complete, None),
            _ => (Topology::ErdosRenyi, Some(p)),
        };
        let a = make_graph(topology, n, p, seed).unwrap();
        let b = make_graph(topology, n, p, seed).unwrap();
        prop_assert_eq!(a.edges(), b.edges());

        let ga = laplacian_gossip(&a).unwrap();
        let gb = laplacian_gossip(&b).unwrap();
        for (x, y) in ga.matrix().iter().zip(gb.matrix().iter()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
        prop_assert_eq!(ga.lambda_max().to_bits(), gb.lambda_max().to_bits());
        prop_assert_eq!(ga.lambda_min_plus().to_bits(), gb.lambda_min_plus().to_bits());
    }

    /// One communication round applies exactly the gossip matrix.
    #[test]
    fn gossip_rounds_apply_the_matrix(
        graph in graph_strategy(),
        width in 1usize..=3,
        seed in any::<u64>(),
    ) {
        let mut net = SimNet::new(&graph, LocalityMode::Enforce).unwrap();
        let n = graph.n();
        let v = filled_blocks(&vec![width; n], seed);

        net.reset_counters();
        let out = net.gossip_apply(&v).unwrap();
        prop_assert_eq!(
            net.counters(),
            RoundCounters { grad_calls: 0, matmul_rounds: 0, comm_rounds: 1 }
        );

        let w = net.gossip().matrix().clone();
        let mut scale = 0.0f64;
        for i in 0..n {
            let mut expect = DVector::zeros(width);
            for j in 0..n {
                expect.axpy(w[(i, j)], &v.0[j], 1.0);
            }
            scale = scale.max(expect.norm());
            prop_assert!(
                (&out.0[i] - &expect).norm() <= 1e-12 * (1.0 + scale),
                "node {} gossip output disagrees with the dense matrix", i
            );
        }
    }

    /// The compressed gossip operator costs exactly its degree in
    /// communication rounds, kills consensus input, and produces output
    /// whose blocks sum to zero.
    #[test]
    fn compressed_gossip_costs_and_geometry(
        graph in graph_strategy(),
        width in 1usize..=3,
        seed in any::<u64>(),
    ) {
        let mut net = SimNet::new(&graph, LocalityMode::Enforce).unwrap();
        let n = graph.n();
        let degree = gossip_schedule(&net).unwrap().degree as u64;

        let y = filled_blocks(&vec![width; n], seed);
        net.reset_counters();
        let out = mul_wprime(&y, &mut net).unwrap();
        prop_assert_eq!(
            net.counters(),
            RoundCounters { grad_calls: 0, matmul_rounds: 0, comm_rounds: degree }
        );
        let drift = out.block_sum().unwrap().norm();
        prop_assert!(
            drift <= 1e-10 * (1.0 + y.norm()),
            "output blocks sum to {} instead of zero", drift
        );

        let shared = DVector::from_fn(width, |r, _| 1.0 + r as f64);
        let consensus = BlockVec(vec![shared; n]);
        let image = mul_wprime(&consensus, &mut net).unwrap();
        prop_assert!(
            image.norm() <= 1e-10 * (1.0 + consensus.norm()),
            "consensus input not annihilated: {}", image.norm()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    /// The streaming compressed gossip operator agrees with its dense
    /// eigendecomposition reference on random graphs and inputs.
    #[test]
    fn compressed_gossip_matches_the_dense_route(
        kind in 0usize..5,
        n in 3usize..=7,
        p in 0.3f64..0.8,
        m in 1usize..=2,
        seeds in any::<[u64; 2]>(),
    ) {
        let (topology, p) = match kind {
            0 => (Topology::Path, None),
            1 => (Topology::Ring, None),
            2 => (Topology::Star, None),
            3 => (Topology::Complete, None),
            _ => (Topology::ErdosRenyi, Some(p)),
        };
        let graph = make_graph(topology, n, p, seeds[0]).unwrap();
        let inst = small_instance(&graph, 2, m, 0.3, seeds[0]);
        let cs = constraint_spectrum(&inst.a_blocks()).unwrap();
        let dc = derived_constants(inst.l_f(), inst.mu_f(), &cs).unwrap();
        let gossip = laplacian_gossip(&graph).unwrap();
        let dense = dense_lifted_operators(&inst, &dc, &gossip).unwrap();
        let mut net = SimNet::new(&graph, LocalityMode::Enforce).unwrap();

        let y = filled_blocks(&vec![m; n], seeds[1]);
        let fast = mul_wprime(&y, &mut net).unwrap().to_stacked();
        let slow = &dense.w_prime * y.to_stacked();
        prop_assert!(
            (&fast - &slow).norm() <= 1e-8 * (1.0 + slow.norm()),
            "fast and dense compressed gossip disagree"
        );
    }

    /// One compressed coupling application costs exactly its documented
    /// multiplication and communication budget, and nothing else.
    #[test]
    fn compressed_coupling_costs_exact_rounds(
        graph in graph_strategy(),
        m in 1usize..=2,
        seed in any::<u64>(),
    ) {
        let inst = small_instance(&graph, 2, m, 0.3, seed);
        let cs = constraint_spectrum(&inst.a_blocks()).unwrap();
        let dc = derived_constants(inst.l_f(), inst.mu_f(), &cs).unwrap();
        let mut net = SimNet::new(&graph, LocalityMode::Enforce).unwrap();
        let deg_b = coupling_schedule(&dc).unwrap().degree as u64;
        let deg_w = gossip_schedule(&net).unwrap().degree as u64;

        let mut u = LiftedVec::zeros(inst.dims(), inst.n(), inst.m());
        u.x = filled_blocks(inst.dims(), seed ^ 1);
        u.y = filled_blocks(&vec![inst.m(); inst.n()], seed ^ 2);

        net.reset_counters();
        let _ = k_chebyshev(&u, &inst, &dc, &mut net).unwrap();
        prop_assert_eq!(
            net.counters(),
            RoundCounters {
                grad_calls: 0,
                matmul_rounds: 2 * deg_b,
                comm_rounds: 2 * deg_b * deg_w,
            }
        );
    }

    /// Saving an instance and loading it back preserves every matrix
    /// entry bit for bit, and generation itself is deterministic.
    #[test]
    fn instance_persistence_is_bit_exact(
        graph in graph_strategy(),
        d in 1usize..=3,
        m in 1usize..=3,
        theta in 0.05f64..1.0,
        seed in any::<u64>(),
    ) {
        let inst = small_instance(&graph, d, m, theta, seed);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("instance.json");
        save_instance(&inst, &path).unwrap();
        let loaded = load_instance(&path).unwrap();

        prop_assert_eq!(inst.graph(), loaded.graph());
        prop_assert_eq!(inst.dims(), loaded.dims());
        for (a, b) in inst.nodes().iter().zip(loaded.nodes()) {
            for (x, y) in a.a().iter().zip(b.a().iter()) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
            for (x, y) in a.b().iter().zip(b.b().iter()) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
            let (qa, ca) = a.objective().quadratic_parts().unwrap();
            let (qb, cb) = b.objective().quadratic_parts().unwrap();
            for (x, y) in qa.iter().zip(qb.iter()) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
            for (x, y) in ca.iter().zip(cb.iter()) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }

        let again = small_instance(&graph, d, m, theta, seed);
        let path2 = dir.path().join("again.json");
        save_instance(&again, &path2).unwrap();
        prop_assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            std::fs::read_to_string(&path2).unwrap()
        );
    }

    /// The direct reference solution is feasible and stationary on
    /// random instances.
    #[test]
    fn reference_solutions_are_feasible_and_stationary(
        graph in graph_strategy(),
        d in 1usize..=3,
        m in 1usize..=2,
        theta in 0.05f64..1.0,
        seed in any::<u64>(),
    ) {
        let inst = small_instance(&graph, d, m, theta, seed);
        let sol = kkt_oracle(&inst).unwrap();
        prop_assert!(
            inst.feas_residual(&sol.x).unwrap() <= 1e-9 * (1.0 + inst.sum_b().norm())
        );
        for (i, node) in inst.nodes().iter().enumerate() {
            let grad = node.objective().grad(&sol.x.0[i]).unwrap();
            let pullback = node.a().transpose() * &sol.multiplier;
            prop_assert!(
                (&grad + &pullback).norm() <= 1e-8 * (1.0 + grad.norm()),
                "node {} violates stationarity", i
            );
        }
    }

    /// Generated instances always admit a feasible point, and the
    /// instance-wide curvature constants are the extremes of the
    /// per-node ones.
    #[test]
    fn generated_instances_are_feasible_and_consistent(
        graph in graph_strategy(),
        d in 1usize..=3,
        m in 1usize..=3,
        theta in 0.05f64..1.0,
        seed in any::<u64>(),
    ) {
        let inst = small_instance(&graph, d, m, theta, seed);
        let concat = inst.row_concat_a();
        let sum_b = inst.sum_b();
        let svd = concat.clone().svd(true, true);
        let z = svd.solve(&sum_b, 1e-12).expect("least squares");
        prop_assert!(
            (&concat * &z - &sum_b).norm() <= 1e-8 * (1.0 + sum_b.norm()),
            "offsets escape the range of the constraint blocks"
        );

        let l_max = inst
            .nodes()
            .iter()
            .map(|nd| nd.objective().l_local())
            .fold(f64::NEG_INFINITY, f64::max);
        let mu_min = inst
            .nodes()
            .iter()
            .map(|nd| nd.objective().mu_local())
            .fold(f64::INFINITY, f64::min);
        prop_assert_eq!(inst.l_f().to_bits(), l_max.to_bits());
        prop_assert_eq!(inst.mu_f().to_bits(), mu_min.to_bits());
        prop_assert!(inst.kappa_f() >= 1.0 - 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// Every solver iteration consumes exactly the closed-form budget,
    /// both in the final counters and in every trace row.
    #[test]
    fn solver_counters_match_the_closed_form(
        ring in prop::bool::ANY,
        iters in 1usize..=3,
        seed in any::<u64>(),
    ) {
        let topology = if ring { Topology::Ring } else { Topology::Path };
        let graph = make_graph(topology, 3, None, 0).unwrap();
        let inst = small_instance(&graph, 1, 1, 0.5, seed);
        let cs = constraint_spectrum(&inst.a_blocks()).unwrap();
        let dc = derived_constants(inst.l_f(), inst.mu_f(), &cs).unwrap();
        let mut net = SimNet::new(&graph, LocalityMode::Enforce).unwrap();

        let options = SolveOptions {
            params: tuned_params(&dc),
            limits: Limits { max_iters: iters, tol_dist: 0.0, tol_feas: 0.0 },
            reference: None,
        };
        let result = solve(&inst, &dc, &mut net, &options).unwrap();
        prop_assert_eq!(result.iters, iters);
        prop_assert!(!result.converged);
        prop_assert_eq!(
            result.counters,
            expected_counters(&dc, &net, iters as u64).unwrap()
        );
        for record in &result.trace.records {
            let at = expected_counters(&dc, &net, record.iter as u64).unwrap();
            prop_assert_eq!(record.grad_calls, at.grad_calls);
            prop_assert_eq!(record.matmul_rounds, at.matmul_rounds);
            prop_assert_eq!(record.comm_rounds, at.comm_rounds);
        }
    }
}

/// Finite doubles, including both zeros and extreme magnitudes.
fn finite_f64() -> impl Strategy<Value = f64> {
    prop_oneof![
        Just(0.0f64),
        Just(-0.0f64),
        -1.0f64..1.0,
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Sparse example text round-trips: parsing reproduces labels,
    /// indices, and values bit for bit, honors the row cap, and reports
    /// the largest feature index seen.
    #[test]
    fn sparse_example_text_round_trips(
        rows in prop::collection::vec(
            (
                -100.0f64..100.0,
                prop::collection::btree_set(1usize..=8, 1..=4),
                prop::collection::vec(-10.0f64..10.0, 4),
            ),
            1..=5,
        ),
        cap in 1usize..=5,
        noise in prop::bool::ANY,
    ) {
        let mut text = String::new();
        if noise {
            text.push_str("# leading comment\n\n");
        }
        let mut max_index = 0usize;
        for (label, indices, values) in &rows {
            text.push_str(&format!("{label}"));
            for (k, &idx) in indices.iter().enumerate() {
                text.push_str(&format!(" {idx}:{}", values[k]));
                max_index = max_index.max(idx);
            }
            text.push('\n');
            if noise {
                text.push_str("# between examples\n");
            }
        }

        let parsed = parse_libsvm(&text, None).unwrap();
        prop_assert_eq!(parsed.num_examples(), rows.len());
        prop_assert_eq!(parsed.num_features(), max_index);
        for (ex, (label, indices, values)) in parsed.examples().iter().zip(&rows) {
            prop_assert_eq!(ex.label.to_bits(), label.to_bits());
            prop_assert_eq!(ex.features.len(), indices.len());
            for ((got_i, got_v), (&want_i, want_v)) in
                ex.features.iter().zip(indices.iter().zip(values))
            {
                prop_assert_eq!(*got_i, want_i);
                prop_assert_eq!(got_v.to_bits(), want_v.to_bits());
            }
        }

        let capped = parse_libsvm(&text, Some(cap)).unwrap();
        prop_assert_eq!(capped.num_examples(), cap.min(rows.len()));
    }

    /// Trace CSV output parses back to the exact records that were
    /// written: integers verbatim, floats bit for bit.
    #[test]
    fn trace_csv_round_trips_bitwise(
        rows in prop::collection::vec(
            (
                any::<u64>(),
                any::<u64>(),
                any::<u64>(),
                finite_f64(),
                finite_f64(),
                prop::option::of(finite_f64()),
            ),
            1..=12,
        ),
    ) {
        let trace = ConvergenceTrace {
            records: rows
                .iter()
                .enumerate()
                .map(|(i, &(g, mm, cm, obj, feas, dist))| TraceRecord {
                    iter: i,
                    grad_calls: g,
                    matmul_rounds: mm,
                    comm_rounds: cm,
                    objective: obj,
                    feas_residual: feas,
                    dist_to_opt: dist,
                    y_sum_rel: 0.0,
                })
                .collect(),
        };
        let csv = trace.to_csv_string().unwrap();
        let mut lines = csv.lines();
        let with_dist = rows.iter().any(|r| r.5.is_some());
        let header = lines.next().unwrap();
        if with_dist {
            prop_assert_eq!(
                header,
                "iter,grad_calls,matmul_rounds,comm_rounds,objective,feas_residual,dist_to_opt"
            );
        } else {
            prop_assert_eq!(
                header,
                "iter,grad_calls,matmul_rounds,comm_rounds,objective,feas_residual"
            );
        }

        for (record, line) in trace.records.iter().zip(lines) {
            let fields: Vec<&str> = line.split(',').collect();
            prop_assert_eq!(fields.len(), if with_dist { 7 } else { 6 });
            prop_assert_eq!(fields[0].parse::<usize>().unwrap(), record.iter);
            prop_assert_eq!(fields[1].parse::<u64>().unwrap(), record.grad_calls);
            prop_assert_eq!(fields[2].parse::<u64>().unwrap(), record.matmul_rounds);
            prop_assert_eq!(fields[3].parse::<u64>().unwrap(), record.comm_rounds);
            prop_assert_eq!(
                fields[4].parse::<f64>().unwrap().to_bits(),
                record.objective.to_bits()
            );
            prop_assert_eq!(
                fields[5].parse::<f64>().unwrap().to_bits(),
                record.feas_residual.to_bits()
            );
            if with_dist {
                match record.dist_to_opt {
                    Some(d) => prop_assert_eq!(
                        fields[6].parse::<f64>().unwrap().to_bits(),
                        d.to_bits()
                    ),
                    None => prop_assert_eq!(fields[6], ""),
                }
            }
        }
    }
}
