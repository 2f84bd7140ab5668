//! End-to-end subcommand tests driving the compiled binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coupled-decent"))
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).unwrap()
}

const SMALL_SYNTHETIC: &str = r#"{
    "generate": {"kind": "synthetic",
                 "graph": {"topology": "ring", "n": 6},
                 "d": 2, "m": 2, "theta": 0.1},
    "solver": {"max_iters": 20000, "tol_dist": 1e-7, "tol_feas": 1e-7},
    "reference": "kkt",
    "seed": 11
}"#;

#[test]
fn generate_writes_instance_and_prints_spectra() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    let out = dir.path().join("inst.json");
    write(&config, SMALL_SYNTHETIC);

    let output = bin()
        .args(["generate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr(&output));

    let text = stdout(&output);
    for needle in ["kappa_f", "kappa_A", "kappa_W", "wrote"] {
        assert!(text.contains(needle), "summary missing {needle}: {text}");
    }

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["n"], 6);
    assert_eq!(json["m"], 2);
    assert_eq!(json["blocks"].as_array().unwrap().len(), 6);
    assert_eq!(json["graph"]["edges"].as_array().unwrap().len(), 6);
}

#[test]
fn generate_rejects_indivisible_lowerbound_node_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    write(
        &config,
        r#"{"generate": {"kind": "lowerbound", "n": 5, "l_f": 2.0, "mu_f": 1.0,
                         "l_a": 2.0, "mu_a": 1.0, "dim": 8}}"#,
    );

    let output = bin()
        .args(["generate", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("multiple of 3"), "{}", stderr(&output));
}

#[test]
fn vfl_instance_constraint_dim_tracks_row_subset() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("feats.txt");
    write(
        &data,
        "1 1:0.5 3:1.0\n-1 2:0.25 4:1.0\n1 1:2.0\n-1 3:0.75 4:0.5\n",
    );
    let config = dir.path().join("run.json");
    write(
        &config,
        &format!(
            r#"{{"generate": {{"kind": "vfl", "graph": {{"topology": "path", "n": 2}},
                 "data": {:?}, "lambda": 0.1, "max_rows": 3}}}}"#,
            data.display()
        ),
    );
    let out = dir.path().join("inst.json");

    let output = bin()
        .args(["generate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr(&output));

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["m"], 3, "constraint dimension must equal the parsed row count");
}

#[test]
fn solve_reaches_the_reference_on_a_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    write(
        &config,
        r#"{"generate": {"kind": "resource",
                         "graph": {"topology": "ring", "n": 4},
                         "dim": 2,
                         "centers": [[1.0, 0.0], [0.0, 2.0], [-1.0, 1.0], [3.0, -1.0]],
                         "budget": [1.0, 1.0]},
            "solver": {"tol_dist": 2e-8, "tol_feas": 1e-8},
            "reference": "kkt"}"#,
    );
    let trace = dir.path().join("trace.csv");

    let output = bin()
        .args(["solve", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&trace)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr(&output));

    let text = stdout(&output);
    assert!(text.contains("converged = true"), "{text}");
    let dist: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("dist_to_opt = "))
        .expect("summary must report dist_to_opt")
        .parse()
        .unwrap();
    assert!(dist <= 1e-6, "dist_to_opt = {dist}");

    let csv = fs::read_to_string(&trace).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "iter,grad_calls,matmul_rounds,comm_rounds,objective,feas_residual,dist_to_opt"
    );
}

#[test]
fn solve_trace_error_decays_after_burn_in() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    write(&config, SMALL_SYNTHETIC);
    let trace = dir.path().join("trace.csv");

    let output = bin()
        .args(["solve", "--quiet", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&trace)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr(&output));

    let csv = fs::read_to_string(&trace).unwrap();
    let dist: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(dist.len() > 20, "trace too short to judge decay");

    // After burn-in the error must decay geometrically: negative fitted
    // slope on a log scale and a large overall drop, even though single
    // steps of an accelerated method may wobble upward.
    let tail = &dist[dist.len() / 2..];
    let logs: Vec<f64> = tail.iter().map(|d| d.ln()).collect();
    let n = logs.len() as f64;
    let mean_x = (n - 1.0) / 2.0;
    let mean_y = logs.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, y) in logs.iter().enumerate() {
        num += (i as f64 - mean_x) * (y - mean_y);
        den += (i as f64 - mean_x).powi(2);
    }
    let slope = num / den;
    assert!(slope < 0.0, "tail log-slope {slope} is not negative");
    assert!(
        tail[tail.len() - 1] < 0.1 * tail[0],
        "tail did not drop: {} -> {}",
        tail[0],
        tail[tail.len() - 1]
    );
}

#[test]
fn solve_missing_instance_exits_two_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    write(&config, r#"{"instance": "does-not-exist.json"}"#);

    let output = bin()
        .args(["solve", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(
        stderr(&output).contains("does-not-exist.json"),
        "{}",
        stderr(&output)
    );
}

#[test]
fn verify_passes_clean_and_exits_zero() {
    let output = bin().arg("verify").output().unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let text = stdout(&output);
    assert_eq!(text.matches("[PASS]").count(), 11, "{text}");
    assert!(text.contains("11 of 11 checks passed"), "{text}");
}

#[test]
fn verify_catches_planted_gossip_asymmetry() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    write(&config, r#"{"fault": "asymmetric_gossip"}"#);

    let output = bin()
        .args(["verify", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let text = stdout(&output);
    let gossip_line = text
        .lines()
        .find(|l| l.contains("compressed gossip"))
        .unwrap();
    assert!(gossip_line.starts_with("[FAIL]"), "{text}");
}

#[test]
fn verify_catches_planted_oversized_dual_step() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    write(&config, r#"{"fault": "theta_times_ten"}"#);

    let output = bin()
        .args(["verify", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let text = stdout(&output);
    let solver_line = text
        .lines()
        .find(|l| l.contains("solver convergence"))
        .unwrap();
    assert!(solver_line.starts_with("[FAIL]"), "{text}");
}

#[test]
fn bench_single_point_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    write(
        &config,
        r#"{"sweep": {"parameter": "kappa_a", "values": [4.0]}, "seed": 3}"#,
    );
    let out = dir.path().join("sweep.csv");

    let output = bin()
        .args(["bench", "--quiet", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", stderr(&output));

    let csv = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2, "{csv}");
    assert_eq!(lines[0], "kappa_a,iters,grad_calls,matmul_rounds,comm_rounds");
    assert_eq!(lines[1].split(',').count(), 5);
}

#[test]
fn seeded_runs_are_bitwise_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    write(&config, SMALL_SYNTHETIC);

    let gen = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let output = bin()
            .args(["generate", "--quiet", "--seed", seed, "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(output.status.success(), "{}", stderr(&output));
        fs::read(&out).unwrap()
    };
    let a = gen("a.json", "11");
    let b = gen("b.json", "11");
    let c = gen("c.json", "12");
    assert_eq!(a, b, "same seed must reproduce the instance bytes");
    assert_ne!(a, c, "different seeds must differ");

    let solve = |name: &str| {
        let out = dir.path().join(name);
        let output = bin()
            .args(["solve", "--quiet", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(output.status.success(), "{}", stderr(&output));
        fs::read(&out).unwrap()
    };
    assert_eq!(
        solve("t1.csv"),
        solve("t2.csv"),
        "same seed must reproduce the trace bytes"
    );
}

#[test]
fn thread_cap_env_is_honored_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    write(&config, SMALL_SYNTHETIC);

    let solve_with = |threads: Option<&str>, name: &str| {
        let out = dir.path().join(name);
        let mut cmd = bin();
        cmd.args(["solve", "--quiet", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out);
        if let Some(t) = threads {
            cmd.env("COUPLED_DECENT_THREADS", t);
        }
        let output = cmd.output().unwrap();
        assert!(output.status.success(), "{}", stderr(&output));
        fs::read(&out).unwrap()
    };
    let auto = solve_with(None, "auto.csv");
    let one = solve_with(Some("1"), "one.csv");
    let zero = solve_with(Some("0"), "zero.csv");
    assert_eq!(auto, one, "thread count must not change the arithmetic");
    assert_eq!(auto, zero, "0 means automatic sizing");

    let output = bin()
        .args(["verify", "--quiet"])
        .env("COUPLED_DECENT_THREADS", "lots")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(
        stderr(&output).contains("COUPLED_DECENT_THREADS"),
        "{}",
        stderr(&output)
    );
}

#[test]
fn quiet_silences_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    write(&config, SMALL_SYNTHETIC);
    let out = dir.path().join("inst.json");

    let output = bin()
        .args(["generate", "--quiet", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(stdout(&output).is_empty(), "{}", stdout(&output));
}
