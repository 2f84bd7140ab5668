//! Run configuration shared by all subcommands.
//!
//! A single JSON file describes a run: where the problem instance comes
//! from (a file or an inline generator), how the solver is parameterized,
//! and what the command-specific extras are (`sweep` for `bench`, `fault`
//! for `verify`). Command-line flags override the seed and output path.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Deserialize;

use coupled_decent::graphs::{make_graph, Graph, Topology};
use coupled_decent::problems::{
    gen_lower_bound_instance, gen_resource_allocation, gen_synthetic_regression, gen_vfl,
    load_instance, parse_libsvm, ProblemInstance,
};
use coupled_decent::solver::{tuned_params, universal_params, Limits, SolverParams};
use coupled_decent::spectral::DerivedConstants;
use coupled_decent::verify::Fault;

/// Parsed contents of the `--config` JSON file.
///
/// Commands that need a problem require exactly one of `instance` and
/// `generate`; the rest of the fields default sensibly so a minimal
/// config (or none at all, for `verify`) works.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Path to an instance JSON file.
    #[serde(default)]
    pub instance: Option<PathBuf>,
    /// Inline generator replacing `instance`.
    #[serde(default)]
    pub generate: Option<GeneratorSpec>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Seed for every random draw in the run.
    #[serde(default)]
    pub seed: u64,
    /// Default output path; `--out` wins over it.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Ground-truth choice for distance reporting.
    #[serde(default)]
    pub reference: ReferenceChoice,
    /// Condition-number sweep, read only by `bench`.
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    /// Planted defect, read only by `verify`.
    #[serde(default)]
    pub fault: Option<FaultChoice>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        Ok(config)
    }

    /// Produce the problem the config names, drawing from `self.seed`.
    pub fn realize_instance(&self) -> Result<ProblemInstance> {
        match (&self.instance, &self.generate) {
            (Some(path), None) => load_instance(path)
                .with_context(|| format!("cannot load instance {}", path.display())),
            (None, Some(spec)) => spec.realize(self.seed),
            (Some(_), Some(_)) => {
                bail!("config must name exactly one of `instance` and `generate`, not both")
            }
            (None, None) => {
                bail!("config must name exactly one of `instance` and `generate`")
            }
        }
    }
}

/// Which communication graph to build.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub topology: Topology,
    pub n: usize,
    /// Edge probability, used by `erdos_renyi` only.
    #[serde(default)]
    pub p: Option<f64>,
}

impl GraphSpec {
    pub fn build(&self, seed: u64) -> Result<Graph> {
        make_graph(self.topology, self.n, self.p, seed).context("cannot build graph")
    }
}

/// Inline instance generator, tagged by `kind`.
#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// Random strongly convex regression blocks with random coupling.
    Synthetic {
        graph: GraphSpec,
        d: usize,
        m: usize,
        theta: f64,
    },
    /// Resource allocation: quadratic pull toward per-node centers,
    /// identity coupling, shared budget.
    Resource {
        graph: GraphSpec,
        dim: usize,
        /// Explicit per-node centers; drawn from the seed when absent.
        #[serde(default)]
        centers: Option<Vec<Vec<f64>>>,
        /// Total budget vector; zero when absent.
        #[serde(default)]
        budget: Option<Vec<f64>>,
    },
    /// Vertical federated ridge regression over a LibSVM feature file.
    Vfl {
        graph: GraphSpec,
        data: PathBuf,
        lambda: f64,
        /// Per-node feature counts; balanced when absent.
        #[serde(default)]
        split: Option<Vec<usize>>,
        /// Cap on the number of parsed rows.
        #[serde(default)]
        max_rows: Option<usize>,
    },
    /// The hard path-graph instance with known dual decay.
    Lowerbound {
        n: usize,
        l_f: f64,
        mu_f: f64,
        l_a: f64,
        mu_a: f64,
        dim: usize,
    },
}

impl GeneratorSpec {
    pub fn realize(&self, seed: u64) -> Result<ProblemInstance> {
        match self {
            GeneratorSpec::Synthetic { graph, d, m, theta } => {
                let graph = graph.build(seed)?;
                gen_synthetic_regression(&graph, *d, *m, *theta, seed)
                    .context("cannot generate synthetic instance")
            }
            GeneratorSpec::Resource {
                graph,
                dim,
                centers,
                budget,
            } => {
                let graph = graph.build(seed)?;
                let centers = match centers {
                    Some(rows) => rows
                        .iter()
                        .map(|row| {
                            if row.len() != *dim {
                                bail!("center has {} entries, expected {dim}", row.len());
                            }
                            Ok(DVector::from_row_slice(row))
                        })
                        .collect::<Result<Vec<_>>>()?,
                    None => draw_centers(graph.n(), *dim, seed),
                };
                let budget = match budget {
                    Some(row) => {
                        if row.len() != *dim {
                            bail!("budget has {} entries, expected {dim}", row.len());
                        }
                        DVector::from_row_slice(row)
                    }
                    None => DVector::zeros(*dim),
                };
                gen_resource_allocation(&graph, &centers, &budget)
                    .context("cannot generate resource allocation instance")
            }
            GeneratorSpec::Vfl {
                graph,
                data,
                lambda,
                split,
                max_rows,
            } => {
                let graph = graph.build(seed)?;
                let text = fs::read_to_string(data)
                    .with_context(|| format!("cannot read feature file {}", data.display()))?;
                let examples = parse_libsvm(&text, *max_rows)
                    .with_context(|| format!("cannot parse feature file {}", data.display()))?;
                let split = match split {
                    Some(s) => s.clone(),
                    None => balanced_split(examples.num_features(), graph.n())?,
                };
                gen_vfl(&examples, *lambda, &graph, &split)
                    .context("cannot generate federated instance")
            }
            GeneratorSpec::Lowerbound {
                n,
                l_f,
                mu_f,
                l_a,
                mu_a,
                dim,
            } => gen_lower_bound_instance(*n, *l_f, *mu_f, *l_a, *mu_a, *dim)
                .context("cannot generate lower-bound instance"),
        }
    }
}

/// Seeded standard-normal centers for the resource generator.
fn draw_centers(n: usize, dim: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut rng)))
        .collect()
}

/// Spread `total` features over `n` nodes as evenly as possible,
/// leftmost nodes taking the remainder.
pub fn balanced_split(total: usize, n: usize) -> Result<Vec<usize>> {
    if total < n {
        bail!("{total} features cannot be split over {n} nodes (each needs at least one)");
    }
    let base = total / n;
    let extra = total % n;
    Ok((0..n).map(|i| base + usize::from(i < extra)).collect())
}

/// How step sizes are chosen before per-field overrides apply.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamChoice {
    /// Closed-form worst-case steps from the objective bounds alone.
    Universal,
    /// Steps from the exact derived curvature of the lifted problem.
    #[default]
    Tuned,
}

/// Solver section of the config.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub params: ParamChoice,
    /// Per-field step overrides, applied after `params`.
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub tol_dist: Option<f64>,
    #[serde(default)]
    pub tol_feas: Option<f64>,
}

impl SolverConfig {
    pub fn build_params(
        &self,
        inst: &ProblemInstance,
        dc: &DerivedConstants,
    ) -> Result<SolverParams> {
        let mut params = match self.params {
            ParamChoice::Universal => universal_params(inst.l_f(), inst.mu_f())?,
            ParamChoice::Tuned => tuned_params(dc),
        };
        if let Some(tau) = self.tau {
            params.tau = tau;
        }
        if let Some(eta) = self.eta {
            params.eta = eta;
        }
        if let Some(theta) = self.theta {
            params.theta = theta;
        }
        if let Some(alpha) = self.alpha {
            params.alpha = alpha;
        }
        params.validate()?;
        Ok(params)
    }

    #[must_use]
    pub fn limits(&self) -> Limits {
        let mut limits = Limits::default();
        if let Some(max_iters) = self.max_iters {
            limits.max_iters = max_iters;
        }
        if let Some(tol_dist) = self.tol_dist {
            limits.tol_dist = tol_dist;
        }
        if let Some(tol_feas) = self.tol_feas {
            limits.tol_feas = tol_feas;
        }
        limits
    }
}

/// Ground truth for distance columns and the tightened stopping rule.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceChoice {
    /// Solve the dense optimality system first and measure against it.
    Kkt,
    #[default]
    None,
}

/// Defect planted into a `verify` run; the suite must catch it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultChoice {
    AsymmetricGossip,
    ThetaTimesTen,
}

impl FaultChoice {
    #[must_use]
    pub fn to_fault(self) -> Fault {
        match self {
            FaultChoice::AsymmetricGossip => Fault::AsymmetricGossip,
            FaultChoice::ThetaTimesTen => Fault::ThetaTimesTen,
        }
    }
}

/// One condition number swept with the other two held fixed.
///
/// `values` are condition numbers for `kappa_f`/`kappa_a` sweeps and
/// path lengths for `kappa_w` (the gossip condition number of a path
/// grows with its length).
#[derive(Debug, Deserialize)]
#[serde(tag = "parameter", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepSpec {
    KappaF {
        values: Vec<f64>,
        #[serde(default = "default_kappa")]
        kappa_a: f64,
        #[serde(default = "default_sweep_graph")]
        graph: GraphSpec,
    },
    KappaA {
        values: Vec<f64>,
        #[serde(default = "default_kappa")]
        kappa_f: f64,
        #[serde(default = "default_sweep_graph")]
        graph: GraphSpec,
    },
    KappaW {
        values: Vec<f64>,
        #[serde(default = "default_kappa")]
        kappa_f: f64,
        #[serde(default = "default_kappa")]
        kappa_a: f64,
    },
}

impl SweepSpec {
    /// Header name of the swept column in the output CSV.
    #[must_use]
    pub fn column_name(&self) -> &'static str {
        match self {
            SweepSpec::KappaF { .. } => "kappa_f",
            SweepSpec::KappaA { .. } => "kappa_a",
            SweepSpec::KappaW { .. } => "kappa_w_path_n",
        }
    }

    #[must_use]
    pub fn values(&self) -> &[f64] {
        match self {
            SweepSpec::KappaF { values, .. }
            | SweepSpec::KappaA { values, .. }
            | SweepSpec::KappaW { values, .. } => values,
        }
    }
}

fn default_kappa() -> f64 {
    4.0
}

fn default_sweep_graph() -> GraphSpec {
    GraphSpec {
        topology: Topology::Ring,
        n: 8,
        p: None,
    }
}
