//! Builds the problem, network and derived parameters of an experiment.

use std::fs::File;
use std::io::BufReader;

use daccgd::graphs::{EdgeSet, GraphSequence, Topology, DEFAULT_GEOMETRIC_RETRIES};
use daccgd::mixing::{estimate_contraction, DEFAULT_HORIZON};
use daccgd::objectives::{
    minimizer_oracle, parse_libsvm, partition_dataset, LocalModel, PartitionScheme, DEFAULT_ORACLE_TOL,
};
use daccgd::{ContractionEstimate, ProblemInstance, Solution, SyntheticQuadratic, TheoryParameters};
use nalgebra::DVector;

use crate::config::{BaseTopology, DatasetConfig, ExperimentConfig, GraphConfig, PartitionKind, ProblemConfig};
use crate::error::CliError;

pub struct Experiment {
    pub problem: ProblemInstance,
    pub seq: GraphSequence,
    pub contraction: ContractionEstimate,
    pub solution: Solution,
    pub x0: DVector<f64>,
    pub theory: TheoryParameters,
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<ProblemInstance, CliError> {
    match &cfg.problem {
        ProblemConfig::Synthetic(s) => Ok(SyntheticQuadratic::new(s.n, s.d, s.kappa_g, cfg.seed)
            .with_spread(s.spread)
            .with_noise(s.noise)
            .generate()?),
        ProblemConfig::Logistic(ds) => dataset_problem(cfg, ds, LocalModel::Logistic { theta: ds.theta }),
        ProblemConfig::LeastSquares(ds) => dataset_problem(cfg, ds, LocalModel::LeastSquares { theta: ds.theta }),
    }
}

fn dataset_problem(cfg: &ExperimentConfig, ds: &DatasetConfig, model: LocalModel) -> Result<ProblemInstance, CliError> {
    let file = File::open(&ds.dataset)
        .map_err(|e| CliError::Config(format!("cannot open dataset {}: {e}", ds.dataset.display())))?;
    let data = parse_libsvm(BufReader::new(file))
        .map_err(|e| CliError::Config(format!("{}: {e}", ds.dataset.display())))?;
    let scheme = match ds.partition {
        PartitionKind::Contiguous => PartitionScheme::Contiguous,
        PartitionKind::Shuffled => PartitionScheme::Shuffled {
            seed: ds.partition_seed.unwrap_or(cfg.seed),
        },
    };
    log::info!("{}: {} rows, {} features", ds.dataset.display(), data.len(), data.dim);
    let locals = partition_dataset(&data, ds.agents, scheme, model)?;
    Ok(ProblemInstance::new(locals)?)
}

/// Sequence plus the `(τ, horizon)` its contraction is measured with.
pub fn build_graph(graph: &GraphConfig, n: usize, seed: u64) -> Result<(GraphSequence, usize, usize), CliError> {
    let fixed = |edges: EdgeSet| Ok((GraphSequence::fixed(edges), 1, DEFAULT_HORIZON));
    match graph {
        GraphConfig::Complete {} => fixed(EdgeSet::complete(n)),
        GraphConfig::Ring {} => fixed(EdgeSet::ring(n)),
        GraphConfig::Path {} => fixed(EdgeSet::path(n)),
        GraphConfig::Star {} => fixed(EdgeSet::star(n)),
        GraphConfig::Geometric { radius, retries } => {
            let retries = retries.unwrap_or(DEFAULT_GEOMETRIC_RETRIES);
            let seq = GraphSequence::random_geometric_with_retries(n, *radius, seed, retries)?;
            Ok((seq, 1, DEFAULT_HORIZON))
        }
        GraphConfig::Random { p } => {
            Ok((GraphSequence::static_topology(Topology::RandomConnected { p: *p }, n, seed)?, 1, DEFAULT_HORIZON))
        }
        GraphConfig::PerStep { p, horizon } => Ok((
            GraphSequence::per_step_connected(n, *p, seed)?,
            1,
            horizon.unwrap_or(DEFAULT_HORIZON),
        )),
        GraphConfig::TauConnected { tau, base, p, radius } => {
            let topology = match base {
                BaseTopology::Complete => Topology::Complete,
                BaseTopology::Ring => Topology::Ring,
                BaseTopology::Path => Topology::Path,
                BaseTopology::Star => Topology::Star,
                BaseTopology::Geometric => Topology::Geometric {
                    radius: radius.unwrap_or(0.5),
                },
                BaseTopology::Random => Topology::RandomConnected { p: p.unwrap_or(0.2) },
            };
            let seq = GraphSequence::tau_connected_random(topology, n, *tau, seed)?;
            Ok((seq, *tau, DEFAULT_HORIZON.max(*tau)))
        }
    }
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Experiment, CliError> {
    let problem = build_problem(cfg)?;
    let (seq, tau, horizon) = build_graph(&cfg.graph, problem.n(), cfg.seed)?;
    log::debug!("edge set at round 0:\n{}", seq.edge_set_at(0).to_adjacency_text());
    let contraction = estimate_contraction(&seq, tau, horizon)?;
    let solution = minimizer_oracle(&problem, DEFAULT_ORACLE_TOL)?;
    let x0 = DVector::from_element(problem.dim(), cfg.algorithm.x0);
    let epsilon = cfg.algorithm.epsilon;
    let theory = match &cfg.bounds {
        Some(b) => TheoryParameters::derive(
            problem.constants(),
            problem.n(),
            epsilon,
            b.dist0,
            b.grad_norm_star,
            contraction,
        )?,
        None => TheoryParameters::from_solution(&problem, &solution, &x0, epsilon, contraction)?,
    };
    log::info!(
        "n={} d={} kappa_g={:.3e} lambda={:.3e} tau={} N={} T={}",
        problem.n(),
        problem.dim(),
        theory.constants.kappa_g(),
        contraction.lambda,
        contraction.tau,
        theory.outer_iterations,
        theory.rounds
    );
    Ok(Experiment {
        problem,
        seq,
        contraction,
        solution,
        x0,
        theory,
    })
}
