//! Experiment configuration, read from TOML.
//!
//! ```toml
//! seed = 1
//! output_dir = "out/synthetic"
//!
//! [problem]
//! kind = "synthetic"          # synthetic | logistic | least-squares
//! n = 20
//! d = 10
//! kappa_g = 100.0
//!
//! [graph]
//! kind = "geometric"          # complete | ring | path | star | geometric
//! radius = 0.5                # | random | per-step | tau-connected
//!
//! [algorithm]
//! method = "daccgd"           # daccgd | inexact-gd
//! epsilon = 1e-6
//! rounds = 5                  # optional fixed T
//! ```
//!
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Run,
    Verify,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub graph: GraphConfig,
    #[serde(default)]
    pub algorithm: AlgorithmConfig,
    /// User-supplied upper estimates replacing oracle-derived quantities.
    pub bounds: Option<BoundsConfig>,
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub verify: VerifyConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProblemConfig {
    Synthetic(SyntheticConfig),
    Logistic(DatasetConfig),
    LeastSquares(DatasetConfig),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n: usize,
    pub d: usize,
    pub kappa_g: f64,
    #[serde(default = "one")]
    pub spread: f64,
    #[serde(default)]
    pub noise: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionKind {
    #[default]
    Contiguous,
    Shuffled,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Relative paths resolve against the config file's directory.
    pub dataset: PathBuf,
    pub agents: usize,
    /// L2 weight.
    pub theta: f64,
    #[serde(default)]
    pub partition: PartitionKind,
    /// Defaults to the top-level seed.
    pub partition_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseTopology {
    Complete,
    #[default]
    Ring,
    Path,
    Star,
    Geometric,
    Random,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphConfig {
    Complete {},
    Ring {},
    Path {},
    Star {},
    Geometric {
        radius: f64,
        retries: Option<usize>,
    },
    Random {
        p: f64,
    },
    PerStep {
        p: f64,
        horizon: Option<usize>,
    },
    TauConnected {
        tau: usize,
        #[serde(default)]
        base: BaseTopology,
        p: Option<f64>,
        radius: Option<f64>,
    },
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig::Geometric {
            radius: 0.5,
            retries: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    Daccgd,
    InexactGd,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Daccgd => "daccgd",
            Method::InexactGd => "inexact-gd",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    #[serde(default)]
    pub method: Method,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Fixed gossip rounds per step instead of the derived `T`.
    pub rounds: Option<usize>,
    /// Baseline step size; defaults to `1/L_l`.
    pub gamma: Option<f64>,
    /// Defaults to the derived outer iteration count `N`.
    pub max_outer: Option<usize>,
    #[serde(default = "yes")]
    pub early_exit: bool,
    /// Also run the other method and plot both.
    #[serde(default)]
    pub compare: bool,
    /// Every coordinate of the common starting point.
    #[serde(default)]
    pub x0: f64,
}

fn default_epsilon() -> f64 {
    1e-6
}

fn yes() -> bool {
    true
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        Self {
            method: Method::default(),
            epsilon: default_epsilon(),
            rounds: None,
            gamma: None,
            max_outer: None,
            early_exit: true,
            compare: false,
            x0: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    /// Upper estimate of `‖x0 − x*‖`.
    pub dist0: f64,
    /// Upper estimate of `‖∇F(X*)‖`.
    pub grad_norm_star: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kappa_g: Vec<f64>,
    #[serde(default = "yes")]
    pub parallel: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_test_points")]
    pub test_points: usize,
    #[serde(default = "default_states")]
    pub states: usize,
    /// Outer steps of the checked run; defaults to the derived `N`.
    pub steps: Option<usize>,
}

fn default_test_points() -> usize {
    1000
}

fn default_states() -> usize {
    10
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            test_points: default_test_points(),
            states: default_states(),
            steps: None,
        }
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads, parses and validates a config; dataset paths are resolved
/// against the file's directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = parse_config(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    if let ProblemConfig::Logistic(ds) | ProblemConfig::LeastSquares(ds) = &mut cfg.problem {
        if ds.dataset.is_relative() {
            ds.dataset = base.join(&ds.dataset);
        }
        if !ds.dataset.is_file() {
            return Err(CliError::Config(format!("dataset {} does not exist", ds.dataset.display())));
        }
    }
    Ok(cfg)
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        positive("algorithm.epsilon", self.algorithm.epsilon)?;
        if let Some(g) = self.algorithm.gamma {
            positive("algorithm.gamma", g)?;
        }
        if self.algorithm.rounds == Some(0) {
            return Err(invalid("algorithm.rounds must be at least 1"));
        }
        if !self.algorithm.x0.is_finite() {
            return Err(invalid("algorithm.x0 must be finite"));
        }
        match &self.problem {
            ProblemConfig::Synthetic(s) => {
                if s.n == 0 || s.d == 0 {
                    return Err(invalid("problem.n and problem.d must be at least 1"));
                }
                if !(s.kappa_g >= 1.0 && s.kappa_g.is_finite()) {
                    return Err(invalid(format!("problem.kappa_g must be >= 1, got {}", s.kappa_g)));
                }
                if !(s.spread >= 1.0 && s.spread.is_finite()) {
                    return Err(invalid(format!("problem.spread must be >= 1, got {}", s.spread)));
                }
                if !(s.noise >= 0.0 && s.noise.is_finite()) {
                    return Err(invalid(format!("problem.noise must be >= 0, got {}", s.noise)));
                }
            }
            ProblemConfig::Logistic(ds) | ProblemConfig::LeastSquares(ds) => {
                if ds.agents == 0 {
                    return Err(invalid("problem.agents must be at least 1"));
                }
                positive("problem.theta", ds.theta)?;
            }
        }
        match &self.graph {
            GraphConfig::Geometric { radius, .. } => positive("graph.radius", *radius)?,
            GraphConfig::Random { p } | GraphConfig::PerStep { p, .. } => probability("graph.p", *p)?,
            GraphConfig::TauConnected { tau, p, radius, .. } => {
                if *tau == 0 {
                    return Err(invalid("graph.tau must be at least 1"));
                }
                if let Some(p) = p {
                    probability("graph.p", *p)?;
                }
                if let Some(r) = radius {
                    positive("graph.radius", *r)?;
                }
            }
            GraphConfig::Complete {} | GraphConfig::Ring {} | GraphConfig::Path {} | GraphConfig::Star {} => {}
        }
        if let Some(b) = &self.bounds {
            if !(b.dist0 >= 0.0 && b.grad_norm_star >= 0.0 && b.dist0.is_finite() && b.grad_norm_star.is_finite()) {
                return Err(invalid("bounds.dist0 and bounds.grad_norm_star must be finite and >= 0"));
            }
        }
        if let Some(s) = &self.sweep {
            if s.kappa_g.is_empty() {
                return Err(invalid("sweep.kappa_g must list at least one value"));
            }
            if let Some(k) = s.kappa_g.iter().find(|k| !(**k >= 1.0 && k.is_finite())) {
                return Err(invalid(format!("sweep.kappa_g entries must be >= 1, got {k}")));
            }
        }
        if self.verify.test_points == 0 || self.verify.states == 0 {
            return Err(invalid("verify.test_points and verify.states must be at least 1"));
        }
        Ok(())
    }

    pub fn agents(&self) -> usize {
        match &self.problem {
            ProblemConfig::Synthetic(s) => s.n,
            ProblemConfig::Logistic(ds) | ProblemConfig::LeastSquares(ds) => ds.agents,
        }
    }
}

fn probability(name: &str, p: f64) -> Result<(), CliError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in [0, 1], got {p}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[problem]\nkind = \"synthetic\"\nn = 4\nd = 3\nkappa_g = 10.0\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.mode, Mode::Run);
        assert_eq!(cfg.algorithm.rounds, None);
        assert_eq!(cfg.algorithm.epsilon, 1e-6);
        assert_eq!(cfg.graph, GraphConfig::default());
        assert!(cfg.algorithm.early_exit);
    }

    #[test]
    fn rounds_override() {
        let cfg = parse_config(&format!("{MINIMAL}[algorithm]\nrounds = 5\n")).unwrap();
        assert_eq!(cfg.algorithm.rounds, Some(5));
    }

    #[test]
    fn negative_epsilon_rejected() {
        let err = parse_config(&format!("{MINIMAL}[algorithm]\nepsilon = -1.0\n")).unwrap_err();
        assert!(err.to_string().contains("epsilon"));
    }

    #[test]
    fn unknown_keys_named() {
        let err = parse_config(&format!("{MINIMAL}bogus = 1\n")).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
        let err = parse_config("[problem]\nkind = \"synthetic\"\nn = 4\nd = 3\nkappa_g = 10.0\nwidth = 2\n").unwrap_err();
        assert!(err.to_string().contains("width"), "{err}");
        let err = parse_config(&format!("{MINIMAL}[graph]\nkind = \"ring\"\nradius = 2.0\n")).unwrap_err();
        assert!(err.to_string().contains("radius"), "{err}");
    }

    #[test]
    fn syntax_error_has_line() {
        let err = parse_config("[problem]\nkind = \"synthetic\"\nn = = 4\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn graph_kinds() {
        let cfg = parse_config(&format!("{MINIMAL}[graph]\nkind = \"tau-connected\"\ntau = 2\nbase = \"random\"\np = 0.3\n")).unwrap();
        assert_eq!(
            cfg.graph,
            GraphConfig::TauConnected {
                tau: 2,
                base: BaseTopology::Random,
                p: Some(0.3),
                radius: None
            }
        );
        assert!(parse_config(&format!("{MINIMAL}[graph]\nkind = \"random\"\np = 1.5\n")).is_err());
    }

    #[test]
    fn dataset_problem() {
        let cfg = parse_config(
            "[problem]\nkind = \"logistic\"\ndataset = \"a9a.txt\"\nagents = 20\ntheta = 0.001\npartition = \"shuffled\"\n",
        )
        .unwrap();
        assert_eq!(cfg.agents(), 20);
        assert!(parse_config("[problem]\nkind = \"least-squares\"\ndataset = \"x\"\nagents = 2\ntheta = 0.0\n").is_err());
    }
}
