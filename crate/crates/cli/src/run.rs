use std::fs;
use std::path::PathBuf;

use daccgd::optimizer::{run_daccgd, run_inexact_gd, AlgoParams, GdParams, RunOptions, RunTrace};

use crate::config::{ExperimentConfig, Method};
use crate::error::CliError;
use crate::output::{add_run_meta, experiment_meta, write_meta, write_trace, Meta};
use crate::plot::{emit_plot, Series};
use crate::setup::{prepare, Experiment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OutputOptions {
    pub plot: bool,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub dir: PathBuf,
    pub method: Method,
    pub trace: RunTrace,
    pub meta: Meta,
    /// The other method's trace when `algorithm.compare` is set.
    pub comparison: Option<(Method, RunTrace)>,
}

/// Gossip rounds per step: the config override or the derived `T`.
pub fn rounds(cfg: &ExperimentConfig, exp: &Experiment) -> usize {
    cfg.algorithm.rounds.unwrap_or(exp.theory.rounds)
}

/// Step budget: the config value, or `N` for the accelerated method and the
/// plain gradient descent count `κ_l log(L_l ‖x0 − x*‖² / 2ε)` for the
/// baseline.
pub fn max_outer(cfg: &ExperimentConfig, exp: &Experiment, method: Method) -> usize {
    if let Some(m) = cfg.algorithm.max_outer {
        return m;
    }
    let t = &exp.theory;
    match method {
        Method::Daccgd => t.outer_iterations,
        Method::InexactGd => {
            let c = &t.constants;
            let raw = c.kappa_l() * (c.l_l * t.dist0 * t.dist0 / (2.0 * t.epsilon)).ln();
            (raw.ceil().max(1.0) as usize).max(t.outer_iterations)
        }
    }
}

pub fn execute(cfg: &ExperimentConfig, exp: &Experiment, method: Method) -> Result<RunTrace, CliError> {
    let mut options = RunOptions::new(max_outer(cfg, exp, method));
    if !cfg.algorithm.early_exit {
        options = options.without_early_exit();
    }
    let t = &exp.theory;
    let trace = match method {
        Method::Daccgd => {
            let params = AlgoParams::new(t.l, t.mu, rounds(cfg, exp), t.delta_prime, t.epsilon)?;
            run_daccgd(&exp.problem, &exp.seq, &params, &exp.x0, &exp.solution, options)?
        }
        Method::InexactGd => {
            let gd = GdParams {
                gamma: cfg.algorithm.gamma.unwrap_or(1.0 / t.constants.l_l),
                rounds: rounds(cfg, exp),
                epsilon: t.epsilon,
            };
            run_inexact_gd(&exp.problem, &exp.seq, &gd, &exp.x0, &exp.solution, options)?
        }
    };
    let last = trace.last();
    log::info!(
        "{}: {} steps, {} rounds, f_gap {:.3e}",
        method.name(),
        last.iter,
        last.comm_rounds,
        last.f_gap
    );
    Ok(trace)
}

fn trace_file(method: Method, primary: bool) -> String {
    if primary {
        "trace.csv".into()
    } else {
        format!("trace_{}.csv", method.name())
    }
}

/// Runs the configured method (and its comparison) and writes `trace.csv`,
/// `meta.json` and optionally `convergence.svg` into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out: OutputOptions) -> Result<RunResult, CliError> {
    let exp = prepare(cfg)?;
    run_prepared(cfg, &exp, out)
}

pub fn run_prepared(cfg: &ExperimentConfig, exp: &Experiment, out: OutputOptions) -> Result<RunResult, CliError> {
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir)?;
    let method = cfg.algorithm.method;
    let trace = execute(cfg, exp, method)?;
    write_trace(&dir.join(trace_file(method, true)), &trace)?;
    let mut meta = experiment_meta(exp);
    meta.insert("seed".into(), cfg.seed.into());
    add_run_meta(&mut meta, method.name(), rounds(cfg, exp), max_outer(cfg, exp, method), &trace);

    let comparison = if cfg.algorithm.compare {
        let other = match method {
            Method::Daccgd => Method::InexactGd,
            Method::InexactGd => Method::Daccgd,
        };
        let t = execute(cfg, exp, other)?;
        write_trace(&dir.join(trace_file(other, false)), &t)?;
        meta.insert("comparison_method".into(), other.name().into());
        meta.insert("comparison_grad_evals".into(), t.last().grad_evals.into());
        meta.insert("comparison_final_f_gap".into(), t.last().f_gap.into());
        Some((other, t))
    } else {
        None
    };
    write_meta(&dir.join("meta.json"), &meta)?;

    if out.plot {
        let mut series = vec![Series::from_trace(method.name(), &trace)];
        if let Some((m, t)) = &comparison {
            series.push(Series::from_trace(m.name(), t));
        }
        emit_plot(&series, &plot_title(exp), &dir.join("convergence.svg"))?;
    }
    Ok(RunResult {
        dir,
        method,
        trace,
        meta,
        comparison,
    })
}

pub fn plot_title(exp: &Experiment) -> String {
    format!(
        "n = {}, d = {}, kappa_g = {:.3}",
        exp.problem.n(),
        exp.problem.dim(),
        exp.theory.constants.kappa_g()
    )
}
