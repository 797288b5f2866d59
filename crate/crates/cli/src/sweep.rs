//! Condition-number sweeps over synthetic problems.

use std::fmt::Write as _;
use std::fs;

use rayon::prelude::*;

use crate::config::{ExperimentConfig, ProblemConfig};
use crate::error::CliError;
use crate::plot::{emit_plot, Series};
use crate::run::{run_experiment, OutputOptions, RunResult};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub kappa_g: f64,
    pub grad_evals_to_eps: Option<u64>,
    pub comm_rounds_to_eps: Option<u64>,
    pub outer_iterations: u64,
    pub rounds: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub points: Vec<SweepPoint>,
    /// Least-squares slope of `log grad_evals_to_eps` against `log κ_g`
    /// over the points that reached `ε`.
    pub slope: Option<f64>,
}

pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx)
}

fn kappa_dir(kappa: f64) -> String {
    format!("kappa_{kappa}")
}

pub fn summary_csv(s: &SweepSummary) -> String {
    let opt = |v: Option<u64>| v.map(|v| v.to_string()).unwrap_or_default();
    let mut out = String::from("kappa_g,grad_evals_to_eps,comm_rounds_to_eps,N,T\n");
    for p in &s.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.kappa_g,
            opt(p.grad_evals_to_eps),
            opt(p.comm_rounds_to_eps),
            p.outer_iterations,
            p.rounds
        );
    }
    out
}

/// One run per `κ_g` in `sweep.kappa_g`, each in `<output_dir>/kappa_<κ>/`,
/// plus `summary.csv`, `sweep.json` and a combined plot at the top level.
pub fn run_sweep(cfg: &ExperimentConfig, out: OutputOptions) -> Result<SweepSummary, CliError> {
    let ProblemConfig::Synthetic(base) = &cfg.problem else {
        return Err(CliError::Config("sweep needs a synthetic problem".into()));
    };
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep mode needs a [sweep] table".into()))?;
    let configs: Vec<ExperimentConfig> = sweep
        .kappa_g
        .iter()
        .map(|&kappa| {
            let mut c = cfg.clone();
            let mut problem = base.clone();
            problem.kappa_g = kappa;
            c.problem = ProblemConfig::Synthetic(problem);
            c.output_dir = cfg.output_dir.join(kappa_dir(kappa));
            c.sweep = None;
            c
        })
        .collect();
    let results: Vec<Result<RunResult, CliError>> = if sweep.parallel {
        configs.par_iter().map(|c| run_experiment(c, out)).collect()
    } else {
        configs.iter().map(|c| run_experiment(c, out)).collect()
    };
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let eps = cfg.algorithm.epsilon;
    let points: Vec<SweepPoint> = sweep
        .kappa_g
        .iter()
        .zip(&results)
        .map(|(&kappa_g, r)| {
            let hit = r.trace.first_reaching(eps);
            SweepPoint {
                kappa_g,
                grad_evals_to_eps: hit.map(|h| h.grad_evals),
                comm_rounds_to_eps: hit.map(|h| h.comm_rounds),
                outer_iterations: r.meta["N"].as_u64().unwrap_or(0),
                rounds: r.meta["T"].as_u64().unwrap_or(0),
            }
        })
        .collect();
    let fit: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.grad_evals_to_eps.filter(|&g| g > 0).map(|g| (p.kappa_g, g as f64)))
        .collect();
    let summary = SweepSummary {
        slope: log_log_slope(&fit),
        points,
    };
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join("summary.csv"), summary_csv(&summary))?;
    let json = serde_json::json!({
        "epsilon": eps,
        "kappa_g": sweep.kappa_g,
        "slope_grad_evals_vs_kappa_g": summary.slope,
    });
    fs::write(
        cfg.output_dir.join("sweep.json"),
        format!("{}\n", serde_json::to_string_pretty(&json).expect("plain values serialize")),
    )?;
    if out.plot {
        let series: Vec<Series> = results
            .iter()
            .zip(&sweep.kappa_g)
            .map(|(r, k)| Series::from_trace(format!("kappa_g = {k}"), &r.trace))
            .collect();
        emit_plot(&series, "condition number sweep", &cfg.output_dir.join("convergence.svg"))?;
    }
    if let Some(s) = summary.slope {
        log::info!("log-log slope of gradient evaluations against kappa_g: {s:.3}");
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<_> = [10.0, 100.0, 1000.0].iter().map(|&k: &f64| (k, 3.0 * k.sqrt())).collect();
        assert!((log_log_slope(&pts).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(log_log_slope(&pts[..1]), None);
    }

    #[test]
    fn summary_leaves_misses_blank() {
        let s = SweepSummary {
            points: vec![SweepPoint {
                kappa_g: 10.0,
                grad_evals_to_eps: None,
                comm_rounds_to_eps: None,
                outer_iterations: 5,
                rounds: 2,
            }],
            slope: None,
        };
        assert_eq!(summary_csv(&s), "kappa_g,grad_evals_to_eps,comm_rounds_to_eps,N,T\n10,,,5,2\n");
    }
}
