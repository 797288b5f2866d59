//! Runs every numerical check on the configured instance.

use std::fs;

use daccgd::mixing::{metropolis_weights, verify_mixing};
use daccgd::optimizer::{run_daccgd, AlgoParams, RunOptions};
use daccgd::theory::{
    ball_points, check_consensus_maintenance, check_contraction, check_lemma2, check_lemma3_bound,
    check_lemma4_sufficiency, check_model_inequality,
};
use daccgd::{CheckEntry, CheckReport, DistributedState};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{add_run_meta, experiment_meta, write_meta, write_trace};
use crate::setup::{prepare, Experiment};

const MIXING_TOL: f64 = 1e-12;
const MAX_WINDOWS: usize = 50;

fn mixing_entry(exp: &Experiment, windows: usize) -> CheckEntry {
    let mut entry = CheckEntry::new("mixing_doubly_stochastic", 0.0);
    for k in 0..windows {
        let r = verify_mixing(&metropolis_weights(&exp.seq.edge_set_at(k)), MIXING_TOL);
        let worst_sum = r.max_row_deviation.max(r.max_col_deviation);
        let sparsity = if r.off_edge_nonzeros == 0 { 0.0 } else { -1.0 };
        entry.record((MIXING_TOL - worst_sum).min(r.min_entry + MIXING_TOL).min(sparsity));
    }
    entry
}

fn random_states(exp: &Experiment, count: usize, rng: &mut ChaCha8Rng) -> Vec<DistributedState> {
    let (n, d) = (exp.problem.n(), exp.problem.dim());
    let scale = exp.theory.dist0.max(1.0);
    (0..count)
        .map(|_| {
            let spread = scale * rng.random::<f64>();
            DistributedState::new(DMatrix::from_fn(n, d, |_, j| {
                exp.solution.x[j] + spread * rng.sample::<f64, _>(StandardNormal)
            }))
        })
        .collect()
}

pub fn verification_report(cfg: &ExperimentConfig, exp: &Experiment) -> Result<(CheckReport, daccgd::RunTrace), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let t = &exp.theory;
    let windows = exp.seq.period().unwrap_or(MAX_WINDOWS).min(MAX_WINDOWS);
    let mut report = CheckReport::new();
    report.push(mixing_entry(exp, windows));

    let states = random_states(exp, cfg.verify.states, &mut rng);
    report.extend(check_contraction(&exp.seq, t.tau, t.lambda, windows, &states));
    report.extend(check_lemma2(t.l, t.mu, t.outer_iterations.max(1000)));

    let mut model = CheckReport::new();
    for x in &states {
        let x_bar = x.mean();
        let radius = 10.0 * exp.solution.distance_sq(&x_bar).sqrt().max(1e-3);
        let ys = ball_points(&x_bar, radius, cfg.verify.test_points, &mut rng);
        let r = check_model_inequality(&exp.problem, x, &ys, None)?;
        if model.entries.is_empty() {
            model = r;
        } else {
            for (acc, e) in model.entries.iter_mut().zip(r.entries) {
                acc.samples += e.samples;
                acc.violations += e.violations;
                acc.worst_slack = acc.worst_slack.min(e.worst_slack);
            }
        }
    }
    report.extend(model);

    let params = AlgoParams::new(t.l, t.mu, t.rounds, t.delta_prime, t.epsilon)?;
    let steps = cfg.verify.steps.unwrap_or(t.outer_iterations);
    let options = RunOptions::new(steps).without_early_exit();
    let trace = run_daccgd(&exp.problem, &exp.seq, &params, &exp.x0, &exp.solution, options)?;
    report.extend(check_lemma3_bound(&trace, t.dist0 * t.dist0, t.mu, t.delta)?);
    report.extend(check_lemma4_sufficiency(&trace, t.delta_prime, t.d_bound));
    report.extend(check_consensus_maintenance(&trace, t.delta_prime));

    let mut reached = CheckEntry::new("epsilon_within_N", 0.0);
    let gap_at_n = trace
        .records
        .get(t.outer_iterations)
        .map_or(f64::INFINITY, |r| r.f_gap);
    if steps >= t.outer_iterations {
        reached.record((t.epsilon - gap_at_n) / t.epsilon);
        report.push(reached);
    }
    Ok((report, trace))
}

/// Writes `verify_report.txt`, `verify_report.csv`, the checked run's
/// `trace.csv` and `meta.json`.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<CheckReport, CliError> {
    let exp = prepare(cfg)?;
    let (report, trace) = verification_report(cfg, &exp)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("verify_report.txt"), report.to_text())?;
    fs::write(dir.join("verify_report.csv"), report.to_csv())?;
    write_trace(&dir.join("trace.csv"), &trace)?;
    let mut meta = experiment_meta(&exp);
    meta.insert("seed".into(), cfg.seed.into());
    add_run_meta(&mut meta, "daccgd", exp.theory.rounds, trace.records.len() - 1, &trace);
    meta.insert("checks_passed".into(), report.passed().into());
    write_meta(&dir.join("meta.json"), &meta)?;
    Ok(report)
}
