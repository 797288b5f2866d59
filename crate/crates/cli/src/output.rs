//! Trace CSV and metadata JSON.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use daccgd::{RunTrace, StopReason};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::setup::Experiment;

pub const TRACE_HEADER: &str = "iter,grad_evals,comm_rounds,f_gap,consensus_err_sq";

pub fn trace_csv(trace: &RunTrace) -> String {
    let mut out = String::with_capacity(48 * trace.records.len() + TRACE_HEADER.len() + 1);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        let _ = writeln!(
            out,
            "{},{},{},{:e},{:e}",
            r.iter, r.grad_evals, r.comm_rounds, r.f_gap, r.consensus_err_sq
        );
    }
    out
}

pub fn write_trace(path: &Path, trace: &RunTrace) -> Result<(), CliError> {
    fs::write(path, trace_csv(trace))?;
    Ok(())
}

pub type Meta = BTreeMap<String, Value>;

/// Every derived quantity of the run with the measured constants.
pub fn experiment_meta(exp: &Experiment) -> Meta {
    let t = &exp.theory;
    let c = &t.constants;
    let mut m = Meta::new();
    let mut put = |k: &str, v: Value| {
        m.insert(k.to_string(), v);
    };
    put("n", json!(exp.problem.n()));
    put("d", json!(exp.problem.dim()));
    put("mu_l", json!(c.mu_l));
    put("L_l", json!(c.l_l));
    put("mu_g", json!(c.mu_g));
    put("L_g", json!(c.l_g));
    put("kappa_g", json!(c.kappa_g()));
    put("kappa_l", json!(c.kappa_l()));
    put("L", json!(t.l));
    put("mu", json!(t.mu));
    put("lambda", json!(t.lambda));
    put("tau", json!(t.tau));
    put("chi", json!(t.chi));
    put("epsilon", json!(t.epsilon));
    put("dist0", json!(t.dist0));
    put("grad_norm_star", json!(t.grad_norm_star));
    put("delta_prime", json!(t.delta_prime));
    put("delta", json!(t.delta));
    put("D", json!(t.d_bound));
    put("D1", json!(t.d1));
    put("D2", json!(t.d2));
    put("N", json!(t.outer_iterations));
    put("N_alternate", json!(t.outer_iterations_alternate));
    put("T_theory", json!(t.rounds));
    put("total_rounds_theory", json!(t.total_rounds));
    put("total_rounds_bound", json!(t.total_rounds_bound));
    put("f_star", json!(exp.solution.f));
    m
}

pub fn add_run_meta(m: &mut Meta, method: &str, rounds: usize, max_outer: usize, trace: &RunTrace) {
    let last = trace.last();
    m.insert("method".into(), json!(method));
    m.insert("T".into(), json!(rounds));
    m.insert("max_outer".into(), json!(max_outer));
    m.insert("iterations".into(), json!(last.iter));
    m.insert("grad_evals".into(), json!(last.grad_evals));
    m.insert("comm_rounds".into(), json!(last.comm_rounds));
    m.insert("final_f_gap".into(), json!(last.f_gap));
    m.insert("final_consensus_err_sq".into(), json!(last.consensus_err_sq));
    m.insert(
        "stop_reason".into(),
        json!(match trace.stop {
            StopReason::ReachedEpsilon => "reached-epsilon",
            StopReason::IterationLimit => "iteration-limit",
        }),
    );
}

pub fn write_meta(path: &Path, meta: &Meta) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(meta).map_err(|e| CliError::Numerical(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
