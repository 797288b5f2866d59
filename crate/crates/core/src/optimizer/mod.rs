//! Decentralized accelerated gradient descent with a gossip consensus
//! subroutine, and the inexact-projection gradient descent baseline.

mod coefficients;
mod params;

pub use coefficients::{coefficient_sequence, next_coefficients, CoefficientState};
pub use params::{
    compute_d, compute_delta, compute_delta_prime, compute_outer_iterations, compute_t, log_coefficients,
    outer_iterations_alternate, AlgoParams, TheoryParameters,
};

use nalgebra::{DMatrix, DVector};

use crate::consensus::Gossip;
use crate::error::{Error, Result};
use crate::graphs::GraphSequence;
use crate::objectives::{ProblemInstance, Solution};
use crate::state::{consensus_error_matrix, DistributedState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub max_outer: usize,
    /// Stop as soon as `f(x̄^k) − f* ≤ ε`.
    pub early_exit: bool,
    /// Keep the averaged iterates `x̄, ū, ȳ` of every step.
    pub record_iterates: bool,
}

impl RunOptions {
    pub fn new(max_outer: usize) -> Self {
        Self {
            max_outer,
            early_exit: true,
            record_iterates: false,
        }
    }

    pub fn without_early_exit(mut self) -> Self {
        self.early_exit = false;
        self
    }

    pub fn recording_iterates(mut self) -> Self {
        self.record_iterates = true;
        self
    }
}

/// One row of a run trace. Errors are squared Frobenius distances to the
/// consensus subspace. For the baseline, `U` is the iterate itself and `Y`,
/// `V` are not formed (reported as zero). At `iter = 0` neither `Y` nor `V`
/// exists yet and both read zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    /// Cumulative gradient evaluations per node.
    pub grad_evals: u64,
    /// Cumulative gossip rounds.
    pub comm_rounds: u64,
    pub f_gap: f64,
    pub consensus_err_sq: f64,
    pub u_err_sq: f64,
    pub y_err_sq: f64,
    pub v_err_sq: f64,
    /// `‖ū^k − x*‖²`.
    pub u_dist_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AveragedIterates {
    pub x: DVector<f64>,
    pub u: DVector<f64>,
    pub y: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ReachedEpsilon,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<IterRecord>,
    /// `A^k, α^k` aligned with `records`; empty for the baseline.
    pub coefficients: Vec<CoefficientState>,
    /// Aligned with `records` when requested.
    pub iterates: Vec<AveragedIterates>,
    pub stop: StopReason,
}

impl RunTrace {
    pub fn last(&self) -> &IterRecord {
        self.records.last().expect("a trace always holds the initial record")
    }

    /// First record with `f_gap ≤ eps`.
    pub fn first_reaching(&self, eps: f64) -> Option<&IterRecord> {
        self.records.iter().find(|r| r.f_gap <= eps)
    }
}

fn column_mean(x: &DMatrix<f64>) -> DVector<f64> {
    x.row_sum().transpose() / x.nrows() as f64
}

fn check_inputs(p: &ProblemInstance, seq: &GraphSequence, x0: &DVector<f64>) -> Result<()> {
    if seq.n() != p.n() {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            actual: seq.n(),
        });
    }
    if x0.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            actual: x0.len(),
        });
    }
    Ok(())
}

/// Accelerated outer loop; every agent starts from `x0`.
///
/// Per step, with `s = 1 + A^k μ`:
///
/// ```text
/// Y = (α U + A^k X) / A^{k+1}
/// V = (α μ Y + s U − α ∇F(Y)) / (s + α μ)
/// U ← Consensus(V, T)
/// X ← (α U + A^k X) / A^{k+1}
/// ```
///
/// `V` is the row-wise minimizer of
/// `α(⟨∇F(Y), Z − Y⟩ + (μ/2)‖Z − Y‖²) + (s/2)‖Z − U‖²`.
pub fn run_daccgd(
    p: &ProblemInstance,
    seq: &GraphSequence,
    params: &AlgoParams,
    x0: &DVector<f64>,
    reference: &Solution,
    options: RunOptions,
) -> Result<RunTrace> {
    check_inputs(p, seq, x0)?;
    let (l, mu) = (params.l, params.mu);
    let n = p.n();
    let mut gossip = Gossip::new(seq);
    let mut x = DistributedState::consensual(n, x0).into_matrix();
    let mut u = x.clone();
    let mut coeff = CoefficientState::INITIAL;

    let x_bar = column_mean(&x);
    let mut trace = RunTrace {
        records: vec![IterRecord {
            iter: 0,
            grad_evals: 0,
            comm_rounds: 0,
            f_gap: reference.gap(p, &x_bar),
            consensus_err_sq: 0.0,
            u_err_sq: 0.0,
            y_err_sq: 0.0,
            v_err_sq: 0.0,
            u_dist_sq: reference.distance_sq(&x_bar),
        }],
        coefficients: vec![coeff],
        iterates: Vec::new(),
        stop: StopReason::IterationLimit,
    };
    if options.record_iterates {
        trace.iterates.push(AveragedIterates {
            x: x_bar.clone(),
            u: x_bar.clone(),
            y: x_bar,
        });
    }
    if options.early_exit && trace.records[0].f_gap <= params.epsilon {
        trace.stop = StopReason::ReachedEpsilon;
        return Ok(trace);
    }

    for k in 0..options.max_outer {
        let next = next_coefficients(&coeff, l, mu);
        let (alpha, a_prev, a_next) = (next.alpha, coeff.a, next.a);
        assert!(a_next > 0.0, "A^{{k+1}} = A^k + α^{{k+1}} with α^1 = 1/L > 0");

        let y = (&u * alpha + &x * a_prev) / a_next;
        let grad = p.stacked_gradient_matrix(&y)?;
        let s = 1.0 + a_prev * mu;
        let v = (&y * (alpha * mu) + &u * s - grad * alpha) / (s + alpha * mu);
        u = gossip.run_matrix(&v, params.rounds)?;
        x = (&u * alpha + &x * a_prev) / a_next;
        coeff = next;

        if !x.iter().chain(u.iter()).all(|v| v.is_finite()) {
            return Err(Error::Divergence { iteration: k + 1 });
        }
        let x_bar = column_mean(&x);
        let u_bar = column_mean(&u);
        let record = IterRecord {
            iter: k + 1,
            grad_evals: (k + 1) as u64,
            comm_rounds: gossip.counter().rounds_total(),
            f_gap: reference.gap(p, &x_bar),
            consensus_err_sq: consensus_error_matrix(&x),
            u_err_sq: consensus_error_matrix(&u),
            y_err_sq: consensus_error_matrix(&y),
            v_err_sq: consensus_error_matrix(&v),
            u_dist_sq: reference.distance_sq(&u_bar),
        };
        if !record.f_gap.is_finite() {
            return Err(Error::Divergence { iteration: k + 1 });
        }
        trace.records.push(record);
        trace.coefficients.push(coeff);
        if options.record_iterates {
            trace.iterates.push(AveragedIterates {
                x: x_bar,
                u: u_bar,
                y: column_mean(&y),
            });
        }
        if options.early_exit && record.f_gap <= params.epsilon {
            trace.stop = StopReason::ReachedEpsilon;
            break;
        }
    }
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdParams {
    pub gamma: f64,
    pub rounds: usize,
    pub epsilon: f64,
}

/// `X ← Consensus(X − γ ∇F(X), T)` from the consensual start `x0`.
pub fn run_inexact_gd(
    p: &ProblemInstance,
    seq: &GraphSequence,
    params: &GdParams,
    x0: &DVector<f64>,
    reference: &Solution,
    options: RunOptions,
) -> Result<RunTrace> {
    check_inputs(p, seq, x0)?;
    if !(params.gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!("step size {} must be nonnegative", params.gamma)));
    }
    let mut gossip = Gossip::new(seq);
    let mut x = DistributedState::consensual(p.n(), x0).into_matrix();
    let record_for = |iter: usize, x: &DMatrix<f64>, rounds: u64| {
        let x_bar = column_mean(x);
        let err = consensus_error_matrix(x);
        IterRecord {
            iter,
            grad_evals: iter as u64,
            comm_rounds: rounds,
            f_gap: reference.gap(p, &x_bar),
            consensus_err_sq: err,
            u_err_sq: err,
            y_err_sq: 0.0,
            v_err_sq: 0.0,
            u_dist_sq: reference.distance_sq(&x_bar),
        }
    };
    let mut trace = RunTrace {
        records: vec![record_for(0, &x, 0)],
        coefficients: Vec::new(),
        iterates: Vec::new(),
        stop: StopReason::IterationLimit,
    };
    let push_iterates = |trace: &mut RunTrace, x: &DMatrix<f64>| {
        if options.record_iterates {
            let m = column_mean(x);
            trace.iterates.push(AveragedIterates {
                x: m.clone(),
                u: m.clone(),
                y: m,
            });
        }
    };
    push_iterates(&mut trace, &x);
    if options.early_exit && trace.records[0].f_gap <= params.epsilon {
        trace.stop = StopReason::ReachedEpsilon;
        return Ok(trace);
    }
    for k in 0..options.max_outer {
        let grad = p.stacked_gradient_matrix(&x)?;
        let stepped = &x - grad * params.gamma;
        x = gossip.run_matrix(&stepped, params.rounds)?;
        let record = record_for(k + 1, &x, gossip.counter().rounds_total());
        if !record.f_gap.is_finite() || !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence { iteration: k + 1 });
        }
        trace.records.push(record);
        push_iterates(&mut trace, &x);
        if options.early_exit && record.f_gap <= params.epsilon {
            trace.stop = StopReason::ReachedEpsilon;
            break;
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{EdgeSet, Topology};
    use crate::mixing::estimate_contraction;
    use crate::objectives::{minimizer_oracle, QuadraticBlock, DEFAULT_ORACLE_TOL};

    fn scalar_problem(weights: &[f64], centers: &[f64]) -> ProblemInstance {
        ProblemInstance::new(
            weights
                .iter()
                .zip(centers)
                .map(|(&a, &c)| QuadraticBlock::isotropic(a, &DVector::from_element(1, c)).unwrap().into())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn ring_of_three_converges_to_weighted_mean() {
        let p = scalar_problem(&[1.0, 2.0, 3.0], &[0.0, 1.0, 2.0]);
        let seq = GraphSequence::static_topology(Topology::Ring, 3, 0).unwrap();
        let sol = minimizer_oracle(&p, DEFAULT_ORACLE_TOL).unwrap();
        let est = estimate_contraction(&seq, 1, 10).unwrap();
        let x0 = DVector::zeros(1);
        let theory = TheoryParameters::from_solution(&p, &sol, &x0, 1e-10, est).unwrap();
        let trace = run_daccgd(&p, &seq, &theory.algo_params(), &x0, &sol, RunOptions::new(2000).recording_iterates())
            .unwrap();
        assert_eq!(trace.stop, StopReason::ReachedEpsilon);
        let x_bar = &trace.iterates.last().unwrap().x;
        assert!((x_bar[0] - 8.0 / 6.0).abs() < 1e-4);
        assert!((sol.x[0] - 8.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn identical_locals_complete_graph() {
        let c = DVector::from_vec(vec![1.0, -1.0, 0.5]);
        let locals = (0..4).map(|_| QuadraticBlock::isotropic(1.0, &c).unwrap().into()).collect();
        let p = ProblemInstance::new(locals).unwrap();
        let seq = GraphSequence::fixed(EdgeSet::complete(4));
        let sol = minimizer_oracle(&p, DEFAULT_ORACLE_TOL).unwrap();
        let x0 = DVector::zeros(3);
        let est = estimate_contraction(&seq, 1, 5).unwrap();
        let theory = TheoryParameters::from_solution(&p, &sol, &x0, 1e-10, est).unwrap();
        let trace = run_daccgd(
            &p,
            &seq,
            &theory.algo_params(),
            &x0,
            &sol,
            RunOptions::new(theory.outer_iterations),
        )
        .unwrap();
        let reached = trace.first_reaching(1e-10).expect("reaches 1e-10");
        assert!(reached.iter <= theory.outer_iterations);
        let dist0_sq = sol.distance_sq(&x0);
        for (r, c) in trace.records.iter().zip(&trace.coefficients).skip(1) {
            assert!(r.f_gap <= dist0_sq / (2.0 * c.a) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn counters_advance() {
        let p = scalar_problem(&[1.0, 2.0], &[0.0, 1.0]);
        let seq = GraphSequence::fixed(EdgeSet::complete(2));
        let sol = minimizer_oracle(&p, DEFAULT_ORACLE_TOL).unwrap();
        let params = AlgoParams::new(4.0, 0.75, 3, 1e-6, 1e-12).unwrap();
        let trace = run_daccgd(&p, &seq, &params, &DVector::zeros(1), &sol, RunOptions::new(5).without_early_exit())
            .unwrap();
        assert_eq!(trace.records.len(), 6);
        assert_eq!(trace.coefficients.len(), 6);
        assert_eq!(trace.last().grad_evals, 5);
        assert_eq!(trace.last().comm_rounds, 15);
        assert_eq!(trace.stop, StopReason::IterationLimit);
    }

    #[test]
    fn divergence_is_reported() {
        let p = scalar_problem(&[1.0], &[1.0]);
        let seq = GraphSequence::fixed(EdgeSet::empty(1));
        let sol = minimizer_oracle(&p, DEFAULT_ORACLE_TOL).unwrap();
        let gd = GdParams {
            gamma: 1e200,
            rounds: 1,
            epsilon: 1e-12,
        };
        let err = run_inexact_gd(&p, &seq, &gd, &DVector::zeros(1), &sol, RunOptions::new(10)).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }));
    }

    #[test]
    fn gd_single_agent_contracts() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.5, 1.0]);
        let q = QuadraticBlock::new(a, DVector::from_vec(vec![1.0, -1.0]), 0.0).unwrap();
        let p = ProblemInstance::new(vec![q.into()]).unwrap();
        let c = p.constants();
        let seq = GraphSequence::fixed(EdgeSet::empty(1));
        let sol = minimizer_oracle(&p, DEFAULT_ORACLE_TOL).unwrap();
        let gd = GdParams {
            gamma: 1.0 / c.l_l,
            rounds: 1,
            epsilon: 1e-14,
        };
        let trace = run_inexact_gd(&p, &seq, &gd, &DVector::from_vec(vec![3.0, 3.0]), &sol, RunOptions::new(50))
            .unwrap();
        let rate = 1.0 - c.mu_l / c.l_l;
        for w in trace.records.windows(2) {
            assert!(w[1].f_gap <= rate * w[0].f_gap * (1.0 + 1e-12) + 1e-300);
        }
    }

    #[test]
    fn zero_step_only_mixes() {
        let p = scalar_problem(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]);
        let seq = GraphSequence::static_topology(Topology::Path, 3, 0).unwrap();
        let sol = minimizer_oracle(&p, DEFAULT_ORACLE_TOL).unwrap();
        let gd = GdParams {
            gamma: 0.0,
            rounds: 2,
            epsilon: 1e-12,
        };
        let x0 = DVector::from_element(1, 0.7);
        let trace = run_inexact_gd(&p, &seq, &gd, &x0, &sol, RunOptions::new(4).recording_iterates()).unwrap();
        assert!(trace.iterates.iter().all(|it| (it.x[0] - 0.7).abs() < 1e-15));
        assert!(trace.records.iter().all(|r| r.consensus_err_sq < 1e-28));
    }

    #[test]
    fn exact_averaging_gd_is_projected_gd() {
        let p = scalar_problem(&[1.0, 3.0], &[-1.0, 2.0]);
        let seq = GraphSequence::fixed(EdgeSet::complete(2));
        let sol = minimizer_oracle(&p, DEFAULT_ORACLE_TOL).unwrap();
        let gamma = 0.2;
        let gd = GdParams {
            gamma,
            rounds: 1,
            epsilon: 0.0,
        };
        let trace = run_inexact_gd(&p, &seq, &gd, &DVector::zeros(1), &sol, RunOptions::new(10).recording_iterates())
            .unwrap();
        let mut x = DVector::zeros(1);
        for it in &trace.iterates[1..] {
            x = &x - p.gradient(&x) * gamma;
            assert!((it.x[0] - x[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn mismatched_sequence_rejected() {
        let p = scalar_problem(&[1.0, 1.0], &[0.0, 1.0]);
        let seq = GraphSequence::fixed(EdgeSet::complete(3));
        let sol = minimizer_oracle(&p, DEFAULT_ORACLE_TOL).unwrap();
        let params = AlgoParams::new(4.0, 0.5, 1, 1e-6, 1e-6).unwrap();
        assert!(run_daccgd(&p, &seq, &params, &DVector::zeros(1), &sol, RunOptions::new(3)).is_err());
    }
}
