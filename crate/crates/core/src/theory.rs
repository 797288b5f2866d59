//! Numerical checks of the inexact-oracle model, the coefficient sequence
//! properties, the outer-loop convergence bound and consensus sufficiency.
//!
//! Every check returns a [`CheckEntry`] holding its worst slack; a check
//! passes when that slack is at least the entry's tolerance.

use std::fmt::Write as _;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::graphs::GraphSequence;
use crate::mixing::metropolis_weights;
use crate::objectives::ProblemInstance;
use crate::optimizer::{compute_delta, AveragedIterates, RunTrace};
use crate::state::{consensus_error, DistributedState};

/// Absolute slack tolerance of the model inequality.
pub const MODEL_SLACK_TOL: f64 = -1e-9;
/// Relative slack tolerance of the bound checks.
pub const RELATIVE_SLACK_TOL: f64 = -1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckEntry {
    pub name: String,
    pub worst_slack: f64,
    pub tolerance: f64,
    /// Number of inequalities evaluated.
    pub samples: usize,
    /// Samples with slack below tolerance.
    pub violations: usize,
}

impl CheckEntry {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            worst_slack: f64::INFINITY,
            tolerance,
            samples: 0,
            violations: 0,
        }
    }

    pub fn record(&mut self, slack: f64) {
        self.samples += 1;
        if slack.is_nan() {
            self.worst_slack = f64::NAN;
            self.violations += 1;
            return;
        }
        if !self.worst_slack.is_nan() {
            self.worst_slack = self.worst_slack.min(slack);
        }
        if slack < self.tolerance {
            self.violations += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && !self.worst_slack.is_nan()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckReport {
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: CheckEntry) {
        self.entries.push(entry);
    }

    pub fn extend(&mut self, other: CheckReport) {
        self.entries.extend(other.entries);
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(CheckEntry::passed)
    }

    pub fn to_text(&self) -> String {
        let width = self.entries.iter().map(|e| e.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{:<width$}  {}  worst_slack={:.6e}  samples={}  violations={}",
                e.name,
                if e.passed() { "PASS" } else { "FAIL" },
                e.worst_slack,
                e.samples,
                e.violations,
            );
        }
        let failed = self.entries.iter().filter(|e| !e.passed()).count();
        let _ = writeln!(out, "{} checks, {} failed", self.entries.len(), failed);
        out
    }

    /// `check,worst_slack,passed` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,worst_slack,passed\n");
        for e in &self.entries {
            let _ = writeln!(out, "{},{:e},{}", e.name, e.worst_slack, e.passed());
        }
        out
    }
}

fn relative_slack(bound: f64, value: f64) -> f64 {
    if bound == 0.0 {
        if value <= 0.0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        (bound - value) / bound.abs()
    }
}

/// Inexact first-order model of `f` at `x̄` built from the agents' points.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleModelValue {
    pub f_model: f64,
    pub g_model: DVector<f64>,
    pub delta: f64,
    /// The `δ′` that `delta` was computed from.
    pub delta_prime: f64,
}

/// With `δ′` taken as the measured consensus error of `x_state`:
///
/// ```text
/// f_model = (1/n)[F(X) + ⟨∇F(X), X̄ − X⟩ + ½(μ_l − 2L_l²/μ_g)‖X̄ − X‖²]
/// g_model = (1/n) Σ ∇f_i(x_i)
/// ```
pub fn oracle_model(p: &ProblemInstance, x_state: &DistributedState) -> Result<OracleModelValue> {
    oracle_model_with(p, x_state, consensus_error(x_state))
}

/// As [`oracle_model`], with `δ` computed from the supplied `δ′`.
pub fn oracle_model_with(p: &ProblemInstance, x_state: &DistributedState, delta_prime: f64) -> Result<OracleModelValue> {
    let c = p.constants();
    let n = p.n() as f64;
    let grads = p.stacked_gradient(x_state)?;
    let diff = x_state.projection().into_matrix() - x_state.matrix();
    let f_model = (p.stacked_value(x_state)?
        + grads.dot(&diff)
        + 0.5 * (c.mu_l - 2.0 * c.l_l * c.l_l / c.mu_g) * diff.norm_squared())
        / n;
    Ok(OracleModelValue {
        f_model,
        g_model: grads.row_sum().transpose() / n,
        delta: compute_delta(delta_prime, p.n(), c.mu_g, c.l_g, c.mu_l, c.l_l),
        delta_prime,
    })
}

/// Evaluates, at every `ȳ`,
/// `(μ_g/4)‖ȳ − x̄‖² ≤ f(ȳ) − f_model − ⟨g_model, ȳ − x̄⟩ ≤ L_g‖ȳ − x̄‖² + δ`
/// with absolute slack. `delta_prime` defaults to the measured consensus
/// error.
pub fn check_model_inequality(
    p: &ProblemInstance,
    x_state: &DistributedState,
    y_points: &[DVector<f64>],
    delta_prime: Option<f64>,
) -> Result<CheckReport> {
    let model = match delta_prime {
        Some(dp) => oracle_model_with(p, x_state, dp)?,
        None => oracle_model(p, x_state)?,
    };
    let c = p.constants();
    let x_bar = x_state.mean();
    let mut lower = CheckEntry::new("model_lower", MODEL_SLACK_TOL);
    let mut upper = CheckEntry::new("model_upper", MODEL_SLACK_TOL);
    for y in y_points {
        if y.len() != p.dim() {
            return Err(Error::DimensionMismatch {
                expected: p.dim(),
                actual: y.len(),
            });
        }
        let r = y - &x_bar;
        let r2 = r.norm_squared();
        let middle = p.objective(y) - model.f_model - model.g_model.dot(&r);
        lower.record(middle - 0.25 * c.mu_g * r2);
        upper.record(c.l_g * r2 + model.delta - middle);
    }
    let mut report = CheckReport::new();
    report.push(lower);
    report.push(upper);
    Ok(report)
}

/// `count` points drawn uniformly from the ball of the given radius.
pub fn ball_points<R: Rng + ?Sized>(center: &DVector<f64>, radius: f64, count: usize, rng: &mut R) -> Vec<DVector<f64>> {
    let d = center.len();
    (0..count)
        .map(|_| {
            let dir = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let norm = dir.norm();
            if norm == 0.0 || d == 0 {
                return center.clone();
            }
            let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
            center + dir * (r / norm)
        })
        .collect()
}

/// Checks, at every `k ≥ 1` of an accelerated-method trace,
///
/// ```text
/// f(x̄^k) − f*  ≤ dist0²/(2A^k) + 2(Σ_{j≤k} A^j) δ / A^k
/// ‖ū^k − x*‖²  ≤ (dist0² + 4(Σ_{j≤k} A^j) δ) / (1 + A^k μ)
/// ```
///
/// with slack relative to the bound. `k = 0` has `A⁰ = 0` and is skipped.
pub fn check_lemma3_bound(trace: &RunTrace, dist0_sq: f64, mu: f64, delta: f64) -> Result<CheckReport> {
    if trace.coefficients.len() != trace.records.len() {
        return Err(Error::InvalidParameter(
            "trace has no coefficient history aligned with its records".into(),
        ));
    }
    let mut gap = CheckEntry::new("gap_bound", RELATIVE_SLACK_TOL);
    let mut dist = CheckEntry::new("distance_bound", RELATIVE_SLACK_TOL);
    let mut sum_a = 0.0;
    for (rec, coeff) in trace.records.iter().zip(&trace.coefficients).skip(1) {
        let a = coeff.a;
        sum_a += a;
        gap.record(relative_slack(dist0_sq / (2.0 * a) + 2.0 * sum_a * delta / a, rec.f_gap));
        dist.record(relative_slack((dist0_sq + 4.0 * sum_a * delta) / (1.0 + a * mu), rec.u_dist_sq));
    }
    let mut report = CheckReport::new();
    report.push(gap);
    report.push(dist);
    Ok(report)
}

/// Checks `‖U^k − Ū^k‖² ≤ δ′` and `‖V^k − V̄^k‖² ≤ D` for every `k ≥ 1`,
/// relative to the respective bound.
pub fn check_lemma4_sufficiency(trace: &RunTrace, delta_prime: f64, d_bound: f64) -> CheckReport {
    let mut u = CheckEntry::new("u_consensus_sufficient", RELATIVE_SLACK_TOL);
    let mut v = CheckEntry::new("v_spread_bound", RELATIVE_SLACK_TOL);
    for rec in trace.records.iter().skip(1) {
        u.record(relative_slack(delta_prime, rec.u_err_sq));
        v.record(relative_slack(d_bound, rec.v_err_sq));
    }
    let mut report = CheckReport::new();
    report.push(u);
    report.push(v);
    report
}

/// Also checks `‖X^k − X̄^k‖² ≤ δ′` and `‖Y^k − Ȳ^k‖² ≤ δ′`.
pub fn check_consensus_maintenance(trace: &RunTrace, delta_prime: f64) -> CheckReport {
    let mut x = CheckEntry::new("consensus_x", RELATIVE_SLACK_TOL);
    let mut u = CheckEntry::new("consensus_u", RELATIVE_SLACK_TOL);
    let mut y = CheckEntry::new("consensus_y", RELATIVE_SLACK_TOL);
    for rec in trace.records.iter().skip(1) {
        x.record(relative_slack(delta_prime, rec.consensus_err_sq));
        u.record(relative_slack(delta_prime, rec.u_err_sq));
        y.record(relative_slack(delta_prime, rec.y_err_sq));
    }
    let mut report = CheckReport::new();
    report.push(x);
    report.push(u);
    report.push(y);
    report
}

/// `log A^k` for `k = 1..=steps`, computed without overflow through
/// `log A^{k+1} = log A^k + log(1 + α^{k+1}/A^k)`.
pub fn log_coefficient_sequence(l: f64, mu: f64, steps: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(steps);
    if steps == 0 {
        return out;
    }
    let mut log_a = -l.ln();
    out.push(log_a);
    for _ in 1..steps {
        // s/A with s = 1 + Aμ
        let s_over_a = (-log_a).exp() + mu;
        let ratio = (s_over_a + (s_over_a * s_over_a + 4.0 * l * s_over_a).sqrt()) / (2.0 * l);
        log_a += ratio.ln_1p();
        out.push(log_a);
    }
    out
}

/// `A^N ≥ (1/L)(1 + ½√(μ/L))^{2(N−1)}` and `Σ_{i≤k} A^i / A^k ≤ 1 + √(L/μ)`
/// for all `N, k ≤ steps`, both with relative slack.
pub fn check_lemma2(l: f64, mu: f64, steps: usize) -> CheckReport {
    let log_a = log_coefficient_sequence(l, mu, steps);
    let growth = (0.5 * (mu / l).sqrt()).ln_1p();
    let cap = 1.0 + (l / mu).sqrt();
    let mut lower = CheckEntry::new("coefficient_growth", RELATIVE_SLACK_TOL);
    let mut ratio = CheckEntry::new("coefficient_sum_ratio", RELATIVE_SLACK_TOL);
    // Σ_{i≤k} A^i / A^k accumulated as r_k = 1 + r_{k-1} A^{k-1}/A^k.
    let mut r = 0.0;
    for (k, &la) in log_a.iter().enumerate() {
        let log_bound = -l.ln() + 2.0 * k as f64 * growth;
        lower.record((la - log_bound).exp_m1());
        if k > 0 {
            r *= (log_a[k - 1] - la).exp();
        }
        r += 1.0;
        ratio.record(relative_slack(cap, r));
    }
    let mut report = CheckReport::new();
    report.push(lower);
    report.push(ratio);
    report
}

/// The averaged outer loop in `ℝ^d` under exact consensus, with the
/// gradient of `f` at `ȳ`:
///
/// ```text
/// ȳ = (α ū + A x̄) / A′
/// ū′ = argmin_z α(⟨∇f(ȳ), z − ȳ⟩ + (μ/2)‖z − ȳ‖²) + ((1 + Aμ)/2)‖z − ū‖²
/// x̄′ = (α ū′ + A x̄) / A′
/// ```
///
/// Returns `steps + 1` iterates starting at `x0`.
pub fn averaged_recursion(p: &ProblemInstance, l: f64, mu: f64, x0: &DVector<f64>, steps: usize) -> Vec<AveragedIterates> {
    let mut a = 0.0_f64;
    let mut x = x0.clone();
    let mut u = x0.clone();
    let mut out = vec![AveragedIterates {
        x: x.clone(),
        u: u.clone(),
        y: x.clone(),
    }];
    for _ in 0..steps {
        // Greater root of Lα² − sα − sA = 0.
        let s = 1.0 + a * mu;
        let disc = s * s + 4.0 * l * s * a;
        let alpha = if s >= 0.0 {
            (s + disc.sqrt()) / (2.0 * l)
        } else {
            -2.0 * s * a / (s - disc.sqrt())
        };
        let a_next = a + alpha;
        let y = (&u * alpha + &x * a) / a_next;
        let g = p.gradient(&y);
        // Stationarity: α g + αμ(z − ȳ) + s(z − ū) = 0.
        let u_next = &u - (g * alpha + (&u - &y) * (alpha * mu)) / (s + alpha * mu);
        x = (&u_next * alpha + &x * a) / a_next;
        u = u_next;
        a = a_next;
        out.push(AveragedIterates {
            x: x.clone(),
            u: u.clone(),
            y,
        });
    }
    out
}

/// Largest per-iterate deviation between two averaged trajectories.
pub fn max_iterate_deviation(lhs: &[AveragedIterates], rhs: &[AveragedIterates]) -> f64 {
    lhs.iter()
        .zip(rhs)
        .map(|(a, b)| (&a.x - &b.x).amax().max((&a.u - &b.u).amax()).max((&a.y - &b.y).amax()))
        .fold(0.0, f64::max)
}

/// `‖W_τ^k X − X̄‖ ≤ (1 − λ)‖X − X̄‖` for each window ending at
/// `τ−1 .. τ−1+windows` and every supplied state; slack relative to
/// `‖X − X̄‖`.
pub fn check_contraction(seq: &GraphSequence, tau: usize, lambda: f64, windows: usize, states: &[DistributedState]) -> CheckReport {
    let mut entry = CheckEntry::new("contraction", -1e-10);
    let n = seq.n();
    let matrices: Vec<_> = (0..tau + windows).map(|k| metropolis_weights(&seq.edge_set_at(k))).collect();
    for end in tau - 1..tau - 1 + windows {
        for s in states {
            let mut x = s.matrix().clone();
            for m in &matrices[end + 1 - tau..=end] {
                x = m.apply(&x);
            }
            let lhs = consensus_error(&DistributedState::new(x)).sqrt();
            let spread = consensus_error(s).sqrt();
            let rhs = (1.0 - lambda) * spread;
            entry.record(if spread == 0.0 { -lhs } else { (rhs - lhs) / spread });
        }
    }
    debug_assert!(states.iter().all(|s| s.n() == n));
    let mut report = CheckReport::new();
    report.push(entry);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::EdgeSet;
    use crate::objectives::{minimizer_oracle, QuadraticBlock, SyntheticQuadratic};
    use crate::optimizer::{coefficient_sequence, run_daccgd, AlgoParams, RunOptions};
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_agent_problem() -> ProblemInstance {
        let q1 = QuadraticBlock::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 2.0]),
            DVector::from_vec(vec![1.0, -1.0]),
            0.0,
        )
        .unwrap();
        let q2 = QuadraticBlock::new(
            DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 1.0, 1.0]),
            DVector::from_vec(vec![0.5, 2.0]),
            0.0,
        )
        .unwrap();
        ProblemInstance::new(vec![q1.into(), q2.into()]).unwrap()
    }

    #[test]
    fn consensual_model_is_exact() {
        let p = two_agent_problem();
        let x = DVector::from_vec(vec![0.3, -0.7]);
        let m = oracle_model(&p, &DistributedState::consensual(2, &x)).unwrap();
        assert!((m.f_model - p.objective(&x)).abs() < 1e-14);
        assert!((&m.g_model - p.gradient(&x)).amax() < 1e-14);
        assert_eq!(m.delta, 0.0);
    }

    #[test]
    fn model_matches_hand_evaluation() {
        let p = two_agent_problem();
        let x = DistributedState::new(DMatrix::from_row_slice(2, 2, &[0.2, 0.1, -0.4, 0.5]));
        let m = oracle_model(&p, &x).unwrap();
        let c = p.constants();
        let fl = p.locals();
        let x1 = DVector::from_vec(vec![0.2, 0.1]);
        let x2 = DVector::from_vec(vec![-0.4, 0.5]);
        let bar = DVector::from_vec(vec![-0.1, 0.3]);
        let mut bracket = fl[0].value(&x1) + fl[1].value(&x2);
        bracket += fl[0].gradient(&x1).dot(&(&bar - &x1)) + fl[1].gradient(&x2).dot(&(&bar - &x2));
        let spread = (&bar - &x1).norm_squared() + (&bar - &x2).norm_squared();
        bracket += 0.5 * (c.mu_l - 2.0 * c.l_l * c.l_l / c.mu_g) * spread;
        assert!((m.f_model - bracket / 2.0).abs() < 1e-12);
        assert!((m.delta_prime - spread).abs() < 1e-14);
    }

    #[test]
    fn single_agent_model_is_function_value() {
        let q = QuadraticBlock::isotropic(2.0, &DVector::from_vec(vec![1.0, 1.0])).unwrap();
        let p = ProblemInstance::new(vec![q.into()]).unwrap();
        let x = DVector::from_vec(vec![0.5, -3.0]);
        let m = oracle_model(&p, &DistributedState::consensual(1, &x)).unwrap();
        assert!((m.f_model - p.objective(&x)).abs() < 1e-14);
    }

    #[test]
    fn model_inequality_on_random_instance() {
        let p = SyntheticQuadratic::new(5, 4, 20.0, 1).with_spread(2.0).generate().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = DistributedState::new(DMatrix::from_fn(5, 4, |_, _| rng.random::<f64>()));
        let sol = minimizer_oracle(&p, 1e-12).unwrap();
        let radius = 10.0 * (x.mean() - &sol.x).norm();
        let mut ys = ball_points(&x.mean(), radius, 1000, &mut rng);
        ys.push(x.mean());
        let report = check_model_inequality(&p, &x, &ys, None).unwrap();
        assert!(report.passed(), "{}", report.to_text());
        assert_eq!(report.entries[0].samples, 1001);
    }

    #[test]
    fn undersized_delta_prime_is_caught() {
        let p = two_agent_problem();
        let x = DistributedState::new(DMatrix::from_row_slice(2, 2, &[3.0, -2.0, -3.0, 2.0]));
        let ys = vec![x.mean()];
        let report = check_model_inequality(&p, &x, &ys, Some(0.0)).unwrap();
        assert!(!report.passed());
    }

    #[test]
    fn log_sequence_matches_direct() {
        let direct = coefficient_sequence(10.0, 0.3, 50);
        let logs = log_coefficient_sequence(10.0, 0.3, 50);
        for (c, la) in direct[1..].iter().zip(&logs) {
            assert!((c.a.ln() - la).abs() < 1e-12 * la.abs().max(1.0));
        }
    }

    #[test]
    fn coefficient_bounds_moderate_kappa() {
        for kappa in [1.0, 10.0, 1e3] {
            let report = check_lemma2(kappa, 1.0, 300);
            assert!(report.passed(), "kappa {kappa}: {}", report.to_text());
        }
    }

    #[test]
    fn gap_bound_on_exact_consensus_run() {
        let c = DVector::from_vec(vec![1.0, 2.0]);
        let p = SyntheticQuadratic::new(4, 2, 5.0, 8).generate().unwrap();
        let seq = GraphSequence::fixed(EdgeSet::complete(4));
        let sol = minimizer_oracle(&p, 1e-12).unwrap();
        let k = p.constants();
        let (l, mu) = AlgoParams::oracle_constants(&k);
        let params = AlgoParams::new(l, mu, 1, 1e-12, 1e-12).unwrap();
        let trace = run_daccgd(&p, &seq, &params, &c, &sol, RunOptions::new(60).without_early_exit()).unwrap();
        let report = check_lemma3_bound(&trace, sol.distance_sq(&c), mu, 0.0).unwrap();
        assert!(report.passed(), "{}", report.to_text());
        let first = trace.records[1].f_gap;
        assert!(first <= l * sol.distance_sq(&c) / 2.0 * (1.0 + 1e-9));
    }

    #[test]
    fn gap_bound_at_optimum_start() {
        let c = DVector::from_vec(vec![0.25, -4.0]);
        let locals = (1..4).map(|w| QuadraticBlock::isotropic(w as f64, &c).unwrap().into()).collect();
        let p = ProblemInstance::new(locals).unwrap();
        let sol = minimizer_oracle(&p, 1e-12).unwrap();
        let seq = GraphSequence::fixed(EdgeSet::complete(3));
        let params = AlgoParams::new(8.0, 0.5, 1, 1e-9, 1e-12).unwrap();
        let trace = run_daccgd(&p, &seq, &params, &sol.x, &sol, RunOptions::new(10).without_early_exit()).unwrap();
        assert!(trace.records.iter().all(|r| r.f_gap == 0.0));
        assert!(check_lemma3_bound(&trace, 0.0, 0.5, 0.0).unwrap().passed());
    }

    #[test]
    fn averaged_recursion_matches_single_agent_run() {
        let p = SyntheticQuadratic::new(1, 3, 30.0, 6).generate().unwrap();
        let sol = minimizer_oracle(&p, 1e-12).unwrap();
        let seq = GraphSequence::fixed(EdgeSet::empty(1));
        let (l, mu) = AlgoParams::oracle_constants(&p.constants());
        let params = AlgoParams::new(l, mu, 1, 1.0, 1e-12).unwrap();
        let x0 = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let options = RunOptions::new(100).without_early_exit().recording_iterates();
        let trace = run_daccgd(&p, &seq, &params, &x0, &sol, options).unwrap();
        let reference = averaged_recursion(&p, l, mu, &x0, 100);
        assert!(max_iterate_deviation(&trace.iterates, &reference) < 1e-9);
    }

    #[test]
    fn report_formats() {
        let mut e = CheckEntry::new("a", -1e-9);
        e.record(0.5);
        e.record(-1.0);
        let mut r = CheckReport::new();
        r.push(e);
        assert!(!r.passed());
        assert_eq!(r.to_csv(), "check,worst_slack,passed\na,-1e0,false\n");
        assert!(r.to_text().contains("FAIL"));
    }
}
