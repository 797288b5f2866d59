//! Iteration counts and accuracy targets that guarantee an `ε`-solution.

use crate::error::{Error, Result};
use crate::mixing::ContractionEstimate;
use crate::objectives::{Constants, ProblemInstance, Solution};

/// Ceiling that forgives a few ulps above an integer, clamped to at least 1.
fn ceil_count(x: f64) -> usize {
    if !(x > 1.0) {
        return 1;
    }
    (x * (1.0 - 1e-12)).ceil() as usize
}

/// `δ′ = (n ε / 32) · μ_g^{3/2} / (L_g^{1/2} L_l²)`.
pub fn compute_delta_prime(eps: f64, n: usize, mu_g: f64, l_g: f64, l_l: f64) -> f64 {
    n as f64 * eps / 32.0 * mu_g.powf(1.5) / (l_g.sqrt() * l_l * l_l)
}

/// Additive inexactness of the averaged oracle,
/// `δ = (1/2n)(L_l²/L_g + 2L_l²/μ_g + L_l − μ_l) δ′`.
pub fn compute_delta(delta_prime: f64, n: usize, mu_g: f64, l_g: f64, mu_l: f64, l_l: f64) -> f64 {
    let l2 = l_l * l_l;
    (l2 / l_g + 2.0 * l2 / mu_g + l_l - mu_l) * delta_prime / (2.0 * n as f64)
}

/// `N = ⌈2 √(L_g/μ_g) · log(2 L_g ‖ū⁰ − x*‖² / ε)⌉`, at least 1.
pub fn compute_outer_iterations(eps: f64, l_g: f64, mu_g: f64, dist0: f64) -> usize {
    ceil_count(outer_iterations_raw(eps, l_g, mu_g, dist0))
}

fn outer_iterations_raw(eps: f64, l_g: f64, mu_g: f64, dist0: f64) -> f64 {
    2.0 * (l_g / mu_g).sqrt() * (2.0 * l_g * dist0 * dist0 / eps).ln()
}

/// Variant with the log argument `‖ū⁰ − x*‖² / (2 ε L_g)`; reported for
/// comparison only.
pub fn outer_iterations_alternate(eps: f64, l_g: f64, mu_g: f64, dist0: f64) -> f64 {
    2.0 * (l_g / mu_g).sqrt() * (dist0 * dist0 / (2.0 * eps * l_g)).ln()
}

/// Bound `D` on `‖V^{k+1} − V̄^{k+1}‖²` before gossip:
/// `√D = (2L_l/√(Lμ) + 1)√δ′ + (L_l/μ)√n (‖ū⁰−x*‖² + 8δ′/√(Lμ))^{1/2}
///       + 2‖∇F(X*)‖/√(Lμ)`.
pub fn compute_d(delta_prime: f64, l: f64, mu: f64, l_l: f64, n: usize, dist0: f64, grad_norm_star: f64) -> f64 {
    let root_lmu = (l * mu).sqrt();
    let sqrt_d = (2.0 * l_l / root_lmu + 1.0) * delta_prime.sqrt()
        + l_l / mu * (n as f64).sqrt() * (dist0 * dist0 + 8.0 * delta_prime / root_lmu).sqrt()
        + 2.0 * grad_norm_star / root_lmu;
    sqrt_d * sqrt_d
}

/// Gossip rounds per outer step, `T = ⌈(τ / 2λ) log(D/δ′)⌉`, at least 1.
pub fn compute_t(tau: usize, lambda: f64, d: f64, delta_prime: f64) -> usize {
    if d <= delta_prime {
        return 1;
    }
    ceil_count(tau as f64 / (2.0 * lambda) * (d / delta_prime).ln())
}

/// `(D_1, D_2)` with `√(D/δ′) ≤ D_1/√ε + D_2`.
pub fn log_coefficients(c: &Constants, n: usize, dist0: f64, grad_norm_star: f64) -> (f64, f64) {
    let k = c.l_g / c.mu_g;
    let pre = c.l_l / (c.l_g.sqrt() * c.mu_g);
    let s2 = std::f64::consts::SQRT_2;
    let d1 = pre * (8.0 * s2 * c.l_l * dist0 * k.powf(0.75) + 4.0 * s2 * grad_norm_star / (n as f64).sqrt() * k.powf(0.25));
    let d2 = pre * (3.0 * c.mu_g.sqrt() + 4.0 * (2.0 * n as f64).sqrt() * k.powf(0.25));
    (d1, d2)
}

/// Constants the accelerated method runs with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgoParams {
    /// Oracle smoothness `2 L_g`.
    pub l: f64,
    /// Oracle strong convexity `μ_g / 2`.
    pub mu: f64,
    /// Gossip rounds per outer iteration.
    pub rounds: usize,
    pub delta_prime: f64,
    pub epsilon: f64,
}

impl AlgoParams {
    pub fn new(l: f64, mu: f64, rounds: usize, delta_prime: f64, epsilon: f64) -> Result<Self> {
        if !(mu > 0.0 && l >= mu) {
            return Err(Error::InvalidParameter(format!("need L >= mu > 0, got L={l}, mu={mu}")));
        }
        if rounds == 0 {
            return Err(Error::InvalidParameter("at least one gossip round per step".into()));
        }
        if !(delta_prime > 0.0) || !(epsilon > 0.0) {
            return Err(Error::InvalidParameter("delta' and epsilon must be positive".into()));
        }
        Ok(Self {
            l,
            mu,
            rounds,
            delta_prime,
            epsilon,
        })
    }

    /// `L = 2 L_g`, `μ = μ_g / 2`.
    pub fn oracle_constants(c: &Constants) -> (f64, f64) {
        (2.0 * c.l_g, c.mu_g / 2.0)
    }
}

/// Every derived quantity of the complexity bound, for one problem, graph
/// and target accuracy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryParameters {
    pub n: usize,
    pub constants: Constants,
    pub epsilon: f64,
    pub l: f64,
    pub mu: f64,
    pub tau: usize,
    pub lambda: f64,
    pub chi: f64,
    pub dist0: f64,
    pub grad_norm_star: f64,
    pub delta_prime: f64,
    pub delta: f64,
    pub d_bound: f64,
    pub d1: f64,
    pub d2: f64,
    pub outer_iterations: usize,
    pub outer_iterations_alternate: f64,
    pub rounds: usize,
    pub total_rounds: usize,
    /// `2√κ_g (τ/λ) log(2L_g‖ū⁰−x*‖²/ε) log(D_1/√ε + D_2)`.
    pub total_rounds_bound: f64,
}

impl TheoryParameters {
    /// `dist0 = ‖ū⁰ − x*‖` and `grad_norm_star = ‖∇F(X*)‖` may be exact or
    /// upper estimates.
    pub fn derive(
        constants: Constants,
        n: usize,
        epsilon: f64,
        dist0: f64,
        grad_norm_star: f64,
        contraction: ContractionEstimate,
    ) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon {epsilon} must be positive")));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("empty network".into()));
        }
        let c = constants;
        let (l, mu) = AlgoParams::oracle_constants(&c);
        let delta_prime = compute_delta_prime(epsilon, n, c.mu_g, c.l_g, c.l_l);
        let delta = compute_delta(delta_prime, n, c.mu_g, c.l_g, c.mu_l, c.l_l);
        let d_bound = compute_d(delta_prime, l, mu, c.l_l, n, dist0, grad_norm_star);
        let rounds = compute_t(contraction.tau, contraction.lambda, d_bound, delta_prime);
        let outer_iterations = compute_outer_iterations(epsilon, c.l_g, c.mu_g, dist0);
        let (d1, d2) = log_coefficients(&c, n, dist0, grad_norm_star);
        let total_rounds_bound = outer_iterations_raw(epsilon, c.l_g, c.mu_g, dist0)
            * contraction.tau as f64
            / contraction.lambda
            * (d1 / epsilon.sqrt() + d2).ln();
        Ok(Self {
            n,
            constants: c,
            epsilon,
            l,
            mu,
            tau: contraction.tau,
            lambda: contraction.lambda,
            chi: contraction.chi,
            dist0,
            grad_norm_star,
            delta_prime,
            delta,
            d_bound,
            d1,
            d2,
            outer_iterations,
            outer_iterations_alternate: outer_iterations_alternate(epsilon, c.l_g, c.mu_g, dist0),
            rounds,
            total_rounds: outer_iterations * rounds,
            total_rounds_bound,
        })
    }

    /// Sources `dist0` and `‖∇F(X*)‖` from a reference solution.
    pub fn from_solution(
        p: &ProblemInstance,
        solution: &Solution,
        x0: &nalgebra::DVector<f64>,
        epsilon: f64,
        contraction: ContractionEstimate,
    ) -> Result<Self> {
        let dist0 = (x0 - &solution.x).norm();
        let grad_norm_star = p.stacked_gradient_norm_at(&solution.x);
        Self::derive(p.constants(), p.n(), epsilon, dist0, grad_norm_star, contraction)
    }

    pub fn algo_params(&self) -> AlgoParams {
        AlgoParams {
            l: self.l,
            mu: self.mu,
            rounds: self.rounds,
            delta_prime: self.delta_prime,
            epsilon: self.epsilon,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_constants() -> Constants {
        Constants {
            mu_l: 1.0,
            l_l: 1.0,
            mu_g: 1.0,
            l_g: 1.0,
        }
    }

    #[test]
    fn delta_prime_values() {
        assert!((compute_delta_prime(1.0, 4, 1.0, 1.0, 1.0) - 0.125).abs() < 1e-15);
        assert!((compute_delta_prime(1.0, 32, 1.0, 4.0, 2.0) - 0.125).abs() < 1e-15);
        let a = compute_delta_prime(0.3, 5, 0.7, 2.0, 3.0);
        let b = compute_delta_prime(0.6, 5, 0.7, 2.0, 3.0);
        assert!((b - 2.0 * a).abs() < 1e-15 * b);
    }

    #[test]
    fn delta_values() {
        assert!((compute_delta(1.0, 1, 1.0, 1.0, 1.0, 1.0) - 1.5).abs() < 1e-15);
        let (mu, l) = (0.5, 4.0);
        let expected = 0.5 * (l * l / l + 2.0 * l * l / mu + l - mu) * 0.01;
        assert!((compute_delta(0.01, 1, mu, l, mu, l) - expected).abs() < 1e-15);
        let a = compute_delta(1e-3, 3, 1.0, 2.0, 0.5, 3.0);
        assert!((compute_delta(3e-3, 3, 1.0, 2.0, 0.5, 3.0) - 3.0 * a).abs() < 1e-15);
    }

    #[test]
    fn outer_iterations() {
        // κ_g = 1: N = ⌈2 log(2 L_g dist0² / ε)⌉
        let expected = (2.0 * (2.0 * 3.0 * 4.0 / 1e-3_f64).ln()).ceil() as usize;
        assert_eq!(compute_outer_iterations(1e-3, 3.0, 3.0, 2.0), expected);
        let n1 = outer_iterations_raw(1e-6, 1.0, 1.0, 1.0);
        let n4 = outer_iterations_raw(1e-6, 4.0, 1.0, 0.5);
        assert!((n4 - 2.0 * n1).abs() < 1e-12);
        assert_eq!(compute_outer_iterations(10.0, 1.0, 1.0, 1.0), 1);
    }

    #[test]
    fn d_bound_values() {
        let d = compute_d(0.0, 2.0, 0.5, 3.0, 4, 1.5, 0.0);
        assert!((d.sqrt() - 3.0 / 0.5 * 2.0 * 1.5).abs() < 1e-12);
        let d = compute_d(1.0, 1.0, 1.0, 1.0, 1, 0.0, 0.0);
        assert!((d.sqrt() - (3.0 + 2.0 * 2f64.sqrt())).abs() < 1e-14);
        let base = compute_d(0.1, 2.0, 0.5, 3.0, 4, 1.0, 1.0);
        assert!(compute_d(0.2, 2.0, 0.5, 3.0, 4, 1.0, 1.0) > base);
        assert!(compute_d(0.1, 2.0, 0.5, 3.5, 4, 1.0, 1.0) > base);
        assert!(compute_d(0.1, 2.0, 0.5, 3.0, 5, 1.0, 1.0) > base);
        assert!(compute_d(0.1, 2.0, 0.5, 3.0, 4, 1.1, 1.0) > base);
        assert!(compute_d(0.1, 2.0, 0.5, 3.0, 4, 1.0, 1.1) > base);
    }

    #[test]
    fn rounds_values() {
        assert_eq!(compute_t(1, 0.5, 1.0, 1.0), 1);
        assert_eq!(compute_t(1, 0.5, 2f64.exp(), 1.0), 2);
        let t = compute_t(2, 0.1, 1e8, 1e-3);
        let half = compute_t(2, 0.05, 1e8, 1e-3);
        assert!(half == 2 * t || half == 2 * t - 1);
        assert_eq!(compute_t(1, 0.5, 0.5, 1.0), 1);
    }

    #[test]
    fn derived_parameters_are_consistent() {
        let est = ContractionEstimate {
            tau: 2,
            lambda: 0.25,
            chi: 8.0,
        };
        let t = TheoryParameters::derive(unit_constants(), 4, 1e-4, 2.0, 0.5, est).unwrap();
        assert_eq!(t.l, 2.0);
        assert_eq!(t.mu, 0.5);
        assert_eq!(t.total_rounds, t.outer_iterations * t.rounds);
        assert!(t.d_bound > t.delta_prime);
        let p = t.algo_params();
        assert_eq!(p.rounds, t.rounds);
        assert!(TheoryParameters::derive(unit_constants(), 4, -1.0, 2.0, 0.5, est).is_err());
    }

    #[test]
    fn algo_params_validation() {
        assert!(AlgoParams::new(1.0, 2.0, 1, 1.0, 1.0).is_err());
        assert!(AlgoParams::new(2.0, 1.0, 0, 1.0, 1.0).is_err());
        assert!(AlgoParams::new(2.0, 1.0, 3, 0.0, 1.0).is_err());
        assert!(AlgoParams::new(2.0, 1.0, 3, 1.0, 1.0).is_ok());
    }
}
