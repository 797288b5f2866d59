/// Accelerated-scheme weights: `A^{k+1} = A^k + α^{k+1}` where `α^{k+1}` is
/// the greater root of `(A^k + α)(1 + A^k μ) = L α²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientState {
    pub a: f64,
    pub alpha: f64,
    pub k: usize,
}

impl CoefficientState {
    pub const INITIAL: CoefficientState = CoefficientState {
        a: 0.0,
        alpha: 0.0,
        k: 0,
    };

    /// `|(A_prev + α)(1 + A_prev μ) − L α²| / (L α²)` for this step, where
    /// `A_prev = A − α`.
    pub fn relative_residual(&self, l: f64, mu: f64) -> f64 {
        let prev = self.a - self.alpha;
        let rhs = l * self.alpha * self.alpha;
        ((prev + self.alpha) * (1.0 + prev * mu) - rhs).abs() / rhs
    }
}

/// Closed-form greater root
/// `α = (s + √(s² + 4 L A s)) / (2L)` with `s = 1 + A μ`.
pub fn next_coefficients(c: &CoefficientState, l: f64, mu: f64) -> CoefficientState {
    let s = 1.0 + c.a * mu;
    let alpha = (s + (s * s + 4.0 * l * c.a * s).sqrt()) / (2.0 * l);
    CoefficientState {
        a: c.a + alpha,
        alpha,
        k: c.k + 1,
    }
}

/// `A^0 … A^steps`.
pub fn coefficient_sequence(l: f64, mu: f64, steps: usize) -> Vec<CoefficientState> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut c = CoefficientState::INITIAL;
    out.push(c);
    for _ in 0..steps {
        c = next_coefficients(&c, l, mu);
        out.push(c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_is_inverse_l() {
        for l in [0.5, 1.0, 7.0] {
            let c = next_coefficients(&CoefficientState::INITIAL, l, 0.3);
            assert!((c.alpha - 1.0 / l).abs() < 1e-15);
            assert!((c.a - 1.0 / l).abs() < 1e-15);
            assert_eq!(c.k, 1);
        }
    }

    #[test]
    fn greater_root_with_strong_convexity() {
        // α² − 2α − 2 = 0
        let c = next_coefficients(&CoefficientState { a: 1.0, alpha: 1.0, k: 1 }, 1.0, 1.0);
        assert!((c.alpha - (1.0 + 3f64.sqrt())).abs() < 1e-14);
        assert!((c.alpha - 2.732_050_8).abs() < 1e-7);
    }

    #[test]
    fn golden_ratio_without_strong_convexity() {
        // α² − α − 1 = 0
        let c = next_coefficients(&CoefficientState { a: 1.0, alpha: 1.0, k: 1 }, 1.0, 0.0);
        assert!((c.alpha - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn residual_small_along_sequence() {
        for &(l, mu) in &[(1.0, 1.0), (2.0, 0.01), (100.0, 1e-4)] {
            let seq = coefficient_sequence(l, mu, 200);
            for w in seq.windows(2) {
                assert!(w[1].a > w[0].a);
                assert!(w[1].relative_residual(l, mu) <= 1e-10);
            }
        }
    }
}
