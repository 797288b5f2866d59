//! Local objectives `f_i`, their curvature constants, and the stacked
//! objective `F(X) = Σ f_i(x_i)`.

mod libsvm;
mod synthetic;

pub use libsvm::{
    parse_libsvm, parse_libsvm_str, partition_dataset, partition_indices, write_libsvm, LibsvmData, LocalModel,
    PartitionScheme, SparseRow,
};
pub use synthetic::SyntheticQuadratic;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::state::DistributedState;

/// Relative threshold under which a smallest Hessian eigenvalue counts as
/// zero.
const STRONG_CONVEXITY_FLOOR: f64 = 1e-12;

/// Default gradient-norm target of [`minimizer_oracle`].
pub const DEFAULT_ORACLE_TOL: f64 = 1e-12;

const ORACLE_MAX_ITER: usize = 500_000;

/// `½‖A x − b‖² + (θ/2)‖x‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticBlock {
    a: DMatrix<f64>,
    b: DVector<f64>,
    theta: f64,
}

impl QuadraticBlock {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, theta: f64) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                actual: b.len(),
            });
        }
        if !(theta >= 0.0) {
            return Err(Error::InvalidParameter(format!("ridge penalty {theta} must be nonnegative")));
        }
        Ok(Self { a, b, theta })
    }

    /// `½ w ‖x − c‖²`, written as `A = √w I`, `b = √w c`.
    pub fn isotropic(weight: f64, center: &DVector<f64>) -> Result<Self> {
        if !(weight > 0.0) {
            return Err(Error::InvalidParameter(format!("weight {weight} must be positive")));
        }
        let s = weight.sqrt();
        let d = center.len();
        Self::new(DMatrix::identity(d, d) * s, center * s, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        let r = &self.a * x - &self.b;
        0.5 * r.norm_squared() + 0.5 * self.theta * x.norm_squared()
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let r = &self.a * x - &self.b;
        self.a.tr_mul(&r) + x * self.theta
    }

    /// `AᵀA + θI`.
    pub fn hessian(&self) -> DMatrix<f64> {
        let d = self.dim();
        self.a.tr_mul(&self.a) + DMatrix::identity(d, d) * self.theta
    }

    /// `Aᵀb`.
    pub fn linear_term(&self) -> DVector<f64> {
        self.a.tr_mul(&self.b)
    }
}

/// `(1/m) Σ_j log(1 + exp(−b_j⟨a_j, x⟩)) + (θ/2)‖x‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticL2 {
    features: DMatrix<f64>,
    labels: DVector<f64>,
    theta: f64,
}

impl LogisticL2 {
    pub fn new(features: DMatrix<f64>, labels: DVector<f64>, theta: f64) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                actual: labels.len(),
            });
        }
        if features.nrows() == 0 {
            return Err(Error::InvalidParameter("logistic loss needs at least one sample".into()));
        }
        if let Some(bad) = labels.iter().find(|&&l| l != 1.0 && l != -1.0) {
            return Err(Error::InvalidParameter(format!("logistic label {bad} not in {{-1, +1}}")));
        }
        if !(theta > 0.0) {
            return Err(Error::InvalidParameter(format!("logistic penalty {theta} must be positive")));
        }
        Ok(Self {
            features,
            labels,
            theta,
        })
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn margins(&self, x: &DVector<f64>) -> DVector<f64> {
        (&self.features * x).component_mul(&self.labels)
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        let m = self.features.nrows() as f64;
        let loss: f64 = self.margins(x).iter().map(|&z| softplus(-z)).sum();
        loss / m + 0.5 * self.theta * x.norm_squared()
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let m = self.features.nrows() as f64;
        // d/dz log(1 + e^{-z}) = -sigmoid(-z)
        let weights = self
            .margins(x)
            .zip_map(&self.labels, |z, b| -b * sigmoid(-z) / m);
        self.features.tr_mul(&weights) + x * self.theta
    }

    /// `μ = θ`, `L = θ + λ_max(AᵀA) / (4m)` from `σ'(z) ≤ 1/4`.
    pub fn curvature(&self) -> Curvature {
        let m = self.features.nrows() as f64;
        let gram = self.features.tr_mul(&self.features);
        let top = gram.symmetric_eigen().eigenvalues.max().max(0.0);
        Curvature {
            mu: self.theta,
            l: self.theta + top / (4.0 * m),
        }
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LocalFunction {
    Quadratic(QuadraticBlock),
    Logistic(LogisticL2),
}

impl LocalFunction {
    pub fn dim(&self) -> usize {
        match self {
            LocalFunction::Quadratic(q) => q.dim(),
            LocalFunction::Logistic(l) => l.dim(),
        }
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        match self {
            LocalFunction::Quadratic(q) => q.value(x),
            LocalFunction::Logistic(l) => l.value(x),
        }
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            LocalFunction::Quadratic(q) => q.gradient(x),
            LocalFunction::Logistic(l) => l.gradient(x),
        }
    }

    pub fn curvature(&self) -> Curvature {
        match self {
            LocalFunction::Quadratic(q) => {
                let eig = q.hessian().symmetric_eigen().eigenvalues;
                Curvature {
                    mu: eig.min(),
                    l: eig.max(),
                }
            }
            LocalFunction::Logistic(l) => l.curvature(),
        }
    }
}

impl From<QuadraticBlock> for LocalFunction {
    fn from(q: QuadraticBlock) -> Self {
        LocalFunction::Quadratic(q)
    }
}

impl From<LogisticL2> for LocalFunction {
    fn from(l: LogisticL2) -> Self {
        LocalFunction::Logistic(l)
    }
}

/// Strong convexity and smoothness of one local function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Curvature {
    pub mu: f64,
    pub l: f64,
}

/// Local (`min μ_i`, `max L_i`) and global (mean `μ_i`, mean `L_i`)
/// curvature constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub mu_l: f64,
    pub l_l: f64,
    pub mu_g: f64,
    pub l_g: f64,
}

impl Constants {
    pub fn from_curvatures(curv: &[Curvature]) -> Result<Self> {
        if curv.is_empty() {
            return Err(Error::InvalidParameter("problem needs at least one agent".into()));
        }
        for (agent, c) in curv.iter().enumerate() {
            if !(c.mu > STRONG_CONVEXITY_FLOOR * c.l.abs().max(1.0)) {
                return Err(Error::NotStronglyConvex { agent, mu: c.mu });
            }
        }
        let n = curv.len() as f64;
        Ok(Self {
            mu_l: curv.iter().map(|c| c.mu).fold(f64::INFINITY, f64::min),
            l_l: curv.iter().map(|c| c.l).fold(f64::NEG_INFINITY, f64::max),
            mu_g: curv.iter().map(|c| c.mu).sum::<f64>() / n,
            l_g: curv.iter().map(|c| c.l).sum::<f64>() / n,
        })
    }

    pub fn kappa_g(&self) -> f64 {
        self.l_g / self.mu_g
    }

    pub fn kappa_l(&self) -> f64 {
        self.l_l / self.mu_l
    }
}

/// The `n` local functions of a decentralized problem with their constants.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    locals: Vec<LocalFunction>,
    dim: usize,
    curvatures: Vec<Curvature>,
    constants: Constants,
}

impl ProblemInstance {
    pub fn new(locals: Vec<LocalFunction>) -> Result<Self> {
        let dim = locals
            .first()
            .map(LocalFunction::dim)
            .ok_or_else(|| Error::InvalidParameter("problem needs at least one agent".into()))?;
        if let Some(bad) = locals.iter().find(|f| f.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.dim(),
            });
        }
        let curvatures: Vec<_> = locals.iter().map(LocalFunction::curvature).collect();
        let constants = Constants::from_curvatures(&curvatures)?;
        Ok(Self {
            locals,
            dim,
            curvatures,
            constants,
        })
    }

    pub fn n(&self) -> usize {
        self.locals.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn locals(&self) -> &[LocalFunction] {
        &self.locals
    }

    pub fn curvatures(&self) -> &[Curvature] {
        &self.curvatures
    }

    pub fn constants(&self) -> Constants {
        self.constants
    }

    fn check_state(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.nrows() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                actual: x.nrows(),
            });
        }
        if x.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: x.ncols(),
            });
        }
        Ok(())
    }

    /// `f(x) = (1/n) Σ f_i(x)`.
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        self.locals.iter().map(|f| f.value(x)).sum::<f64>() / self.n() as f64
    }

    /// `∇f(x)`.
    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim);
        for f in &self.locals {
            g += f.gradient(x);
        }
        g / self.n() as f64
    }

    /// `F(X) = Σ f_i(x_i)`.
    pub fn stacked_value(&self, s: &DistributedState) -> Result<f64> {
        self.check_state(s.matrix())?;
        Ok(self
            .locals
            .iter()
            .enumerate()
            .map(|(i, f)| f.value(&s.row(i)))
            .sum())
    }

    /// Row `i` is `∇f_i(x_i)`: one gradient evaluation at every agent.
    pub fn stacked_gradient(&self, s: &DistributedState) -> Result<DMatrix<f64>> {
        self.stacked_gradient_matrix(s.matrix())
    }

    pub(crate) fn stacked_gradient_matrix(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_state(x)?;
        let mut g = DMatrix::zeros(self.n(), self.dim);
        for (i, f) in self.locals.iter().enumerate() {
            let gi = f.gradient(&x.row(i).transpose());
            g.set_row(i, &gi.transpose());
        }
        Ok(g)
    }

    /// `(1/n) Σ ∇f_i(x_i)`, the inexact-oracle gradient at `x̄`.
    pub fn average_gradient(&self, s: &DistributedState) -> Result<DVector<f64>> {
        let g = self.stacked_gradient(s)?;
        Ok(g.row_sum().transpose() / self.n() as f64)
    }

    /// `‖∇F(X)‖` at the consensual state where every agent holds `x`.
    pub fn stacked_gradient_norm_at(&self, x: &DVector<f64>) -> f64 {
        self.locals
            .iter()
            .map(|f| f.gradient(x).norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    fn all_quadratic(&self) -> Option<Vec<&QuadraticBlock>> {
        self.locals
            .iter()
            .map(|f| match f {
                LocalFunction::Quadratic(q) => Some(q),
                LocalFunction::Logistic(_) => None,
            })
            .collect()
    }
}

/// Recomputes `(μ_l, L_l, μ_g, L_g)` from the local functions.
pub fn compute_constants(p: &ProblemInstance) -> Result<Constants> {
    let curv: Vec<_> = p.locals().iter().map(LocalFunction::curvature).collect();
    Constants::from_curvatures(&curv)
}

/// Reference minimizer of `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: DVector<f64>,
    pub f: f64,
    /// Hessian of `f` when it is constant.
    pub hessian: Option<DMatrix<f64>>,
}

impl Solution {
    /// `f(x) − f*`; exact quadratic form for quadratic problems.
    pub fn gap(&self, p: &ProblemInstance, x: &DVector<f64>) -> f64 {
        match &self.hessian {
            Some(h) => {
                let e = x - &self.x;
                0.5 * e.dot(&(h * &e))
            }
            None => p.objective(x) - self.f,
        }
    }

    pub fn distance_sq(&self, x: &DVector<f64>) -> f64 {
        (x - &self.x).norm_squared()
    }
}

/// Minimizer of `f`: normal equations when every local is quadratic,
/// otherwise centralized accelerated gradient until `‖∇f‖ ≤ tol`.
pub fn minimizer_oracle(p: &ProblemInstance, tol: f64) -> Result<Solution> {
    let n = p.n() as f64;
    if let Some(quads) = p.all_quadratic() {
        let d = p.dim();
        let mut h = DMatrix::zeros(d, d);
        let mut r = DVector::zeros(d);
        for q in quads {
            h += q.hessian();
            r += q.linear_term();
        }
        h /= n;
        r /= n;
        let chol = h
            .clone()
            .cholesky()
            .ok_or(Error::NotStronglyConvex { agent: 0, mu: 0.0 })?;
        let mut x = chol.solve(&r);
        let residual = &r - &h * &x;
        x += chol.solve(&residual);
        let f = p.objective(&x);
        return Ok(Solution {
            x,
            f,
            hessian: Some(h),
        });
    }
    let x = accelerated_descent(p, tol)?;
    let f = p.objective(&x);
    Ok(Solution { x, f, hessian: None })
}

/// Constant-momentum Nesterov scheme on `f` with `(μ_g, L_g)`.
fn accelerated_descent(p: &ProblemInstance, tol: f64) -> Result<DVector<f64>> {
    let c = p.constants();
    let q = (c.mu_g / c.l_g).sqrt();
    let beta = (1.0 - q) / (1.0 + q);
    let step = 1.0 / c.l_g;
    let mut x = DVector::zeros(p.dim());
    let mut y = x.clone();
    let mut grad_norm = f64::INFINITY;
    for _ in 0..ORACLE_MAX_ITER {
        let gx = p.gradient(&x);
        grad_norm = gx.norm();
        if grad_norm <= tol {
            return Ok(x);
        }
        let next = &y - p.gradient(&y) * step;
        y = &next + (&next - &x) * beta;
        x = next;
        if !grad_norm.is_finite() {
            break;
        }
    }
    Err(Error::NoConvergence {
        iterations: ORACLE_MAX_ITER,
        grad_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_quadratics(weights: &[f64], centers: &[f64]) -> ProblemInstance {
        let locals = weights
            .iter()
            .zip(centers)
            .map(|(&a, &c)| QuadraticBlock::isotropic(a, &DVector::from_element(1, c)).unwrap().into())
            .collect();
        ProblemInstance::new(locals).unwrap()
    }

    #[test]
    fn gradient_vanishes_at_center() {
        let c = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let q = QuadraticBlock::isotropic(3.0, &c).unwrap();
        assert!(q.gradient(&c).norm() < 1e-15);
    }

    #[test]
    fn isotropic_gradient() {
        let q = LocalFunction::from(QuadraticBlock::isotropic(2.0, &DVector::zeros(2)).unwrap());
        let g = q.gradient(&DVector::from_vec(vec![1.0, 0.0]));
        assert!((g[0] - 2.0).abs() < 1e-15 && g[1].abs() < 1e-15);
    }

    #[test]
    fn logistic_gradient_at_origin() {
        let f = LogisticL2::new(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), DVector::from_element(1, 1.0), 0.1)
            .unwrap();
        let g = f.gradient(&DVector::zeros(2));
        assert!((g[0] + 0.5).abs() < 1e-15 && g[1] == 0.0);
        let c = f.curvature();
        assert!((c.mu - 0.1).abs() < 1e-15);
        assert!((c.l - 0.35).abs() < 1e-15);
    }

    #[test]
    fn average_gradient_is_row_mean() {
        let p = scalar_quadratics(&[1.0, 1.0], &[0.0, 0.0]);
        let s = DistributedState::new(DMatrix::from_row_slice(2, 1, &[1.0, 0.0]));
        assert!((p.average_gradient(&s).unwrap()[0] - 0.5).abs() < 1e-15);
        let zero = DistributedState::new(DMatrix::zeros(2, 1));
        assert_eq!(p.average_gradient(&zero).unwrap()[0], 0.0);
    }

    #[test]
    fn two_agent_average_gradient() {
        let locals = vec![
            QuadraticBlock::isotropic(1.0, &DVector::from_vec(vec![-1.0, 0.0])).unwrap().into(),
            QuadraticBlock::isotropic(1.0, &DVector::from_vec(vec![0.0, -1.0])).unwrap().into(),
        ];
        let p = ProblemInstance::new(locals).unwrap();
        let s = DistributedState::new(DMatrix::zeros(2, 2));
        let g = p.average_gradient(&s).unwrap();
        assert!((g[0] - 0.5).abs() < 1e-15 && (g[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn consensual_average_gradient_is_exact() {
        let p = scalar_quadratics(&[1.0, 2.0, 3.0], &[0.0, 1.0, 2.0]);
        let x = DVector::from_element(1, 0.3);
        let s = DistributedState::consensual(3, &x);
        assert!((p.average_gradient(&s).unwrap() - p.gradient(&x)).norm() < 1e-15);
    }

    #[test]
    fn scalar_constants() {
        let p = scalar_quadratics(&[1.0, 2.0, 3.0], &[0.0, 0.0, 0.0]);
        let c = p.constants();
        assert!((c.mu_l - 1.0).abs() < 1e-14);
        assert!((c.l_l - 3.0).abs() < 1e-14);
        assert!((c.mu_g - 2.0).abs() < 1e-14);
        assert!((c.l_g - 2.0).abs() < 1e-14);
        assert_eq!(compute_constants(&p).unwrap(), c);
    }

    #[test]
    fn identical_locals_share_constants() {
        let p = scalar_quadratics(&[2.5, 2.5, 2.5, 2.5], &[0.0, 1.0, 2.0, 3.0]);
        let c = p.constants();
        assert!((c.mu_l - c.mu_g).abs() < 1e-14 && (c.l_l - c.l_g).abs() < 1e-14);
    }

    #[test]
    fn rank_deficient_block_rejected() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let q = QuadraticBlock::new(a, DVector::from_element(1, 1.0), 0.0).unwrap();
        let err = ProblemInstance::new(vec![q.into()]).unwrap_err();
        assert!(matches!(err, Error::NotStronglyConvex { agent: 0, .. }));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let p = scalar_quadratics(&[1.0, 2.0], &[0.0, 1.0]);
        let s = DistributedState::new(DMatrix::zeros(3, 1));
        assert!(matches!(p.stacked_gradient(&s), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn weighted_mean_minimizer() {
        let p = scalar_quadratics(&[1.0, 2.0, 3.0], &[0.0, 1.0, 2.0]);
        let sol = minimizer_oracle(&p, DEFAULT_ORACLE_TOL).unwrap();
        assert!((sol.x[0] - 8.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn single_agent_minimizer() {
        let c = DVector::from_vec(vec![0.5, -1.5]);
        let p = ProblemInstance::new(vec![QuadraticBlock::isotropic(1.0, &c).unwrap().into()]).unwrap();
        let sol = minimizer_oracle(&p, DEFAULT_ORACLE_TOL).unwrap();
        assert!((sol.x - c).norm() < 1e-15);
        assert!(sol.f.abs() < 1e-30);
    }

    #[test]
    fn symmetric_pair_minimizer() {
        let p = scalar_quadratics(&[4.0, 4.0], &[-1.0, 1.0]);
        let sol = minimizer_oracle(&p, DEFAULT_ORACLE_TOL).unwrap();
        assert!(sol.x[0].abs() < 1e-15);
    }

    #[test]
    fn logistic_minimizer_reaches_tolerance() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.5, -0.3, 1.0, 0.8, -1.2, -1.0, -0.4]);
        let b = DVector::from_vec(vec![1.0, -1.0, 1.0, -1.0]);
        let f = LogisticL2::new(a, b, 0.05).unwrap();
        let p = ProblemInstance::new(vec![f.clone().into(), f.into()]).unwrap();
        let sol = minimizer_oracle(&p, 1e-12).unwrap();
        assert!(p.gradient(&sol.x).norm() <= 1e-12);
        assert!(sol.hessian.is_none());
        assert!((sol.gap(&p, &sol.x)).abs() < 1e-15);
    }

    #[test]
    fn quadratic_gap_matches_direct_difference() {
        let p = scalar_quadratics(&[1.0, 2.0, 3.0], &[0.0, 1.0, 2.0]);
        let sol = minimizer_oracle(&p, DEFAULT_ORACLE_TOL).unwrap();
        let x = DVector::from_element(1, 2.5);
        assert!((sol.gap(&p, &x) - (p.objective(&x) - sol.f)).abs() < 1e-13);
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
    }
}
