use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{LocalFunction, ProblemInstance, QuadraticBlock};
use crate::error::{Error, Result};

/// Random least-squares problem with prescribed global condition number.
///
/// All agents share one orthonormal eigenbasis `Q`. Agent `i` gets
/// `A_i = diag(√e_i) Qᵀ` with `e_i` spanning `[μ_i, L_i]`, where the
/// smallest and largest eigenvalues sit on the same basis vectors for every
/// agent. That makes `μ_g = 1` and `L_g = kappa_g` the exact extreme
/// eigenvalues of the averaged Hessian. `spread ≥ 1` scatters the per-agent
/// `μ_i` and `L_i` log-uniformly over a factor `spread` (then renormalized),
/// which pushes `κ_l` above `κ_g`. Targets are `b_i = A_i c_i + noise·ξ`
/// with agent-specific centers `c_i`, so local minimizers disagree.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticQuadratic {
    pub n: usize,
    pub d: usize,
    pub kappa_g: f64,
    pub spread: f64,
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticQuadratic {
    pub fn new(n: usize, d: usize, kappa_g: f64, seed: u64) -> Self {
        Self {
            n,
            d,
            kappa_g,
            spread: 1.0,
            noise: 0.0,
            seed,
        }
    }

    pub fn with_spread(mut self, spread: f64) -> Self {
        self.spread = spread;
        self
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn generate(&self) -> Result<ProblemInstance> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (n, d) = (self.n, self.d);

        let gaussian = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = gaussian.qr().q();

        let draw_scales = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let raw: Vec<f64> = (0..n).map(|_| self.spread.powf(rng.random::<f64>())).collect();
            let mean = raw.iter().sum::<f64>() / n as f64;
            raw.into_iter().map(|v| v / mean).collect()
        };
        let mu: Vec<f64> = draw_scales(&mut rng);
        let l: Vec<f64> = draw_scales(&mut rng).into_iter().map(|v| v * self.kappa_g).collect();
        if d == 1 {
            // A single eigenvalue per agent: L_i = μ_i.
            return self.assemble(&q, mu.iter().map(|&m| vec![m]).collect(), &mut rng);
        }
        if let Some(i) = (0..n).find(|&i| mu[i] >= l[i] && self.kappa_g > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "agent {i}: spread {} too wide for kappa_g {}",
                self.spread, self.kappa_g
            )));
        }
        let spectra = (0..n)
            .map(|i| {
                let mut e = vec![0.0; d];
                e[0] = mu[i];
                e[d - 1] = l[i];
                for slot in e.iter_mut().take(d - 1).skip(1) {
                    *slot = mu[i] * (l[i] / mu[i]).powf(rng.random::<f64>());
                }
                e
            })
            .collect();
        self.assemble(&q, spectra, &mut rng)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::InvalidParameter("synthetic problem needs n, d >= 1".into()));
        }
        if !(self.kappa_g >= 1.0) {
            return Err(Error::InvalidParameter(format!("kappa_g {} must be >= 1", self.kappa_g)));
        }
        if self.d == 1 && self.kappa_g != 1.0 {
            return Err(Error::InvalidParameter("d = 1 forces kappa_g = 1".into()));
        }
        if !(self.spread >= 1.0) {
            return Err(Error::InvalidParameter(format!("spread {} must be >= 1", self.spread)));
        }
        if !(self.noise >= 0.0) {
            return Err(Error::InvalidParameter(format!("noise {} must be >= 0", self.noise)));
        }
        Ok(())
    }

    fn assemble(&self, q: &DMatrix<f64>, spectra: Vec<Vec<f64>>, rng: &mut ChaCha8Rng) -> Result<ProblemInstance> {
        let d = self.d;
        let locals = spectra
            .into_iter()
            .map(|e| {
                let scale = DMatrix::from_diagonal(&DVector::from_iterator(d, e.iter().map(|v| v.sqrt())));
                let a = scale * q.transpose();
                let center = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                let noise = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal)) * self.noise;
                let b = &a * center + noise;
                QuadraticBlock::new(a, b, 0.0).map(LocalFunction::from)
            })
            .collect::<Result<Vec<_>>>()?;
        ProblemInstance::new(locals)
    }
}
