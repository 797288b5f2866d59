use nalgebra::{DMatrix, DVector};

/// Stacked agent parameters: row `i` is agent `i`'s vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributedState(DMatrix<f64>);

impl DistributedState {
    pub fn new(x: DMatrix<f64>) -> Self {
        Self(x)
    }

    /// Every agent holds `x`.
    pub fn consensual(n: usize, x: &DVector<f64>) -> Self {
        Self(DMatrix::from_fn(n, x.len(), |_, j| x[j]))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.0.row(i).transpose()
    }

    /// Column mean `x̄`.
    pub fn mean(&self) -> DVector<f64> {
        let n = self.n().max(1) as f64;
        self.0.row_sum().transpose() / n
    }

    /// Projection onto the consensus subspace: every row replaced by `x̄`.
    pub fn projection(&self) -> DistributedState {
        Self::consensual(self.n(), &self.mean())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// `‖X - X̄‖²`, squared Frobenius distance to the consensus subspace.
pub fn consensus_error(x: &DistributedState) -> f64 {
    consensus_error_matrix(x.matrix())
}

pub(crate) fn consensus_error_matrix(x: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for col in x.column_iter() {
        let mean = col.sum() / n as f64;
        total += col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    }
    total
}
