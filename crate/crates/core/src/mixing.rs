//! Metropolis gossip matrices and their contraction parameters.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graphs::{EdgeSet, GraphSequence};
use crate::spectral::sigma_max;

/// Below this a measured contraction factor is treated as zero: products of
/// disconnected gossip matrices have `sigma_max(W - J) = 1` up to rounding.
pub const CONTRACTION_FLOOR: f64 = 1e-10;

/// Default number of steps inspected by [`estimate_contraction`].
pub const DEFAULT_HORIZON: usize = 200;

/// Dense gossip matrix together with the edge set it must respect.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    weights: DMatrix<f64>,
    edges: EdgeSet,
}

impl MixingMatrix {
    /// Wraps an arbitrary matrix without checking it; see [`verify_mixing`].
    pub fn from_parts(weights: DMatrix<f64>, edges: EdgeSet) -> Result<Self> {
        let n = edges.n();
        if weights.nrows() != n || weights.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: weights.nrows().max(weights.ncols()),
            });
        }
        Ok(Self { weights, edges })
    }

    pub fn n(&self) -> usize {
        self.edges.n()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn source_edges(&self) -> &EdgeSet {
        &self.edges
    }

    /// One gossip round `W X`.
    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        &self.weights * x
    }

    /// Row per line, comma separated, shortest round-trip float formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.weights.row_iter() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// `W_ij = 1 / (1 + max(d_i, d_j))` on edges, zero off edges, diagonal
/// fills each row to one.
pub fn metropolis_weights(edges: &EdgeSet) -> MixingMatrix {
    let n = edges.n();
    let deg = edges.degrees();
    let mut w = DMatrix::zeros(n, n);
    for &(i, j) in edges.edges() {
        let v = 1.0 / (1.0 + deg[i].max(deg[j]) as f64);
        w[(i, j)] = v;
        w[(j, i)] = v;
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
        w[(i, i)] = 1.0 - off;
    }
    MixingMatrix {
        weights: w,
        edges: edges.clone(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixingReport {
    pub tol: f64,
    /// Off-edge, off-diagonal entries that are not exactly zero.
    pub off_edge_nonzeros: usize,
    pub max_row_deviation: f64,
    pub max_col_deviation: f64,
    pub min_entry: f64,
}

impl MixingReport {
    pub fn sparsity_ok(&self) -> bool {
        self.off_edge_nonzeros == 0
    }

    pub fn row_sums_ok(&self) -> bool {
        self.max_row_deviation <= self.tol
    }

    pub fn col_sums_ok(&self) -> bool {
        self.max_col_deviation <= self.tol
    }

    pub fn nonnegative_ok(&self) -> bool {
        self.min_entry >= -self.tol
    }

    pub fn passed(&self) -> bool {
        self.sparsity_ok() && self.row_sums_ok() && self.col_sums_ok() && self.nonnegative_ok()
    }
}

/// Checks the decentralized sparsity pattern, double stochasticity and
/// nonnegativity of `w`.
pub fn verify_mixing(w: &MixingMatrix, tol: f64) -> MixingReport {
    let n = w.n();
    let m = &w.weights;
    let mut off_edge_nonzeros = 0;
    let mut min_entry = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            let v = m[(i, j)];
            min_entry = min_entry.min(v);
            if i != j && v != 0.0 && !w.edges.contains(i, j) {
                off_edge_nonzeros += 1;
            }
        }
    }
    let max_row_deviation = m
        .row_iter()
        .map(|r| (r.sum() - 1.0).abs())
        .fold(0.0, f64::max);
    let max_col_deviation = m
        .column_iter()
        .map(|c| (c.sum() - 1.0).abs())
        .fold(0.0, f64::max);
    MixingReport {
        tol,
        off_edge_nonzeros,
        max_row_deviation,
        max_col_deviation,
        min_entry: if n == 0 { 0.0 } else { min_entry },
    }
}

/// `M - (1/n) 1 1ᵀ`.
pub fn remove_average(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    m.map(|v| v - 1.0 / n as f64)
}

/// `1 - sigma_2(W)` for a single doubly stochastic matrix, computed as
/// `1 - sigma_max(W - (1/n) 1 1ᵀ)`.
pub fn contraction_factor_static(w: &MixingMatrix) -> Result<f64> {
    if w.n() == 0 {
        return Err(Error::InvalidParameter("empty mixing matrix".into()));
    }
    Ok(1.0 - sigma_max(&remove_average(w.weights())))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionEstimate {
    pub tau: usize,
    pub lambda: f64,
    /// `tau / lambda`.
    pub chi: f64,
}

/// Measures `lambda = 1 - max_k sigma_max(W^k ⋯ W^{k-tau+1} - J)` over
/// windows ending at `k = tau-1 .. horizon-1`. Periodic sequences only
/// need one period of windows.
pub fn estimate_contraction(seq: &GraphSequence, tau: usize, horizon: usize) -> Result<ContractionEstimate> {
    if tau == 0 {
        return Err(Error::InvalidParameter("tau must be positive".into()));
    }
    if horizon < tau {
        return Err(Error::InvalidParameter(format!("horizon {horizon} shorter than tau {tau}")));
    }
    if seq.n() == 0 {
        return Err(Error::InvalidParameter("empty network".into()));
    }
    let last = match seq.period() {
        Some(p) => (tau - 1 + p).min(horizon),
        None => horizon,
    };
    let matrices: Vec<DMatrix<f64>> = (0..last)
        .map(|k| metropolis_weights(&seq.edge_set_at(k)).weights)
        .collect();
    let mut worst = 0.0_f64;
    for k in tau - 1..last {
        let mut product = matrices[k].clone();
        for m in matrices[k + 1 - tau..k].iter().rev() {
            product = &product * m;
        }
        worst = worst.max(sigma_max(&remove_average(&product)));
    }
    let lambda = 1.0 - worst;
    if lambda <= CONTRACTION_FLOOR {
        return Err(Error::NotContracting { tau, lambda });
    }
    Ok(ContractionEstimate {
        tau,
        lambda,
        chi: tau as f64 / lambda,
    })
}
