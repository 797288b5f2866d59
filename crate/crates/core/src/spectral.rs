//! Largest singular values of small dense matrices.

use nalgebra::DMatrix;

/// Largest singular value. Symmetric inputs use their own eigenvalues;
/// otherwise the eigenvalues of `MᵀM`.
pub fn sigma_max(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.is_square() && is_symmetric(m) {
        let eig = m.clone().symmetric_eigen();
        return eig.eigenvalues.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    }
    let gram = m.transpose() * m;
    let eig = gram.symmetric_eigen();
    eig.eigenvalues.iter().fold(0.0_f64, |acc, &v| acc.max(v)).max(0.0).sqrt()
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|j| m[(i, j)] == m[(j, i)]))
}

/// Power iteration on `MᵀM` from a fixed dense start vector. Stops when the
/// Rayleigh estimate changes by less than `tol` (relative).
pub fn sigma_max_power(m: &DMatrix<f64>, tol: f64, max_iter: usize) -> f64 {
    let cols = m.ncols();
    if m.nrows() == 0 || cols == 0 {
        return 0.0;
    }
    // Irrational-ish weights keep the start off any structured eigenvector.
    let mut v = nalgebra::DVector::from_fn(cols, |i, _| 1.0 + ((i as f64 + 1.0) * 0.618_033_988_7).fract());
    v /= v.norm();
    let mut estimate = 0.0;
    for _ in 0..max_iter {
        let w = m.transpose() * (m * &v);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm.sqrt();
        v = w / norm;
        if (next - estimate).abs() <= tol * next {
            return next;
        }
        estimate = next;
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_and_rank_one() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, -3.0, 2.0]));
        assert!((sigma_max(&d) - 3.0).abs() < 1e-14);
        let r = DMatrix::from_element(4, 4, 0.25);
        assert!((sigma_max(&r) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn nonsymmetric_matches_power_iteration() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, 3.0, 0.5, 0.0, 1.0]);
        let svd = m.clone().svd(false, false);
        let expected = svd.singular_values.max();
        assert!((sigma_max(&m) - expected).abs() < 1e-12);
        assert!((sigma_max_power(&m, 1e-14, 10_000) - expected).abs() < 1e-9);
    }

    #[test]
    fn zero_matrix() {
        assert_eq!(sigma_max(&DMatrix::zeros(3, 3)), 0.0);
        assert_eq!(sigma_max_power(&DMatrix::zeros(3, 2), 1e-10, 10), 0.0);
    }
}
