//! Floating-point helpers: Cholesky with a pivot threshold, SVD rank and kernels.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use nalgebra::{DMatrix, DVector};

/// Upper-triangular `U` with positive diagonal and `a = Uᵗ U`, or `None` when
/// some pivot is at or below `pd_tol`.
pub fn cholesky_upper(a: &DMatrix<f64>, pd_tol: f64) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        // written negated so that NaN pivots are rejected too
        if !(pivot > pd_tol) {
            return None;
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Some(l.transpose())
}

pub fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.nrows() == 0 {
        return f64::INFINITY;
    }
    a.clone().symmetric_eigen().eigenvalues.min()
}

/// Singular values, padded with zeros up to `max(rows, cols)` so that
/// wide matrices report their full kernel.
fn padded(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = a.shape();
    if r >= c {
        a.clone()
    } else {
        let mut p = DMatrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(a);
        p
    }
}

fn cutoff(sigma_max: f64, rows: usize, cols: usize, rel_tol: f64) -> f64 {
    rel_tol * sigma_max * rows.max(cols) as f64
}

/// Number of singular values above `rel_tol · σ_max · max(rows, cols)`.
pub fn numerical_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    let cut = cutoff(smax, r, c, rel_tol);
    sv.iter().filter(|&&s| s > cut).count()
}

/// Orthonormal basis (as columns) of the numerical kernel.
pub fn kernel_basis(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (r, c) = a.shape();
    if c == 0 {
        return DMatrix::zeros(0, 0);
    }
    if r == 0 {
        return DMatrix::identity(c, c);
    }
    let svd = padded(a).svd(false, true);
    let v_t = svd.v_t.expect("requested V");
    let smax = svd.singular_values.max();
    let cut = if smax == 0.0 { f64::INFINITY } else { cutoff(smax, r, c, rel_tol) };
    let cols: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| smax == 0.0 || s <= cut)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    if cols.is_empty() {
        DMatrix::zeros(c, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Minimum-norm least-squares solution of `a x = b`.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
    let (r, c) = a.shape();
    if r == 0 || c == 0 {
        return DVector::zeros(c);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = cutoff(smax, r, c, rel_tol);
    svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_diag() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]);
        let u = cholesky_upper(&a, 1e-10).unwrap();
        assert_eq!(u, DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]));
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(cholesky_upper(&b, 1e-10).is_none());
    }

    #[test]
    fn rank_and_kernel_of_wide_matrix() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(numerical_rank(&a, 1e-8), 2);
        let k = kernel_basis(&a, 1e-8);
        assert_eq!(k.ncols(), 1);
        assert!((k[(1, 0)].abs() - 1.0).abs() < 1e-12);
        assert_eq!(numerical_rank(&DMatrix::zeros(3, 3), 1e-8), 0);
        assert_eq!(kernel_basis(&DMatrix::zeros(2, 2), 1e-8).ncols(), 2);
    }
}
