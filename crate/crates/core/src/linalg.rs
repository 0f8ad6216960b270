//! Small dense linear-algebra helpers shared by the models.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value cutoff used for pseudo-inverses and rank decisions.
pub const RANK_RTOL: f64 = 1e-12;

/// Moore-Penrose pseudo-inverse with a cutoff relative to the largest singular value.
///
/// The all-zero matrix maps to the all-zero transpose.
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return DMatrix::zeros(c, r);
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return DMatrix::zeros(c, r);
    }
    let eps = smax * RANK_RTOL * (r.max(c) as f64);
    svd.pseudo_inverse(eps)
        .expect("u and v were computed")
}

/// Orthogonal projector onto the row space of `m` (a `cols × cols` matrix).
pub fn row_space_projector(m: &DMatrix<f64>) -> DMatrix<f64> {
    let cols = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("v_t was requested");
    let smax = svd.singular_values.max();
    let mut p = DMatrix::zeros(cols, cols);
    if smax == 0.0 {
        return p;
    }
    let eps = smax * RANK_RTOL * (m.nrows().max(cols) as f64);
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > eps {
            let row = v_t.row(i).transpose();
            p += &row * row.transpose();
        }
    }
    p
}

/// Mean of squared componentwise differences; zero for empty vectors.
pub fn mse(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    (a - b).norm_squared() / a.len() as f64
}

/// Mean squared difference between equally shaped matrices, averaged over all entries.
pub fn mse_mat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    if a.is_empty() {
        return 0.0;
    }
    (a - b).norm_squared() / a.len() as f64
}
