//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// The Lorentz form `diag(1, ..., 1, -1)` of the given size.
pub fn lorentz_form(size: usize) -> DMatrix<f64> {
    let mut j = DMatrix::identity(size, size);
    j[(size - 1, size - 1)] = -1.0;
    j
}

/// Lorentz inner product with the time coordinate last.
pub fn lorentz_inner(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let last = a.len() - 1;
    a.rows(0, last).dot(&b.rows(0, last)) - a[last] * b[last]
}

/// Applies `J` to every row of `m` from the left (negates the last row).
pub fn j_times(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    let last = out.nrows() - 1;
    out.row_mut(last).neg_mut();
    out
}

/// Restricted Gram matrix `B^T J B`.
pub fn lorentz_gram(basis: &DMatrix<f64>) -> DMatrix<f64> {
    basis.transpose() * j_times(basis)
}

/// Thin SVD with singular values sorted in decreasing order.
pub struct SortedSvd {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    /// Right singular vectors as columns.
    pub v: DMatrix<f64>,
}

/// SVD of `m` with `min(rows, cols)` singular triples. Wide matrices are
/// decomposed through their transpose; zero-padding them to square loses
/// accuracy in the small singular values.
pub fn sorted_svd(m: &DMatrix<f64>) -> SortedSvd {
    if m.nrows() < m.ncols() {
        let t = sorted_svd(&m.transpose());
        return SortedSvd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        };
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values = order.iter().map(|&i| svd.singular_values[i]).collect();
    let u = DMatrix::from_columns(&order.iter().map(|&i| u.column(i).into_owned()).collect::<Vec<_>>());
    let v = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| vt.row(i).transpose().into_owned())
            .collect::<Vec<_>>(),
    );
    SortedSvd {
        u,
        singular_values,
        v,
    }
}

/// Numerical rank with cutoff `rel_tol * sigma_max`.
pub fn numerical_rank(singular_values: &[f64], rel_tol: f64) -> usize {
    let Some(&max) = singular_values.first() else {
        return 0;
    };
    if max <= 0.0 {
        return 0;
    }
    singular_values.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Orthonormal basis of the column space of `m` at relative tolerance
/// `rel_tol`, together with the sorted singular values.
pub fn column_space(m: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, Vec<f64>) {
    let svd = sorted_svd(m);
    let rank = numerical_rank(&svd.singular_values, rel_tol);
    let basis = svd.u.columns(0, rank).into_owned();
    (basis, svd.singular_values)
}

/// Orthonormal basis of the Euclidean orthogonal complement of the columns
/// of an orthonormal `basis`.
pub fn orthogonal_complement(basis: &DMatrix<f64>) -> DMatrix<f64> {
    let size = basis.nrows();
    let k = basis.ncols();
    if k == 0 {
        return DMatrix::identity(size, size);
    }
    // Eigenvalues of the projector onto the complement are 0 or 1.
    let projector = DMatrix::identity(size, size) - basis * basis.transpose();
    let eig = projector.symmetric_eigen();
    let cols: Vec<_> = (0..size)
        .filter(|&i| eig.eigenvalues[i] > 0.5)
        .map(|i| eig.eigenvectors.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        return DMatrix::zeros(size, 0);
    }
    DMatrix::from_columns(&cols)
}

/// `S^{-1/2}` for a symmetric positive definite matrix.
pub fn sym_inv_sqrt(s: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let eig = s.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return None;
    }
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Some(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// Residual norm of `v` after orthogonal projection onto the columns of an
/// orthonormal `basis`.
pub fn residual_from_span(basis: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    let coeffs = basis.transpose() * v;
    (v - basis * coeffs).norm()
}

/// Basis of the Lorentz-orthogonal complement of a Lorentzian subspace,
/// normalized so that its restricted Gram matrix is the identity.
pub fn lorentz_complement(basis: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let perp = j_times(&orthogonal_complement(basis));
    if perp.ncols() == 0 {
        return Some(perp);
    }
    let root = sym_inv_sqrt(&lorentz_gram(&perp))?;
    Some(perp * root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_svd_orders_values_of_wide_matrices() {
        let m = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0]);
        let svd = sorted_svd(&m);
        assert_eq!(svd.v.shape(), (4, 2));
        assert!((&svd.u * DMatrix::from_diagonal(&DVector::from_vec(svd.singular_values.clone())) * svd.v.transpose() - &m).norm() < 1e-14);
        assert!((svd.singular_values[0] - 3.0).abs() < 1e-14);
        assert!((svd.singular_values[1] - 1.0).abs() < 1e-14);
        assert_eq!(numerical_rank(&svd.singular_values, 1e-8), 2);
        assert_eq!(svd.u.nrows(), 2);
    }

    #[test]
    fn complement_is_orthogonal() {
        let b = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let c = orthogonal_complement(&b);
        assert_eq!(c.ncols(), 2);
        assert!((b.transpose() * &c).norm() < 1e-14);
    }

    #[test]
    fn inverse_square_root() {
        let s = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let r = sym_inv_sqrt(&s).unwrap();
        assert!((r[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((r[(1, 1)] - 1.0 / 3.0).abs() < 1e-14);
        assert!(sym_inv_sqrt(&(-s)).is_none());
    }

    #[test]
    fn lorentz_inner_signature() {
        let a = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(lorentz_inner(&a, &a), 1.0 + 4.0 - 9.0);
        let g = lorentz_gram(&DMatrix::identity(3, 3));
        assert_eq!(g, lorentz_form(3));
    }
}
