//! Small dense helpers over `nalgebra::DMatrix<Complex64>`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

pub fn cone() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// Spectral (operator 2-) norm.
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_residual(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Only the lower triangle is trusted; the input is symmetrized first.
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

pub fn hermitian_eigen(m: &CMat) -> HermitianEigen {
    let n = m.nrows();
    if n == 0 {
        return HermitianEigen {
            values: Vec::new(),
            vectors: CMat::zeros(0, 0),
        };
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    HermitianEigen { values, vectors }
}

/// Orthonormal basis of the null space of `a` (columns), using singular
/// values `<= cutoff`.
pub fn null_space(a: &CMat, cutoff: f64) -> CMat {
    let (m, n) = a.shape();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    if m == 0 {
        return CMat::identity(n, n);
    }
    // Pad to at least n rows so the SVD returns a full right basis.
    let padded = if m < n {
        let mut p = CMat::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let cols: Vec<CVec> = (0..n)
        .filter(|&i| svd.singular_values[i] <= cutoff)
        .map(|i| v_t.row(i).adjoint())
        .collect();
    if cols.is_empty() {
        CMat::zeros(n, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Orthonormal basis of the column space of `a`, dropping directions with
/// singular value `<= cutoff`.
pub fn range_basis(a: &CMat, cutoff: f64) -> CMat {
    let (m, n) = a.shape();
    if n == 0 || m == 0 {
        return CMat::zeros(m, 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let cols: Vec<CVec> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > cutoff)
        .map(|i| u.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        CMat::zeros(m, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Kronecker product `a ⊗ b` (row index of `a` most significant).
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Block `(i, j)` of size `d × d` of a square block matrix.
pub fn block(m: &CMat, i: usize, j: usize, d: usize) -> CMat {
    m.view((i * d, j * d), (d, d)).into_owned()
}

pub fn commutator_norm(a: &CMat, b: &CMat) -> f64 {
    max_abs(&(a * b - b * a))
}

/// `true` when every block is diagonal within `tol`.
pub fn is_diagonal(m: &CMat, tol: f64) -> bool {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j && m[(i, j)].norm() > tol {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_wide_matrix() {
        let a = CMat::from_row_slice(1, 3, &[cone(), cone(), czero()]);
        let ns = null_space(&a, 1e-12);
        assert_eq!(ns.ncols(), 2);
        assert!(max_abs(&(&a * &ns)) < 1e-14);
        let gram = ns.adjoint() * &ns;
        assert!(max_abs(&(gram - CMat::identity(2, 2))) < 1e-14);
    }

    #[test]
    fn eigenvalues_sorted() {
        let m = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let e = hermitian_eigen(&m);
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
        let recon = &e.vectors * CMat::from_diagonal(&CVec::from_iterator(2, e.values.iter().map(|&v| c(v, 0.0)))) * e.vectors.adjoint();
        assert!(max_abs(&(recon - m)) < 1e-14);
    }

    #[test]
    fn op_norm_of_diagonal() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![c(4.0, 0.0), c(0.0, -1.0)]));
        assert!((op_norm(&m) - 4.0).abs() < 1e-14);
    }
}
