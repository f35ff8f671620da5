//! Small dense linear-algebra helpers shared by the subspace and HOSVD code.

use nalgebra::{ComplexField, DMatrix, SymmetricEigen};
use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};

const EIGEN_MAX_ITER: usize = 100_000;

pub fn to_nalgebra(a: ArrayView2<'_, Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn to_ndarray(m: &DMatrix<Complex64>) -> Array2<Complex64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Conjugate transpose.
pub fn adjoint(a: ArrayView2<'_, Complex64>) -> Array2<Complex64> {
    a.t().mapv(|z| z.conj())
}

/// `(A + Aᴴ)/2`.
pub fn hermitize(a: &mut Array2<Complex64>) {
    let n = a.nrows();
    for i in 0..n {
        a[[i, i]].im = 0.0;
        for j in i + 1..n {
            let m = (a[[i, j]] + a[[j, i]].conj()) * 0.5;
            a[[i, j]] = m;
            a[[j, i]] = m.conj();
        }
    }
}

/// `A·Aᴴ / n` over the columns of `A`, symmetrized.
pub fn correlation(a: ArrayView2<'_, Complex64>) -> Array2<Complex64> {
    let n = a.ncols().max(1) as f64;
    let mut r = a.dot(&adjoint(a)) / Complex64::new(n, 0.0);
    hermitize(&mut r);
    r
}

/// `vᴴ·A·v` for a Hermitian `A`; the imaginary roundoff is dropped.
pub fn quadratic_form(a: ArrayView2<'_, Complex64>, v: ndarray::ArrayView1<'_, Complex64>) -> f64 {
    let av = a.dot(&v);
    v.iter().zip(av.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues sorted in
/// decreasing order; eigenvectors are the matching columns.
pub fn hermitian_eigen_desc<T>(m: DMatrix<T>) -> Result<(Vec<f64>, DMatrix<T>)>
where
    T: ComplexField<RealField = f64>,
{
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::DecompositionFailed(format!("{n}x{n} Hermitian eigenproblem")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])].clone());
    Ok((values, vectors))
}
