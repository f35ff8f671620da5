//! Dense N-way tensors and their higher-order SVD.
//!
//! The mode-`m` factor is the matrix of left singular vectors of the mode-`m`
//! unfolding, obtained as the eigenvectors of the unfolding's Gram matrix.
//! The core is the tensor contracted with every conjugate-transposed factor,
//! so an untouched core reconstructs the input exactly.

use nalgebra::{ComplexField, DMatrix};

use crate::error::Result;
use crate::linalg::hermitian_eigen_desc;

/// Scalar usable in a tensor: `f64` or `Complex64`.
pub trait TensorScalar: ComplexField<RealField = f64> + Copy {}
impl<T: ComplexField<RealField = f64> + Copy> TensorScalar for T {}

/// Row-major dense tensor; the last mode varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    dims: Vec<usize>,
    data: Vec<T>,
}

impl<T: TensorScalar> Tensor<T> {
    pub fn new(dims: Vec<usize>, data: Vec<T>) -> Self {
        assert_eq!(dims.iter().product::<usize>(), data.len(), "tensor data length");
        Self { dims, data }
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Self {
            dims,
            data: vec![T::zero(); n],
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.modulus_squared()).sum::<f64>().sqrt()
    }

    fn split(&self, mode: usize) -> (usize, usize, usize) {
        let outer = self.dims[..mode].iter().product();
        let inner = self.dims[mode + 1..].iter().product();
        (outer, self.dims[mode], inner)
    }

    /// Gram matrix `X₍ₘ₎ X₍ₘ₎ᴴ` of the mode-`m` unfolding.
    pub fn mode_gram(&self, mode: usize) -> DMatrix<T> {
        let (outer, d, inner) = self.split(mode);
        let mut g = DMatrix::<T>::zeros(d, d);
        for o in 0..outer {
            let block = &self.data[o * d * inner..(o + 1) * d * inner];
            for a in 0..d {
                let ra = &block[a * inner..(a + 1) * inner];
                for b in a..d {
                    let rb = &block[b * inner..(b + 1) * inner];
                    let mut s = T::zero();
                    for (x, y) in ra.iter().zip(rb) {
                        s += *x * y.conjugate();
                    }
                    g[(a, b)] += s;
                }
            }
        }
        for a in 0..d {
            for b in a + 1..d {
                g[(b, a)] = g[(a, b)].conjugate();
            }
        }
        g
    }

    /// Mode-`m` product with `mat` (`d_out × d_m`).
    pub fn mode_product(&self, mode: usize, mat: &DMatrix<T>) -> Tensor<T> {
        let (outer, d, inner) = self.split(mode);
        assert_eq!(mat.ncols(), d, "mode product dimension");
        let d_out = mat.nrows();
        let mut dims = self.dims.clone();
        dims[mode] = d_out;
        let mut out = vec![T::zero(); outer * d_out * inner];
        for o in 0..outer {
            let src = &self.data[o * d * inner..(o + 1) * d * inner];
            let dst = &mut out[o * d_out * inner..(o + 1) * d_out * inner];
            for i in 0..d_out {
                let row = &mut dst[i * inner..(i + 1) * inner];
                for j in 0..d {
                    let a = mat[(i, j)];
                    if a == T::zero() {
                        continue;
                    }
                    for (y, x) in row.iter_mut().zip(&src[j * inner..(j + 1) * inner]) {
                        *y += a * *x;
                    }
                }
            }
        }
        Tensor { dims, data: out }
    }
}

/// Orthonormal factor per mode and the core tensor.
#[derive(Debug, Clone)]
pub struct HosvdFactors<T> {
    pub factors: Vec<DMatrix<T>>,
    pub core: Tensor<T>,
}

fn is_diagonal<T: TensorScalar>(g: &DMatrix<T>) -> bool {
    let n = g.nrows();
    (0..n).all(|a| (0..n).all(|b| a == b || g[(a, b)] == T::zero()))
}

/// Left singular vectors of the mode-`m` unfolding. An exactly diagonal Gram
/// matrix (e.g. a vanishing imaginary plane) yields the identity.
pub fn mode_factor<T: TensorScalar>(t: &Tensor<T>, mode: usize) -> Result<DMatrix<T>> {
    let g = t.mode_gram(mode);
    if is_diagonal(&g) {
        let d = g.nrows();
        return Ok(DMatrix::identity(d, d));
    }
    Ok(hermitian_eigen_desc(g)?.1)
}

/// Contracts every mode with the conjugate transpose of its factor.
pub fn forward<T: TensorScalar>(t: &Tensor<T>, factors: &[DMatrix<T>]) -> Tensor<T> {
    let mut out = t.clone();
    for (m, u) in factors.iter().enumerate() {
        out = out.mode_product(m, &u.adjoint());
    }
    out
}

/// Inverse of [`forward`] for orthonormal factors.
pub fn inverse<T: TensorScalar>(core: &Tensor<T>, factors: &[DMatrix<T>]) -> Tensor<T> {
    let mut out = core.clone();
    for (m, u) in factors.iter().enumerate() {
        out = out.mode_product(m, u);
    }
    out
}

pub fn hosvd<T: TensorScalar>(group: &Tensor<T>) -> Result<HosvdFactors<T>> {
    let factors = (0..group.dims().len())
        .map(|m| mode_factor(group, m))
        .collect::<Result<Vec<_>>>()?;
    let core = forward(group, &factors);
    Ok(HosvdFactors { factors, core })
}

impl<T: TensorScalar> HosvdFactors<T> {
    pub fn reconstruct(&self) -> Tensor<T> {
        inverse(&self.core, &self.factors)
    }
}
