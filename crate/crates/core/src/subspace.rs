//! Complex-domain minimum-error signal subspace identification.
//!
//! Noise is estimated by regressing every band on all the others; the
//! regression residuals give the noise correlation `R_n` and the predictions
//! serve as the preliminary signal estimate. Eigenvectors of the data
//! correlation `R_y` are kept when the signal power they carry exceeds the
//! noise power they would admit, i.e. when `−eᴴR_y e + 2·eᴴR_n e < 0`.

use std::io::Write;

use nalgebra::{Cholesky, DMatrix};
use ndarray::{Array2, Axis};
use num_complex::Complex64;

use crate::cube::SpectralMatrix;
use crate::error::{Error, Result};
use crate::linalg::{adjoint, correlation, hermitian_eigen_desc, quadratic_form, to_nalgebra, to_ndarray};

/// Ridge on the regression normal equations, relative to `trace(R_y)/L`.
pub const RIDGE_REL: f64 = 1e-10;
/// Noise floor added to `R_n` during selection, relative to the mean
/// per-band power of the preliminary signal estimate.
pub const SELECTION_NOISE_FLOOR_REL: f64 = 1e-5;
const RIDGE_RETRIES: usize = 4;

/// Orthonormal spectral basis of the identified signal subspace.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    /// `L × p`, orthonormal columns, ordered by decreasing signal power.
    pub e: Array2<Complex64>,
    pub p: usize,
    /// `R_n`, `L × L` Hermitian.
    pub noise_corr: Array2<Complex64>,
    /// `eᵢᴴ R_n eᵢ` for each selected column, clamped at 0.
    pub eigen_noise_var: Vec<f64>,
    /// Eigenvalues of `R_y`, decreasing.
    pub eigenvalues: Vec<f64>,
    /// `mse_curve[k - 1]` is the estimated MSE of the best `k`-dimensional
    /// subspace, `k = 1..=L`.
    pub mse_curve: Vec<f64>,
    wavelengths: Option<Vec<f64>>,
}

impl EigenBasis {
    pub fn n_bands(&self) -> usize {
        self.e.nrows()
    }

    /// Standard deviation of the noise in each eigenimage.
    pub fn eigen_noise_std(&self) -> Vec<f64> {
        self.eigen_noise_var.iter().map(|v| v.sqrt()).collect()
    }

    /// Noise standard deviation of each eigenimage assuming noise that is
    /// uncorrelated across bands: `σᵢ² = Σ_b |e_bi|² R_n[b,b]`.
    ///
    /// The regression residuals lose almost all of the noise that lies along
    /// strong signal directions, so `eᵢᴴR_n eᵢ` badly underestimates the noise
    /// of the leading eigenimages. The per-band variances on the diagonal of
    /// `R_n` do not suffer from this.
    pub fn eigenimage_noise_std(&self) -> Vec<f64> {
        (0..self.p)
            .map(|i| {
                self.e
                    .column(i)
                    .iter()
                    .enumerate()
                    .map(|(b, v)| v.norm_sqr() * self.noise_corr[[b, b]].re.max(0.0))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    /// Writes `dimension,eigenvalue,mse,selected` rows.
    pub fn write_diagnostics<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["dimension", "eigenvalue", "mse", "selected"])?;
        for (k, (ev, mse)) in self.eigenvalues.iter().zip(&self.mse_curve).enumerate() {
            let dim = k + 1;
            out.write_record([
                dim.to_string(),
                ev.to_string(),
                mse.to_string(),
                u8::from(dim == self.p).to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Regression-residual noise estimate and its correlation matrix.
pub fn estimate_noise(z: &SpectralMatrix) -> Result<(SpectralMatrix, Array2<Complex64>)> {
    let bands = z.n_bands();
    let pixels = z.n_pixels();
    if bands < 3 {
        return Err(Error::TooFewBands(bands));
    }
    if pixels <= bands {
        return Err(Error::TooFewPixels { pixels, bands });
    }
    let ry = correlation(z.entries.view());
    let trace: f64 = (0..bands).map(|i| ry[[i, i]].re).sum();
    let mut ridge = (RIDGE_REL * trace / bands as f64).max(f64::MIN_POSITIVE);
    let mut gram = to_nalgebra(ry.view());
    let mut chol = None;
    for _ in 0..=RIDGE_RETRIES {
        let regularized = &gram + DMatrix::<Complex64>::identity(bands, bands) * Complex64::new(ridge, 0.0);
        if let Some(c) = Cholesky::new(regularized) {
            chol = Some(c);
            break;
        }
        ridge *= 1e3;
    }
    let chol = chol.ok_or(Error::SingularRegression)?;
    gram = chol.inverse();
    // Residual of regressing band i on the others: (row i of G⁻¹)·Z / (G⁻¹)ᵢᵢ.
    let inv = to_ndarray(&gram);
    let mut w = inv.dot(&z.entries);
    for (i, mut row) in w.axis_iter_mut(Axis(0)).enumerate() {
        let d = inv[[i, i]].re;
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::SingularRegression);
        }
        row.mapv_inplace(|v| v / d);
    }
    if w.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::SingularRegression);
    }
    let rn = correlation(w.view());
    let noise = SpectralMatrix {
        entries: w,
        n_rows: z.n_rows,
        n_cols: z.n_cols,
        wavelengths: z.wavelengths.clone(),
    };
    Ok((noise, rn))
}

/// Selects the subspace minimizing the estimated reconstruction MSE.
pub fn identify_subspace(z: &SpectralMatrix) -> Result<EigenBasis> {
    let (noise, rn) = estimate_noise(z)?;
    let bands = z.n_bands();
    let pixels = z.n_pixels() as f64;

    let signal_power: f64 = z
        .entries
        .iter()
        .zip(noise.entries.iter())
        .map(|(y, w)| (y - w).norm_sqr())
        .sum::<f64>()
        / pixels;
    let floor = SELECTION_NOISE_FLOOR_REL * signal_power / bands as f64;

    let ry = correlation(z.entries.view());
    let (eigenvalues, vecs) = hermitian_eigen_desc(to_nalgebra(ry.view()))?;
    let vecs = to_ndarray(&vecs);

    let py: Vec<f64> = (0..bands).map(|i| quadratic_form(ry.view(), vecs.column(i))).collect();
    let pn_raw: Vec<f64> = (0..bands).map(|i| quadratic_form(rn.view(), vecs.column(i))).collect();
    let pn: Vec<f64> = pn_raw.iter().map(|v| v + floor).collect();
    let cost: Vec<f64> = py.iter().zip(&pn).map(|(y, n)| -y + 2.0 * n).collect();

    let mut order: Vec<usize> = (0..bands).collect();
    order.sort_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(a.cmp(&b)));
    let k_opt = cost.iter().filter(|&&c| c < 0.0).count();
    let p = k_opt.max(1);

    let total_signal: f64 = py.iter().zip(&pn).map(|(y, n)| y - n).sum();
    let mut mse_curve = Vec::with_capacity(bands);
    let mut acc = total_signal;
    for &i in &order {
        acc += cost[i];
        mse_curve.push(acc);
    }

    let mut selected: Vec<usize> = order[..p].to_vec();
    selected.sort_by(|&a, &b| (py[b] - pn[b]).total_cmp(&(py[a] - pn[a])).then(a.cmp(&b)));
    let e = Array2::from_shape_fn((bands, p), |(r, c)| vecs[[r, selected[c]]]);
    let eigen_noise_var = selected.iter().map(|&i| pn_raw[i].max(0.0)).collect();

    Ok(EigenBasis {
        e,
        p,
        noise_corr: rn,
        eigen_noise_var,
        eigenvalues,
        mse_curve,
        wavelengths: z.wavelengths.clone(),
    })
}

/// Eigenimages `Eᴴ Z` (`p × pixels`).
pub fn project(z: &SpectralMatrix, basis: &EigenBasis) -> Result<SpectralMatrix> {
    if z.n_bands() != basis.n_bands() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} bands, basis expects {}",
            z.n_bands(),
            basis.n_bands()
        )));
    }
    Ok(SpectralMatrix {
        entries: adjoint(basis.e.view()).dot(&z.entries),
        n_rows: z.n_rows,
        n_cols: z.n_cols,
        wavelengths: None,
    })
}

/// Back to band space: `E · Z_eig` (`L × pixels`).
pub fn back_project(zeig: &SpectralMatrix, basis: &EigenBasis) -> Result<SpectralMatrix> {
    if zeig.n_bands() != basis.p {
        return Err(Error::DimensionMismatch(format!(
            "{} eigenimages for a {}-dimensional basis",
            zeig.n_bands(),
            basis.p
        )));
    }
    Ok(SpectralMatrix {
        entries: basis.e.dot(&zeig.entries),
        n_rows: zeig.n_rows,
        n_cols: zeig.n_cols,
        wavelengths: basis.wavelengths.clone(),
    })
}
