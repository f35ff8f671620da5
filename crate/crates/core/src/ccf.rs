//! The complex-domain cube filter and its sliding-window form.
//!
//! A cube is flattened to `L × NM`, its signal subspace is identified, every
//! eigenimage is denoised with the block-matching filter at its own noise
//! level, and the filtered eigenimages are projected back onto all bands.
//!
//! The sliding form repeats this on narrow wavelength windows. Window centers
//! sit on a regular band grid and every band is taken from the run whose
//! center is nearest to it.

use ndarray::{s, Array2, Array3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cdbm3d::{denoise_image, DenoiseConfig};
use crate::cube::{reshape_to_cube, reshape_to_matrix, ComplexCube, SpectralMatrix};
use crate::error::{Error, Result};
use crate::subspace::{back_project, identify_subspace, project};

/// Wavelength window of the sliding filter, in band indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSpec {
    pub center: usize,
    pub width: usize,
    pub step: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            center: 0,
            width: 70,
            step: 12,
        }
    }
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.step == 0 {
            return Err(Error::InvalidConfig(format!(
                "window width {} and step {} must be positive",
                self.width, self.step
            )));
        }
        Ok(())
    }

    /// Band range `lo..hi` of the window centered on `center` in an
    /// `n_bands` cube. The window keeps its full width by sliding inward at
    /// the cube edges and spans the whole cube when `width ≥ n_bands`.
    pub fn bounds(&self, center: usize, n_bands: usize) -> (usize, usize) {
        if self.width >= n_bands {
            return (0, n_bands);
        }
        let lo = center.saturating_sub(self.width / 2).min(n_bands - self.width);
        (lo, lo + self.width)
    }
}

/// One run of the sliding filter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub center: usize,
    /// Bands fed to the filter, `lo..hi`.
    pub lo: usize,
    pub hi: usize,
    /// Bands of the output taken from this run, `keep_lo..keep_hi`.
    pub keep_lo: usize,
    pub keep_hi: usize,
}

/// Centers `0, step, 2·step, … < n_bands` with their input windows and the
/// bands each one owns (nearest center, ties to the lower one). A window
/// narrower than the bands it owns is widened to cover them.
pub fn sliding_plan(n_bands: usize, window: &WindowSpec) -> Result<Vec<WindowPlan>> {
    window.validate()?;
    let centers: Vec<usize> = (0..n_bands).step_by(window.step).collect();
    let plans = centers
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let keep_lo = if i == 0 { 0 } else { (centers[i - 1] + c) / 2 + 1 };
            let keep_hi = match centers.get(i + 1) {
                Some(&next) => (c + next) / 2 + 1,
                None => n_bands,
            };
            let (lo, hi) = window.bounds(c, n_bands);
            WindowPlan {
                lo: lo.min(keep_lo),
                hi: hi.max(keep_hi),
                center: c,
                keep_lo,
                keep_hi,
            }
        })
        .collect();
    Ok(plans)
}

/// What a single filter run selected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub lo: usize,
    pub hi: usize,
    pub p: usize,
    /// Noise standard deviation used for each eigenimage.
    pub eigen_sigmas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub plan: WindowPlan,
    pub run: RunReport,
}

fn check_cube(cube: &ComplexCube) -> Result<()> {
    if cube.n_bands() < 3 {
        return Err(Error::TooFewBands(cube.n_bands()));
    }
    Ok(())
}

/// Filter on the whole cube, returning the selected dimension and noise levels.
pub fn ccf_denoise_report(cube: &ComplexCube, cfg: &DenoiseConfig) -> Result<(ComplexCube, RunReport)> {
    check_cube(cube)?;
    cfg.validate()?;
    let z = reshape_to_matrix(cube);
    let basis = identify_subspace(&z)?;
    let eig = project(&z, &basis)?;
    let sigmas = basis.eigenimage_noise_std();

    let filtered = (0..basis.p)
        .into_par_iter()
        .map(|i| denoise_image(eig.image(i).view(), &cfg.with_sigma(sigmas[i])))
        .collect::<Result<Vec<_>>>()?;

    let pixels = cube.n_rows() * cube.n_cols();
    let mut entries = Array2::<Complex64>::zeros((basis.p, pixels));
    for (mut row, img) in entries.outer_iter_mut().zip(&filtered) {
        row.assign(&img.view().into_shape_with_order(pixels).expect("contiguous eigenimage"));
    }
    let zeig = SpectralMatrix::new(entries, cube.n_rows(), cube.n_cols())?;
    let mut out = back_project(&zeig, &basis)?;
    out.wavelengths = Some(cube.wavelengths().to_vec());
    let report = RunReport {
        lo: 0,
        hi: cube.n_bands(),
        p: basis.p,
        eigen_sigmas: sigmas,
    };
    Ok((reshape_to_cube(&out)?, report))
}

pub fn ccf_denoise(cube: &ComplexCube, cfg: &DenoiseConfig) -> Result<ComplexCube> {
    ccf_denoise_report(cube, cfg).map(|(c, _)| c)
}

/// Sliding-window filter; every output band comes from exactly one window.
pub fn ccf_sliding_report(
    cube: &ComplexCube,
    cfg: &DenoiseConfig,
    window: &WindowSpec,
) -> Result<(ComplexCube, Vec<WindowReport>)> {
    check_cube(cube)?;
    cfg.validate()?;
    let plans = sliding_plan(cube.n_bands(), window)?;
    let runs = plans
        .par_iter()
        .map(|plan| {
            let sub = cube.band_range(plan.lo, plan.hi)?;
            let (den, mut run) = ccf_denoise_report(&sub, cfg)?;
            run.lo = plan.lo;
            run.hi = plan.hi;
            Ok((den, run))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut data = Array3::<Complex64>::zeros(cube.data().dim());
    let mut reports = Vec::with_capacity(plans.len());
    for (plan, (den, run)) in plans.into_iter().zip(runs) {
        data.slice_mut(s![plan.keep_lo..plan.keep_hi, .., ..])
            .assign(&den.data().slice(s![plan.keep_lo - plan.lo..plan.keep_hi - plan.lo, .., ..]));
        reports.push(WindowReport { plan, run });
    }
    Ok((ComplexCube::new(data, cube.wavelengths().to_vec())?, reports))
}

pub fn ccf_sliding(cube: &ComplexCube, cfg: &DenoiseConfig, window: &WindowSpec) -> Result<ComplexCube> {
    ccf_sliding_report(cube, cfg, window).map(|(c, _)| c)
}

/// Single filter run on the window around `window.center`; only the bands of
/// that window are returned.
pub fn ccf_window(cube: &ComplexCube, cfg: &DenoiseConfig, window: &WindowSpec) -> Result<(ComplexCube, RunReport)> {
    window.validate()?;
    if window.center >= cube.n_bands() {
        return Err(Error::InvalidConfig(format!(
            "window center {} outside {} bands",
            window.center,
            cube.n_bands()
        )));
    }
    let (lo, hi) = window.bounds(window.center, cube.n_bands());
    let (den, mut run) = ccf_denoise_report(&cube.band_range(lo, hi)?, cfg)?;
    run.lo = lo;
    run.hi = hi;
    Ok((den, run))
}
