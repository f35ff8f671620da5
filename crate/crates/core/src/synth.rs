//! Synthetic transparent phase objects and circular complex Gaussian noise.
//!
//! Phases follow the thin-object model `φ = 2π·h·(n(λ) − 1)/λ` with the
//! refractive index from a Cauchy dispersion law. Thickness maps are kept in
//! micrometers, wavelengths are passed in nanometers.

use std::f64::consts::{PI, TAU};

use ndarray::{Array2, Array3, Axis};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cube::ComplexCube;
use crate::error::{Error, Result};

/// Peak phase at 400 nm used for the interferometric objects.
pub const INTERFEROMETRIC_PEAK_PHASE: f64 = 0.9 * PI;
/// Peak phase at 400 nm of the wrapped object.
pub const WRAPPED_PEAK_PHASE: f64 = 28.9;
/// Calibration wavelength for `max_phase_400`.
pub const CALIBRATION_NM: f64 = 400.0;

/// Reduces a phase to `[-π, π)`.
pub fn wrap_phase(phi: f64) -> f64 {
    let r = (phi + PI).rem_euclid(TAU) - PI;
    if r >= PI {
        r - TAU
    } else {
        r
    }
}

/// Cauchy dispersion `n(λ) = A0 + B0/λ² + C0/λ⁴`, λ in µm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionModel {
    pub a0: f64,
    /// µm²
    pub b0: f64,
    /// µm⁴
    #[serde(default)]
    pub c0: f64,
}

impl DispersionModel {
    /// Two-term BK7 reference coefficients.
    pub const BK7: DispersionModel = DispersionModel {
        a0: 1.5046,
        b0: 0.00420,
        c0: 0.0,
    };
}

impl Default for DispersionModel {
    fn default() -> Self {
        Self::BK7
    }
}

pub fn refractive_index(model: &DispersionModel, lambda_nm: f64) -> Result<f64> {
    if !(lambda_nm > 0.0) {
        return Err(Error::NonPositiveWavelength(lambda_nm));
    }
    let l2 = (lambda_nm * 1e-3).powi(2);
    Ok(model.a0 + model.b0 / l2 + model.c0 / (l2 * l2))
}

/// Phase delay in radians of a layer `thickness_um` thick.
pub fn phase_for_thickness(model: &DispersionModel, thickness_um: f64, lambda_nm: f64) -> Result<f64> {
    let n = refractive_index(model, lambda_nm)?;
    Ok(TAU * thickness_um * (n - 1.0) / (lambda_nm * 1e-3))
}

/// Thickness that produces `phase` radians at `lambda_nm`.
pub fn thickness_for_phase(model: &DispersionModel, phase: f64, lambda_nm: f64) -> Result<f64> {
    let n = refractive_index(model, lambda_nm)?;
    Ok(phase * lambda_nm * 1e-3 / (TAU * (n - 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectKind {
    TwoPeak,
    Compound,
    #[serde(alias = "wrapped")]
    WrappedPeak,
}

impl ObjectKind {
    pub fn label(&self) -> &'static str {
        match self {
            ObjectKind::TwoPeak => "two-peak",
            ObjectKind::Compound => "compound",
            ObjectKind::WrappedPeak => "wrapped-peak",
        }
    }
}

/// Realized phase object: thickness map(s) in µm and an amplitude field.
///
/// `Compound` objects hold three maps; band `b` of `L` uses map `s` where `s`
/// counts the section boundaries `f` with `b ≥ f·L`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseObjectSpec {
    pub kind: ObjectKind,
    pub thickness: Vec<Array2<f64>>,
    pub section_boundaries: [f64; 2],
    pub amplitude: Array2<f64>,
}

fn gaussian(u: f64, v: f64, cu: f64, cv: f64, width: f64) -> f64 {
    let r2 = (u - cu).powi(2) + (v - cv).powi(2);
    (-r2 / (2.0 * width * width)).exp()
}

/// Normalized coordinates in `[0, 1]` for pixel `(row, col)`.
fn unit_coords(rows: usize, cols: usize, row: usize, col: usize) -> (f64, f64) {
    let u = if cols > 1 { col as f64 / (cols - 1) as f64 } else { 0.5 };
    let v = if rows > 1 { row as f64 / (rows - 1) as f64 } else { 0.5 };
    (u, v)
}

fn normalized(mut map: Array2<f64>) -> Array2<f64> {
    let max = map.iter().cloned().fold(0.0, f64::max);
    if max > 0.0 {
        map.mapv_inplace(|h| h / max);
    }
    map
}

/// Two Gaussian bumps with distinct centers, widths and heights; peak 1.
pub fn two_peak_map(rows: usize, cols: usize) -> Array2<f64> {
    normalized(Array2::from_shape_fn((rows, cols), |(r, c)| {
        let (u, v) = unit_coords(rows, cols, r, c);
        gaussian(u, v, 0.30, 0.32, 0.22) + 0.75 * gaussian(u, v, 0.72, 0.69, 0.17)
    }))
}

/// Single centered Gaussian bump; peak 1.
pub fn gaussian_peak_map(rows: usize, cols: usize) -> Array2<f64> {
    normalized(Array2::from_shape_fn((rows, cols), |(r, c)| {
        let (u, v) = unit_coords(rows, cols, r, c);
        gaussian(u, v, 0.5, 0.5, 0.18)
    }))
}

/// Linear ramp along x with one step along y; peak 1.
pub fn inclined_step_map(rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |(r, c)| {
        let (u, v) = unit_coords(rows, cols, r, c);
        0.55 * u + if v >= 0.5 { 0.45 } else { 0.0 }
    })
}

/// Gaussian bump cut to zero beyond 2.2 widths from its center; peak 1.
pub fn truncated_gaussian_map(rows: usize, cols: usize) -> Array2<f64> {
    let width = 0.2;
    normalized(Array2::from_shape_fn((rows, cols), |(r, c)| {
        let (u, v) = unit_coords(rows, cols, r, c);
        let d = ((u - 0.5).powi(2) + (v - 0.5).powi(2)).sqrt();
        if d > 2.2 * width {
            0.0
        } else {
            gaussian(u, v, 0.5, 0.5, width)
        }
    }))
}

/// Binary resolution-target-like map: bar triplets at three decreasing scales.
pub fn usaf_map(rows: usize, cols: usize) -> Array2<f64> {
    let mut map = Array2::<f64>::zeros((rows, cols));
    let n = rows.min(cols) as f64;
    let mut fill = |r0: usize, r1: usize, c0: usize, c1: usize| {
        for r in r0..r1.min(rows) {
            for c in c0..c1.min(cols) {
                map[[r, c]] = 1.0;
            }
        }
    };
    // (bar thickness as a fraction of the size, top, left)
    let groups = [(1.0 / 22.0, 0.08, 0.06), (1.0 / 36.0, 0.45, 0.10), (1.0 / 64.0, 0.72, 0.52)];
    for (frac, top, left) in groups {
        let t = ((n * frac).round() as usize).max(1);
        let oy = (top * rows as f64) as usize;
        let ox = (left * cols as f64) as usize;
        for k in 0..3 {
            // horizontal bars
            fill(oy + 2 * k * t, oy + 2 * k * t + t, ox, ox + 5 * t);
            // vertical bars to the right
            let c0 = ox + 6 * t + 2 * k * t;
            fill(oy, oy + 5 * t, c0, c0 + t);
        }
    }
    // a solid square reference block
    let t = ((n / 8.0).round() as usize).max(1);
    let oy = (0.62 * rows as f64) as usize;
    let ox = (0.12 * cols as f64) as usize;
    fill(oy, oy + t, ox, ox + t);
    map
}

impl PhaseObjectSpec {
    fn scaled(map: Array2<f64>, model: &DispersionModel, peak_phase_400: f64) -> Result<Array2<f64>> {
        let h = thickness_for_phase(model, peak_phase_400, CALIBRATION_NM)?;
        Ok(map.mapv(|m| m * h))
    }

    fn with_maps(kind: ObjectKind, thickness: Vec<Array2<f64>>) -> Self {
        let amplitude = Array2::ones(thickness[0].dim());
        Self {
            kind,
            thickness,
            section_boundaries: [1.0 / 3.0, 2.0 / 3.0],
            amplitude,
        }
    }

    /// Smooth two-peak object whose maximum phase at 400 nm is `peak_phase_400`.
    pub fn two_peak(rows: usize, cols: usize, model: &DispersionModel, peak_phase_400: f64) -> Result<Self> {
        let map = Self::scaled(two_peak_map(rows, cols), model, peak_phase_400)?;
        Ok(Self::with_maps(ObjectKind::TwoPeak, vec![map]))
    }

    /// Three spectral sections: binary bar target, Gaussian peak, inclined
    /// surface with a step. Each section peaks at `peak_phase_400` at 400 nm.
    pub fn compound(rows: usize, cols: usize, model: &DispersionModel, peak_phase_400: f64) -> Result<Self> {
        let maps = vec![
            Self::scaled(usaf_map(rows, cols), model, peak_phase_400)?,
            Self::scaled(gaussian_peak_map(rows, cols), model, peak_phase_400)?,
            Self::scaled(inclined_step_map(rows, cols), model, peak_phase_400)?,
        ];
        Ok(Self::with_maps(ObjectKind::Compound, maps))
    }

    /// Truncated Gaussian whose absolute phase reaches `peak_phase_400` at 400 nm.
    pub fn wrapped_peak(rows: usize, cols: usize, model: &DispersionModel, peak_phase_400: f64) -> Result<Self> {
        let map = Self::scaled(truncated_gaussian_map(rows, cols), model, peak_phase_400)?;
        Ok(Self::with_maps(ObjectKind::WrappedPeak, vec![map]))
    }

    /// Builds `kind` with its default calibration, or `peak_phase_400` if given.
    pub fn build(
        kind: ObjectKind,
        rows: usize,
        cols: usize,
        model: &DispersionModel,
        peak_phase_400: Option<f64>,
    ) -> Result<Self> {
        match kind {
            ObjectKind::TwoPeak => {
                Self::two_peak(rows, cols, model, peak_phase_400.unwrap_or(INTERFEROMETRIC_PEAK_PHASE))
            }
            ObjectKind::Compound => {
                Self::compound(rows, cols, model, peak_phase_400.unwrap_or(INTERFEROMETRIC_PEAK_PHASE))
            }
            ObjectKind::WrappedPeak => {
                Self::wrapped_peak(rows, cols, model, peak_phase_400.unwrap_or(WRAPPED_PEAK_PHASE))
            }
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.amplitude.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let expected = if self.kind == ObjectKind::Compound { 3 } else { 1 };
        if self.thickness.len() != expected {
            return Err(Error::InvalidConfig(format!(
                "{} object needs {expected} thickness map(s), has {}",
                self.kind.label(),
                self.thickness.len()
            )));
        }
        let dims = self.dims();
        if self.thickness.iter().any(|m| m.dim() != dims) {
            return Err(Error::DimensionMismatch(
                "thickness and amplitude maps differ in shape".into(),
            ));
        }
        if self.thickness.iter().flatten().any(|h| !h.is_finite() || *h < 0.0) {
            return Err(Error::InvalidConfig("thickness must be finite and nonnegative".into()));
        }
        let [f1, f2] = self.section_boundaries;
        if !(0.0 < f1 && f1 < f2 && f2 < 1.0) {
            return Err(Error::InvalidConfig("section boundaries must satisfy 0 < f1 < f2 < 1".into()));
        }
        Ok(())
    }

    /// Index of the thickness map used by band `band` of `n_bands`.
    pub fn section_of(&self, band: usize, n_bands: usize) -> usize {
        if self.kind != ObjectKind::Compound {
            return 0;
        }
        self.section_boundaries
            .iter()
            .filter(|&&f| band as f64 >= f * n_bands as f64)
            .count()
    }

    /// Absolute (unwrapped) phase at pixel `(x, y)` of band `band` on the grid.
    pub fn phase_at(
        &self,
        model: &DispersionModel,
        x: usize,
        y: usize,
        band: usize,
        wavelengths: &[f64],
    ) -> Result<f64> {
        let (rows, cols) = self.dims();
        if x >= cols || y >= rows {
            return Err(Error::OutOfBounds { x, y, rows, cols });
        }
        let lambda = *wavelengths.get(band).ok_or_else(|| {
            Error::DimensionMismatch(format!("band {band} outside grid of {}", wavelengths.len()))
        })?;
        let h = self.thickness[self.section_of(band, wavelengths.len())][[y, x]];
        phase_for_thickness(model, h, lambda)
    }
}

/// Noise-free cube `U = A·exp(jφ)` sampled on `wavelengths` (nm).
pub fn generate_truth(spec: &PhaseObjectSpec, model: &DispersionModel, wavelengths: &[f64]) -> Result<ComplexCube> {
    spec.validate()?;
    let (rows, cols) = spec.dims();
    let bands = wavelengths.len();
    let mut data = Array3::<Complex64>::zeros((bands, rows, cols));
    data.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .try_for_each(|(b, mut slice)| -> Result<()> {
            let lambda = wavelengths[b];
            let n = refractive_index(model, lambda)?;
            let k = TAU * (n - 1.0) / (lambda * 1e-3);
            let h = &spec.thickness[spec.section_of(b, bands)];
            for ((y, x), z) in slice.indexed_iter_mut() {
                *z = Complex64::from_polar(spec.amplitude[[y, x]], k * h[[y, x]]);
            }
            Ok(())
        })?;
    ComplexCube::new(data, wavelengths.to_vec())
}

/// Additive noise description: total complex standard deviation and seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

/// Adds i.i.d. circular complex Gaussian noise of total variance `σ²`
/// (`σ²/2` per real component).
///
/// Band `b` draws from ChaCha stream `b` of the seed, so the result does not
/// depend on how bands are scheduled.
pub fn add_noise(cube: &ComplexCube, noise: &NoiseSpec) -> Result<ComplexCube> {
    if !noise.sigma.is_finite() || noise.sigma < 0.0 {
        return Err(Error::InvalidConfig(format!("noise sigma {} must be finite and ≥ 0", noise.sigma)));
    }
    if noise.sigma == 0.0 {
        return Ok(cube.clone());
    }
    let s = noise.sigma / 2f64.sqrt();
    let mut data = cube.data().clone();
    data.axis_iter_mut(Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(b, mut slice)| {
            let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
            rng.set_stream(b as u64);
            for z in slice.iter_mut() {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                *z += Complex64::new(s * re, s * im);
            }
        });
    ComplexCube::new(data, cube.wavelengths().to_vec())
}
