//! Comparison filters: thickness averaging, separate amplitude/phase
//! filtering and band-by-band block matching.

use ndarray::{Array2, Array3, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cdbm3d::{denoise_image, estimate_sigma, DenoiseConfig, Variant};
use crate::cube::ComplexCube;
use crate::error::{Error, Result};
use crate::synth::{phase_for_thickness, thickness_for_phase, wrap_phase, DispersionModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AverageMode {
    /// Mean thickness over every band.
    Global,
    /// Mean thickness over the pair `{b, b+1}`; the last band pairs with its
    /// predecessor.
    Pairwise,
}

/// Converts each wrapped phase to a thickness, averages the thickness over
/// bands and re-synthesizes the phase. Amplitudes pass through.
pub fn baseline_average(
    noisy: &ComplexCube,
    model: Option<&DispersionModel>,
    mode: AverageMode,
) -> Result<ComplexCube> {
    let model = model.ok_or(Error::DispersionRequired)?;
    let wl = noisy.wavelengths();
    let bands = noisy.n_bands();
    let mut h = Array3::<f64>::zeros(noisy.data().dim());
    for b in 0..bands {
        let mut hb = h.index_axis_mut(Axis(0), b);
        for (t, z) in hb.iter_mut().zip(noisy.band(b).iter()) {
            *t = thickness_for_phase(model, wrap_phase(z.arg()), wl[b])?;
        }
    }
    let ranges: Vec<(usize, usize)> = (0..bands)
        .map(|b| match mode {
            AverageMode::Global => (0, bands),
            AverageMode::Pairwise if bands < 2 => (0, bands),
            AverageMode::Pairwise if b + 1 < bands => (b, b + 2),
            AverageMode::Pairwise => (b - 1, b + 1),
        })
        .collect();
    let global = h.mean_axis(Axis(0)).expect("at least one band");
    let mut out = Array3::<Complex64>::zeros(noisy.data().dim());
    for b in 0..bands {
        let (lo, hi) = ranges[b];
        let avg: Array2<f64> = if (lo, hi) == (0, bands) {
            global.clone()
        } else {
            h.slice(ndarray::s![lo..hi, .., ..]).mean_axis(Axis(0)).expect("nonempty pair")
        };
        let mut ob = out.index_axis_mut(Axis(0), b);
        for ((o, z), t) in ob.iter_mut().zip(noisy.band(b).iter()).zip(avg.iter()) {
            *o = Complex64::from_polar(z.norm(), phase_for_thickness(model, *t, wl[b])?);
        }
    }
    ComplexCube::new(out, wl.to_vec())
}

fn as_complex(img: &Array2<f64>) -> Array2<Complex64> {
    img.mapv(|v| Complex64::new(v, 0.0))
}

/// Filters amplitude and wrapped phase of every band as two independent real
/// images and recombines them as `A·exp(jφ)`.
///
/// Real images run through the four-way variant, whose re/im factor stays the
/// identity, so the filtered images remain exactly real. Unless `cfg.sigma`
/// is set, each image gets its own robust noise estimate. `cfg.sigma` is the
/// standard deviation of the real-valued noise.
pub fn baseline_separate(noisy: &ComplexCube, cfg: &DenoiseConfig) -> Result<ComplexCube> {
    let cfg = DenoiseConfig {
        variant: Variant::ImRe4D,
        ..cfg.clone()
    };
    // The filter expects the total deviation of circular complex noise, whose
    // real part carries only half the variance.
    let filter_real = |img: Array2<f64>| {
        let img = as_complex(&img);
        let sigma = cfg.sigma.unwrap_or_else(|| estimate_sigma(img.view()));
        denoise_image(img.view(), &cfg.with_sigma(sigma * std::f64::consts::SQRT_2))
    };
    let bands = (0..noisy.n_bands())
        .into_par_iter()
        .map(|b| {
            let z = noisy.band(b);
            let amp = filter_real(z.mapv(|v| v.norm()))?;
            let phase = filter_real(z.mapv(|v| v.arg()))?;
            Ok(ndarray::Zip::from(&amp)
                .and(&phase)
                .map_collect(|a, p| Complex64::from_polar(a.re.max(0.0), p.re)))
        })
        .collect::<Result<Vec<_>>>()?;
    ComplexCube::from_bands(&bands, noisy.wavelengths().to_vec())
}

/// The complex block-matching filter applied to each band on its own.
pub fn baseline_slice(noisy: &ComplexCube, cfg: &DenoiseConfig) -> Result<ComplexCube> {
    let bands = (0..noisy.n_bands())
        .into_par_iter()
        .map(|b| denoise_image(noisy.band(b), cfg))
        .collect::<Result<Vec<_>>>()?;
    ComplexCube::from_bands(&bands, noisy.wavelengths().to_vec())
}
