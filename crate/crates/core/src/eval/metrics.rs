use num_complex::Complex64;

use crate::cube::ComplexCube;
use crate::error::{Error, Result};
use crate::synth::wrap_phase;

fn check_shapes(a: &ComplexCube, b: &ComplexCube) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "estimate {:?} vs reference {:?} (rows, cols, bands)",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

fn relative_error<F, G>(est: &ComplexCube, truth: &ComplexCube, band: usize, value: F, diff: G) -> Result<f64>
where
    F: Fn(Complex64) -> f64,
    G: Fn(Complex64, Complex64) -> f64,
{
    check_shapes(est, truth)?;
    if band >= truth.n_bands() {
        return Err(Error::DimensionMismatch(format!("band {band} of {}", truth.n_bands())));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (e, t) in est.band(band).iter().zip(truth.band(band).iter()) {
        num += diff(*e, *t).powi(2);
        den += value(*t).powi(2);
    }
    if den == 0.0 {
        return Err(Error::ZeroReference(band));
    }
    Ok((num / den).sqrt())
}

/// Relative RMS error of the wrapped phase in one band. The phase difference
/// is wrapped to `[−π, π)` before norming.
pub fn rrmse_phase(est: &ComplexCube, truth: &ComplexCube, band: usize) -> Result<f64> {
    relative_error(
        est,
        truth,
        band,
        |t| wrap_phase(t.arg()),
        |e, t| wrap_phase(wrap_phase(e.arg()) - wrap_phase(t.arg())),
    )
}

/// Relative RMS error of the amplitude in one band.
pub fn rrmse_amp(est: &ComplexCube, truth: &ComplexCube, band: usize) -> Result<f64> {
    relative_error(est, truth, band, |t| t.norm(), |e, t| e.norm() - t.norm())
}

pub fn rrmse_phase_bands(est: &ComplexCube, truth: &ComplexCube) -> Result<Vec<f64>> {
    (0..truth.n_bands()).map(|b| rrmse_phase(est, truth, b)).collect()
}

pub fn rrmse_amp_bands(est: &ComplexCube, truth: &ComplexCube) -> Result<Vec<f64>> {
    (0..truth.n_bands()).map(|b| rrmse_amp(est, truth, b)).collect()
}

/// Mean phase RRMSE over all bands.
pub fn mean_rrmse_phase(est: &ComplexCube, truth: &ComplexCube) -> Result<f64> {
    Ok(mean(&rrmse_phase_bands(est, truth)?))
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// `10·log₁₀(‖truth‖² / ‖noisy − truth‖²)`; `+∞` when there is no noise.
pub fn snr_db(noisy: &ComplexCube, truth: &ComplexCube) -> Result<f64> {
    check_shapes(noisy, truth)?;
    let (mut sig, mut err) = (0.0, 0.0);
    for (n, t) in noisy.data().iter().zip(truth.data().iter()) {
        sig += t.norm_sqr();
        err += (n - t).norm_sqr();
    }
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (sig / err).log10())
}
