//! Collaborative shrinkage of patch groups and weighted aggregation.
//!
//! Reference patches are handled in fixed-size chunks. Within a chunk the
//! groups are filtered in parallel, then their patches are added to the
//! accumulators strictly in reference order, so the floating-point sums do
//! not depend on how many workers ran.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use rayon::prelude::*;

use super::hosvd::{forward, hosvd, inverse, mode_factor, Tensor, TensorScalar};
use super::matching::{block_match, reference_grid, PatchCoord, PatchGroup};
use super::{DenoiseConfig, Variant};
use crate::error::{Error, Result};

const CHUNK: usize = 256;
const WIENER_EPS: f64 = 1e-12;

fn to_imre(t: &Tensor<Complex64>) -> Tensor<f64> {
    let mut dims = t.dims().to_vec();
    dims.push(2);
    let data = t.data().iter().flat_map(|z| [z.re, z.im]).collect();
    Tensor::new(dims, data)
}

fn from_imre(t: Tensor<f64>) -> Tensor<Complex64> {
    let dims = t.dims()[..t.dims().len() - 1].to_vec();
    let data = t.data().chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
    Tensor::new(dims, data)
}

/// Zeroes core coefficients below `thr`, keeping the largest one.
/// Returns the reconstruction and the number of retained coefficients.
pub fn hard_threshold<T: TensorScalar>(group: &Tensor<T>, thr: f64) -> Result<(Tensor<T>, usize)> {
    let mut h = hosvd(group)?;
    let core = h.core.data_mut();
    let keep = core
        .iter()
        .enumerate()
        .fold((0, -1.0), |best, (i, v)| {
            let m = v.modulus();
            if m > best.1 {
                (i, m)
            } else {
                best
            }
        })
        .0;
    let mut retained = 0;
    for (i, v) in core.iter_mut().enumerate() {
        if i != keep && v.modulus() < thr {
            *v = T::zero();
        } else {
            retained += 1;
        }
    }
    Ok((h.reconstruct(), retained))
}

/// Empirical Wiener shrinkage of `noisy` in the HOSVD basis of `pilot`.
/// Returns the reconstruction and `Σ w²`.
pub fn wiener_shrink<T: TensorScalar>(noisy: &Tensor<T>, pilot: &Tensor<T>, var: f64) -> Result<(Tensor<T>, f64)> {
    let factors = (0..pilot.dims().len())
        .map(|m| mode_factor(pilot, m))
        .collect::<Result<Vec<_>>>()?;
    let sp = forward(pilot, &factors);
    let mut sn = forward(noisy, &factors);
    let mut sum_w2 = 0.0;
    for (s, p) in sn.data_mut().iter_mut().zip(sp.data()) {
        let e = p.modulus_squared();
        let w = if var == 0.0 { 1.0 } else { e / (e + var) };
        *s = s.scale(w);
        sum_w2 += w * w;
    }
    Ok((inverse(&sn, &factors), sum_w2))
}

/// Noise standard deviation of a single transform coefficient.
fn coefficient_std(variant: Variant, sigma: f64) -> f64 {
    match variant {
        Variant::Complex3D => sigma,
        Variant::ImRe4D => sigma * std::f64::consts::FRAC_1_SQRT_2,
    }
}

struct Filtered {
    members: Vec<PatchCoord>,
    patches: Tensor<Complex64>,
    weight: f64,
}

fn threshold_group(group: PatchGroup, cfg: &DenoiseConfig, sigma: f64) -> Result<Filtered> {
    let thr = cfg.hard_threshold * coefficient_std(cfg.variant, sigma);
    let (patches, retained) = match cfg.variant {
        Variant::Complex3D => hard_threshold(&group.tensor, thr)?,
        Variant::ImRe4D => {
            let (t, n) = hard_threshold(&to_imre(&group.tensor), thr)?;
            (from_imre(t), n)
        }
    };
    Ok(Filtered {
        members: group.members,
        patches,
        weight: 1.0 / retained.max(1) as f64,
    })
}

fn wiener_group(
    group: PatchGroup,
    noisy: ArrayView2<'_, Complex64>,
    cfg: &DenoiseConfig,
    sigma: f64,
) -> Result<Filtered> {
    let var = coefficient_std(cfg.variant, sigma).powi(2);
    let noisy_t = group.restack(noisy);
    let (patches, sum_w2) = match cfg.variant {
        Variant::Complex3D => wiener_shrink(&noisy_t, &group.tensor, var)?,
        Variant::ImRe4D => {
            let (t, s) = wiener_shrink(&to_imre(&noisy_t), &to_imre(&group.tensor), var)?;
            (from_imre(t), s)
        }
    };
    Ok(Filtered {
        members: group.members,
        patches,
        weight: 1.0 / (var * sum_w2 + WIENER_EPS),
    })
}

fn aggregate<F>(shape: (usize, usize), cfg: &DenoiseConfig, refs: &[PatchCoord], filter: F) -> Result<Array2<Complex64>>
where
    F: Fn(PatchCoord) -> Result<Filtered> + Sync,
{
    let (pr, pc) = (cfg.patch_rows, cfg.patch_cols);
    let mut num = Array2::<Complex64>::zeros(shape);
    let mut den = Array2::<f64>::zeros(shape);
    for chunk in refs.chunks(CHUNK) {
        let done = chunk.par_iter().map(|&r| filter(r)).collect::<Result<Vec<_>>>()?;
        for f in done {
            let k = f.members.len();
            let data = f.patches.data();
            for (m, p) in f.members.iter().enumerate() {
                for i in 0..pr {
                    for j in 0..pc {
                        let v = data[(i * pc + j) * k + m];
                        num[[p.row + i, p.col + j]] += v * f.weight;
                        den[[p.row + i, p.col + j]] += f.weight;
                    }
                }
            }
        }
    }
    if den.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::DecompositionFailed("pixel without aggregated estimate".into()));
    }
    num.zip_mut_with(&den, |n, &d| *n /= d);
    Ok(num)
}

fn check_shape(image: ArrayView2<'_, Complex64>, cfg: &DenoiseConfig) -> Result<()> {
    let (h, w) = image.dim();
    if cfg.patch_rows > h || cfg.patch_cols > w {
        return Err(Error::InvalidConfig(format!(
            "patch {}x{} larger than image {h}x{w}",
            cfg.patch_rows, cfg.patch_cols
        )));
    }
    Ok(())
}

/// First stage: hard thresholding of the group cores.
pub fn threshold_stage(image: ArrayView2<'_, Complex64>, cfg: &DenoiseConfig) -> Result<Array2<Complex64>> {
    cfg.validate()?;
    check_shape(image, cfg)?;
    let sigma = cfg.resolve_sigma(image);
    let refs = reference_grid(image.nrows(), image.ncols(), cfg);
    aggregate(image.dim(), cfg, &refs, |r| threshold_group(block_match(image, r, cfg)?, cfg, sigma))
}

/// Second stage: Wiener shrinkage guided by `pilot`.
pub fn wiener_stage(
    image: ArrayView2<'_, Complex64>,
    pilot: ArrayView2<'_, Complex64>,
    cfg: &DenoiseConfig,
) -> Result<Array2<Complex64>> {
    cfg.validate()?;
    check_shape(image, cfg)?;
    if image.dim() != pilot.dim() {
        return Err(Error::DimensionMismatch(format!(
            "image {:?} vs pilot {:?}",
            image.dim(),
            pilot.dim()
        )));
    }
    let sigma = cfg.resolve_sigma(image);
    let refs = reference_grid(image.nrows(), image.ncols(), cfg);
    aggregate(image.dim(), cfg, &refs, |r| wiener_group(block_match(pilot, r, cfg)?, image, cfg, sigma))
}
