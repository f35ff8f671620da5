//! Complex-domain block-matching filter for a single 2D complex image.
//!
//! Similar patches are stacked into groups, each group is transformed by its
//! own HOSVD, the core is shrunk and the patches are put back with weights.
//! A hard-threshold pass produces a pilot estimate; an optional second pass
//! regroups on the pilot and applies empirical Wiener shrinkage.

pub mod filter;
pub mod hosvd;
pub mod matching;

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use filter::{threshold_stage, wiener_stage};
pub use hosvd::{hosvd, HosvdFactors, Tensor};
pub use matching::{block_match, reference_grid, PatchCoord, PatchGroup};

/// Median of |N(0,1)|.
const MAD_TO_STD: f64 = 0.674_489_750_196_081_7;

/// How a complex group is transformed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Variant {
    /// `N₁×M₁×K` complex tensor.
    #[serde(rename = "complex3d", alias = "Complex3D")]
    Complex3D,
    /// `N₁×M₁×K×2` real tensor, last mode `[re, im]`.
    #[default]
    #[serde(rename = "imre4d", alias = "ImRe4D")]
    ImRe4D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Stages {
    ThresholdOnly,
    #[default]
    ThresholdPlusWiener,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiseConfig {
    pub patch_rows: usize,
    pub patch_cols: usize,
    pub patch_step: usize,
    pub search_radius: usize,
    pub max_group_size: usize,
    /// Largest admitted per-pixel patch distance; `None` admits all.
    pub match_threshold: Option<f64>,
    /// Multiplies the coefficient noise level in the hard-threshold stage.
    pub hard_threshold: f64,
    /// Noise standard deviation of the image; `None` estimates it.
    pub sigma: Option<f64>,
    pub variant: Variant,
    pub stages: Stages,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self {
            patch_rows: 8,
            patch_cols: 8,
            patch_step: 3,
            search_radius: 19,
            max_group_size: 32,
            match_threshold: None,
            hard_threshold: 2.7,
            sigma: None,
            variant: Variant::ImRe4D,
            stages: Stages::ThresholdPlusWiener,
        }
    }
}

impl DenoiseConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.patch_rows == 0 || self.patch_cols == 0 {
            return bad("patch dimensions must be positive");
        }
        if self.patch_step == 0 {
            return bad("patch_step must be positive");
        }
        if self.max_group_size == 0 {
            return bad("max_group_size must be at least 1");
        }
        if !(self.hard_threshold >= 0.0 && self.hard_threshold.is_finite()) {
            return bad("hard_threshold must be finite and nonnegative");
        }
        if let Some(t) = self.match_threshold {
            if !(t >= 0.0) {
                return bad("match_threshold must be nonnegative");
            }
        }
        if let Some(s) = self.sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return bad("sigma must be finite and nonnegative");
            }
        }
        Ok(())
    }

    pub fn with_sigma(&self, sigma: f64) -> Self {
        Self {
            sigma: Some(sigma),
            ..self.clone()
        }
    }

    pub(crate) fn resolve_sigma(&self, image: ArrayView2<'_, Complex64>) -> f64 {
        self.sigma.unwrap_or_else(|| estimate_sigma(image))
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mid = v.len() / 2;
    let (_, m, _) = v.select_nth_unstable_by(mid, f64::total_cmp);
    let m = *m;
    if v.len() % 2 == 1 {
        m
    } else {
        let lower = v[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + m)
    }
}

/// Robust noise level of a complex image.
///
/// Uses the diagonal second difference `(z₀₀ − z₀₁ − z₁₀ + z₁₁)/2`, which
/// cancels locally linear content and keeps the noise variance unchanged.
/// Real and imaginary parts are estimated separately by MAD and combined as
/// the total complex standard deviation.
pub fn estimate_sigma(image: ArrayView2<'_, Complex64>) -> f64 {
    let (h, w) = image.dim();
    if h < 2 || w < 2 {
        return 0.0;
    }
    let mut re = Vec::with_capacity((h - 1) * (w - 1));
    let mut im = Vec::with_capacity((h - 1) * (w - 1));
    for r in 0..h - 1 {
        for c in 0..w - 1 {
            let d = (image[[r, c]] - image[[r, c + 1]] - image[[r + 1, c]] + image[[r + 1, c + 1]]) * 0.5;
            re.push(d.re.abs());
            im.push(d.im.abs());
        }
    }
    let sr = median(re) / MAD_TO_STD;
    let si = median(im) / MAD_TO_STD;
    (sr * sr + si * si).sqrt()
}

/// Full filter: thresholding, then Wiener shrinkage if configured.
pub fn denoise_image(image: ArrayView2<'_, Complex64>, cfg: &DenoiseConfig) -> Result<Array2<Complex64>> {
    cfg.validate()?;
    let cfg = cfg.with_sigma(cfg.resolve_sigma(image));
    let pilot = threshold_stage(image, &cfg)?;
    match cfg.stages {
        Stages::ThresholdOnly => Ok(pilot),
        Stages::ThresholdPlusWiener => wiener_stage(image, pilot.view(), &cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn noise(seed: u64, h: usize, w: usize, sigma: f64) -> Array2<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = sigma * std::f64::consts::FRAC_1_SQRT_2;
        Array2::from_shape_fn((h, w), |_| {
            Complex64::new(s * rng.sample::<f64, _>(StandardNormal), s * rng.sample::<f64, _>(StandardNormal))
        })
    }

    fn max_abs_diff(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    fn small(variant: Variant, stages: Stages) -> DenoiseConfig {
        DenoiseConfig {
            search_radius: 6,
            max_group_size: 8,
            variant,
            stages,
            ..DenoiseConfig::default()
        }
    }

    #[test]
    fn zero_sigma_is_identity() {
        let img = noise(1, 20, 17, 1.0);
        for v in [Variant::Complex3D, Variant::ImRe4D] {
            let cfg = small(v, Stages::ThresholdPlusWiener).with_sigma(0.0);
            let out = denoise_image(img.view(), &cfg).unwrap();
            assert_eq!(out.dim(), img.dim());
            assert!(max_abs_diff(&out, &img) < 1e-10, "{v:?}");
        }
    }

    #[test]
    fn constant_image_survives_thresholding() {
        let c = Complex64::new(0.3, -1.7);
        let img = Array2::from_elem((16, 16), c);
        for v in [Variant::Complex3D, Variant::ImRe4D] {
            let cfg = small(v, Stages::ThresholdOnly).with_sigma(5.0);
            let out = threshold_stage(img.view(), &cfg).unwrap();
            assert!(out.iter().all(|z| (z - c).norm() < 1e-10), "{v:?}");
        }
    }

    #[test]
    fn zero_pilot_gives_zero() {
        let img = noise(2, 12, 12, 1.0);
        let pilot = Array2::<Complex64>::zeros((12, 12));
        let cfg = small(Variant::ImRe4D, Stages::ThresholdPlusWiener).with_sigma(1.0);
        let out = wiener_stage(img.view(), pilot.view(), &cfg).unwrap();
        assert!(out.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn patch_larger_than_image_is_rejected() {
        let img = noise(3, 6, 6, 1.0);
        assert!(matches!(
            denoise_image(img.view(), &DenoiseConfig::default().with_sigma(1.0)),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn sigma_estimate_on_pure_noise() {
        let img = noise(4, 128, 128, 1.3);
        let s = estimate_sigma(img.view());
        assert!((s - 1.3).abs() < 0.05 * 1.3, "{s}");
    }

    #[test]
    fn config_defaults() {
        let cfg = DenoiseConfig::default();
        assert_eq!((cfg.patch_rows, cfg.patch_cols, cfg.patch_step), (8, 8, 3));
        assert_eq!((cfg.search_radius, cfg.max_group_size), (19, 32));
        assert_eq!(cfg.hard_threshold, 2.7);
        assert_eq!(cfg.variant, Variant::ImRe4D);
        assert_eq!(cfg.stages, Stages::ThresholdPlusWiener);
    }
}
