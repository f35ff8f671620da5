use clap::{Args, ValueEnum};
use hscube::cdbm3d::{DenoiseConfig, Stages, Variant};
use hscube::synth::{DispersionModel, ObjectKind};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ObjectArg {
    TwoPeak,
    Compound,
    #[value(alias = "wrapped-peak")]
    Wrapped,
}

impl From<ObjectArg> for ObjectKind {
    fn from(o: ObjectArg) -> Self {
        match o {
            ObjectArg::TwoPeak => ObjectKind::TwoPeak,
            ObjectArg::Compound => ObjectKind::Compound,
            ObjectArg::Wrapped => ObjectKind::WrappedPeak,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    /// Complex patches, 3D groups.
    Complex3d,
    /// Real and imaginary parts as a fourth mode.
    Imre4d,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StagesArg {
    ThresholdOnly,
    ThresholdPlusWiener,
}

/// Block-matching filter settings; unset flags keep the library defaults.
#[derive(Debug, Clone, Args)]
pub struct FilterArgs {
    /// Patch height in pixels [default: 8]
    #[arg(long)]
    pub patch_rows: Option<usize>,
    /// Patch width in pixels [default: 8]
    #[arg(long)]
    pub patch_cols: Option<usize>,
    /// Stride between reference patches [default: 3]
    #[arg(long)]
    pub patch_step: Option<usize>,
    /// Half-size of the block-matching search window [default: 19]
    #[arg(long)]
    pub search_radius: Option<usize>,
    /// Maximum number of patches per group [default: 32]
    #[arg(long)]
    pub group_size: Option<usize>,
    /// Per-pixel squared distance above which candidates are rejected [default: unlimited]
    #[arg(long)]
    pub match_threshold: Option<f64>,
    /// Hard threshold in units of the coefficient noise std [default: 2.7]
    #[arg(long)]
    pub hard_threshold: Option<f64>,
    /// Noise standard deviation [default: estimated from the data]
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Grouping layout [default: imre4d]
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// Filter stages [default: threshold-plus-wiener]
    #[arg(long, value_enum)]
    pub stages: Option<StagesArg>,
}

impl FilterArgs {
    pub fn config(&self) -> DenoiseConfig {
        let mut c = DenoiseConfig::default();
        if let Some(v) = self.patch_rows {
            c.patch_rows = v;
        }
        if let Some(v) = self.patch_cols {
            c.patch_cols = v;
        }
        if let Some(v) = self.patch_step {
            c.patch_step = v;
        }
        if let Some(v) = self.search_radius {
            c.search_radius = v;
        }
        if let Some(v) = self.group_size {
            c.max_group_size = v;
        }
        if self.match_threshold.is_some() {
            c.match_threshold = self.match_threshold;
        }
        if let Some(v) = self.hard_threshold {
            c.hard_threshold = v;
        }
        if self.sigma.is_some() {
            c.sigma = self.sigma;
        }
        if let Some(v) = self.variant {
            c.variant = match v {
                VariantArg::Complex3d => Variant::Complex3D,
                VariantArg::Imre4d => Variant::ImRe4D,
            };
        }
        if let Some(s) = self.stages {
            c.stages = match s {
                StagesArg::ThresholdOnly => Stages::ThresholdOnly,
                StagesArg::ThresholdPlusWiener => Stages::ThresholdPlusWiener,
            };
        }
        c
    }
}

/// `bk7` or comma-separated Cauchy coefficients `A0,B0[,C0]` (λ in µm).
pub fn parse_dispersion(s: &str) -> Result<DispersionModel, String> {
    if s.eq_ignore_ascii_case("bk7") {
        return Ok(DispersionModel::BK7);
    }
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [a0, b0] => Ok(DispersionModel { a0, b0, c0: 0.0 }),
        [a0, b0, c0] => Ok(DispersionModel { a0, b0, c0 }),
        _ => Err("expected `bk7` or A0,B0[,C0]".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dispersion_forms() {
        assert_eq!(parse_dispersion("BK7").unwrap(), DispersionModel::BK7);
        let m = parse_dispersion("1.5, 0.004").unwrap();
        assert_eq!((m.a0, m.b0, m.c0), (1.5, 0.004, 0.0));
        assert!(parse_dispersion("1.5").is_err());
        assert!(parse_dispersion("a,b").is_err());
    }

    #[test]
    fn unset_flags_keep_defaults() {
        use clap::Parser;
        #[derive(Parser)]
        struct T {
            #[command(flatten)]
            f: FilterArgs,
        }
        assert_eq!(T::parse_from(["t"]).f.config(), DenoiseConfig::default());
        let c = T::parse_from(["t", "--group-size", "16", "--variant", "complex3d"]).f.config();
        assert_eq!(c.max_group_size, 16);
        assert_eq!(c.variant, Variant::Complex3D);
    }
}
